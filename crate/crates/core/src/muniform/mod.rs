//! Planar domain-class checks on rasterized polygons.
//!
//! Domains are simple counterclockwise polygons, rasterized by cell-centre
//! inclusion. Clearances and set distances come from an exact Euclidean
//! distance transform, and uniformity is probed with shortest grid paths.

mod convergence;
mod grid;
mod polygon;
mod uniformity;

pub use convergence::{convergence_experiment, ConvergenceReport, EpsilonRow, MemberRow};
pub use grid::{
    density_check, neighborhood, rasterize, rasterize_in, set_distances, DensityReport, DensityRow, GridDomain,
    GridFrame, NeighborhoodMode, SetDistances,
};
pub use polygon::Polygon2D;
pub use uniformity::{estimate_uniformity, uniformity_report, PairResult, UniformityOptions, UniformityReport};

pub type Point2 = nalgebra::Vector2<f64>;
