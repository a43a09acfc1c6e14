//! Energy minimization for nematic liquid-crystal droplets.
//!
//! A droplet is a strictly star-shaped domain `Ω ⊂ R³` carried as a radial
//! graph over a subdivided icosahedron, filled with a unit director field `u`
//! on a layered tetrahedral mesh. The crate evaluates and minimizes
//!
//! ```text
//! E_f(u, Ω) = ∫_Ω |∇u|² + ∫_∂Ω f(u·ν)
//! ```
//!
//! at fixed volume, runs mean curvature and inverse mean curvature flow on
//! the radial surfaces, and checks the planar domain classes (M-uniform
//! domains, density classes, ε-neighborhoods) on rasterized polygons.
//!
//! Module map:
//! - [`geometry`]: icospheres, radial surfaces, discrete curvature
//! - [`director`]: shell meshes, Dirichlet energy, harmonic-map relaxation
//! - [`energy`]: anchoring energies and the total energy
//! - [`flows`]: MCF and IMCF on radial surfaces
//! - [`optimizer`]: alternating shape/director minimization
//! - [`muniform`]: 2-D domain-class checks
//! - [`verify`]: pass/fail suites for the inequalities

pub mod director;
pub mod energy;
pub mod error;
pub mod flows;
pub mod format;
pub mod geometry;
pub mod muniform;
pub mod optimizer;
pub mod verify;

pub use error::{Error, Result};

/// 3-vector type used throughout.
pub type Vec3 = nalgebra::Vector3<f64>;
