//! Triangulated spheres, radial surfaces and their discrete curvature.

mod icosphere;
mod shape;
mod surface;

use std::fmt::Write as _;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

pub use icosphere::{build_icosphere, IcosphereMesh, MAX_LEVEL};
pub use shape::{radial_surface, ModeAmplitude, RadialSurface, ShapeDescriptor, SphereMode};
pub use surface::{
    geometry_of_positions, min_edge_length, minkowski_deficit, surface_geometry, SurfaceGeometry,
    DEGENERATE_AREA,
};

use crate::format::fmt_sig;
use crate::{Error, Result, Vec3};

/// On-disk form of a radial surface.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SurfaceFile {
    pub level: u32,
    pub vertices: Vec<[f64; 3]>,
    pub triangles: Vec<[usize; 3]>,
    pub rho: Vec<f64>,
}

impl From<&RadialSurface> for SurfaceFile {
    fn from(s: &RadialSurface) -> Self {
        let base = s.base();
        SurfaceFile {
            level: base.level(),
            vertices: base.vertices().iter().map(|v| [v.x, v.y, v.z]).collect(),
            triangles: base.triangles().to_vec(),
            rho: s.rho().to_vec(),
        }
    }
}

impl TryFrom<SurfaceFile> for RadialSurface {
    type Error = Error;

    fn try_from(f: SurfaceFile) -> Result<Self> {
        // Vertices pass through 12-digit text, so re-normalize before the unit-norm check.
        let vertices = f.vertices.iter().map(|v| Vec3::new(v[0], v[1], v[2]).normalize()).collect();
        let base = IcosphereMesh::from_parts(f.level, vertices, f.triangles)?;
        RadialSurface::new(Arc::new(base), f.rho)
    }
}

/// Wavefront OBJ of the embedded surface (`v` and `f` records only).
pub fn to_obj(s: &RadialSurface) -> String {
    let mut out = String::new();
    for p in s.positions() {
        let _ = writeln!(out, "v {} {} {}", fmt_sig(p.x), fmt_sig(p.y), fmt_sig(p.z));
    }
    for t in s.base().triangles() {
        let _ = writeln!(out, "f {} {} {}", t[0] + 1, t[1] + 1, t[2] + 1);
    }
    out
}
