//! Layered tetrahedral meshes of star-shaped domains and unit director fields on them.
//!
//! Nodes sit at radial fractions `k/L` of every surface vertex ray, plus one
//! node at the origin. Each triangular prism between two layers is cut into
//! three tetrahedra using the vertex-index staircase, which makes the cut of
//! every shared quad face agree between neighbouring prisms. The innermost
//! layer is coned to the centre node.

mod solver;

use std::collections::HashMap;
use std::ops::Range;

use serde::{Deserialize, Serialize};

pub use solver::{minimize_director, Anchoring, DirectorSolution, EnergyReport, SolverOptions};

use crate::geometry::{surface_geometry, RadialSurface, SurfaceGeometry};
use crate::{Error, Result, Vec3};

/// Accepted range for the number of radial layers.
pub const LAYER_RANGE: std::ops::RangeInclusive<usize> = 2..=64;

/// Symmetric edge weights `w_ij = −∫ ∇φ_i·∇φ_j` in compressed rows.
///
/// The P1 Dirichlet energy is `Σ_edges w_ij |u_i − u_j|²`.
#[derive(Debug, Clone)]
pub struct EdgeWeights {
    offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl EdgeWeights {
    /// Neighbours of `i` with their weights.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.offsets[i]..self.offsets[i + 1];
        self.cols[r.clone()].iter().copied().zip(self.weights[r].iter().copied())
    }

    pub fn has_negative(&self) -> bool {
        self.weights.iter().any(|w| *w < 0.0)
    }
}

/// Tetrahedral mesh of the region enclosed by a radial surface.
#[derive(Debug, Clone)]
pub struct ShellMesh {
    surface: RadialSurface,
    geometry: SurfaceGeometry,
    layers: usize,
    nodes: Vec<Vec3>,
    tets: Vec<[usize; 4]>,
    tet_volume: Vec<f64>,
    tet_gradients: Vec<[Vec3; 4]>,
    weights: EdgeWeights,
}

impl ShellMesh {
    pub fn surface(&self) -> &RadialSurface {
        &self.surface
    }

    /// Geometry of the outer surface.
    pub fn geometry(&self) -> &SurfaceGeometry {
        &self.geometry
    }

    pub fn layers(&self) -> usize {
        self.layers
    }

    pub fn nodes(&self) -> &[Vec3] {
        &self.nodes
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn tets(&self) -> &[[usize; 4]] {
        &self.tets
    }

    pub fn tet_volumes(&self) -> &[f64] {
        &self.tet_volume
    }

    /// Gradients of the four barycentric hat functions of tet `t`.
    pub fn tet_gradients(&self, t: usize) -> &[Vec3; 4] {
        &self.tet_gradients[t]
    }

    pub fn volume(&self) -> f64 {
        self.tet_volume.iter().sum()
    }

    pub fn weights(&self) -> &EdgeWeights {
        &self.weights
    }

    /// Node index of surface vertex `v` on layer `k ∈ 1..=L`; layer 0 is the centre node.
    pub fn node_index(&self, layer: usize, vertex: usize) -> usize {
        if layer == 0 {
            0
        } else {
            1 + (layer - 1) * self.surface.rho().len() + vertex
        }
    }

    /// Outermost layer, in surface-vertex order.
    pub fn boundary_nodes(&self) -> Range<usize> {
        let v = self.surface.rho().len();
        1 + (self.layers - 1) * v..1 + self.layers * v
    }

    pub fn is_boundary(&self, node: usize) -> bool {
        self.boundary_nodes().contains(&node)
    }

    pub(crate) fn check_field(&self, u: &DirectorField) -> Result<()> {
        if u.values.len() != self.nodes.len() {
            return Err(Error::invalid(format!(
                "field has {} values for {} nodes",
                u.values.len(),
                self.nodes.len()
            )));
        }
        Ok(())
    }
}

/// Layered tetrahedral mesh of the domain bounded by `s`.
pub fn build_shell_mesh(s: &RadialSurface, layers: usize) -> Result<ShellMesh> {
    if !LAYER_RANGE.contains(&layers) {
        return Err(Error::invalid(format!("layers = {layers} outside {LAYER_RANGE:?}")));
    }
    let geometry = surface_geometry(s)?;
    let base = s.base();
    let nv = base.vertex_count();
    let mut nodes = Vec::with_capacity(1 + layers * nv);
    nodes.push(Vec3::zeros());
    for k in 1..=layers {
        let frac = k as f64 / layers as f64;
        nodes.extend((0..nv).map(|v| s.position(v) * frac));
    }
    let node = |k: usize, v: usize| if k == 0 { 0 } else { 1 + (k - 1) * nv + v };

    let mut tets = Vec::with_capacity(base.triangles().len() * (3 * layers - 2));
    for (t, tri) in base.triangles().iter().enumerate() {
        let p = [s.position(tri[0]), s.position(tri[1]), s.position(tri[2])];
        if p[0].dot(&p[1].cross(&p[2])) <= 0.0 {
            return Err(Error::DegenerateMesh(format!("triangle {t} faces the origin")));
        }
        tets.push([0, node(1, tri[0]), node(1, tri[1]), node(1, tri[2])]);
        let mut sorted = *tri;
        sorted.sort_unstable();
        let [a, b, c] = sorted;
        for k in 1..layers {
            let (lo, hi) = (k, k + 1);
            tets.push([node(lo, a), node(lo, b), node(lo, c), node(hi, c)]);
            tets.push([node(lo, a), node(lo, b), node(hi, b), node(hi, c)]);
            tets.push([node(lo, a), node(hi, a), node(hi, b), node(hi, c)]);
        }
    }

    let mut tet_volume = Vec::with_capacity(tets.len());
    let mut tet_gradients = Vec::with_capacity(tets.len());
    let mut pair_weights: HashMap<(usize, usize), f64> = HashMap::with_capacity(tets.len() * 2);
    let scale = s.max_radius().powi(3);
    for (t, tet) in tets.iter_mut().enumerate() {
        let mut vol = signed_volume(&nodes, tet);
        if vol < 0.0 {
            tet.swap(2, 3);
            vol = -vol;
        }
        if vol <= 1e-14 * scale {
            return Err(Error::DegenerateMesh(format!("tet {t} has volume {vol:.3e}")));
        }
        let grads = hat_gradients(&nodes, tet).ok_or_else(|| Error::DegenerateMesh(format!("tet {t} is singular")))?;
        for a in 0..4 {
            for b in (a + 1)..4 {
                let key = (tet[a].min(tet[b]), tet[a].max(tet[b]));
                *pair_weights.entry(key).or_insert(0.0) -= vol * grads[a].dot(&grads[b]);
            }
        }
        tet_volume.push(vol);
        tet_gradients.push(grads);
    }

    // orientation was normalized per tet, so an inverted prism shows up as excess volume
    let total: f64 = tet_volume.iter().sum();
    if (total - geometry.volume).abs() > 1e-9 * geometry.volume.abs() {
        return Err(Error::DegenerateMesh(format!(
            "tet volumes sum to {total} but the surface encloses {}",
            geometry.volume
        )));
    }

    let weights = compress(nodes.len(), pair_weights);
    Ok(ShellMesh {
        surface: s.clone(),
        geometry,
        layers,
        nodes,
        tets,
        tet_volume,
        tet_gradients,
        weights,
    })
}

fn signed_volume(nodes: &[Vec3], t: &[usize; 4]) -> f64 {
    let o = nodes[t[0]];
    (nodes[t[1]] - o).dot(&(nodes[t[2]] - o).cross(&(nodes[t[3]] - o))) / 6.0
}

fn hat_gradients(nodes: &[Vec3], t: &[usize; 4]) -> Option<[Vec3; 4]> {
    let o = nodes[t[0]];
    let e = nalgebra::Matrix3::from_columns(&[nodes[t[1]] - o, nodes[t[2]] - o, nodes[t[3]] - o]);
    let inv = e.try_inverse()?;
    let g1 = inv.row(0).transpose();
    let g2 = inv.row(1).transpose();
    let g3 = inv.row(2).transpose();
    Some([-(g1 + g2 + g3), g1, g2, g3])
}

fn compress(n: usize, pairs: HashMap<(usize, usize), f64>) -> EdgeWeights {
    let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
    for ((i, j), w) in pairs {
        rows[i].push((j, w));
        rows[j].push((i, w));
    }
    let mut offsets = Vec::with_capacity(n + 1);
    let mut cols = Vec::new();
    let mut weights = Vec::new();
    offsets.push(0);
    for mut row in rows {
        // fixed order keeps sweeps bit-reproducible
        row.sort_unstable_by_key(|(j, _)| *j);
        for (j, w) in row {
            cols.push(j);
            weights.push(w);
        }
        offsets.push(cols.len());
    }
    EdgeWeights { offsets, cols, weights }
}

/// Unit vector per mesh node.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DirectorField {
    pub values: Vec<Vec3>,
}

impl DirectorField {
    pub fn constant(n: usize, value: Vec3) -> Self {
        DirectorField { values: vec![value; n] }
    }

    /// Largest deviation of `|u_i|` from 1.
    pub fn max_norm_defect(&self) -> f64 {
        self.values.iter().map(|v| (v.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// On-disk form `{"values": [[x, y, z], ...]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DirectorFile {
    pub values: Vec<[f64; 3]>,
}

impl From<&DirectorField> for DirectorFile {
    fn from(u: &DirectorField) -> Self {
        DirectorFile { values: u.values.iter().map(|v| [v.x, v.y, v.z]).collect() }
    }
}

impl From<DirectorFile> for DirectorField {
    fn from(f: DirectorFile) -> Self {
        DirectorField { values: f.values.iter().map(|v| Vec3::new(v[0], v[1], v[2])).collect() }
    }
}

/// The radial field `x/|x|`; the centre node gets `(0, 0, 1)`.
pub fn hedgehog(mesh: &ShellMesh) -> DirectorField {
    let values = mesh
        .nodes()
        .iter()
        .map(|p| {
            let r = p.norm();
            if r > 0.0 { p / r } else { Vec3::z() }
        })
        .collect();
    DirectorField { values }
}

/// `∫_Ω |∇u|²` for the piecewise-linear interpolant of `u`, summed tet by tet.
///
/// Also valid for non-unit fields.
pub fn dirichlet_energy(mesh: &ShellMesh, u: &DirectorField) -> Result<f64> {
    mesh.check_field(u)?;
    let mut sum = 0.0;
    for t in 0..mesh.tets.len() {
        sum += mesh.tet_volume[t] * tet_gradient(mesh, u, t).norm_squared();
    }
    Ok(sum)
}

/// Constant gradient `G_ab = ∂_b u_a` of the interpolant on tet `t`.
pub fn tet_gradient(mesh: &ShellMesh, u: &DirectorField, t: usize) -> nalgebra::Matrix3<f64> {
    let tet = &mesh.tets[t];
    let g = &mesh.tet_gradients[t];
    // differences against the first vertex make constant fields exact
    let u0 = u.values[tet[0]];
    let mut m = nalgebra::Matrix3::zeros();
    for a in 1..4 {
        m += (u.values[tet[a]] - u0) * g[a].transpose();
    }
    m
}

/// Energy through the edge-weight form `Σ w_ij |u_i − u_j|²`.
pub(crate) fn edge_energy(weights: &EdgeWeights, values: &[Vec3]) -> f64 {
    let mut sum = 0.0;
    for i in 0..values.len() {
        for (j, w) in weights.row(i) {
            if j > i {
                sum += w * (values[i] - values[j]).norm_squared();
            }
        }
    }
    sum
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{build_icosphere, radial_surface};

    fn shell(level: u32, shape: &str, layers: usize) -> ShellMesh {
        let m = Arc::new(build_icosphere(level).unwrap());
        build_shell_mesh(&radial_surface(m, &shape.parse().unwrap()).unwrap(), layers).unwrap()
    }

    #[test]
    fn unit_ball_volume() {
        let m = shell(2, "sphere:1", 4);
        assert!(m.tet_volumes().iter().all(|v| *v > 0.0));
        assert_eq!(m.node_count(), 1 + 4 * 162);
        assert_eq!(m.tets().len(), 320 * (1 + 3 * 3));
        // tets tile the inscribed polyhedron exactly
        assert!((m.volume() - m.geometry().volume).abs() < 1e-12);
        let m3 = shell(3, "sphere:1", 4);
        assert!((m3.volume() - 4.0 * PI / 3.0).abs() < 0.02 * 4.0 * PI / 3.0);
    }

    #[test]
    fn volume_matches_surface_and_refines() {
        let exact = 4.0 * PI / 3.0;
        let m8 = shell(3, "sphere:1", 8);
        let m16 = shell(3, "sphere:1", 16);
        assert!((m8.volume() - m8.geometry().volume).abs() < 1e-9);
        assert!((m16.volume() - exact).abs() <= (m8.volume() - exact).abs() + 1e-12);
        let e = shell(3, "ellipsoid:1,1,2", 8);
        assert!((e.volume() - 8.0 * PI / 3.0).abs() < 0.02 * 8.0 * PI / 3.0);
    }

    #[test]
    fn layer_guard() {
        let m = Arc::new(build_icosphere(1).unwrap());
        let s = radial_surface(m, &"sphere:1".parse().unwrap()).unwrap();
        assert!(build_shell_mesh(&s, 1).is_err());
        assert!(build_shell_mesh(&s, 65).is_err());
    }

    #[test]
    fn hedgehog_values() {
        let m = shell(2, "sphere:1", 4);
        let u = hedgehog(&m);
        assert_eq!(u.values[0], Vec3::z());
        assert!(u.max_norm_defect() < 1e-12);
        for (i, p) in m.nodes().iter().enumerate().skip(1) {
            assert!((u.values[i] - p.normalize()).norm() < 1e-15);
        }
        let g = m.geometry();
        for (k, node) in m.boundary_nodes().enumerate() {
            assert!((u.values[node] - g.normal[k]).norm() < 0.03);
        }
    }

    #[test]
    fn constant_field_has_no_energy() {
        let m = shell(2, "ellipsoid:1,1,2", 4);
        let u = DirectorField::constant(m.node_count(), Vec3::x());
        assert_eq!(dirichlet_energy(&m, &u).unwrap(), 0.0);
    }

    #[test]
    fn affine_field_is_exact() {
        // u(x) = A x + b componentwise has |∇u|² = |A|² everywhere
        let m = shell(2, "ellipsoid:0.8,1,1.25", 4);
        let a = nalgebra::Matrix3::new(1.0, 2.0, -0.5, 0.0, 0.3, 1.0, -1.0, 0.25, 2.0);
        let b = Vec3::new(0.1, -0.2, 0.3);
        let u = DirectorField { values: m.nodes().iter().map(|p| a * p + b).collect() };
        let expected = a.norm_squared() * m.volume();
        assert!((dirichlet_energy(&m, &u).unwrap() - expected).abs() < 1e-10 * expected.max(1.0));
        assert!((edge_energy(m.weights(), &u.values) - expected).abs() < 1e-10 * expected.max(1.0));
    }

    #[test]
    fn edge_form_agrees_with_tet_form() {
        let m = shell(2, "sphere:1", 6);
        let u = hedgehog(&m);
        let a = dirichlet_energy(&m, &u).unwrap();
        let b = edge_energy(m.weights(), &u.values);
        assert!((a - b).abs() < 1e-10 * a);
    }

    #[test]
    fn field_size_mismatch() {
        let m = shell(1, "sphere:1", 2);
        let u = DirectorField::constant(3, Vec3::z());
        assert!(matches!(dirichlet_energy(&m, &u), Err(Error::InvalidInput(_))));
    }
}
