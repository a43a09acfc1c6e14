//! Subdivided icosahedra projected onto the unit sphere.

use std::collections::HashMap;

use crate::{Error, Result, Vec3};

/// Deepest subdivision accepted by [`build_icosphere`].
pub const MAX_LEVEL: u32 = 8;

/// Triangulated unit sphere with outward-oriented faces and cached adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct IcosphereMesh {
    level: u32,
    vertices: Vec<Vec3>,
    triangles: Vec<[usize; 3]>,
    vertex_triangles: Vec<Vec<usize>>,
    neighbors: Vec<Vec<usize>>,
}

impl IcosphereMesh {
    /// Assembles a mesh from raw parts, checking the closed-sphere invariants.
    pub fn from_parts(level: u32, vertices: Vec<Vec3>, triangles: Vec<[usize; 3]>) -> Result<Self> {
        let n = vertices.len();
        for (i, v) in vertices.iter().enumerate() {
            if (v.norm() - 1.0).abs() > 1e-12 {
                return Err(Error::invalid(format!("vertex {i} is not on the unit sphere")));
            }
        }
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(3 * triangles.len());
        for (t, tri) in triangles.iter().enumerate() {
            if tri.iter().any(|&i| i >= n) || tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(Error::invalid(format!("triangle {t} has bad indices")));
            }
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if directed.insert(e, t).is_some() {
                    return Err(Error::invalid(format!("directed edge {e:?} appears twice")));
                }
            }
        }
        for &(a, b) in directed.keys() {
            if !directed.contains_key(&(b, a)) {
                return Err(Error::invalid(format!("edge ({a}, {b}) has no twin; surface not closed")));
            }
        }
        let edges = directed.len() / 2;
        if n as i64 - edges as i64 + triangles.len() as i64 != 2 {
            return Err(Error::invalid("Euler characteristic is not 2"));
        }

        let mut vertex_triangles = vec![Vec::new(); n];
        let mut neighbors = vec![Vec::new(); n];
        for (t, tri) in triangles.iter().enumerate() {
            for k in 0..3 {
                vertex_triangles[tri[k]].push(t);
                let j = tri[(k + 1) % 3];
                neighbors[tri[k]].push(j);
            }
        }
        Ok(IcosphereMesh { level, vertices, triangles, vertex_triangles, neighbors })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    /// Triangles incident to vertex `i`.
    pub fn vertex_triangles(&self, i: usize) -> &[usize] {
        &self.vertex_triangles[i]
    }

    /// One-ring neighbors of vertex `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Number of undirected edges.
    pub fn edge_count(&self) -> usize {
        self.triangles.len() * 3 / 2
    }
}

/// Icosahedron subdivided `level` times, every vertex pushed onto the unit sphere.
///
/// Vertex count is `10·4^level + 2`.
pub fn build_icosphere(level: u32) -> Result<IcosphereMesh> {
    if level > MAX_LEVEL {
        return Err(Error::invalid(format!("icosphere level {level} exceeds {MAX_LEVEL}")));
    }
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vec3> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .iter()
    .map(|p| Vec3::new(p[0], p[1], p[2]).normalize())
    .collect();

    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for tri in triangles.iter_mut() {
        let [a, b, c] = *tri;
        if vertices[a].dot(&vertices[b].cross(&vertices[c])) < 0.0 {
            tri.swap(1, 2);
        }
    }

    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::with_capacity(triangles.len() * 3 / 2);
        let mut next = Vec::with_capacity(triangles.len() * 4);
        let mut midpoint = |i: usize, j: usize, verts: &mut Vec<Vec3>| -> usize {
            let key = (i.min(j), i.max(j));
            *midpoints.entry(key).or_insert_with(|| {
                verts.push(((verts[i] + verts[j]) * 0.5).normalize());
                verts.len() - 1
            })
        };
        for &[a, b, c] in &triangles {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.push([a, ab, ca]);
            next.push([b, bc, ab]);
            next.push([c, ca, bc]);
            next.push([ab, bc, ca]);
        }
        triangles = next;
    }
    for v in vertices.iter_mut() {
        *v = v.normalize();
    }
    IcosphereMesh::from_parts(level, vertices, triangles)
}
