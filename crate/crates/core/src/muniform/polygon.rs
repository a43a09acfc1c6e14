use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::Point2;
use crate::{Error, Result};

/// Simple polygon with counterclockwise vertices.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PolygonFile", into = "PolygonFile")]
pub struct Polygon2D {
    vertices: Vec<Point2>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct PolygonFile {
    vertices: Vec<[f64; 2]>,
}

impl TryFrom<PolygonFile> for Polygon2D {
    type Error = Error;

    fn try_from(f: PolygonFile) -> Result<Self> {
        Polygon2D::new(f.vertices.iter().map(|p| Point2::new(p[0], p[1])).collect())
    }
}

impl From<Polygon2D> for PolygonFile {
    fn from(p: Polygon2D) -> Self {
        PolygonFile { vertices: p.vertices.iter().map(|v| [v.x, v.y]).collect() }
    }
}

fn cross(a: Point2, b: Point2) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Whether closed segments `ab` and `cd` share a point.
fn segments_touch(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let d1 = cross(b - a, c - a);
    let d2 = cross(b - a, d - a);
    let d3 = cross(d - c, a - c);
    let d4 = cross(d - c, b - c);
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0)) && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0)) {
        return true;
    }
    let on = |p: Point2, q: Point2, r: Point2, o: f64| {
        o == 0.0 && r.x >= p.x.min(q.x) && r.x <= p.x.max(q.x) && r.y >= p.y.min(q.y) && r.y <= p.y.max(q.y)
    };
    on(a, b, c, d1) || on(a, b, d, d2) || on(c, d, a, d3) || on(c, d, b, d4)
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let ab = b - a;
    let t = ((p - a).dot(&ab) / ab.norm_squared()).clamp(0.0, 1.0);
    (p - (a + t * ab)).norm()
}

impl Polygon2D {
    /// Validates and stores the ring; clockwise input is reversed.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self> {
        if vertices.len() > 3 && vertices.first() == vertices.last() {
            vertices.pop();
        }
        let n = vertices.len();
        if n < 3 {
            return Err(Error::invalid("polygon needs at least 3 vertices"));
        }
        if vertices.iter().any(|v| !v.x.is_finite() || !v.y.is_finite()) {
            return Err(Error::invalid("polygon has non-finite coordinates"));
        }
        for i in 0..n {
            let (a, b, c) = (vertices[i], vertices[(i + 1) % n], vertices[(i + 2) % n]);
            if a == b {
                return Err(Error::invalid(format!("polygon repeats vertex {i}")));
            }
            // an edge doubling back over its predecessor
            if cross(b - a, c - b) == 0.0 && (b - a).dot(&(c - b)) < 0.0 {
                return Err(Error::invalid(format!("polygon folds back at vertex {}", (i + 1) % n)));
            }
        }
        for i in 0..n {
            for j in i + 1..n {
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                if segments_touch(vertices[i], vertices[(i + 1) % n], vertices[j], vertices[(j + 1) % n]) {
                    return Err(Error::invalid(format!("polygon edges {i} and {j} intersect")));
                }
            }
        }
        let mut p = Polygon2D { vertices };
        let area = p.signed_area();
        if area == 0.0 {
            return Err(Error::invalid("polygon has zero area"));
        }
        if area < 0.0 {
            p.vertices.reverse();
        }
        Ok(p)
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    fn edges(&self) -> impl Iterator<Item = (Point2, Point2)> + '_ {
        let n = self.vertices.len();
        (0..n).map(move |i| (self.vertices[i], self.vertices[(i + 1) % n]))
    }

    pub fn signed_area(&self) -> f64 {
        0.5 * self.edges().map(|(a, b)| cross(a, b)).sum::<f64>()
    }

    pub fn area(&self) -> f64 {
        self.signed_area().abs()
    }

    pub fn perimeter(&self) -> f64 {
        self.edges().map(|(a, b)| (b - a).norm()).sum()
    }

    /// `(min, max)` corners of the bounding box.
    pub fn bbox(&self) -> (Point2, Point2) {
        let mut lo = self.vertices[0];
        let mut hi = lo;
        for v in &self.vertices {
            lo = lo.inf(v);
            hi = hi.sup(v);
        }
        (lo, hi)
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.vertices.iter().enumerate() {
            for b in &self.vertices[i + 1..] {
                d = d.max((a - b).norm());
            }
        }
        d
    }

    /// Even-odd point inclusion.
    pub fn contains(&self, p: Point2) -> bool {
        let mut inside = false;
        for (a, b) in self.edges() {
            if (a.y > p.y) != (b.y > p.y) {
                let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
                if p.x < x {
                    inside = !inside;
                }
            }
        }
        inside
    }

    /// Euclidean distance from `p` to the boundary.
    pub fn boundary_distance(&self, p: Point2) -> f64 {
        self.edges().map(|(a, b)| segment_distance(p, a, b)).fold(f64::INFINITY, f64::min)
    }

    pub fn is_convex(&self) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let (a, b, c) = (self.vertices[i], self.vertices[(i + 1) % n], self.vertices[(i + 2) % n]);
            cross(b - a, c - b) >= 0.0
        })
    }

    /// Regular `n`-gon inscribed in the circle of radius `r` about `center`.
    pub fn regular(n: usize, r: f64, center: Point2) -> Result<Self> {
        Polygon2D::new(
            (0..n)
                .map(|k| {
                    let a = 2.0 * PI * k as f64 / n as f64;
                    center + r * Point2::new(a.cos(), a.sin())
                })
                .collect(),
        )
    }

    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self> {
        Polygon2D::new(vec![Point2::new(x0, y0), Point2::new(x1, y0), Point2::new(x1, y1), Point2::new(x0, y1)])
    }

    pub fn unit_square() -> Self {
        Polygon2D::rectangle(0.0, 0.0, 1.0, 1.0).expect("unit square")
    }

    /// Unit square minus a vertical slit of the given width from `(0.5, 0)` up to height `depth`.
    pub fn slit_square(depth: f64, width: f64) -> Result<Self> {
        if !(depth > 0.0 && depth < 1.0 && width > 0.0 && width < 1.0) {
            return Err(Error::invalid(format!("slit depth {depth} and width {width} must lie in (0, 1)")));
        }
        let (l, r) = (0.5 - width / 2.0, 0.5 + width / 2.0);
        Polygon2D::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(l, 0.0),
            Point2::new(l, depth),
            Point2::new(r, depth),
            Point2::new(r, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
    }

    /// Two unit squares joined by a horizontal neck of width `w` and length 0.5.
    pub fn dumbbell(w: f64) -> Result<Self> {
        if !(w > 0.0 && w < 1.0) {
            return Err(Error::invalid(format!("neck width {w} must lie in (0, 1)")));
        }
        let (lo, hi) = (0.5 - w / 2.0, 0.5 + w / 2.0);
        Polygon2D::new(vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.0, 0.0),
            Point2::new(1.0, lo),
            Point2::new(1.5, lo),
            Point2::new(1.5, 0.0),
            Point2::new(2.5, 0.0),
            Point2::new(2.5, 1.0),
            Point2::new(1.5, 1.0),
            Point2::new(1.5, hi),
            Point2::new(1.0, hi),
            Point2::new(1.0, 1.0),
            Point2::new(0.0, 1.0),
        ])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn square_basics() {
        let s = Polygon2D::unit_square();
        assert_eq!(s.area(), 1.0);
        assert_eq!(s.perimeter(), 4.0);
        assert!(s.contains(Point2::new(0.5, 0.5)));
        assert!(!s.contains(Point2::new(1.5, 0.5)));
        assert!((s.boundary_distance(Point2::new(0.5, 0.4)) - 0.4).abs() < 1e-15);
        assert!(s.is_convex());
    }

    #[test]
    fn clockwise_is_reoriented() {
        let p = Polygon2D::new(vec![Point2::new(0.0, 0.0), Point2::new(0.0, 1.0), Point2::new(1.0, 0.0)]).unwrap();
        assert!(p.signed_area() > 0.0);
    }

    #[test]
    fn regular_perimeter_closed_form() {
        for n in [8, 16, 64] {
            let p = Polygon2D::regular(n, 1.0, Point2::zeros()).unwrap();
            let exact = 2.0 * n as f64 * (PI / n as f64).sin();
            assert!((p.perimeter() - exact).abs() < 1e-12);
        }
    }

    #[test]
    fn two_squares_in_one_ring_rejected() {
        // second square reached by a zero-width bridge that doubles back
        let pts = [(0.0, 0.0), (1.0, 0.0), (2.0, 0.0), (3.0, 0.0), (3.0, 1.0), (2.0, 1.0), (2.0, 0.0), (1.0, 0.0), (1.0, 1.0), (0.0, 1.0)];
        let v = pts.iter().map(|&(x, y)| Point2::new(x, y)).collect();
        assert!(matches!(Polygon2D::new(v), Err(Error::InvalidInput(_))));
        let bowtie = vec![Point2::new(0.0, 0.0), Point2::new(1.0, 1.0), Point2::new(1.0, 0.0), Point2::new(0.0, 1.0)];
        assert!(Polygon2D::new(bowtie).is_err());
    }

    #[test]
    fn json_round_trip() {
        let p = Polygon2D::dumbbell(0.1).unwrap();
        let s = serde_json::to_string(&p).unwrap();
        assert!(s.starts_with("{\"vertices\":[[0.0,0.0]"));
        let q: Polygon2D = serde_json::from_str(&s).unwrap();
        assert_eq!(p, q);
        assert!(serde_json::from_str::<Polygon2D>("{\"vertices\":[[0,0],[1,0]]}").is_err());
    }

    #[test]
    fn slit_and_dumbbell_areas() {
        let s = Polygon2D::slit_square(0.5, 0.02).unwrap();
        assert!((s.area() - (1.0 - 0.01)).abs() < 1e-12);
        let d = Polygon2D::dumbbell(0.1).unwrap();
        assert!((d.area() - 2.05).abs() < 1e-12);
        assert!(!d.is_convex());
    }
}
