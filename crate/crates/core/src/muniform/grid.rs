use std::f64::consts::PI;

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Point2, Polygon2D};
use crate::{Error, Result};

/// Boundary cells beyond this count are subsampled by the density check.
pub const DENSITY_SAMPLE_CAP: usize = 4096;

/// Regular cell grid; cell `(i, j)` has centre `origin + (i + ½, j + ½)·h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridFrame {
    pub origin: [f64; 2],
    pub h: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridFrame {
    /// Frame covering every polygon's bounding box plus `pad` on each side.
    pub fn covering(polygons: &[&Polygon2D], h: f64, pad: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) || !(pad >= 0.0) || polygons.is_empty() {
            return Err(Error::invalid(format!("grid needs h > 0, pad ≥ 0 and a polygon (h={h}, pad={pad})")));
        }
        let (mut lo, mut hi) = polygons[0].bbox();
        for p in &polygons[1..] {
            let (a, b) = p.bbox();
            lo = lo.inf(&a);
            hi = hi.sup(&b);
        }
        let pad = pad + h;
        let nx = ((hi.x - lo.x + 2.0 * pad) / h).ceil() as usize;
        let ny = ((hi.y - lo.y + 2.0 * pad) / h).ceil() as usize;
        if nx.saturating_mul(ny) > 1 << 26 {
            return Err(Error::invalid(format!("grid of {nx}×{ny} cells is too large")));
        }
        Ok(GridFrame { origin: [lo.x - pad, lo.y - pad], h, nx, ny })
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.nx + i
    }

    pub fn coords(&self, k: usize) -> (usize, usize) {
        (k % self.nx, k / self.nx)
    }

    pub fn center(&self, k: usize) -> Point2 {
        let (i, j) = self.coords(k);
        Point2::new(self.origin[0] + (i as f64 + 0.5) * self.h, self.origin[1] + (j as f64 + 0.5) * self.h)
    }

    /// Cell containing `p`, if inside the frame.
    pub fn locate(&self, p: Point2) -> Option<usize> {
        let fx = (p.x - self.origin[0]) / self.h;
        let fy = (p.y - self.origin[1]) / self.h;
        if fx < 0.0 || fy < 0.0 || fx >= self.nx as f64 || fy >= self.ny as f64 {
            return None;
        }
        Some(self.index(fx as usize, fy as usize))
    }
}

/// Occupancy bitmap with the clearance of every occupied cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridDomain {
    pub frame: GridFrame,
    pub occupied: Vec<bool>,
    /// Distance from an occupied cell centre to the nearest empty centre, minus `h/2`; 0 outside.
    pub clearance: Vec<f64>,
}

/// Squared distance (in cells²) from every cell to the nearest feature cell.
///
/// Separable exact transform: lower envelope of parabolas per row, then per column.
fn edt_sq(frame: &GridFrame, feature: impl Fn(usize) -> bool) -> Vec<f64> {
    let (nx, ny) = (frame.nx, frame.ny);
    let mut d: Vec<f64> = (0..nx * ny).map(|k| if feature(k) { 0.0 } else { f64::INFINITY }).collect();
    let mut f = Vec::new();
    let mut out = Vec::new();
    for j in 0..ny {
        f.clear();
        f.extend((0..nx).map(|i| d[j * nx + i]));
        lower_envelope(&f, &mut out);
        for i in 0..nx {
            d[j * nx + i] = out[i];
        }
    }
    for i in 0..nx {
        f.clear();
        f.extend((0..ny).map(|j| d[j * nx + i]));
        lower_envelope(&f, &mut out);
        for j in 0..ny {
            d[j * nx + i] = out[j];
        }
    }
    d
}

fn lower_envelope(f: &[f64], out: &mut Vec<f64>) {
    let n = f.len();
    out.clear();
    out.resize(n, f64::INFINITY);
    let mut v = vec![0usize; n];
    let mut z = vec![0.0f64; n + 1];
    let mut k: usize = 0;
    let mut started = false;
    for q in 0..n {
        if f[q].is_infinite() {
            continue;
        }
        if !started {
            v[0] = q;
            z[0] = f64::NEG_INFINITY;
            z[1] = f64::INFINITY;
            started = true;
            continue;
        }
        loop {
            let p = v[k];
            let s = ((f[q] + (q * q) as f64) - (f[p] + (p * p) as f64)) / (2.0 * (q as f64 - p as f64));
            // z[0] = −∞, so k never drops below 0
            if s <= z[k] {
                k -= 1;
                continue;
            }
            k += 1;
            v[k] = q;
            z[k] = s;
            z[k + 1] = f64::INFINITY;
            break;
        }
    }
    if !started {
        return;
    }
    let mut k = 0;
    for (q, o) in out.iter_mut().enumerate() {
        while z[k + 1] < q as f64 {
            k += 1;
        }
        let p = v[k];
        let dq = q as f64 - p as f64;
        *o = dq * dq + f[p];
    }
}

impl GridDomain {
    pub fn from_occupancy(frame: GridFrame, occupied: Vec<bool>) -> Self {
        let h = frame.h;
        let d = edt_sq(&frame, |k| !occupied[k]);
        let clearance = occupied
            .iter()
            .zip(&d)
            .map(|(&o, &d2)| if o { d2.sqrt() * h - 0.5 * h } else { 0.0 })
            .collect();
        GridDomain { frame, occupied, clearance }
    }

    pub fn h(&self) -> f64 {
        self.frame.h
    }

    pub fn count(&self) -> usize {
        self.occupied.iter().filter(|&&o| o).count()
    }

    pub fn area(&self) -> f64 {
        self.count() as f64 * self.h() * self.h()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn contains(&self, p: Point2) -> bool {
        self.frame.locate(p).is_some_and(|k| self.occupied[k])
    }

    /// Clearance of the cell containing `p` (0 outside).
    pub fn clearance_at(&self, p: Point2) -> f64 {
        self.frame.locate(p).map_or(0.0, |k| self.clearance[k])
    }

    /// Occupied cells with an empty 4-neighbour.
    pub fn boundary_cells(&self) -> Vec<usize> {
        let f = &self.frame;
        (0..f.len())
            .filter(|&k| {
                if !self.occupied[k] {
                    return false;
                }
                let (i, j) = f.coords(k);
                let empty = |ii: isize, jj: isize| {
                    ii < 0
                        || jj < 0
                        || ii >= f.nx as isize
                        || jj >= f.ny as isize
                        || !self.occupied[f.index(ii as usize, jj as usize)]
                };
                let (i, j) = (i as isize, j as isize);
                empty(i - 1, j) || empty(i + 1, j) || empty(i, j - 1) || empty(i, j + 1)
            })
            .collect()
    }

    /// Distance from every cell centre to the region, `h/2` inside the boundary; 0 on occupied cells.
    pub fn exterior_distance(&self) -> Vec<f64> {
        let h = self.h();
        let d = edt_sq(&self.frame, |k| self.occupied[k]);
        d.iter()
            .zip(&self.occupied)
            .map(|(&d2, &o)| if o { 0.0 } else { d2.sqrt() * h - 0.5 * h })
            .collect()
    }

    pub fn is_subset_of(&self, other: &GridDomain) -> bool {
        self.occupied.iter().zip(&other.occupied).all(|(&a, &b)| !a || b)
    }
}

/// Rasterizes `p` into `frame` by cell-centre inclusion.
pub fn rasterize_in(p: &Polygon2D, frame: GridFrame) -> GridDomain {
    let occupied = (0..frame.len()).map(|k| p.contains(frame.center(k))).collect();
    GridDomain::from_occupancy(frame, occupied)
}

/// Rasterizes `p` at cell size `h`, padding the frame by a quarter diameter.
pub fn rasterize(p: &Polygon2D, h: f64) -> Result<GridDomain> {
    let diam = p.diameter();
    if !(h > 0.0 && h <= diam / 32.0) {
        return Err(Error::invalid(format!("cell size {h} must lie in (0, diameter/32 = {}]", diam / 32.0)));
    }
    Ok(rasterize_in(p, GridFrame::covering(&[p], h, 0.25 * diam)?))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NeighborhoodMode {
    /// Points at distance at least ε from the complement.
    Inner,
    /// Points within ε of the set.
    Outer,
}

/// Interior or exterior ε-neighbourhood on the same frame.
pub fn neighborhood(g: &GridDomain, eps: f64, mode: NeighborhoodMode) -> Result<GridDomain> {
    if !(eps >= g.h()) {
        return Err(Error::invalid(format!("eps = {eps} must be at least h = {}", g.h())));
    }
    let occupied = match mode {
        NeighborhoodMode::Inner => g.occupied.iter().zip(&g.clearance).map(|(&o, &c)| o && c >= eps).collect(),
        NeighborhoodMode::Outer => {
            g.exterior_distance().iter().zip(&g.occupied).map(|(&d, &o)| o || d <= eps).collect()
        }
    };
    Ok(GridDomain::from_occupancy(g.frame, occupied))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SetDistances {
    pub l1: f64,
    pub hausdorff: f64,
}

/// `L¹` distance (symmetric-difference area) and Hausdorff distance between cell sets.
pub fn set_distances(a: &GridDomain, b: &GridDomain) -> Result<SetDistances> {
    if a.frame != b.frame {
        return Err(Error::invalid("set distances need a shared grid frame"));
    }
    let h = a.h();
    let diff = a.occupied.iter().zip(&b.occupied).filter(|(x, y)| x != y).count();
    let one_way = |from: &GridDomain, to: &GridDomain| -> f64 {
        if from.is_empty() {
            return 0.0;
        }
        if to.is_empty() {
            return f64::INFINITY;
        }
        let d = edt_sq(&to.frame, |k| to.occupied[k]);
        from.occupied.iter().zip(&d).filter(|(&o, _)| o).map(|(_, &d2)| d2).fold(0.0, f64::max).sqrt() * h
    };
    Ok(SetDistances { l1: diff as f64 * h * h, hausdorff: one_way(a, b).max(one_way(b, a)) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub r: f64,
    /// `min_x |B_r(x) ∩ E| / r²` over sampled boundary cells.
    pub min_interior_ratio: f64,
    /// `min_x |B_r(x) ∩ Eᶜ| / r²`.
    pub min_exterior_ratio: f64,
    pub interior_pass: bool,
    pub exterior_pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub c: f64,
    pub samples: usize,
    pub boundary_cells: usize,
    pub rows: Vec<DensityRow>,
    pub pass: bool,
}

/// Cells of the frame (and beyond it, counted as empty) whose centres lie within `r` of cell `k`'s centre.
fn ball_counts(g: &GridDomain, k: usize, r: f64) -> (usize, usize) {
    let f = &g.frame;
    let h = f.h;
    let reach = (r / h).ceil() as isize;
    let (ci, cj) = f.coords(k);
    let (mut inside, mut outside) = (0usize, 0usize);
    for dj in -reach..=reach {
        for di in -reach..=reach {
            if ((di * di + dj * dj) as f64) * h * h > r * r {
                continue;
            }
            let (i, j) = (ci as isize + di, cj as isize + dj);
            let occ = i >= 0
                && j >= 0
                && (i as usize) < f.nx
                && (j as usize) < f.ny
                && g.occupied[f.index(i as usize, j as usize)];
            if occ {
                inside += 1;
            } else {
                outside += 1;
            }
        }
    }
    (inside, outside)
}

/// Lower density ratios of the set and its complement on boundary cells.
pub fn density_check(g: &GridDomain, c: f64, radii: &[f64], seed: u64) -> Result<DensityReport> {
    if !(c > 0.0 && c < PI) {
        return Err(Error::invalid(format!("density constant {c} must lie in (0, π)")));
    }
    let h = g.h();
    if radii.is_empty() || radii.iter().any(|&r| !(r >= h)) {
        return Err(Error::invalid("radii must be nonempty and at least h"));
    }
    let boundary = g.boundary_cells();
    if boundary.is_empty() {
        return Err(Error::invalid("domain has no boundary cells"));
    }
    let picked: Vec<usize> = if boundary.len() <= DENSITY_SAMPLE_CAP {
        boundary.clone()
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut idx = sample(&mut rng, boundary.len(), DENSITY_SAMPLE_CAP).into_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| boundary[i]).collect()
    };
    let mut rows = Vec::with_capacity(radii.len());
    for &r in radii {
        let (mut min_in, mut min_out) = (f64::INFINITY, f64::INFINITY);
        for &k in &picked {
            let (inside, outside) = ball_counts(g, k, r);
            min_in = min_in.min(inside as f64 * h * h / (r * r));
            min_out = min_out.min(outside as f64 * h * h / (r * r));
        }
        rows.push(DensityRow {
            r,
            min_interior_ratio: min_in,
            min_exterior_ratio: min_out,
            interior_pass: min_in > c,
            exterior_pass: min_out > c,
        });
    }
    let pass = rows.iter().all(|r| r.interior_pass && r.exterior_pass);
    Ok(DensityReport { c, samples: picked.len(), boundary_cells: boundary.len(), rows, pass })
}
