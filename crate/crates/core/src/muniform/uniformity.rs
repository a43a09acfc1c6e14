use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::grid::{rasterize, GridDomain};
use super::{Point2, Polygon2D};
use crate::{Error, Result};

/// Allowance for the length excess of 8-connected paths over straight segments.
pub const PATH_LENGTH_ALLOWANCE: f64 = 1.08;
/// Bisection stops once the bracket on `M` is this narrow.
pub const BISECTION_TOL: f64 = 1e-2;

#[derive(Clone, Copy, PartialEq)]
struct Entry {
    dist: f64,
    cell: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        other.dist.total_cmp(&self.dist).then_with(|| other.cell.cmp(&self.cell))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Per-pair search state: the `M` from which each cell becomes admissible.
struct PairSearch<'a> {
    g: &'a GridDomain,
    threshold: Vec<f64>,
    start: usize,
    goal: usize,
    span: f64,
}

impl<'a> PairSearch<'a> {
    fn new(g: &'a GridDomain, x: Point2, y: Point2) -> Result<Self> {
        let start = g.frame.locate(x).filter(|&k| g.occupied[k]);
        let goal = g.frame.locate(y).filter(|&k| g.occupied[k]);
        let (Some(start), Some(goal)) = (start, goal) else {
            return Err(Error::invalid(format!("pair ({x:?}, {y:?}) is not interior to the grid domain")));
        };
        let threshold = (0..g.frame.len())
            .map(|k| {
                if k == start || k == goal {
                    return 0.0;
                }
                if !g.occupied[k] {
                    return f64::INFINITY;
                }
                let p = g.frame.center(k);
                let d = (p - x).norm().min((p - y).norm());
                let c = g.clearance[k];
                if c > 0.0 {
                    d / c
                } else {
                    f64::INFINITY
                }
            })
            .collect();
        Ok(PairSearch { g, threshold, start, goal, span: (x - y).norm() })
    }

    /// Shortest admissible 8-connected path length, or `None` beyond `budget`.
    fn path_length(&self, m: f64, budget: f64) -> Option<f64> {
        let f = &self.g.frame;
        let h = f.h;
        let ok = |i: isize, j: isize| {
            i >= 0
                && j >= 0
                && (i as usize) < f.nx
                && (j as usize) < f.ny
                && self.threshold[f.index(i as usize, j as usize)] <= m
        };
        let mut dist = vec![f64::INFINITY; f.len()];
        let mut heap = BinaryHeap::new();
        dist[self.start] = 0.0;
        heap.push(Entry { dist: 0.0, cell: self.start });
        let diag = h * std::f64::consts::SQRT_2;
        while let Some(Entry { dist: d, cell }) = heap.pop() {
            if cell == self.goal {
                return Some(d);
            }
            if d > dist[cell] || d > budget {
                continue;
            }
            let (i, j) = f.coords(cell);
            let (i, j) = (i as isize, j as isize);
            for (di, dj) in [(-1, 0), (1, 0), (0, -1), (0, 1), (-1, -1), (-1, 1), (1, -1), (1, 1)] {
                let (ni, nj) = (i + di, j + dj);
                if !ok(ni, nj) {
                    continue;
                }
                let step = if di != 0 && dj != 0 {
                    // no corner cutting past an inadmissible cell
                    if !ok(i + di, j) || !ok(i, j + dj) {
                        continue;
                    }
                    diag
                } else {
                    h
                };
                let k = f.index(ni as usize, nj as usize);
                let nd = d + step;
                if nd < dist[k] {
                    dist[k] = nd;
                    heap.push(Entry { dist: nd, cell: k });
                }
            }
        }
        None
    }

    fn feasible(&self, m: f64) -> bool {
        let budget = PATH_LENGTH_ALLOWANCE * m * self.span;
        self.path_length(m, budget).is_some_and(|len| len <= budget)
    }
}

/// Smallest `M ∈ [1, m_max]` (to [`BISECTION_TOL`]) for which `x` and `y` are joined
/// by an admissible grid path of length at most `1.08·M·|x − y|`.
///
/// A cell `p` is admissible when `clearance(p) ≥ min(|p − x|, |p − y|)/M`.
pub fn estimate_uniformity(g: &GridDomain, x: Point2, y: Point2, m_max: f64) -> Result<f64> {
    if !(m_max >= 1.0) {
        return Err(Error::invalid(format!("Mmax = {m_max} must be at least 1")));
    }
    let search = PairSearch::new(g, x, y)?;
    if search.start == search.goal || search.feasible(1.0) {
        return Ok(1.0);
    }
    if !search.feasible(m_max) {
        return Err(Error::Infeasible { m_max });
    }
    let (mut lo, mut hi) = (1.0, m_max);
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if search.feasible(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UniformityOptions {
    pub samples: usize,
    pub h: f64,
    pub m_max: f64,
    pub seed: u64,
    /// Sampled points keep this distance from the boundary; defaults to 2% of the diameter.
    pub margin: Option<f64>,
}

impl Default for UniformityOptions {
    fn default() -> Self {
        UniformityOptions { samples: 100, h: 1.0 / 64.0, m_max: 100.0, seed: 0, margin: None }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairResult {
    pub x: [f64; 2],
    pub y: [f64; 2],
    /// Minimal feasible `M`, or `None` if infeasible at `m_max`.
    pub m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniformityReport {
    /// Maximum of the per-pair minimal `M` over feasible pairs.
    pub m_estimate: f64,
    pub pairs_tested: usize,
    pub infeasible_pairs: usize,
    /// False when some pair needs more than `m_max`.
    pub m_uniform_at_mmax: bool,
    pub worst_pair: Option<PairResult>,
    pub pairs: Vec<PairResult>,
    pub h: f64,
    pub m_max: f64,
    pub seed: u64,
    pub note: String,
}

/// Seeded interior points at least `margin` from the boundary, in continuous coordinates.
fn sample_points(p: &Polygon2D, g: &GridDomain, n: usize, margin: f64, seed: u64) -> Result<Vec<Point2>> {
    let (lo, hi) = p.bbox();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        if attempts > 10_000 * n.max(1) {
            return Err(Error::invalid(format!("could not sample interior points {margin} from the boundary")));
        }
        let q = Point2::new(rng.gen_range(lo.x..hi.x), rng.gen_range(lo.y..hi.y));
        if p.contains(q) && p.boundary_distance(q) >= margin && g.contains(q) {
            out.push(q);
        }
    }
    Ok(out)
}

/// Estimates the uniformity constant of `p` from `samples` seeded pairs.
///
/// This is an estimate, not a certificate: it bounds the constant over the
/// tested pairs on the grid only.
pub fn uniformity_report(p: &Polygon2D, opts: &UniformityOptions) -> Result<UniformityReport> {
    if opts.samples == 0 {
        return Err(Error::invalid("samples must be at least 1"));
    }
    let g = rasterize(p, opts.h)?;
    let margin = opts.margin.unwrap_or(0.02 * p.diameter());
    let pts = sample_points(p, &g, 2 * opts.samples, margin, opts.seed)?;
    let pairs: Vec<(Point2, Point2)> = pts.chunks(2).map(|c| (c[0], c[1])).collect();
    let results: Vec<PairResult> = pairs
        .par_iter()
        .map(|&(x, y)| {
            let m = match estimate_uniformity(&g, x, y, opts.m_max) {
                Ok(m) => Ok(Some(m)),
                Err(Error::Infeasible { .. }) => Ok(None),
                Err(e) => Err(e),
            }?;
            Ok(PairResult { x: [x.x, x.y], y: [y.x, y.y], m })
        })
        .collect::<Result<_>>()?;
    let infeasible = results.iter().filter(|r| r.m.is_none()).count();
    let worst = results
        .iter()
        .filter(|r| r.m.is_some())
        .max_by(|a, b| a.m.unwrap().total_cmp(&b.m.unwrap()))
        .copied();
    Ok(UniformityReport {
        m_estimate: worst.and_then(|w| w.m).unwrap_or(f64::NAN),
        pairs_tested: results.len(),
        infeasible_pairs: infeasible,
        m_uniform_at_mmax: infeasible == 0,
        worst_pair: worst,
        pairs: results,
        h: opts.h,
        m_max: opts.m_max,
        seed: opts.seed,
        note: "sampled-pair grid estimate of the uniformity constant, not a certificate".into(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::muniform::rasterize;

    #[test]
    fn square_corridor() {
        let g = rasterize(&Polygon2D::unit_square(), 1.0 / 64.0).unwrap();
        let m = estimate_uniformity(&g, Point2::new(0.25, 0.5), Point2::new(0.75, 0.5), 100.0).unwrap();
        assert!(m <= 1.6, "{m}");
    }

    #[test]
    fn exterior_points_rejected() {
        let g = rasterize(&Polygon2D::unit_square(), 1.0 / 64.0).unwrap();
        let r = estimate_uniformity(&g, Point2::new(1.2, 0.5), Point2::new(0.5, 0.5), 10.0);
        assert!(matches!(r, Err(Error::InvalidInput(_))));
    }

    #[test]
    fn slit_depth_trend() {
        let (x, y) = (Point2::new(0.4, 0.05), Point2::new(0.6, 0.05));
        let ms: Vec<f64> = [0.5, 0.7, 0.9]
            .iter()
            .map(|&d| {
                let g = rasterize(&Polygon2D::slit_square(d, 0.02).unwrap(), 1.0 / 128.0).unwrap();
                estimate_uniformity(&g, x, y, 100.0).unwrap()
            })
            .collect();
        assert!(ms[0] < ms[1] && ms[1] < ms[2], "{ms:?}");
    }

    #[test]
    fn bisection_brackets_transition() {
        let g = rasterize(&Polygon2D::slit_square(0.7, 0.02).unwrap(), 1.0 / 128.0).unwrap();
        let (x, y) = (Point2::new(0.4, 0.05), Point2::new(0.6, 0.05));
        let m = estimate_uniformity(&g, x, y, 100.0).unwrap();
        let s = PairSearch::new(&g, x, y).unwrap();
        assert!(s.feasible(m));
        assert!(!s.feasible(m - BISECTION_TOL));
        assert!(matches!(estimate_uniformity(&g, x, y, m - 0.5), Err(Error::Infeasible { .. })));
    }

    #[test]
    fn report_is_deterministic() {
        let disk = Polygon2D::regular(64, 1.0, Point2::zeros()).unwrap();
        let opts = UniformityOptions { samples: 20, h: 1.0 / 32.0, seed: 7, ..Default::default() };
        let a = uniformity_report(&disk, &opts).unwrap();
        let b = uniformity_report(&disk, &opts).unwrap();
        assert_eq!(a, b);
        assert!(a.m_uniform_at_mmax && a.m_estimate.is_finite());
    }
}
