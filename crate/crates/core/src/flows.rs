//! Mean curvature flow and inverse mean curvature flow on radial surfaces.
//!
//! Vertices are advected along the discrete normal and the moved mesh is
//! resampled along the original vertex rays, so every iterate is again a
//! radial graph. The IMCF velocity `ν/H` makes the first-order area change
//! exactly `Σ A_i = area`, because `∂area/∂x_i = A_i H_i ν_i` with the same
//! `H_i` and `ν_i`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::format::{csv_table, fmt_sig};
use crate::geometry::{min_edge_length, surface_geometry, RadialSurface, SurfaceGeometry};
use crate::{Error, Result, Vec3};

/// Step controls shared by both flows.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowOptions {
    /// IMCF refuses to run once a vertex has `H` below this.
    pub h_floor: f64,
    /// Fraction of the shortest edge a vertex may travel per step.
    pub cfl: f64,
    /// Apply one neighbour-averaging pass to `H` before moving.
    pub smooth_curvature: bool,
}

impl Default for FlowOptions {
    fn default() -> Self {
        FlowOptions { h_floor: 1e-3, cfl: 0.2, smooth_curvature: true }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FlowRow {
    pub t: f64,
    pub area: f64,
    pub volume: f64,
    pub total_h: f64,
    pub y: f64,
    pub min_h: f64,
}

impl FlowRow {
    fn measure(t: f64, g: &SurfaceGeometry) -> Self {
        FlowRow {
            t,
            area: g.area,
            volume: g.volume,
            total_h: g.total_mean_curvature,
            y: g.total_mean_curvature / (4.0 * (PI * g.area).sqrt()),
            min_h: g.min_mean_curvature(),
        }
    }
}

/// How a trace was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowMetadata {
    pub flow: String,
    pub dt: f64,
    pub h_floor: f64,
    pub cfl: f64,
    pub curvature_smoothing_passes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlowTrace {
    pub metadata: FlowMetadata,
    pub rows: Vec<FlowRow>,
}

impl FlowTrace {
    pub fn to_csv(&self) -> String {
        csv_table(
            &["t", "area", "volume", "totalH", "y", "minH"],
            self.rows.iter().map(|r| vec![r.t, r.area, r.volume, r.total_h, r.y, r.min_h]),
        )
    }

    /// Largest increase of `y` between consecutive rows (negative if strictly decreasing).
    pub fn max_y_increase(&self) -> f64 {
        self.rows.windows(2).map(|w| w[1].y - w[0].y).fold(f64::NEG_INFINITY, f64::max)
    }
}

impl std::fmt::Display for FlowRow {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "t={} area={} volume={} totalH={} y={} minH={}",
            fmt_sig(self.t),
            fmt_sig(self.area),
            fmt_sig(self.volume),
            fmt_sig(self.total_h),
            fmt_sig(self.y),
            fmt_sig(self.min_h)
        )
    }
}

fn speed_curvature(s: &RadialSurface, g: &SurfaceGeometry, opts: &FlowOptions) -> Vec<f64> {
    if !opts.smooth_curvature {
        return g.mean_curvature.clone();
    }
    let h = &g.mean_curvature;
    (0..h.len())
        .map(|i| {
            let nb = s.base().neighbors(i);
            let avg = nb.iter().map(|&j| h[j]).sum::<f64>() / nb.len() as f64;
            0.5 * h[i] + 0.5 * avg
        })
        .collect()
}

/// Ray parameter where `d` (from the origin) crosses triangle `(a, b, c)`.
fn ray_hit(d: &Vec3, a: &Vec3, b: &Vec3, c: &Vec3) -> Option<f64> {
    let e1 = b - a;
    let e2 = c - a;
    let p = d.cross(&e2);
    let det = e1.dot(&p);
    if det.abs() < 1e-300 {
        return None;
    }
    let inv = 1.0 / det;
    let s = -a;
    let u = s.dot(&p) * inv;
    let q = s.cross(&e1);
    let v = d.dot(&q) * inv;
    let eps = 1e-10;
    if u < -eps || v < -eps || u + v > 1.0 + eps {
        return None;
    }
    let t = e2.dot(&q) * inv;
    (t > 0.0).then_some(t)
}

/// Resamples the moved mesh along the original vertex rays.
fn reproject(s: &RadialSurface, moved: &[Vec3]) -> Result<RadialSurface> {
    let base = s.base();
    let tris = base.triangles();
    for (t, &[a, b, c]) in tris.iter().enumerate() {
        if moved[a].dot(&moved[b].cross(&moved[c])) <= 0.0 {
            return Err(Error::NotStarShaped(format!("moved triangle {t} faces away from the origin")));
        }
    }
    let hit = |d: &Vec3, t: usize| {
        let [a, b, c] = tris[t];
        ray_hit(d, &moved[a], &moved[b], &moved[c])
    };
    let mut rho = Vec::with_capacity(moved.len());
    for (i, d) in base.vertices().iter().enumerate() {
        let mut found = base.vertex_triangles(i).iter().find_map(|&t| hit(d, t));
        if found.is_none() {
            found = base.neighbors(i).iter().flat_map(|&j| base.vertex_triangles(j)).find_map(|&t| hit(d, t));
        }
        if found.is_none() {
            found = (0..tris.len()).find_map(|t| hit(d, t));
        }
        match found {
            Some(r) => rho.push(r),
            None => return Err(Error::NotStarShaped(format!("ray {i} misses the moved surface"))),
        }
    }
    s.with_rho(rho)
}

/// One explicit mean curvature flow step: `x ← x − dt·H·ν`, then ray resampling.
pub fn mcf_step(s: &RadialSurface, dt: f64, opts: &FlowOptions) -> Result<RadialSurface> {
    let g = surface_geometry(s)?;
    mcf_step_with_geometry(s, &g, dt, opts)
}

fn mcf_step_with_geometry(s: &RadialSurface, g: &SurfaceGeometry, dt: f64, opts: &FlowOptions) -> Result<RadialSurface> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimestep(format!("dt = {dt} must be positive")));
    }
    let h = speed_curvature(s, g, opts);
    let max_h = h.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let edge = min_edge_length(s);
    if dt * max_h > opts.cfl * edge {
        return Err(Error::InvalidTimestep(format!(
            "dt·max|H| = {:.3e} exceeds {} × min edge {:.3e}",
            dt * max_h,
            opts.cfl,
            edge
        )));
    }
    let moved: Vec<Vec3> = (0..h.len()).map(|i| g.position[i] - dt * h[i] * g.normal[i]).collect();
    reproject(s, &moved)
}

/// Runs MCF until every vertex has `H ≥ delta_h`; returns the surface and the step count.
///
/// The step is `min(0.1·e/max|H|, 0.1·e²)` for the current shortest edge `e`,
/// which keeps the explicit Laplacian stable at mesh frequency.
pub fn mean_convexify(s: &RadialSurface, delta_h: f64, budget: usize, opts: &FlowOptions) -> Result<(RadialSurface, usize)> {
    if !(delta_h > 0.0) {
        return Err(Error::invalid(format!("deltaH = {delta_h} must be positive")));
    }
    let mut cur = s.clone();
    for step in 0..=budget {
        let g = surface_geometry(&cur)?;
        if g.min_mean_curvature() >= delta_h {
            return Ok((cur, step));
        }
        if step == budget {
            break;
        }
        let e = min_edge_length(&cur);
        let max_h = g.mean_curvature.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        let dt = (0.1 * e / max_h).min(0.1 * e * e) * opts.cfl / 0.2;
        cur = mcf_step_with_geometry(&cur, &g, dt, opts)?;
    }
    Err(Error::ConvergenceFailure { context: format!("mean convexification to H ≥ {delta_h}"), iterations: budget, last_iterate: None })
}

/// One explicit inverse mean curvature flow step: `x ← x + (dt/H)·ν`.
pub fn imcf_step(s: &RadialSurface, dt: f64, opts: &FlowOptions) -> Result<RadialSurface> {
    let g = surface_geometry(s)?;
    imcf_step_with_geometry(s, &g, dt, opts)
}

fn imcf_step_with_geometry(s: &RadialSurface, g: &SurfaceGeometry, dt: f64, opts: &FlowOptions) -> Result<RadialSurface> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidTimestep(format!("dt = {dt} must be positive")));
    }
    let min_h = g.min_mean_curvature();
    if min_h < opts.h_floor {
        return Err(Error::MeanConvexityLost { min_h, floor: opts.h_floor });
    }
    let h = speed_curvature(s, g, opts);
    let edge = min_edge_length(s);
    let smoothed_min = h.iter().cloned().fold(f64::INFINITY, f64::min);
    if dt > opts.cfl * smoothed_min.min(min_h) * edge {
        return Err(Error::InvalidTimestep(format!(
            "dt = {dt:.3e} exceeds {} × minH × min edge = {:.3e}",
            opts.cfl,
            opts.cfl * min_h * edge
        )));
    }
    let moved: Vec<Vec3> = (0..h.len()).map(|i| g.position[i] + (dt / h[i]) * g.normal[i]).collect();
    reproject(s, &moved)
}

/// Integrates IMCF to `t_end`, recording a row before the first and after every step.
pub fn run_imcf(s: &RadialSurface, t_end: f64, dt: f64, opts: &FlowOptions) -> Result<FlowTrace> {
    if !(t_end > 0.0 && t_end.is_finite()) {
        return Err(Error::invalid(format!("tEnd = {t_end} must be positive")));
    }
    if !(dt > 0.0 && dt <= t_end) {
        return Err(Error::InvalidTimestep(format!("dt = {dt} must lie in (0, tEnd]")));
    }
    let steps = (t_end / dt).round().max(1.0) as usize;
    let mut cur = s.clone();
    let mut g = surface_geometry(&cur)?;
    if g.min_mean_curvature() < opts.h_floor {
        return Err(Error::MeanConvexityLost { min_h: g.min_mean_curvature(), floor: opts.h_floor });
    }
    let mut rows = Vec::with_capacity(steps + 1);
    rows.push(FlowRow::measure(0.0, &g));
    for k in 1..=steps {
        cur = imcf_step_with_geometry(&cur, &g, dt, opts)?;
        g = surface_geometry(&cur)?;
        rows.push(FlowRow::measure(k as f64 * dt, &g));
    }
    Ok(FlowTrace {
        metadata: FlowMetadata {
            flow: "imcf".into(),
            dt,
            h_floor: opts.h_floor,
            cfl: opts.cfl,
            curvature_smoothing_passes: usize::from(opts.smooth_curvature),
        },
        rows,
    })
}

/// Integrates MCF for a fixed number of steps, recording every row.
pub fn run_mcf(s: &RadialSurface, steps: usize, dt: f64, opts: &FlowOptions) -> Result<(RadialSurface, FlowTrace)> {
    let mut cur = s.clone();
    let mut g = surface_geometry(&cur)?;
    let mut rows = vec![FlowRow::measure(0.0, &g)];
    for k in 1..=steps {
        cur = mcf_step_with_geometry(&cur, &g, dt, opts)?;
        g = surface_geometry(&cur)?;
        rows.push(FlowRow::measure(k as f64 * dt, &g));
    }
    let metadata = FlowMetadata {
        flow: "mcf".into(),
        dt,
        h_floor: opts.h_floor,
        cfl: opts.cfl,
        curvature_smoothing_passes: usize::from(opts.smooth_curvature),
    };
    Ok((cur, FlowTrace { metadata, rows }))
}
