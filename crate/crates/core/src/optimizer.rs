//! Alternating minimization of `E_f` over shape and director at fixed volume.
//!
//! Each outer iteration relaxes the director on the current shape, estimates
//! the shape gradient over smooth multiplicative modes `rho·(1 + ε·Y_k)` with
//! the director frozen, and line-searches along the steepest-descent
//! combination with the director re-solved at every trial. Every iterate is
//! rescaled to the target volume and kept inside `[rho_min, R₀]`.

use std::f64::consts::PI;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::director::{build_shell_mesh, minimize_director, DirectorField, DirectorFile, SolverOptions};
use crate::energy::{total_energy, AnchoringSpec, EnergyBreakdown};
use crate::format::csv_table;
use crate::geometry::{
    build_icosphere, radial_surface, surface_geometry, IcosphereMesh, RadialSurface, ShapeDescriptor, SphereMode,
    SurfaceFile,
};
use crate::{Error, Result};

/// Largest mode basis: all `l ≤ 4`.
pub const MAX_BASIS: usize = 25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShapeStep {
    /// Number of modes, taken in order of `l² + l + m`.
    pub basis_size: usize,
    /// Relative amplitude of the finite-difference probes.
    pub fd_increment: f64,
    /// First trial step: largest relative change of `rho`.
    pub initial_step: f64,
    /// Backtracking factor.
    pub shrink: f64,
    pub max_backtracks: usize,
    /// Leave out the `l = 1` modes, which are infinitesimal translations.
    pub fix_translation: bool,
}

impl Default for ShapeStep {
    fn default() -> Self {
        ShapeStep { basis_size: MAX_BASIS, fd_increment: 1e-3, initial_step: 0.05, shrink: 0.5, max_backtracks: 20, fix_translation: true }
    }
}

impl ShapeStep {
    /// The first `basis_size` modes, minus `l = 1` when translations are fixed.
    pub fn modes(&self) -> Vec<SphereMode> {
        (0..self.basis_size)
            .map(SphereMode::from_index)
            .filter(|m| !(self.fix_translation && m.l == 1))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OptimizationConfig {
    pub initial_shape: ShapeDescriptor,
    pub anchoring: AnchoringSpec,
    /// Overrides the tension `μ` of the normal and constant-angle variants.
    pub surface_tension: Option<f64>,
    pub target_volume: f64,
    pub level: u32,
    pub layers: usize,
    pub shape_step: ShapeStep,
    pub max_outer_iterations: usize,
    /// Relative change of the total energy counted as stagnation.
    pub tolerance: f64,
    pub seed: u64,
    /// Containment radius; defaults to twice the radius of the target-volume ball.
    pub r0: Option<f64>,
    pub max_sweeps: usize,
}

impl Default for OptimizationConfig {
    fn default() -> Self {
        OptimizationConfig {
            initial_shape: ShapeDescriptor::Ellipsoid { a: 1.0, b: 1.0, c: 1.3 },
            anchoring: AnchoringSpec::DirichletNormal { mu: 1.0 },
            surface_tension: None,
            target_volume: 4.0 * PI / 3.0,
            level: 3,
            layers: 8,
            shape_step: ShapeStep::default(),
            max_outer_iterations: 60,
            tolerance: 1e-5,
            seed: 0,
            r0: None,
            max_sweeps: 5000,
        }
    }
}

impl OptimizationConfig {
    pub fn validate(&self) -> Result<()> {
        let s = &self.shape_step;
        let checks = [
            (self.target_volume > 0.0 && self.target_volume.is_finite(), "target_volume must be positive"),
            (s.fd_increment > 0.0 && s.fd_increment < 0.5, "fd_increment must lie in (0, 0.5)"),
            (self.tolerance > 0.0, "tolerance must be positive"),
            (s.basis_size >= 1 && s.basis_size <= MAX_BASIS, "basis_size must lie in [1, 25]"),
            (s.initial_step > 0.0 && s.shrink > 0.0 && s.shrink < 1.0, "line-search factors out of range"),
            (self.r0.is_none_or(|r| r > self.rho_min()), "r0 must exceed rho_min"),
        ];
        for (ok, msg) in checks {
            if !ok {
                return Err(Error::invalid(msg));
            }
        }
        if self.surface_tension.is_some() && matches!(self.anchoring, AnchoringSpec::SurfaceEnergy(_)) {
            return Err(Error::invalid("surface_tension applies to dirichlet-normal and constant-angle only"));
        }
        self.spec().validate()
    }

    /// Anchoring with the configured tension applied.
    pub fn spec(&self) -> AnchoringSpec {
        match self.surface_tension {
            Some(mu) => self.anchoring.with_surface_tension(mu),
            None => self.anchoring.clone(),
        }
    }

    pub fn rho_min(&self) -> f64 {
        0.1 * self.target_volume.cbrt()
    }

    pub fn r0(&self) -> f64 {
        self.r0.unwrap_or(2.0 * (3.0 * self.target_volume / (4.0 * PI)).cbrt())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub iteration: usize,
    pub total: f64,
    pub bulk: f64,
    pub surface: f64,
    pub volume: f64,
    pub asphericity: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    Converged,
    Budget,
    Stalled,
    DirectorFailure(String),
}

#[derive(Debug, Clone)]
pub struct OptimizationResult {
    pub surface: RadialSurface,
    pub field: DirectorField,
    pub energy: EnergyBreakdown,
    pub history: Vec<HistoryRow>,
    pub termination: Termination,
    /// Iterations whose radii had to be clamped into `[rho_min, R₀]`.
    pub clamped_iterations: Vec<usize>,
}

/// Serialized form of [`OptimizationResult`].
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OptimizationResultFile {
    pub energy: EnergyBreakdown,
    pub termination: Termination,
    pub outer_iterations: usize,
    pub asphericity: f64,
    pub clamped_iterations: Vec<usize>,
    pub history: Vec<HistoryRow>,
    pub surface: SurfaceFile,
    pub field: DirectorFile,
}

impl OptimizationResult {
    pub fn to_file(&self) -> OptimizationResultFile {
        OptimizationResultFile {
            energy: self.energy,
            termination: self.termination.clone(),
            outer_iterations: self.history.last().map_or(0, |r| r.iteration),
            asphericity: self.surface.asphericity(),
            clamped_iterations: self.clamped_iterations.clone(),
            history: self.history.clone(),
            surface: SurfaceFile::from(&self.surface),
            field: DirectorFile::from(&self.field),
        }
    }

    pub fn history_csv(&self) -> String {
        csv_table(
            &["iteration", "total", "bulk", "surface", "volume", "asphericity"],
            self.history.iter().map(|r| vec![r.iteration as f64, r.total, r.bulk, r.surface, r.volume, r.asphericity]),
        )
    }
}

/// Uniform rescaling to the target volume.
pub fn restore_volume(s: &RadialSurface, target_volume: f64) -> Result<RadialSurface> {
    let v = surface_geometry(s)?.volume;
    if !(v > 0.0) {
        return Err(Error::NotStarShaped(format!("enclosed volume {v} is not positive")));
    }
    s.scaled((target_volume / v).cbrt())
}

/// Restores the volume and clamps into `[rho_min, r0]`, repeating a few times; reports whether clamping occurred.
fn constrain(s: &RadialSurface, target_volume: f64, rho_min: f64, r0: f64) -> Result<(RadialSurface, bool)> {
    let mut cur = restore_volume(s, target_volume)?;
    let mut clamped = false;
    for _ in 0..10 {
        if cur.min_radius() >= rho_min && cur.max_radius() <= r0 {
            break;
        }
        clamped = true;
        let rho = cur.rho().iter().map(|r| r.clamp(rho_min, r0)).collect();
        cur = restore_volume(&cur.with_rho(rho)?, target_volume)?;
    }
    Ok((cur, clamped))
}

/// Finite-difference probe settings.
#[derive(Debug, Clone, Copy)]
pub struct FdProbe {
    pub layers: usize,
    pub increment: f64,
    pub target_volume: f64,
}

/// Total energy of `u` transplanted onto `s`; normal anchoring takes the new normals.
fn frozen_energy(s: &RadialSurface, u: &DirectorField, spec: &AnchoringSpec, layers: usize) -> Result<f64> {
    let mesh = build_shell_mesh(s, layers)?;
    let mut field = u.clone();
    if let AnchoringSpec::DirichletNormal { .. } = spec {
        for (k, node) in mesh.boundary_nodes().enumerate() {
            field.values[node] = mesh.geometry().normal[k];
        }
    }
    Ok(total_energy(&mesh, &field, spec)?.total)
}

/// Central differences of the total energy along `rho·(1 + ε·Y_k)` with the director frozen.
///
/// Each probe is rescaled to the target volume, so the constant mode is a
/// pure scaling and has zero derivative. Probes that break star-shapedness or
/// the mesh give `None`.
pub fn shape_gradient_fd(
    s: &RadialSurface,
    u: &DirectorField,
    spec: &AnchoringSpec,
    modes: &[SphereMode],
    probe: &FdProbe,
) -> Vec<Option<f64>> {
    let eps = probe.increment;
    modes
        .par_iter()
        .map(|mode| {
            let y: Vec<f64> = s.base().vertices().iter().map(|d| mode.eval(d)).collect();
            let side = |sign: f64| -> Result<f64> {
                let rho = s.rho().iter().zip(&y).map(|(r, y)| r * (1.0 + sign * eps * y)).collect();
                let probe_surface = restore_volume(&s.with_rho(rho)?, probe.target_volume)?;
                frozen_energy(&probe_surface, u, spec, probe.layers)
            };
            match (side(1.0), side(-1.0)) {
                (Ok(p), Ok(m)) => Some((p - m) / (2.0 * eps)),
                _ => None,
            }
        })
        .collect()
}

struct State {
    surface: RadialSurface,
    field: DirectorField,
    energy: EnergyBreakdown,
}

fn solve(s: RadialSurface, warm: Option<&DirectorField>, spec: &AnchoringSpec, layers: usize, max_sweeps: usize) -> Result<State> {
    let mesh = build_shell_mesh(&s, layers)?;
    let opts = SolverOptions { max_sweeps, initial: warm.cloned(), ..Default::default() };
    let sol = minimize_director(&mesh, &spec.director_anchoring(), &opts)?;
    let energy = total_energy(&mesh, &sol.field, spec)?;
    Ok(State { surface: s, field: sol.field, energy })
}

fn row(iteration: usize, st: &State) -> Result<HistoryRow> {
    Ok(HistoryRow {
        iteration,
        total: st.energy.total,
        bulk: st.energy.bulk,
        surface: st.energy.surface,
        volume: surface_geometry(&st.surface)?.volume,
        asphericity: st.surface.asphericity(),
    })
}

/// Runs the alternating minimization on an icosphere of `cfg.level`.
pub fn optimize(cfg: &OptimizationConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    optimize_on(Arc::new(build_icosphere(cfg.level)?), cfg)
}

/// Same as [`optimize`] on a caller-supplied base mesh (for example a rotated icosphere).
pub fn optimize_on(base: Arc<IcosphereMesh>, cfg: &OptimizationConfig) -> Result<OptimizationResult> {
    cfg.validate()?;
    let spec = cfg.spec();
    let (v0, rho_min, r0) = (cfg.target_volume, cfg.rho_min(), cfg.r0());
    let modes = cfg.shape_step.modes();
    let mode_values: Vec<Vec<f64>> =
        modes.iter().map(|m| base.vertices().iter().map(|d| m.eval(d)).collect()).collect();

    let (start, clamped0) = constrain(&radial_surface(base, &cfg.initial_shape)?, v0, rho_min, r0)?;
    let mut clamped_iterations = if clamped0 { vec![0] } else { vec![] };
    let mut cur = solve(start, None, &spec, cfg.layers, cfg.max_sweeps)?;
    let mut history = vec![row(0, &cur)?];
    let mut step = cfg.shape_step.initial_step;
    let mut increment = cfg.shape_step.fd_increment;
    let mut halved = false;
    let mut quiet = 0;
    let mut termination = Termination::Budget;

    let mut iteration = 0;
    'outer: while iteration < cfg.max_outer_iterations {
        let probe = FdProbe { layers: cfg.layers, increment, target_volume: v0 };
        let grad = shape_gradient_fd(&cur.surface, &cur.field, &spec, &modes, &probe);
        let mut direction = vec![0.0; cur.surface.rho().len()];
        for (g, y) in grad.iter().zip(&mode_values) {
            if let Some(g) = g {
                for (d, y) in direction.iter_mut().zip(y) {
                    *d -= g * y;
                }
            }
        }
        let scale = direction.iter().fold(0.0f64, |m, d| m.max(d.abs()));

        let mut accepted = None;
        if scale > 0.0 {
            let mut alpha = step;
            for _ in 0..cfg.shape_step.max_backtracks {
                let rho = cur.surface.rho().iter().zip(&direction).map(|(r, d)| r * (alpha * d / scale).exp()).collect();
                let trial = cur.surface.with_rho(rho).and_then(|s| constrain(&s, v0, rho_min, r0));
                if let Ok((trial, clamped)) = trial {
                    match solve(trial, Some(&cur.field), &spec, cfg.layers, cfg.max_sweeps) {
                        Ok(next) if next.energy.total < cur.energy.total => {
                            accepted = Some((next, clamped, alpha));
                            break;
                        }
                        Ok(_) => {}
                        Err(Error::ConvergenceFailure { context, iterations, .. }) => {
                            termination = Termination::DirectorFailure(format!("{context} after {iterations} sweeps"));
                            break 'outer;
                        }
                        Err(e @ Error::NumericalFailure(_)) => {
                            termination = Termination::DirectorFailure(e.to_string());
                            break 'outer;
                        }
                        Err(_) => {}
                    }
                }
                alpha *= cfg.shape_step.shrink;
            }
        }

        let Some((next, clamped, alpha)) = accepted else {
            if !halved {
                halved = true;
                increment *= 0.5;
                continue;
            }
            termination = Termination::Stalled;
            break;
        };
        iteration += 1;
        let change = (cur.energy.total - next.energy.total) / cur.energy.total.abs().max(f64::MIN_POSITIVE);
        cur = next;
        if clamped {
            clamped_iterations.push(iteration);
        }
        history.push(row(iteration, &cur)?);
        step = (2.0 * alpha).min(4.0 * cfg.shape_step.initial_step);
        quiet = if change < cfg.tolerance { quiet + 1 } else { 0 };
        if quiet >= 3 {
            termination = Termination::Converged;
            break;
        }
    }

    Ok(OptimizationResult {
        surface: cur.surface,
        field: cur.field,
        energy: cur.energy,
        history,
        termination,
        clamped_iterations,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeRow {
    pub aspect: f64,
    pub bulk: f64,
    pub surface: f64,
    pub total: f64,
}

/// Settings shared by every row of a landscape scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LandscapeOptions {
    pub target_volume: f64,
    pub level: u32,
    pub layers: usize,
    pub max_sweeps: usize,
}

impl Default for LandscapeOptions {
    fn default() -> Self {
        LandscapeOptions { target_volume: 4.0 * PI / 3.0, level: 3, layers: 8, max_sweeps: 5000 }
    }
}

/// Minimized energy of spheroids `(s, s, s·aspect)` rescaled to the target volume.
pub fn energy_landscape_scan(aspects: &[f64], spec: &AnchoringSpec, opts: &LandscapeOptions) -> Result<Vec<LandscapeRow>> {
    spec.validate()?;
    if aspects.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(Error::invalid("aspects must be positive"));
    }
    let base = Arc::new(build_icosphere(opts.level)?);
    aspects
        .par_iter()
        .map(|&aspect| {
            let s = radial_surface(base.clone(), &ShapeDescriptor::unit_volume_spheroid(aspect))?;
            let s = restore_volume(&s, opts.target_volume)?;
            let st = solve(s, None, spec, opts.layers, opts.max_sweeps)?;
            Ok(LandscapeRow { aspect, bulk: st.energy.bulk, surface: st.energy.surface, total: st.energy.total })
        })
        .collect()
}

pub fn landscape_csv(rows: &[LandscapeRow]) -> String {
    csv_table(&["aspect", "bulk", "surface", "total"], rows.iter().map(|r| vec![r.aspect, r.bulk, r.surface, r.total]))
}

/// Row with the smallest total energy.
pub fn landscape_argmin(rows: &[LandscapeRow]) -> Option<&LandscapeRow> {
    rows.iter().min_by(|a, b| a.total.total_cmp(&b.total))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn surface(level: u32, shape: &str) -> RadialSurface {
        radial_surface(Arc::new(build_icosphere(level).unwrap()), &shape.parse().unwrap()).unwrap()
    }

    #[test]
    fn restore_hits_target_volume() {
        let s = surface(3, "ellipsoid:1,1,1.3");
        let r = restore_volume(&s, 2.0).unwrap();
        let v = surface_geometry(&r).unwrap().volume;
        assert!((v - 2.0).abs() < 1e-12);
    }

    #[test]
    fn clamping_is_flagged() {
        let s = surface(2, "ellipsoid:1,1,3");
        let (c, clamped) = constrain(&s, 4.0 * PI / 3.0, 0.1, 1.8).unwrap();
        assert!(clamped);
        assert!(c.max_radius() <= 1.8 + 1e-9);
    }

    #[test]
    fn constant_mode_is_scaling_neutral() {
        let s = surface(2, "sphere:1");
        let v0 = surface_geometry(&s).unwrap().volume;
        let st = solve(s.clone(), None, &AnchoringSpec::DirichletNormal { mu: 1.0 }, 4, 5000).unwrap();
        let probe = FdProbe { layers: 4, increment: 1e-3, target_volume: v0 };
        let g = shape_gradient_fd(&s, &st.field, &AnchoringSpec::DirichletNormal { mu: 1.0 }, &[SphereMode::from_index(0)], &probe);
        assert!(g[0].unwrap().abs() < 1e-8 * st.energy.total, "{g:?}");
    }

    #[test]
    fn config_json_defaults_and_validation() {
        let cfg: OptimizationConfig = serde_json::from_str(r#"{"level": 2, "layers": 4}"#).unwrap();
        assert_eq!(cfg.level, 2);
        assert!(cfg.validate().is_ok());
        let bad = OptimizationConfig { target_volume: -1.0, ..Default::default() };
        assert!(matches!(bad.validate(), Err(Error::InvalidInput(_))));
        assert!(serde_json::from_str::<OptimizationConfig>(r#"{"levle": 2}"#).is_err());
    }
}
