//! Pass/fail suites for the energy inequalities and their limits.
//!
//! Every case records the two measured sides, the tolerance and a margin
//! that is non-negative exactly when the case passes. A failing or erroring
//! case never stops the rest of its suite.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::director::{build_shell_mesh, hedgehog, minimize_director, tet_gradient, Anchoring, DirectorField, ShellMesh, SolverOptions};
use crate::energy::{angle_violation, boundary_trace, total_energy, AnchoringSpec, SurfaceDensity};
use crate::flows::{mean_convexify, run_imcf, FlowOptions};
use crate::format::to_json_string;
use crate::geometry::{build_icosphere, radial_surface, surface_geometry, IcosphereMesh, RadialSurface, ShapeDescriptor};
use crate::muniform::{uniformity_report, Polygon2D, UniformityOptions};
use crate::optimizer::{optimize, restore_volume, OptimizationConfig};
use crate::{Error, Result, Vec3};

/// Asphericity below which a shape counts as a ball for the Minkowski equality flag.
pub const BALL_ASPHERICITY: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationCase {
    pub id: String,
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub tol: f64,
    pub pass: bool,
    /// Near-equality flag, only reported by the Minkowski suite.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub equality: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl VerificationCase {
    /// Case that passes when `margin ≥ 0`.
    pub fn new(id: impl Into<String>, lhs: f64, rhs: f64, tol: f64, margin: f64) -> Self {
        VerificationCase { id: id.into(), lhs, rhs, margin, tol, pass: margin >= 0.0, equality: None, note: None }
    }

    /// `lhs ≥ (1 − tol)·rhs`.
    pub fn at_least(id: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::new(id, lhs, rhs, tol, lhs - (1.0 - tol) * rhs)
    }

    /// `|lhs − rhs| ≤ tol`.
    pub fn close(id: impl Into<String>, lhs: f64, rhs: f64, tol: f64) -> Self {
        Self::new(id, lhs, rhs, tol, tol - (lhs - rhs).abs())
    }

    /// A case whose measurement failed.
    pub fn failed(id: impl Into<String>, tol: f64, err: &Error) -> Self {
        VerificationCase {
            id: id.into(),
            lhs: f64::NAN,
            rhs: f64::NAN,
            margin: f64::NAN,
            tol,
            pass: false,
            equality: None,
            note: Some(err.to_string()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub cases: Vec<VerificationCase>,
    pub pass: bool,
}

impl VerificationReport {
    /// Sorts the cases by id and sets the overall flag.
    pub fn new(suite: impl Into<String>, mut cases: Vec<VerificationCase>) -> Self {
        cases.sort_by(|a, b| a.id.cmp(&b.id));
        let pass = !cases.is_empty() && cases.iter().all(|c| c.pass);
        VerificationReport { suite: suite.into(), cases, pass }
    }

    pub fn case(&self, id: &str) -> Option<&VerificationCase> {
        self.cases.iter().find(|c| c.id == id)
    }

    pub fn failures(&self) -> impl Iterator<Item = &VerificationCase> {
        self.cases.iter().filter(|c| !c.pass)
    }
}

/// A named shape, optionally pushed to mean convexity before use.
#[derive(Debug, Clone, PartialEq)]
pub struct SuiteShape {
    pub id: String,
    pub shape: ShapeDescriptor,
    pub mean_convexify: bool,
}

impl SuiteShape {
    pub fn plain(shape: ShapeDescriptor) -> Self {
        SuiteShape { id: shape.to_string(), shape, mean_convexify: false }
    }

    /// Builds the surface; convexified shapes end with `H ≥ 0.1` everywhere.
    pub fn surface(&self, base: &Arc<IcosphereMesh>) -> Result<RadialSurface> {
        let s = radial_surface(base.clone(), &self.shape)?;
        if self.mean_convexify {
            Ok(mean_convexify(&s, 0.1, 20_000, &FlowOptions::default())?.0)
        } else {
            Ok(s)
        }
    }
}

/// Spheres of radius 0.5, 1, 2, four ellipsoids and two seeded perturbed spheres.
pub fn default_shapes(seed: u64) -> Vec<SuiteShape> {
    let mut shapes: Vec<SuiteShape> = [0.5, 1.0, 2.0]
        .iter()
        .map(|&radius| SuiteShape::plain(ShapeDescriptor::Sphere { radius }))
        .chain(
            [(1.0, 1.0, 1.2), (1.0, 1.0, 1.5), (1.0, 1.0, 2.0), (0.8, 1.0, 1.25)]
                .iter()
                .map(|&(a, b, c)| SuiteShape::plain(ShapeDescriptor::Ellipsoid { a, b, c })),
        )
        .collect();
    for k in 0..2 {
        let s = seed.wrapping_add(k);
        shapes.push(SuiteShape {
            id: format!("perturbed:seed={s}"),
            shape: ShapeDescriptor::seeded_perturbation(1.0, 0.05, s),
            mean_convexify: true,
        });
    }
    shapes
}

/// Mesh resolutions used by the suites.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyOptions {
    /// Icosphere level for suites that solve for a director.
    pub level: u32,
    pub layers: usize,
    /// Icosphere level for the purely geometric suites.
    pub geometry_level: u32,
    pub seed: u64,
    pub max_sweeps: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions { level: 4, layers: 16, geometry_level: 6, seed: 0, max_sweeps: 20_000 }
    }
}

fn base(level: u32) -> Result<Arc<IcosphereMesh>> {
    Ok(Arc::new(build_icosphere(level)?))
}

/// Minimized total energy of `spec` on `s`.
pub fn minimized_energy(
    s: &RadialSurface,
    spec: &AnchoringSpec,
    layers: usize,
    max_sweeps: usize,
) -> Result<(ShellMesh, DirectorField, crate::energy::EnergyBreakdown)> {
    let mesh = build_shell_mesh(s, layers)?;
    let opts = SolverOptions { max_sweeps, ..Default::default() };
    let sol = minimize_director(&mesh, &spec.director_anchoring(), &opts)?;
    let e = total_energy(&mesh, &sol.field, spec)?;
    Ok((mesh, sol.field, e))
}

/// Minimized normal-anchoring bulk energy against `∫H`, passing at `≥ 0.95·∫H`.
pub fn verify_bulk_vs_total_h(shapes: &[SuiteShape], opts: &VerifyOptions) -> Result<VerificationReport> {
    const TOL: f64 = 0.05;
    let b = base(opts.level)?;
    let spec = AnchoringSpec::DirichletNormal { mu: 0.0 };
    let cases = shapes
        .par_iter()
        .map(|sh| {
            let run = || -> Result<VerificationCase> {
                let s = sh.surface(&b)?;
                let (mesh, _, e) = minimized_energy(&s, &spec, opts.layers, opts.max_sweeps)?;
                let total_h = mesh.geometry().total_mean_curvature;
                if mesh.geometry().min_mean_curvature() < 0.0 {
                    return Err(Error::invalid("shape is not mean convex"));
                }
                Ok(VerificationCase::at_least(&sh.id, e.bulk, total_h, TOL))
            };
            run().unwrap_or_else(|e| VerificationCase::failed(&sh.id, TOL, &e))
        })
        .collect();
    Ok(VerificationReport::new("bulk", cases))
}

/// `∫H ≥ 4√(π·area)` up to `0.02·∫H`; the equality flag marks asphericity below [`BALL_ASPHERICITY`].
///
/// `lhs` is `∫H` and `rhs` is `4√(π·area)`.
pub fn verify_minkowski(shapes: &[SuiteShape], opts: &VerifyOptions) -> Result<VerificationReport> {
    const TOL: f64 = 0.02;
    let b = base(opts.geometry_level)?;
    let cases = shapes
        .par_iter()
        .map(|sh| {
            let run = || -> Result<VerificationCase> {
                let s = sh.surface(&b)?;
                let g = surface_geometry(&s)?;
                let lhs = g.total_mean_curvature;
                let rhs = 4.0 * (PI * g.area).sqrt();
                let deficit = lhs - rhs;
                let mut c = VerificationCase::new(&sh.id, lhs, rhs, TOL, deficit + TOL * lhs);
                c.equality = Some(s.asphericity() < BALL_ASPHERICITY);
                Ok(c.with_note(format!("deficit/totalH = {:.6e}", deficit / lhs)))
            };
            run().unwrap_or_else(|e| VerificationCase::failed(&sh.id, TOL, &e))
        })
        .collect();
    Ok(VerificationReport::new("minkowski", cases))
}

/// `area ≥ (1 − 0.01)·4π(3V/4π)^{2/3}`.
pub fn verify_isoperimetric(shapes: &[SuiteShape], opts: &VerifyOptions) -> Result<VerificationReport> {
    const TOL: f64 = 0.01;
    let b = base(opts.geometry_level)?;
    let cases = shapes
        .par_iter()
        .map(|sh| {
            let run = || -> Result<VerificationCase> {
                let g = surface_geometry(&sh.surface(&b)?)?;
                let rhs = 4.0 * PI * (3.0 * g.volume / (4.0 * PI)).powf(2.0 / 3.0);
                Ok(VerificationCase::at_least(&sh.id, g.area, rhs, TOL))
            };
            run().unwrap_or_else(|e| VerificationCase::failed(&sh.id, TOL, &e))
        })
        .collect();
    Ok(VerificationReport::new("isoperimetric", cases))
}

/// `|G|² − ((tr G)² − tr(G²))`, non-negative whenever `G` has a left null vector.
fn inequality_gap(g: &Matrix3<f64>) -> f64 {
    g.norm_squared() - (g.trace().powi(2) - (g * g).trace())
}

/// Per-tet checks of `|∇u|² ≥ (div u)² − tr((∇u)²)` and of the divergence structure
/// `(div u)² − tr((∇u)²) = div((div u)u − (∇u)u)`.
///
/// The inequality is tested on the gradient of the normalized field `u/|u|` at
/// each tet's barycentre, which is what a unit field sees; the raw
/// interpolant is not unit inside a tet and its violations are counted in
/// the note. The identity holds for any affine field and is checked on the
/// raw gradient.
pub fn verify_divergence_identity(label: &str, mesh: &ShellMesh, u: &DirectorField) -> Result<Vec<VerificationCase>> {
    const INEQ_TOL: f64 = 1e-10;
    const IDENT_TOL: f64 = 1e-9;
    if u.values.len() != mesh.node_count() {
        return Err(Error::invalid(format!("{} values for {} nodes", u.values.len(), mesh.node_count())));
    }
    let mut worst_gap = f64::INFINITY;
    let mut worst_identity: f64 = 0.0;
    let mut raw_violations = 0usize;
    for (t, tet) in mesh.tets().iter().enumerate() {
        let g = tet_gradient(mesh, u, t);
        if inequality_gap(&g) < -INEQ_TOL {
            raw_violations += 1;
        }
        let mean = tet.iter().map(|&i| u.values[i]).sum::<Vec3>() / 4.0;
        let n = mean.norm();
        let unit_gap = if n > 1e-8 {
            let d = mean / n;
            let p = Matrix3::identity() - d * d.transpose();
            inequality_gap(&(p * g / n))
        } else {
            inequality_gap(&g)
        };
        worst_gap = worst_gap.min(unit_gap);

        let grads = mesh.tet_gradients(t);
        let tr = g.trace();
        let div_v: f64 = (0..4)
            .map(|a| {
                let ua = u.values[tet[a]];
                grads[a].dot(&(tr * ua - g * ua))
            })
            .sum();
        let expected = tr * tr - (g * g).trace();
        let scale = 1.0 + g.norm_squared() + g.norm() * grads.iter().map(|v| v.norm()).fold(0.0, f64::max);
        worst_identity = worst_identity.max((div_v - expected).abs() / scale);
    }
    Ok(vec![
        VerificationCase::new(format!("{label}/inequality"), worst_gap, -INEQ_TOL, INEQ_TOL, worst_gap + INEQ_TOL)
            .with_note(format!("raw interpolant violations: {raw_violations} of {} tets", mesh.tets().len())),
        VerificationCase::new(format!("{label}/identity"), worst_identity, 0.0, IDENT_TOL, IDENT_TOL - worst_identity),
    ])
}

/// Seeded field of independent uniformly random unit vectors.
pub fn random_unit_field(n: usize, seed: u64) -> DirectorField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values = (0..n)
        .map(|_| loop {
            let v = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            let r = v.norm();
            if r > 1e-3 && r <= 1.0 {
                break v / r;
            }
        })
        .collect();
    DirectorField { values }
}

/// Divergence checks for the constant, hedgehog and random fields on the unit ball.
pub fn divergence_suite(opts: &VerifyOptions) -> Result<VerificationReport> {
    let s = radial_surface(base(opts.level)?, &ShapeDescriptor::Sphere { radius: 1.0 })?;
    let mesh = build_shell_mesh(&s, opts.layers)?;
    let fields = [
        ("constant", DirectorField::constant(mesh.node_count(), Vec3::z())),
        ("hedgehog", hedgehog(&mesh)),
        ("random", random_unit_field(mesh.node_count(), opts.seed)),
    ];
    let mut cases = Vec::new();
    for (label, u) in &fields {
        cases.extend(verify_divergence_identity(label, &mesh, u)?);
    }
    Ok(VerificationReport::new("divergence", cases))
}

/// Discrete liminf check along `family → limit`: each tail member's minimized
/// energy must reach `0.98` of the limit's. The tail is the second half of the family.
///
/// With `reference`, the tail minimum is also compared to that value.
pub fn lsc_experiment(
    suite: &str,
    family: &[(String, ShapeDescriptor)],
    limit: &ShapeDescriptor,
    spec: &AnchoringSpec,
    reference: Option<f64>,
    opts: &VerifyOptions,
) -> Result<VerificationReport> {
    const TOL: f64 = 0.02;
    if family.is_empty() {
        return Err(Error::invalid("lsc experiment needs a non-empty family"));
    }
    let b = base(opts.level)?;
    let energy = |shape: &ShapeDescriptor| -> Result<f64> {
        let s = radial_surface(b.clone(), shape)?;
        Ok(minimized_energy(&s, spec, opts.layers, opts.max_sweeps)?.2.total)
    };
    let limit_energy = match energy(limit) {
        Ok(e) => e,
        Err(e) => return Ok(VerificationReport::new(suite, vec![VerificationCase::failed("limit", TOL, &e)])),
    };
    let tail = &family[family.len() / 2..];
    let energies: Vec<Result<f64>> = tail.par_iter().map(|(_, shape)| energy(shape)).collect();
    let mut cases = Vec::new();
    let mut tail_min = f64::INFINITY;
    for ((label, _), e) in tail.iter().zip(energies) {
        match e {
            Ok(e) => {
                tail_min = tail_min.min(e);
                cases.push(VerificationCase::at_least(format!("tail/{label}"), e, limit_energy, TOL));
            }
            Err(err) => cases.push(VerificationCase::failed(format!("tail/{label}"), TOL, &err)),
        }
    }
    if let Some(r) = reference {
        cases.push(VerificationCase::at_least("reference", tail_min, r, TOL));
    }
    Ok(VerificationReport::new(suite, cases))
}

/// A family of identical shapes must give identical energies (relative spread ≤ 1e-6).
pub fn constant_family(shape: &ShapeDescriptor, copies: usize, spec: &AnchoringSpec, opts: &VerifyOptions) -> Result<VerificationReport> {
    const TOL: f64 = 1e-6;
    let b = base(opts.level)?;
    let energies: Result<Vec<f64>> = (0..copies)
        .into_par_iter()
        .map(|_| Ok(minimized_energy(&radial_surface(b.clone(), shape)?, spec, opts.layers, opts.max_sweeps)?.2.total))
        .collect();
    let case = match energies {
        Ok(e) => {
            let lo = e.iter().cloned().fold(f64::INFINITY, f64::min);
            let hi = e.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let spread = (hi - lo) / lo.abs().max(f64::MIN_POSITIVE);
            VerificationCase::new("spread", spread, 0.0, TOL, TOL - spread)
        }
        Err(e) => VerificationCase::failed("spread", TOL, &e),
    };
    Ok(VerificationReport::new("lsc-constant", vec![case]))
}

/// Boundary violation `∫(u·ν − c)²` of the penalty minimizer for each `μ_pen`.
pub fn penalty_violations(shape: &ShapeDescriptor, c: f64, mu_pens: &[f64], opts: &VerifyOptions) -> Result<Vec<f64>> {
    let s = radial_surface(base(opts.level)?, shape)?;
    let mesh = build_shell_mesh(&s, opts.layers)?;
    mu_pens
        .par_iter()
        .map(|&mu_pen| {
            let anchoring = Anchoring::Free(SurfaceDensity::Penalty { mu: mu_pen, c });
            let sol = minimize_director(&mesh, &anchoring, &SolverOptions { max_sweeps: opts.max_sweeps, ..Default::default() })?;
            angle_violation(mesh.geometry(), &boundary_trace(&mesh, &sol.field)?, c)
        })
        .collect()
}

/// The penalty violation must strictly decrease along increasing `μ_pen`.
pub fn penalty_trend(shape: &ShapeDescriptor, c: f64, mu_pens: &[f64], opts: &VerifyOptions) -> Result<VerificationReport> {
    if mu_pens.len() < 2 || mu_pens.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("need at least two increasing penalty weights"));
    }
    let cases = match penalty_violations(shape, c, mu_pens, opts) {
        Ok(v) => mu_pens
            .windows(2)
            .zip(v.windows(2))
            .map(|(m, v)| VerificationCase::new(format!("mu_pen={}->{}", m[0], m[1]), v[1], v[0], 0.0, v[0] - v[1]))
            .collect(),
        Err(e) => vec![VerificationCase::failed("penalty", 0.0, &e)],
    };
    Ok(VerificationReport::new("lsc-penalty", cases))
}

fn determinism_case<T: Serialize>(id: &str, run: impl Fn() -> Result<T>) -> VerificationCase {
    let render = || -> Result<String> { Ok(to_json_string(&run()?)?) };
    match (render(), render()) {
        (Ok(a), Ok(b)) => {
            let differing = if a.len() == b.len() {
                a.bytes().zip(b.bytes()).filter(|(x, y)| x != y).count()
            } else {
                a.len().max(b.len())
            };
            VerificationCase::new(id, differing as f64, 0.0, 0.0, -(differing as f64))
        }
        (Err(e), _) | (_, Err(e)) => VerificationCase::failed(id, 0.0, &e),
    }
}

/// Unit norms, monotone director descent, Gauss–Bonnet, volume restoration and byte-identical reruns.
pub fn invariants_suite(opts: &VerifyOptions) -> Result<VerificationReport> {
    let mut cases = Vec::new();
    let shapes = default_shapes(opts.seed);

    // director solves on a mid-size mesh, for every anchoring kind
    let b = base(3)?;
    let ellipsoid = radial_surface(b.clone(), &ShapeDescriptor::Ellipsoid { a: 1.0, b: 1.0, c: 1.5 })?;
    let mesh = build_shell_mesh(&ellipsoid, 8)?;
    let anchorings = [
        ("dirichlet-normal", Anchoring::DirichletNormal),
        ("penalty", Anchoring::Free(SurfaceDensity::Penalty { mu: 10.0, c: 0.5 })),
        ("quadratic", Anchoring::Free(SurfaceDensity::Quadratic { mu: 1.0, w: 0.5 })),
    ];
    for (label, anchoring) in &anchorings {
        let opts = SolverOptions { max_sweeps: opts.max_sweeps, initial: Some(random_unit_field(mesh.node_count(), opts.seed)), ..Default::default() };
        match minimize_director(&mesh, anchoring, &opts) {
            Ok(sol) => {
                let defect = sol.field.max_norm_defect();
                cases.push(VerificationCase::new(format!("unit-norm/{label}"), defect, 0.0, 1e-12, 1e-12 - defect));
                let rise = sol.history.windows(2).map(|w| (w[1] - w[0]) / w[0].abs().max(1.0)).fold(f64::NEG_INFINITY, f64::max);
                cases.push(VerificationCase::new(format!("monotone-descent/{label}"), rise, 0.0, 1e-12, 1e-12 - rise));
            }
            Err(e) => {
                cases.push(VerificationCase::failed(format!("unit-norm/{label}"), 1e-12, &e));
                cases.push(VerificationCase::failed(format!("monotone-descent/{label}"), 1e-12, &e));
            }
        }
    }

    for level in 2..=5 {
        let b = base(level)?;
        for sh in &shapes {
            let id = format!("gauss-bonnet/L{level}/{}", sh.id);
            match sh.surface(&b).and_then(|s| surface_geometry(&s)) {
                Ok(g) => cases.push(VerificationCase::close(id, g.total_gauss_curvature(), 4.0 * PI, 1e-9)),
                Err(e) => cases.push(VerificationCase::failed(id, 1e-9, &e)),
            }
        }
    }

    let v0 = 4.0 * PI / 3.0;
    for sh in &shapes {
        let id = format!("volume-restore/{}", sh.id);
        match sh.surface(&b).and_then(|s| restore_volume(&s, v0)).and_then(|s| surface_geometry(&s)) {
            Ok(g) => cases.push(VerificationCase::close(id, g.volume / v0, 1.0, 1e-9)),
            Err(e) => cases.push(VerificationCase::failed(id, 1e-9, &e)),
        }
    }

    let seed = opts.seed;
    cases.push(determinism_case("determinism/optimize", || {
        let cfg = OptimizationConfig { level: 2, layers: 4, max_outer_iterations: 3, seed, ..Default::default() };
        Ok(optimize(&cfg)?.to_file())
    }));
    cases.push(determinism_case("determinism/imcf", || {
        let s = radial_surface(base(2)?, &ShapeDescriptor::Ellipsoid { a: 1.0, b: 1.0, c: 1.5 })?;
        Ok(run_imcf(&s, 0.1, 1e-2, &FlowOptions::default())?.to_csv())
    }));
    cases.push(determinism_case("determinism/muniform", || {
        let opts = UniformityOptions { samples: 10, h: 1.0 / 32.0, seed, ..Default::default() };
        uniformity_report(&Polygon2D::dumbbell(0.2)?, &opts)
    }));
    cases.push(determinism_case("determinism/divergence", || divergence_suite(&VerifyOptions { level: 2, layers: 4, ..*opts })));

    Ok(VerificationReport::new("invariants", cases))
}

/// Suite names accepted by [`run_suite`].
pub const SUITES: [&str; 7] = ["bulk", "minkowski", "isoperimetric", "divergence", "lsc", "invariants", "all"];

/// Runs one named suite, or every suite for `"all"`.
pub fn run_suite(name: &str, opts: &VerifyOptions) -> Result<Vec<VerificationReport>> {
    let shapes = default_shapes(opts.seed);
    let normal = AnchoringSpec::DirichletNormal { mu: 1.0 };
    let unit = ShapeDescriptor::Sphere { radius: 1.0 };
    Ok(match name {
        "bulk" => vec![verify_bulk_vs_total_h(&shapes, opts)?],
        "minkowski" => vec![verify_minkowski(&shapes, opts)?],
        "isoperimetric" => vec![verify_isoperimetric(&shapes, opts)?],
        "divergence" => vec![divergence_suite(opts)?],
        "lsc" => {
            let family: Vec<(String, ShapeDescriptor)> = [2.0, 4.0, 8.0, 16.0]
                .iter()
                .map(|&h: &f64| (format!("h={h}"), ShapeDescriptor::Ellipsoid { a: 1.0, b: 1.0, c: 1.0 + 1.0 / h }))
                .collect();
            vec![
                lsc_experiment("lsc", &family, &unit, &normal, Some(12.0 * PI), opts)?,
                constant_family(&unit, 3, &normal, opts)?,
                penalty_trend(&unit, 0.0, &[1.0, 10.0, 100.0], opts)?,
            ]
        }
        "invariants" => vec![invariants_suite(opts)?],
        "all" => {
            let mut out = Vec::new();
            for s in &SUITES[..SUITES.len() - 1] {
                out.extend(run_suite(s, opts)?);
            }
            out
        }
        other => return Err(Error::invalid(format!("unknown suite '{other}'; expected one of {SUITES:?}"))),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> VerifyOptions {
        VerifyOptions { level: 2, layers: 4, geometry_level: 4, ..Default::default() }
    }

    #[test]
    fn report_sorts_and_conjoins() {
        let r = VerificationReport::new(
            "x",
            vec![VerificationCase::close("b", 1.0, 1.0, 0.0), VerificationCase::at_least("a", 0.5, 1.0, 0.1)],
        );
        assert_eq!(r.cases[0].id, "a");
        assert!(!r.pass);
        assert_eq!(r.failures().count(), 1);
    }

    #[test]
    fn report_json_shape() {
        let r = VerificationReport::new("s", vec![VerificationCase::close("c", 1.0, 1.0, 1e-9)]);
        let v: serde_json::Value = serde_json::from_str(&to_json_string(&r).unwrap()).unwrap();
        assert_eq!(v["suite"], "s");
        assert_eq!(v["pass"], true);
        for key in ["id", "lhs", "rhs", "margin", "tol", "pass"] {
            assert!(v["cases"][0].get(key).is_some(), "{key}");
        }
    }

    #[test]
    fn minkowski_flags_only_spheres() {
        let r = verify_minkowski(&default_shapes(0), &small()).unwrap();
        assert!(r.pass, "{r:?}");
        for c in &r.cases {
            assert_eq!(c.equality, Some(c.id.starts_with("sphere")), "{}", c.id);
        }
        let big = r.case("ellipsoid:1,1,2").unwrap();
        assert!(big.lhs > big.rhs);
    }

    #[test]
    fn isoperimetric_strict_off_the_ball() {
        let r = verify_isoperimetric(&default_shapes(0), &small()).unwrap();
        assert!(r.pass);
        let e = r.case("ellipsoid:1,1,2").unwrap();
        assert!(e.lhs > 1.05 * e.rhs);
    }

    #[test]
    fn divergence_checks_hold() {
        let r = divergence_suite(&VerifyOptions { level: 2, layers: 6, ..Default::default() }).unwrap();
        assert!(r.pass, "{r:#?}");
        let c = r.case("constant/inequality").unwrap();
        assert_eq!(c.lhs, 0.0);
    }

    #[test]
    fn identity_catches_a_wrong_gradient() {
        // the inequality fails for the identity map's gradient, which has no left null vector
        let g = Matrix3::identity();
        assert!(inequality_gap(&g) < 0.0);
    }

    #[test]
    fn failing_case_is_recorded() {
        let shapes = vec![SuiteShape::plain(ShapeDescriptor::Ellipsoid { a: 1.0, b: 1.0, c: 1.2 })];
        let opts = VerifyOptions { max_sweeps: 1, ..small() };
        let r = verify_bulk_vs_total_h(&shapes, &opts).unwrap();
        assert!(!r.pass);
        assert!(r.cases[0].note.as_deref().unwrap().contains("did not converge"));
    }

    #[test]
    fn unknown_suite_rejected() {
        assert!(matches!(run_suite("nope", &small()), Err(Error::InvalidInput(_))));
    }
}
