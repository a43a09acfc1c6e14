//! The eleven acceptance criteria at their pinned tolerances.
//!
//! One line per criterion goes straight to stderr (not through the test
//! harness capture), followed by indented details.

use std::f64::consts::PI;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use nematic::director::{build_shell_mesh, dirichlet_energy, hedgehog};
use nematic::energy::AnchoringSpec;
use nematic::flows::{run_imcf, FlowOptions};
use nematic::geometry::{build_icosphere, radial_surface, surface_geometry, ShapeDescriptor};
use nematic::muniform::{convergence_experiment, uniformity_report, Point2, Polygon2D, UniformityOptions};
use nematic::optimizer::{energy_landscape_scan, landscape_argmin, optimize, LandscapeOptions, OptimizationConfig};
use nematic::verify::{default_shapes, penalty_violations, run_suite, verify_bulk_vs_total_h, verify_minkowski, VerifyOptions};

/// Criteria that cannot hold as literally stated; each must fail, for the reason printed in its details.
const KNOWN_UNATTAINABLE: &[usize] = &[3];

struct Outcome {
    pass: bool,
    details: Vec<String>,
}

fn say(line: &str) {
    let _ = writeln!(std::io::stderr(), "{line}");
}

fn criterion(k: usize, name: &str, budget: Duration, f: impl FnOnce() -> Outcome) -> bool {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    if elapsed > budget {
        out.pass = false;
        out.details.push(format!("runtime {elapsed:.1?} exceeds {budget:?}"));
    }
    say(&format!("[{}] criterion {k:>2}: {name} ({elapsed:.1?})", if out.pass { "PASS" } else { "FAIL" }));
    for d in &out.details {
        say(&format!("       {d}"));
    }
    out.pass
}

fn c1_hedgehog() -> Outcome {
    let mut errors = Vec::new();
    let mut details = Vec::new();
    for level in [2, 3, 4] {
        let s = radial_surface(Arc::new(build_icosphere(level).unwrap()), &ShapeDescriptor::Sphere { radius: 1.0 }).unwrap();
        let mesh = build_shell_mesh(&s, 16).unwrap();
        let e = dirichlet_energy(&mesh, &hedgehog(&mesh)).unwrap();
        let rel = (e - 8.0 * PI).abs() / (8.0 * PI);
        details.push(format!("level {level}: E = {e:.6}, |E − 8π|/8π = {rel:.4e}"));
        errors.push(rel);
    }
    let monotone = errors.windows(2).all(|w| w[1] < w[0]);
    details.push(format!("monotone decrease: {monotone}"));
    Outcome { pass: errors[2] <= 0.05 && monotone, details }
}

fn c2_sphere_geometry() -> Outcome {
    let s = radial_surface(Arc::new(build_icosphere(4).unwrap()), &ShapeDescriptor::Sphere { radius: 1.0 }).unwrap();
    let g = surface_geometry(&s).unwrap();
    let rel = |x: f64, y: f64| (x - y).abs() / y;
    let (a, v, h) = (rel(g.area, 4.0 * PI), rel(g.volume, 4.0 * PI / 3.0), rel(g.total_mean_curvature, 8.0 * PI));
    Outcome {
        pass: a <= 0.005 && v <= 0.005 && h <= 0.02,
        details: vec![format!("area err {a:.3e} (≤ 5e-3), volume err {v:.3e} (≤ 5e-3), totalH err {h:.3e} (≤ 2e-2)")],
    }
}

fn c3_minkowski() -> Outcome {
    let report = verify_minkowski(&default_shapes(0), &VerifyOptions::default()).unwrap();
    let mut details = Vec::new();
    let mut literal = true;
    let mut flag_reading = true;
    for c in &report.cases {
        let sphere = c.id.starts_with("sphere");
        let deficit = (c.lhs - c.rhs) / c.lhs;
        let near_zero = deficit.abs() <= 0.02;
        if near_zero != sphere {
            literal = false;
        }
        if c.equality != Some(sphere) || (sphere && !near_zero) || (!sphere && deficit <= 0.0) {
            flag_reading = false;
        }
        details.push(format!(
            "{:<22} deficit/totalH = {deficit:+.4e}  within 2%: {near_zero:<5}  equality flag: {:?}",
            c.id,
            c.equality.unwrap_or(false)
        ));
    }
    details.insert(0, format!("deficit ≥ −0.02·totalH on every shape: {}", report.pass));
    details.push(format!("clause 'within 2% of zero only for spheres' (literal): {literal}"));
    details.push(format!(
        "equality flag (asphericity < 1e-3) set exactly on the spheres, spheres within 2%, other deficits > 0: {flag_reading}"
    ));
    if !literal {
        details.push(
            "the smooth-surface deficits of ellipsoid(1,1,1.2), (0.8,1,1.25), (1,1,1.5) and of small perturbations are \
             themselves below 2%·totalH, so no exact implementation can satisfy the literal clause"
                .into(),
        );
    }
    Outcome { pass: report.pass && literal, details }
}

fn c4_imcf() -> Outcome {
    let s = radial_surface(Arc::new(build_icosphere(5).unwrap()), &ShapeDescriptor::Ellipsoid { a: 1.0, b: 1.0, c: 1.5 }).unwrap();
    let trace = run_imcf(&s, 3.0, 1e-3, &FlowOptions::default()).unwrap();
    let rows = &trace.rows;
    let (first, last) = (rows[0], *rows.last().unwrap());
    let worst_area = rows.iter().map(|r| (r.area / first.area / r.t.exp() - 1.0).abs()).fold(0.0, f64::max);
    let rise = trace.max_y_increase();
    let pass = first.y > 1.0 && rise <= 1e-4 && (last.y - 1.0).abs() <= 0.02 && worst_area <= 0.01 && (last.t - 3.0).abs() < 1e-9;
    Outcome {
        pass,
        details: vec![
            format!("level 5, {} rows: y(0) = {:.6}, y(3) = {:.6}, largest step increase {rise:.3e} (≤ 1e-4)", rows.len(), first.y, last.y),
            format!("max |area(t)/area(0)/e^t − 1| = {worst_area:.4e} (≤ 1e-2)"),
        ],
    }
}

fn c5_bulk() -> Outcome {
    let report = verify_bulk_vs_total_h(&default_shapes(0), &VerifyOptions::default()).unwrap();
    let details = report
        .cases
        .iter()
        .map(|c| format!("{:<22} bulk = {:.5}, totalH = {:.5}, ratio {:.4} {}", c.id, c.lhs, c.rhs, c.lhs / c.rhs, if c.pass { "" } else { "FAIL" }))
        .collect();
    Outcome { pass: report.pass && report.cases.len() == 9, details }
}

fn c6_optimizer() -> Outcome {
    let result = optimize(&OptimizationConfig::default()).unwrap();
    let target = 12.0 * PI;
    let rel = (result.energy.total - target).abs() / target;
    let asph = result.surface.asphericity();
    Outcome {
        pass: rel <= 0.03 && asph < 0.05,
        details: vec![format!(
            "{:?} after {} iterations: total {:.5} vs 12π = {target:.5} (rel {rel:.3e} ≤ 3e-2), asphericity {asph:.4e} (< 0.05)",
            result.termination,
            result.history.len() - 1,
            result.energy.total
        )],
    }
}

fn c7_landscape() -> Outcome {
    let aspects = [0.6, 0.7, 0.8, 0.9, 1.0, 1.1, 1.25, 1.5, 1.75, 2.0];
    let mut pass = true;
    let mut details = Vec::new();
    for mu in [0.0, 1.0] {
        let rows = energy_landscape_scan(&aspects, &AnchoringSpec::DirichletNormal { mu }, &LandscapeOptions::default()).unwrap();
        let best = landscape_argmin(&rows).unwrap();
        let k = aspects.iter().position(|&a| a == best.aspect).unwrap();
        let i1 = aspects.iter().position(|&a| a == 1.0).unwrap();
        let ok = k.abs_diff(i1) <= 1;
        pass &= ok;
        details.push(format!("μ = {mu}: argmin aspect {} (total {:.5}), within one grid step of 1: {ok}", best.aspect, best.total));
    }
    Outcome { pass, details }
}

fn c8_uniformity() -> Outcome {
    let convex = [
        ("square", Polygon2D::unit_square()),
        ("triangle", Polygon2D::new(vec![Point2::new(0.0, 0.0), Point2::new(1.0, 0.0), Point2::new(0.5, 0.9)]).unwrap()),
        ("disk", Polygon2D::regular(64, 0.5, Point2::new(0.5, 0.5)).unwrap()),
        ("rectangle", Polygon2D::rectangle(0.0, 0.0, 2.0, 0.5).unwrap()),
        ("hexagon", Polygon2D::regular(6, 0.5, Point2::zeros()).unwrap()),
    ];
    let mut pass = true;
    let mut details = Vec::new();
    for (name, p) in &convex {
        let d = p.diameter();
        let est = |h: f64| uniformity_report(p, &UniformityOptions { h, ..Default::default() }).unwrap();
        let (coarse, fine) = (est(d / 64.0), est(d / 128.0));
        let change = (fine.m_estimate - coarse.m_estimate).abs() / coarse.m_estimate;
        let ok = coarse.m_uniform_at_mmax && fine.m_uniform_at_mmax && change < 0.1;
        pass &= ok;
        details.push(format!(
            "{name:<9} M(h=d/64) = {:.3}, M(h=d/128) = {:.3}, change {change:.3} (< 0.1), all feasible: {}",
            coarse.m_estimate,
            fine.m_estimate,
            coarse.m_uniform_at_mmax && fine.m_uniform_at_mmax
        ));
    }
    let necks: Vec<f64> = [0.2, 0.1, 0.05]
        .iter()
        .map(|&w| {
            let r = uniformity_report(&Polygon2D::dumbbell(w).unwrap(), &UniformityOptions { h: 1.0 / 128.0, ..Default::default() }).unwrap();
            r.m_estimate
        })
        .collect();
    let increasing = necks.windows(2).all(|w| w[1] > w[0]);
    pass &= increasing;
    details.push(format!("dumbbell w = 0.2, 0.1, 0.05: M = {necks:.3?}, strictly increasing: {increasing}"));
    Outcome { pass, details }
}

fn c9_convergence() -> Outcome {
    let h = 1.0 / 64.0;
    let ns = [8, 16, 32, 64];
    let family: Vec<Polygon2D> = ns.iter().map(|&n| Polygon2D::regular(n, 1.0, Point2::zeros()).unwrap()).collect();
    let disk = Polygon2D::regular(2048, 1.0, Point2::zeros()).unwrap();
    let eps = [2.0 * h, 3.0 * h, 4.0 * h, 8.0 * h, 0.25];
    let rep = convergence_experiment(&family, &disk, h, &eps).unwrap();
    let mut pass = true;
    let mut details = Vec::new();
    for row in &rep.epsilons {
        let ok = row.holds[3].iter().all(|&b| b);
        pass &= ok;
        details.push(format!("ε = {:.4}: (i)-(iii) at n = 64: {:?}", row.eps, row.holds[3]));
    }
    let closed = 2.0 * 64.0 * (PI / 64.0).sin();
    let p = rep.members[3].perimeter;
    let ok = (p - closed).abs() < 1e-12 && (p - 2.0 * PI).abs() <= 0.005 * 2.0 * PI;
    pass &= ok;
    details.push(format!("P(64-gon) = {p:.6}, closed form {closed:.6}, 2π = {:.6}, rel gap {:.3e}", 2.0 * PI, (p - 2.0 * PI).abs() / (2.0 * PI)));
    Outcome { pass, details }
}

fn c10_penalty() -> Outcome {
    let mus = [1.0, 10.0, 100.0];
    let v = penalty_violations(&ShapeDescriptor::Sphere { radius: 1.0 }, 0.0, &mus, &VerifyOptions::default()).unwrap();
    let decreasing = v.windows(2).all(|w| w[1] < w[0]);
    Outcome { pass: decreasing, details: vec![format!("∫(u·ν)² at μ_pen = {mus:?}: {v:?}, strictly decreasing: {decreasing}")] }
}

fn c11_all_suites() -> Outcome {
    let reports = run_suite("all", &VerifyOptions::default()).unwrap();
    let mut details = Vec::new();
    for r in &reports {
        details.push(format!("{:<14} {} ({} cases)", r.suite, if r.pass { "pass" } else { "FAIL" }, r.cases.len()));
        for c in r.failures() {
            details.push(format!("  {} lhs={} rhs={} {}", c.id, c.lhs, c.rhs, c.note.as_deref().unwrap_or("")));
        }
    }
    let invariants = reports.iter().find(|r| r.suite == "invariants").unwrap();
    for kind in ["unit-norm", "monotone-descent", "gauss-bonnet", "volume-restore", "determinism"] {
        let n = invariants.cases.iter().filter(|c| c.id.starts_with(kind)).count();
        details.push(format!("  invariants/{kind}: {n} cases"));
    }
    Outcome { pass: reports.iter().all(|r| r.pass), details }
}

#[test]
fn acceptance_criteria() {
    let min = |m: u64| Duration::from_secs(60 * m);
    let results = [
        criterion(1, "hedgehog energy → 8π", Duration::from_secs(30), c1_hedgehog),
        criterion(2, "sphere geometry at level 4", Duration::from_secs(5), c2_sphere_geometry),
        criterion(3, "Minkowski suite", min(1), c3_minkowski),
        criterion(4, "IMCF monotonicity and area growth", min(5), c4_imcf),
        criterion(5, "bulk ≥ totalH on mean-convex shapes", min(10), c5_bulk),
        criterion(6, "optimizer end to end", min(30), c6_optimizer),
        criterion(7, "landscape minimum at the ball", min(30), c7_landscape),
        criterion(8, "M-uniformity properties", min(5), c8_uniformity),
        criterion(9, "n-gon → disk convergence", min(2), c9_convergence),
        criterion(10, "penalty trace limit", min(15), c10_penalty),
        criterion(11, "verify --suite all", min(30), c11_all_suites),
    ];
    let passed = results.iter().filter(|&&p| p).count();
    say(&format!("acceptance: {passed}/{} criteria pass; known unattainable: {KNOWN_UNATTAINABLE:?}", results.len()));
    for (i, &pass) in results.iter().enumerate() {
        let k = i + 1;
        if KNOWN_UNATTAINABLE.contains(&k) {
            assert!(!pass, "criterion {k} is listed as unattainable but passed; update the list");
        } else {
            assert!(pass, "criterion {k} failed");
        }
    }
}
