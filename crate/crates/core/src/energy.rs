//! Anchoring energies and the total droplet energy.
//!
//! The surface term is `∫_∂Ω f(u·ν) dA`, evaluated with vertex-lumped
//! quadrature (value at the vertex times its mixed Voronoi area).

use serde::{Deserialize, Serialize};

use crate::director::{dirichlet_energy, Anchoring, DirectorField, ShellMesh};
use crate::geometry::SurfaceGeometry;
use crate::{Error, Result, Vec3};

/// Anchoring density `f` on `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub enum SurfaceDensity {
    /// `μ (1 + w t²)` with `μ > 0`, `−1 < w < 1`.
    Quadratic { mu: f64, w: f64 },
    /// `μ (t − c)²`.
    Penalty { mu: f64, c: f64 },
    /// `max_i (a_i t + b_i)`.
    Envelope(Vec<(f64, f64)>),
}

impl SurfaceDensity {
    pub fn value(&self, t: f64) -> f64 {
        match self {
            SurfaceDensity::Quadratic { mu, w } => mu * (1.0 + w * t * t),
            SurfaceDensity::Penalty { mu, c } => mu * (t - c).powi(2),
            SurfaceDensity::Envelope(lines) => {
                lines.iter().map(|(a, b)| a * t + b).fold(f64::NEG_INFINITY, f64::max)
            }
        }
    }

    /// Derivative (a subgradient for the envelope).
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            SurfaceDensity::Quadratic { mu, w } => 2.0 * mu * w * t,
            SurfaceDensity::Penalty { mu, c } => 2.0 * mu * (t - c),
            SurfaceDensity::Envelope(lines) => {
                let mut best = (f64::NEG_INFINITY, 0.0);
                for (a, b) in lines {
                    let v = a * t + b;
                    if v > best.0 {
                        best = (v, *a);
                    }
                }
                best.1
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            SurfaceDensity::Quadratic { mu, w } => {
                if !(*mu > 0.0 && *w > -1.0 && *w < 1.0) {
                    return Err(Error::invalid(format!("quadratic anchoring needs mu > 0, -1 < w < 1 (mu={mu}, w={w})")));
                }
            }
            SurfaceDensity::Penalty { mu, c } => {
                if !(*mu >= 0.0 && (-1.0..=1.0).contains(c)) {
                    return Err(Error::invalid(format!("penalty needs mu >= 0 and c in [-1, 1] (mu={mu}, c={c})")));
                }
            }
            SurfaceDensity::Envelope(lines) => {
                if lines.is_empty() || lines.iter().any(|(a, b)| !a.is_finite() || !b.is_finite()) {
                    return Err(Error::invalid("envelope must be a nonempty list of finite lines"));
                }
                // a max of lines is piecewise linear; its minimum over [-1, 1] sits at an end or a crossing
                let mut probes = vec![-1.0, 1.0];
                for (i, (a1, b1)) in lines.iter().enumerate() {
                    for (a2, b2) in &lines[i + 1..] {
                        if a1 != a2 {
                            let t = (b2 - b1) / (a1 - a2);
                            if (-1.0..=1.0).contains(&t) {
                                probes.push(t);
                            }
                        }
                    }
                }
                if probes.iter().any(|&t| self.value(t) < -1e-12) {
                    return Err(Error::invalid("envelope is negative somewhere on [-1, 1]"));
                }
            }
        }
        Ok(())
    }
}

/// Boundary condition and surface energy of a droplet problem.
#[derive(Debug, Clone, PartialEq)]
pub enum AnchoringSpec {
    /// `u = ν` on the boundary, surface energy `μ · area`.
    DirichletNormal { mu: f64 },
    /// `u·ν ≈ c` through the penalty `μ_pen (t − c)²`, plus `μ · area`.
    ConstantAngle { c: f64, mu_pen: f64, mu: f64 },
    /// Free boundary with energy `∫ f(u·ν)`.
    SurfaceEnergy(SurfaceDensity),
}

impl AnchoringSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            AnchoringSpec::DirichletNormal { mu } if *mu >= 0.0 => Ok(()),
            AnchoringSpec::ConstantAngle { c, mu_pen, mu } if *mu >= 0.0 => {
                SurfaceDensity::Penalty { mu: *mu_pen, c: *c }.validate()
            }
            AnchoringSpec::SurfaceEnergy(f) => f.validate(),
            other => Err(Error::invalid(format!("negative surface tension in {other:?}"))),
        }
    }

    /// Uniform surface tension multiplying the area.
    pub fn surface_tension(&self) -> f64 {
        match self {
            AnchoringSpec::DirichletNormal { mu } | AnchoringSpec::ConstantAngle { mu, .. } => *mu,
            AnchoringSpec::SurfaceEnergy(_) => 0.0,
        }
    }

    /// Density evaluated against the trace, if any.
    pub fn density(&self) -> Option<SurfaceDensity> {
        match self {
            AnchoringSpec::DirichletNormal { .. } => None,
            AnchoringSpec::ConstantAngle { c, mu_pen, .. } => Some(SurfaceDensity::Penalty { mu: *mu_pen, c: *c }),
            AnchoringSpec::SurfaceEnergy(f) => Some(f.clone()),
        }
    }

    /// Boundary treatment for the director solver.
    pub fn director_anchoring(&self) -> Anchoring {
        match self.density() {
            None => Anchoring::DirichletNormal,
            Some(f) => Anchoring::Free(f),
        }
    }

    /// Same problem with the surface tension replaced.
    pub fn with_surface_tension(&self, mu: f64) -> Self {
        match self {
            AnchoringSpec::DirichletNormal { .. } => AnchoringSpec::DirichletNormal { mu },
            AnchoringSpec::ConstantAngle { c, mu_pen, .. } => AnchoringSpec::ConstantAngle { c: *c, mu_pen: *mu_pen, mu },
            AnchoringSpec::SurfaceEnergy(f) => AnchoringSpec::SurfaceEnergy(f.clone()),
        }
    }
}

/// Flat JSON form: `{"variant", "mu", "w", "c", "mu_pen", "envelope"}`, unused fields omitted.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnchoringSpecJson {
    pub variant: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_pen: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub envelope: Option<Vec<[f64; 2]>>,
}

impl From<&AnchoringSpec> for AnchoringSpecJson {
    fn from(spec: &AnchoringSpec) -> Self {
        match spec {
            AnchoringSpec::DirichletNormal { mu } => AnchoringSpecJson {
                variant: "dirichlet-normal".into(),
                mu: Some(*mu),
                ..Default::default()
            },
            AnchoringSpec::ConstantAngle { c, mu_pen, mu } => AnchoringSpecJson {
                variant: "constant-angle".into(),
                mu: Some(*mu),
                c: Some(*c),
                mu_pen: Some(*mu_pen),
                ..Default::default()
            },
            AnchoringSpec::SurfaceEnergy(f) => {
                let mut j = AnchoringSpecJson { variant: "surface-energy".into(), ..Default::default() };
                match f {
                    SurfaceDensity::Quadratic { mu, w } => {
                        j.mu = Some(*mu);
                        j.w = Some(*w);
                    }
                    SurfaceDensity::Penalty { mu, c } => {
                        // (t − c)² = c² − 2c t + t², not affine; store as constant-angle without tension
                        j.variant = "constant-angle".into();
                        j.mu = Some(0.0);
                        j.c = Some(*c);
                        j.mu_pen = Some(*mu);
                    }
                    SurfaceDensity::Envelope(lines) => {
                        j.envelope = Some(lines.iter().map(|(a, b)| [*a, *b]).collect());
                    }
                }
                j
            }
        }
    }
}

impl TryFrom<AnchoringSpecJson> for AnchoringSpec {
    type Error = Error;

    fn try_from(j: AnchoringSpecJson) -> Result<Self> {
        let need = |v: Option<f64>, name: &str| v.ok_or_else(|| Error::invalid(format!("{} needs '{name}'", j.variant)));
        let spec = match j.variant.as_str() {
            "dirichlet-normal" => AnchoringSpec::DirichletNormal { mu: j.mu.unwrap_or(0.0) },
            "constant-angle" => AnchoringSpec::ConstantAngle {
                c: need(j.c, "c")?,
                mu_pen: need(j.mu_pen, "mu_pen")?,
                mu: j.mu.unwrap_or(0.0),
            },
            "surface-energy" => match (&j.envelope, j.mu, j.w) {
                (Some(lines), None, None) => {
                    AnchoringSpec::SurfaceEnergy(SurfaceDensity::Envelope(lines.iter().map(|l| (l[0], l[1])).collect()))
                }
                (None, Some(mu), w) => AnchoringSpec::SurfaceEnergy(SurfaceDensity::Quadratic { mu, w: w.unwrap_or(0.0) }),
                _ => return Err(Error::invalid("surface-energy needs either mu/w or envelope")),
            },
            other => return Err(Error::invalid(format!("unknown anchoring variant '{other}'"))),
        };
        spec.validate()?;
        Ok(spec)
    }
}

impl Serialize for AnchoringSpec {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        AnchoringSpecJson::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for AnchoringSpec {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let j = AnchoringSpecJson::deserialize(d)?;
        AnchoringSpec::try_from(j).map_err(serde::de::Error::custom)
    }
}

/// Bulk, surface and total energy of a droplet state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyBreakdown {
    pub bulk: f64,
    pub surface: f64,
    pub total: f64,
}

impl EnergyBreakdown {
    pub fn new(bulk: f64, surface: f64) -> Self {
        EnergyBreakdown { bulk, surface, total: bulk + surface }
    }
}

/// Director values on the boundary nodes, in surface-vertex order.
pub fn boundary_trace(mesh: &ShellMesh, u: &DirectorField) -> Result<Vec<Vec3>> {
    mesh.check_field(u)?;
    Ok(mesh.boundary_nodes().map(|i| u.values[i]).collect())
}

/// `Σ f(trace_i · ν_i) · A_i`.
pub fn anchoring_energy(geom: &SurfaceGeometry, trace: &[Vec3], f: &SurfaceDensity) -> Result<f64> {
    if trace.len() != geom.position.len() {
        return Err(Error::invalid(format!("{} trace values for {} vertices", trace.len(), geom.position.len())));
    }
    let mut sum = 0.0;
    for (i, t) in trace.iter().enumerate() {
        if (t.norm() - 1.0).abs() > 1e-6 {
            return Err(Error::invalid(format!("trace value {i} has norm {}", t.norm())));
        }
        sum += f.value(t.dot(&geom.normal[i])) * geom.vertex_area[i];
    }
    Ok(sum)
}

/// `∫ (u·ν − c)² dA`, the violation of a constant-angle condition.
pub fn angle_violation(geom: &SurfaceGeometry, trace: &[Vec3], c: f64) -> Result<f64> {
    anchoring_energy(geom, trace, &SurfaceDensity::Penalty { mu: 1.0, c })
}

/// `E_f(u, Ω)` split into its bulk and surface parts.
pub fn total_energy(mesh: &ShellMesh, u: &DirectorField, spec: &AnchoringSpec) -> Result<EnergyBreakdown> {
    spec.validate()?;
    let bulk = dirichlet_energy(mesh, u)?;
    let geom = mesh.geometry();
    let mut surface = spec.surface_tension() * geom.area;
    if let Some(f) = spec.density() {
        surface += anchoring_energy(geom, &boundary_trace(mesh, u)?, &f)?;
    }
    Ok(EnergyBreakdown::new(bulk, surface))
}

/// Convex profile that can be expanded into supporting lines.
pub trait ConvexProfile {
    fn value(&self, t: f64) -> f64;
    fn slope(&self, t: f64) -> f64;

    /// Convexity on `[-1, 1]`, checked by second differences unless overridden.
    fn check_convex(&self) -> Result<()> {
        let n = 400;
        let h = 2.0 / n as f64;
        for k in 1..n {
            let t = -1.0 + k as f64 * h;
            let second = self.value(t - h) - 2.0 * self.value(t) + self.value(t + h);
            if second < -1e-12 * (1.0 + self.value(t).abs()) {
                return Err(Error::NotConvex(format!("negative second difference at t = {t:.3}")));
            }
        }
        Ok(())
    }
}

impl ConvexProfile for SurfaceDensity {
    fn value(&self, t: f64) -> f64 {
        SurfaceDensity::value(self, t)
    }

    fn slope(&self, t: f64) -> f64 {
        self.derivative(t)
    }

    fn check_convex(&self) -> Result<()> {
        match self {
            SurfaceDensity::Quadratic { mu, w } if *mu * *w < 0.0 => {
                Err(Error::NotConvex(format!("mu (1 + w t²) with w = {w} is concave")))
            }
            SurfaceDensity::Penalty { mu, .. } if *mu < 0.0 => Err(Error::NotConvex("negative penalty weight".into())),
            _ => Ok(()),
        }
    }
}

/// Any closure pair `(f, f')` is a profile.
impl<F: Fn(f64) -> f64, G: Fn(f64) -> f64> ConvexProfile for (F, G) {
    fn value(&self, t: f64) -> f64 {
        (self.0)(t)
    }

    fn slope(&self, t: f64) -> f64 {
        (self.1)(t)
    }
}

/// Tangent lines of `f` at `n` Chebyshev points of `[-1, 1]`.
///
/// Their pointwise maximum lies below `f` and closes the gap as `n` grows.
/// When `f` has an interior minimum the horizontal support line there is
/// appended, so the envelope never drops below `min f` (a nonnegative `f`
/// keeps a nonnegative envelope). Duplicate lines are merged.
pub fn affine_envelope<P: ConvexProfile + ?Sized>(f: &P, n: usize) -> Result<Vec<(f64, f64)>> {
    if n < 2 {
        return Err(Error::invalid("affine envelope needs at least 2 tangent points"));
    }
    f.check_convex()?;
    let mut lines: Vec<(f64, f64)> = Vec::with_capacity(n + 1);
    let mut push = |a: f64, b: f64| {
        if !lines.iter().any(|&(a0, b0)| a0 == a && b0 == b) {
            lines.push((a, b));
        }
    };
    for k in (0..n).rev() {
        let t = ((2 * k + 1) as f64 * std::f64::consts::PI / (2 * n) as f64).cos();
        let a = f.slope(t);
        push(a, f.value(t) - a * t);
    }
    if f.slope(-1.0) < 0.0 && f.slope(1.0) > 0.0 {
        let t = argmin_convex(f);
        push(0.0, f.value(t));
    }
    Ok(lines)
}

/// Golden-section minimizer of a convex profile on `[-1, 1]`.
fn argmin_convex<P: ConvexProfile + ?Sized>(f: &P) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (-1.0, 1.0);
    while hi - lo > 1e-12 {
        let x1 = hi - g * (hi - lo);
        let x2 = lo + g * (hi - lo);
        if f.value(x1) <= f.value(x2) {
            hi = x2;
        } else {
            lo = x1;
        }
    }
    0.5 * (lo + hi)
}

/// Largest gap `f(t) − max_i(a_i t + b_i)` over a uniform grid of `[-1, 1]`.
pub fn envelope_deficit<P: ConvexProfile + ?Sized>(f: &P, lines: &[(f64, f64)], grid: usize) -> f64 {
    (0..grid)
        .map(|k| {
            let t = -1.0 + 2.0 * k as f64 / (grid - 1) as f64;
            let under = lines.iter().map(|(a, b)| a * t + b).fold(f64::NEG_INFINITY, f64::max);
            f.value(t) - under
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square() -> impl ConvexProfile {
        (|t: f64| t * t, |t: f64| 2.0 * t)
    }

    /// Exact worst gap of tangents to `t²` at the given points over `[-1, 1]`.
    fn tangent_gap_t_squared(points: &mut [f64]) -> f64 {
        points.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let mut worst = (points[0] + 1.0).powi(2).max((1.0 - points[points.len() - 1]).powi(2));
        for w in points.windows(2) {
            worst = worst.max(((w[1] - w[0]) / 2.0).powi(2));
        }
        worst
    }

    #[test]
    fn constant_profile_collapses() {
        let f = SurfaceDensity::Quadratic { mu: 1.0, w: 0.0 };
        for n in [2, 5, 16] {
            let lines = affine_envelope(&f, n).unwrap();
            assert_eq!(lines, vec![(0.0, 1.0)]);
            assert_eq!(envelope_deficit(&f, &lines, 1001), 0.0);
        }
    }

    #[test]
    fn t_squared_gap_matches_tangent_formula() {
        let f = square();
        let lines = affine_envelope(&f, 16).unwrap();
        // the 16 Chebyshev tangents plus the support line at the minimum t = 0
        assert_eq!(lines.len(), 17);
        // tangent points are recovered from the slopes a = 2t
        let mut pts: Vec<f64> = lines.iter().map(|(a, _)| a / 2.0).collect();
        let bound = tangent_gap_t_squared(&mut pts);
        let brute = envelope_deficit(&f, &lines, 1001);
        assert!(brute <= bound + 1e-15, "{brute} > {bound}");
        assert!(brute > 0.5 * bound);
        assert!(brute >= -1e-15);
    }

    #[test]
    fn shifted_square_refines() {
        let c = 0.3;
        let f = SurfaceDensity::Penalty { mu: 1.0, c };
        let d16 = envelope_deficit(&f, &affine_envelope(&f, 16).unwrap(), 1001);
        let lines32 = affine_envelope(&f, 32).unwrap();
        let d32 = envelope_deficit(&f, &lines32, 1001);
        assert!(d32 < d16);
        let env = SurfaceDensity::Envelope(lines32);
        assert!(env.validate().is_ok());
        assert!((0..1001).all(|k| env.value(-1.0 + k as f64 * 0.002) >= -1e-12));
    }

    #[test]
    fn concave_rejected() {
        let f = SurfaceDensity::Quadratic { mu: 1.0, w: -0.5 };
        assert!(matches!(affine_envelope(&f, 8), Err(Error::NotConvex(_))));
        let g = (|t: f64| -t * t, |t: f64| -2.0 * t);
        assert!(matches!(affine_envelope(&g, 8), Err(Error::NotConvex(_))));
        assert!(affine_envelope(&square(), 1).is_err());
    }

    #[test]
    fn envelope_under_approximates() {
        for n in 2..40 {
            for f in [SurfaceDensity::Quadratic { mu: 2.0, w: 0.7 }, SurfaceDensity::Penalty { mu: 3.0, c: -0.4 }] {
                let lines = affine_envelope(&f, n).unwrap();
                assert!(envelope_deficit(&f, &lines, 1001) >= -1e-12);
                for k in 0..1001 {
                    let t = -1.0 + k as f64 * 0.002;
                    let under = SurfaceDensity::Envelope(lines.clone()).value(t);
                    assert!(under <= f.value(t) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn spec_json() {
        let cases = [
            (r#"{"variant":"dirichlet-normal","mu":1.0}"#, AnchoringSpec::DirichletNormal { mu: 1.0 }),
            (
                r#"{"variant":"constant-angle","mu":1.0,"c":0.0,"mu_pen":10.0}"#,
                AnchoringSpec::ConstantAngle { c: 0.0, mu_pen: 10.0, mu: 1.0 },
            ),
            (
                r#"{"variant":"surface-energy","mu":2.0,"w":0.5}"#,
                AnchoringSpec::SurfaceEnergy(SurfaceDensity::Quadratic { mu: 2.0, w: 0.5 }),
            ),
            (
                r#"{"variant":"surface-energy","envelope":[[0.0,1.0],[1.0,0.5]]}"#,
                AnchoringSpec::SurfaceEnergy(SurfaceDensity::Envelope(vec![(0.0, 1.0), (1.0, 0.5)])),
            ),
        ];
        for (text, spec) in cases {
            let parsed: AnchoringSpec = serde_json::from_str(text).unwrap();
            assert_eq!(parsed, spec);
            let again: AnchoringSpec = serde_json::from_str(&serde_json::to_string(&spec).unwrap()).unwrap();
            assert_eq!(again, spec);
        }
        let text = serde_json::to_string(&AnchoringSpec::DirichletNormal { mu: 1.0 }).unwrap();
        assert!(!text.contains("envelope") && !text.contains("mu_pen"));
        for bad in [
            r#"{"variant":"surface-energy","mu":1.0,"w":1.5}"#,
            r#"{"variant":"surface-energy","mu":-1.0,"w":0.0}"#,
            r#"{"variant":"surface-energy","envelope":[]}"#,
            r#"{"variant":"surface-energy","envelope":[[0.0,-1.0]]}"#,
            r#"{"variant":"constant-angle","mu":1.0}"#,
            r#"{"variant":"twisted"}"#,
        ] {
            assert!(serde_json::from_str::<AnchoringSpec>(bad).is_err(), "{bad}");
        }
    }
}
