//! Radial surfaces: a positive radius per icosphere vertex.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::icosphere::IcosphereMesh;
use crate::{Error, Result, Vec3};

/// Real spherical harmonic with Schmidt semi-normalization, so `|Y| ≤ 1` on the sphere.
///
/// `m ≥ 0` selects the cosine family, `m < 0` the sine family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SphereMode {
    pub l: u32,
    pub m: i32,
}

impl SphereMode {
    pub fn new(l: u32, m: i32) -> Result<Self> {
        if m.unsigned_abs() > l {
            return Err(Error::invalid(format!("mode (l={l}, m={m}) needs |m| <= l")));
        }
        Ok(SphereMode { l, m })
    }

    /// Mode number `l² + l + m`; the first `(L+1)²` indices cover degrees `0..=L`.
    pub fn from_index(index: usize) -> Self {
        let l = (index as f64).sqrt().floor() as u32;
        let m = index as i64 - (l as i64 * l as i64 + l as i64);
        SphereMode { l, m: m as i32 }
    }

    pub fn index(&self) -> usize {
        ((self.l * self.l + self.l) as i64 + self.m as i64) as usize
    }

    /// Value at a unit direction.
    pub fn eval(&self, d: &Vec3) -> f64 {
        let x = d.z.clamp(-1.0, 1.0);
        let phi = d.y.atan2(d.x);
        let m = self.m.unsigned_abs();
        let p = schmidt_legendre(self.l, m, x);
        if self.m >= 0 {
            p * (m as f64 * phi).cos()
        } else {
            p * (m as f64 * phi).sin()
        }
    }
}

/// Schmidt semi-normalized associated Legendre function without the Condon-Shortley phase.
fn schmidt_legendre(l: u32, m: u32, x: f64) -> f64 {
    let s = (1.0 - x * x).max(0.0).sqrt();
    // P_m^m = (2m-1)!! s^m
    let mut pmm = 1.0;
    for k in 1..=m {
        pmm *= (2 * k - 1) as f64 * s;
    }
    let p = if l == m {
        pmm
    } else {
        let mut prev = pmm;
        let mut cur = x * (2 * m + 1) as f64 * pmm;
        for ll in (m + 2)..=l {
            let next = ((2 * ll - 1) as f64 * x * cur - (ll + m - 1) as f64 * prev) / (ll - m) as f64;
            prev = cur;
            cur = next;
        }
        cur
    };
    if m == 0 {
        p
    } else {
        // sqrt(2 (l-m)! / (l+m)!)
        let mut ratio = 1.0;
        for k in (l - m + 1)..=(l + m) {
            ratio /= k as f64;
        }
        (2.0 * ratio).sqrt() * p
    }
}

/// Amplitude of one mode in a perturbed sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeAmplitude {
    pub l: u32,
    pub m: i32,
    pub amplitude: f64,
}

/// Closed-form description of a star-shaped body.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ShapeDescriptor {
    Sphere { radius: f64 },
    /// Semi-axes along x, y, z.
    Ellipsoid { a: f64, b: f64, c: f64 },
    /// `rho(d) = radius · (1 + Σ amplitude · Y_lm(d))`.
    PerturbedSphere { radius: f64, modes: Vec<ModeAmplitude> },
}

impl ShapeDescriptor {
    /// Radius of the boundary along unit direction `d`.
    pub fn radius_along(&self, d: &Vec3) -> f64 {
        match self {
            ShapeDescriptor::Sphere { radius } => *radius,
            ShapeDescriptor::Ellipsoid { a, b, c } => {
                let q = (d.x / a).powi(2) + (d.y / b).powi(2) + (d.z / c).powi(2);
                1.0 / q.sqrt()
            }
            ShapeDescriptor::PerturbedSphere { radius, modes } => {
                let bump: f64 = modes
                    .iter()
                    .map(|mode| mode.amplitude * SphereMode { l: mode.l, m: mode.m }.eval(d))
                    .sum();
                radius * (1.0 + bump)
            }
        }
    }

    /// Ellipsoid with the given z/x aspect ratio and the volume of the unit ball.
    pub fn unit_volume_spheroid(aspect: f64) -> Self {
        let s = aspect.powf(-1.0 / 3.0);
        ShapeDescriptor::Ellipsoid { a: s, b: s, c: s * aspect }
    }

    /// Sphere perturbed by seeded modes `2 ≤ l ≤ 4`, scaled so the largest relative
    /// deviation of `rho` over a fine direction sample is `amplitude`.
    pub fn seeded_perturbation(radius: f64, amplitude: f64, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut modes: Vec<ModeAmplitude> = (4..25)
            .map(|k| {
                let mode = SphereMode::from_index(k);
                ModeAmplitude { l: mode.l, m: mode.m, amplitude: rng.gen_range(-1.0..1.0) }
            })
            .collect();
        let sample = super::icosphere::build_icosphere(5).expect("level 5 is in range");
        let peak = sample
            .vertices()
            .iter()
            .map(|d| modes.iter().map(|m| m.amplitude * SphereMode { l: m.l, m: m.m }.eval(d)).sum::<f64>().abs())
            .fold(0.0, f64::max);
        for m in &mut modes {
            m.amplitude *= amplitude / peak;
        }
        ShapeDescriptor::PerturbedSphere { radius, modes }
    }

    /// Enclosed volume when known in closed form.
    pub fn exact_volume(&self) -> Option<f64> {
        match self {
            ShapeDescriptor::Sphere { radius } => Some(4.0 * PI / 3.0 * radius.powi(3)),
            ShapeDescriptor::Ellipsoid { a, b, c } => Some(4.0 * PI / 3.0 * a * b * c),
            ShapeDescriptor::PerturbedSphere { .. } => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match self {
            ShapeDescriptor::Sphere { radius } => radius.is_finite(),
            ShapeDescriptor::Ellipsoid { a, b, c } => {
                [a, b, c].iter().all(|v| v.is_finite() && **v > 0.0)
            }
            ShapeDescriptor::PerturbedSphere { radius, modes } => {
                radius.is_finite()
                    && modes.iter().all(|m| m.amplitude.is_finite() && m.m.unsigned_abs() <= m.l)
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("bad shape parameters: {self}")))
        }
    }
}

impl fmt::Display for ShapeDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ShapeDescriptor::Sphere { radius } => write!(f, "sphere:{radius}"),
            ShapeDescriptor::Ellipsoid { a, b, c } => write!(f, "ellipsoid:{a},{b},{c}"),
            ShapeDescriptor::PerturbedSphere { radius, modes } => {
                write!(f, "perturbed:{radius}")?;
                for m in modes {
                    write!(f, ";{},{},{}", m.l, m.m, m.amplitude)?;
                }
                Ok(())
            }
        }
    }
}

/// Parses `sphere:R`, `ellipsoid:a,b,c` and `perturbed:R;l,m,amp;...`.
impl FromStr for ShapeDescriptor {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (kind, rest) = s
            .split_once(':')
            .ok_or_else(|| Error::invalid(format!("shape '{s}' lacks a ':'")))?;
        let nums = |t: &str| -> Result<Vec<f64>> {
            t.split(',')
                .map(|x| x.trim().parse::<f64>().map_err(|e| Error::invalid(format!("'{x}': {e}"))))
                .collect()
        };
        let shape = match kind.trim() {
            "sphere" => match nums(rest)?.as_slice() {
                [r] => ShapeDescriptor::Sphere { radius: *r },
                _ => return Err(Error::invalid("sphere takes one radius")),
            },
            "ellipsoid" => match nums(rest)?.as_slice() {
                [a, b, c] => ShapeDescriptor::Ellipsoid { a: *a, b: *b, c: *c },
                _ => return Err(Error::invalid("ellipsoid takes three semi-axes")),
            },
            "perturbed" => {
                let mut parts = rest.split(';');
                let radius = match nums(parts.next().unwrap_or(""))?.as_slice() {
                    [r] => *r,
                    _ => return Err(Error::invalid("perturbed takes a radius first")),
                };
                let mut modes = Vec::new();
                for p in parts {
                    match nums(p)?.as_slice() {
                        [l, m, amp] if *l >= 0.0 && l.fract() == 0.0 && m.fract() == 0.0 => {
                            modes.push(ModeAmplitude { l: *l as u32, m: *m as i32, amplitude: *amp })
                        }
                        _ => return Err(Error::invalid(format!("bad mode '{p}'"))),
                    }
                }
                ShapeDescriptor::PerturbedSphere { radius, modes }
            }
            other => return Err(Error::invalid(format!("unknown shape kind '{other}'"))),
        };
        shape.validate()?;
        Ok(shape)
    }
}

/// Strictly star-shaped closed surface: vertex `i` sits at `rho[i] · base.vertices()[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialSurface {
    base: Arc<IcosphereMesh>,
    rho: Vec<f64>,
}

impl RadialSurface {
    pub fn new(base: Arc<IcosphereMesh>, rho: Vec<f64>) -> Result<Self> {
        if rho.len() != base.vertex_count() {
            return Err(Error::invalid(format!(
                "{} radii for {} vertices",
                rho.len(),
                base.vertex_count()
            )));
        }
        if let Some(i) = rho.iter().position(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::NotStarShaped(format!("rho[{i}] = {} is not positive", rho[i])));
        }
        Ok(RadialSurface { base, rho })
    }

    pub fn base(&self) -> &Arc<IcosphereMesh> {
        &self.base
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    pub fn position(&self, i: usize) -> Vec3 {
        self.base.vertices()[i] * self.rho[i]
    }

    pub fn positions(&self) -> Vec<Vec3> {
        (0..self.rho.len()).map(|i| self.position(i)).collect()
    }

    /// Uniformly rescaled copy.
    pub fn scaled(&self, factor: f64) -> Result<Self> {
        RadialSurface::new(self.base.clone(), self.rho.iter().map(|r| r * factor).collect())
    }

    /// Copy with the radii replaced.
    pub fn with_rho(&self, rho: Vec<f64>) -> Result<Self> {
        RadialSurface::new(self.base.clone(), rho)
    }

    pub fn max_radius(&self) -> f64 {
        self.rho.iter().cloned().fold(f64::MIN, f64::max)
    }

    pub fn min_radius(&self) -> f64 {
        self.rho.iter().cloned().fold(f64::MAX, f64::min)
    }

    /// `max(rho)/min(rho) − 1`; zero exactly for origin-centred balls.
    pub fn asphericity(&self) -> f64 {
        self.max_radius() / self.min_radius() - 1.0
    }
}

/// Samples a descriptor at the vertex directions of `mesh`.
pub fn radial_surface(mesh: Arc<IcosphereMesh>, shape: &ShapeDescriptor) -> Result<RadialSurface> {
    shape.validate()?;
    let rho: Vec<f64> = mesh.vertices().iter().map(|d| shape.radius_along(d)).collect();
    if let Some(i) = rho.iter().position(|r| !(*r > 0.0)) {
        return Err(Error::NotStarShaped(format!(
            "{shape} has rho = {} along vertex {i}",
            rho[i]
        )));
    }
    RadialSurface::new(mesh, rho)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::build_icosphere;

    fn mesh(level: u32) -> Arc<IcosphereMesh> {
        Arc::new(build_icosphere(level).unwrap())
    }

    #[test]
    fn sphere_is_constant() {
        let s = radial_surface(mesh(2), &ShapeDescriptor::Sphere { radius: 1.0 }).unwrap();
        assert!(s.rho().iter().all(|&r| r == 1.0));
        assert_eq!(s.asphericity(), 0.0);
    }

    #[test]
    fn ellipsoid_axis_intersection() {
        let e = ShapeDescriptor::Ellipsoid { a: 1.0, b: 1.0, c: 2.0 };
        assert!((e.radius_along(&Vec3::z()) - 2.0).abs() < 1e-15);
        assert!((e.radius_along(&Vec3::x()) - 1.0).abs() < 1e-15);
    }

    #[test]
    fn bump_amplitude_bound() {
        let shape: ShapeDescriptor = "perturbed:1;3,2,0.1".parse().unwrap();
        let s = radial_surface(mesh(4), &shape).unwrap();
        assert!(s.min_radius() >= 0.9 && s.max_radius() <= 1.1);
        assert!(s.max_radius() > 1.05);
    }

    #[test]
    fn modes_bounded_by_one() {
        let m = mesh(4);
        for index in 0..25 {
            let mode = SphereMode::from_index(index);
            assert_eq!(mode.index(), index);
            let peak = m.vertices().iter().map(|d| mode.eval(d).abs()).fold(0.0, f64::max);
            assert!(peak <= 1.0 + 1e-12, "mode {mode:?} peaks at {peak}");
            assert!(peak > 0.5, "mode {mode:?} peaks at {peak}");
        }
    }

    #[test]
    fn low_modes_match_polynomials() {
        let d = Vec3::new(0.3, -0.4, 0.5).normalize();
        let y = |l, m| SphereMode::new(l, m).unwrap().eval(&d);
        assert!((y(0, 0) - 1.0).abs() < 1e-14);
        assert!((y(1, 0) - d.z).abs() < 1e-14);
        assert!((y(1, 1) - d.x).abs() < 1e-14);
        assert!((y(1, -1) - d.y).abs() < 1e-14);
        assert!((y(2, 0) - 0.5 * (3.0 * d.z * d.z - 1.0)).abs() < 1e-14);
        assert!((y(2, 1) - 3f64.sqrt() * d.x * d.z).abs() < 1e-14);
    }

    #[test]
    fn not_star_shaped() {
        let shape: ShapeDescriptor = "perturbed:1;1,0,1.5".parse().unwrap();
        assert!(matches!(radial_surface(mesh(2), &shape), Err(Error::NotStarShaped(_))));
    }

    #[test]
    fn parse_round_trip() {
        for s in ["sphere:2", "ellipsoid:1,1,2", "perturbed:1;2,0,0.1;3,-1,0.05"] {
            let shape: ShapeDescriptor = s.parse().unwrap();
            assert_eq!(shape.to_string(), s);
        }
        assert!("cube:1".parse::<ShapeDescriptor>().is_err());
        assert!("ellipsoid:1,2".parse::<ShapeDescriptor>().is_err());
        assert!("ellipsoid:1,-2,1".parse::<ShapeDescriptor>().is_err());
    }
}
