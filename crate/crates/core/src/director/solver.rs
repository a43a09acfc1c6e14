//! Harmonic-map relaxation of the director.
//!
//! Nonlinear Gauss-Seidel: with every other node frozen, the energy in a
//! single unit vector `u_i` is `const − 2 u_i·s_i` with `s_i = Σ_j w_ij u_j`,
//! so `s_i/|s_i|` is its exact minimizer whatever the signs of the weights.
//! Free boundary nodes add `A_i f(u_i·ν_i)` and are relaxed by a short
//! projected-gradient search on the sphere that never raises the local energy.

use serde::{Deserialize, Serialize};

use super::{edge_energy, hedgehog, DirectorField, ShellMesh};
use crate::energy::SurfaceDensity;
use crate::{Error, Result, Vec3};

/// Boundary treatment during the director solve.
#[derive(Debug, Clone, PartialEq)]
pub enum Anchoring {
    /// `u = ν` on the boundary.
    DirichletNormal,
    /// Prescribed boundary values in surface-vertex order.
    DirichletCustom(Vec<Vec3>),
    /// Boundary values are free and pay `∫ f(u·ν)`.
    Free(SurfaceDensity),
}

#[derive(Debug, Clone)]
pub struct SolverOptions {
    pub max_sweeps: usize,
    /// Stop once a sweep lowers the objective by less than this fraction.
    pub tolerance: f64,
    /// Warm start; boundary values are overwritten for Dirichlet anchoring.
    pub initial: Option<DirectorField>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions { max_sweeps: 5000, tolerance: 1e-8, initial: None }
    }
}

/// Relaxed field with its energy record.
#[derive(Debug, Clone)]
pub struct DirectorSolution {
    pub field: DirectorField,
    pub bulk: f64,
    /// `Σ f(u·ν) A_i` for free anchoring, zero otherwise.
    pub anchoring: f64,
    pub sweeps: usize,
    pub converged: bool,
    /// Objective after each sweep, starting with the initial state.
    pub history: Vec<f64>,
    /// Sweeps that fell back to projected gradient.
    pub fallback_steps: usize,
}

impl DirectorSolution {
    pub fn objective(&self) -> f64 {
        self.bulk + self.anchoring
    }

    pub fn report(&self) -> EnergyReport {
        EnergyReport { bulk: self.bulk, sweeps: self.sweeps, converged: self.converged }
    }
}

/// `{"bulk", "sweeps", "converged"}`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct EnergyReport {
    pub bulk: f64,
    pub sweeps: usize,
    pub converged: bool,
}

struct Problem<'a> {
    mesh: &'a ShellMesh,
    density: Option<&'a SurfaceDensity>,
    free: Vec<bool>,
}

impl Problem<'_> {
    fn anchoring_energy(&self, values: &[Vec3]) -> f64 {
        let Some(f) = self.density else { return 0.0 };
        let g = self.mesh.geometry();
        self.mesh
            .boundary_nodes()
            .enumerate()
            .map(|(k, node)| f.value(values[node].dot(&g.normal[k])) * g.vertex_area[k])
            .sum()
    }

    fn objective(&self, values: &[Vec3]) -> f64 {
        edge_energy(self.mesh.weights(), values) + self.anchoring_energy(values)
    }

    fn neighbour_sum(&self, values: &[Vec3], i: usize) -> Vec3 {
        let mut s = Vec3::zeros();
        for (j, w) in self.mesh.weights().row(i) {
            s += w * values[j];
        }
        s
    }

    fn sweep(&self, values: &mut [Vec3]) {
        let boundary = self.mesh.boundary_nodes();
        let g = self.mesh.geometry();
        for i in 0..values.len() {
            if !self.free[i] {
                continue;
            }
            let s = self.neighbour_sum(values, i);
            match (self.density, boundary.contains(&i)) {
                (Some(f), true) => {
                    let k = i - boundary.start;
                    values[i] = relax_on_sphere(values[i], s, g.normal[k], g.vertex_area[k], f);
                }
                _ => {
                    let n = s.norm();
                    if n > 1e-300 {
                        values[i] = s / n;
                    }
                }
            }
        }
    }

    /// Projected gradient with backtracking on the whole field.
    fn gradient_step(&self, values: &mut Vec<Vec3>, current: f64) -> Option<f64> {
        let boundary = self.mesh.boundary_nodes();
        let g = self.mesh.geometry();
        let mut grad = vec![Vec3::zeros(); values.len()];
        for i in 0..values.len() {
            if !self.free[i] {
                continue;
            }
            let mut d = Vec3::zeros();
            for (j, w) in self.mesh.weights().row(i) {
                d += 2.0 * w * (values[i] - values[j]);
            }
            if let (Some(f), true) = (self.density, boundary.contains(&i)) {
                let k = i - boundary.start;
                d += g.vertex_area[k] * f.derivative(values[i].dot(&g.normal[k])) * g.normal[k];
            }
            grad[i] = d - values[i] * values[i].dot(&d);
        }
        let gnorm: f64 = grad.iter().map(|v| v.norm_squared()).sum::<f64>().sqrt();
        if gnorm == 0.0 {
            return None;
        }
        let mut step = 0.1 / gnorm;
        for _ in 0..40 {
            let trial: Vec<Vec3> = values
                .iter()
                .zip(&grad)
                .map(|(u, d)| {
                    let v = u - step * d;
                    if d.norm_squared() == 0.0 { *u } else { v.normalize() }
                })
                .collect();
            let e = self.objective(&trial);
            if e < current {
                *values = trial;
                return Some(e);
            }
            step *= 0.5;
        }
        None
    }
}

/// Local minimization of `−2 s·u + area·f(u·ν)` over unit `u`, started from `u0`.
///
/// Never returns a point worse than `u0`.
fn relax_on_sphere(u0: Vec3, s: Vec3, normal: Vec3, area: f64, f: &SurfaceDensity) -> Vec3 {
    let local = |u: &Vec3| -2.0 * s.dot(u) + area * f.value(u.dot(&normal));
    let mut best = u0;
    let mut best_e = local(&u0);
    if s.norm() > 1e-300 {
        let cand = s.normalize();
        let e = local(&cand);
        if e < best_e {
            best = cand;
            best_e = e;
        }
    }
    let scale = 2.0 * s.norm() + area * f.derivative(1.0).abs().max(f.derivative(-1.0).abs()) + 1e-300;
    let mut step = 1.0 / scale;
    for _ in 0..12 {
        let d = -2.0 * s + area * f.derivative(best.dot(&normal)) * normal;
        let tangent = d - best * best.dot(&d);
        if tangent.norm() < 1e-14 * scale {
            break;
        }
        let mut moved = false;
        for _ in 0..20 {
            let cand = (best - step * tangent).normalize();
            let e = local(&cand);
            if e < best_e {
                best = cand;
                best_e = e;
                moved = true;
                step *= 2.0;
                break;
            }
            step *= 0.5;
        }
        if !moved {
            break;
        }
    }
    best
}

/// Minimizes `∫|∇u|²` (plus the free anchoring term) over unit fields on `mesh`.
///
/// The start is `opts.initial`, else the hedgehog for normal anchoring and
/// the constant `(0, 0, 1)` otherwise. Dirichlet boundary values are written
/// once and never touched again.
pub fn minimize_director(mesh: &ShellMesh, anchoring: &Anchoring, opts: &SolverOptions) -> Result<DirectorSolution> {
    let n = mesh.node_count();
    let boundary = mesh.boundary_nodes();
    let mut values = match &opts.initial {
        Some(u) => {
            mesh.check_field(u)?;
            u.values.clone()
        }
        None => match anchoring {
            Anchoring::DirichletNormal => hedgehog(mesh).values,
            _ => vec![Vec3::z(); n],
        },
    };
    for v in values.iter_mut() {
        let norm = v.norm();
        if !(norm > 0.0 && norm.is_finite()) {
            return Err(Error::invalid("initial field has a zero or non-finite value"));
        }
        *v /= norm;
    }

    let mut free = vec![true; n];
    match anchoring {
        Anchoring::DirichletNormal => {
            for (k, node) in boundary.clone().enumerate() {
                values[node] = mesh.geometry().normal[k];
                free[node] = false;
            }
        }
        Anchoring::DirichletCustom(data) => {
            if data.len() != boundary.len() {
                return Err(Error::invalid(format!("{} boundary values for {} boundary nodes", data.len(), boundary.len())));
            }
            for (k, node) in boundary.clone().enumerate() {
                if (data[k].norm() - 1.0).abs() > 1e-9 {
                    return Err(Error::invalid(format!("boundary value {k} is not a unit vector")));
                }
                values[node] = data[k];
                free[node] = false;
            }
        }
        Anchoring::Free(f) => f.validate()?,
    }

    let density = match anchoring {
        Anchoring::Free(f) => Some(f),
        _ => None,
    };
    let problem = Problem { mesh, density, free };
    // energies scale like length; below this floor relative progress is meaningless
    let floor = 1e-12 * mesh.surface().max_radius();
    let mut energy = problem.objective(&values);
    let mut history = vec![energy];
    let mut converged = energy <= floor;
    let mut sweeps = 0;
    let mut fallback_steps = 0;

    while !converged && sweeps < opts.max_sweeps {
        let previous = values.clone();
        problem.sweep(&mut values);
        sweeps += 1;
        let mut next = problem.objective(&values);
        if next > energy + 1e-12 * energy.max(1.0) {
            // rounding can only break descent when every local sum is near zero
            values = previous;
            next = problem
                .gradient_step(&mut values, energy)
                .ok_or_else(|| Error::NumericalFailure(format!("no descent direction after sweep {sweeps}")))?;
            fallback_steps += 1;
        }
        let decrease = energy - next;
        energy = next;
        history.push(energy);
        if energy <= floor || decrease <= opts.tolerance * energy.max(floor) {
            converged = true;
        }
    }

    let field = DirectorField { values };
    if !converged {
        return Err(Error::ConvergenceFailure {
            context: "director relaxation".into(),
            iterations: sweeps,
            last_iterate: Some(Box::new(field)),
        });
    }
    let anchoring_part = problem.anchoring_energy(&field.values);
    Ok(DirectorSolution {
        bulk: super::dirichlet_energy(mesh, &field)?,
        anchoring: anchoring_part,
        field,
        sweeps,
        converged,
        history,
        fallback_steps,
    })
}
