use serde::{Deserialize, Serialize};

use super::grid::{neighborhood, rasterize_in, set_distances, GridDomain, GridFrame, NeighborhoodMode};
use super::Polygon2D;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MemberRow {
    pub index: usize,
    pub l1: f64,
    pub hausdorff: f64,
    pub perimeter: f64,
    pub perimeter_gap: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpsilonRow {
    pub eps: f64,
    /// Per member: (i) `D ⊂ D_iᵋ`, (ii) `(D_i)_ε ⊂ D`, (iii) `D_i ⊂ Dᵋ`.
    pub holds: Vec<[bool; 3]>,
    /// First index from which all three inclusions hold for every later member.
    pub first_index: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub h: f64,
    pub limit_perimeter: f64,
    pub members: Vec<MemberRow>,
    pub epsilons: Vec<EpsilonRow>,
    /// All members convex, so perimeters are expected to converge.
    pub convex_family: bool,
    /// `|P(D_i) − P(D)|` non-increasing along the family.
    pub perimeter_gap_monotone: bool,
}

fn inclusions(limit: &GridDomain, member: &GridDomain, eps: f64) -> Result<[bool; 3]> {
    let member_outer = neighborhood(member, eps, NeighborhoodMode::Outer)?;
    let member_inner = neighborhood(member, eps, NeighborhoodMode::Inner)?;
    let limit_outer = neighborhood(limit, eps, NeighborhoodMode::Outer)?;
    Ok([
        limit.is_subset_of(&member_outer),
        member_inner.is_subset_of(limit),
        member.is_subset_of(&limit_outer),
    ])
}

/// Inclusion and distance diagnostics of `family → limit` on one shared grid.
pub fn convergence_experiment(family: &[Polygon2D], limit: &Polygon2D, h: f64, eps: &[f64]) -> Result<ConvergenceReport> {
    if family.is_empty() || eps.is_empty() {
        return Err(Error::invalid("convergence experiment needs a family and at least one eps"));
    }
    let max_eps = eps.iter().cloned().fold(0.0, f64::max);
    let mut all: Vec<&Polygon2D> = family.iter().collect();
    all.push(limit);
    let frame = GridFrame::covering(&all, h, max_eps + 2.0 * h)?;
    let limit_grid = rasterize_in(limit, frame);
    let grids: Vec<GridDomain> = family.iter().map(|p| rasterize_in(p, frame)).collect();

    let limit_perimeter = limit.perimeter();
    let members = grids
        .iter()
        .zip(family)
        .enumerate()
        .map(|(index, (g, p))| {
            let d = set_distances(g, &limit_grid)?;
            Ok(MemberRow {
                index,
                l1: d.l1,
                hausdorff: d.hausdorff,
                perimeter: p.perimeter(),
                perimeter_gap: (p.perimeter() - limit_perimeter).abs(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let epsilons = eps
        .iter()
        .map(|&e| {
            let holds = grids.iter().map(|g| inclusions(&limit_grid, g, e)).collect::<Result<Vec<_>>>()?;
            let mut first = None;
            for k in (0..holds.len()).rev() {
                if holds[k].iter().all(|&b| b) {
                    first = Some(k);
                } else {
                    break;
                }
            }
            Ok(EpsilonRow { eps: e, holds, first_index: first })
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ConvergenceReport {
        h,
        limit_perimeter,
        perimeter_gap_monotone: members.windows(2).all(|w| w[1].perimeter_gap <= w[0].perimeter_gap),
        convex_family: family.iter().all(Polygon2D::is_convex),
        members,
        epsilons,
    })
}
