//! Coefficient matrices `A^{(i)}_{k,j}`: the coordinates of
//! `R(w_a · w_b · g_k)` in the orbit-sum basis for every component `i`,
//! constraint `k` and pair of basis elements `(a, b)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::polyring::{Coeff, Polynomial, Rational};
use crate::sabasis::{express_invariant, ComponentPolys, SymmetryAdaptedBasis};

/// How an equality constraint `h = 0` enters the relaxation.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EqualityMode {
    /// As the pair of inequalities `h >= 0` and `-h >= 0`.
    #[default]
    Pair,
    /// As linear conditions `L(h · w) = 0` for every invariant `w` of degree
    /// at most `2r - deg h` (a free polynomial multiplier on the SOS side).
    FreeMultiplier,
}

/// A localizing constraint `g_k >= 0`; index 0 is always `g_0 = 1`.
#[derive(Clone, Debug)]
pub struct ConstraintData {
    pub poly: Polynomial,
    /// `d_k = ceil(deg g_k / 2)`.
    pub half_degree: usize,
    /// Coordinates of `g_k` in the orbit-sum basis.
    pub coords: Vec<(usize, Rational)>,
}

/// Linear conditions from an equality constraint in free-multiplier mode.
#[derive(Clone, Debug)]
pub struct EqualityData {
    pub poly: Polynomial,
    /// One row per multiplier orbit sum: coordinates of `h · w`.
    pub rows: Vec<Vec<(usize, f64)>>,
}

/// Coordinates of one matrix entry.
#[derive(Clone, Debug, Default)]
pub struct EntryCoords {
    pub values: Vec<(usize, f64)>,
    /// Exact coordinates when the component basis is exact.
    pub exact: Option<Vec<(usize, Rational)>>,
}

impl EntryCoords {
    /// Invariant indices with a nonzero coefficient.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().map(|(j, _)| *j)
    }
}

/// Symmetric matrix of entry coordinates for one `(component, constraint)`.
#[derive(Clone, Debug)]
pub struct TensorBlock {
    pub size: usize,
    /// Upper triangle in row-major order.
    entries: Vec<EntryCoords>,
}

impl TensorBlock {
    fn offset(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        a * self.size - a * (a + 1) / 2 + b
    }

    pub fn entry(&self, a: usize, b: usize) -> &EntryCoords {
        &self.entries[self.offset(a, b)]
    }
}

/// All data needed to assemble the symmetry-adapted relaxation of order `r`.
#[derive(Clone, Debug)]
pub struct CoefficientTensor {
    pub order: usize,
    /// Number of orbit sums of degree at most `2r` (pseudomoment count).
    pub ninv: usize,
    pub objective: Vec<(usize, Rational)>,
    pub constraints: Vec<ConstraintData>,
    pub equalities: Vec<EqualityData>,
    /// `blocks[i][k]`.
    pub blocks: Vec<Vec<TensorBlock>>,
}

impl CoefficientTensor {
    pub fn objective_f64(&self) -> Vec<(usize, f64)> {
        self.objective.iter().map(|(j, c)| (*j, c.to_f64())).collect()
    }

    pub fn ncomponents(&self) -> usize {
        self.blocks.len()
    }

    pub fn nconstraints(&self) -> usize {
        self.constraints.len()
    }

    pub fn block(&self, i: usize, k: usize) -> &TensorBlock {
        &self.blocks[i][k]
    }
}

/// Smallest admissible order `max(ceil(deg f / 2), d_1, …)`.
pub fn min_order(objective: &Polynomial, constraints: &[Polynomial]) -> usize {
    let half = |p: &Polynomial| p.degree().div_ceil(2);
    constraints.iter().map(half).fold(half(objective), usize::max)
}

/// Computes the coefficient tensor. `inequalities` are `g_k >= 0`,
/// `equalities` are `h = 0` handled according to `mode`.
pub fn sdp_coefficients(
    objective: &Polynomial,
    inequalities: &[Polynomial],
    equalities: &[Polynomial],
    mode: EqualityMode,
    basis: &SymmetryAdaptedBasis,
) -> Result<CoefficientTensor> {
    let r = basis.order;
    let all: Vec<Polynomial> = inequalities.iter().chain(equalities).cloned().collect();
    let rmin = min_order(objective, &all);
    if r < rmin {
        return Err(Error::Order {
            order: r,
            min_order: rmin,
        });
    }
    let inv = &basis.invariant;
    let objective_coords = express_invariant(objective, inv)?.sparse();

    let mut localizing = vec![Polynomial::one(basis.nvars())];
    localizing.extend(inequalities.iter().cloned());
    if mode == EqualityMode::Pair {
        for h in equalities {
            localizing.push(h.clone());
            localizing.push(-h);
        }
    }
    let constraints = localizing
        .into_iter()
        .map(|g| {
            let coords = express_invariant(&g, inv)?.sparse();
            Ok(ConstraintData {
                half_degree: g.degree().div_ceil(2),
                poly: g,
                coords,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let eqs = if mode == EqualityMode::FreeMultiplier {
        equalities
            .iter()
            .map(|h| {
                express_invariant(h, inv)?;
                let rows = (0..inv.len())
                    .filter(|&j| inv.degree(j) + h.degree() <= 2 * r)
                    .map(|j| inv.reynolds_coordinates(&(h * inv.element(j))).map(to_f64_coords))
                    .collect::<Result<Vec<_>>>()?;
                Ok(EqualityData { poly: h.clone(), rows })
            })
            .collect::<Result<Vec<_>>>()?
    } else {
        Vec::new()
    };

    let blocks = basis
        .components
        .par_iter()
        .map(|comp| {
            constraints
                .iter()
                .map(|g| {
                    let size = comp.count_up_to(r - g.half_degree);
                    let pairs: Vec<(usize, usize)> = (0..size).flat_map(|a| (a..size).map(move |b| (a, b))).collect();
                    let entries = pairs
                        .par_iter()
                        .map(|&(a, b)| match &comp.polys {
                            ComponentPolys::Exact(p) => {
                                let prod = &(&p[a] * &p[b]) * &g.poly;
                                let exact = inv.reynolds_coordinates(&prod)?;
                                Ok(EntryCoords {
                                    values: to_f64_coords(exact.clone()),
                                    exact: Some(exact),
                                })
                            }
                            ComponentPolys::Numeric(p) => {
                                let gf = g.poly.to_f64();
                                let prod = &(&p[a] * &p[b]) * &gf;
                                Ok(EntryCoords {
                                    values: inv.reynolds_coordinates(&prod)?,
                                    exact: None,
                                })
                            }
                        })
                        .collect::<Result<Vec<_>>>()?;
                    Ok(TensorBlock { size, entries })
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(CoefficientTensor {
        order: r,
        ninv: inv.len(),
        objective: objective_coords,
        constraints,
        equalities: eqs,
        blocks,
    })
}

fn to_f64_coords<C: Coeff>(coords: Vec<(usize, C)>) -> Vec<(usize, f64)> {
    coords.into_iter().map(|(j, c)| (j, c.to_f64())).collect()
}

/// Rebuilds `Σ_j A_j[a, b] · w_j` from exact coordinates.
pub fn reconstruct_entry(tensor: &CoefficientTensor, basis: &SymmetryAdaptedBasis, i: usize, k: usize, a: usize, b: usize) -> Option<Polynomial> {
    let exact = tensor.block(i, k).entry(a, b).exact.as_ref()?;
    Some(basis.invariant.combine(exact))
}
