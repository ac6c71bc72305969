//! Assembly of the block-diagonal moment and SOS programs from a coefficient
//! tensor and a sparsity pattern, plus sparse SDPA export and import.

pub mod sdpa;
pub mod tensor;

use std::collections::BTreeMap;

use nalgebra::DMatrix;
use serde::Serialize;

use crate::tsp::BlockPattern;
use tensor::CoefficientTensor;

pub use sdpa::{export_sdpa, parse_sdpa, SdpaProblem};
pub use tensor::{sdp_coefficients, EqualityMode};

/// Symmetric sparse matrix stored as its upper triangle.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseSym {
    pub size: usize,
    /// `(row, col, value)` with `row <= col`, sorted.
    pub entries: Vec<(usize, usize, f64)>,
}

impl SparseSym {
    pub fn new(size: usize) -> Self {
        Self {
            size,
            entries: Vec::new(),
        }
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// `<self, m>` (trace inner product) against a dense symmetric matrix.
    pub fn dot(&self, m: &DMatrix<f64>) -> f64 {
        self.entries
            .iter()
            .map(|&(p, q, v)| if p == q { v * m[(p, p)] } else { v * (m[(p, q)] + m[(q, p)]) })
            .sum()
    }

    /// `m += scale · self`.
    pub fn add_to(&self, m: &mut DMatrix<f64>, scale: f64) {
        for &(p, q, v) in &self.entries {
            m[(p, q)] += scale * v;
            if p != q {
                m[(q, p)] += scale * v;
            }
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.size, self.size);
        self.add_to(&mut m, 1.0);
        m
    }

    /// Squared Frobenius norm of the full symmetric matrix.
    pub fn norm_squared(&self) -> f64 {
        self.entries
            .iter()
            .map(|&(p, q, v)| if p == q { v * v } else { 2.0 * v * v })
            .sum()
    }

    fn push(&mut self, p: usize, q: usize, v: f64) {
        let (p, q) = if p <= q { (p, q) } else { (q, p) };
        self.entries.push((p, q, v));
    }

    fn finish(&mut self) {
        self.entries.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    }
}

/// Role of a pseudomoment `y_j` in the assembled program.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum VarStatus {
    /// `y_1 = 1`, folded into the constant matrices.
    FixedOne,
    /// Position in the free-variable vector.
    Free(usize),
    /// Not referenced by the program; implicitly zero.
    Zeroed,
}

/// One PSD constraint `constant + Σ_v y_v · pencil_v ⪰ 0`.
#[derive(Clone, Debug)]
pub struct SdpBlock {
    pub component: usize,
    pub constraint: usize,
    /// Clique (or connected component) number within `(component, constraint)`.
    pub clique: usize,
    /// Basis positions of the rows within the component basis.
    pub indices: Vec<usize>,
    pub constant: SparseSym,
    /// `(free variable, matrix)`, sorted by variable.
    pub pencil: Vec<(usize, SparseSym)>,
}

impl SdpBlock {
    pub fn size(&self) -> usize {
        self.indices.len()
    }

    /// Evaluates the block at the free-variable vector `y`.
    pub fn evaluate(&self, y: &[f64]) -> DMatrix<f64> {
        let mut m = self.constant.to_dense();
        for (v, a) in &self.pencil {
            a.add_to(&mut m, y[*v]);
        }
        m
    }
}

/// Linear condition `constant + Σ coeffs · y = 0` on the free variables.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearEquality {
    pub constant: f64,
    pub coeffs: Vec<(usize, f64)>,
}

/// Block-diagonal moment program:
/// minimize `objective_constant + objective · y` over the free variables
/// subject to every block being PSD and the linear equalities.
#[derive(Clone, Debug)]
pub struct BlockSdp {
    /// Status of every invariant index `j`.
    pub status: Vec<VarStatus>,
    /// Invariant index of each free variable.
    pub variables: Vec<usize>,
    pub objective_constant: f64,
    pub objective: Vec<f64>,
    pub blocks: Vec<SdpBlock>,
    pub equalities: Vec<LinearEquality>,
}

impl BlockSdp {
    pub fn nfree(&self) -> usize {
        self.variables.len()
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.blocks.iter().map(|b| b.size()).collect()
    }

    pub fn max_block(&self) -> usize {
        self.block_sizes().into_iter().max().unwrap_or(0)
    }

    /// Scalar constraints of the SOS side: one coefficient-matching equation
    /// per free pseudomoment plus one per linear equality.
    pub fn n_scalar_constraints(&self) -> usize {
        self.nfree() + self.equalities.len()
    }

    /// PSD (matrix) constraints.
    pub fn n_matrix_constraints(&self) -> usize {
        self.blocks.len()
    }

    /// Moment objective at the free-variable vector `y`.
    pub fn moment_value(&self, y: &[f64]) -> f64 {
        self.objective_constant + self.objective.iter().zip(y).map(|(f, v)| f * v).sum::<f64>()
    }

    /// Expands free-variable values to all pseudomoments (zeroed ones are 0).
    pub fn full_moments(&self, y: &[f64]) -> Vec<f64> {
        self.status
            .iter()
            .map(|s| match s {
                VarStatus::FixedOne => 1.0,
                VarStatus::Free(v) => y[*v],
                VarStatus::Zeroed => 0.0,
            })
            .collect()
    }

    /// Block layout for reports: `(component, constraint, clique, size)`.
    pub fn layout(&self) -> Vec<BlockLayout> {
        self.blocks
            .iter()
            .map(|b| BlockLayout {
                component: b.component,
                constraint: b.constraint,
                clique: b.clique,
                size: b.size(),
            })
            .collect()
    }
}

/// Serializable block description.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct BlockLayout {
    pub component: usize,
    pub constraint: usize,
    pub clique: usize,
    pub size: usize,
}

/// Dense patterns (every block full) for all `(component, constraint)`.
pub fn dense_patterns(tensor: &CoefficientTensor) -> Vec<Vec<BlockPattern>> {
    tensor
        .blocks
        .iter()
        .map(|row| row.iter().map(|b| BlockPattern::dense(b.size)).collect())
        .collect()
}

/// Assembles the moment program. `patterns` is `patterns[i][k]` from a
/// term-sparsity state, or `None` for the dense relaxation.
pub fn assemble_moment(tensor: &CoefficientTensor, patterns: Option<&[Vec<BlockPattern>]>) -> BlockSdp {
    let dense;
    let patterns = match patterns {
        Some(p) => p,
        None => {
            dense = dense_patterns(tensor);
            &dense
        }
    };

    struct RawBlock {
        component: usize,
        constraint: usize,
        clique: usize,
        indices: Vec<usize>,
        constant: SparseSym,
        pencil: BTreeMap<usize, SparseSym>,
    }

    let mut raw = Vec::new();
    for (i, row) in patterns.iter().enumerate() {
        for (k, pattern) in row.iter().enumerate() {
            let tb = tensor.block(i, k);
            for (c, clique) in pattern.cliques.iter().enumerate() {
                let n = clique.len();
                let mut constant = SparseSym::new(n);
                let mut pencil: BTreeMap<usize, SparseSym> = BTreeMap::new();
                for p in 0..n {
                    for q in p..n {
                        let (a, b) = (clique[p], clique[q]);
                        if !pattern.closed.get(a, b) {
                            continue;
                        }
                        for &(j, v) in &tb.entry(a, b).values {
                            if j == 0 {
                                constant.push(p, q, v);
                            } else {
                                pencil.entry(j).or_insert_with(|| SparseSym::new(n)).push(p, q, v);
                            }
                        }
                    }
                }
                raw.push(RawBlock {
                    component: i,
                    constraint: k,
                    clique: c,
                    indices: clique.clone(),
                    constant,
                    pencil,
                });
            }
        }
    }

    // Free variables: everything referenced by a block, the objective or an
    // equality row, except y_1.
    let mut used = vec![false; tensor.ninv];
    for b in &raw {
        for j in b.pencil.keys() {
            used[*j] = true;
        }
    }
    let objective = tensor.objective_f64();
    for &(j, _) in &objective {
        used[j] = true;
    }
    for eq in &tensor.equalities {
        for row in &eq.rows {
            for &(j, _) in row {
                used[j] = true;
            }
        }
    }
    let mut status = vec![VarStatus::Zeroed; tensor.ninv];
    let mut variables = Vec::new();
    for j in 0..tensor.ninv {
        if j == 0 {
            status[0] = VarStatus::FixedOne;
        } else if used[j] {
            status[j] = VarStatus::Free(variables.len());
            variables.push(j);
        }
    }
    let free = |j: usize| match status[j] {
        VarStatus::Free(v) => v,
        _ => unreachable!("referenced variable is free"),
    };

    let mut objective_constant = 0.0;
    let mut obj = vec![0.0; variables.len()];
    for &(j, v) in &objective {
        if j == 0 {
            objective_constant += v;
        } else {
            obj[free(j)] += v;
        }
    }

    let blocks = raw
        .into_iter()
        .map(|b| {
            let mut constant = b.constant;
            constant.finish();
            let pencil = b
                .pencil
                .into_iter()
                .map(|(j, mut m)| {
                    m.finish();
                    (free(j), m)
                })
                .collect();
            SdpBlock {
                component: b.component,
                constraint: b.constraint,
                clique: b.clique,
                indices: b.indices,
                constant,
                pencil,
            }
        })
        .collect();

    let equalities = tensor
        .equalities
        .iter()
        .flat_map(|eq| eq.rows.iter())
        .map(|row| {
            let mut constant = 0.0;
            let mut coeffs = Vec::new();
            for &(j, v) in row {
                if j == 0 {
                    constant += v;
                } else {
                    coeffs.push((free(j), v));
                }
            }
            LinearEquality { constant, coeffs }
        })
        .collect();

    BlockSdp {
        status,
        variables,
        objective_constant,
        objective: obj,
        blocks,
        equalities,
    }
}

/// SOS side of a [`BlockSdp`]: Gram matrices `Q_b ⪰ 0` (one per block, with
/// the block's mask) and equality multipliers `t` such that for every free
/// pseudomoment `v`
/// `f_v = Σ_b <A_{b,v}, Q_b> + Σ_e t_e · E_{e,v}`;
/// the certified bound is `f_1 - Σ_b <A_{b,1}, Q_b> - Σ_e t_e · E_{e,1}`.
#[derive(Clone, Debug)]
pub struct SosProgram {
    pub block_sizes: Vec<usize>,
    pub targets: Vec<f64>,
    pub constant: f64,
    sdp: BlockSdp,
}

/// Builds the SOS program with the same blocks as [`assemble_moment`].
pub fn assemble_sos(tensor: &CoefficientTensor, patterns: Option<&[Vec<BlockPattern>]>) -> SosProgram {
    SosProgram::from_moment(assemble_moment(tensor, patterns))
}

impl SosProgram {
    pub fn from_moment(sdp: BlockSdp) -> Self {
        Self {
            block_sizes: sdp.block_sizes(),
            targets: sdp.objective.clone(),
            constant: sdp.objective_constant,
            sdp,
        }
    }

    /// Bound certified by `(grams, multipliers)`.
    pub fn value(&self, grams: &[DMatrix<f64>], multipliers: &[f64]) -> f64 {
        let mut v = self.constant;
        for (b, q) in self.sdp.blocks.iter().zip(grams) {
            v -= b.constant.dot(q);
        }
        for (e, t) in self.sdp.equalities.iter().zip(multipliers) {
            v -= t * e.constant;
        }
        v
    }

    /// Largest absolute violation of the coefficient-matching equations.
    pub fn residual(&self, grams: &[DMatrix<f64>], multipliers: &[f64]) -> f64 {
        let mut r = self.targets.clone();
        for (b, q) in self.sdp.blocks.iter().zip(grams) {
            for (v, a) in &b.pencil {
                r[*v] -= a.dot(q);
            }
        }
        for (e, t) in self.sdp.equalities.iter().zip(multipliers) {
            for &(v, c) in &e.coeffs {
                r[v] -= t * c;
            }
        }
        r.iter().fold(0.0, |m, x| m.max(x.abs()))
    }
}

/// Complementarity gap `Σ_b trace(M_b(y) · Q_b)`; equals moment value minus
/// SOS value for a feasible pair.
pub fn duality_gap(sdp: &BlockSdp, y: &[f64], grams: &[DMatrix<f64>]) -> f64 {
    sdp.blocks.iter().zip(grams).map(|(b, q)| b.evaluate(y).dot(q)).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{builtin_irreps, GroupSpec};
    use crate::polyring::parse_polynomial;
    use crate::sabasis::symmetry_adapted_basis;
    use crate::tsp::{TspConfig, TspState};

    fn toy() -> BlockSdp {
        let spec = GroupSpec::Trivial { n: 1 };
        let g = spec.group().unwrap();
        let irreps = builtin_irreps(&spec, &g).unwrap();
        let basis = symmetry_adapted_basis(&g, &irreps, 1).unwrap();
        let f = parse_polynomial("x1^2", 1).unwrap();
        let t = sdp_coefficients(&f, &[], &[], EqualityMode::Pair, &basis).unwrap();
        assemble_moment(&t, None)
    }

    #[test]
    fn toy_moment_matrix() {
        let sdp = toy();
        assert_eq!(sdp.block_sizes(), vec![2]);
        assert_eq!(sdp.variables, vec![1, 2]);
        assert_eq!(sdp.objective, vec![0.0, 1.0]);
        let m = sdp.blocks[0].evaluate(&[0.5, 2.0]);
        assert_eq!(m, DMatrix::from_row_slice(2, 2, &[1.0, 0.5, 0.5, 2.0]));
        let q = DMatrix::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 1.0]);
        let sos = SosProgram::from_moment(sdp.clone());
        assert_eq!(sos.value(&[q.clone()], &[]), 0.0);
        assert_eq!(sos.residual(&[q.clone()], &[]), 0.0);
        assert_eq!(duality_gap(&sdp, &[0.0, 0.0], &[q]), 0.0);
    }

    #[test]
    fn sparse_blocks_respect_mask() {
        let spec = GroupSpec::Symmetric { n: 3 };
        let g = spec.group().unwrap();
        let irreps = builtin_irreps(&spec, &g).unwrap();
        let basis = symmetry_adapted_basis(&g, &irreps, 2).unwrap();
        let f = parse_polynomial("x1^4 + x2^4 + x3^4 + x1*x2 + x1*x3 + x2*x3 + x1 + x2 + x3 + 1", 3).unwrap();
        let t = sdp_coefficients(&f, &[], &[], EqualityMode::Pair, &basis).unwrap();
        let mut st = TspState::new(&t, TspConfig::default());
        st.step(&t);
        let sdp = assemble_moment(&t, Some(&st.patterns));
        for b in &sdp.blocks {
            let pat = &st.patterns[b.component][b.constraint];
            for (_, a) in &b.pencil {
                for &(p, q, _) in &a.entries {
                    assert!(pat.closed.get(b.indices[p], b.indices[q]));
                }
            }
        }
        let sos = assemble_sos(&t, Some(&st.patterns));
        assert_eq!(sos.block_sizes, sdp.block_sizes());
    }
}
