//! Presolve for the moment program.
//!
//! 1. Pairs of opposite blocks (`M ⪰ 0` and `-M ⪰ 0`, from an equality
//!    written as two inequalities) become the linear equalities `M = 0`.
//! 2. Linear equalities are eliminated: `y = offset + N z`.
//! 3. Facial reduction: when equalities leave the moment blocks without a
//!    strictly feasible point, an auxiliary SDP finds `W ⪰ 0` orthogonal to
//!    the affine moment space; every feasible moment matrix then satisfies
//!    `M W = 0`, so the block is restricted to `ker W` and `M · range(W) = 0`
//!    is added to the equalities.
//! 4. Directions that reach no block are dropped (the objective must vanish
//!    on them) and the remaining pencils are orthonormalized.

use std::collections::BTreeMap;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};

use super::{run_ipm, SolveStatus, SolverConfig, Standard};
use crate::sdpbuild::{BlockSdp, SdpBlock, SparseSym};

const RANK_TOL: f64 = 1e-10;
/// Rank tolerance once rows computed from a numerical face are present.
const FACE_RANK_TOL: f64 = 1e-7;
const MAX_FACIAL_ROUNDS: usize = 4;
/// Relative eigenvalue threshold separating `range(W)` from its kernel.
const FACE_EIG_TOL: f64 = 1e-5;

pub(super) enum Reduced {
    /// The objective decreases along a direction invisible to every block,
    /// or the equalities are inconsistent.
    Infeasible,
    Problem(ReducedProblem),
}

/// Blocks `plus` and `minus = -plus`; together they force `plus = 0`.
struct OppositePair {
    plus: usize,
    minus: usize,
    /// First row of the pair in the equality matrix; one row per upper
    /// triangle entry of `plus`.
    first_row: usize,
}

/// A block still constrained to be PSD, possibly restricted to a face.
#[derive(Clone)]
struct WorkBlock {
    orig: usize,
    /// Columns spanning the face in the original block coordinates; `None`
    /// for the whole block.
    basis: Option<DMatrix<f64>>,
    constant: SparseSym,
    /// Pencil in the original free variables.
    pencil: Vec<(usize, SparseSym)>,
}

impl WorkBlock {
    fn size(&self) -> usize {
        self.constant.size
    }
}

type Row = (f64, Vec<(usize, f64)>);

pub(super) struct ReducedProblem {
    pub constant: f64,
    /// Original index of every block kept as a PSD constraint.
    pub kept: Vec<usize>,
    /// Face basis of every kept block (`None` for the whole block).
    bases: Vec<Option<DMatrix<f64>>>,
    /// Constant matrix of every kept block.
    pub constants: Vec<SparseSym>,
    /// `pencils[kept block]`: `(variable, matrix)`.
    pub pencils: Vec<Vec<(usize, SparseSym)>>,
    pub objective: Vec<f64>,
    /// `y = offset + transform · u`; `None` means `y = u`.
    transform: Option<(DVector<f64>, DMatrix<f64>)>,
    pairs: Vec<OppositePair>,
    /// All equality rows (user equalities, pair rows, face rows).
    equality_matrix: DMatrix<f64>,
}

impl ReducedProblem {
    pub fn lift(&self, u: &[f64]) -> Vec<f64> {
        match &self.transform {
            None => u.to_vec(),
            Some((offset, t)) => (offset + t * DVector::from_column_slice(u)).iter().copied().collect(),
        }
    }

    /// Sizes of the PSD blocks actually solved.
    pub fn sizes(&self) -> Vec<usize> {
        self.constants.iter().map(|c| c.size).collect()
    }

    /// Gram matrices of every original block: the kept ones from `grams`
    /// (mapped back from their face), the opposite pairs from the equality
    /// multipliers that balance the objective, split into positive and
    /// negative parts.
    pub fn expand_grams(&self, sdp: &BlockSdp, grams: Vec<DMatrix<f64>>) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = sdp.blocks.iter().map(|b| DMatrix::zeros(b.size(), b.size())).collect();
        let mut residual = DVector::from_column_slice(&sdp.objective);
        for ((k, g), basis) in self.kept.iter().zip(grams).zip(&self.bases) {
            let g = match basis {
                None => g,
                Some(u) => u * g * u.transpose(),
            };
            for (v, a) in &sdp.blocks[*k].pencil {
                residual[*v] -= a.dot(&g);
            }
            out[*k] = g;
        }
        if self.pairs.is_empty() {
            return out;
        }
        // Least-squares multipliers λ with Eᵀ λ = residual.
        let et = self.equality_matrix.transpose();
        let lambda = SVD::new(et, true, true)
            .solve(&residual, 1e-12)
            .unwrap_or_else(|_| DVector::zeros(self.equality_matrix.nrows()));
        for pair in &self.pairs {
            let n = sdp.blocks[pair.plus].size();
            let mut w = DMatrix::zeros(n, n);
            let mut row = pair.first_row;
            for p in 0..n {
                for q in p..n {
                    if p == q {
                        w[(p, p)] = lambda[row];
                    } else {
                        w[(p, q)] = lambda[row] / 2.0;
                        w[(q, p)] = lambda[row] / 2.0;
                    }
                    row += 1;
                }
            }
            let eig = SymmetricEigen::new(w);
            let pos = eig.eigenvalues.map(|l| l.max(0.0));
            let neg = eig.eigenvalues.map(|l| (-l).max(0.0));
            let v = &eig.eigenvectors;
            out[pair.plus] = v * DMatrix::from_diagonal(&pos) * v.transpose();
            out[pair.minus] = v * DMatrix::from_diagonal(&neg) * v.transpose();
        }
        out
    }
}

/// Gram matrix `<A_v, A_w>` of the pencils summed over the given blocks.
fn pencil_gram<'a>(m: usize, pencils: impl Iterator<Item = &'a Vec<(usize, SparseSym)>>) -> DMatrix<f64> {
    let mut g = DMatrix::zeros(m, m);
    for pencil in pencils {
        let mut at: BTreeMap<(usize, usize), Vec<(usize, f64)>> = BTreeMap::new();
        for (v, a) in pencil {
            for &(p, q, x) in &a.entries {
                at.entry((p, q)).or_default().push((*v, x));
            }
        }
        for ((p, q), list) in at {
            let w = if p == q { 1.0 } else { 2.0 };
            for &(v, x) in &list {
                for &(u, z) in &list {
                    g[(v, u)] += w * x * z;
                }
            }
        }
    }
    g
}

fn full_rank(g: &DMatrix<f64>) -> bool {
    let Some(ch) = Cholesky::new(g.clone()) else {
        return false;
    };
    let l = ch.l();
    (0..g.nrows()).all(|i| l[(i, i)] * l[(i, i)] > RANK_TOL * g[(i, i)].max(f64::MIN_POSITIVE))
}

fn opposite_sparse(a: &SparseSym, b: &SparseSym) -> bool {
    a.entries.len() == b.entries.len()
        && a.entries
            .iter()
            .zip(&b.entries)
            .all(|(x, y)| x.0 == y.0 && x.1 == y.1 && (x.2 + y.2).abs() <= 1e-12 * x.2.abs().max(1.0))
}

fn opposite(a: &SdpBlock, b: &SdpBlock) -> bool {
    a.size() == b.size()
        && opposite_sparse(&a.constant, &b.constant)
        && a.pencil.len() == b.pencil.len()
        && a.pencil.iter().zip(&b.pencil).all(|(x, y)| x.0 == y.0 && opposite_sparse(&x.1, &y.1))
}

/// Matches every block with a later block equal to its negative.
fn find_opposite_pairs(sdp: &BlockSdp) -> Vec<(usize, usize)> {
    let mut used = vec![false; sdp.blocks.len()];
    let mut pairs = Vec::new();
    for i in 0..sdp.blocks.len() {
        if used[i] {
            continue;
        }
        for j in i + 1..sdp.blocks.len() {
            if !used[j] && opposite(&sdp.blocks[i], &sdp.blocks[j]) {
                used[i] = true;
                used[j] = true;
                pairs.push((i, j));
                break;
            }
        }
    }
    pairs
}

/// Rows `at(constant + Σ y_v pencil_v, r) = 0` for `r < npq`.
fn matrix_rows(constant: &DMatrix<f64>, pencil: &[(usize, DMatrix<f64>)], npq: usize, at: impl Fn(&DMatrix<f64>, usize) -> f64) -> Vec<Row> {
    (0..npq)
        .map(|r| {
            let coeffs = pencil
                .iter()
                .map(|(v, a)| (*v, at(a, r)))
                .filter(|(_, x)| *x != 0.0)
                .collect();
            (at(constant, r), coeffs)
        })
        .collect()
}

fn equality_matrix(rows: &[Row], m: usize) -> (DMatrix<f64>, DVector<f64>) {
    let mut e = DMatrix::<f64>::zeros(rows.len(), m);
    let mut e0 = DVector::<f64>::zeros(rows.len());
    for (r, (c, coeffs)) in rows.iter().enumerate() {
        e0[r] = *c;
        for &(v, x) in coeffs {
            e[(r, v)] += x;
        }
    }
    (e, e0)
}

/// `y = offset + null · z` parametrizes the solutions of the rows; `None`
/// when they are inconsistent.
fn eliminate(rows: &[Row], m: usize, tol: f64) -> Option<(DVector<f64>, DMatrix<f64>)> {
    if rows.is_empty() {
        return Some((DVector::zeros(m), DMatrix::identity(m, m)));
    }
    let (e, e0) = equality_matrix(rows, m);
    // Pad to at least m rows so the SVD returns a full right basis.
    let nrows = rows.len().max(m);
    let mut ep = DMatrix::<f64>::zeros(nrows, m);
    ep.rows_mut(0, rows.len()).copy_from(&e);
    let mut e0p = DVector::<f64>::zeros(nrows);
    e0p.rows_mut(0, rows.len()).copy_from(&e0);
    let svd = SVD::new(ep.clone(), true, true);
    let (u, vt) = (svd.u.expect("requested"), svd.v_t.expect("requested"));
    let smax = svd.singular_values.max().max(1.0);
    let cut = rank_cut(svd.singular_values.as_slice(), smax, tol);
    let mut offset = DVector::<f64>::zeros(m);
    let mut null_cols = Vec::new();
    for (i, &s) in svd.singular_values.iter().enumerate() {
        let v = vt.row(i).transpose();
        if s > cut {
            offset -= &v * (u.column(i).dot(&e0p) / s);
        } else {
            null_cols.push(v);
        }
    }
    let resid = (&ep * &offset + &e0p).norm();
    let dropped = svd.singular_values.iter().copied().filter(|&s| s <= cut).fold(0.0, f64::max);
    if resid > tol.max(1e-8).max(10.0 * dropped) * (1.0 + e0p.norm() + offset.norm()) {
        return None;
    }
    let null = if null_cols.is_empty() { DMatrix::zeros(m, 0) } else { DMatrix::from_columns(&null_cols) };
    Some((offset, null))
}

/// Singular value threshold: `tol * smax`, raised into a gap of more than
/// three decades below `1e-3 * smax`. Face rows built from an approximate
/// exposing matrix carry errors of that size which are not genuine rank.
fn rank_cut(sv: &[f64], smax: f64, tol: f64) -> f64 {
    let floor = tol * smax;
    let mut sorted: Vec<f64> = sv.iter().copied().filter(|&s| s > floor).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut best = (1e3, floor);
    for w in sorted.windows(2) {
        if w[1] < 1e-3 * smax && w[0] / w[1] > best.0 {
            best = (w[0] / w[1], w[1] * (w[0] / w[1]).sqrt());
        }
    }
    best.1
}

/// Directions of `null` that reach some block, scaled so the reduced pencils
/// are orthonormal; `None` if the objective varies along an invisible one.
fn visible_directions(gram: &DMatrix<f64>, null: &DMatrix<f64>, f: &DVector<f64>) -> Option<DMatrix<f64>> {
    let gz = null.transpose() * gram * null;
    let cz = null.transpose() * f;
    let eig = SymmetricEigen::new(gz);
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut keep = Vec::new();
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        let v = eig.eigenvectors.column(i).into_owned();
        if l > RANK_TOL * lmax && lmax > 0.0 {
            keep.push(v / l.sqrt());
        } else if v.dot(&cz).abs() > 1e-9 * (1.0 + cz.norm()) {
            return None;
        }
    }
    let w = if keep.is_empty() { DMatrix::zeros(null.ncols(), 0) } else { DMatrix::from_columns(&keep) };
    Some(null * w)
}

/// Constants at `offset` and pencils along the columns of `t`.
fn transformed(blocks: &[WorkBlock], offset: &DVector<f64>, t: &DMatrix<f64>) -> (Vec<SparseSym>, Vec<Vec<(usize, SparseSym)>>) {
    let p = t.ncols();
    let mut constants = Vec::with_capacity(blocks.len());
    let mut pencils = Vec::with_capacity(blocks.len());
    for b in blocks {
        let n = b.size();
        let mut c = b.constant.to_dense();
        for (v, a) in &b.pencil {
            a.add_to(&mut c, offset[*v]);
        }
        constants.push(dense_to_sparse(&c));
        let mut pen = Vec::new();
        for l in 0..p {
            let mut d = DMatrix::zeros(n, n);
            for (v, a) in &b.pencil {
                let coef = t[(*v, l)];
                if coef != 0.0 {
                    a.add_to(&mut d, coef);
                }
            }
            let s = dense_to_sparse(&d);
            if s.nnz() > 0 {
                pen.push((l, s));
            }
        }
        pencils.push(pen);
    }
    (constants, pencils)
}

/// Looks for `W ⪰ 0`, `tr W = 1`, orthogonal to every constant and pencil.
/// Returns per block the orthonormal range of `W` (empty when `W_b = 0`).
fn find_face(constants: &[SparseSym], pencils: &[Vec<(usize, SparseSym)>], p: usize) -> Option<Vec<DMatrix<f64>>> {
    let nb = constants.len();
    let sizes: Vec<usize> = constants.iter().map(|c| c.size).collect();
    if sizes.iter().all(|&n| n == 0) {
        return None;
    }
    // Constraint matrices: the pencils (orthonormal), the constant and the
    // identity, each orthogonalized against the previous ones; a matrix in
    // the span of the previous ones adds nothing, and the identity in that
    // span rules out any W.
    let dense = |s: &SparseSym| s.to_dense();
    let mut basis: Vec<Vec<DMatrix<f64>>> = vec![sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect(); p];
    for (k, pen) in pencils.iter().enumerate() {
        for (l, a) in pen {
            basis[*l][k] = dense(a);
        }
    }
    let dot = |a: &[DMatrix<f64>], b: &[DMatrix<f64>]| a.iter().zip(b).map(|(x, y)| x.dot(y)).sum::<f64>();
    let mut ortho: Vec<Vec<DMatrix<f64>>> = Vec::new();
    let push = |mut v: Vec<DMatrix<f64>>, ortho: &mut Vec<Vec<DMatrix<f64>>>| -> bool {
        let n0 = dot(&v, &v).sqrt();
        for _ in 0..2 {
            for o in ortho.iter() {
                let c = dot(&v, o);
                for (x, y) in v.iter_mut().zip(o) {
                    *x -= y * c;
                }
            }
        }
        let n1 = dot(&v, &v).sqrt();
        if n1 <= 1e-9 * n0.max(1e-300) {
            return false;
        }
        for x in &mut v {
            *x /= n1;
        }
        ortho.push(v);
        true
    };
    for v in basis {
        push(v, &mut ortho);
    }
    push(constants.iter().map(dense).collect(), &mut ortho);
    let nzero = ortho.len();
    let identity: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::identity(n, n)).collect();
    if !push(identity.clone(), &mut ortho) {
        return None;
    }
    ortho.pop();

    let to_sparse_rows = |mats: &[DMatrix<f64>]| -> Vec<(usize, SparseSym)> {
        mats.iter()
            .enumerate()
            .map(|(k, m)| (k, dense_to_sparse(m)))
            .filter(|(_, s)| s.nnz() > 0)
            .collect()
    };
    let mut a: Vec<Vec<(usize, SparseSym)>> = ortho.iter().map(|v| to_sparse_rows(v)).collect();
    a.push(to_sparse_rows(&identity));
    let mut b = vec![0.0; nzero];
    b.push(1.0);
    let c: Vec<DMatrix<f64>> = sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
    let std = Standard::new(sizes.clone(), c, a, b);
    let cfg = SolverConfig {
        feasibility_tol: 1e-13,
        gap_tol: 1e-13,
        ..SolverConfig::default()
    };
    let out = run_ipm(&std, &cfg);
    if !matches!(out.status, SolveStatus::Optimal | SolveStatus::SlowProgress | SolveStatus::NumericalError | SolveStatus::IterationLimit) || !(out.pinf < 1e-7) {
        return None;
    }

    // Ranks from the eigenvalue gap, then alternating projections between
    // the orthogonal complement of the moment space and the matrices of
    // those ranks remove the residual of the interior-point solution.
    let lmax = out
        .it
        .x
        .iter()
        .flat_map(|x| SymmetricEigen::new(x.clone()).eigenvalues.iter().copied().collect::<Vec<_>>())
        .fold(0.0, f64::max);
    if !(lmax > 0.0) {
        return None;
    }
    let ranks: Vec<usize> = out
        .it
        .x
        .iter()
        .map(|x| SymmetricEigen::new(x.clone()).eigenvalues.iter().filter(|&&l| l > FACE_EIG_TOL * lmax).count())
        .collect();
    let truncate = |w: &[DMatrix<f64>]| -> (Vec<DMatrix<f64>>, Vec<DMatrix<f64>>) {
        let mut low = Vec::with_capacity(nb);
        let mut ranges = Vec::with_capacity(nb);
        for (x, &r) in w.iter().zip(&ranks) {
            let n = x.nrows();
            let e = SymmetricEigen::new(x.clone());
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&a, &b| e.eigenvalues[b].total_cmp(&e.eigenvalues[a]));
            let cols: Vec<DVector<f64>> = order[..r].iter().map(|&i| e.eigenvectors.column(i).into_owned()).collect();
            let mut t = DMatrix::zeros(n, n);
            for &i in &order[..r] {
                let v = e.eigenvectors.column(i);
                t += &v * v.transpose() * e.eigenvalues[i].max(0.0);
            }
            low.push(t);
            ranges.push(if cols.is_empty() { DMatrix::zeros(n, 0) } else { DMatrix::from_columns(&cols) });
        }
        (low, ranges)
    };
    let residual = |w: &[DMatrix<f64>]| ortho[..nzero].iter().map(|o| dot(o, w).abs()).fold(0.0, f64::max);
    let (mut w, mut ranges) = truncate(&out.it.x);
    // Gauss-Newton on the matrices of the detected ranks: the tangent space
    // also moves the ranges, which plain alternating projections cannot do
    // when some conditions are only satisfied through the ranges.
    for _ in 0..100 {
        let tr: f64 = w.iter().map(|x| x.trace()).sum();
        let res = residual(&w);
        if res <= 1e-15 * tr {
            break;
        }
        let Some(step) = rank_newton_step(&ortho[..nzero], &w, &ranges) else {
            break;
        };
        // Backtrack when the retraction overshoots.
        let mut accepted = None;
        let mut scale = 1.0;
        for _ in 0..8 {
            let next: Vec<DMatrix<f64>> = w.iter().zip(&step).map(|(x, d)| x + d * scale).collect();
            let (nw, nr) = truncate(&next);
            if residual(&nw) < res {
                accepted = Some((nw, nr));
                break;
            }
            scale *= 0.5;
        }
        let Some((nw, nr)) = accepted else {
            break;
        };
        (w, ranges) = (nw, nr);
    }
    let tr: f64 = w.iter().map(|x| x.trace()).sum();
    if !(residual(&w) <= 1e-13 * tr) {
        return None;
    }
    Some(ranges)
}

fn face_rows(c: &DMatrix<f64>, pencil: &[(usize, DMatrix<f64>)], v: &DMatrix<f64>) -> Vec<Row> {
    let n = c.nrows();
    let cv = c * v;
    let pv: Vec<(usize, DMatrix<f64>)> = pencil.iter().map(|(j, a)| (*j, a * v)).collect();
    matrix_rows(&cv, &pv, n * v.ncols(), |a, k| a[(k % n, k / n)])
}

/// Minimum-norm tangent step at `w` (ranges `v`) zeroing the linearized
/// inner products with `conds`. Tangent directions are `V M Vᵀ` plus
/// `Q N Vᵀ + V Nᵀ Qᵀ` with `Q` the orthonormal complement of `V`.
fn rank_newton_step(conds: &[Vec<DMatrix<f64>>], w: &[DMatrix<f64>], v: &[DMatrix<f64>]) -> Option<Vec<DMatrix<f64>>> {
    let comps: Vec<DMatrix<f64>> = v
        .iter()
        .map(|vk| {
            let n = vk.nrows();
            let e = SymmetricEigen::new(DMatrix::identity(n, n) - vk * vk.transpose());
            let cols: Vec<DVector<f64>> = (0..n).filter(|&i| e.eigenvalues[i] > 0.5).map(|i| e.eigenvectors.column(i).into_owned()).collect();
            if cols.is_empty() {
                DMatrix::zeros(n, 0)
            } else {
                DMatrix::from_columns(&cols)
            }
        })
        .collect();
    // Coordinates: (block, kind, p, q); kind 0 is the symmetric M with
    // p <= q (off-diagonal weight sqrt 2), kind 1 is N.
    let mut coords = Vec::new();
    for (k, vk) in v.iter().enumerate() {
        let r = vk.ncols();
        for p in 0..r {
            for q in p..r {
                coords.push((k, 0u8, p, q));
            }
        }
        for p in 0..comps[k].ncols() {
            for q in 0..r {
                coords.push((k, 1u8, p, q));
            }
        }
    }
    if coords.is_empty() {
        return None;
    }
    let sqrt2 = std::f64::consts::SQRT_2;
    let mut jac = DMatrix::zeros(conds.len(), coords.len());
    let mut rhs = DVector::zeros(conds.len());
    for (i, o) in conds.iter().enumerate() {
        let vov: Vec<DMatrix<f64>> = o.iter().zip(v).map(|(x, vk)| vk.transpose() * x * vk).collect();
        let qov: Vec<DMatrix<f64>> = o.iter().zip(v).zip(&comps).map(|((x, vk), qk)| qk.transpose() * x * vk).collect();
        for (j, &(k, kind, p, q)) in coords.iter().enumerate() {
            jac[(i, j)] = match (kind, p == q) {
                (0, true) => vov[k][(p, p)],
                (0, false) => sqrt2 * vov[k][(p, q)],
                _ => sqrt2 * qov[k][(p, q)],
            };
        }
        rhs[i] = -o.iter().zip(w).map(|(x, y)| x.dot(y)).sum::<f64>();
    }
    // Minimum-norm solution through the small Gram matrix J Jᵀ.
    let eig = SymmetricEigen::new(&jac * jac.transpose());
    let lmax = eig.eigenvalues.iter().copied().fold(0.0, f64::max);
    let mut coef = DVector::zeros(conds.len());
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 1e-20 * lmax {
            let u = eig.eigenvectors.column(i);
            coef += u * (u.dot(&rhs) / l);
        }
    }
    let delta = jac.tr_mul(&coef);
    let mut out: Vec<DMatrix<f64>> = w.iter().map(|x| DMatrix::zeros(x.nrows(), x.ncols())).collect();
    let mut ms: Vec<DMatrix<f64>> = v.iter().map(|vk| DMatrix::zeros(vk.ncols(), vk.ncols())).collect();
    let mut ns: Vec<DMatrix<f64>> = v.iter().zip(&comps).map(|(vk, qk)| DMatrix::zeros(qk.ncols(), vk.ncols())).collect();
    for (j, &(k, kind, p, q)) in coords.iter().enumerate() {
        match (kind, p == q) {
            (0, true) => ms[k][(p, p)] = delta[j],
            (0, false) => {
                ms[k][(p, q)] = delta[j] / sqrt2;
                ms[k][(q, p)] = delta[j] / sqrt2;
            }
            _ => ns[k][(p, q)] = delta[j] / sqrt2,
        }
    }
    for k in 0..w.len() {
        let qn = &comps[k] * &ns[k];
        let cross = &qn * v[k].transpose();
        out[k] = &v[k] * &ms[k] * v[k].transpose() + &cross + cross.transpose();
    }
    Some(out)
}

pub(super) fn reduce(sdp: &BlockSdp) -> Reduced {
    let m = sdp.nfree();
    let pair_list = find_opposite_pairs(sdp);
    let mut in_pair = vec![false; sdp.blocks.len()];
    for &(i, j) in &pair_list {
        in_pair[i] = true;
        in_pair[j] = true;
    }
    let mut blocks: Vec<WorkBlock> = (0..sdp.blocks.len())
        .filter(|&k| !in_pair[k])
        .map(|k| WorkBlock {
            orig: k,
            basis: None,
            constant: sdp.blocks[k].constant.clone(),
            pencil: sdp.blocks[k].pencil.clone(),
        })
        .collect();

    // Equality rows: user equalities, then every upper-triangle entry of the
    // `plus` block of each pair.
    let mut rows: Vec<Row> = sdp.equalities.iter().map(|e| (e.constant, e.coeffs.clone())).collect();
    let mut pairs = Vec::with_capacity(pair_list.len());
    for &(plus, minus) in &pair_list {
        let b = &sdp.blocks[plus];
        let n = b.size();
        let idx: Vec<(usize, usize)> = (0..n).flat_map(|p| (p..n).map(move |q| (p, q))).collect();
        let pencil: Vec<(usize, DMatrix<f64>)> = b.pencil.iter().map(|(v, a)| (*v, a.to_dense())).collect();
        let first_row = rows.len();
        rows.extend(matrix_rows(&b.constant.to_dense(), &pencil, idx.len(), |a, r| a[idx[r]]));
        pairs.push(OppositePair { plus, minus, first_row });
    }

    let f = DVector::from_column_slice(&sdp.objective);
    if rows.is_empty() {
        let gram = pencil_gram(m, blocks.iter().map(|b| &b.pencil));
        if full_rank(&gram) {
            return Reduced::Problem(ReducedProblem {
                constant: sdp.objective_constant,
                kept: blocks.iter().map(|b| b.orig).collect(),
                bases: vec![None; blocks.len()],
                constants: blocks.iter().map(|b| b.constant.clone()).collect(),
                pencils: blocks.iter().map(|b| b.pencil.clone()).collect(),
                objective: sdp.objective.clone(),
                transform: None,
                pairs,
                equality_matrix: DMatrix::zeros(0, m),
            });
        }
    }

    let with_equalities = !rows.is_empty();
    let mut tol = RANK_TOL;
    let mut round = 0;
    loop {
        let Some((offset, null)) = eliminate(&rows, m, tol) else {
            return Reduced::Infeasible;
        };
        let gram = pencil_gram(m, blocks.iter().map(|b| &b.pencil));
        let Some(t) = visible_directions(&gram, &null, &f) else {
            return Reduced::Infeasible;
        };
        let (constants, pencils) = transformed(&blocks, &offset, &t);

        let face = if with_equalities && round < MAX_FACIAL_ROUNDS {
            find_face(&constants, &pencils, t.ncols())
        } else {
            None
        };
        let Some(ranges) = face else {
            let (equality_matrix, _) = equality_matrix(&rows, m);
            return Reduced::Problem(ReducedProblem {
                constant: sdp.objective_constant + f.dot(&offset),
                kept: blocks.iter().map(|b| b.orig).collect(),
                bases: blocks.iter().map(|b| b.basis.clone()).collect(),
                constants,
                pencils,
                objective: (t.transpose() * &f).iter().copied().collect(),
                transform: Some((offset, t)),
                pairs,
                equality_matrix,
            });
        };

        // Restrict every block to ker W and require M · range(W) = 0.
        let mut next = Vec::with_capacity(blocks.len());
        for (b, v) in blocks.iter().zip(ranges) {
            if v.ncols() == 0 {
                next.push(b.clone());
                continue;
            }
            let n = b.size();
            let c = b.constant.to_dense();
            let pencil: Vec<(usize, DMatrix<f64>)> = b.pencil.iter().map(|(j, a)| (*j, a.to_dense())).collect();
            rows.extend(face_rows(&c, &pencil, &v));
            // Orthonormal complement of range(W).
            let proj = DMatrix::identity(n, n) - &v * v.transpose();
            let eig = SymmetricEigen::new(proj);
            let keep: Vec<DVector<f64>> = eig
                .eigenvalues
                .iter()
                .enumerate()
                .filter(|(_, &l)| l > 0.5)
                .map(|(i, _)| eig.eigenvectors.column(i).into_owned())
                .collect();
            if keep.is_empty() {
                continue;
            }
            let u = DMatrix::from_columns(&keep);
            let restrict = |a: &DMatrix<f64>| dense_to_sparse(&(u.transpose() * a * &u));
            next.push(WorkBlock {
                orig: b.orig,
                basis: Some(match &b.basis {
                    None => u.clone(),
                    Some(prev) => prev * &u,
                }),
                constant: restrict(&c),
                pencil: pencil
                    .iter()
                    .map(|(j, a)| (*j, restrict(a)))
                    .filter(|(_, s)| s.nnz() > 0)
                    .collect(),
            });
        }
        blocks = next;
        tol = FACE_RANK_TOL;
        round += 1;
    }
}

fn dense_to_sparse(d: &DMatrix<f64>) -> SparseSym {
    let n = d.nrows();
    let scale = d.amax();
    let mut s = SparseSym::new(n);
    for p in 0..n {
        for q in p..n {
            let v = d[(p, q)];
            if v.abs() > 1e-14 * scale {
                s.entries.push((p, q, v));
            }
        }
    }
    s
}
