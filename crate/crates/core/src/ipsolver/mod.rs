//! Primal-dual interior-point solver for the block-diagonal programs built by
//! [`crate::sdpbuild`].
//!
//! Internally the moment program is written as the dual standard form
//! `max b·u s.t. Σ u_i A_i + Z = C, Z ⪰ 0` and the Gram matrices are the
//! primal `X`. Iterations use the HKM search direction with a Mehrotra
//! predictor-corrector step and an infeasible start.

mod reduce;

use nalgebra::{Cholesky, DMatrix, DVector, SymmetricEigen, SVD};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::sdpbuild::{BlockSdp, SparseSym};
use reduce::{reduce, Reduced};

/// Solver tolerances and limits.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverConfig {
    /// Relative primal and dual infeasibility tolerance.
    pub feasibility_tol: f64,
    /// Relative duality-gap tolerance.
    pub gap_tol: f64,
    pub max_iterations: usize,
    /// Iterations over which progress is measured for stall detection.
    pub slow_window: usize,
    /// Minimal relative reduction of the error measure over the window.
    pub slow_reduction: f64,
    /// Objective magnitude past which divergence is reported as infeasibility.
    pub infeasibility_threshold: f64,
    /// When the iteration breaks down or stalls, a best iterate within this
    /// factor of the tolerances is still reported as optimal.
    pub near_optimal_factor: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            feasibility_tol: 1e-8,
            gap_tol: 1e-7,
            max_iterations: 200,
            slow_window: 20,
            slow_reduction: 1e-3,
            infeasibility_threshold: 1e6,
            near_optimal_factor: 100.0,
        }
    }
}

impl SolverConfig {
    /// Rejects non-positive tolerances.
    pub fn validate(&self) -> crate::Result<()> {
        let ok = [self.feasibility_tol, self.gap_tol, self.slow_reduction, self.infeasibility_threshold]
            .iter()
            .all(|&t| t > 0.0 && t.is_finite())
            && self.near_optimal_factor >= 1.0;
        if ok && self.max_iterations > 0 {
            Ok(())
        } else {
            Err(crate::Error::Input("solver tolerances must be positive".into()))
        }
    }
}

/// Outcome of a solve.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SolveStatus {
    Optimal,
    /// The SOS side admits no certificate (moment side unbounded) or the
    /// moment side is empty.
    Infeasible,
    SlowProgress,
    IterationLimit,
    NumericalError,
}

impl SolveStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Optimal => "optimal",
            Self::Infeasible => "infeasible",
            Self::SlowProgress => "slow_progress",
            Self::IterationLimit => "iteration_limit",
            Self::NumericalError => "numerical_error",
        }
    }
}

impl std::fmt::Display for SolveStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Result of [`solve`].
#[derive(Clone, Debug)]
pub struct SdpSolution {
    pub status: SolveStatus,
    /// SOS value `f_1 - Σ <A_{b,1}, Q_b>` (the certified lower bound);
    /// `-inf` when the SOS side is infeasible.
    pub bound: f64,
    /// Moment objective at `y`.
    pub moment_value: f64,
    /// Free-variable values.
    pub y: Vec<f64>,
    /// All pseudomoments, indexed like the invariant basis.
    pub moments: Vec<f64>,
    /// Gram matrices, one per block.
    pub grams: Vec<DMatrix<f64>>,
    /// `moment_value - bound` at the final iterate.
    pub gap: f64,
    pub iterations: usize,
    pub primal_infeasibility: f64,
    pub dual_infeasibility: f64,
}

/// Standard-form data: `A_i` per constraint as `(block, matrix)` pairs.
struct Standard {
    sizes: Vec<usize>,
    c: Vec<DMatrix<f64>>,
    a: Vec<Vec<(usize, SparseSym)>>,
    b: Vec<f64>,
    /// Row offset of every block in the stacked `svec` layout.
    offsets: Vec<usize>,
}

impl Standard {
    fn new(sizes: Vec<usize>, c: Vec<DMatrix<f64>>, a: Vec<Vec<(usize, SparseSym)>>, b: Vec<f64>) -> Self {
        let mut offsets = Vec::with_capacity(sizes.len());
        let mut acc = 0;
        for &n in &sizes {
            offsets.push(acc);
            acc += n * (n + 1) / 2;
        }
        Self { sizes, c, a, b, offsets }
    }

    fn m(&self) -> usize {
        self.b.len()
    }

    /// Length of the stacked `svec` vector.
    fn svec_len(&self) -> usize {
        self.sizes.iter().map(|n| n * (n + 1) / 2).sum()
    }

    fn apply_adjoint(&self, u: &[f64]) -> Vec<DMatrix<f64>> {
        let mut out: Vec<DMatrix<f64>> = self.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect();
        for (i, row) in self.a.iter().enumerate() {
            if u[i] != 0.0 {
                for (blk, a) in row {
                    a.add_to(&mut out[*blk], u[i]);
                }
            }
        }
        out
    }

    fn apply(&self, x: &[DMatrix<f64>]) -> Vec<f64> {
        self.a.iter().map(|row| row.iter().map(|(blk, a)| a.dot(&x[*blk])).sum()).collect()
    }

    /// Columns `svec(Gᵀ A_i G)` of the scaled constraint matrix.
    fn scaled_matrix(&self, scalings: &[Scaling]) -> DMatrix<f64> {
        let len = self.svec_len();
        let cols: Vec<Vec<f64>> = self
            .a
            .par_iter()
            .map(|row| {
                let mut col = vec![0.0; len];
                for (blk, a) in row {
                    let s = congruence(&scalings[*blk].g, a);
                    svec_into(&s, &mut col[self.offsets[*blk]..]);
                }
                col
            })
            .collect();
        DMatrix::from_fn(len, self.m(), |r, i| cols[i][r])
    }

    fn svec(&self, blocks: &[DMatrix<f64>]) -> DVector<f64> {
        let mut v = DVector::zeros(self.svec_len());
        for (k, b) in blocks.iter().enumerate() {
            svec_into(b, &mut v.as_mut_slice()[self.offsets[k]..]);
        }
        v
    }

    fn smat(&self, v: &DVector<f64>) -> Vec<DMatrix<f64>> {
        let s = std::f64::consts::SQRT_2;
        self.sizes
            .iter()
            .enumerate()
            .map(|(k, &n)| {
                let mut m = DMatrix::zeros(n, n);
                let mut r = self.offsets[k];
                for p in 0..n {
                    for q in p..n {
                        if p == q {
                            m[(p, p)] = v[r];
                        } else {
                            m[(p, q)] = v[r] / s;
                            m[(q, p)] = v[r] / s;
                        }
                        r += 1;
                    }
                }
                m
            })
            .collect()
    }
}

/// Upper triangle of `m`, off-diagonal entries scaled by √2, so that the
/// Euclidean product of two `svec`s is the trace product.
fn svec_into(m: &DMatrix<f64>, out: &mut [f64]) {
    let s = std::f64::consts::SQRT_2;
    let n = m.nrows();
    let mut r = 0;
    for p in 0..n {
        for q in p..n {
            out[r] = if p == q { m[(p, p)] } else { s * m[(p, q)] };
            r += 1;
        }
    }
}

/// `Gᵀ A G` for symmetric sparse `A`.
fn congruence(g: &DMatrix<f64>, a: &SparseSym) -> DMatrix<f64> {
    let n = g.ncols();
    if a.nnz() > n {
        return g.transpose() * a.to_dense() * g;
    }
    let mut out = DMatrix::zeros(n, n);
    for &(p, q, v) in &a.entries {
        let gp = g.row(p).transpose();
        let gq = g.row(q).transpose();
        out.ger(v, &gp, &gq, 1.0);
        if p != q {
            out.ger(v, &gq, &gp, 1.0);
        }
    }
    out
}

fn frob_dot(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.dot(b)
}

fn sym(m: DMatrix<f64>) -> DMatrix<f64> {
    (&m + m.transpose()) * 0.5
}

/// Nesterov–Todd scaling of one block: `G` with
/// `Gᵀ Z G = G⁻¹ X G⁻ᵀ = diag(λ)`.
struct Scaling {
    g: DMatrix<f64>,
    /// `G⁻ᵀ`, used to map scaled dual directions back.
    ginv_t: DMatrix<f64>,
    lambda: DVector<f64>,
}

fn nt_scaling(x: &DMatrix<f64>, z: &DMatrix<f64>) -> Option<Scaling> {
    let n = x.nrows();
    let lx = Cholesky::new(x.clone())?.l();
    let lz = Cholesky::new(z.clone())?.l();
    let svd = SVD::new(lz.transpose() * &lx, false, true);
    let v = svd.v_t?.transpose();
    let lambda = svd.singular_values;
    if lambda.iter().any(|&l| !(l > 0.0) || !l.is_finite()) {
        return None;
    }
    let g = &lx * &v * DMatrix::from_diagonal(&lambda.map(|l| 1.0 / l.sqrt()));
    let lx_inv = lx.solve_lower_triangular(&DMatrix::identity(n, n))?;
    let ginv = DMatrix::from_diagonal(&lambda.map(f64::sqrt)) * v.transpose() * lx_inv;
    Some(Scaling {
        g,
        ginv_t: ginv.transpose(),
        lambda,
    })
}

/// Largest `α` keeping `diag(λ) + α d` PSD.
fn max_step(lambda: &DVector<f64>, d: &DMatrix<f64>) -> f64 {
    let n = lambda.len();
    if n == 0 {
        return f64::INFINITY;
    }
    let s = DMatrix::from_fn(n, n, |p, q| d[(p, q)] / (lambda[p] * lambda[q]).sqrt());
    let lmin = SymmetricEigen::new(sym(s)).eigenvalues.min();
    if lmin >= 0.0 {
        f64::INFINITY
    } else {
        -1.0 / lmin
    }
}

/// Factorization of the normal matrix `Kᵀ K` of the scaled constraints.
enum NormalSolver {
    Cholesky(Cholesky<f64, nalgebra::Dyn>),
    /// `K = Q R`; used once `Kᵀ K` is too ill-conditioned to form.
    Qr(nalgebra::linalg::QR<f64, nalgebra::Dyn, nalgebra::Dyn>, DMatrix<f64>),
}

/// Pivot ratio of the normal-matrix Cholesky below which the QR path is used.
const NORMAL_EQUATION_LIMIT: f64 = 1e-12;

impl NormalSolver {
    fn new(k: &DMatrix<f64>) -> Option<Self> {
        let normal = k.tr_mul(k);
        if let Some(ch) = Cholesky::new(normal.clone()) {
            let l = ch.l_dirty();
            let dmax = (0..normal.nrows()).map(|i| normal[(i, i)]).fold(0.0, f64::max);
            let worst = (0..normal.nrows()).map(|i| l[(i, i)] * l[(i, i)]).fold(f64::INFINITY, f64::min);
            if worst > NORMAL_EQUATION_LIMIT * dmax {
                return Some(Self::Cholesky(ch));
            }
        }
        if k.nrows() < k.ncols() {
            return None;
        }
        let qr = k.clone().qr();
        let r = qr.r();
        if (0..r.nrows()).any(|i| r[(i, i)] == 0.0) {
            return None;
        }
        Some(Self::Qr(qr, r))
    }

    /// Solves `Kᵀ K dy = rp + Kᵀ q`.
    fn solve(&self, k: &DMatrix<f64>, rp: &DVector<f64>, q: &DVector<f64>) -> Option<DVector<f64>> {
        match self {
            Self::Cholesky(ch) => Some(ch.solve(&(rp + k.tr_mul(q)))),
            Self::Qr(qr, r) => {
                let m = r.nrows();
                let w = r.tr_solve_upper_triangular(rp)?;
                let mut qt = q.clone();
                qr.q_tr_mul(&mut qt);
                let rhs = w + qt.rows(0, m);
                r.solve_upper_triangular(&rhs)
            }
        }
    }
}

struct Iterate {
    x: Vec<DMatrix<f64>>,
    y: Vec<f64>,
    z: Vec<DMatrix<f64>>,
}

struct Outcome {
    status: SolveStatus,
    it: Iterate,
    iterations: usize,
    pinf: f64,
    dinf: f64,
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn blocks_norm(m: &[DMatrix<f64>]) -> f64 {
    m.iter().map(|b| b.norm_squared()).sum::<f64>().sqrt()
}

/// One predictor-corrector direction `(dX, dy, dZ)` and its step lengths.
fn nt_step(p: &Standard, it: &Iterate, rp: &[f64], rd: &[DMatrix<f64>]) -> Option<(Vec<DMatrix<f64>>, Vec<f64>, Vec<DMatrix<f64>>, f64, f64)> {
    let nb = p.sizes.len();
    let ntot: usize = p.sizes.iter().sum();
    let scalings: Vec<Scaling> = (0..nb).map(|k| nt_scaling(&it.x[k], &it.z[k])).collect::<Option<_>>()?;
    let k = p.scaled_matrix(&scalings);
    let normal = NormalSolver::new(&k)?;
    let rp = DVector::from_column_slice(rp);
    let rd_scaled: Vec<DMatrix<f64>> = (0..nb).map(|b| scalings[b].g.transpose() * &rd[b] * &scalings[b].g).collect();
    let mu = scalings.iter().map(|s| s.lambda.norm_squared()).sum::<f64>() / ntot as f64;

    // In scaled space X̃ = Z̃ = diag(λ) and dX̃ + dZ̃ = R, where R solves
    // (ΛR + RΛ)/2 = rhs.
    let direction = |rhs: &[DMatrix<f64>]| -> Option<(Vec<DMatrix<f64>>, DVector<f64>, Vec<DMatrix<f64>>)> {
        let r: Vec<DMatrix<f64>> = (0..nb)
            .map(|b| {
                let l = &scalings[b].lambda;
                DMatrix::from_fn(l.len(), l.len(), |i, j| 2.0 * rhs[b][(i, j)] / (l[i] + l[j]))
            })
            .collect();
        let q: Vec<DMatrix<f64>> = (0..nb).map(|b| &rd_scaled[b] - &r[b]).collect();
        let mut dy = normal.solve(&k, &rp, &p.svec(&q))?;
        // Iterative refinement of the primal equations, which lose accuracy
        // when the scaling is badly conditioned.
        for _ in 0..2 {
            let dx_scaled = &k * &dy - p.svec(&q);
            let e = &rp - k.tr_mul(&dx_scaled);
            dy += normal.solve(&k, &e, &DVector::zeros(k.nrows()))?;
        }
        let atdy = p.smat(&(&k * &dy));
        let dz: Vec<DMatrix<f64>> = (0..nb).map(|b| &rd_scaled[b] - &atdy[b]).collect();
        let dx: Vec<DMatrix<f64>> = (0..nb).map(|b| &r[b] - &dz[b]).collect();
        Some((dx, dy, dz))
    };
    let steps = |dx: &[DMatrix<f64>], dz: &[DMatrix<f64>]| -> (f64, f64) {
        let ap = (0..nb).map(|b| max_step(&scalings[b].lambda, &dx[b])).fold(f64::INFINITY, f64::min);
        let ad = (0..nb).map(|b| max_step(&scalings[b].lambda, &dz[b])).fold(f64::INFINITY, f64::min);
        (ap, ad)
    };
    let lam2: Vec<DMatrix<f64>> = scalings.iter().map(|s| DMatrix::from_diagonal(&s.lambda.map(|l| l * l))).collect();

    let affine: Vec<DMatrix<f64>> = lam2.iter().map(|l| -l).collect();
    let (dxa, _, dza) = direction(&affine)?;
    let (apa, ada) = steps(&dxa, &dza);
    let (apa, ada) = (apa.min(1.0), ada.min(1.0));
    let mu_aff = (0..nb)
        .map(|b| {
            let lam = DMatrix::from_diagonal(&scalings[b].lambda);
            frob_dot(&(&lam + &dxa[b] * apa), &(&lam + &dza[b] * ada))
        })
        .sum::<f64>()
        / ntot as f64;
    let sigma = (mu_aff / mu).max(0.0).powi(3).min(1.0);
    let rhs: Vec<DMatrix<f64>> = (0..nb)
        .map(|b| {
            let n = p.sizes[b];
            DMatrix::identity(n, n) * (sigma * mu) - &lam2[b] - sym(&dxa[b] * &dza[b])
        })
        .collect();
    let (dx, dy, dz) = direction(&rhs)?;
    let (ap, ad) = steps(&dx, &dz);
    let gamma = 0.95;
    let dx: Vec<DMatrix<f64>> = (0..nb).map(|b| sym(&scalings[b].g * &dx[b] * scalings[b].g.transpose())).collect();
    let dz: Vec<DMatrix<f64>> = (0..nb)
        .map(|b| sym(&scalings[b].ginv_t * &dz[b] * scalings[b].ginv_t.transpose()))
        .collect();
    Some((dx, dy.iter().copied().collect(), dz, (gamma * ap).min(1.0), (gamma * ad).min(1.0)))
}

fn run_ipm(p: &Standard, cfg: &SolverConfig) -> Outcome {
    let m = p.m();
    let nb = p.sizes.len();
    let ntot: usize = p.sizes.iter().sum();
    let norm_b = norm(&p.b);
    let norm_c = blocks_norm(&p.c);
    let a_norms: Vec<f64> = p
        .a
        .iter()
        .map(|row| row.iter().map(|(_, a)| a.norm_squared()).sum::<f64>().sqrt())
        .collect();
    let sqrt_n = (ntot as f64).sqrt();
    let xi = (0..m)
        .map(|i| (1.0 + p.b[i].abs()) / (1.0 + a_norms[i]))
        .fold(10f64.max(sqrt_n), f64::max);
    let eta = a_norms.iter().copied().fold(10f64.max(sqrt_n).max(norm_c), f64::max);

    let mut it = Iterate {
        x: p.sizes.iter().map(|&n| DMatrix::identity(n, n) * xi).collect(),
        y: vec![0.0; m],
        z: p.sizes.iter().map(|&n| DMatrix::identity(n, n) * eta).collect(),
    };
    let mut history: Vec<f64> = Vec::new();
    // Best iterate so far by merit, returned on non-optimal exits.
    let mut best: Option<(f64, Iterate, usize, f64, f64)> = None;
    let near = cfg.near_optimal_factor;
    let finish = |status: SolveStatus, it: Iterate, iter: usize, pinf: f64, dinf: f64, best: Option<(f64, Iterate, usize, f64, f64)>| -> Outcome {
        match (status, best) {
            (SolveStatus::Optimal | SolveStatus::Infeasible, _) | (_, None) => Outcome {
                status,
                it,
                iterations: iter,
                pinf,
                dinf,
            },
            (_, Some((merit, b, _, bp, bd))) => Outcome {
                status: if bp <= near * cfg.feasibility_tol && bd <= near * cfg.feasibility_tol && merit <= near * cfg.feasibility_tol.max(cfg.gap_tol) {
                    SolveStatus::Optimal
                } else {
                    status
                },
                it: b,
                iterations: iter,
                pinf: bp,
                dinf: bd,
            },
        }
    };

    for iter in 0..cfg.max_iterations {
        let ax = p.apply(&it.x);
        let rp: Vec<f64> = (0..m).map(|i| p.b[i] - ax[i]).collect();
        let aty = p.apply_adjoint(&it.y);
        let rd: Vec<DMatrix<f64>> = (0..nb).map(|k| &p.c[k] - &it.z[k] - &aty[k]).collect();
        let pobj: f64 = (0..nb).map(|k| frob_dot(&p.c[k], &it.x[k])).sum();
        let dobj: f64 = p.b.iter().zip(&it.y).map(|(b, y)| b * y).sum();
        let xz: f64 = (0..nb).map(|k| frob_dot(&it.x[k], &it.z[k])).sum();
        let pinf = norm(&rp) / (1.0 + norm_b);
        let dinf = blocks_norm(&rd) / (1.0 + norm_c);
        let gap = (pobj - dobj).abs().max(xz.abs()) / (1.0 + pobj.abs() + dobj.abs());
        if pinf < cfg.feasibility_tol && dinf < cfg.feasibility_tol && gap < cfg.gap_tol {
            return finish(SolveStatus::Optimal, it, iter, pinf, dinf, None);
        }
        // Divergence: dual objective unbounded (no Gram certificate) or
        // primal objective unbounded (empty moment side).
        let thr = cfg.infeasibility_threshold;
        if (dobj > thr * (1.0 + norm_c) && blocks_norm(&rd) < 1e-6 * dobj.abs())
            || (-pobj > thr * (1.0 + norm_b) && norm(&rp) < 1e-6 * pobj.abs())
        {
            return finish(SolveStatus::Infeasible, it, iter, pinf, dinf, None);
        }
        let merit = pinf.max(dinf).max(gap);
        if best.as_ref().map_or(true, |b| merit < b.0) {
            best = Some((
                merit,
                Iterate {
                    x: it.x.clone(),
                    y: it.y.clone(),
                    z: it.z.clone(),
                },
                iter,
                pinf,
                dinf,
            ));
        }
        history.push(merit);
        if history.len() > cfg.slow_window {
            let old = history[history.len() - 1 - cfg.slow_window];
            let best_recent = history[history.len() - cfg.slow_window..].iter().copied().fold(f64::INFINITY, f64::min);
            if best_recent > (1.0 - cfg.slow_reduction) * old {
                return finish(SolveStatus::SlowProgress, it, iter, pinf, dinf, best);
            }
        }

        let Some((dx, dy, dz, ap, ad)) = nt_step(p, &it, &rp, &rd) else {
            return finish(SolveStatus::NumericalError, it, iter, pinf, dinf, best);
        };
        for k in 0..nb {
            it.x[k] += &dx[k] * ap;
            it.z[k] += &dz[k] * ad;
        }
        for i in 0..m {
            it.y[i] += ad * dy[i];
        }
    }
    let (pinf, dinf) = (f64::NAN, f64::NAN);
    finish(SolveStatus::IterationLimit, it, cfg.max_iterations, pinf, dinf, best)
}

/// Solves the moment program and its SOS dual.
pub fn solve(sdp: &BlockSdp, cfg: &SolverConfig) -> SdpSolution {
    let nfree = sdp.nfree();
    let reduced = match reduce(sdp) {
        Reduced::Infeasible => {
            return SdpSolution {
                status: SolveStatus::Infeasible,
                bound: f64::NEG_INFINITY,
                moment_value: f64::NEG_INFINITY,
                y: vec![0.0; nfree],
                moments: sdp.full_moments(&vec![0.0; nfree]),
                grams: sdp.blocks.iter().map(|b| DMatrix::zeros(b.size(), b.size())).collect(),
                gap: f64::NAN,
                iterations: 0,
                primal_infeasibility: f64::NAN,
                dual_infeasibility: f64::NAN,
            }
        }
        Reduced::Problem(r) => r,
    };

    let sizes = reduced.sizes();
    let c: Vec<DMatrix<f64>> = reduced.constants.iter().map(|s| s.to_dense()).collect();
    let mut a: Vec<Vec<(usize, SparseSym)>> = vec![Vec::new(); reduced.objective.len()];
    for (blk, pencil) in reduced.pencils.iter().enumerate() {
        for (l, mat) in pencil {
            let mut neg = mat.clone();
            for e in &mut neg.entries {
                e.2 = -e.2;
            }
            a[*l].push((blk, neg));
        }
    }
    let b: Vec<f64> = reduced.objective.iter().map(|f| -f).collect();
    let std = Standard::new(sizes, c, a, b);

    let out = if std.m() == 0 {
        // Nothing to optimize: the constant blocks must be PSD.
        let psd = std
            .c
            .iter()
            .all(|c| c.nrows() == 0 || SymmetricEigen::new(c.clone()).eigenvalues.min() >= -cfg.feasibility_tol);
        Outcome {
            status: if psd { SolveStatus::Optimal } else { SolveStatus::Infeasible },
            it: Iterate {
                x: std.sizes.iter().map(|&n| DMatrix::zeros(n, n)).collect(),
                y: Vec::new(),
                z: std.c.clone(),
            },
            iterations: 0,
            pinf: 0.0,
            dinf: 0.0,
        }
    } else {
        run_ipm(&std, cfg)
    };

    let pobj: f64 = (0..std.sizes.len()).map(|k| frob_dot(&std.c[k], &out.it.x[k])).sum();
    let u = &out.it.y;
    let y = reduced.lift(u);
    let moment_value = sdp.moment_value(&y);
    let mut bound = reduced.constant - pobj;
    if out.status == SolveStatus::Infeasible {
        bound = f64::NEG_INFINITY;
    }
    let gap = moment_value - bound;
    SdpSolution {
        status: out.status,
        bound,
        moment_value,
        moments: sdp.full_moments(&y),
        y,
        grams: reduced.expand_grams(sdp, out.it.x),
        gap,
        iterations: out.iterations,
        primal_infeasibility: out.pinf,
        dual_infeasibility: out.dinf,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sdpbuild::{parse_sdpa, VarStatus};

    fn from_sdpa(text: &str) -> BlockSdp {
        parse_sdpa(text).unwrap().to_block_sdp()
    }

    #[test]
    fn toy_moment_problem() {
        // min y2 s.t. [[1, y1], [y1, y2]] ⪰ 0
        let sdp = from_sdpa("2\n1\n2\n0 1\n0 1 1 1 -1\n1 1 1 2 1\n2 1 2 2 1\n");
        let sol = solve(&sdp, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!(sol.bound.abs() < 1e-6, "{}", sol.bound);
        assert!(sol.moment_value.abs() < 1e-6);
        let q = &sol.grams[0];
        assert!((q[(1, 1)] - 1.0).abs() < 1e-6);
        assert!(q[(0, 0)].abs() < 1e-6);
    }

    #[test]
    fn trace_minimization_matches_eigenvalue() {
        // max t s.t. C - t I ⪰ 0 gives λ_min(C); moment form: min -t.
        let text = "1\n1\n3\n-1\n0 1 1 1 -2\n0 1 1 2 -1\n0 1 2 2 -3\n0 1 3 3 -1\n0 1 2 3 -0.5\n1 1 1 1 -1\n1 1 2 2 -1\n1 1 3 3 -1\n";
        let sdp = from_sdpa(text);
        let sol = solve(&sdp, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        let c = DMatrix::<f64>::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 0.5, 0.0, 0.5, 1.0]);
        let lmin = SymmetricEigen::new(c).eigenvalues.min();
        assert!((sol.moment_value + lmin).abs() < 1e-6, "{} vs {}", sol.moment_value, -lmin);
        assert!((sol.bound - sol.moment_value).abs() < 1e-6);
    }

    #[test]
    fn unbounded_moment_side_is_infeasible() {
        // min y1 s.t. [[1, 0], [0, y1]] ⪰ 0 is bounded (0), but min -y1 is not.
        let sdp = from_sdpa("1\n1\n2\n-1\n0 1 1 1 -1\n1 1 2 2 1\n");
        let sol = solve(&sdp, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert_eq!(sol.bound, f64::NEG_INFINITY);
    }

    #[test]
    fn variable_outside_blocks_with_cost_is_infeasible() {
        let mut sdp = from_sdpa("2\n1\n2\n0 1\n0 1 1 1 -1\n2 1 2 2 1\n");
        sdp.objective = vec![1.0, 1.0];
        let sol = solve(&sdp, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Infeasible);
        assert_eq!(sdp.status[1], VarStatus::Free(0));
    }

    #[test]
    fn constant_only_problem() {
        let mut sdp = from_sdpa("0\n1\n1\n\n0 1 1 1 -1\n");
        sdp.objective_constant = 4.0;
        let sol = solve(&sdp, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert_eq!(sol.bound, 4.0);
    }

    #[test]
    fn equalities_are_eliminated() {
        // min y2 s.t. [[1, y1], [y1, y2]] ⪰ 0 and y1 = 2  →  y2 = 4
        let mut sdp = from_sdpa("2\n1\n2\n0 1\n0 1 1 1 -1\n1 1 1 2 1\n2 1 2 2 1\n");
        sdp.equalities.push(crate::sdpbuild::LinearEquality {
            constant: -2.0,
            coeffs: vec![(0, 1.0)],
        });
        let sol = solve(&sdp, &SolverConfig::default());
        assert_eq!(sol.status, SolveStatus::Optimal);
        assert!((sol.bound - 4.0).abs() < 1e-6, "{}", sol.bound);
        assert!((sol.y[0] - 2.0).abs() < 1e-9);
    }

    #[test]
    fn config_validation() {
        assert!(SolverConfig::default().validate().is_ok());
        let bad = SolverConfig {
            gap_tol: 0.0,
            ..SolverConfig::default()
        };
        assert!(bad.validate().is_err());
    }
}
