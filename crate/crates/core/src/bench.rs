//! Benchmark families and the method-comparison harness.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Instant;

use num_integer::binomial;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::groups::{GroupSpec, ProductAction};
use crate::ipsolver::SolverConfig;
use crate::polyring::{parse_polynomial, Polynomial, Rational};
use crate::problem::{Constraint, ConstraintKind, ProblemInstance};
use crate::relax::{PhaseTimings, Relaxation, RelaxationConfig, Sparsity};
use crate::tsp::{block_profile, ClosureMode, SupportSource, TspConfig};

/// Quartic coefficients `(a, b, c, d)` shared by the ring and torus families.
#[derive(Clone, Debug, PartialEq)]
pub struct QuarticParams {
    pub a: Rational,
    pub b: Rational,
    pub c: Rational,
    pub d: Rational,
}

impl Default for QuarticParams {
    fn default() -> Self {
        let r = |v: i64| Rational::from_integer(v.into());
        Self {
            a: r(1),
            b: r(-1),
            c: r(1),
            d: r(-1),
        }
    }
}

impl std::fmt::Display for QuarticParams {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "a={},b={},c={},d={}", self.a, self.b, self.c, self.d)
    }
}

fn var(n: usize, i: usize) -> Polynomial {
    Polynomial::var(n, i)
}

fn cst(n: usize, c: &Rational) -> Polynomial {
    Polynomial::constant(n, c.clone())
}

/// Ring Ising quartic `Σ a x_i⁴ + b x_i² x_{i+1}² + c x_i x_{i+1} + d x_i²`
/// over the Laplacian ball `n − Σ (x_i − x_{i+1})² >= 0`, with dihedral
/// symmetry.
pub fn build_ring_ising(n: usize, params: &QuarticParams) -> Result<ProblemInstance> {
    if n < 3 {
        return Err(Error::Input(format!("ring Ising needs n >= 3, got {n}")));
    }
    let mut f = Polynomial::zero(n);
    let mut g = cst(n, &Rational::from_integer(n.into()));
    for i in 0..n {
        let (x, y) = (var(n, i), var(n, (i + 1) % n));
        let x2 = &x * &x;
        let y2 = &y * &y;
        f = &f + &(&cst(n, &params.a) * &(&x2 * &x2));
        f = &f + &(&cst(n, &params.b) * &(&x2 * &y2));
        f = &f + &(&cst(n, &params.c) * &(&x * &y));
        f = &f + &(&cst(n, &params.d) * &x2);
        let diff = &x - &y;
        g = &g - &(&diff * &diff);
    }
    Ok(ProblemInstance {
        name: format!("ring_ising(n={n},{params})"),
        nvars: n,
        objective: f,
        constraints: vec![Constraint {
            poly: g,
            kind: ConstraintKind::Ineq,
        }],
        group: GroupSpec::Dihedral { n },
        notes: format!("ring Ising quartic over the Laplacian ball, n={n}, {params}"),
    })
}

/// Torus grid quartic on `p × q` variables `x_{i,j}` (index `i·q + j`) over
/// `{±1}^{p×q}`, written as `Σ (x_{i,j}² − 1)² = 0`, with `C_p × C_q`
/// symmetry.
pub fn build_torus_grid(p: usize, q: usize, params: &QuarticParams) -> Result<ProblemInstance> {
    if p < 2 || q < 2 {
        return Err(Error::Input(format!("torus grid needs p, q >= 2, got {p}x{q}")));
    }
    let n = p * q;
    let idx = |i: usize, j: usize| (i % p) * q + (j % q);
    let mut f = Polynomial::zero(n);
    let mut h = Polynomial::zero(n);
    let one = Polynomial::one(n);
    for i in 0..p {
        for j in 0..q {
            let x = var(n, idx(i, j));
            let down = var(n, idx(i + 1, j));
            let right = var(n, idx(i, j + 1));
            let x2 = &x * &x;
            f = &f + &(&cst(n, &params.a) * &(&x2 * &x2));
            let quad = &(&x2 * &(&down * &down)) + &(&x2 * &(&right * &right));
            f = &f + &(&cst(n, &params.b) * &quad);
            let bil = &(&x * &down) + &(&x * &right);
            f = &f + &(&cst(n, &params.c) * &bil);
            f = &f + &(&cst(n, &params.d) * &x2);
            let e = &x2 - &one;
            h = &h + &(&e * &e);
        }
    }
    Ok(ProblemInstance {
        name: format!("torus_grid(p={p},q={q},{params})"),
        nvars: n,
        objective: f,
        constraints: vec![Constraint {
            poly: h,
            kind: ConstraintKind::Eq,
        }],
        group: GroupSpec::Product {
            left: Box::new(GroupSpec::Cyclic { n: p }),
            right: Box::new(GroupSpec::Cyclic { n: q }),
            action: ProductAction::Grid,
        },
        notes: format!("torus grid quartic on the hypercube, {p}x{q}, {params}"),
    })
}

/// Largest `n` accepted by [`build_symmetric_quartic`] (the group has `n!`
/// elements).
pub const SYMMETRIC_QUARTIC_CAP: usize = 9;

/// Unconstrained `S_n`-invariant quartic
/// `(1/n)Σx_i⁴ + Σ_{i<j<k<l} x_ix_jx_kx_l / C(n,4) + Σ_{i<j<k} x_ix_jx_k / C(n,3) + (1/n)Σx_i`.
pub fn build_symmetric_quartic(n: usize) -> Result<ProblemInstance> {
    if !(4..=SYMMETRIC_QUARTIC_CAP).contains(&n) {
        return Err(Error::Input(format!("symmetric quartic needs 4 <= n <= {SYMMETRIC_QUARTIC_CAP}, got {n}")));
    }
    let inv = |k: usize| Rational::new(1.into(), (k as i64).into());
    let mut f = Polynomial::zero(n);
    let subsets = |k: usize| -> Vec<Vec<usize>> {
        let mut out = Vec::new();
        let mut cur = Vec::new();
        fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
            if cur.len() == k {
                out.push(cur.clone());
                return;
            }
            for i in start..n {
                cur.push(i);
                rec(i + 1, n, k, cur, out);
                cur.pop();
            }
        }
        rec(0, n, k, &mut cur, &mut out);
        out
    };
    let add_products = |f: &mut Polynomial, k: usize, coef: Rational| {
        for s in subsets(k) {
            let mut m = cst(n, &coef);
            for i in s {
                m = &m * &var(n, i);
            }
            *f = &*f + &m;
        }
    };
    for i in 0..n {
        let x = var(n, i);
        let x2 = &x * &x;
        f = &f + &(&cst(n, &inv(n)) * &(&x2 * &x2));
        f = &f + &(&cst(n, &inv(n)) * &x);
    }
    add_products(&mut f, 4, inv(binomial(n, 4)));
    add_products(&mut f, 3, inv(binomial(n, 3)));
    Ok(ProblemInstance {
        name: format!("symmetric_quartic(n={n})"),
        nvars: n,
        objective: f,
        constraints: Vec::new(),
        group: GroupSpec::Symmetric { n },
        notes: format!("unconstrained symmetric quartic, n={n}"),
    })
}

/// Robinson's sextic in two variables with the swap symmetry.
pub fn build_robinson() -> ProblemInstance {
    let f = parse_polynomial(
        "x1^6 + x2^6 - x1^4*x2^2 - x1^2*x2^4 - x1^4 - x2^4 - x1^2 - x2^2 + 3*x1^2*x2^2 + 1",
        2,
    )
    .expect("valid polynomial");
    ProblemInstance {
        name: "robinson".into(),
        nvars: 2,
        objective: f,
        constraints: Vec::new(),
        group: GroupSpec::Symmetric { n: 2 },
        notes: "Robinson's nonnegative sextic that is not a sum of squares".into(),
    }
}

/// A relaxation method in the comparison matrix.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Dense relaxation in the monomial basis (trivial group).
    Dense,
    /// Dense relaxation reduced by the sign changes fixing every term.
    SignSymmetry,
    /// Dense symmetry-adapted relaxation for the instance's group.
    GroupSymmetryDense,
    /// Term sparsity in the monomial basis (trivial group).
    TermSparse(TspConfig),
    /// Term sparsity in the symmetry-adapted basis.
    SymSparse(TspConfig),
}

impl Method {
    pub fn tag(&self) -> &'static str {
        match self {
            Self::Dense => "dense",
            Self::SignSymmetry => "sign_symmetry",
            Self::GroupSymmetryDense => "group_symmetry_dense",
            Self::TermSparse(_) => "term_sparse",
            Self::SymSparse(_) => "sym_sparse",
        }
    }

    fn tsp(&self) -> Option<TspConfig> {
        match *self {
            Self::TermSparse(t) | Self::SymSparse(t) => Some(t),
            _ => None,
        }
    }

    /// The same method reading sparsity supports from `support`.
    pub fn with_support(self, support: SupportSource) -> Self {
        match self {
            Self::TermSparse(t) => Self::TermSparse(TspConfig { support, ..t }),
            Self::SymSparse(t) => Self::SymSparse(TspConfig { support, ..t }),
            other => other,
        }
    }

    /// The full comparison set: three dense methods and the sparse variants
    /// with both closures and both diagonal-square settings.
    pub fn all() -> Vec<Method> {
        let mut out = vec![Self::Dense, Self::SignSymmetry, Self::GroupSymmetryDense];
        for closure in [ClosureMode::Maximal, ClosureMode::MinDegree] {
            let tsp = |diagonal_squares| TspConfig {
                diagonal_squares,
                closure,
                support: SupportSource::PreClosure,
            };
            out.push(Self::TermSparse(tsp(true)));
            for diagonal_squares in [true, false] {
                out.push(Self::SymSparse(tsp(diagonal_squares)));
            }
        }
        out
    }

    fn instance(&self, problem: &ProblemInstance) -> ProblemInstance {
        match self {
            Self::Dense | Self::TermSparse(_) => problem.with_group(GroupSpec::Trivial { n: problem.nvars }),
            Self::SignSymmetry => problem.with_group(problem.sign_symmetry()),
            Self::GroupSymmetryDense | Self::SymSparse(_) => problem.clone(),
        }
    }
}

/// One row of the comparison.
#[derive(Clone, Debug, Serialize)]
pub struct RunRecord {
    pub instance: String,
    pub method: String,
    pub r: usize,
    /// Requested sparsity order (0 for dense methods).
    pub s: usize,
    pub closure: Option<ClosureMode>,
    pub diag: Option<bool>,
    pub max_block: usize,
    /// Block size → count.
    pub histogram: BTreeMap<usize, usize>,
    pub n_scalar_constraints: usize,
    pub n_matrix_constraints: usize,
    pub bound: f64,
    pub status: String,
    pub seconds: f64,
    pub timings: PhaseTimings,
}

impl RunRecord {
    /// Histogram as `size_count` pairs.
    pub fn blocks(&self) -> String {
        let sizes: Vec<usize> = self.histogram.iter().flat_map(|(&s, &c)| std::iter::repeat(s).take(c)).collect();
        block_profile(&sizes)
    }

    pub fn total_blocks(&self) -> usize {
        self.histogram.values().sum()
    }
}

/// Runs a single `(method, r, s)` combination; failures become a status.
pub fn run_one(problem: &ProblemInstance, method: Method, r: usize, s: usize, solver: &SolverConfig) -> RunRecord {
    let start = Instant::now();
    let tsp = method.tsp();
    let mut record = RunRecord {
        instance: problem.name.clone(),
        method: method.tag().into(),
        r,
        s: if tsp.is_some() { s } else { 0 },
        closure: tsp.map(|t| t.closure),
        diag: tsp.map(|t| t.diagonal_squares),
        max_block: 0,
        histogram: BTreeMap::new(),
        n_scalar_constraints: 0,
        n_matrix_constraints: 0,
        bound: f64::NAN,
        status: String::new(),
        seconds: 0.0,
        timings: PhaseTimings::default(),
    };
    let cfg = match tsp {
        Some(t) => RelaxationConfig::sparse(r, Sparsity::Order(s.max(1)), t),
        None => RelaxationConfig::dense(r),
    };
    match Relaxation::build(&method.instance(problem), &cfg) {
        Ok(mut relax) => {
            for size in relax.block_sizes() {
                *record.histogram.entry(size).or_insert(0) += 1;
            }
            record.max_block = relax.sdp.max_block();
            record.n_scalar_constraints = relax.sdp.n_scalar_constraints();
            record.n_matrix_constraints = relax.sdp.n_matrix_constraints();
            let sol = relax.solve(solver);
            record.bound = sol.bound;
            record.status = sol.status.to_string();
            record.timings = relax.timings;
        }
        Err(e) => record.status = format!("error: {e}"),
    }
    record.seconds = start.elapsed().as_secs_f64();
    record
}

/// Runs every method for every order; sparse methods once per requested
/// sparsity order. Runs execute in parallel on `workers` threads (0 = all
/// cores).
pub fn run_matrix(
    problem: &ProblemInstance,
    methods: &[Method],
    orders: &[usize],
    sparsity_orders: &[usize],
    solver: &SolverConfig,
    workers: usize,
) -> Vec<RunRecord> {
    let mut jobs = Vec::new();
    for &method in methods {
        for &r in orders {
            if method.tsp().is_some() {
                for &s in sparsity_orders {
                    jobs.push((method, r, s));
                }
            } else {
                jobs.push((method, r, 0));
            }
        }
    }
    let run = || -> Vec<RunRecord> { jobs.par_iter().map(|&(m, r, s)| run_one(problem, m, r, s, solver)).collect() };
    match rayon::ThreadPoolBuilder::new().num_threads(workers).build() {
        Ok(pool) => pool.install(run),
        Err(_) => run(),
    }
}

/// CSV header, in column order.
pub const CSV_COLUMNS: [&str; 13] = [
    "instance",
    "method",
    "r",
    "s",
    "closure",
    "diag",
    "max_block",
    "blocks",
    "n_scalar_constraints",
    "n_matrix_constraints",
    "bound",
    "status",
    "seconds",
];

/// Writes records as CSV with the columns of [`CSV_COLUMNS`].
pub fn write_csv<W: Write>(records: &[RunRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_COLUMNS)?;
    for rec in records {
        let closure = match rec.closure {
            Some(ClosureMode::Maximal) => "maximal",
            Some(ClosureMode::MinDegree) => "md",
            None => "",
        };
        let diag = match rec.diag {
            Some(true) => "on",
            Some(false) => "off",
            None => "",
        };
        w.write_record([
            rec.instance.clone(),
            rec.method.clone(),
            rec.r.to_string(),
            rec.s.to_string(),
            closure.to_string(),
            diag.to_string(),
            rec.max_block.to_string(),
            rec.blocks(),
            rec.n_scalar_constraints.to_string(),
            rec.n_matrix_constraints.to_string(),
            format!("{:.8}", rec.bound),
            rec.status.clone(),
            format!("{:.3}", rec.seconds),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::polyring::{rat, GroupElement};

    #[test]
    fn ring_n3_pure_quartic_is_a4() {
        let p = QuarticParams {
            a: rat(1, 1),
            b: rat(0, 1),
            c: rat(0, 1),
            d: rat(0, 1),
        };
        let inst = build_ring_ising(3, &p).unwrap();
        assert_eq!(inst.objective, parse_polynomial("x1^4 + x2^4 + x3^4", 3).unwrap());
        inst.validate().unwrap();
    }

    #[test]
    fn instances_are_invariant() {
        build_ring_ising(7, &QuarticParams::default()).unwrap().validate().unwrap();
        build_torus_grid(2, 3, &QuarticParams::default()).unwrap().validate().unwrap();
        build_torus_grid(3, 3, &QuarticParams::default()).unwrap().validate().unwrap();
        build_symmetric_quartic(6).unwrap().validate().unwrap();
        build_robinson().validate().unwrap();
    }

    #[test]
    fn symmetric_quartic_fixed_by_a_transposition() {
        let inst = build_symmetric_quartic(5).unwrap();
        let t = GroupElement::from_images(&[1, 4, 3, 2, 5]).unwrap();
        assert_eq!(inst.objective.act(&t).unwrap(), inst.objective);
    }

    #[test]
    fn torus_2x2_has_four_variables() {
        let inst = build_torus_grid(2, 2, &QuarticParams::default()).unwrap();
        assert_eq!(inst.nvars, 4);
        assert_eq!(inst.equalities().len(), 1);
    }

    #[test]
    fn constant_objective_gives_constant_for_every_method() {
        let inst = ProblemInstance {
            name: "const".into(),
            nvars: 2,
            objective: parse_polynomial("3/2", 2).unwrap(),
            constraints: vec![],
            group: GroupSpec::Symmetric { n: 2 },
            notes: String::new(),
        };
        let recs = run_matrix(&inst, &Method::all(), &[1], &[1], &SolverConfig::default(), 2);
        assert_eq!(recs.len(), 3 + 6);
        for r in &recs {
            assert_eq!(r.status, "optimal", "{r:?}");
            assert!((r.bound - 1.5).abs() < 1e-7, "{r:?}");
        }
    }

    #[test]
    fn csv_header_is_exact() {
        let mut buf = Vec::new();
        write_csv(&[], &mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap().trim(),
            "instance,method,r,s,closure,diag,max_block,blocks,n_scalar_constraints,n_matrix_constraints,bound,status,seconds"
        );
    }
}
