//! Independent oracles shared by the integration tests: a monomial Lasserre
//! builder, brute-force minimizers, and a pass/fail reporter.

#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use symsos::problem::{ConstraintKind, ProblemInstance};
use symsos::sdpbuild::{BlockSdp, SdpBlock, SparseSym, VarStatus};

pub type Terms = Vec<(Vec<u32>, f64)>;

pub fn terms(p: &symsos::polyring::Polynomial) -> Terms {
    p.to_f64().terms().map(|(e, c)| (e.exponents().to_vec(), *c)).collect()
}

pub fn eval(t: &Terms, x: &[f64]) -> f64 {
    t.iter()
        .map(|(e, c)| c * e.iter().zip(x).map(|(&k, &xi)| xi.powi(k as i32)).product::<f64>())
        .sum()
}

fn degree(t: &Terms) -> usize {
    t.iter().map(|(e, _)| e.iter().sum::<u32>() as usize).max().unwrap_or(0)
}

/// Exponent vectors of degree at most `d`, by degree.
pub fn monomials(n: usize, d: usize) -> Vec<Vec<u32>> {
    let mut out = vec![vec![0; n]];
    let mut last = vec![vec![0u32; n]];
    for _ in 0..d {
        let mut next = Vec::new();
        for m in &last {
            let start = m.iter().rposition(|&k| k > 0).unwrap_or(0);
            for i in start..n {
                let mut e = m.clone();
                e[i] += 1;
                next.push(e);
            }
        }
        out.extend(next.iter().cloned());
        last = next;
    }
    out
}

/// Standard Lasserre relaxation of order `r` in the monomial basis, written
/// directly from the problem data. Equalities enter as the pair `±h >= 0`.
pub fn monomial_lasserre(problem: &ProblemInstance, r: usize) -> BlockSdp {
    let n = problem.nvars;
    let moments = monomials(n, 2 * r);
    let index: HashMap<Vec<u32>, usize> = moments.iter().cloned().enumerate().map(|(i, m)| (m, i)).collect();

    let mut localizers: Vec<Terms> = vec![vec![(vec![0; n], 1.0)]];
    for c in &problem.constraints {
        let t = terms(&c.poly);
        if c.kind == ConstraintKind::Eq {
            localizers.push(t.iter().map(|(e, v)| (e.clone(), -v)).collect());
        }
        localizers.push(t);
    }

    let mut blocks = Vec::new();
    for (k, g) in localizers.iter().enumerate() {
        let d = r - degree(g).div_ceil(2);
        let rows = monomials(n, d);
        let size = rows.len();
        let mut per_var: BTreeMap<usize, BTreeMap<(usize, usize), f64>> = BTreeMap::new();
        for a in 0..size {
            for b in a..size {
                for (e, c) in g {
                    let m: Vec<u32> = (0..n).map(|i| rows[a][i] + rows[b][i] + e[i]).collect();
                    *per_var.entry(index[&m]).or_default().entry((a, b)).or_insert(0.0) += c;
                }
            }
        }
        let sym = |entries: &BTreeMap<(usize, usize), f64>| SparseSym {
            size,
            entries: entries.iter().filter(|(_, v)| **v != 0.0).map(|(&(p, q), &v)| (p, q, v)).collect(),
        };
        let constant = per_var.get(&0).map(sym).unwrap_or_else(|| SparseSym::new(size));
        let pencil = per_var.iter().filter(|(j, _)| **j != 0).map(|(&j, e)| (j - 1, sym(e))).collect();
        blocks.push(SdpBlock {
            component: 0,
            constraint: k,
            clique: 0,
            indices: (0..size).collect(),
            constant,
            pencil,
        });
    }

    let mut objective = vec![0.0; moments.len() - 1];
    let mut objective_constant = 0.0;
    for (e, c) in terms(&problem.objective) {
        match index[&e] {
            0 => objective_constant += c,
            j => objective[j - 1] += c,
        }
    }
    BlockSdp {
        status: (0..moments.len())
            .map(|j| if j == 0 { VarStatus::FixedOne } else { VarStatus::Free(j - 1) })
            .collect(),
        variables: (1..moments.len()).collect(),
        objective_constant,
        objective,
        blocks,
        equalities: Vec::new(),
    }
}

/// Minimum of the objective over `{±1}^n`.
pub fn hypercube_minimum(problem: &ProblemInstance) -> f64 {
    let f = terms(&problem.objective);
    let n = problem.nvars;
    (0..1u64 << n)
        .map(|bits| {
            let x: Vec<f64> = (0..n).map(|i| if bits >> i & 1 == 1 { -1.0 } else { 1.0 }).collect();
            eval(&f, &x)
        })
        .fold(f64::INFINITY, f64::min)
}

/// Grid search over `[-box, box]^n` followed by pattern search from the best
/// grid points, over the inequality-constrained set of `problem`.
pub fn grid_local_minimum(problem: &ProblemInstance, half_width: f64, steps: usize, seed: u64) -> f64 {
    let f = terms(&problem.objective);
    let gs: Vec<Terms> = problem.constraints.iter().map(|c| terms(&c.poly)).collect();
    let n = problem.nvars;
    let feasible = |x: &[f64]| gs.iter().all(|g| eval(g, x) >= 0.0);

    let axis: Vec<f64> = (0..steps).map(|i| -half_width + 2.0 * half_width * i as f64 / (steps - 1) as f64).collect();
    let mut starts: Vec<(f64, Vec<f64>)> = Vec::new();
    let total = steps.pow(n as u32);
    for code in 0..total {
        let mut c = code;
        let x: Vec<f64> = (0..n)
            .map(|_| {
                let v = axis[c % steps];
                c /= steps;
                v
            })
            .collect();
        if feasible(&x) {
            starts.push((eval(&f, &x), x));
        }
    }
    starts.sort_by(|a, b| a.0.total_cmp(&b.0));
    starts.truncate(20);

    let mut rng = StdRng::seed_from_u64(seed);
    let mut best = f64::INFINITY;
    for (mut fx, mut x) in starts {
        let mut step = half_width / steps as f64;
        while step > 1e-10 {
            let mut improved = false;
            for _ in 0..8 * n {
                let dir: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let norm = dir.iter().map(|d| d * d).sum::<f64>().sqrt();
                let y: Vec<f64> = x.iter().zip(&dir).map(|(xi, d)| xi + step * d / norm).collect();
                if feasible(&y) {
                    let fy = eval(&f, &y);
                    if fy < fx {
                        x = y;
                        fx = fy;
                        improved = true;
                    }
                }
            }
            if !improved {
                step *= 0.5;
            }
        }
        best = best.min(fx);
    }
    best
}

/// Collects named checks and prints one line per criterion.
pub struct Criterion {
    name: &'static str,
    failures: Vec<String>,
    notes: Vec<String>,
}

impl Criterion {
    pub fn new(name: &'static str) -> Self {
        Self {
            name,
            failures: Vec::new(),
            notes: Vec::new(),
        }
    }

    pub fn check(&mut self, ok: bool, what: impl Into<String>) {
        let what = what.into();
        if ok {
            self.notes.push(what);
        } else {
            self.failures.push(what);
        }
    }

    pub fn note(&mut self, what: impl Into<String>) {
        self.notes.push(what.into());
    }

    /// Prints the summary line and panics on failure. The line goes straight
    /// to the stdout handle so the test harness does not capture it; the
    /// details use the captured `eprintln!` and show up on failure.
    pub fn finish(self) {
        for n in &self.notes {
            eprintln!("  [{}] {n}", self.name);
        }
        for f in &self.failures {
            eprintln!("  [{}] FAILED: {f}", self.name);
        }
        let mut out = std::io::stdout().lock();
        if self.failures.is_empty() {
            let _ = writeln!(out, "PASS {}", self.name);
        } else {
            let _ = writeln!(out, "FAIL {} ({} failed checks)", self.name, self.failures.len());
            drop(out);
            panic!("{}: {}", self.name, self.failures.join("; "));
        }
    }
}
