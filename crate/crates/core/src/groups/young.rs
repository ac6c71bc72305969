//! Young's seminormal form for the irreducible representations of `S_n`.
//!
//! Each partition λ of n gives an irrep whose basis is indexed by the standard
//! Young tableaux of shape λ. The adjacent transposition `s_k = (k, k+1)` acts by
//! at most two nonzero entries per column, all rational.

use num_traits::One;

use super::RatMatrix;
use crate::polyring::{rat, Rational};

/// Partitions of `n` in reverse lexicographic order: `[n]` first, `[1^n]` last.
pub fn partitions(n: usize) -> Vec<Vec<usize>> {
    fn rec(left: usize, max: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if left == 0 {
            out.push(cur.clone());
            return;
        }
        for part in (1..=left.min(max)).rev() {
            cur.push(part);
            rec(left - part, part, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, n, &mut Vec::new(), &mut out);
    out
}

/// A standard tableau stored as the row of each entry `1..=n` (0-based rows).
pub type Tableau = Vec<usize>;

/// Standard Young tableaux of the given shape, ordered lexicographically by
/// row word, so the row-reading tableau comes first.
pub fn standard_tableaux(shape: &[usize]) -> Vec<Tableau> {
    fn rec(shape: &[usize], filled: &mut Vec<usize>, word: &mut Vec<usize>, out: &mut Vec<Tableau>, n: usize) {
        if word.len() == n {
            out.push(word.clone());
            return;
        }
        for row in 0..shape.len() {
            let ok = filled[row] < shape[row] && (row == 0 || filled[row - 1] > filled[row]);
            if ok {
                filled[row] += 1;
                word.push(row);
                rec(shape, filled, word, out, n);
                word.pop();
                filled[row] -= 1;
            }
        }
    }
    let n = shape.iter().sum();
    let mut out = Vec::new();
    rec(shape, &mut vec![0; shape.len()], &mut Vec::new(), &mut out, n);
    out
}

/// Content (column minus row) of every entry of a tableau.
fn contents(t: &Tableau) -> Vec<i64> {
    let mut filled = vec![0i64; t.len() + 1];
    t.iter()
        .map(|&row| {
            let col = filled[row];
            filled[row] += 1;
            col - row as i64
        })
        .collect()
}

/// Seminormal matrices of `s_1, …, s_{n-1}` for the shape, over its standard
/// tableaux in [`standard_tableaux`] order. Column `c` is the image of basis
/// vector `c`.
pub fn seminormal_generators(shape: &[usize]) -> Vec<RatMatrix> {
    let tableaux = standard_tableaux(shape);
    let n: usize = shape.iter().sum();
    let dim = tableaux.len();
    let position: std::collections::HashMap<&Tableau, usize> =
        tableaux.iter().enumerate().map(|(i, t)| (t, i)).collect();
    let all_contents: Vec<Vec<i64>> = tableaux.iter().map(contents).collect();
    let mut gens = Vec::with_capacity(n.saturating_sub(1));
    for k in 0..n.saturating_sub(1) {
        let mut m = RatMatrix::zeros(dim);
        for (a, t) in tableaux.iter().enumerate() {
            let rho = all_contents[a][k + 1] - all_contents[a][k];
            let inv = rat(1, rho);
            m.set(a, a, inv.clone());
            if rho.abs() == 1 {
                continue;
            }
            let mut swapped = t.clone();
            swapped.swap(k, k + 1);
            let b = position[&swapped];
            // the tableau with k in the higher row sends weight 1 to its partner
            let off = if t[k] < t[k + 1] {
                Rational::one()
            } else {
                Rational::one() - inv.clone() * inv
            };
            m.set(b, a, off);
        }
        gens.push(m);
    }
    gens
}

/// Dimension of the irrep for a shape (number of standard tableaux).
pub fn dimension(shape: &[usize]) -> usize {
    standard_tableaux(shape).len()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn partitions_are_reverse_lex() {
        assert_eq!(partitions(3), vec![vec![3], vec![2, 1], vec![1, 1, 1]]);
        assert_eq!(partitions(4).len(), 5);
        assert_eq!(partitions(6).len(), 11);
    }

    #[test]
    fn hook_dimensions() {
        assert_eq!(dimension(&[2, 1]), 2);
        assert_eq!(dimension(&[3, 2, 1]), 16);
        let n6: usize = partitions(6).iter().map(|p| dimension(p).pow(2)).sum();
        assert_eq!(n6, 720);
        assert_eq!(standard_tableaux(&[2, 1])[0], vec![0, 0, 1]);
    }

    #[test]
    fn coxeter_relations_hold() {
        for n in 2..=5 {
            for shape in partitions(n) {
                let g = seminormal_generators(&shape);
                let id = RatMatrix::identity(dimension(&shape));
                for k in 0..g.len() {
                    assert_eq!(g[k].mul(&g[k]), id, "s_k^2 for {shape:?}");
                    if k + 1 < g.len() {
                        let a = g[k].mul(&g[k + 1]);
                        assert_eq!(a.mul(&a).mul(&a), id, "braid for {shape:?}");
                    }
                    for l in k + 2..g.len() {
                        assert_eq!(g[k].mul(&g[l]), g[l].mul(&g[k]), "commute for {shape:?}");
                    }
                }
            }
        }
    }
}
