//! Symmetry-adapted term sparsity: support sets over the invariant
//! coordinates, the binary sparsity matrices they induce on each
//! (component, constraint) block, and their closures.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::sdpbuild::tensor::CoefficientTensor;

/// Symmetric 0/1 matrix.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BinaryMatrix {
    size: usize,
    bits: Vec<bool>,
}

impl BinaryMatrix {
    pub fn zeros(size: usize) -> Self {
        Self {
            size,
            bits: vec![false; size * size],
        }
    }

    pub fn ones(size: usize) -> Self {
        Self {
            size,
            bits: vec![true; size * size],
        }
    }

    /// Builds from 0/1 rows; the result is symmetrized by OR.
    pub fn from_rows(rows: &[Vec<u8>]) -> Self {
        let mut m = Self::zeros(rows.len());
        for (a, row) in rows.iter().enumerate() {
            for (b, &v) in row.iter().enumerate() {
                if v != 0 {
                    m.set(a, b);
                }
            }
        }
        m
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, a: usize, b: usize) -> bool {
        self.bits[a * self.size + b]
    }

    /// Sets both `(a, b)` and `(b, a)`.
    pub fn set(&mut self, a: usize, b: usize) {
        self.bits[a * self.size + b] = true;
        self.bits[b * self.size + a] = true;
    }

    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_zero(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    /// True when every one of `other` is also a one here.
    pub fn contains(&self, other: &BinaryMatrix) -> bool {
        self.size == other.size && self.bits.iter().zip(&other.bits).all(|(&a, &b)| a || !b)
    }

    /// Rows with at least one nonzero entry.
    pub fn active(&self) -> Vec<usize> {
        (0..self.size).filter(|&a| (0..self.size).any(|b| self.get(a, b))).collect()
    }

    fn neighbours(&self, a: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.size).filter(move |&b| b != a && self.get(a, b))
    }

    /// Connected components of the graph with edges `(a, b)`, `a != b`,
    /// restricted to active vertices.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.size];
        let mut out = Vec::new();
        for start in self.active() {
            if seen[start] {
                continue;
            }
            seen[start] = true;
            let mut comp = vec![start];
            let mut stack = vec![start];
            while let Some(a) = stack.pop() {
                for b in self.neighbours(a) {
                    if !seen[b] {
                        seen[b] = true;
                        comp.push(b);
                        stack.push(b);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }

    pub fn to_rows(&self) -> Vec<Vec<u8>> {
        (0..self.size)
            .map(|a| (0..self.size).map(|b| self.get(a, b) as u8).collect())
            .collect()
    }
}

impl std::fmt::Display for BinaryMatrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for a in 0..self.size {
            let row: String = (0..self.size).map(|b| if self.get(a, b) { '1' } else { '0' }).collect();
            writeln!(f, "{row}")?;
        }
        Ok(())
    }
}

/// Fills every connected component to a full block. Isolated vertices keep
/// their diagonal entry as is.
pub fn block_closure(b: &BinaryMatrix) -> BinaryMatrix {
    let mut out = BinaryMatrix::zeros(b.size());
    for comp in b.components() {
        if comp.len() == 1 {
            let v = comp[0];
            if b.get(v, v) {
                out.set(v, v);
            }
            continue;
        }
        for &x in &comp {
            for &y in &comp {
                out.set(x, y);
            }
        }
    }
    out
}

/// Chordal extension by greedy minimum-degree elimination (ties broken by
/// lowest index). Returns the extended matrix (with the diagonal of every
/// clique vertex set) and its maximal cliques.
pub fn chordal_extension_min_degree(b: &BinaryMatrix) -> (BinaryMatrix, Vec<Vec<usize>>) {
    let n = b.size();
    let active = b.active();
    let mut adj: Vec<BTreeSet<usize>> = (0..n).map(|a| b.neighbours(a).collect()).collect();
    let mut extended = b.clone();
    let mut remaining: BTreeSet<usize> = active.iter().copied().collect();
    let mut candidates: Vec<Vec<usize>> = Vec::new();
    while let Some(&v) = remaining.iter().min_by_key(|&&v| (adj[v].len(), v)) {
        let nb: Vec<usize> = adj[v].iter().copied().collect();
        for (i, &x) in nb.iter().enumerate() {
            for &y in &nb[i + 1..] {
                if adj[x].insert(y) {
                    adj[y].insert(x);
                    extended.set(x, y);
                }
            }
        }
        let mut clique = nb.clone();
        clique.push(v);
        clique.sort_unstable();
        candidates.push(clique);
        for &x in &nb {
            adj[x].remove(&v);
        }
        adj[v].clear();
        remaining.remove(&v);
    }
    let mut cliques: Vec<Vec<usize>> = Vec::new();
    for c in candidates {
        let subsumed = cliques.iter().any(|d| c.iter().all(|x| d.binary_search(x).is_ok()));
        if !subsumed {
            cliques.retain(|d| !d.iter().all(|x| c.binary_search(x).is_ok()));
            cliques.push(c);
        }
    }
    cliques.sort();
    for c in &cliques {
        for &x in c {
            extended.set(x, x);
        }
    }
    (extended, cliques)
}

/// How each sparsity matrix is completed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum ClosureMode {
    /// Block closure (connected components become full blocks).
    #[default]
    #[serde(rename = "maximal")]
    Maximal,
    /// Chordal extension by minimum-degree elimination.
    #[serde(rename = "md")]
    MinDegree,
}

impl std::str::FromStr for ClosureMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "maximal" => Ok(Self::Maximal),
            "md" | "min_degree" => Ok(Self::MinDegree),
            _ => Err(format!("unknown closure mode `{s}` (expected maximal or md)")),
        }
    }
}

/// Which matrix the next support sets are read from.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SupportSource {
    /// Entries of the matrix before closure.
    #[default]
    PreClosure,
    /// Entries of the closed (or chordally extended) matrix. Only differs
    /// from `PreClosure` where the closure adds entries; with chordal
    /// extensions it lets the fill-in feed the next step.
    Closure,
}

impl std::str::FromStr for SupportSource {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "pre-closure" | "pre_closure" => Ok(Self::PreClosure),
            "closure" => Ok(Self::Closure),
            _ => Err(format!("unknown support source `{s}` (expected pre-closure or closure)")),
        }
    }
}

/// Term-sparsity options.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct TspConfig {
    /// Seed the initial support with the diagonal products `R(w²)` of every
    /// basis element.
    pub diagonal_squares: bool,
    pub closure: ClosureMode,
    #[serde(default)]
    pub support: SupportSource,
}

impl Default for TspConfig {
    fn default() -> Self {
        Self {
            diagonal_squares: true,
            closure: ClosureMode::Maximal,
            support: SupportSource::PreClosure,
        }
    }
}

/// Sparsity pattern of one (component, constraint) block.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BlockPattern {
    /// Matrix before closure.
    pub raw: BinaryMatrix,
    pub closed: BinaryMatrix,
    /// Index sets of the PSD blocks: connected components (maximal) or
    /// maximal cliques (chordal).
    pub cliques: Vec<Vec<usize>>,
}

impl BlockPattern {
    fn new(raw: BinaryMatrix, mode: ClosureMode) -> Self {
        match mode {
            ClosureMode::Maximal => {
                let closed = block_closure(&raw);
                let cliques = closed.components();
                Self { raw, closed, cliques }
            }
            ClosureMode::MinDegree => {
                let (closed, cliques) = chordal_extension_min_degree(&raw);
                Self { raw, closed, cliques }
            }
        }
    }

    /// Dense pattern (all ones) for the unsparsified relaxation.
    pub fn dense(size: usize) -> Self {
        let full = BinaryMatrix::ones(size);
        let cliques = if size == 0 { Vec::new() } else { vec![(0..size).collect()] };
        Self {
            raw: full.clone(),
            closed: full,
            cliques,
        }
    }
}

/// Iteration state of the hierarchy in the sparsity index `s`.
#[derive(Clone, Debug)]
pub struct TspState {
    pub s: usize,
    pub config: TspConfig,
    /// Initial support `B_r` (invariant indices).
    pub initial: BTreeSet<usize>,
    /// `supports[i][k]`: the sets `D^{(i)}_{s,k}`.
    pub supports: Vec<Vec<BTreeSet<usize>>>,
    /// `patterns[i][k]`; empty before the first extension.
    pub patterns: Vec<Vec<BlockPattern>>,
}

/// `supp f ∪ supp g_k ∪ (optionally) supp R(w_a²)` over all components.
pub fn initial_support(tensor: &CoefficientTensor, diagonal_squares: bool) -> BTreeSet<usize> {
    let mut set: BTreeSet<usize> = tensor.objective.iter().map(|(j, _)| *j).collect();
    for g in &tensor.constraints[1..] {
        set.extend(g.coords.iter().map(|(j, _)| *j));
    }
    if diagonal_squares {
        for comp in &tensor.blocks {
            let block = &comp[0];
            for a in 0..block.size {
                set.extend(block.entry(a, a).support());
            }
        }
    }
    set
}

/// Pre-closure sparsity matrices for the next step: entry `(a, b)` of block
/// `(i, k)` is one iff the support of `R(w_a w_b g_k)` meets the union of the
/// current supports of component `i`.
pub fn support_extension(state: &TspState, tensor: &CoefficientTensor) -> Vec<Vec<BinaryMatrix>> {
    tensor
        .blocks
        .iter()
        .enumerate()
        .map(|(i, comp)| {
            let union: BTreeSet<usize> = state.supports[i].iter().flatten().copied().collect();
            comp.iter()
                .map(|block| {
                    let mut m = BinaryMatrix::zeros(block.size);
                    for a in 0..block.size {
                        for b in a..block.size {
                            if block.entry(a, b).support().any(|j| union.contains(&j)) {
                                m.set(a, b);
                            }
                        }
                    }
                    m
                })
                .collect()
        })
        .collect()
}

impl TspState {
    /// State at `s = 0`: `D^{(i)}_{0,0} = B_r` and the other supports empty.
    pub fn new(tensor: &CoefficientTensor, config: TspConfig) -> Self {
        let initial = initial_support(tensor, config.diagonal_squares);
        let supports = (0..tensor.ncomponents())
            .map(|_| {
                let mut v = vec![BTreeSet::new(); tensor.nconstraints()];
                v[0] = initial.clone();
                v
            })
            .collect();
        Self {
            s: 0,
            config,
            initial,
            supports,
            patterns: Vec::new(),
        }
    }

    /// Advances one step. Returns false when the patterns did not change.
    pub fn step(&mut self, tensor: &CoefficientTensor) -> bool {
        let raw = support_extension(self, tensor);
        let patterns: Vec<Vec<BlockPattern>> = raw
            .into_iter()
            .map(|row| row.into_iter().map(|m| BlockPattern::new(m, self.config.closure)).collect())
            .collect();
        let source = self.config.support;
        self.supports = patterns
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(k, p)| {
                        let block = tensor.block(i, k);
                        let m = match source {
                            SupportSource::PreClosure => &p.raw,
                            SupportSource::Closure => &p.closed,
                        };
                        let mut d = BTreeSet::new();
                        for a in 0..block.size {
                            for b in a..block.size {
                                if m.get(a, b) {
                                    d.extend(block.entry(a, b).support());
                                }
                            }
                        }
                        d
                    })
                    .collect()
            })
            .collect();
        let changed = patterns != self.patterns;
        self.patterns = patterns;
        self.s += 1;
        changed
    }

    /// Runs until `s = target` or until the patterns stop changing,
    /// whichever comes first.
    pub fn iterate_to(&mut self, tensor: &CoefficientTensor, target: usize) {
        while self.s < target {
            if !self.step(tensor) {
                break;
            }
        }
    }

    /// Runs until the patterns stop changing (or revisit an earlier step).
    pub fn iterate_to_fixpoint(&mut self, tensor: &CoefficientTensor) {
        let mut seen = vec![self.patterns.clone()];
        while self.step(tensor) {
            if seen.contains(&self.patterns) {
                break;
            }
            seen.push(self.patterns.clone());
        }
    }

    /// All invariant indices in `∪_{i,k} D^{(i)}_{s,k}`.
    pub fn union_support(&self) -> BTreeSet<usize> {
        self.supports.iter().flatten().flatten().copied().collect()
    }

    /// PSD block sizes at the current step, in assembly order.
    pub fn block_sizes(&self) -> Vec<usize> {
        self.patterns
            .iter()
            .flatten()
            .flat_map(|p| p.cliques.iter().map(|c| c.len()))
            .collect()
    }
}

/// Block sizes formatted as `size_count` pairs, e.g. `1_3, 2_1, 3_1`.
pub fn block_profile(sizes: &[usize]) -> String {
    let mut counts = std::collections::BTreeMap::new();
    for &s in sizes {
        *counts.entry(s).or_insert(0usize) += 1;
    }
    counts
        .into_iter()
        .map(|(s, c)| format!("{s}_{c}"))
        .collect::<Vec<_>>()
        .join(", ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn path(n: usize) -> BinaryMatrix {
        let mut m = BinaryMatrix::zeros(n);
        for i in 0..n {
            m.set(i, i);
            if i + 1 < n {
                m.set(i, i + 1);
            }
        }
        m
    }

    #[test]
    fn closure_of_path_is_full() {
        assert_eq!(block_closure(&path(4)), BinaryMatrix::ones(4));
    }

    #[test]
    fn isolated_zero_diagonal_vertex_stays_out() {
        let m = BinaryMatrix::from_rows(&[vec![1, 1, 0], vec![1, 0, 0], vec![0, 0, 0]]);
        let c = block_closure(&m);
        assert_eq!(c.components(), vec![vec![0, 1]]);
        assert!(!c.get(2, 2));
    }

    #[test]
    fn four_cycle_gets_one_chord() {
        let m = BinaryMatrix::from_rows(&[
            vec![1, 1, 0, 1],
            vec![1, 1, 1, 0],
            vec![0, 1, 1, 1],
            vec![1, 0, 1, 1],
        ]);
        let (ext, cliques) = chordal_extension_min_degree(&m);
        assert_eq!(ext.count_ones(), m.count_ones() + 2);
        // vertex 0 is eliminated first and connects 1 and 3
        assert!(ext.get(1, 3));
        assert_eq!(cliques, vec![vec![0, 1, 3], vec![1, 2, 3]]);
    }

    #[test]
    fn profile_format() {
        assert_eq!(block_profile(&[3, 1, 2, 1, 1]), "1_3, 2_1, 3_1");
    }

    fn arb_matrix() -> impl Strategy<Value = BinaryMatrix> {
        (1usize..9).prop_flat_map(|n| {
            proptest::collection::vec(proptest::collection::vec(0u8..2, n), n).prop_map(|rows| BinaryMatrix::from_rows(&rows))
        })
    }

    /// Brute-force chordality: every cycle of length >= 4 has a chord, tested
    /// by checking that a perfect elimination ordering exists.
    fn is_chordal(m: &BinaryMatrix) -> bool {
        let mut remaining: Vec<usize> = (0..m.size()).collect();
        while !remaining.is_empty() {
            let simplicial = remaining.iter().position(|&v| {
                let nb: Vec<usize> = remaining.iter().copied().filter(|&u| u != v && m.get(u, v)).collect();
                nb.iter().all(|&x| nb.iter().all(|&y| x == y || m.get(x, y)))
            });
            match simplicial {
                Some(p) => {
                    remaining.remove(p);
                }
                None => return false,
            }
        }
        true
    }

    proptest! {
        #[test]
        fn closures_are_supersets_and_idempotent(m in arb_matrix()) {
            let c = block_closure(&m);
            prop_assert!(c.contains(&m));
            prop_assert_eq!(block_closure(&c), c.clone());
            let (e, cliques) = chordal_extension_min_degree(&m);
            prop_assert!(e.contains(&m));
            prop_assert!(c.contains(&e));
            prop_assert!(is_chordal(&e));
            for cl in &cliques {
                for &x in cl {
                    for &y in cl {
                        prop_assert!(e.get(x, y));
                    }
                }
            }
            // every edge lies in some clique
            for a in 0..m.size() {
                for b in 0..m.size() {
                    if e.get(a, b) {
                        prop_assert!(cliques.iter().any(|cl| cl.contains(&a) && cl.contains(&b)));
                    }
                }
            }
        }
    }
}
