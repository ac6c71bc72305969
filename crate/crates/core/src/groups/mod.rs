//! Finite groups of (signed) variable permutations, their conjugacy classes and
//! irreducible matrix representations.
//!
//! A group is enumerated once by breadth-first closure of its generators. The
//! breadth-first tree is kept so that a representation given only on the
//! generators can be extended to every element by one matrix product each.

mod spec;
pub mod young;

use std::collections::{HashMap, VecDeque};

use nalgebra::DMatrix;
use num_complex::Complex64;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::polyring::{monomials_up_to, Coeff, GroupElement, Rational};

pub use spec::{builtin_irreps, GroupSpec, ProductAction};

/// Default limit on the number of enumerated group elements.
pub const DEFAULT_GROUP_CAP: usize = 1_000_000;

/// Tolerance for comparing floating-point characters and matrix entries.
pub const CHARACTER_TOL: f64 = 1e-9;

pub type CMatrix = DMatrix<Complex64>;

/// Dense square matrix over the rationals.
#[derive(Clone, PartialEq, Debug)]
pub struct RatMatrix {
    dim: usize,
    data: Vec<Rational>,
}

impl RatMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![Rational::zero(); dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.set(i, i, Rational::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<Rational>>) -> Result<Self> {
        let dim = rows.len();
        let mut data = Vec::with_capacity(dim * dim);
        for row in rows {
            if row.len() != dim {
                return Err(Error::Dimension {
                    expected: dim,
                    found: row.len(),
                });
            }
            data.extend(row);
        }
        Ok(Self { dim, data })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn data(&self) -> &[Rational] {
        &self.data
    }

    pub fn get(&self, i: usize, j: usize) -> &Rational {
        &self.data[i * self.dim + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: Rational) {
        self.data[i * self.dim + j] = v;
    }

    /// Matrix product, skipping zero entries of `self`.
    pub fn mul(&self, other: &Self) -> Self {
        let d = self.dim;
        let mut out = Self::zeros(d);
        for i in 0..d {
            for k in 0..d {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..d {
                    let b = other.get(k, j);
                    if !b.is_zero() {
                        out.data[i * d + j] += a * b;
                    }
                }
            }
        }
        out
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.dim);
        for i in 0..self.dim {
            for j in 0..self.dim {
                out.set(j, i, self.get(i, j).clone());
            }
        }
        out
    }

    pub fn trace(&self) -> Rational {
        (0..self.dim).map(|i| self.get(i, i).clone()).sum()
    }

    pub fn to_complex(&self) -> CMatrix {
        CMatrix::from_fn(self.dim, self.dim, |i, j| Complex64::new(self.get(i, j).to_f64(), 0.0))
    }
}

/// A conjugacy class given by member indices; the representative is the
/// smallest member.
#[derive(Clone, Debug, PartialEq)]
pub struct ConjugacyClass {
    pub representative: usize,
    pub members: Vec<usize>,
}

impl ConjugacyClass {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// An enumerated finite group acting on `nvars` variables.
///
/// Elements are sorted by image sequence, so the identity has index 0.
#[derive(Clone, Debug)]
pub struct Group {
    nvars: usize,
    elements: Vec<GroupElement>,
    index: HashMap<GroupElement, usize>,
    generators: Vec<GroupElement>,
    /// `tree[e] = Some((g, p))` means `elements[e] = generators[g] ∘ elements[p]`.
    tree: Vec<Option<(usize, usize)>>,
    /// Element indices in breadth-first order; parents precede children.
    bfs_order: Vec<usize>,
    inverses: Vec<usize>,
    classes: Vec<ConjugacyClass>,
    class_of: Vec<usize>,
}

/// Enumerates the group generated by `gens` on `nvars` variables.
pub fn close_generators(gens: &[GroupElement], nvars: usize, cap: usize) -> Result<Group> {
    for g in gens {
        if g.nvars() != nvars {
            return Err(Error::Dimension {
                expected: nvars,
                found: g.nvars(),
            });
        }
    }
    let id = GroupElement::identity(nvars);
    let mut found: Vec<GroupElement> = vec![id.clone()];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None];
    let mut seen: HashMap<GroupElement, usize> = HashMap::from([(id, 0)]);
    let mut queue = VecDeque::from([0usize]);
    while let Some(e) = queue.pop_front() {
        for (gi, g) in gens.iter().enumerate() {
            let h = g.compose(&found[e]);
            if seen.contains_key(&h) {
                continue;
            }
            if found.len() >= cap {
                return Err(Error::GroupTooLarge { cap });
            }
            seen.insert(h.clone(), found.len());
            queue.push_back(found.len());
            found.push(h);
            parent.push(Some((gi, e)));
        }
    }

    // sort by image sequence and remap the tree
    let mut order: Vec<usize> = (0..found.len()).collect();
    order.sort_by(|&a, &b| found[a].cmp(&found[b]));
    let mut new_index = vec![0; found.len()];
    for (new, &old) in order.iter().enumerate() {
        new_index[old] = new;
    }
    let elements: Vec<GroupElement> = order.iter().map(|&old| found[old].clone()).collect();
    let tree = order
        .iter()
        .map(|&old| parent[old].map(|(g, p)| (g, new_index[p])))
        .collect();
    let bfs_order = (0..found.len()).map(|old| new_index[old]).collect();
    let index: HashMap<GroupElement, usize> = elements
        .iter()
        .enumerate()
        .map(|(i, e)| (e.clone(), i))
        .collect();
    let inverses = elements.iter().map(|e| index[&e.inverse()]).collect();

    let mut group = Group {
        nvars,
        elements,
        index,
        generators: gens.to_vec(),
        tree,
        bfs_order,
        inverses,
        classes: Vec::new(),
        class_of: Vec::new(),
    };
    group.compute_classes();
    Ok(group)
}

impl Group {
    /// The trivial group on `nvars` variables.
    pub fn trivial(nvars: usize) -> Self {
        close_generators(&[], nvars, 1).expect("trivial group always fits")
    }

    fn compute_classes(&mut self) {
        let n = self.elements.len();
        let mut class_of = vec![usize::MAX; n];
        let mut classes = Vec::new();
        let gen_inv: Vec<GroupElement> = self.generators.iter().map(|g| g.inverse()).collect();
        for start in 0..n {
            if class_of[start] != usize::MAX {
                continue;
            }
            let c = classes.len();
            let mut members = vec![start];
            class_of[start] = c;
            let mut queue = VecDeque::from([start]);
            while let Some(x) = queue.pop_front() {
                for (g, gi) in self.generators.iter().zip(&gen_inv) {
                    let y = g.compose(&self.elements[x]).compose(gi);
                    let yi = self.index[&y];
                    if class_of[yi] == usize::MAX {
                        class_of[yi] = c;
                        members.push(yi);
                        queue.push_back(yi);
                    }
                }
            }
            members.sort_unstable();
            classes.push(ConjugacyClass {
                representative: members[0],
                members,
            });
        }
        self.classes = classes;
        self.class_of = class_of;
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn order(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[GroupElement] {
        &self.elements
    }

    pub fn element(&self, i: usize) -> &GroupElement {
        &self.elements[i]
    }

    pub fn index_of(&self, g: &GroupElement) -> Option<usize> {
        self.index.get(g).copied()
    }

    pub fn inverse_index(&self, i: usize) -> usize {
        self.inverses[i]
    }

    /// Index of `elements[a] ∘ elements[b]`.
    pub fn compose_index(&self, a: usize, b: usize) -> usize {
        self.index[&self.elements[a].compose(&self.elements[b])]
    }

    pub fn generators(&self) -> &[GroupElement] {
        &self.generators
    }

    pub fn classes(&self) -> &[ConjugacyClass] {
        &self.classes
    }

    pub fn class_of(&self, i: usize) -> usize {
        self.class_of[i]
    }

    pub fn has_sign_changes(&self) -> bool {
        self.elements.iter().any(|g| g.has_flips())
    }

    /// Extends generator images to a matrix for every element along the
    /// breadth-first tree. No homomorphism check is made here.
    fn extend_images<M: Clone>(&self, identity: M, images: &[M], mul: impl Fn(&M, &M) -> M) -> Vec<M> {
        let mut out: Vec<Option<M>> = vec![None; self.order()];
        for &e in &self.bfs_order {
            out[e] = Some(match self.tree[e] {
                None => identity.clone(),
                Some((g, p)) => mul(&images[g], out[p].as_ref().expect("parent visited first")),
            });
        }
        out.into_iter().map(|m| m.expect("all elements reached")).collect()
    }
}

/// Matrices of a representation on every group element.
#[derive(Clone, Debug)]
pub enum IrrepMatrices {
    Exact(Vec<RatMatrix>),
    Numeric(Vec<CMatrix>),
}

/// Generator images of a representation, from which all matrices are built.
#[derive(Clone, Debug)]
pub enum GeneratorImages {
    Exact(Vec<RatMatrix>),
    Numeric(Vec<CMatrix>),
}

/// Irreducible matrix representation `θ: G → GL_d(C)`.
#[derive(Clone, Debug)]
pub struct Irrep {
    pub name: String,
    pub dim: usize,
    pub matrices: IrrepMatrices,
    /// Index of the complex-conjugate irrep when the character is not real.
    pub conjugate: Option<usize>,
}

impl Irrep {
    /// Builds the representation from generator images (in the group's
    /// generator order).
    pub fn from_generator_images(group: &Group, name: impl Into<String>, dim: usize, images: GeneratorImages) -> Result<Self> {
        let ngens = group.generators().len();
        let matrices = match images {
            GeneratorImages::Exact(gens) => {
                check_image_count(ngens, gens.len())?;
                if gens.iter().any(|m| m.dim() != dim) {
                    return Err(Error::InconsistentIrreps(format!("generator image of wrong size for {dim}-dimensional irrep")));
                }
                IrrepMatrices::Exact(group.extend_images(RatMatrix::identity(dim), &gens, |a, b| a.mul(b)))
            }
            GeneratorImages::Numeric(gens) => {
                check_image_count(ngens, gens.len())?;
                if gens.iter().any(|m| m.nrows() != dim || m.ncols() != dim) {
                    return Err(Error::InconsistentIrreps(format!("generator image of wrong size for {dim}-dimensional irrep")));
                }
                IrrepMatrices::Numeric(group.extend_images(CMatrix::identity(dim, dim), &gens, |a, b| a * b))
            }
        };
        Ok(Self {
            name: name.into(),
            dim,
            matrices,
            conjugate: None,
        })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.matrices, IrrepMatrices::Exact(_))
    }

    /// Entry `(row, col)` of the matrix of element `e`.
    pub fn entry(&self, e: usize, row: usize, col: usize) -> Complex64 {
        match &self.matrices {
            IrrepMatrices::Exact(m) => Complex64::new(m[e].get(row, col).to_f64(), 0.0),
            IrrepMatrices::Numeric(m) => m[e][(row, col)],
        }
    }

    pub fn exact_entry(&self, e: usize, row: usize, col: usize) -> Option<&Rational> {
        match &self.matrices {
            IrrepMatrices::Exact(m) => Some(m[e].get(row, col)),
            IrrepMatrices::Numeric(_) => None,
        }
    }

    pub fn matrix(&self, e: usize) -> CMatrix {
        match &self.matrices {
            IrrepMatrices::Exact(m) => m[e].to_complex(),
            IrrepMatrices::Numeric(m) => m[e].clone(),
        }
    }

    pub fn character(&self, e: usize) -> Complex64 {
        match &self.matrices {
            IrrepMatrices::Exact(m) => Complex64::new(m[e].trace().to_f64(), 0.0),
            IrrepMatrices::Numeric(m) => m[e].trace(),
        }
    }

    /// True when some matrix entry has a nonzero imaginary part.
    pub fn is_complex(&self) -> bool {
        match &self.matrices {
            IrrepMatrices::Exact(_) => false,
            IrrepMatrices::Numeric(m) => m.iter().any(|x| x.iter().any(|z| z.im.abs() > CHARACTER_TOL)),
        }
    }

    /// Checks `θ(g ∘ e) = θ(g) θ(e)` for every generator `g` and element `e`.
    pub fn check_homomorphism(&self, group: &Group) -> Result<()> {
        let gens: Vec<usize> = group
            .generators()
            .iter()
            .map(|g| group.index_of(g).expect("generator is an element"))
            .collect();
        for e in 0..group.order() {
            for &g in &gens {
                let ge = group.compose_index(g, e);
                let ok = match &self.matrices {
                    IrrepMatrices::Exact(m) => m[g].mul(&m[e]) == m[ge],
                    IrrepMatrices::Numeric(m) => (&m[g] * &m[e] - &m[ge]).camax() < CHARACTER_TOL,
                };
                if !ok {
                    return Err(Error::InconsistentIrreps(format!(
                        "{} is not multiplicative at {}",
                        self.name,
                        group.element(e)
                    )));
                }
            }
        }
        Ok(())
    }
}

fn check_image_count(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::InconsistentIrreps(format!(
            "expected {expected} generator images, found {found}"
        )));
    }
    Ok(())
}

/// Fills in the `conjugate` links and rejects complex matrices with a real
/// character (those would need a quaternionic realification).
pub(crate) fn link_conjugates(group: &Group, irreps: &mut [Irrep]) -> Result<()> {
    let table = CharacterTable::new(group, irreps);
    for i in 0..irreps.len() {
        let row = &table.values[i];
        let real = row.iter().all(|z| z.im.abs() < CHARACTER_TOL);
        if real {
            if irreps[i].is_complex() {
                return Err(Error::UnsupportedGroup(format!(
                    "irrep {} has a real character but complex matrices",
                    irreps[i].name
                )));
            }
            continue;
        }
        let j = (0..irreps.len()).find(|&j| {
            table.values[j]
                .iter()
                .zip(row)
                .all(|(a, b)| (a - b.conj()).norm() < CHARACTER_TOL)
        });
        match j {
            Some(j) if j != i => irreps[i].conjugate = Some(j),
            _ => {
                return Err(Error::InconsistentIrreps(format!(
                    "no conjugate irrep found for {}",
                    irreps[i].name
                )))
            }
        }
    }
    Ok(())
}

/// Checks completeness of an irrep list: one irrep per class, `Σ d_i² = |G|`,
/// trivial first.
pub fn check_irreps(group: &Group, irreps: &[Irrep]) -> Result<()> {
    if irreps.len() != group.classes().len() {
        return Err(Error::InconsistentIrreps(format!(
            "{} irreps for {} conjugacy classes",
            irreps.len(),
            group.classes().len()
        )));
    }
    let sum: usize = irreps.iter().map(|r| r.dim * r.dim).sum();
    if sum != group.order() {
        return Err(Error::InconsistentIrreps(format!(
            "sum of squared dimensions {sum} differs from group order {}",
            group.order()
        )));
    }
    let trivial = &irreps[0];
    if trivial.dim != 1 || (0..group.order()).any(|e| (trivial.character(e) - 1.0).norm() > CHARACTER_TOL) {
        return Err(Error::InconsistentIrreps("first irrep is not the trivial representation".into()));
    }
    Ok(())
}

/// Characters `χ^{(i)}` on class representatives.
#[derive(Clone, Debug)]
pub struct CharacterTable {
    /// `values[i][c]` is the character of irrep `i` on class `c`.
    pub values: Vec<Vec<Complex64>>,
    pub class_sizes: Vec<usize>,
}

impl CharacterTable {
    pub fn new(group: &Group, irreps: &[Irrep]) -> Self {
        let values = irreps
            .iter()
            .map(|irrep| {
                group
                    .classes()
                    .iter()
                    .map(|c| irrep.character(c.representative))
                    .collect()
            })
            .collect();
        let class_sizes = group.classes().iter().map(|c| c.size()).collect();
        Self { values, class_sizes }
    }

    /// Class-weighted inner product `(1/|G|) Σ_c |c| χ_i(c) conj(χ_j(c))`.
    pub fn inner(&self, i: usize, j: usize) -> Complex64 {
        let order: usize = self.class_sizes.iter().sum();
        let s: Complex64 = self.values[i]
            .iter()
            .zip(&self.values[j])
            .zip(&self.class_sizes)
            .map(|((a, b), &n)| a * b.conj() * n as f64)
            .sum();
        s / order as f64
    }
}

/// Trace of `g` on polynomials of degree at most `r`: signed count of
/// monomials mapped to `±` themselves.
fn induced_trace(g: &GroupElement, monomials: &[crate::polyring::ExponentVector]) -> i64 {
    monomials
        .iter()
        .map(|m| {
            let (img, neg) = m.act(g);
            match (img == *m, neg) {
                (false, _) => 0,
                (true, false) => 1,
                (true, true) => -1,
            }
        })
        .sum()
}

/// Multiplicity of each irrep in the polynomials of degree at most `r`.
pub fn multiplicities(group: &Group, irreps: &[Irrep], r: usize) -> Result<Vec<usize>> {
    let monomials = monomials_up_to(group.nvars(), r);
    let table = CharacterTable::new(group, irreps);
    let traces: Vec<f64> = group
        .classes()
        .iter()
        .map(|c| induced_trace(group.element(c.representative), &monomials) as f64)
        .collect();
    let mut out = Vec::with_capacity(irreps.len());
    let mut total = 0usize;
    for (i, irrep) in irreps.iter().enumerate() {
        let m: Complex64 = table.values[i]
            .iter()
            .zip(&traces)
            .zip(&table.class_sizes)
            .map(|((chi, t), &n)| chi.conj() * (*t * n as f64))
            .sum::<Complex64>()
            / group.order() as f64;
        let rounded = m.re.round();
        if (m - Complex64::new(rounded, 0.0)).norm() > 1e-6 || rounded < 0.0 {
            return Err(Error::InconsistentIrreps(format!(
                "multiplicity of {} is {m}, not a nonnegative integer",
                irrep.name
            )));
        }
        total += rounded as usize * irrep.dim;
        out.push(rounded as usize);
    }
    if total != monomials.len() {
        return Err(Error::InconsistentIrreps(format!(
            "multiplicities account for dimension {total}, expected {}",
            monomials.len()
        )));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn perm(images: &[usize]) -> GroupElement {
        GroupElement::from_images(images).unwrap()
    }

    #[test]
    fn closure_orders() {
        let s3 = close_generators(&[perm(&[2, 1, 3]), perm(&[1, 3, 2])], 3, 100).unwrap();
        assert_eq!(s3.order(), 6);
        assert!(s3.element(0).is_identity());
        assert_eq!(Group::trivial(4).order(), 1);
        let d10 = close_generators(&[perm(&[2, 3, 4, 5, 1]), perm(&[1, 5, 4, 3, 2])], 5, 100).unwrap();
        assert_eq!(d10.order(), 10);
        let err = close_generators(&[perm(&[2, 1, 3]), perm(&[1, 3, 2])], 3, 5).unwrap_err();
        assert!(matches!(err, Error::GroupTooLarge { cap: 5 }));
    }

    #[test]
    fn elements_are_sorted_and_closed() {
        let g = close_generators(&[perm(&[2, 3, 4, 1]), perm(&[2, 1, 3, 4])], 4, 100).unwrap();
        assert_eq!(g.order(), 24);
        let mut sorted = g.elements().to_vec();
        sorted.sort();
        assert_eq!(sorted, g.elements());
        for a in 0..g.order() {
            assert_eq!(g.compose_index(a, g.inverse_index(a)), 0);
        }
    }

    #[test]
    fn s3_classes() {
        let s3 = close_generators(&[perm(&[2, 1, 3]), perm(&[1, 3, 2])], 3, 100).unwrap();
        let mut sizes: Vec<usize> = s3.classes().iter().map(|c| c.size()).collect();
        assert_eq!(s3.classes()[0].members, vec![0]);
        sizes.sort();
        assert_eq!(sizes, vec![1, 2, 3]);
        let sigma1 = s3.index_of(&perm(&[2, 1, 3])).unwrap();
        let sigma12 = s3.compose_index(sigma1, s3.index_of(&perm(&[1, 3, 2])).unwrap());
        assert_eq!(s3.classes()[s3.class_of(sigma1)].size(), 3);
        assert_eq!(s3.classes()[s3.class_of(sigma12)].size(), 2);
    }

    #[test]
    fn abelian_classes_are_singletons() {
        let c4 = close_generators(&[perm(&[2, 3, 4, 1])], 4, 100).unwrap();
        assert_eq!(c4.classes().len(), 4);
        assert!(c4.classes().iter().all(|c| c.size() == 1));
        assert_eq!(Group::trivial(2).classes().len(), 1);
    }
}
