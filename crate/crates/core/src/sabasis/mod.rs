//! Isotypic projections, symmetry-adapted bases and invariant coordinates.
//!
//! The invariant polynomials of degree at most `2r` are spanned by orbit sums,
//! which serve as the coordinate system for pseudomoments. Each nontrivial
//! isotypic component is represented by the image of the first projection
//! operator applied to all monomials of degree at most `r`.

use std::collections::{BTreeMap, HashMap, HashSet};

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::groups::{multiplicities, Group, Irrep, IrrepMatrices};
use crate::polyring::{monomials_up_to, Coeff, ExponentVector, GroupElement, Polynomial, Rational};

/// Zero tolerance for every support decision on floating-point data.
pub const ZERO_TOL: f64 = 1e-10;

/// Relative residual below which a floating-point candidate is considered
/// linearly dependent on the already extracted basis elements.
pub const PIVOT_TOL: f64 = 1e-8;

/// Orbit sums of all monomials up to a degree, and the map from a monomial
/// to its Reynolds image.
#[derive(Clone, Debug)]
pub struct InvariantBasis {
    nvars: usize,
    max_degree: usize,
    elements: Vec<Polynomial>,
    orbit_sizes: Vec<usize>,
    /// `m ↦ (j, c)` with `R(m) = c · elements[j]`.
    lookup: HashMap<ExponentVector, (usize, Rational, f64)>,
    /// Monomials whose signed orbit cancels, so `R(m) = 0`.
    vanishing: HashSet<ExponentVector>,
    generators: Vec<GroupElement>,
}

impl InvariantBasis {
    pub fn new(group: &Group, max_degree: usize) -> Self {
        let nvars = group.nvars();
        let mut elements = Vec::new();
        let mut orbit_sizes = Vec::new();
        let mut lookup = HashMap::new();
        let mut vanishing = HashSet::new();
        for m in monomials_up_to(nvars, max_degree) {
            if lookup.contains_key(&m) || vanishing.contains(&m) {
                continue;
            }
            // monomials arrive in term order, so `m` is the orbit's lead
            let mut orbit: BTreeMap<ExponentVector, bool> = BTreeMap::new();
            let mut cancels = false;
            for g in group.elements() {
                let (img, neg) = m.act(g);
                match orbit.get(&img) {
                    Some(&s) if s != neg => cancels = true,
                    Some(_) => {}
                    None => {
                        orbit.insert(img, neg);
                    }
                }
            }
            if cancels {
                vanishing.extend(orbit.into_keys());
                continue;
            }
            let j = elements.len();
            let size = orbit.len();
            let mut sum = Polynomial::zero(nvars);
            for (img, neg) in orbit {
                let sign = if neg { -Rational::one() } else { Rational::one() };
                let factor = sign.clone() / Rational::from_integer(size.into());
                let ff = factor.to_f64();
                sum.add_term(img.clone(), sign);
                lookup.insert(img, (j, factor, ff));
            }
            elements.push(sum);
            orbit_sizes.push(size);
        }
        Self {
            nvars,
            max_degree,
            elements,
            orbit_sizes,
            lookup,
            vanishing,
            generators: group.generators().to_vec(),
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn elements(&self) -> &[Polynomial] {
        &self.elements
    }

    pub fn element(&self, j: usize) -> &Polynomial {
        &self.elements[j]
    }

    pub fn orbit_size(&self, j: usize) -> usize {
        self.orbit_sizes[j]
    }

    pub fn degree(&self, j: usize) -> usize {
        self.lead(j).degree()
    }

    /// Lead monomial of the `j`-th orbit sum (first in term order).
    pub fn lead(&self, j: usize) -> &ExponentVector {
        self.elements[j].leading_term().expect("orbit sums are nonzero").0
    }

    /// Index of the orbit sum containing the monomial, if its orbit does not cancel.
    pub fn index_of(&self, m: &ExponentVector) -> Option<usize> {
        self.lookup.get(m).map(|(j, _, _)| *j)
    }

    /// Label built from the sorted exponent pattern of the lead, e.g. `a211`.
    pub fn pattern_label(&self, j: usize) -> String {
        let mut e: Vec<u32> = self.lead(j).exponents().iter().copied().filter(|&x| x > 0).collect();
        if e.is_empty() {
            return "1".into();
        }
        e.sort_unstable_by(|a, b| b.cmp(a));
        let digits: Vec<String> = e.iter().map(|x| x.to_string()).collect();
        format!("a{}", digits.join(""))
    }

    /// Coordinates of `R(p)` in the orbit-sum basis, sorted by index and with
    /// negligible entries removed.
    pub fn reynolds_coordinates<C: Coeff>(&self, p: &Polynomial<C>) -> Result<Vec<(usize, C)>> {
        if p.nvars() != self.nvars {
            return Err(Error::Dimension {
                expected: self.nvars,
                found: p.nvars(),
            });
        }
        let mut acc: BTreeMap<usize, C> = BTreeMap::new();
        for (m, c) in p.terms() {
            match self.lookup.get(m) {
                Some((j, factor, _)) => {
                    let v = c.clone() * C::from_rational(factor);
                    let slot = acc.entry(*j).or_insert_with(C::zero);
                    *slot = slot.clone() + v;
                }
                None if self.vanishing.contains(m) => {}
                None => {
                    return Err(Error::Degree {
                        degree: m.degree(),
                        bound: self.max_degree,
                    })
                }
            }
        }
        Ok(acc.into_iter().filter(|(_, v)| !v.is_negligible(ZERO_TOL)).collect())
    }

    /// `Σ_j c_j · elements[j]`.
    pub fn combine(&self, coords: &[(usize, Rational)]) -> Polynomial {
        let mut out = Polynomial::zero(self.nvars);
        for (j, c) in coords {
            out = &out + &self.elements[*j].scale(c);
        }
        out
    }

    fn is_invariant(&self, p: &Polynomial) -> Result<bool> {
        p.is_fixed_by(&self.generators)
    }
}

/// Image of an isotypic projection. Complex irreps give a real and an
/// imaginary part.
#[derive(Clone, Debug, PartialEq)]
pub enum Projection {
    Exact(Polynomial),
    Numeric {
        re: Polynomial<f64>,
        im: Polynomial<f64>,
    },
}

impl Projection {
    pub fn is_zero(&self) -> bool {
        match self {
            Self::Exact(p) => p.is_zero(),
            Self::Numeric { re, im } => re.is_zero() && im.is_zero(),
        }
    }
}

/// `π_u p = (d/|G|) Σ_σ θ(σ⁻¹)_{0,u} p^σ` with 0-based `u`; it maps the span
/// of first basis vectors onto the `u`-th copy, and `π_0` is a projection.
pub fn isotypic_projection(p: &Polynomial, group: &Group, irrep: &Irrep, u: usize) -> Result<Projection> {
    if u >= irrep.dim {
        return Err(Error::Index(format!("row {u} out of range for a {}-dimensional irrep", irrep.dim)));
    }
    if p.nvars() != group.nvars() {
        return Err(Error::Dimension {
            expected: group.nvars(),
            found: p.nvars(),
        });
    }
    let scale = irrep.dim as f64 / group.order() as f64;
    match &irrep.matrices {
        IrrepMatrices::Exact(m) => {
            let scale = Rational::new(irrep.dim.into(), group.order().into());
            let weights: Vec<Rational> = (0..group.order())
                .map(|e| m[group.inverse_index(e)].get(0, u) * &scale)
                .collect();
            Ok(Projection::Exact(weighted_images(p, group, &weights)))
        }
        IrrepMatrices::Numeric(m) => {
            let pf = p.to_f64();
            let (re_w, im_w): (Vec<f64>, Vec<f64>) = (0..group.order())
                .map(|e| {
                    let z = m[group.inverse_index(e)][(0, u)] * scale;
                    (z.re, z.im)
                })
                .unzip();
            Ok(Projection::Numeric {
                re: weighted_images(&pf, group, &re_w).pruned(ZERO_TOL),
                im: weighted_images(&pf, group, &im_w).pruned(ZERO_TOL),
            })
        }
    }
}

/// `Σ_σ w_σ p^σ`.
fn weighted_images<C: Coeff>(p: &Polynomial<C>, group: &Group, weights: &[C]) -> Polynomial<C> {
    let mut out = Polynomial::zero(p.nvars());
    for (g, w) in group.elements().iter().zip(weights) {
        if w.is_negligible(0.0) {
            continue;
        }
        for (m, c) in p.terms() {
            let (img, neg) = m.act(g);
            let v = c.clone() * w.clone();
            out.add_term(img, if neg { -v } else { v });
        }
    }
    out
}

/// Basis polynomials of one isotypic component.
#[derive(Clone, Debug)]
pub enum ComponentPolys {
    Exact(Vec<Polynomial>),
    Numeric(Vec<Polynomial<f64>>),
}

/// One real isotypic component: a single irrep, or a merged pair of complex
/// conjugate irreps.
#[derive(Clone, Debug)]
pub struct Component {
    pub name: String,
    /// Irrep indices; two entries for a merged conjugate pair.
    pub irreps: Vec<usize>,
    /// Dimension of the (complex) irrep.
    pub irrep_dim: usize,
    pub polys: ComponentPolys,
}

impl Component {
    pub fn len(&self) -> usize {
        match &self.polys {
            ComponentPolys::Exact(p) => p.len(),
            ComponentPolys::Numeric(p) => p.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_exact(&self) -> bool {
        matches!(self.polys, ComponentPolys::Exact(_))
    }

    pub fn degree(&self, j: usize) -> usize {
        match &self.polys {
            ComponentPolys::Exact(p) => p[j].degree(),
            ComponentPolys::Numeric(p) => p[j].degree(),
        }
    }

    /// Number of basis elements of degree at most `deg`; these form a prefix.
    pub fn count_up_to(&self, deg: usize) -> usize {
        (0..self.len()).take_while(|&j| self.degree(j) <= deg).count()
    }

    pub fn exact(&self, j: usize) -> Option<&Polynomial> {
        match &self.polys {
            ComponentPolys::Exact(p) => Some(&p[j]),
            ComponentPolys::Numeric(_) => None,
        }
    }

    pub fn to_f64(&self, j: usize) -> Polynomial<f64> {
        match &self.polys {
            ComponentPolys::Exact(p) => p[j].to_f64(),
            ComponentPolys::Numeric(p) => p[j].clone(),
        }
    }
}

/// Bases `S^{(i)}_r` of all isotypic components plus the invariant coordinate
/// system up to degree `2r`.
#[derive(Clone, Debug)]
pub struct SymmetryAdaptedBasis {
    pub order: usize,
    pub components: Vec<Component>,
    pub invariant: InvariantBasis,
}

impl SymmetryAdaptedBasis {
    pub fn nvars(&self) -> usize {
        self.invariant.nvars()
    }

    /// Component sizes, i.e. dense block sizes of the moment matrix.
    pub fn sizes(&self) -> Vec<usize> {
        self.components.iter().map(|c| c.len()).collect()
    }
}

/// Extracts the symmetry-adapted basis of polynomials of degree at most `r`.
pub fn symmetry_adapted_basis(group: &Group, irreps: &[Irrep], r: usize) -> Result<SymmetryAdaptedBasis> {
    let mults = multiplicities(group, irreps, r)?;
    let monomials = monomials_up_to(group.nvars(), r);
    let mut slots = Vec::new();
    for (i, irrep) in irreps.iter().enumerate() {
        match irrep.conjugate {
            Some(j) if j < i => continue,
            Some(j) => slots.push((vec![i, j], 2 * mults[i])),
            None => slots.push((vec![i], mults[i])),
        }
    }
    let components = slots
        .into_par_iter()
        .map(|(ids, expected)| extract_component(group, irreps, ids, expected, &monomials))
        .collect::<Result<Vec<_>>>()?;
    Ok(SymmetryAdaptedBasis {
        order: r,
        components,
        invariant: InvariantBasis::new(group, 2 * r),
    })
}

fn extract_component(group: &Group, irreps: &[Irrep], ids: Vec<usize>, expected: usize, monomials: &[ExponentVector]) -> Result<Component> {
    let irrep = &irreps[ids[0]];
    let name = if ids.len() == 2 {
        format!("{}+{}", irrep.name, irreps[ids[1]].name)
    } else {
        irrep.name.clone()
    };
    let nvars = group.nvars();
    let polys = if irrep.is_exact() {
        let mut echelon = ExactEchelon::default();
        let mut kept = Vec::new();
        for m in monomials {
            if kept.len() == expected {
                break;
            }
            let Projection::Exact(p) = isotypic_projection(&Polynomial::monomial(m.clone(), Rational::one()), group, irrep, 0)? else {
                unreachable!("exact irrep yields exact projection")
            };
            if !p.is_zero() && echelon.insert(&p) {
                kept.push(p.primitive());
            }
        }
        ComponentPolys::Exact(kept)
    } else {
        let mut echelon = FloatEchelon::default();
        let mut kept = Vec::new();
        for m in monomials {
            if kept.len() == expected {
                break;
            }
            let Projection::Numeric { re, im } = isotypic_projection(&Polynomial::monomial(m.clone(), Rational::one()), group, irrep, 0)? else {
                unreachable!("numeric irrep yields numeric projection")
            };
            for cand in [re, im] {
                if !cand.is_zero() && kept.len() < expected && echelon.insert(&cand) {
                    kept.push(normalize_float(&cand));
                }
            }
        }
        ComponentPolys::Numeric(kept)
    };
    let component = Component {
        name,
        irreps: ids,
        irrep_dim: irrep.dim,
        polys,
    };
    if component.len() != expected {
        return Err(Error::BasisExtraction(format!(
            "component {} has rank {} but multiplicity {expected}",
            component.name,
            component.len()
        )));
    }
    debug_assert!(nvars == group.nvars());
    Ok(component)
}

/// Scales to max |coefficient| 1 with a positive leading coefficient.
fn normalize_float(p: &Polynomial<f64>) -> Polynomial<f64> {
    let max = p.max_abs_coeff();
    let lead = p.leading_term().map(|(_, c)| *c).unwrap_or(1.0);
    let s = if lead < 0.0 { -1.0 / max } else { 1.0 / max };
    p.scale(&s).pruned(ZERO_TOL)
}

/// Reduced row echelon form over the rationals, rows keyed by pivot monomial.
#[derive(Default)]
struct ExactEchelon {
    rows: Vec<(ExponentVector, Polynomial)>,
}

impl ExactEchelon {
    /// Adds `p` if it is independent of the current rows.
    fn insert(&mut self, p: &Polynomial) -> bool {
        let mut r = p.clone();
        for (pivot, row) in &self.rows {
            if let Some(c) = r.coeff(pivot).cloned() {
                r = &r - &row.scale(&c);
            }
        }
        let Some((pivot, c)) = r.leading_term().map(|(e, c)| (e.clone(), c.clone())) else {
            return false;
        };
        let r = r.scale(&(Rational::one() / c));
        for (_, row) in &mut self.rows {
            if let Some(c) = row.coeff(&pivot).cloned() {
                *row = &*row - &r.scale(&c);
            }
        }
        self.rows.push((pivot, r));
        true
    }
}

/// Orthonormal basis built by twice-repeated Gram–Schmidt.
#[derive(Default)]
struct FloatEchelon {
    rows: Vec<Polynomial<f64>>,
}

fn dot(a: &Polynomial<f64>, b: &Polynomial<f64>) -> f64 {
    let (small, large) = if a.len() <= b.len() { (a, b) } else { (b, a) };
    small
        .terms()
        .map(|(e, c)| c * large.coeff(e).copied().unwrap_or(0.0))
        .sum()
}

impl FloatEchelon {
    fn insert(&mut self, p: &Polynomial<f64>) -> bool {
        let norm = dot(p, p).sqrt();
        if norm == 0.0 {
            return false;
        }
        let mut r = p.clone();
        for _ in 0..2 {
            for q in &self.rows {
                let c = dot(&r, q);
                if c != 0.0 {
                    r = &r - &q.scale(&c);
                }
            }
        }
        let rn = dot(&r, &r).sqrt();
        if rn <= PIVOT_TOL * norm {
            return false;
        }
        self.rows.push(r.scale(&(1.0 / rn)));
        true
    }
}

/// Coefficients of an invariant polynomial in the orbit-sum basis.
#[derive(Clone, Debug, PartialEq)]
pub struct InvariantCoordinates {
    pub coeffs: Vec<Rational>,
}

impl InvariantCoordinates {
    /// Indices with nonzero coefficient.
    pub fn support(&self) -> Vec<usize> {
        (0..self.coeffs.len()).filter(|&j| !self.coeffs[j].is_zero()).collect()
    }

    pub fn sparse(&self) -> Vec<(usize, Rational)> {
        self.support().into_iter().map(|j| (j, self.coeffs[j].clone())).collect()
    }
}

/// Expands an invariant polynomial as `Σ_j f_j w_j` over the orbit sums.
pub fn express_invariant(p: &Polynomial, invariant: &InvariantBasis) -> Result<InvariantCoordinates> {
    if p.nvars() != invariant.nvars() {
        return Err(Error::Dimension {
            expected: invariant.nvars(),
            found: p.nvars(),
        });
    }
    if p.degree() > invariant.max_degree() {
        return Err(Error::Degree {
            degree: p.degree(),
            bound: invariant.max_degree(),
        });
    }
    if !invariant.is_invariant(p)? {
        return Err(Error::NotInvariant(p.to_string()));
    }
    let coeffs: Vec<Rational> = (0..invariant.len())
        .map(|j| p.coeff(invariant.lead(j)).cloned().unwrap_or_else(Rational::zero))
        .collect();
    let coords = InvariantCoordinates { coeffs };
    if invariant.combine(&coords.sparse()) != *p {
        return Err(Error::Expansion(f64::INFINITY));
    }
    Ok(coords)
}

/// Outcome of the block-diagonality self-test.
#[derive(Clone, Debug)]
pub struct BlockDiagonalReport {
    pub ok: bool,
    pub failures: Vec<String>,
}

/// Evaluates `L(R(w w'))` on the full basis `{π_u w_j}` of every component
/// and checks the block pattern: zero across components and across copies
/// `u ≠ u'`, and copy blocks proportional through the invariant form of the
/// irrep (`block_u · P_00 = block_0 · P_uu` with `P = Σ_σ θ(σ)ᵀθ(σ)`, which is
/// diagonal for the built-in irreps).
///
/// Merged conjugate pairs are checked on their first copy only.
pub fn verify_block_diagonal(form: &[Rational], basis: &SymmetryAdaptedBasis, group: &Group, irreps: &[Irrep]) -> Result<BlockDiagonalReport> {
    if form.len() != basis.invariant.len() {
        return Err(Error::Dimension {
            expected: basis.invariant.len(),
            found: form.len(),
        });
    }
    let all_exact = basis.components.iter().all(|c| c.is_exact());
    if all_exact {
        let mut full = Vec::new();
        let mut pdiag = Vec::new();
        for (ci, comp) in basis.components.iter().enumerate() {
            let irrep = &irreps[comp.irreps[0]];
            let copies = if comp.irreps.len() == 2 { 1 } else { irrep.dim };
            pdiag.push(invariant_form_diagonal(irrep, group, copies, |m, e, a, b| {
                let IrrepMatrices::Exact(ms) = m else { unreachable!() };
                ms[e].get(a, b).clone()
            }));
            for u in 0..copies {
                for j in 0..comp.len() {
                    let w = comp.exact(j).expect("exact component");
                    let p = if u == 0 {
                        w.clone()
                    } else {
                        let Projection::Exact(p) = isotypic_projection(w, group, irrep, u)? else {
                            unreachable!()
                        };
                        p
                    };
                    full.push((ci, u, j, p));
                }
            }
        }
        check_blocks(&full, form, &pdiag, &basis.invariant, 0.0)
    } else {
        let mut full = Vec::new();
        let mut pdiag = Vec::new();
        for (ci, comp) in basis.components.iter().enumerate() {
            let irrep = &irreps[comp.irreps[0]];
            let copies = if comp.irreps.len() == 2 { 1 } else { irrep.dim };
            pdiag.push(invariant_form_diagonal(irrep, group, copies, |m, e, a, b| match m {
                IrrepMatrices::Exact(ms) => ms[e].get(a, b).to_f64(),
                IrrepMatrices::Numeric(ms) => ms[e][(a, b)].re,
            }));
            for u in 0..copies {
                for j in 0..comp.len() {
                    let w = comp.to_f64(j);
                    let p = float_copy(&w, group, irrep, u);
                    full.push((ci, u, j, p));
                }
            }
        }
        let form: Vec<f64> = form.iter().map(|x| x.to_f64()).collect();
        check_blocks(&full, &form, &pdiag, &basis.invariant, 1e-8)
    }
}

/// `π_u` applied to a real polynomial with real irrep entries.
fn float_copy(w: &Polynomial<f64>, group: &Group, irrep: &Irrep, u: usize) -> Polynomial<f64> {
    if u == 0 {
        return w.clone();
    }
    let scale = irrep.dim as f64 / group.order() as f64;
    let weights: Vec<f64> = (0..group.order())
        .map(|e| irrep.entry(group.inverse_index(e), 0, u).re * scale)
        .collect();
    weighted_images(w, group, &weights).pruned(ZERO_TOL)
}

fn invariant_form_diagonal<C: Coeff>(irrep: &Irrep, group: &Group, copies: usize, entry: impl Fn(&IrrepMatrices, usize, usize, usize) -> C) -> Vec<C> {
    (0..copies)
        .map(|u| {
            let mut s = C::zero();
            for e in 0..group.order() {
                for a in 0..irrep.dim {
                    let x = entry(&irrep.matrices, e, a, u);
                    s = s + x.clone() * x;
                }
            }
            s
        })
        .collect()
}

type FullBasis<C> = Vec<(usize, usize, usize, Polynomial<C>)>;

fn check_blocks<C: Coeff>(full: &FullBasis<C>, form: &[C], pdiag: &[Vec<C>], invariant: &InvariantBasis, tol: f64) -> Result<BlockDiagonalReport> {
    let n = full.len();
    let mut values = vec![vec![C::zero(); n]; n];
    let mut scale = 0.0f64;
    for a in 0..n {
        for b in a..n {
            let prod = &full[a].3 * &full[b].3;
            let mut v = C::zero();
            for (j, c) in invariant.reynolds_coordinates(&prod)? {
                v = v + c * form[j].clone();
            }
            scale = scale.max(v.to_f64().abs());
            values[a][b] = v.clone();
            values[b][a] = v;
        }
    }
    let tol = tol * scale.max(1.0);
    let mut failures = Vec::new();
    let position: HashMap<(usize, usize, usize), usize> =
        full.iter().enumerate().map(|(k, (c, u, j, _))| ((*c, *u, *j), k)).collect();
    for a in 0..n {
        for b in 0..n {
            let (ca, ua, ja, _) = &full[a];
            let (cb, ub, jb, _) = &full[b];
            let v = &values[a][b];
            if ca != cb || ua != ub {
                if !v.is_negligible(tol) {
                    failures.push(format!(
                        "nonzero entry between (component {ca}, copy {ua}, {ja}) and (component {cb}, copy {ub}, {jb})"
                    ));
                }
            } else if *ua > 0 {
                let a0 = position[&(*ca, 0, *ja)];
                let b0 = position[&(*cb, 0, *jb)];
                let p = &pdiag[*ca];
                let lhs = v.clone() * p[0].clone();
                let rhs = values[a0][b0].clone() * p[*ua].clone();
                if !(lhs - rhs).is_negligible(tol * p[0].to_f64().abs().max(1.0) * 10.0) {
                    failures.push(format!("copy {ua} of component {ca} is not proportional to copy 0 at ({ja}, {jb})"));
                }
            }
        }
    }
    Ok(BlockDiagonalReport {
        ok: failures.is_empty(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{builtin_irreps, GroupSpec};
    use crate::polyring::{parse_polynomial, rat};

    fn setup(spec: GroupSpec) -> (Group, Vec<Irrep>) {
        let g = spec.group().unwrap();
        let irreps = builtin_irreps(&spec, &g).unwrap();
        (g, irreps)
    }

    fn poly(s: &str, n: usize) -> Polynomial {
        parse_polynomial(s, n).unwrap()
    }

    #[test]
    fn trivial_projection_is_reynolds() {
        let (g, irreps) = setup(GroupSpec::Symmetric { n: 3 });
        for m in monomials_up_to(3, 3) {
            let p = Polynomial::monomial(m, Rational::one());
            assert_eq!(
                isotypic_projection(&p, &g, &irreps[0], 0).unwrap(),
                Projection::Exact(p.reynolds(&g).unwrap())
            );
        }
        let x1 = poly("x1", 3);
        assert_eq!(
            isotypic_projection(&x1, &g, &irreps[0], 0).unwrap(),
            Projection::Exact(poly("1/3 * x1 + 1/3 * x2 + 1/3 * x3", 3))
        );
        assert!(isotypic_projection(&x1, &g, &irreps[1], 2).is_err());
    }

    #[test]
    fn sign_component_vanishes_below_degree_three() {
        let (g, irreps) = setup(GroupSpec::Symmetric { n: 3 });
        for m in monomials_up_to(3, 2) {
            let p = Polynomial::monomial(m, Rational::one());
            assert!(isotypic_projection(&p, &g, &irreps[2], 0).unwrap().is_zero());
        }
    }

    #[test]
    fn s3_basis_at_order_two() {
        let (g, irreps) = setup(GroupSpec::Symmetric { n: 3 });
        let b = symmetry_adapted_basis(&g, &irreps, 2).unwrap();
        assert_eq!(b.sizes(), vec![4, 3, 0]);
        let ComponentPolys::Exact(inv) = &b.components[0].polys else { panic!() };
        assert_eq!(inv[0], poly("1", 3));
        assert_eq!(inv[1], poly("x1 + x2 + x3", 3));
        assert_eq!(inv[2], poly("x1^2 + x2^2 + x3^2", 3));
        assert_eq!(inv[3], poly("x1*x2 + x2*x3 + x1*x3", 3));
        let ComponentPolys::Exact(std) = &b.components[1].polys else { panic!() };
        // same polynomials as 2x3 - x2 - x1 etc. up to the sign fixed by a positive lead
        assert_eq!(std[0], poly("x1 + x2 - 2*x3", 3));
        assert_eq!(std[1], poly("x1^2 + x2^2 - 2*x3^2", 3));
        assert_eq!(std[2], poly("2*x1*x2 - x1*x3 - x2*x3", 3));
        for w in std {
            assert_eq!(isotypic_projection(w, &g, &irreps[1], 0).unwrap(), Projection::Exact(w.clone()));
        }
    }

    #[test]
    fn trivial_group_gives_monomials() {
        let (g, irreps) = setup(GroupSpec::Trivial { n: 2 });
        let b = symmetry_adapted_basis(&g, &irreps, 1).unwrap();
        let ComponentPolys::Exact(p) = &b.components[0].polys else { panic!() };
        assert_eq!(p, &vec![poly("1", 2), poly("x1", 2), poly("x2", 2)]);
    }

    #[test]
    fn s2_cubic_basis() {
        let (g, irreps) = setup(GroupSpec::Symmetric { n: 2 });
        let b = symmetry_adapted_basis(&g, &irreps, 3).unwrap();
        let ComponentPolys::Exact(inv) = &b.components[0].polys else { panic!() };
        let expected = ["1", "x1 + x2", "x1^2 + x2^2", "x1*x2", "x1^3 + x2^3", "x1^2*x2 + x1*x2^2"];
        assert_eq!(inv, &expected.iter().map(|s| poly(s, 2)).collect::<Vec<_>>());
        let ComponentPolys::Exact(sign) = &b.components[1].polys else { panic!() };
        let expected = ["x1 - x2", "x1^2 - x2^2", "x1^3 - x2^3", "x1^2*x2 - x1*x2^2"];
        assert_eq!(sign, &expected.iter().map(|s| poly(s, 2)).collect::<Vec<_>>());
    }

    #[test]
    fn cyclic_components_merge_conjugates() {
        let (g, irreps) = setup(GroupSpec::Cyclic { n: 3 });
        let b = symmetry_adapted_basis(&g, &irreps, 2).unwrap();
        assert_eq!(b.components.len(), 2);
        assert_eq!(b.components[1].irreps, vec![1, 2]);
        assert_eq!(b.sizes().iter().sum::<usize>(), 10);
    }

    #[test]
    fn dihedral_sizes_add_up() {
        let (g, irreps) = setup(GroupSpec::Dihedral { n: 5 });
        let b = symmetry_adapted_basis(&g, &irreps, 2).unwrap();
        let total: usize = b
            .components
            .iter()
            .map(|c| c.len() * if c.irreps.len() == 2 { 1 } else { c.irrep_dim })
            .sum();
        assert_eq!(total, 21);
    }

    #[test]
    fn express_s3_objective() {
        let (g, _) = setup(GroupSpec::Symmetric { n: 3 });
        let inv = InvariantBasis::new(&g, 4);
        let f = poly("1 + x1 + x2 + x3 + x1^2 + x2^2 + x3^2 + 2*x1*x2 + 2*x1*x3 + 2*x2*x3 + x1^4 + x2^4 + x3^4", 3);
        let c = express_invariant(&f, &inv).unwrap();
        let labels: Vec<String> = c.support().iter().map(|&j| inv.pattern_label(j)).collect();
        assert_eq!(labels, vec!["1", "a1", "a2", "a11", "a4"]);
        assert_eq!(c.coeffs[3], rat(2, 1));
        assert!(express_invariant(&Polynomial::zero(3), &inv).unwrap().support().is_empty());
        assert!(matches!(express_invariant(&poly("x1", 3), &inv), Err(Error::NotInvariant(_))));
        assert!(matches!(
            express_invariant(&poly("x1^5 + x2^5 + x3^5", 3), &inv),
            Err(Error::Degree { .. })
        ));
    }

    #[test]
    fn signed_orbits_cancel() {
        let spec = GroupSpec::SignChanges {
            n: 2,
            generators: vec![vec![1]],
        };
        let (g, _) = setup(spec);
        let inv = InvariantBasis::new(&g, 2);
        // 1, x2, x1^2, x2^2 survive; x1 and x1*x2 cancel
        assert_eq!(inv.len(), 4);
        assert_eq!(inv.reynolds_coordinates(&poly("x1*x2 + x1", 2)).unwrap(), vec![]);
    }

    #[test]
    fn block_diagonal_self_test() {
        let (g, irreps) = setup(GroupSpec::Symmetric { n: 3 });
        let b = symmetry_adapted_basis(&g, &irreps, 2).unwrap();
        let form: Vec<Rational> = (0..b.invariant.len()).map(|j| rat(j as i64 * 7 % 11 + 1, 3)).collect();
        let report = verify_block_diagonal(&form, &b, &g, &irreps).unwrap();
        assert!(report.ok, "{:?}", report.failures);

        let mut bad = b.clone();
        let ComponentPolys::Exact(p) = &mut bad.components[1].polys else { panic!() };
        p[0] = poly("x1 + x2", 3);
        assert!(!verify_block_diagonal(&form, &bad, &g, &irreps).unwrap().ok);
    }
}
