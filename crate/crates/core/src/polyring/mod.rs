//! Sparse multivariate polynomials and the signed-permutation action on them.
//!
//! Coefficients are exact rationals by default so that support sets (which drive
//! the term-sparsity graphs) are decided without rounding. A floating-point
//! coefficient type is available for bases built from irrational representations.
//!
//! Terms are kept in a fixed term order: by total degree first, and within one
//! degree lexicographically with larger powers of earlier variables first, so
//! `1 < x1 < x2 < x3 < x1^2 < x1*x2 < ...`.

mod text;

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::groups::Group;

pub use text::{parse_polynomial, parse_rational};

pub type Rational = BigRational;

/// Builds the rational `num/den`.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Coefficient field used by [`Polynomial`].
pub trait Coeff:
    Clone
    + fmt::Debug
    + PartialEq
    + Send
    + Sync
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Neg<Output = Self>
{
    fn from_rational(r: &Rational) -> Self;
    fn to_f64(&self) -> f64;
    /// Zero test used for support decisions: exact for rationals, `|x| <= tol`
    /// for floats.
    fn is_negligible(&self, tol: f64) -> bool;
}

impl Coeff for Rational {
    fn from_rational(r: &Rational) -> Self {
        r.clone()
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn is_negligible(&self, _tol: f64) -> bool {
        self.is_zero()
    }
}

impl Coeff for f64 {
    fn from_rational(r: &Rational) -> Self {
        ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn is_negligible(&self, tol: f64) -> bool {
        self.abs() <= tol
    }
}

/// Exponent vector of a monomial `x^α`.
#[derive(Clone, PartialEq, Eq, Hash, Debug)]
pub struct ExponentVector(Vec<u32>);

impl ExponentVector {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self(exponents)
    }

    pub fn zero(nvars: usize) -> Self {
        Self(vec![0; nvars])
    }

    /// The exponent vector of the single variable `x_{var+1}`.
    pub fn unit(nvars: usize, var: usize) -> Self {
        let mut e = vec![0; nvars];
        e[var] = 1;
        Self(e)
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn degree(&self) -> usize {
        self.0.iter().map(|&e| e as usize).sum()
    }

    pub fn is_constant(&self) -> bool {
        self.0.iter().all(|&e| e == 0)
    }

    pub fn mul(&self, other: &Self) -> Self {
        debug_assert_eq!(self.nvars(), other.nvars());
        Self(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// Image of `x^α` under `g`, returned as `(β, negated)` with `g·x^α = ±x^β`.
    pub fn act(&self, g: &GroupElement) -> (Self, bool) {
        let mut out = vec![0; self.0.len()];
        let mut negated = false;
        for (i, &e) in self.0.iter().enumerate() {
            out[g.perm[i]] = e;
            if g.flips[i] && e % 2 == 1 {
                negated = !negated;
            }
        }
        (Self(out), negated)
    }

    /// Parity pattern `α mod 2`.
    pub fn parity(&self) -> Vec<bool> {
        self.0.iter().map(|e| e % 2 == 1).collect()
    }
}

impl Ord for ExponentVector {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| other.0.cmp(&self.0))
    }
}

impl PartialOrd for ExponentVector {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// All exponent vectors of total degree at most `max_degree`, in term order.
pub fn monomials_up_to(nvars: usize, max_degree: usize) -> Vec<ExponentVector> {
    let mut out = Vec::new();
    for d in 0..=max_degree {
        let mut current = vec![0u32; nvars];
        push_compositions(&mut out, &mut current, 0, d as u32);
    }
    out
}

fn push_compositions(out: &mut Vec<ExponentVector>, current: &mut [u32], pos: usize, left: u32) {
    if current.is_empty() {
        if left == 0 {
            out.push(ExponentVector(Vec::new()));
        }
        return;
    }
    if pos + 1 == current.len() {
        current[pos] = left;
        out.push(ExponentVector(current.to_vec()));
        current[pos] = 0;
        return;
    }
    for e in (0..=left).rev() {
        current[pos] = e;
        push_compositions(out, current, pos + 1, left - e);
    }
    current[pos] = 0;
}

/// Signed permutation `x_i ↦ ±x_{perm(i)}` of the variables.
///
/// Plain permutations have no flips. Composition follows function composition:
/// `a.compose(b)` acts as `b` first, then `a`.
#[derive(Clone, PartialEq, Eq, Hash, Debug, PartialOrd, Ord)]
pub struct GroupElement {
    perm: Vec<usize>,
    flips: Vec<bool>,
}

impl GroupElement {
    pub fn identity(nvars: usize) -> Self {
        Self {
            perm: (0..nvars).collect(),
            flips: vec![false; nvars],
        }
    }

    /// Permutation from 0-based images.
    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        Self::signed(perm, vec![false; n])
    }

    /// Permutation from 1-based images, the convention of the problem files.
    pub fn from_images(images: &[usize]) -> Result<Self> {
        let perm = images
            .iter()
            .map(|&i| {
                i.checked_sub(1)
                    .ok_or_else(|| Error::Input("permutation images are 1-based".into()))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_perm(perm)
    }

    pub fn signed(perm: Vec<usize>, flips: Vec<bool>) -> Result<Self> {
        let n = perm.len();
        if flips.len() != n {
            return Err(Error::Dimension {
                expected: n,
                found: flips.len(),
            });
        }
        let mut seen = vec![false; n];
        for &p in &perm {
            if p >= n || seen[p] {
                return Err(Error::Input(format!("{perm:?} is not a permutation")));
            }
            seen[p] = true;
        }
        Ok(Self { perm, flips })
    }

    /// Pure sign change negating the listed (0-based) variables.
    pub fn sign_change(nvars: usize, negated: &[usize]) -> Self {
        let mut g = Self::identity(nvars);
        for &i in negated {
            g.flips[i] = true;
        }
        g
    }

    pub fn nvars(&self) -> usize {
        self.perm.len()
    }

    pub fn perm(&self) -> &[usize] {
        &self.perm
    }

    pub fn flips(&self) -> &[bool] {
        &self.flips
    }

    pub fn is_identity(&self) -> bool {
        self.perm.iter().enumerate().all(|(i, &p)| i == p) && self.flips.iter().all(|f| !f)
    }

    pub fn has_flips(&self) -> bool {
        self.flips.iter().any(|&f| f)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Self) -> Self {
        debug_assert_eq!(self.nvars(), other.nvars());
        let perm = other.perm.iter().map(|&j| self.perm[j]).collect();
        let flips = (0..other.nvars())
            .map(|i| other.flips[i] ^ self.flips[other.perm[i]])
            .collect();
        Self { perm, flips }
    }

    pub fn inverse(&self) -> Self {
        let n = self.nvars();
        let mut perm = vec![0; n];
        let mut flips = vec![false; n];
        for i in 0..n {
            perm[self.perm[i]] = i;
            flips[self.perm[i]] = self.flips[i];
        }
        Self { perm, flips }
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for (i, (&p, &s)) in self.perm.iter().zip(&self.flips).enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{}{}", if s { "-" } else { "" }, p + 1)?;
        }
        write!(f, "]")
    }
}

/// Sparse polynomial in `nvars` variables; no stored coefficient is zero.
#[derive(Clone, PartialEq, Debug)]
pub struct Polynomial<C = Rational> {
    nvars: usize,
    terms: BTreeMap<ExponentVector, C>,
}

impl<C: Coeff> Polynomial<C> {
    pub fn zero(nvars: usize) -> Self {
        Self {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: C) -> Self {
        Self::monomial(ExponentVector::zero(nvars), c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, C::one())
    }

    /// The variable `x_{var+1}`.
    pub fn var(nvars: usize, var: usize) -> Self {
        Self::monomial(ExponentVector::unit(nvars, var), C::one())
    }

    pub fn monomial(exp: ExponentVector, c: C) -> Self {
        let nvars = exp.nvars();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(exp, c);
        }
        Self { nvars, terms }
    }

    /// Sums the given terms, merging repeated exponents and dropping zeros.
    pub fn from_terms<I>(nvars: usize, terms: I) -> Result<Self>
    where
        I: IntoIterator<Item = (ExponentVector, C)>,
    {
        let mut p = Self::zero(nvars);
        for (e, c) in terms {
            if e.nvars() != nvars {
                return Err(Error::Dimension {
                    expected: nvars,
                    found: e.nvars(),
                });
            }
            p.add_term(e, c);
        }
        Ok(p)
    }

    pub(crate) fn add_term(&mut self, e: ExponentVector, c: C) {
        use std::collections::btree_map::Entry;
        if c.is_zero() {
            return;
        }
        match self.terms.entry(e) {
            Entry::Vacant(v) => {
                v.insert(c);
            }
            Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&ExponentVector, &C)> {
        self.terms.iter()
    }

    pub fn coeff(&self, e: &ExponentVector) -> Option<&C> {
        self.terms.get(e)
    }

    /// Total degree; the zero polynomial has degree 0.
    pub fn degree(&self) -> usize {
        self.terms.keys().map(|e| e.degree()).max().unwrap_or(0)
    }

    pub fn is_homogeneous(&self) -> bool {
        let mut degrees = self.terms.keys().map(|e| e.degree());
        match degrees.next() {
            None => true,
            Some(d) => degrees.all(|x| x == d),
        }
    }

    /// First term in term order.
    pub fn leading_term(&self) -> Option<(&ExponentVector, &C)> {
        self.terms.iter().next()
    }

    fn check_nvars(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::Dimension {
                expected: self.nvars,
                found: other.nvars,
            });
        }
        Ok(())
    }

    pub fn checked_add(&self, other: &Self) -> Result<Self> {
        self.check_nvars(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn checked_sub(&self, other: &Self) -> Result<Self> {
        self.check_nvars(other)?;
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(e.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn checked_mul(&self, other: &Self) -> Result<Self> {
        self.check_nvars(other)?;
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                out.add_term(e1.mul(e2), c1.clone() * c2.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &C) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        let terms = self
            .terms
            .iter()
            .map(|(e, x)| (e.clone(), x.clone() * c.clone()))
            .filter(|(_, x)| !x.is_zero())
            .collect();
        Self {
            nvars: self.nvars,
            terms,
        }
    }

    /// The induced action `p ↦ p^σ`, i.e. substituting `x_i ↦ ±x_{σ(i)}`.
    pub fn act(&self, g: &GroupElement) -> Result<Self> {
        if g.nvars() != self.nvars {
            return Err(Error::Dimension {
                expected: self.nvars,
                found: g.nvars(),
            });
        }
        let mut terms = BTreeMap::new();
        for (e, c) in &self.terms {
            let (img, neg) = e.act(g);
            terms.insert(img, if neg { -c.clone() } else { c.clone() });
        }
        Ok(Self {
            nvars: self.nvars,
            terms,
        })
    }

    /// Group average `(1/|G|) Σ_σ p^σ`.
    pub fn reynolds(&self, group: &Group) -> Result<Self> {
        if group.nvars() != self.nvars {
            return Err(Error::Dimension {
                expected: self.nvars,
                found: group.nvars(),
            });
        }
        let mut out = Self::zero(self.nvars);
        for g in group.elements() {
            for (e, c) in &self.terms {
                let (img, neg) = e.act(g);
                out.add_term(img, if neg { -c.clone() } else { c.clone() });
            }
        }
        let inv = C::from_rational(&rat(1, group.order() as i64));
        Ok(out.scale(&inv))
    }

    /// True when `p^g = p` for every listed element.
    pub fn is_fixed_by<'a, I>(&self, elements: I) -> Result<bool>
    where
        I: IntoIterator<Item = &'a GroupElement>,
    {
        for g in elements {
            if self.act(g)? != *self {
                return Ok(false);
            }
        }
        Ok(true)
    }

    pub fn map_coeffs<D: Coeff>(&self, f: impl Fn(&C) -> D) -> Polynomial<D> {
        let mut out = Polynomial::zero(self.nvars);
        for (e, c) in &self.terms {
            out.add_term(e.clone(), f(c));
        }
        out
    }

    pub fn to_f64(&self) -> Polynomial<f64> {
        self.map_coeffs(|c| c.to_f64())
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let m: f64 = e
                    .exponents()
                    .iter()
                    .zip(x)
                    .map(|(&k, &xi)| xi.powi(k as i32))
                    .product();
                c.to_f64() * m
            })
            .sum()
    }

    /// Largest absolute coefficient, as a float.
    pub fn max_abs_coeff(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }

    pub fn support(&self) -> impl Iterator<Item = &ExponentVector> {
        self.terms.keys()
    }
}

impl Polynomial<Rational> {
    /// Rescales to integer coefficients with content one and a positive
    /// leading coefficient.
    pub fn primitive(&self) -> Self {
        use num_integer::Integer;
        if self.is_zero() {
            return self.clone();
        }
        let mut lcm = BigInt::one();
        for c in self.terms.values() {
            lcm = lcm.lcm(c.denom());
        }
        let mut gcd = BigInt::zero();
        for c in self.terms.values() {
            let n = c.numer() * (&lcm / c.denom());
            gcd = gcd.gcd(&n);
        }
        let mut factor = Rational::new(lcm, gcd);
        if self.leading_term().map(|(_, c)| c.is_negative()).unwrap_or(false) {
            factor = -factor;
        }
        self.scale(&factor)
    }
}

impl Polynomial<f64> {
    /// Drops coefficients with magnitude at most `tol`.
    pub fn pruned(&self, tol: f64) -> Self {
        let terms = self
            .terms
            .iter()
            .filter(|(_, c)| c.abs() > tol)
            .map(|(e, c)| (e.clone(), *c))
            .collect();
        Self {
            nvars: self.nvars,
            terms,
        }
    }
}

impl<C: Coeff> Add for &Polynomial<C> {
    type Output = Polynomial<C>;

    /// Panics if the operands live in different rings.
    fn add(self, rhs: Self) -> Polynomial<C> {
        self.checked_add(rhs).expect("polynomial rings differ")
    }
}

impl<C: Coeff> Sub for &Polynomial<C> {
    type Output = Polynomial<C>;

    fn sub(self, rhs: Self) -> Polynomial<C> {
        self.checked_sub(rhs).expect("polynomial rings differ")
    }
}

impl<C: Coeff> Mul for &Polynomial<C> {
    type Output = Polynomial<C>;

    fn mul(self, rhs: Self) -> Polynomial<C> {
        self.checked_mul(rhs).expect("polynomial rings differ")
    }
}

impl<C: Coeff> Neg for &Polynomial<C> {
    type Output = Polynomial<C>;

    fn neg(self) -> Polynomial<C> {
        self.scale(&-C::one())
    }
}

/// Sum of a polynomial over all group images, used for orbit sums.
pub fn orbit_sum(e: &ExponentVector, group: &Group) -> Polynomial<Rational> {
    let mut out = Polynomial::zero(e.nvars());
    let mut seen = std::collections::HashSet::new();
    for g in group.elements() {
        let (img, neg) = e.act(g);
        if seen.insert(img.clone()) {
            out.add_term(img, if neg { -Rational::one() } else { Rational::one() });
        }
    }
    out
}
