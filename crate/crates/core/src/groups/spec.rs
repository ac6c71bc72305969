//! Built-in group families and their irreducible representations.

use std::f64::consts::PI;

use num_complex::Complex64;
use num_traits::Zero;
use serde::{Deserialize, Serialize};

use super::{check_irreps, close_generators, link_conjugates, young, CMatrix, GeneratorImages, Group, Irrep, RatMatrix, DEFAULT_GROUP_CAP};
use crate::error::{Error, Result};
use crate::polyring::{parse_polynomial, rat, ExponentVector, GroupElement, Rational};

/// How the factors of a direct product act on the variables.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProductAction {
    /// Left factor on the first block of variables, right factor on the rest.
    #[default]
    Disjoint,
    /// Variables indexed by pairs `(a, b)` in row-major order; the left factor
    /// permutes `a`, the right factor permutes `b`.
    Grid,
}

/// User-supplied irrep of a custom group: one rational matrix per generator,
/// rows written as strings like `"-1/2"`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomIrrep {
    #[serde(default)]
    pub name: Option<String>,
    pub generators: Vec<Vec<Vec<String>>>,
}

/// Description of a permutation group acting on the variables.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GroupSpec {
    Trivial {
        n: usize,
    },
    /// `C_n` generated by the cycle `i ↦ i+1`.
    Cyclic {
        n: usize,
    },
    /// `D_{2n}` of order `2n`, generated by `i ↦ i+1` and `i ↦ -i` (mod n).
    Dihedral {
        n: usize,
    },
    /// `S_n` generated by the adjacent transpositions.
    Symmetric {
        n: usize,
    },
    Product {
        left: Box<GroupSpec>,
        right: Box<GroupSpec>,
        #[serde(default)]
        action: ProductAction,
    },
    /// Generators as 1-based image arrays.
    Custom {
        n: usize,
        generators: Vec<Vec<usize>>,
        #[serde(default)]
        irreps: Option<Vec<CustomIrrep>>,
    },
    /// Elementary abelian group of sign changes; each generator lists the
    /// 1-based variables it negates.
    SignChanges {
        n: usize,
        generators: Vec<Vec<usize>>,
    },
}

impl GroupSpec {
    /// Number of variables the group acts on.
    pub fn nvars(&self) -> usize {
        match self {
            Self::Trivial { n }
            | Self::Cyclic { n }
            | Self::Dihedral { n }
            | Self::Symmetric { n }
            | Self::Custom { n, .. }
            | Self::SignChanges { n, .. } => *n,
            Self::Product { left, right, action } => match action {
                ProductAction::Disjoint => left.nvars() + right.nvars(),
                ProductAction::Grid => left.nvars() * right.nvars(),
            },
        }
    }

    /// Generators in the order used by the irrep generator images.
    pub fn generators(&self) -> Result<Vec<GroupElement>> {
        match self {
            Self::Trivial { .. } => Ok(Vec::new()),
            Self::Cyclic { n } => {
                check_positive(*n)?;
                Ok(vec![GroupElement::from_perm((0..*n).map(|i| (i + 1) % n).collect())?])
            }
            Self::Dihedral { n } => {
                if *n < 3 {
                    return Err(Error::UnsupportedGroup(format!("dihedral group needs n >= 3, got {n}")));
                }
                Ok(vec![
                    GroupElement::from_perm((0..*n).map(|i| (i + 1) % n).collect())?,
                    GroupElement::from_perm((0..*n).map(|i| (n - i) % n).collect())?,
                ])
            }
            Self::Symmetric { n } => {
                check_positive(*n)?;
                (0..n - 1)
                    .map(|k| {
                        let mut p: Vec<usize> = (0..*n).collect();
                        p.swap(k, k + 1);
                        GroupElement::from_perm(p)
                    })
                    .collect()
            }
            Self::Product { left, right, action } => {
                let (nl, nr) = (left.nvars(), right.nvars());
                let mut out = Vec::new();
                for g in left.generators()? {
                    out.push(embed(&g, nl, nr, *action, true));
                }
                for g in right.generators()? {
                    out.push(embed(&g, nl, nr, *action, false));
                }
                Ok(out)
            }
            Self::Custom { n, generators, .. } => generators
                .iter()
                .map(|images| {
                    if images.len() != *n {
                        return Err(Error::Dimension {
                            expected: *n,
                            found: images.len(),
                        });
                    }
                    GroupElement::from_images(images)
                })
                .collect(),
            Self::SignChanges { n, generators } => {
                let mut rows = Vec::new();
                for negated in generators {
                    let mut v = vec![false; *n];
                    for &i in negated {
                        if i == 0 || i > *n {
                            return Err(Error::Index(format!("variable {i} out of range 1..={n}")));
                        }
                        v[i - 1] = !v[i - 1];
                    }
                    rows.push(v);
                }
                Ok(independent_rows(rows)
                    .into_iter()
                    .map(|v| {
                        let idx: Vec<usize> = (0..*n).filter(|&i| v[i]).collect();
                        GroupElement::sign_change(*n, &idx)
                    })
                    .collect())
            }
        }
    }

    pub fn group(&self) -> Result<Group> {
        self.group_with_cap(DEFAULT_GROUP_CAP)
    }

    pub fn group_with_cap(&self, cap: usize) -> Result<Group> {
        close_generators(&self.generators()?, self.nvars(), cap)
    }

    /// Sign-change subgroup of `{±1}^n` fixing every monomial in the given
    /// supports: all `s` with `Σ_i s_i α_i ≡ 0 (mod 2)` for each exponent `α`.
    pub fn sign_symmetry<'a, I>(nvars: usize, support: I) -> Self
    where
        I: IntoIterator<Item = &'a ExponentVector>,
    {
        let rows: Vec<Vec<bool>> = support.into_iter().map(|e| e.parity()).collect();
        let basis = gf2_null_space(&rows, nvars);
        Self::SignChanges {
            n: nvars,
            generators: basis
                .into_iter()
                .map(|v| (0..nvars).filter(|&i| v[i]).map(|i| i + 1).collect())
                .collect(),
        }
    }

    /// Generator images of every irrep, trivial first.
    fn irrep_images(&self) -> Result<Vec<(String, usize, GeneratorImages)>> {
        match self {
            Self::Trivial { .. } => Ok(vec![("trivial".into(), 1, GeneratorImages::Exact(Vec::new()))]),
            Self::Cyclic { n } => Ok((0..*n)
                .map(|k| {
                    let images = if (2 * k) % n == 0 {
                        let v = if k == 0 { 1 } else { -1 };
                        GeneratorImages::Exact(vec![scalar(rat(v, 1))])
                    } else {
                        let z = Complex64::from_polar(1.0, 2.0 * PI * k as f64 / *n as f64);
                        GeneratorImages::Numeric(vec![CMatrix::from_element(1, 1, clean(z))])
                    };
                    (format!("chi{k}"), 1, images)
                })
                .collect()),
            Self::Dihedral { n } => {
                let mut out = Vec::new();
                let mut one_dim = vec![(1, 1), (1, -1)];
                if n % 2 == 0 {
                    one_dim.extend([(-1, 1), (-1, -1)]);
                }
                for (r, s) in one_dim {
                    out.push((
                        format!("rho{r:+}_sigma{s:+}"),
                        1,
                        GeneratorImages::Exact(vec![scalar(rat(r, 1)), scalar(rat(s, 1))]),
                    ));
                }
                for k in 1..=(n - 1) / 2 {
                    let t = 2.0 * PI * k as f64 / *n as f64;
                    let (c, s) = (clean_re(t.cos()), clean_re(t.sin()));
                    let rot = CMatrix::from_row_slice(2, 2, &[re(c), re(-s), re(s), re(c)]);
                    let refl = CMatrix::from_row_slice(2, 2, &[re(1.0), re(0.0), re(0.0), re(-1.0)]);
                    out.push((format!("rot{k}"), 2, GeneratorImages::Numeric(vec![rot, refl])));
                }
                Ok(out)
            }
            Self::Symmetric { n } => {
                check_positive(*n)?;
                Ok(young::partitions(*n)
                    .into_iter()
                    .map(|shape| {
                        let name = format!("{shape:?}");
                        let gens = young::seminormal_generators(&shape);
                        let dim = young::dimension(&shape);
                        (name, dim, GeneratorImages::Exact(gens))
                    })
                    .collect())
            }
            Self::Product { left, right, .. } => {
                let l = left.irrep_images()?;
                let r = right.irrep_images()?;
                let mut out = Vec::new();
                for (ln, ld, li) in &l {
                    for (rn, rd, ri) in &r {
                        out.push((format!("{ln}x{rn}"), ld * rd, tensor_images(li, *ld, ri, *rd)));
                    }
                }
                Ok(out)
            }
            Self::Custom { irreps: None, .. } => Err(Error::UnsupportedGroup(
                "custom groups need user-supplied irreps".into(),
            )),
            Self::Custom {
                irreps: Some(irreps),
                ..
            } => irreps
                .iter()
                .enumerate()
                .map(|(i, irrep)| {
                    let mats = irrep
                        .generators
                        .iter()
                        .map(|rows| {
                            RatMatrix::from_rows(
                                rows.iter()
                                    .map(|row| row.iter().map(|x| parse_rational_entry(x)).collect())
                                    .collect::<Result<Vec<_>>>()?,
                            )
                        })
                        .collect::<Result<Vec<_>>>()?;
                    let dim = mats.first().map(|m| m.dim()).unwrap_or(1);
                    let name = irrep.name.clone().unwrap_or_else(|| format!("irrep{}", i + 1));
                    Ok((name, dim, GeneratorImages::Exact(mats)))
                })
                .collect(),
            Self::SignChanges { .. } => {
                let k = self.generators()?.len();
                Ok((0..1usize << k)
                    .map(|u| {
                        let images = (0..k)
                            .map(|t| scalar(rat(if u >> t & 1 == 1 { -1 } else { 1 }, 1)))
                            .collect();
                        (format!("sign{u}"), 1, GeneratorImages::Exact(images))
                    })
                    .collect())
            }
        }
    }
}

/// Complete list of irreps for a built-in family on the group built from the
/// same spec. Custom irreps are checked for multiplicativity.
pub fn builtin_irreps(spec: &GroupSpec, group: &Group) -> Result<Vec<Irrep>> {
    let mut irreps = spec
        .irrep_images()?
        .into_iter()
        .map(|(name, dim, images)| Irrep::from_generator_images(group, name, dim, images))
        .collect::<Result<Vec<_>>>()?;
    if matches!(spec, GroupSpec::Custom { .. }) {
        for irrep in &irreps {
            irrep.check_homomorphism(group)?;
        }
    }
    check_irreps(group, &irreps)?;
    link_conjugates(group, &mut irreps)?;
    Ok(irreps)
}

fn parse_rational_entry(text: &str) -> Result<Rational> {
    let p = parse_polynomial(text, 1)?;
    if p.degree() > 0 {
        return Err(Error::Parse(format!("matrix entry '{text}' is not a number")));
    }
    Ok(p.coeff(&ExponentVector::zero(1)).cloned().unwrap_or_else(Rational::zero))
}

fn check_positive(n: usize) -> Result<()> {
    if n == 0 {
        return Err(Error::UnsupportedGroup("group must act on at least one variable".into()));
    }
    Ok(())
}

fn scalar(v: Rational) -> RatMatrix {
    let mut m = RatMatrix::zeros(1);
    m.set(0, 0, v);
    m
}

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// Snaps values within rounding of 0 or ±1 so that exact zeros stay zero.
fn clean_re(x: f64) -> f64 {
    for target in [0.0, 1.0, -1.0, 0.5, -0.5] {
        if (x - target).abs() < 1e-14 {
            return target;
        }
    }
    x
}

fn clean(z: Complex64) -> Complex64 {
    Complex64::new(clean_re(z.re), clean_re(z.im))
}

fn embed(g: &GroupElement, nl: usize, nr: usize, action: ProductAction, left: bool) -> GroupElement {
    let n = match action {
        ProductAction::Disjoint => nl + nr,
        ProductAction::Grid => nl * nr,
    };
    let mut perm = vec![0; n];
    let mut flips = vec![false; n];
    match action {
        ProductAction::Disjoint => {
            let offset = if left { 0 } else { nl };
            for i in 0..n {
                perm[i] = i;
            }
            for i in 0..g.nvars() {
                perm[offset + i] = offset + g.perm()[i];
                flips[offset + i] = g.flips()[i];
            }
        }
        ProductAction::Grid => {
            for a in 0..nl {
                for b in 0..nr {
                    let v = a * nr + b;
                    if left {
                        perm[v] = g.perm()[a] * nr + b;
                        flips[v] = g.flips()[a];
                    } else {
                        perm[v] = a * nr + g.perm()[b];
                        flips[v] = g.flips()[b];
                    }
                }
            }
        }
    }
    GroupElement::signed(perm, flips).expect("embedding of a permutation is a permutation")
}

fn rat_kron(a: &RatMatrix, b: &RatMatrix) -> RatMatrix {
    let (da, db) = (a.dim(), b.dim());
    let mut out = RatMatrix::zeros(da * db);
    for i in 0..da {
        for j in 0..da {
            if a.get(i, j).is_zero() {
                continue;
            }
            for k in 0..db {
                for l in 0..db {
                    out.set(i * db + k, j * db + l, a.get(i, j) * b.get(k, l));
                }
            }
        }
    }
    out
}

fn to_numeric(images: &GeneratorImages) -> Vec<CMatrix> {
    match images {
        GeneratorImages::Exact(m) => m.iter().map(|x| x.to_complex()).collect(),
        GeneratorImages::Numeric(m) => m.clone(),
    }
}

/// Images of the left generators as `θ_a(g) ⊗ I`, then the right ones as `I ⊗ θ_b(g)`.
fn tensor_images(left: &GeneratorImages, ld: usize, right: &GeneratorImages, rd: usize) -> GeneratorImages {
    match (left, right) {
        (GeneratorImages::Exact(l), GeneratorImages::Exact(r)) => {
            let (il, ir) = (RatMatrix::identity(ld), RatMatrix::identity(rd));
            let mut out: Vec<RatMatrix> = l.iter().map(|m| rat_kron(m, &ir)).collect();
            out.extend(r.iter().map(|m| rat_kron(&il, m)));
            GeneratorImages::Exact(out)
        }
        _ => {
            let (l, r) = (to_numeric(left), to_numeric(right));
            let (il, ir) = (CMatrix::identity(ld, ld), CMatrix::identity(rd, rd));
            let mut out: Vec<CMatrix> = l.iter().map(|m| m.kronecker(&ir)).collect();
            out.extend(r.iter().map(|m| il.kronecker(m)));
            GeneratorImages::Numeric(out)
        }
    }
}

/// Row-reduces over GF(2) and returns a basis of the row space.
fn independent_rows(rows: Vec<Vec<bool>>) -> Vec<Vec<bool>> {
    let mut basis: Vec<(usize, Vec<bool>)> = Vec::new();
    let mut kept = Vec::new();
    for row in rows {
        let mut r = row.clone();
        for (p, b) in &basis {
            if r[*p] {
                for (x, y) in r.iter_mut().zip(b) {
                    *x ^= *y;
                }
            }
        }
        if let Some(p) = r.iter().position(|&x| x) {
            basis.push((p, r));
            kept.push(row);
        }
    }
    kept
}

/// Basis of `{s : s·row = 0 (mod 2) for all rows}`.
fn gf2_null_space(rows: &[Vec<bool>], n: usize) -> Vec<Vec<bool>> {
    let mut m: Vec<Vec<bool>> = rows.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..n {
        let Some(p) = (r..m.len()).find(|&i| m[i][c]) else {
            continue;
        };
        m.swap(r, p);
        for i in 0..m.len() {
            if i != r && m[i][c] {
                let pivot_row = m[r].clone();
                for (x, y) in m[i].iter_mut().zip(&pivot_row) {
                    *x ^= *y;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    let free: Vec<usize> = (0..n).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![false; n];
            v[f] = true;
            for (row, &pc) in pivots.iter().enumerate() {
                if m[row][f] {
                    v[pc] = true;
                }
            }
            v
        })
        .collect()
}

#[allow(clippy::needless_range_loop)]
#[cfg(test)]
mod tests {
    use super::*;
    use crate::groups::{multiplicities, CharacterTable, CHARACTER_TOL};
    use rand::{Rng, SeedableRng};

    fn families() -> Vec<GroupSpec> {
        vec![
            GroupSpec::Trivial { n: 3 },
            GroupSpec::Cyclic { n: 1 },
            GroupSpec::Cyclic { n: 2 },
            GroupSpec::Cyclic { n: 5 },
            GroupSpec::Cyclic { n: 6 },
            GroupSpec::Dihedral { n: 3 },
            GroupSpec::Dihedral { n: 4 },
            GroupSpec::Dihedral { n: 7 },
            GroupSpec::Dihedral { n: 8 },
            GroupSpec::Symmetric { n: 2 },
            GroupSpec::Symmetric { n: 3 },
            GroupSpec::Symmetric { n: 4 },
            GroupSpec::Symmetric { n: 5 },
            GroupSpec::Product {
                left: Box::new(GroupSpec::Cyclic { n: 2 }),
                right: Box::new(GroupSpec::Cyclic { n: 3 }),
                action: ProductAction::Grid,
            },
            GroupSpec::Product {
                left: Box::new(GroupSpec::Symmetric { n: 3 }),
                right: Box::new(GroupSpec::Dihedral { n: 4 }),
                action: ProductAction::Disjoint,
            },
            GroupSpec::SignChanges {
                n: 3,
                generators: vec![vec![1], vec![2, 3], vec![1, 2, 3]],
            },
        ]
    }

    #[test]
    fn every_family_is_complete_and_multiplicative() {
        let mut rng = rand::rngs::StdRng::seed_from_u64(7);
        for spec in families() {
            let group = spec.group().unwrap();
            let irreps = builtin_irreps(&spec, &group).unwrap();
            let sum: usize = irreps.iter().map(|r| r.dim * r.dim).sum();
            assert_eq!(sum, group.order(), "{spec:?}");
            assert_eq!(irreps.len(), group.classes().len(), "{spec:?}");
            for irrep in &irreps {
                irrep.check_homomorphism(&group).unwrap();
                assert!((irrep.matrix(0) - CMatrix::identity(irrep.dim, irrep.dim)).camax() < 1e-15);
                for _ in 0..100 {
                    let a = rng.gen_range(0..group.order());
                    let b = rng.gen_range(0..group.order());
                    let ab = group.compose_index(a, b);
                    let diff = irrep.matrix(a) * irrep.matrix(b) - irrep.matrix(ab);
                    assert!(diff.camax() < 1e-12, "{spec:?} {}", irrep.name);
                }
                let tensor_with_seminormal = matches!(spec, GroupSpec::Product { .. });
                if !irrep.is_exact() && !tensor_with_seminormal {
                    for e in 0..group.order() {
                        let m = irrep.matrix(e);
                        let u = m.adjoint() * &m - CMatrix::identity(irrep.dim, irrep.dim);
                        assert!(u.camax() < 1e-12);
                    }
                }
            }
            let table = CharacterTable::new(&group, &irreps);
            for i in 0..irreps.len() {
                for j in 0..irreps.len() {
                    let expected = if i == j { 1.0 } else { 0.0 };
                    assert!((table.inner(i, j) - expected).norm() < 1e-9, "{spec:?} ({i},{j})");
                }
            }
            assert!(table.values[0].iter().all(|z| (z - 1.0).norm() < CHARACTER_TOL));
        }
    }

    #[test]
    fn named_orders_and_dimensions() {
        let s3 = GroupSpec::Symmetric { n: 3 };
        let g = s3.group().unwrap();
        let dims: Vec<usize> = builtin_irreps(&s3, &g).unwrap().iter().map(|r| r.dim).collect();
        assert_eq!(dims, vec![1, 2, 1]);
        for n in 3..8 {
            assert_eq!(GroupSpec::Dihedral { n }.group().unwrap().order(), 2 * n);
        }
        let c5 = GroupSpec::Cyclic { n: 5 };
        let g = c5.group().unwrap();
        let irreps = builtin_irreps(&c5, &g).unwrap();
        assert_eq!(irreps.len(), 5);
        assert_eq!(irreps[1].conjugate, Some(4));
        assert_eq!(irreps[0].conjugate, None);
    }

    #[test]
    fn multiplicities_match_dimension_identity() {
        for spec in families() {
            let group = spec.group().unwrap();
            let irreps = builtin_irreps(&spec, &group).unwrap();
            for r in 0..=4 {
                // multiplicities() itself checks Σ m_i d_i = C(n+r, r)
                multiplicities(&group, &irreps, r).unwrap();
            }
        }
    }

    #[test]
    fn s3_multiplicities_at_order_two() {
        let spec = GroupSpec::Symmetric { n: 3 };
        let group = spec.group().unwrap();
        let irreps = builtin_irreps(&spec, &group).unwrap();
        assert_eq!(multiplicities(&group, &irreps, 2).unwrap(), vec![4, 3, 0]);
        let trivial = GroupSpec::Trivial { n: 3 };
        let tg = trivial.group().unwrap();
        let ti = builtin_irreps(&trivial, &tg).unwrap();
        assert_eq!(multiplicities(&tg, &ti, 3).unwrap(), vec![20]);
    }

    #[test]
    fn custom_groups_need_irreps() {
        let spec = GroupSpec::Custom {
            n: 2,
            generators: vec![vec![2, 1]],
            irreps: None,
        };
        let g = spec.group().unwrap();
        assert_eq!(g.order(), 2);
        assert!(matches!(builtin_irreps(&spec, &g), Err(Error::UnsupportedGroup(_))));
        let with = GroupSpec::Custom {
            n: 2,
            generators: vec![vec![2, 1]],
            irreps: Some(vec![
                CustomIrrep {
                    name: None,
                    generators: vec![vec![vec!["1".into()]]],
                },
                CustomIrrep {
                    name: None,
                    generators: vec![vec![vec!["-1".into()]]],
                },
            ]),
        };
        let irreps = builtin_irreps(&with, &g).unwrap();
        assert_eq!(irreps.len(), 2);
        let bad = GroupSpec::Custom {
            n: 2,
            generators: vec![vec![2, 1]],
            irreps: Some(vec![
                CustomIrrep {
                    name: None,
                    generators: vec![vec![vec!["1".into()]]],
                },
                CustomIrrep {
                    name: None,
                    generators: vec![vec![vec!["2".into()]]],
                },
            ]),
        };
        assert!(builtin_irreps(&bad, &g).is_err());
    }

    #[test]
    fn sign_symmetry_from_supports() {
        let f = parse_polynomial("x1^2 * x2^2 + x1 * x2 + x3^4", 3).unwrap();
        let spec = GroupSpec::sign_symmetry(3, f.support());
        let g = spec.group().unwrap();
        // flip x3 alone, or x1 and x2 together
        assert_eq!(g.order(), 4);
        for e in g.elements() {
            assert_eq!(f.act(e).unwrap(), f);
        }
    }

    #[test]
    fn grid_product_acts_on_rows_and_columns() {
        let spec = GroupSpec::Product {
            left: Box::new(GroupSpec::Cyclic { n: 2 }),
            right: Box::new(GroupSpec::Cyclic { n: 3 }),
            action: ProductAction::Grid,
        };
        assert_eq!(spec.nvars(), 6);
        let gens = spec.generators().unwrap();
        assert_eq!(gens[0].perm(), &[3, 4, 5, 0, 1, 2]);
        assert_eq!(gens[1].perm(), &[1, 2, 0, 4, 5, 3]);
        assert_eq!(spec.group().unwrap().order(), 6);
    }

    #[test]
    fn spec_json_shape() {
        let spec: GroupSpec = serde_json::from_str(r#"{"family": "dihedral", "n": 8}"#).unwrap();
        assert_eq!(spec, GroupSpec::Dihedral { n: 8 });
        let p: GroupSpec = serde_json::from_str(
            r#"{"family": "product", "left": {"family": "cyclic", "n": 2},
                "right": {"family": "cyclic", "n": 3}, "action": "grid"}"#,
        )
        .unwrap();
        assert_eq!(p.nvars(), 6);
    }
}
