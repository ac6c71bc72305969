//! Problem instances and their JSON schema.
//!
//! ```json
//! { "nvars": 3,
//!   "objective": [[[4, 0, 0], "1"], [[0, 4, 0], "1"], [[0, 0, 4], "1"]],
//!   "constraints": [{"poly": "3 - x1^2 - x2^2 - x3^2", "kind": "ineq"}],
//!   "group": {"family": "symmetric", "n": 3} }
//! ```
//!
//! Polynomials are either term lists `[[exponents], coefficient]` (the
//! coefficient a `"num/den"` string or a JSON number) or text as accepted by
//! [`parse_polynomial`].

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::GroupSpec;
use crate::polyring::{parse_polynomial, parse_rational, ExponentVector, Polynomial};

/// Inequality `g >= 0` or equality `h = 0`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ConstraintKind {
    Ineq,
    Eq,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Constraint {
    pub poly: Polynomial,
    pub kind: ConstraintKind,
}

/// Minimize `objective` over `{x : constraints hold}`; every polynomial must
/// be invariant under `group`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProblemInstance {
    pub name: String,
    pub nvars: usize,
    pub objective: Polynomial,
    pub constraints: Vec<Constraint>,
    pub group: GroupSpec,
    /// Free-form origin and parameter description.
    pub notes: String,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CoeffJson {
    Text(String),
    Number(serde_json::Number),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum PolyJson {
    Text(String),
    Terms(Vec<(Vec<u32>, CoeffJson)>),
}

#[derive(Serialize, Deserialize)]
struct ConstraintJson {
    poly: PolyJson,
    kind: ConstraintKind,
}

#[derive(Serialize, Deserialize)]
struct ProblemJson {
    #[serde(default, skip_serializing_if = "String::is_empty")]
    name: String,
    nvars: usize,
    objective: PolyJson,
    #[serde(default)]
    constraints: Vec<ConstraintJson>,
    group: GroupSpec,
    #[serde(default, skip_serializing_if = "String::is_empty")]
    notes: String,
}

fn poly_from_json(p: PolyJson, nvars: usize) -> Result<Polynomial> {
    match p {
        PolyJson::Text(t) => parse_polynomial(&t, nvars),
        PolyJson::Terms(terms) => {
            let terms = terms
                .into_iter()
                .map(|(exps, c)| {
                    if exps.len() != nvars {
                        return Err(Error::Dimension {
                            expected: nvars,
                            found: exps.len(),
                        });
                    }
                    let c = match c {
                        CoeffJson::Text(t) => parse_rational(&t)?,
                        CoeffJson::Number(n) => parse_rational(&n.to_string())?,
                    };
                    Ok((ExponentVector::new(exps), c))
                })
                .collect::<Result<Vec<_>>>()?;
            Polynomial::from_terms(nvars, terms)
        }
    }
}

fn poly_to_json(p: &Polynomial) -> PolyJson {
    PolyJson::Terms(
        p.terms()
            .map(|(e, c)| (e.exponents().to_vec(), CoeffJson::Text(c.to_string())))
            .collect(),
    )
}

impl ProblemInstance {
    /// Parses and validates a JSON problem.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: ProblemJson = serde_json::from_str(text)?;
        let nvars = raw.nvars;
        let problem = Self {
            name: raw.name,
            nvars,
            objective: poly_from_json(raw.objective, nvars)?,
            constraints: raw
                .constraints
                .into_iter()
                .map(|c| {
                    Ok(Constraint {
                        poly: poly_from_json(c.poly, nvars)?,
                        kind: c.kind,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            group: raw.group,
            notes: raw.notes,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn to_json(&self) -> String {
        let raw = ProblemJson {
            name: self.name.clone(),
            nvars: self.nvars,
            objective: poly_to_json(&self.objective),
            constraints: self
                .constraints
                .iter()
                .map(|c| ConstraintJson {
                    poly: poly_to_json(&c.poly),
                    kind: c.kind,
                })
                .collect(),
            group: self.group.clone(),
            notes: self.notes.clone(),
        };
        serde_json::to_string_pretty(&raw).expect("problem serializes")
    }

    /// Checks dimensions and exact invariance of every polynomial under the
    /// group generators.
    pub fn validate(&self) -> Result<()> {
        if self.group.nvars() != self.nvars {
            return Err(Error::Dimension {
                expected: self.nvars,
                found: self.group.nvars(),
            });
        }
        let gens = self.group.generators()?;
        let polys = std::iter::once(("objective".to_string(), &self.objective))
            .chain(self.constraints.iter().enumerate().map(|(k, c)| (format!("constraint {}", k + 1), &c.poly)));
        for (what, p) in polys {
            if p.nvars() != self.nvars {
                return Err(Error::Dimension {
                    expected: self.nvars,
                    found: p.nvars(),
                });
            }
            if !p.is_fixed_by(&gens)? {
                return Err(Error::NotInvariant(what));
            }
        }
        Ok(())
    }

    pub fn inequalities(&self) -> Vec<Polynomial> {
        self.of_kind(ConstraintKind::Ineq)
    }

    pub fn equalities(&self) -> Vec<Polynomial> {
        self.of_kind(ConstraintKind::Eq)
    }

    fn of_kind(&self, kind: ConstraintKind) -> Vec<Polynomial> {
        self.constraints.iter().filter(|c| c.kind == kind).map(|c| c.poly.clone()).collect()
    }

    /// Same problem with a different (sub)group; used to compare methods.
    pub fn with_group(&self, group: GroupSpec) -> Self {
        Self { group, ..self.clone() }
    }

    /// Sign changes `x_i ↦ ±x_i` fixing every term of the objective and the
    /// constraints.
    pub fn sign_symmetry(&self) -> GroupSpec {
        let supports = std::iter::once(&self.objective)
            .chain(self.constraints.iter().map(|c| &c.poly))
            .flat_map(|p| p.support());
        GroupSpec::sign_symmetry(self.nvars, supports)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const S3: &str = r#"{
        "nvars": 3,
        "objective": [[[4, 0, 0], "1"], [[0, 4, 0], "1"], [[0, 0, 4], 1], [[1, 0, 0], "-1/2"], [[0, 1, 0], -0.5], [[0, 0, 1], "-1/2"]],
        "constraints": [{"poly": "3 - x1^2 - x2^2 - x3^2", "kind": "ineq"}],
        "group": {"family": "symmetric", "n": 3}
    }"#;

    #[test]
    fn parses_mixed_coefficients() {
        let p = ProblemInstance::from_json(S3).unwrap();
        assert_eq!(p.objective, parse_polynomial("x1^4 + x2^4 + x3^4 - 1/2*x1 - 1/2*x2 - 1/2*x3", 3).unwrap());
        assert_eq!(p.inequalities().len(), 1);
        assert!(p.equalities().is_empty());
    }

    #[test]
    fn json_round_trip() {
        let p = ProblemInstance::from_json(S3).unwrap();
        assert_eq!(ProblemInstance::from_json(&p.to_json()).unwrap(), p);
    }

    #[test]
    fn non_invariant_objective_is_rejected() {
        let text = S3.replace(r#"[[0, 0, 4], 1]"#, r#"[[0, 0, 4], 2]"#);
        assert!(matches!(ProblemInstance::from_json(&text), Err(Error::NotInvariant(_))));
    }

    #[test]
    fn wrong_exponent_length_is_rejected() {
        let text = S3.replace("[[4, 0, 0], \"1\"]", "[[4, 0], \"1\"]");
        assert!(matches!(ProblemInstance::from_json(&text), Err(Error::Dimension { .. })));
    }

    #[test]
    fn sign_symmetry_of_even_quartic() {
        let p = ProblemInstance {
            name: String::new(),
            nvars: 2,
            objective: parse_polynomial("x1^4 + x2^4 + x1^2*x2^2", 2).unwrap(),
            constraints: vec![],
            group: GroupSpec::Trivial { n: 2 },
            notes: String::new(),
        };
        let g = p.sign_symmetry().group().unwrap();
        assert_eq!(g.order(), 4);
    }
}
