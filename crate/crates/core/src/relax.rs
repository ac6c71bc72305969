//! End-to-end construction of a relaxation: group and irreps, symmetry-adapted
//! basis, coefficient tensor, term-sparsity iteration and SDP assembly.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::groups::builtin_irreps;
use crate::ipsolver::{solve, SdpSolution, SolverConfig};
use crate::problem::ProblemInstance;
use crate::sabasis::{symmetry_adapted_basis, SymmetryAdaptedBasis};
use crate::sdpbuild::tensor::{min_order, CoefficientTensor};
use crate::sdpbuild::{assemble_moment, sdp_coefficients, BlockSdp, EqualityMode};
use crate::tsp::{block_profile, TspConfig, TspState};

/// Which term-sparsity step to assemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sparsity {
    /// No term sparsity.
    Dense,
    /// Sparsity order `s >= 1` (stops early at a fixpoint).
    Order(usize),
    /// Iterate until the patterns stabilize.
    Fixpoint,
}

impl std::str::FromStr for Sparsity {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s {
            "dense" => Ok(Self::Dense),
            "fix" | "fixpoint" => Ok(Self::Fixpoint),
            _ => match s.parse::<usize>() {
                Ok(0) => Ok(Self::Dense),
                Ok(n) => Ok(Self::Order(n)),
                Err(_) => Err(format!("invalid sparsity `{s}` (expected a number, `fix` or `dense`)")),
            },
        }
    }
}

impl std::fmt::Display for Sparsity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Dense => f.write_str("dense"),
            Self::Order(s) => write!(f, "{s}"),
            Self::Fixpoint => f.write_str("fix"),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RelaxationConfig {
    /// Relaxation order `r`.
    pub order: usize,
    pub sparsity: Sparsity,
    pub tsp: TspConfig,
    pub equality_mode: EqualityMode,
}

impl RelaxationConfig {
    pub fn dense(order: usize) -> Self {
        Self {
            order,
            sparsity: Sparsity::Dense,
            tsp: TspConfig::default(),
            equality_mode: EqualityMode::Pair,
        }
    }

    pub fn sparse(order: usize, sparsity: Sparsity, tsp: TspConfig) -> Self {
        Self {
            order,
            sparsity,
            tsp,
            equality_mode: EqualityMode::Pair,
        }
    }
}

/// Wall-clock seconds per phase.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct PhaseTimings {
    pub basis: f64,
    pub tsp: f64,
    pub assembly: f64,
    pub solve: f64,
}

impl PhaseTimings {
    pub fn total(&self) -> f64 {
        self.basis + self.tsp + self.assembly + self.solve
    }
}

/// An assembled relaxation.
#[derive(Clone, Debug)]
pub struct Relaxation {
    pub basis: SymmetryAdaptedBasis,
    pub tensor: CoefficientTensor,
    /// Term-sparsity state; `None` for the dense relaxation.
    pub state: Option<TspState>,
    pub sdp: BlockSdp,
    pub timings: PhaseTimings,
}

impl Relaxation {
    pub fn build(problem: &ProblemInstance, cfg: &RelaxationConfig) -> Result<Self> {
        problem.validate()?;
        let ineqs = problem.inequalities();
        let eqs = problem.equalities();
        let all: Vec<_> = ineqs.iter().chain(&eqs).cloned().collect();
        let rmin = min_order(&problem.objective, &all);
        if cfg.order < rmin {
            return Err(Error::Order {
                order: cfg.order,
                min_order: rmin,
            });
        }

        let t0 = Instant::now();
        let group = problem.group.group()?;
        let irreps = builtin_irreps(&problem.group, &group)?;
        let basis = symmetry_adapted_basis(&group, &irreps, cfg.order)?;
        let tensor = sdp_coefficients(&problem.objective, &ineqs, &eqs, cfg.equality_mode, &basis)?;
        let basis_time = t0.elapsed().as_secs_f64();

        let t1 = Instant::now();
        let state = match cfg.sparsity {
            Sparsity::Dense => None,
            Sparsity::Order(s) => {
                let mut st = TspState::new(&tensor, cfg.tsp);
                st.iterate_to(&tensor, s.max(1));
                Some(st)
            }
            Sparsity::Fixpoint => {
                let mut st = TspState::new(&tensor, cfg.tsp);
                st.iterate_to_fixpoint(&tensor);
                Some(st)
            }
        };
        let tsp_time = t1.elapsed().as_secs_f64();

        let t2 = Instant::now();
        let sdp = assemble_moment(&tensor, state.as_ref().map(|s| s.patterns.as_slice()));
        let assembly_time = t2.elapsed().as_secs_f64();

        Ok(Self {
            basis,
            tensor,
            state,
            sdp,
            timings: PhaseTimings {
                basis: basis_time,
                tsp: tsp_time,
                assembly: assembly_time,
                solve: 0.0,
            },
        })
    }

    /// Sparsity order reached (0 for dense).
    pub fn s(&self) -> usize {
        self.state.as_ref().map_or(0, |s| s.s)
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        self.sdp.block_sizes()
    }

    /// Block sizes as `size_count` pairs.
    pub fn profile(&self) -> String {
        block_profile(&self.block_sizes())
    }

    pub fn solve(&mut self, cfg: &SolverConfig) -> SdpSolution {
        let t = Instant::now();
        let sol = solve(&self.sdp, cfg);
        self.timings.solve = t.elapsed().as_secs_f64();
        sol
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sparsity_parsing() {
        assert_eq!("fix".parse::<Sparsity>().unwrap(), Sparsity::Fixpoint);
        assert_eq!("2".parse::<Sparsity>().unwrap(), Sparsity::Order(2));
        assert_eq!("0".parse::<Sparsity>().unwrap(), Sparsity::Dense);
        assert!("x".parse::<Sparsity>().is_err());
        assert_eq!(Sparsity::Order(3).to_string(), "3");
    }
}
