//! Sparse SDPA (`.dat-s`) writer and reader.
//!
//! The moment program `min c0 + f·y s.t. A_0 + Σ y_v A_v ⪰ 0` maps to the
//! SDPA primal `min f·y s.t. Σ y_v F_v − F_0 ⪰ 0` with `F_v = A_v` and
//! `F_0 = −A_0`. Linear equalities become a diagonal block holding each row
//! twice with opposite signs. A nonzero `c0` is recorded in a leading
//! comment line.

use std::fmt::Write as _;

use super::{BlockSdp, LinearEquality, SdpBlock, SparseSym, VarStatus};
use crate::error::{Error, Result};

const CONSTANT_TAG: &str = "* objective constant";

fn num(v: f64) -> String {
    format!("{v:.16e}")
}

/// Writes the program in sparse SDPA format.
pub fn export_sdpa(sdp: &BlockSdp) -> String {
    let mut out = String::new();
    if sdp.objective_constant != 0.0 {
        let _ = writeln!(out, "{CONSTANT_TAG} {}", num(sdp.objective_constant));
    }
    let neq = sdp.equalities.len();
    let nblocks = sdp.blocks.len() + usize::from(neq > 0);
    let mut sizes: Vec<String> = sdp.blocks.iter().map(|b| b.size().to_string()).collect();
    if neq > 0 {
        sizes.push(format!("-{}", 2 * neq));
    }
    let _ = writeln!(out, "{}", sdp.nfree());
    let _ = writeln!(out, "{nblocks}");
    let _ = writeln!(out, "{}", sizes.join(" "));
    let obj: Vec<String> = sdp.objective.iter().map(|&v| num(v)).collect();
    let _ = writeln!(out, "{}", obj.join(" "));

    // (matno, blkno, i, j, value), 1-based.
    let mut entries: Vec<(usize, usize, usize, usize, f64)> = Vec::new();
    for (bi, b) in sdp.blocks.iter().enumerate() {
        for &(p, q, v) in &b.constant.entries {
            entries.push((0, bi + 1, p + 1, q + 1, -v));
        }
        for (var, a) in &b.pencil {
            for &(p, q, v) in &a.entries {
                entries.push((var + 1, bi + 1, p + 1, q + 1, v));
            }
        }
    }
    if neq > 0 {
        let blk = sdp.blocks.len() + 1;
        for (e, eq) in sdp.equalities.iter().enumerate() {
            let (d1, d2) = (2 * e + 1, 2 * e + 2);
            if eq.constant != 0.0 {
                entries.push((0, blk, d1, d1, -eq.constant));
                entries.push((0, blk, d2, d2, eq.constant));
            }
            for &(var, c) in &eq.coeffs {
                entries.push((var + 1, blk, d1, d1, c));
                entries.push((var + 1, blk, d2, d2, -c));
            }
        }
    }
    entries.retain(|e| e.4 != 0.0);
    entries.sort_by(|a, b| (a.0, a.1, a.2, a.3).cmp(&(b.0, b.1, b.2, b.3)));
    for (m, b, i, j, v) in entries {
        let _ = writeln!(out, "{m} {b} {i} {j} {}", num(v));
    }
    out
}

/// Parsed sparse SDPA data.
#[derive(Clone, Debug, PartialEq)]
pub struct SdpaProblem {
    pub objective_constant: f64,
    /// Block sizes; negative means diagonal.
    pub block_sizes: Vec<i64>,
    pub objective: Vec<f64>,
    /// `(matno, blkno, i, j, value)` as in the file (1-based blocks and rows).
    pub entries: Vec<(usize, usize, usize, usize, f64)>,
}

fn parse_err(msg: impl Into<String>) -> Error {
    Error::Parse(msg.into())
}

/// Reads sparse SDPA text. Separators `,(){}` are treated as whitespace.
pub fn parse_sdpa(text: &str) -> Result<SdpaProblem> {
    let mut constant = 0.0;
    let mut tokens: Vec<String> = Vec::new();
    for line in text.lines() {
        let t = line.trim();
        if let Some(rest) = t.strip_prefix(CONSTANT_TAG) {
            constant = rest.trim().parse().map_err(|_| parse_err("bad objective constant"))?;
            continue;
        }
        if t.starts_with('*') || t.starts_with('"') {
            continue;
        }
        let cleaned: String = t.chars().map(|c| if ",(){}".contains(c) { ' ' } else { c }).collect();
        tokens.extend(cleaned.split_whitespace().map(str::to_string));
    }
    let mut it = tokens.into_iter();
    let mut next = |what: &str| it.next().ok_or_else(|| parse_err(format!("unexpected end of input reading {what}")));
    let m: usize = next("m")?.parse().map_err(|_| parse_err("bad m"))?;
    let nblocks: usize = next("nblocks")?.parse().map_err(|_| parse_err("bad nblocks"))?;
    let block_sizes = (0..nblocks)
        .map(|_| next("block size")?.parse::<i64>().map_err(|_| parse_err("bad block size")))
        .collect::<Result<Vec<_>>>()?;
    let objective = (0..m)
        .map(|_| next("objective")?.parse::<f64>().map_err(|_| parse_err("bad objective entry")))
        .collect::<Result<Vec<_>>>()?;
    let mut entries = Vec::new();
    let rest: Vec<String> = it.collect();
    if rest.len() % 5 != 0 {
        return Err(parse_err("entry lines must have five fields"));
    }
    for chunk in rest.chunks(5) {
        let idx = |s: &String| s.parse::<usize>().map_err(|_| parse_err(format!("bad index `{s}`")));
        let (mat, blk, i, j) = (idx(&chunk[0])?, idx(&chunk[1])?, idx(&chunk[2])?, idx(&chunk[3])?);
        let v: f64 = chunk[4].parse().map_err(|_| parse_err(format!("bad value `{}`", chunk[4])))?;
        let size = *block_sizes.get(blk.wrapping_sub(1)).ok_or_else(|| parse_err(format!("block {blk} out of range")))?;
        let n = size.unsigned_abs() as usize;
        if mat > m || i == 0 || j == 0 || i > n || j > n || (size < 0 && i != j) {
            return Err(parse_err(format!("entry {mat} {blk} {i} {j} out of range")));
        }
        entries.push((mat, blk, i, j, v));
    }
    Ok(SdpaProblem {
        objective_constant: constant,
        block_sizes,
        objective,
        entries,
    })
}

impl SdpaProblem {
    /// Converts to a [`BlockSdp`]; diagonal blocks become `1×1` blocks.
    /// Variables are numbered `1..=m` in `variables`.
    pub fn to_block_sdp(&self) -> BlockSdp {
        let m = self.objective.len();
        // map (blkno, i) of diagonal blocks to scalar blocks
        let mut layout: Vec<Vec<usize>> = Vec::new();
        let mut blocks: Vec<SdpBlock> = Vec::new();
        for &s in &self.block_sizes {
            let n = s.unsigned_abs() as usize;
            if s >= 0 {
                layout.push(vec![blocks.len()]);
                blocks.push(empty_block(n, blocks.len()));
            } else {
                let ids: Vec<usize> = (0..n).map(|d| blocks.len() + d).collect();
                for _ in 0..n {
                    blocks.push(empty_block(1, blocks.len()));
                }
                layout.push(ids);
            }
        }
        let mut pencils: Vec<std::collections::BTreeMap<usize, SparseSym>> = vec![Default::default(); blocks.len()];
        for &(mat, blk, i, j, v) in &self.entries {
            let diag = self.block_sizes[blk - 1] < 0;
            let (target, p, q) = if diag { (layout[blk - 1][i - 1], 0, 0) } else { (layout[blk - 1][0], i - 1, j - 1) };
            let size = blocks[target].size();
            if mat == 0 {
                blocks[target].constant.push(p, q, -v);
            } else {
                pencils[target].entry(mat - 1).or_insert_with(|| SparseSym::new(size)).push(p, q, v);
            }
        }
        for (b, pen) in blocks.iter_mut().zip(pencils) {
            b.constant.finish();
            b.pencil = pen
                .into_iter()
                .map(|(v, mut a)| {
                    a.finish();
                    (v, a)
                })
                .collect();
        }
        let mut status = vec![VarStatus::FixedOne];
        status.extend((0..m).map(VarStatus::Free));
        BlockSdp {
            status,
            variables: (1..=m).collect(),
            objective_constant: self.objective_constant,
            objective: self.objective.clone(),
            blocks,
            equalities: Vec::<LinearEquality>::new(),
        }
    }
}

fn empty_block(n: usize, clique: usize) -> SdpBlock {
    SdpBlock {
        component: 0,
        constraint: 0,
        clique,
        indices: (0..n).collect(),
        constant: SparseSym::new(n),
        pencil: Vec::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy() -> BlockSdp {
        let mut c = SparseSym::new(2);
        c.push(0, 0, 1.0);
        let mut a1 = SparseSym::new(2);
        a1.push(0, 1, 1.0);
        let mut a2 = SparseSym::new(2);
        a2.push(1, 1, 1.0);
        BlockSdp {
            status: vec![VarStatus::FixedOne, VarStatus::Free(0), VarStatus::Free(1)],
            variables: vec![1, 2],
            objective_constant: 0.0,
            objective: vec![0.0, 1.0],
            blocks: vec![SdpBlock {
                component: 0,
                constraint: 0,
                clique: 0,
                indices: vec![0, 1],
                constant: c,
                pencil: vec![(0, a1), (1, a2)],
            }],
            equalities: vec![],
        }
    }

    #[test]
    fn toy_file_by_hand() {
        let expected = "\
2
1
2
0.0000000000000000e0 1.0000000000000000e0
0 1 1 1 -1.0000000000000000e0
1 1 1 2 1.0000000000000000e0
2 1 2 2 1.0000000000000000e0
";
        assert_eq!(export_sdpa(&toy()), expected);
    }

    #[test]
    fn round_trip_preserves_pencil() {
        let mut sdp = toy();
        sdp.objective_constant = 2.5;
        sdp.equalities.push(LinearEquality {
            constant: -1.0,
            coeffs: vec![(1, 3.0)],
        });
        let parsed = parse_sdpa(&export_sdpa(&sdp)).unwrap();
        assert_eq!(parsed.block_sizes, vec![2, -2]);
        assert_eq!(parsed.objective_constant, 2.5);
        let back = parsed.to_block_sdp();
        let y = [0.3, -0.7];
        assert_eq!(back.blocks[0].evaluate(&y), sdp.blocks[0].evaluate(&y));
        // the equality appears as +row and -row
        let row = -1.0 + 3.0 * y[1];
        assert_eq!(back.blocks[1].evaluate(&y)[(0, 0)], row);
        assert_eq!(back.blocks[2].evaluate(&y)[(0, 0)], -row);
        assert_eq!(back.moment_value(&y), sdp.moment_value(&y));
    }

    #[test]
    fn malformed_input_is_rejected() {
        assert!(parse_sdpa("2\n1\n2\n0 1\n0 1 3 3 1.0\n").is_err());
        assert!(parse_sdpa("1\n").is_err());
    }
}
