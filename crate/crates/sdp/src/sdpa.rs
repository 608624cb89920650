//! SDPA sparse format (`.dat-s`).
//!
//! SDPA describes the pair
//!
//! ```text
//! (P) min  Σ c_i x_i   s.t.  Σ F_i x_i − F_0 = X ⪰ 0
//! (D) max  ⟨F_0, Y⟩    s.t.  ⟨F_i, Y⟩ = c_i,  Y ⪰ 0
//! ```
//!
//! An [`SdpProblem`] maps onto (D): our equality rows become `F_i`, our
//! right-hand side becomes `c`, and `F_0 = −C`, so the SDPA optimal value is
//! the negated objective of the original problem. Free variables are split
//! as `x = x⁺ − x⁻` and stored in one trailing diagonal block of order
//! `2 n_free`; a `*free-split` comment records this so that import can
//! restore them.
//!
//! Layout: comment lines starting with `"` or `*`, then `m`, `nBlock`, the
//! block structure (negative = diagonal), the vector `c`, and finally one
//! `matno blkno i j value` line per upper-triangular nonzero (1-based).

use std::fmt::Write as _;
use std::path::Path;

use crate::problem::{merge_entries, BlockEntry, Constraint, SdpProblem};
use crate::SdpError;

const FREE_SPLIT_TAG: &str = "*free-split";

pub fn to_string(problem: &SdpProblem) -> String {
    let nf = problem.n_free;
    let nb = problem.block_sizes.len();
    let free_block = nb; // 0-based index of the diagonal block, if any
    let mut out = String::new();
    out.push_str("\"sbc-sdp export: max <F0,Y> s.t. <Fi,Y> = ci, Y psd; F0 = -C\n");
    if nf > 0 {
        let _ = writeln!(out, "{FREE_SPLIT_TAG} {nf}");
    }
    let _ = writeln!(out, "{}", problem.constraints.len());
    let _ = writeln!(out, "{}", nb + usize::from(nf > 0));
    let mut structure: Vec<String> = problem.block_sizes.iter().map(|s| s.to_string()).collect();
    if nf > 0 {
        structure.push(format!("-{}", 2 * nf));
    }
    let _ = writeln!(out, "{}", structure.join(" "));
    let rhs: Vec<String> = problem.constraints.iter().map(|c| fmt(c.rhs)).collect();
    let _ = writeln!(out, "{}", rhs.join(" "));

    let mut emit = |mat: usize, entries: &[BlockEntry], free: &[(usize, f64)], sign: f64| {
        for e in merge_entries(entries.to_vec()) {
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                mat,
                e.block + 1,
                e.row + 1,
                e.col + 1,
                fmt(sign * e.value)
            );
        }
        for &(k, v) in free {
            if v == 0.0 {
                continue;
            }
            let _ = writeln!(out, "{} {} {} {} {}", mat, free_block + 1, k + 1, k + 1, fmt(sign * v));
            let _ = writeln!(
                out,
                "{} {} {} {} {}",
                mat,
                free_block + 1,
                nf + k + 1,
                nf + k + 1,
                fmt(-sign * v)
            );
        }
    };
    let c_free: Vec<(usize, f64)> = problem.c_free.iter().copied().enumerate().collect();
    emit(0, &problem.c_blocks, &c_free, -1.0);
    for (i, c) in problem.constraints.iter().enumerate() {
        emit(i + 1, &c.entries, &c.free, 1.0);
    }
    out
}

fn fmt(v: f64) -> String {
    // `{:?}` is the shortest representation that parses back to the same bits.
    let s = format!("{v:?}");
    if s == "-0.0" {
        "0.0".into()
    } else {
        s
    }
}

pub fn write_file(problem: &SdpProblem, path: &Path) -> Result<(), SdpError> {
    std::fs::write(path, to_string(problem))?;
    Ok(())
}

pub fn read_file(path: &Path) -> Result<SdpProblem, SdpError> {
    parse(&std::fs::read_to_string(path)?)
}

struct Tokens<'a> {
    items: Vec<(usize, &'a str)>,
    pos: usize,
}

impl<'a> Tokens<'a> {
    fn next(&mut self, what: &str) -> Result<(usize, &'a str), SdpError> {
        let t = self.items.get(self.pos).copied().ok_or_else(|| SdpError::Parse {
            line: self.items.last().map_or(0, |t| t.0),
            msg: format!("unexpected end of input, expected {what}"),
        })?;
        self.pos += 1;
        Ok(t)
    }

    fn number<T: std::str::FromStr>(&mut self, what: &str) -> Result<T, SdpError> {
        let (line, tok) = self.next(what)?;
        tok.parse().map_err(|_| SdpError::Parse {
            line,
            msg: format!("expected {what}, found {tok:?}"),
        })
    }
}

pub fn parse(text: &str) -> Result<SdpProblem, SdpError> {
    let mut free_split: Option<usize> = None;
    let mut items = Vec::new();
    let mut in_header = true;
    for (ln, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if in_header && (line.starts_with('"') || line.starts_with('*')) {
            if let Some(rest) = line.strip_prefix(FREE_SPLIT_TAG) {
                free_split = Some(rest.trim().parse().map_err(|_| SdpError::Parse {
                    line: ln + 1,
                    msg: "bad free-split count".into(),
                })?);
            }
            continue;
        }
        in_header = false;
        for tok in line
            .split(|c: char| c.is_whitespace() || matches!(c, ',' | '(' | ')' | '{' | '}'))
            .filter(|t| !t.is_empty())
        {
            items.push((ln + 1, tok));
        }
    }
    let mut toks = Tokens { items, pos: 0 };
    let m: usize = toks.number("mDim")?;
    let nblock: usize = toks.number("nBlock")?;
    let mut structure = Vec::with_capacity(nblock);
    for _ in 0..nblock {
        let s: i64 = toks.number("block size")?;
        if s == 0 {
            return Err(SdpError::Parse {
                line: 0,
                msg: "block of size 0".into(),
            });
        }
        structure.push(s);
    }
    let mut c = Vec::with_capacity(m);
    for _ in 0..m {
        c.push(toks.number::<f64>("objective coefficient")?);
    }

    let nf = free_split.unwrap_or(0);
    if nf > 0 && structure.last() != Some(&-(2 * nf as i64)) {
        return Err(SdpError::Parse {
            line: 0,
            msg: "free-split tag does not match the last block".into(),
        });
    }
    let body = if nf > 0 {
        &structure[..nblock - 1]
    } else {
        &structure[..]
    };

    // Diagonal blocks without a free-split tag become runs of 1×1 blocks.
    let mut block_map: Vec<Vec<usize>> = Vec::new();
    let mut sizes = Vec::new();
    for &s in body {
        if s > 0 {
            block_map.push(vec![sizes.len()]);
            sizes.push(s as usize);
        } else {
            let ids = (0..(-s) as usize)
                .map(|_| {
                    sizes.push(1);
                    sizes.len() - 1
                })
                .collect();
            block_map.push(ids);
        }
    }

    let mut problem = SdpProblem {
        block_sizes: sizes,
        n_free: nf,
        c_free: vec![0.0; nf],
        c_blocks: Vec::new(),
        constraints: c
            .iter()
            .map(|&rhs| Constraint {
                rhs,
                ..Default::default()
            })
            .collect(),
    };
    // Free variables: keep the x⁺ coefficient, check x⁻ mirrors it.
    let mut minus: Vec<Vec<(usize, f64)>> = vec![Vec::new(); m + 1];

    while toks.pos < toks.items.len() {
        let line = toks.items[toks.pos].0;
        let mat: usize = toks.number("matrix number")?;
        let blk: usize = toks.number("block number")?;
        let mut i: usize = toks.number("row")?;
        let mut j: usize = toks.number("column")?;
        let v: f64 = toks.number("value")?;
        let bad = |msg: &str| SdpError::Parse {
            line,
            msg: msg.to_string(),
        };
        if mat > m || blk == 0 || blk > nblock || i == 0 || j == 0 {
            return Err(bad("index out of range"));
        }
        if i > j {
            std::mem::swap(&mut i, &mut j);
        }
        let sign = if mat == 0 { -1.0 } else { 1.0 };
        let s = structure[blk - 1];
        if nf > 0 && blk == nblock {
            if i != j || i > 2 * nf {
                return Err(bad("off-diagonal entry in diagonal block"));
            }
            let k = i - 1;
            if k < nf {
                if mat == 0 {
                    problem.c_free[k] += sign * v;
                } else {
                    problem.constraints[mat - 1].free.push((k, v));
                }
            } else {
                minus[mat].push((k - nf, -sign * v));
            }
            continue;
        }
        let entry = if s > 0 {
            if j as i64 > s {
                return Err(bad("entry outside block"));
            }
            BlockEntry::new(block_map[blk - 1][0], i - 1, j - 1, sign * v)
        } else {
            if i != j || j as i64 > -s {
                return Err(bad("off-diagonal entry in diagonal block"));
            }
            BlockEntry::new(block_map[blk - 1][i - 1], 0, 0, sign * v)
        };
        if mat == 0 {
            problem.c_blocks.push(entry);
        } else {
            problem.constraints[mat - 1].entries.push(entry);
        }
    }

    for (mat, entries) in minus.into_iter().enumerate() {
        for (k, v) in entries {
            let plus = if mat == 0 {
                problem.c_free[k]
            } else {
                problem.constraints[mat - 1]
                    .free
                    .iter()
                    .filter(|(kk, _)| *kk == k)
                    .map(|(_, vv)| *vv)
                    .sum()
            };
            if (plus - v).abs() > 1e-12 * (1.0 + v.abs()) {
                return Err(SdpError::Parse {
                    line: 0,
                    msg: format!("free-split pair for variable {k} is not symmetric"),
                });
            }
        }
    }
    problem.normalize();
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_problem_has_zero_blocks() {
        let text = to_string(&SdpProblem::new());
        let back = parse(&text).unwrap();
        assert_eq!(back, SdpProblem::new());
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "0");
        assert_eq!(lines[2], "0");
    }

    #[test]
    fn header_layout() {
        let mut p = SdpProblem::new();
        let b = p.add_block(2);
        let x = p.add_free();
        p.c_free[x] = 1.0;
        p.add_constraint(Constraint {
            free: vec![(x, 1.0)],
            entries: vec![BlockEntry::new(b, 0, 1, 1.0)],
            rhs: 2.0,
        });
        let text = to_string(&p);
        let lines: Vec<&str> = text.lines().collect();
        assert!(lines[0].starts_with('"'));
        assert_eq!(lines[1], "*free-split 1");
        assert_eq!(&lines[2..5], &["1", "2", "2 -2"]);
        assert_eq!(lines[5], "2.0");
        assert!(lines.contains(&"1 1 1 2 1.0"));
        assert!(lines.contains(&"0 2 1 1 -1.0"));
        assert!(lines.contains(&"0 2 2 2 1.0"));
    }

    #[test]
    fn untagged_diagonal_blocks_become_scalar_blocks() {
        let text = "\"plain\n1\n1\n-2\n1.0\n1 1 1 1 1.0\n1 1 2 2 1.0\n0 1 1 1 -3.0\n";
        let p = parse(text).unwrap();
        assert_eq!(p.block_sizes, vec![1, 1]);
        assert_eq!(p.c_blocks, vec![BlockEntry::new(0, 0, 0, 3.0)]);
        assert_eq!(p.constraints[0].entries.len(), 2);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse("1\n1\n2\nfoo\n").is_err());
        assert!(parse("1\n1\n2\n1.0\n1 3 1 1 1.0\n").is_err());
    }
}
