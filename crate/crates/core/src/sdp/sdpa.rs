use std::fmt::Write as _;
use std::path::Path;

use super::{Block, SdpProblem, SparseSymMatrix};
use crate::error::{Error, Result};

const OFFSET_TAG: &str = "*% objective_offset";

fn render(v: f64) -> String {
    format!("{v:.16e}")
}

/// SDPA sparse (`.dat-s`) text of `problem`. The objective offset, which
/// the format has no field for, goes into a comment line that
/// [`read_sdpa`] understands.
pub fn sdpa_string(problem: &SdpProblem) -> Result<String> {
    problem.validate()?;
    let mut out = String::new();
    let _ = writeln!(out, "* SDPA sparse format: min c'x s.t. sum_i x_i F_i - F_0 >= 0");
    if problem.objective_offset != 0.0 {
        let _ = writeln!(out, "{OFFSET_TAG} {}", render(problem.objective_offset));
    }
    let _ = writeln!(out, "{}", problem.num_variables());
    let _ = writeln!(out, "{}", problem.blocks.len());
    let sizes: Vec<String> = problem
        .blocks
        .iter()
        .map(|b| if b.diagonal { format!("-{}", b.size) } else { b.size.to_string() })
        .collect();
    let _ = writeln!(out, "{}", sizes.join(" "));
    let c: Vec<String> = problem.objective.iter().map(|&v| render(v)).collect();
    let _ = writeln!(out, "{}", c.join(" "));
    for (k, m) in std::iter::once(&problem.constant).chain(&problem.constraints).enumerate() {
        for (b, i, j, v) in m.entries() {
            let _ = writeln!(out, "{} {} {} {} {}", k, b + 1, i + 1, j + 1, render(v));
        }
    }
    Ok(out)
}

pub fn write_sdpa(problem: &SdpProblem, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, sdpa_string(problem)?)?;
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::SdpaParse {
        line,
        message: message.into(),
    }
}

/// Parses SDPA sparse text. Header punctuation `{ } ( ) ,` is treated as
/// whitespace, as SDPA itself does.
pub fn parse_sdpa(text: &str) -> Result<SdpProblem> {
    let mut offset = 0.0;
    let mut header: Vec<(usize, Vec<String>)> = Vec::new();
    let mut entries: Vec<(usize, Vec<String>)> = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line_no = no + 1;
        if let Some(rest) = raw.strip_prefix(OFFSET_TAG) {
            offset = rest
                .trim()
                .parse()
                .map_err(|_| parse_err(line_no, "bad objective offset"))?;
            continue;
        }
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('*') || trimmed.starts_with('"') {
            continue;
        }
        let cleaned: String = trimmed
            .chars()
            .map(|c| if "{}(),".contains(c) { ' ' } else { c })
            .collect();
        let tokens: Vec<String> = cleaned.split_whitespace().map(str::to_owned).collect();
        if tokens.is_empty() {
            continue;
        }
        if header.len() < 4 {
            header.push((line_no, tokens));
        } else {
            entries.push((line_no, tokens));
        }
    }
    if header.len() < 4 {
        return Err(parse_err(text.lines().count(), "incomplete header"));
    }
    let first = |k: usize| -> Result<i64> {
        let (line, toks) = &header[k];
        toks[0].parse().map_err(|_| parse_err(*line, "expected an integer"))
    };
    let m = usize::try_from(first(0)?).map_err(|_| parse_err(header[0].0, "negative variable count"))?;
    let nblocks = usize::try_from(first(1)?).map_err(|_| parse_err(header[1].0, "negative block count"))?;
    let (line, toks) = &header[2];
    if toks.len() < nblocks {
        return Err(parse_err(*line, "missing block sizes"));
    }
    let mut blocks = Vec::with_capacity(nblocks);
    for t in &toks[..nblocks] {
        let s: i64 = t.parse().map_err(|_| parse_err(*line, "bad block size"))?;
        if s == 0 {
            return Err(parse_err(*line, "zero block size"));
        }
        blocks.push(if s < 0 { Block::diagonal(s.unsigned_abs() as usize) } else { Block::dense(s as usize) });
    }
    // the objective may spill over several lines
    let mut objective: Vec<f64> = Vec::with_capacity(m);
    let mut pending = vec![header[3].clone()];
    pending.extend(entries.drain(..));
    let mut rest = Vec::new();
    for (line, toks) in pending {
        if objective.len() < m {
            for t in toks {
                if objective.len() == m {
                    return Err(parse_err(line, "objective line has extra values"));
                }
                objective.push(t.parse().map_err(|_| parse_err(line, "bad objective value"))?);
            }
        } else {
            rest.push((line, toks));
        }
    }
    if objective.len() != m {
        return Err(parse_err(text.lines().count(), "objective vector too short"));
    }

    let mut problem = SdpProblem::new(blocks);
    problem.objective_offset = offset;
    let mut mats = vec![SparseSymMatrix::new(); m + 1];
    for (line, toks) in rest {
        if toks.len() != 5 {
            return Err(parse_err(line, "expected `matno blkno i j value`"));
        }
        let int = |s: &str| -> Result<usize> { s.parse().map_err(|_| parse_err(line, "bad index")) };
        let (k, b, i, j) = (int(&toks[0])?, int(&toks[1])?, int(&toks[2])?, int(&toks[3])?);
        let v: f64 = toks[4].parse().map_err(|_| parse_err(line, "bad value"))?;
        if k > m || b == 0 || b > nblocks || i == 0 || j == 0 {
            return Err(parse_err(line, "index out of range"));
        }
        let size = problem.blocks[b - 1].size;
        if i > size || j > size {
            return Err(parse_err(line, "entry outside its block"));
        }
        mats[k].add(b - 1, i - 1, j - 1, v);
    }
    let mut it = mats.into_iter();
    problem.constant = it.next().expect("F0 present");
    for (c, f) in objective.into_iter().zip(it) {
        problem.add_variable(c, f);
    }
    problem.validate()?;
    Ok(problem)
}

pub fn read_sdpa(path: impl AsRef<Path>) -> Result<SdpProblem> {
    parse_sdpa(&std::fs::read_to_string(path)?)
}
