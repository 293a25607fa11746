//! Text and JSON codecs for patterns and SFT specifications.
//!
//! Pattern text (`sftpat v1`):
//!
//! ```text
//! sftpat v1
//! dim 2
//! alphabet a b
//! 0 0 1
//! 0 1 0
//! ```
//!
//! SFT text (`sft v1`): header, `dim`, `alphabet`, then any number of
//! `forbid <label>` blocks whose cell lines end in a symbol id or a
//! comma-separated id set, each block closed by `end`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::sft::{alphabet, Forbidden, Pattern, SftError, SftSpec, SymSet};

#[derive(Debug, Error)]
pub enum FormatError {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },
    #[error(transparent)]
    Sft(#[from] SftError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn syntax(line: usize, msg: impl Into<String>) -> FormatError {
    FormatError::Syntax { line, msg: msg.into() }
}

#[derive(Serialize, Deserialize)]
struct PatternJson {
    dim: usize,
    alphabet: Vec<String>,
    cells: Vec<Vec<i64>>,
}

pub fn pattern_to_text(p: &Pattern, names: &[String]) -> String {
    let mut out = format!("sftpat v1\ndim {}\nalphabet", p.dim());
    for n in names {
        out.push(' ');
        out.push_str(n);
    }
    out.push('\n');
    for (pos, s) in p.iter() {
        for c in pos {
            out.push_str(&c.to_string());
            out.push(' ');
        }
        out.push_str(&s.to_string());
        out.push('\n');
    }
    out
}

fn header_lines<'a>(
    lines: &mut impl Iterator<Item = (usize, &'a str)>,
    magic: &str,
) -> Result<(usize, Vec<String>), FormatError> {
    let (ln, head) = lines.next().ok_or_else(|| syntax(1, "empty input"))?;
    if head.trim() != magic {
        return Err(syntax(ln, format!("expected `{magic}`")));
    }
    let (ln, dim_line) = lines.next().ok_or_else(|| syntax(ln + 1, "missing dim"))?;
    let dim = dim_line
        .trim()
        .strip_prefix("dim ")
        .and_then(|d| d.trim().parse::<usize>().ok())
        .filter(|&d| d > 0)
        .ok_or_else(|| syntax(ln, "expected `dim <d>`"))?;
    let (ln, alpha) = lines.next().ok_or_else(|| syntax(ln + 1, "missing alphabet"))?;
    let mut words = alpha.split_whitespace();
    if words.next() != Some("alphabet") {
        return Err(syntax(ln, "expected `alphabet ...`"));
    }
    Ok((dim, words.map(str::to_string).collect()))
}

fn numbered(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().map(|(i, l)| (i + 1, l)).filter(|(_, l)| !l.trim().is_empty() && !l.starts_with('#'))
}

pub fn pattern_from_text(text: &str) -> Result<(Pattern, Vec<String>), FormatError> {
    let mut lines = numbered(text);
    let (dim, names) = header_lines(&mut lines, "sftpat v1")?;
    let mut p = Pattern::new(dim);
    for (ln, line) in lines {
        let nums: Vec<i64> = line
            .split_whitespace()
            .map(|w| w.parse::<i64>().map_err(|_| syntax(ln, format!("bad integer `{w}`"))))
            .collect::<Result<_, _>>()?;
        if nums.len() != dim + 1 {
            return Err(syntax(ln, format!("expected {} numbers", dim + 1)));
        }
        let sym = nums[dim];
        if sym < 0 || sym as usize >= names.len() {
            return Err(syntax(ln, format!("symbol {sym} outside alphabet")));
        }
        let pos = nums[..dim].iter().map(|&c| c as i32).collect();
        p.insert(pos, sym as u32)?;
    }
    Ok((p, names))
}

pub fn pattern_to_json(p: &Pattern, names: &[String]) -> String {
    let cells = p
        .iter()
        .map(|(pos, s)| pos.iter().map(|&c| c as i64).chain(std::iter::once(s as i64)).collect())
        .collect();
    let j = PatternJson { dim: p.dim(), alphabet: names.to_vec(), cells };
    serde_json::to_string(&j).expect("pattern json")
}

pub fn pattern_from_json(text: &str) -> Result<(Pattern, Vec<String>), FormatError> {
    let j: PatternJson = serde_json::from_str(text)?;
    let mut p = Pattern::new(j.dim);
    for (i, c) in j.cells.iter().enumerate() {
        if c.len() != j.dim + 1 {
            return Err(syntax(i + 1, "cell has wrong arity"));
        }
        let sym = c[j.dim];
        if sym < 0 || sym as usize >= j.alphabet.len() {
            return Err(syntax(i + 1, format!("symbol {sym} outside alphabet")));
        }
        p.insert(c[..j.dim].iter().map(|&x| x as i32).collect(), sym as u32)?;
    }
    Ok((p, j.alphabet))
}

/// Reads either format, deciding on the first non-blank character.
pub fn read_pattern(text: &str) -> Result<(Pattern, Vec<String>), FormatError> {
    if text.trim_start().starts_with('{') {
        pattern_from_json(text)
    } else {
        pattern_from_text(text)
    }
}

pub fn sft_to_text(sft: &SftSpec) -> String {
    let mut out = format!("sft v1\ndim {}\nalphabet", sft.dim());
    for s in sft.alphabet() {
        out.push(' ');
        out.push_str(&s.name);
    }
    out.push('\n');
    for f in sft.forbidden() {
        out.push_str(&format!("forbid {}\n", f.label));
        for (pos, set) in &f.cells {
            for c in pos {
                out.push_str(&c.to_string());
                out.push(' ');
            }
            let ids: Vec<String> = set.ones().map(|s| s.to_string()).collect();
            out.push_str(&ids.join(","));
            out.push('\n');
        }
        out.push_str("end\n");
    }
    out
}

pub fn sft_from_text(text: &str) -> Result<SftSpec, FormatError> {
    let mut lines = numbered(text);
    let (dim, names) = header_lines(&mut lines, "sft v1")?;
    let n = names.len();
    let mut forbidden = Vec::new();
    let mut current: Option<Forbidden> = None;
    for (ln, line) in lines {
        let t = line.trim();
        if let Some(label) = t.strip_prefix("forbid") {
            if current.is_some() {
                return Err(syntax(ln, "nested `forbid`"));
            }
            current = Some(Forbidden::new(label.trim(), Vec::new()));
            continue;
        }
        if t == "end" {
            let f = current.take().ok_or_else(|| syntax(ln, "`end` without `forbid`"))?;
            if f.cells.is_empty() {
                return Err(syntax(ln, "empty forbidden pattern"));
            }
            forbidden.push(f);
            continue;
        }
        let f = current.as_mut().ok_or_else(|| syntax(ln, "cell outside `forbid` block"))?;
        let words: Vec<&str> = t.split_whitespace().collect();
        if words.len() != dim + 1 {
            return Err(syntax(ln, format!("expected {} fields", dim + 1)));
        }
        let pos = words[..dim]
            .iter()
            .map(|w| w.parse::<i32>().map_err(|_| syntax(ln, format!("bad coordinate `{w}`"))))
            .collect::<Result<Vec<_>, _>>()?;
        let mut set = SymSet::with_capacity(n);
        for w in words[dim].split(',') {
            let s: usize = w.parse().map_err(|_| syntax(ln, format!("bad symbol `{w}`")))?;
            if s >= n {
                return Err(syntax(ln, format!("symbol {s} outside alphabet")));
            }
            set.insert(s);
        }
        f.cells.push((pos, set));
    }
    if current.is_some() {
        return Err(syntax(0, "unterminated `forbid` block"));
    }
    Ok(SftSpec::new(dim, alphabet(&names), forbidden)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sft::{golden_mean, hard_square};
    use proptest::prelude::*;

    fn names(k: usize) -> Vec<String> {
        (0..k).map(|i| format!("s{i}")).collect()
    }

    #[test]
    fn text_layout() {
        let p = Pattern::from_cells(2, [(vec![0, 1], 1), (vec![0, 0], 0)]).unwrap();
        let t = pattern_to_text(&p, &names(2));
        assert_eq!(t, "sftpat v1\ndim 2\nalphabet s0 s1\n0 0 0\n0 1 1\n");
        let j = pattern_to_json(&p, &names(2));
        assert_eq!(j, r#"{"dim":2,"alphabet":["s0","s1"],"cells":[[0,0,0],[0,1,1]]}"#);
    }

    #[test]
    fn sft_round_trip() {
        for sft in [golden_mean(), hard_square()] {
            let t = sft_to_text(&sft);
            let back = sft_from_text(&t).unwrap();
            assert_eq!(sft_to_text(&back), t);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(pattern_from_text("sftpat v2\n").is_err());
        assert!(pattern_from_text("sftpat v1\ndim 1\nalphabet a\n0 3\n").is_err());
        assert!(sft_from_text("sft v1\ndim 1\nalphabet a\nforbid x\n0 0\n").is_err());
    }

    proptest! {
        #[test]
        fn both_formats_round_trip(
            dim in 1usize..4,
            k in 1usize..5,
            raw in proptest::collection::vec((proptest::collection::vec(-50i32..50, 3), 0u32..5), 1..30)
        ) {
            let mut p = Pattern::new(dim);
            for (pos, s) in raw {
                p.insert(pos[..dim].to_vec(), s % k as u32).unwrap();
            }
            let nm = names(k);
            let t = pattern_to_text(&p, &nm);
            let (q, qn) = pattern_from_text(&t).unwrap();
            prop_assert_eq!(&q, &p);
            prop_assert_eq!(pattern_to_text(&q, &qn), t);
            let j = pattern_to_json(&p, &nm);
            let (r, rn) = read_pattern(&j).unwrap();
            prop_assert_eq!(&r, &p);
            prop_assert_eq!(pattern_to_json(&r, &rn), j);
        }
    }
}
