//! Reader for RNAfold-style (v2.0) parameter files.
//!
//! A file is a list of sections introduced by `# name` lines. Numeric sections hold
//! whitespace-separated integers in units of 0.01 kcal/mol, with `INF` and `DEF` placeholders;
//! `/* ... */` comments are ignored. Loop lookup sections (`Triloops`, `Tetraloops`,
//! `Hexaloops`) hold `SEQUENCE energy [enthalpy]` lines. `*_enthalpies` sections and
//! unknown sections are skipped.
//!
//! Pair types are indexed CG=1, GC=2, GU=3, UG=4, AU=5, UA=6, other=7 and bases
//! N=0, A=1, C=2, G=3, U=4.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Placeholder for forbidden entries.
pub const INF: i32 = 10_000_000;
/// Value substituted for `DEF` tokens.
pub const DEF: i32 = -50;
/// Largest tabulated loop size.
pub const MAXLOOP: usize = 30;

const NP: usize = 8; // pair-type axis: 0 unused, 1..=7

/// Dense row-major table with fixed dimensions.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    dims: Vec<usize>,
    data: Vec<i32>,
}

impl Table {
    fn zeros(dims: &[usize]) -> Self {
        Table { dims: dims.to_vec(), data: vec![0; dims.iter().product()] }
    }

    fn filled(dims: &[usize], v: i32) -> Self {
        Table { dims: dims.to_vec(), data: vec![v; dims.iter().product()] }
    }

    #[inline]
    fn offset(&self, idx: &[usize]) -> usize {
        debug_assert_eq!(idx.len(), self.dims.len());
        idx.iter().zip(&self.dims).fold(0, |acc, (&i, &d)| {
            debug_assert!(i < d);
            acc * d + i
        })
    }

    #[inline]
    pub fn get(&self, idx: &[usize]) -> i32 {
        self.data[self.offset(idx)]
    }

    fn set(&mut self, idx: &[usize], v: i32) {
        let o = self.offset(idx);
        self.data[o] = v;
    }

    /// Fills the sub-grid whose index ranges are `ranges`, in row-major order.
    fn fill(&mut self, ranges: &[std::ops::Range<usize>], values: &[i32]) {
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.start).collect();
        for &v in values {
            self.set(&idx, v);
            for d in (0..idx.len()).rev() {
                idx[d] += 1;
                if idx[d] < ranges[d].end {
                    break;
                }
                idx[d] = ranges[d].start;
            }
        }
    }
}

/// Nearest-neighbour parameters at 37 °C.
#[derive(Debug, Clone, PartialEq)]
pub struct ParameterSet {
    pub stack: Table,
    pub mismatch_hairpin: Table,
    pub mismatch_interior: Table,
    pub mismatch_interior_1n: Table,
    pub mismatch_interior_23: Table,
    pub mismatch_multi: Table,
    pub mismatch_exterior: Table,
    pub dangle5: Table,
    pub dangle3: Table,
    pub int11: Option<Table>,
    pub int21: Option<Table>,
    pub int22: Option<Table>,
    pub hairpin: [i32; MAXLOOP + 1],
    pub bulge: [i32; MAXLOOP + 1],
    pub interior: [i32; MAXLOOP + 1],
    pub ml_base: i32,
    pub ml_closing: i32,
    pub ml_intern: i32,
    pub ninio: i32,
    pub max_ninio: i32,
    pub terminal_au: i32,
    pub lxc: f64,
    pub triloops: HashMap<String, i32>,
    pub tetraloops: HashMap<String, i32>,
    pub hexaloops: HashMap<String, i32>,
    /// SHA-256 of the source bytes, hex encoded.
    pub digest: String,
}

const BUNDLED: &str = include_str!("../../params/rna_turner2004.par");

impl ParameterSet {
    /// The bundled Turner 2004 parameter set.
    pub fn turner2004() -> Self {
        load_parameters(BUNDLED.as_bytes()).expect("bundled parameter file is valid")
    }

    pub fn bundled_source() -> &'static str {
        BUNDLED
    }
}

struct Section {
    name: String,
    line: usize,
    // (line number, token)
    tokens: Vec<(usize, String)>,
}

fn strip_comments(text: &str, in_comment: &mut bool) -> String {
    let mut out = String::new();
    let mut rest = text;
    loop {
        if *in_comment {
            match rest.find("*/") {
                Some(k) => {
                    rest = &rest[k + 2..];
                    *in_comment = false;
                }
                None => return out,
            }
        } else {
            match rest.find("/*") {
                Some(k) => {
                    out.push_str(&rest[..k]);
                    out.push(' ');
                    rest = &rest[k + 2..];
                    *in_comment = true;
                }
                None => {
                    out.push_str(rest);
                    return out;
                }
            }
        }
    }
}

fn split_sections(text: &str) -> Vec<Section> {
    let mut sections: Vec<Section> = Vec::new();
    let mut in_comment = false;
    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = strip_comments(raw, &mut in_comment);
        let trimmed = line.trim();
        if let Some(rest) = trimmed.strip_prefix('#') {
            if rest.starts_with('#') {
                continue; // file banner
            }
            let name = rest.split_whitespace().next().unwrap_or("").to_string();
            sections.push(Section { name, line: line_no, tokens: Vec::new() });
            continue;
        }
        if let Some(sec) = sections.last_mut() {
            sec.tokens.extend(trimmed.split_whitespace().map(|t| (line_no, t.to_string())));
        }
    }
    sections
}

fn int_token(line: usize, tok: &str) -> Result<i32> {
    match tok {
        "INF" => Ok(INF),
        "DEF" => Ok(DEF),
        _ => tok
            .parse::<i32>()
            .map_err(|_| Error::ParseError { line, reason: format!("expected integer, found `{tok}`") }),
    }
}

fn ints(sec: &Section, expected: usize) -> Result<Vec<i32>> {
    if sec.tokens.len() != expected {
        return Err(Error::ParseError {
            line: sec.line,
            reason: format!("section `{}` expects {expected} values, found {}", sec.name, sec.tokens.len()),
        });
    }
    sec.tokens.iter().map(|(l, t)| int_token(*l, t)).collect()
}

fn at_least(sec: &Section, expected: usize) -> Result<()> {
    if sec.tokens.len() < expected {
        return Err(Error::ParseError {
            line: sec.line,
            reason: format!("section `{}` expects at least {expected} values, found {}", sec.name, sec.tokens.len()),
        });
    }
    Ok(())
}

fn loop_table(sec: &Section) -> Result<HashMap<String, i32>> {
    let mut out = HashMap::new();
    let mut by_line: Vec<(usize, Vec<&str>)> = Vec::new();
    for (l, t) in &sec.tokens {
        match by_line.last_mut() {
            Some((ln, v)) if ln == l => v.push(t),
            _ => by_line.push((*l, vec![t])),
        }
    }
    for (line, toks) in by_line {
        let key = toks[0].to_ascii_uppercase();
        if !key.chars().all(|c| "ACGU".contains(c)) {
            return Err(Error::ParseError { line, reason: format!("bad loop sequence `{key}`") });
        }
        let e = toks.get(1).ok_or(Error::ParseError { line, reason: "missing loop energy".into() })?;
        out.insert(key, int_token(line, e)?);
    }
    Ok(out)
}

fn canonical_name(name: &str) -> String {
    name.replace("internal", "interior")
}

/// Parses a parameter file. `stack`, `hairpin`, `bulge`, `interior`, `ML_params` and
/// `Misc` are required; other tables default to zero and the 1x1/2x1/2x2 interior
/// tables to absent (the generic interior formula is used instead).
pub fn load_parameters(source: &[u8]) -> Result<ParameterSet> {
    let text = std::str::from_utf8(source).map_err(|e| Error::ParseError { line: 0, reason: e.to_string() })?;
    let digest: String = Sha256::digest(source).iter().map(|b| format!("{b:02x}")).collect();
    let sections = split_sections(text);
    let mut by_name: HashMap<String, &Section> = HashMap::new();
    for s in &sections {
        by_name.insert(canonical_name(&s.name), s);
    }
    let required = |name: &str| by_name.get(name).copied().ok_or_else(|| Error::MissingSection(name.to_string()));
    let optional = |name: &str| by_name.get(name).copied();

    let mut stack = Table::filled(&[NP, NP], INF);
    stack.fill(&[1..NP, 1..NP], &ints(required("stack")?, 49)?);

    let mismatch = |name: &str| -> Result<Table> {
        let mut t = Table::zeros(&[NP, 5, 5]);
        if let Some(sec) = optional(name) {
            t.fill(&[1..NP, 0..5, 0..5], &ints(sec, 7 * 25)?);
        }
        Ok(t)
    };
    let dangle = |name: &str| -> Result<Table> {
        let mut t = Table::zeros(&[NP, 5]);
        if let Some(sec) = optional(name) {
            t.fill(&[1..NP, 0..5], &ints(sec, 7 * 5)?);
        }
        Ok(t)
    };

    let int11 = match optional("int11") {
        Some(sec) => {
            let mut t = Table::filled(&[NP, NP, 5, 5], INF);
            t.fill(&[1..NP, 1..NP, 0..5, 0..5], &ints(sec, 49 * 25)?);
            Some(t)
        }
        None => None,
    };
    let int21 = match optional("int21") {
        Some(sec) => {
            let mut t = Table::filled(&[NP, NP, 5, 5, 5], INF);
            t.fill(&[1..NP, 1..NP, 0..5, 0..5, 0..5], &ints(sec, 49 * 125)?);
            Some(t)
        }
        None => None,
    };
    let int22 = match optional("int22") {
        Some(sec) => {
            let mut t = Table::filled(&[NP, NP, 5, 5, 5, 5], INF);
            t.fill(&[1..7, 1..7, 1..5, 1..5, 1..5, 1..5], &ints(sec, 36 * 256)?);
            Some(t)
        }
        None => None,
    };

    let sizes = |name: &str| -> Result<[i32; MAXLOOP + 1]> {
        let v = ints(required(name)?, MAXLOOP + 1)?;
        let mut out = [0; MAXLOOP + 1];
        out.copy_from_slice(&v);
        Ok(out)
    };

    let ml_sec = required("ML_params")?;
    at_least(ml_sec, 6)?;
    let ml = ml_sec.tokens.iter().take(6).map(|(l, t)| int_token(*l, t)).collect::<Result<Vec<_>>>()?;

    let (ninio, max_ninio) = match optional("NINIO") {
        Some(sec) => {
            at_least(sec, 3)?;
            (int_token(sec.tokens[0].0, &sec.tokens[0].1)?, int_token(sec.tokens[2].0, &sec.tokens[2].1)?)
        }
        None => (0, 0),
    };

    let misc = required("Misc")?;
    at_least(misc, 5)?;
    let terminal_au = int_token(misc.tokens[2].0, &misc.tokens[2].1)?;
    let (lxc_line, lxc_tok) = &misc.tokens[4];
    let lxc: f64 = lxc_tok
        .parse()
        .map_err(|_| Error::ParseError { line: *lxc_line, reason: format!("expected number, found `{lxc_tok}`") })?;

    let specials =
        |name: &str| -> Result<HashMap<String, i32>> { optional(name).map_or(Ok(HashMap::new()), loop_table) };

    Ok(ParameterSet {
        stack,
        mismatch_hairpin: mismatch("mismatch_hairpin")?,
        mismatch_interior: mismatch("mismatch_interior")?,
        mismatch_interior_1n: mismatch("mismatch_interior_1n")?,
        mismatch_interior_23: mismatch("mismatch_interior_23")?,
        mismatch_multi: mismatch("mismatch_multi")?,
        mismatch_exterior: mismatch("mismatch_exterior")?,
        dangle5: dangle("dangle5")?,
        dangle3: dangle("dangle3")?,
        int11,
        int21,
        int22,
        hairpin: sizes("hairpin")?,
        bulge: sizes("bulge")?,
        interior: sizes("interior")?,
        ml_base: ml[0],
        ml_closing: ml[2],
        ml_intern: ml[4],
        ninio,
        max_ninio,
        terminal_au,
        lxc,
        triloops: specials("Triloops")?,
        tetraloops: specials("Tetraloops")?,
        hexaloops: specials("Hexaloops")?,
        digest,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn minimal(stack_first_row: &str) -> String {
        let mut s = String::from("# stack\n");
        s.push_str(stack_first_row);
        s.push('\n');
        for _ in 0..6 {
            s.push_str("0 0 0 0 0 0 0\n");
        }
        for name in ["hairpin", "bulge", "interior"] {
            s.push_str(&format!("# {name}\n"));
            s.push_str(&"INF ".repeat(3));
            s.push_str(&"100 ".repeat(28));
            s.push('\n');
        }
        s.push_str("# ML_params\n0 0 340 0 40 0\n# Misc\n0 0 50 0 107.856 0\n# END\n");
        s
    }

    #[test]
    fn stack_entry_reads_back() {
        let p = load_parameters(minimal("/* CG row */ -240 -330 -210 -140 -210 -210 -140").as_bytes()).unwrap();
        assert_eq!(p.stack.get(&[1, 2]), -330);
        assert_eq!(p.hairpin[0], INF);
        assert_eq!(p.hairpin[3], 100);
        assert_eq!(p.ml_closing, 340);
        assert!(p.int11.is_none());
        assert_eq!(p.mismatch_hairpin.get(&[1, 2, 3]), 0);
    }

    #[test]
    fn truncated_file_is_missing_a_section() {
        let full = minimal("1 2 3 4 5 6 7");
        let cut = &full[..full.find("# ML_params").unwrap()];
        assert_eq!(load_parameters(cut.as_bytes()).unwrap_err(), Error::MissingSection("ML_params".into()));
    }

    #[test]
    fn bad_token_reports_line() {
        let text = minimal("1 2 x 4 5 6 7");
        assert!(matches!(load_parameters(text.as_bytes()), Err(Error::ParseError { line: 2, .. })));
    }

    #[test]
    fn bundled_file_loads() {
        let p = ParameterSet::turner2004();
        assert_eq!(p.stack.get(&[1, 2]), -330);
        assert_eq!(p.ml_closing, 930);
        assert_eq!(p.ml_intern, -90);
        assert_eq!(p.terminal_au, 50);
        assert_eq!(p.ninio, 60);
        assert_eq!(p.max_ninio, 300);
        assert!((p.lxc - 107.856).abs() < 1e-9);
        assert_eq!(p.tetraloops.get("CAACGG"), Some(&550));
        assert_eq!(p.triloops.get("CAACG"), Some(&680));
        assert_eq!(p.hexaloops.len(), 4);
        assert!(p.int22.is_some());
        assert_eq!(p.digest.len(), 64);
    }

    #[test]
    fn multiline_comments_are_skipped() {
        let mut in_c = false;
        assert_eq!(strip_comments("1 /* a", &mut in_c).trim(), "1");
        assert!(in_c);
        assert_eq!(strip_comments("b */ 2", &mut in_c).trim(), "2");
    }
}
