//! Fixed-format MPS writer and reader.
//!
//! Name fields are eight characters wide. Longer names are shortened to a
//! prefix plus a `~<base36>` suffix; the mapping is written as `* NAMEMAP`
//! comment lines so the reader restores the original names. Numbers carry
//! twelve significant digits.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::milp::{Metadata, MilpProblem, Sense, VarType};
use crate::scalar::LpFloat;

const NAME_WIDTH: usize = 8;
const OBJ_ROW: &str = "OBJ";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NameSpace {
    Row,
    Column,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rename {
    pub space: NameSpace,
    pub original: String,
    pub short: String,
}

#[derive(Debug, Clone)]
pub struct MpsExport {
    pub text: String,
    /// Names that did not fit the field width.
    pub renamed: Vec<Rename>,
}

/// `%.12g`-style formatting.
pub fn format_number(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    let sci = format!("{v:.11e}");
    let (mant, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if (-5..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        trim_zeros(format!("{v:.decimals$}"))
    } else {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", trim_zeros(mant.to_string()), exp.abs())
    }
}

fn trim_zeros(s: String) -> String {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.').to_string()
    } else {
        s
    }
}

fn base36(mut n: usize) -> String {
    const DIGITS: &[u8] = b"0123456789ABCDEFGHIJKLMNOPQRSTUVWXYZ";
    let mut out = Vec::new();
    loop {
        out.push(DIGITS[n % 36]);
        n /= 36;
        if n == 0 {
            break;
        }
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

fn shorten<'a>(names: impl Iterator<Item = &'a str> + Clone, space: NameSpace, renamed: &mut Vec<Rename>) -> Vec<String> {
    let mut used: HashSet<String> = names
        .clone()
        .filter(|n| n.len() <= NAME_WIDTH)
        .map(str::to_string)
        .collect();
    if space == NameSpace::Row {
        used.insert(OBJ_ROW.to_string());
    }
    let mut counter = 0usize;
    names
        .map(|n| {
            if n.len() <= NAME_WIDTH && !(space == NameSpace::Row && n == OBJ_ROW) {
                return n.to_string();
            }
            loop {
                let suffix = format!("~{}", base36(counter));
                counter += 1;
                let keep = NAME_WIDTH.saturating_sub(suffix.len());
                let prefix: String = n.chars().take(keep).collect();
                let short = format!("{prefix}{suffix}");
                if used.insert(short.clone()) {
                    renamed.push(Rename {
                        space,
                        original: n.to_string(),
                        short: short.clone(),
                    });
                    return short;
                }
            }
        })
        .collect()
}

fn line(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str) {
    let s = format!(" {f1:<2} {f2:<8}  {f3:<8}  {f4}");
    out.push_str(s.trim_end());
    out.push('\n');
}

fn check_name(name: &str, what: &str) -> Result<()> {
    if name.is_empty() || name.chars().any(char::is_whitespace) || name.starts_with('*') {
        return Err(Error::Mps {
            line: 0,
            msg: format!("{what} name {name:?} cannot be written"),
        });
    }
    Ok(())
}

pub fn export_mps<F: LpFloat>(problem: &MilpProblem<F>) -> Result<MpsExport> {
    problem
        .check_invariants()
        .map_err(|msg| Error::Mps { line: 0, msg })?;
    for v in &problem.vars {
        check_name(&v.name, "column")?;
    }
    for r in &problem.rows {
        check_name(&r.name, "row")?;
    }
    let mut renamed = Vec::new();
    let rows = shorten(problem.rows.iter().map(|r| r.name.as_str()), NameSpace::Row, &mut renamed);
    let cols = shorten(problem.vars.iter().map(|v| v.name.as_str()), NameSpace::Column, &mut renamed);
    let num = |v: F| format_number(v.to_f64().unwrap());

    let mut out = String::new();
    if problem.name.is_empty() {
        out.push_str("NAME\n");
    } else {
        let _ = writeln!(out, "NAME          {}", problem.name);
    }
    if let Some(id) = &problem.metadata.instance_id {
        let _ = writeln!(out, "* INSTANCE {id}");
    }
    if let Some(mode) = &problem.metadata.mode {
        let _ = writeln!(out, "* MODE {mode}");
    }
    for r in &renamed {
        let tag = if r.space == NameSpace::Row { 'R' } else { 'C' };
        let _ = writeln!(out, "* NAMEMAP {tag} {} {}", r.short, r.original);
    }

    out.push_str("ROWS\n");
    line(&mut out, "N", OBJ_ROW, "", "");
    for (r, name) in problem.rows.iter().zip(&rows) {
        let s = match r.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        line(&mut out, s, name, "", "");
    }

    let mut by_col: Vec<Vec<(usize, F)>> = vec![Vec::new(); problem.vars.len()];
    for (i, r) in problem.rows.iter().enumerate() {
        for &(j, c) in &r.coeffs {
            by_col[j].push((i, c));
        }
    }
    let mut obj = vec![F::zero(); problem.vars.len()];
    for &(j, c) in &problem.objective {
        obj[j] = obj[j] + c;
    }

    out.push_str("COLUMNS\n");
    let mut in_int = false;
    for (j, v) in problem.vars.iter().enumerate() {
        let int = v.kind.is_integral();
        if int != in_int {
            let marker = if int { "'INTORG'" } else { "'INTEND'" };
            let _ = writeln!(out, "    MARKER                 'MARKER'                 {marker}");
            in_int = int;
        }
        let mut any = false;
        if obj[j] != F::zero() {
            line(&mut out, "", &cols[j], OBJ_ROW, &num(obj[j]));
            any = true;
        }
        for &(i, c) in &by_col[j] {
            line(&mut out, "", &cols[j], &rows[i], &num(c));
            any = true;
        }
        if !any {
            line(&mut out, "", &cols[j], OBJ_ROW, "0");
        }
    }
    if in_int {
        let _ = writeln!(out, "    MARKER                 'MARKER'                 'INTEND'");
    }

    out.push_str("RHS\n");
    for (r, name) in problem.rows.iter().zip(&rows) {
        if r.rhs != F::zero() {
            line(&mut out, "", "RHS", name, &num(r.rhs));
        }
    }

    let mut bounds = String::new();
    for (v, name) in problem.vars.iter().zip(&cols) {
        let (lo, up) = (v.lower, v.upper);
        if v.kind == VarType::Binary {
            line(&mut bounds, "BV", "BND", name, "");
            continue;
        }
        if lo == up {
            line(&mut bounds, "FX", "BND", name, &num(lo));
            continue;
        }
        if lo == F::neg_infinity() && up == F::infinity() {
            line(&mut bounds, "FR", "BND", name, "");
            continue;
        }
        if lo == F::neg_infinity() {
            line(&mut bounds, "MI", "BND", name, "");
        } else if lo != F::zero() || (up.is_finite() && up < F::zero()) {
            line(&mut bounds, "LO", "BND", name, &num(lo));
        }
        if up.is_finite() {
            line(&mut bounds, "UP", "BND", name, &num(up));
        } else if v.kind == VarType::Integer {
            line(&mut bounds, "PL", "BND", name, "");
        }
    }
    if !bounds.is_empty() {
        out.push_str("BOUNDS\n");
        out.push_str(&bounds);
    }
    out.push_str("ENDATA\n");
    Ok(MpsExport { text: out, renamed })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Section {
    Start,
    Name,
    Rows,
    Columns,
    Rhs,
    Ranges,
    Bounds,
    End,
}

fn err(line: usize, msg: impl Into<String>) -> Error {
    Error::Mps { line, msg: msg.into() }
}

fn parse_num<F: LpFloat>(tok: &str, line: usize) -> Result<F> {
    let v: f64 = tok.parse().map_err(|_| err(line, format!("invalid number {tok:?}")))?;
    Ok(F::lit(v))
}

pub fn import_mps<F: LpFloat>(text: &str) -> Result<MilpProblem<F>> {
    let mut problem = MilpProblem::new("");
    let mut metadata = Metadata::default();
    let mut row_alias: HashMap<String, String> = HashMap::new();
    let mut col_alias: HashMap<String, String> = HashMap::new();
    let mut section = Section::Start;
    let mut rows: HashMap<String, usize> = HashMap::new();
    let mut obj_row: Option<String> = None;
    let mut cols: HashMap<String, usize> = HashMap::new();
    let mut in_int = false;
    let mut seen_entries: HashSet<(usize, Option<usize>)> = HashSet::new();
    let mut last_col: Option<usize> = None;

    for (idx, raw) in text.lines().enumerate() {
        let ln = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        if let Some(comment) = raw.strip_prefix('*') {
            let toks: Vec<&str> = comment.split_whitespace().collect();
            match toks.as_slice() {
                ["INSTANCE", id] => metadata.instance_id = Some(id.to_string()),
                ["MODE", m] => metadata.mode = Some(m.parse().map_err(|e: Error| err(ln, e.to_string()))?),
                ["NAMEMAP", "R", short, long] => {
                    row_alias.insert(short.to_string(), long.to_string());
                }
                ["NAMEMAP", "C", short, long] => {
                    col_alias.insert(short.to_string(), long.to_string());
                }
                _ => {}
            }
            continue;
        }
        let header = !raw.starts_with(' ') && !raw.starts_with('\t');
        if header {
            let mut it = raw.split_whitespace();
            let word = it.next().unwrap();
            let next = match word {
                "NAME" => Section::Name,
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "RANGES" => Section::Ranges,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => Section::End,
                other => return Err(err(ln, format!("unknown section {other:?}"))),
            };
            if next <= section || (section == Section::Start && next != Section::Name) {
                return Err(err(ln, format!("section {word} out of order")));
            }
            if next == Section::Ranges {
                return Err(err(ln, "RANGES section is not supported"));
            }
            if next > Section::Rows && section < Section::Rows {
                return Err(err(ln, format!("section {word} before ROWS")));
            }
            if next == Section::Name {
                problem.name = raw[4..].trim().to_string();
            }
            if section == Section::Columns && in_int {
                return Err(err(ln, "unterminated integer marker"));
            }
            section = next;
            continue;
        }
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match section {
            Section::Rows => {
                let [kind, name] = toks.as_slice() else {
                    return Err(err(ln, "expected row type and name"));
                };
                let name = row_alias.get(*name).cloned().unwrap_or_else(|| name.to_string());
                let sense = match *kind {
                    "N" => {
                        if obj_row.is_some() {
                            return Err(err(ln, "more than one objective row"));
                        }
                        obj_row = Some(name);
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    other => return Err(err(ln, format!("unknown row type {other:?}"))),
                };
                if rows.contains_key(&name) || obj_row.as_deref() == Some(name.as_str()) {
                    return Err(err(ln, format!("duplicate row {name}")));
                }
                rows.insert(name.clone(), problem.rows.len());
                problem.add_row(name, sense, Vec::new(), F::zero());
            }
            Section::Columns => {
                if toks.len() == 3 && toks[1] == "'MARKER'" {
                    match toks[2] {
                        "'INTORG'" if !in_int => in_int = true,
                        "'INTEND'" if in_int => in_int = false,
                        m => return Err(err(ln, format!("unexpected marker {m}"))),
                    }
                    continue;
                }
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(err(ln, "expected column, row, value [, row, value]"));
                }
                let name = col_alias.get(toks[0]).cloned().unwrap_or_else(|| toks[0].to_string());
                let j = match cols.get(&name) {
                    Some(&j) => {
                        if last_col != Some(j) {
                            return Err(err(ln, format!("duplicate column entries for {name}")));
                        }
                        j
                    }
                    None => {
                        let kind = if in_int { VarType::Integer } else { VarType::Continuous };
                        let j = problem.add_var(name.clone(), F::zero(), F::infinity(), kind);
                        cols.insert(name, j);
                        j
                    }
                };
                last_col = Some(j);
                for pair in toks[1..].chunks(2) {
                    let rname = row_alias.get(pair[0]).map(String::as_str).unwrap_or(pair[0]);
                    let value: F = parse_num(pair[1], ln)?;
                    let target = if obj_row.as_deref() == Some(rname) {
                        None
                    } else {
                        Some(*rows.get(rname).ok_or_else(|| err(ln, format!("unknown row {rname}")))?)
                    };
                    if !seen_entries.insert((j, target)) {
                        return Err(err(ln, format!("duplicate entry for column {} in row {rname}", problem.vars[j].name)));
                    }
                    match target {
                        None if value != F::zero() => problem.objective.push((j, value)),
                        None => {}
                        Some(i) => problem.rows[i].coeffs.push((j, value)),
                    }
                }
            }
            Section::Rhs => {
                if toks.len() != 3 && toks.len() != 5 {
                    return Err(err(ln, "expected set name, row, value [, row, value]"));
                }
                for pair in toks[1..].chunks(2) {
                    let rname = row_alias.get(pair[0]).map(String::as_str).unwrap_or(pair[0]);
                    let value: F = parse_num(pair[1], ln)?;
                    if obj_row.as_deref() == Some(rname) {
                        continue;
                    }
                    let i = *rows.get(rname).ok_or_else(|| err(ln, format!("unknown row {rname}")))?;
                    problem.rows[i].rhs = value;
                }
            }
            Section::Bounds => {
                if toks.len() < 3 {
                    return Err(err(ln, "expected bound type, set name, column"));
                }
                let name = col_alias.get(toks[2]).map(String::as_str).unwrap_or(toks[2]);
                let j = *cols.get(name).ok_or_else(|| err(ln, format!("unknown column {name}")))?;
                let value = || -> Result<F> {
                    let tok = toks.get(3).ok_or_else(|| err(ln, "missing bound value"))?;
                    parse_num(tok, ln)
                };
                let v = &mut problem.vars[j];
                match toks[0] {
                    "UP" => v.upper = value()?,
                    "LO" => v.lower = value()?,
                    "FX" => {
                        let x = value()?;
                        v.lower = x;
                        v.upper = x;
                    }
                    "FR" => {
                        v.lower = F::neg_infinity();
                        v.upper = F::infinity();
                    }
                    "MI" => v.lower = F::neg_infinity(),
                    "PL" => v.upper = F::infinity(),
                    "BV" => {
                        v.kind = VarType::Binary;
                        v.lower = F::zero();
                        v.upper = F::one();
                    }
                    other => return Err(err(ln, format!("unknown bound type {other:?}"))),
                }
            }
            Section::Name => return Err(err(ln, "unexpected data before ROWS")),
            Section::Start => return Err(err(ln, "missing NAME section")),
            Section::Ranges | Section::End => return Err(err(ln, "unexpected data after ENDATA")),
        }
    }
    if section != Section::End {
        return Err(err(text.lines().count(), "missing ENDATA"));
    }
    if obj_row.is_none() && !problem.rows.is_empty() {
        return Err(err(0, "no objective row"));
    }
    problem.metadata = metadata;
    Ok(problem)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> MilpProblem<f64> {
        let mut p = MilpProblem::new("sample");
        let x = p.add_var("x", 0.0, 2.0, VarType::Continuous);
        let y = p.add_var("a_rather_long_name", 0.0, 1.0, VarType::Binary);
        let z = p.add_var("z", -1.5, f64::INFINITY, VarType::Integer);
        let w = p.add_var("w", f64::NEG_INFINITY, f64::INFINITY, VarType::Continuous);
        p.objective = vec![(x, -3.0), (y, 1.0 / 3.0)];
        p.add_row("cap", Sense::Le, vec![(x, 1.0), (y, 2.5)], 4.0);
        p.add_row("another_long_row", Sense::Ge, vec![(z, 1.0), (w, -1e-7)], -2.0);
        p.add_row("e", Sense::Eq, vec![(x, 1.0), (z, 1e20)], 0.0);
        p
    }

    #[test]
    fn numbers_use_twelve_significant_digits() {
        assert_eq!(format_number(1.0 / 3.0), "0.333333333333");
        assert_eq!(format_number(26.0), "26");
        assert_eq!(format_number(-1e-7), "-1e-07");
        assert_eq!(format_number(1e20), "1e+20");
        assert_eq!(format_number(123456789012345.0), "1.23456789012e+14");
        assert_eq!(format_number(0.5), "0.5");
    }

    #[test]
    fn empty_problem_has_minimal_sections() {
        let p = MilpProblem::<f64>::new("");
        let text = export_mps(&p).unwrap().text;
        assert_eq!(text, "NAME\nROWS\n N  OBJ\nCOLUMNS\nRHS\nENDATA\n");
        let back: MilpProblem<f64> = import_mps(&text).unwrap();
        assert!(back.vars.is_empty() && back.rows.is_empty());
    }

    #[test]
    fn roundtrip_is_a_fixpoint() {
        let first = export_mps(&sample()).unwrap();
        assert_eq!(first.renamed.len(), 2);
        let back: MilpProblem<f64> = import_mps(&first.text).unwrap();
        assert_eq!(back.vars.len(), 4);
        assert_eq!(back.vars[1].name, "a_rather_long_name");
        assert_eq!(back.vars[1].kind, VarType::Binary);
        assert_eq!(back.vars[2].lower, -1.5);
        assert_eq!(back.vars[2].upper, f64::INFINITY);
        assert_eq!(back.rows[1].name, "another_long_row");
        let second = export_mps(&back).unwrap();
        assert_eq!(first.text, second.text);
    }

    #[test]
    fn binaries_sit_between_markers() {
        let text = export_mps(&sample()).unwrap().text;
        let org = text.find("'INTORG'").unwrap();
        let end = text.find("'INTEND'").unwrap();
        let short = export_mps(&sample()).unwrap().renamed[1].short.clone();
        let pos = text.find(&format!("    {short}")).unwrap();
        assert!(org < pos && pos < end);
        assert!(text.contains(&format!(" BV BND       {short}")));
    }

    #[test]
    fn names_fit_the_field() {
        let ex = export_mps(&sample()).unwrap();
        for r in &ex.renamed {
            assert!(r.short.len() <= 8);
        }
        assert_ne!(ex.renamed[0].short, ex.renamed[1].short);
    }

    #[test]
    fn rhs_before_rows_is_rejected() {
        let text = "NAME x\nRHS\nROWS\n N OBJ\nENDATA\n";
        let e = import_mps::<f64>(text).unwrap_err();
        assert!(matches!(e, Error::Mps { line: 2, .. }), "{e}");
    }

    #[test]
    fn unknown_row_is_rejected() {
        let text = "NAME x\nROWS\n N OBJ\n L r\nCOLUMNS\n    x  q  1\nRHS\nENDATA\n";
        let e = import_mps::<f64>(text).unwrap_err();
        assert!(e.to_string().contains("line 6"), "{e}");
        assert!(e.to_string().contains("unknown row q"));
    }

    #[test]
    fn duplicate_column_entries_are_rejected() {
        let text = "NAME x\nROWS\n N OBJ\n L r\nCOLUMNS\n    x  r  1\n    x  r  2\nRHS\nENDATA\n";
        assert!(import_mps::<f64>(text).unwrap_err().to_string().contains("duplicate entry"));
        let text = "NAME x\nROWS\n N OBJ\n L r\nCOLUMNS\n    x  r  1\n    y  r  1\n    x  OBJ  2\nRHS\nENDATA\n";
        assert!(import_mps::<f64>(text).unwrap_err().to_string().contains("duplicate column"));
    }
}
