//! CPLEX-style LP text format.
//!
//! Writer layout: `Maximize|Minimize`, ` obj: <terms>`, `Subject To`, one
//! constraint per row (ranged rows as `name: lo <= expr <= hi`), `Bounds` with
//! one line per column in column order, optional `Binaries`, `End`. Every
//! coefficient is printed explicitly with a sign. Long expressions wrap onto
//! continuation lines indented by one space.

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{ExportError, ParseError};
use crate::model::{LinearProgram, MixedIntegerProgram, Sense};
use crate::numfmt::fmt_num;

const WRAP: usize = 78;

pub fn write_lp_text(mip: &MixedIntegerProgram) -> Result<String, ExportError> {
    let lp = &mip.lp;
    crate::check_names(lp)?;
    let names: Vec<&str> = lp.cols().iter().map(|c| c.name.as_str()).collect();
    let mut out = String::new();
    out.push_str(match lp.sense {
        Sense::Maximize => "Maximize\n",
        Sense::Minimize => "Minimize\n",
    });
    let mut obj: Vec<String> = lp
        .cols()
        .iter()
        .filter(|c| c.cost != 0.0)
        .map(|c| term(c.cost, &c.name))
        .collect();
    if lp.objective_offset != 0.0 {
        obj.push(signed(lp.objective_offset));
    }
    if obj.is_empty() {
        obj.push("0".into());
    }
    wrap_into(&mut out, " obj:", &obj, "");
    out.push_str("Subject To\n");
    for r in lp.rows() {
        let mut terms: Vec<String> = r.coeffs.iter().map(|&(j, a)| term(a, names[j])).collect();
        if terms.is_empty() {
            terms.push("0".into());
        }
        let head = format!(" {}:", r.name);
        let (lo, hi) = (r.lower, r.upper);
        if lo == hi {
            wrap_into(&mut out, &head, &terms, &format!(" = {}", fmt_num(hi)));
        } else if lo == f64::NEG_INFINITY {
            wrap_into(&mut out, &head, &terms, &format!(" <= {}", fmt_num(hi)));
        } else if hi == f64::INFINITY {
            wrap_into(&mut out, &head, &terms, &format!(" >= {}", fmt_num(lo)));
        } else {
            let head = format!("{head} {} <=", fmt_num(lo));
            wrap_into(&mut out, &head, &terms, &format!(" <= {}", fmt_num(hi)));
        }
    }
    out.push_str("Bounds\n");
    for c in lp.cols() {
        let (lo, hi) = (c.lower, c.upper);
        let line = if lo == hi {
            format!(" {} = {}", c.name, fmt_num(lo))
        } else if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            format!(" {} free", c.name)
        } else if hi == f64::INFINITY {
            format!(" {} >= {}", c.name, fmt_num(lo))
        } else {
            format!(" {} <= {} <= {}", fmt_num(lo), c.name, fmt_num(hi))
        };
        out.push_str(&line);
        out.push('\n');
    }
    if !mip.binaries().is_empty() {
        let mut bins = mip.binaries().to_vec();
        bins.sort_unstable();
        let words: Vec<String> = bins.iter().map(|&j| names[j].to_string()).collect();
        out.push_str("Binaries\n");
        wrap_into(&mut out, "", &words, "");
    }
    out.push_str("End\n");
    Ok(out)
}

fn signed(v: f64) -> String {
    let s = fmt_num(v);
    if s.starts_with('-') {
        s
    } else {
        format!("+{s}")
    }
}

fn term(a: f64, name: &str) -> String {
    format!("{} {}", signed(a), name)
}

fn wrap_into(out: &mut String, head: &str, words: &[String], tail: &str) {
    let mut line = head.to_string();
    for w in words {
        if line.len() + 1 + w.len() > WRAP && !line.trim().is_empty() && line.len() > head.len() {
            out.push_str(&line);
            out.push('\n');
            line.clear();
        }
        line.push(' ');
        line.push_str(w);
    }
    if line.len() + tail.len() > WRAP && line.len() > head.len() {
        out.push_str(&line);
        out.push('\n');
        line.clear();
        line.push(' ');
        line.push_str(tail.trim_start());
    } else {
        line.push_str(tail);
    }
    let _ = writeln!(out, "{line}");
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Name(String),
    Colon,
    Plus,
    Minus,
    Le,
    Ge,
    Eq,
}

fn lex(s: &str, line: usize) -> Result<Vec<Tok>, ParseError> {
    let b = s.as_bytes();
    let mut i = 0;
    let mut out = Vec::new();
    while i < b.len() {
        let c = b[i] as char;
        if c.is_whitespace() {
            i += 1;
        } else if c == ':' {
            out.push(Tok::Colon);
            i += 1;
        } else if c == '+' {
            out.push(Tok::Plus);
            i += 1;
        } else if c == '-' {
            out.push(Tok::Minus);
            i += 1;
        } else if c == '<' || c == '>' || c == '=' {
            let mut j = i + 1;
            while j < b.len() && matches!(b[j] as char, '<' | '>' | '=') {
                j += 1;
            }
            let op = &s[i..j];
            out.push(if op.contains('<') {
                Tok::Le
            } else if op.contains('>') {
                Tok::Ge
            } else {
                Tok::Eq
            });
            i = j;
        } else if c.is_ascii_digit() || c == '.' {
            let mut j = i;
            while j < b.len() && ((b[j] as char).is_ascii_digit() || b[j] == b'.') {
                j += 1;
            }
            if j < b.len() && (b[j] == b'e' || b[j] == b'E') {
                let mut k = j + 1;
                if k < b.len() && (b[k] == b'+' || b[k] == b'-') {
                    k += 1;
                }
                if k < b.len() && (b[k] as char).is_ascii_digit() {
                    while k < b.len() && (b[k] as char).is_ascii_digit() {
                        k += 1;
                    }
                    j = k;
                }
            }
            let v: f64 = s[i..j]
                .parse()
                .map_err(|_| ParseError::new(line, format!("bad number `{}`", &s[i..j])))?;
            out.push(Tok::Num(v));
            i = j;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let mut j = i;
            while j < b.len() {
                let d = b[j] as char;
                if d.is_ascii_alphanumeric() || matches!(d, '_' | '.' | '#' | '[' | ']') {
                    j += 1;
                } else {
                    break;
                }
            }
            let word = &s[i..j];
            let lower = word.to_ascii_lowercase();
            if lower == "inf" || lower == "infinity" {
                out.push(Tok::Num(f64::INFINITY));
            } else {
                out.push(Tok::Name(word.to_string()));
            }
            i = j;
        } else {
            return Err(ParseError::new(line, format!("unexpected character `{c}`")));
        }
    }
    Ok(out)
}

#[derive(Default)]
struct Builder {
    index: HashMap<String, usize>,
    names: Vec<String>,
}

impl Builder {
    fn col(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        self.names.push(name.to_string());
        self.index.insert(name.to_string(), self.names.len() - 1);
        self.names.len() - 1
    }
}

/// Linear expression: returns terms and constant, stopping at a relational
/// operator or a new label.
fn parse_expr(
    toks: &[Tok],
    pos: &mut usize,
    b: &mut Builder,
    line: usize,
) -> Result<(Vec<(usize, f64)>, f64), ParseError> {
    let mut terms = Vec::new();
    let mut constant = 0.0;
    loop {
        let start = *pos;
        let mut sign = 1.0;
        let mut saw_sign = false;
        while let Some(t) = toks.get(*pos) {
            match t {
                Tok::Plus => saw_sign = true,
                Tok::Minus => {
                    sign = -sign;
                    saw_sign = true
                }
                _ => break,
            }
            *pos += 1;
        }
        let coef = match toks.get(*pos) {
            Some(Tok::Num(v)) => {
                *pos += 1;
                Some(*v)
            }
            _ => None,
        };
        match toks.get(*pos) {
            Some(Tok::Name(n)) if !matches!(toks.get(*pos + 1), Some(Tok::Colon)) => {
                *pos += 1;
                let j = b.col(n);
                terms.push((j, sign * coef.unwrap_or(1.0)));
            }
            _ => match coef {
                Some(v) => {
                    // A bare number directly after a finished term without a sign
                    // starts the next clause (e.g. the bound of a ranged row).
                    if !saw_sign && !terms.is_empty() {
                        *pos = start;
                        break;
                    }
                    constant += sign * v
                }
                None => {
                    if saw_sign {
                        return Err(ParseError::new(line, "dangling sign"));
                    }
                    *pos = start;
                    break;
                }
            },
        }
    }
    Ok((terms, constant))
}

fn parse_rhs(toks: &[Tok], pos: &mut usize, line: usize) -> Result<f64, ParseError> {
    let mut sign = 1.0;
    while let Some(t) = toks.get(*pos) {
        match t {
            Tok::Plus => {}
            Tok::Minus => sign = -sign,
            _ => break,
        }
        *pos += 1;
    }
    match toks.get(*pos) {
        Some(Tok::Num(v)) => {
            *pos += 1;
            Ok(sign * v)
        }
        _ => Err(ParseError::new(line, "expected a number")),
    }
}

#[derive(PartialEq, Clone, Copy)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

pub fn parse_lp_text(text: &str) -> Result<MixedIntegerProgram, ParseError> {
    let mut sense = None;
    let mut section = Section::None;
    let mut obj_src = String::new();
    let mut con_src = String::new();
    let mut bound_lines: Vec<(usize, String)> = Vec::new();
    let mut bin_src = String::new();
    let mut obj_line = 0;
    let mut con_line = 0;
    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        let line = match raw.find('\\') {
            Some(k) => &raw[..k],
            None => raw,
        };
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let key = t.to_ascii_lowercase();
        let header = match key.as_str() {
            "maximize" | "maximum" | "max" => {
                sense = Some(Sense::Maximize);
                Some(Section::Objective)
            }
            "minimize" | "minimum" | "min" => {
                sense = Some(Sense::Minimize);
                Some(Section::Objective)
            }
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" | "bound" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "general" | "generals" | "gen" | "semi-continuous" | "sos" => {
                return Err(ParseError::new(ln, format!("unsupported section `{t}`")))
            }
            "end" => Some(Section::End),
            _ => None,
        };
        if let Some(h) = header {
            section = h;
            if h == Section::Objective {
                obj_line = ln;
            } else if h == Section::Constraints {
                con_line = ln;
            }
            continue;
        }
        match section {
            Section::None => return Err(ParseError::new(ln, "content before objective sense")),
            Section::Objective => {
                obj_src.push(' ');
                obj_src.push_str(t);
            }
            Section::Constraints => {
                con_src.push(' ');
                con_src.push_str(t);
            }
            Section::Bounds => bound_lines.push((ln, t.to_string())),
            Section::Binaries => {
                bin_src.push(' ');
                bin_src.push_str(t);
            }
            Section::End => return Err(ParseError::new(ln, "content after End")),
        }
    }
    if section != Section::End {
        return Err(ParseError::new(text.lines().count(), "missing End"));
    }
    let sense = sense.ok_or_else(|| ParseError::new(1, "missing objective sense"))?;
    let mut b = Builder::default();

    let toks = lex(&obj_src, obj_line)?;
    let mut pos = 0;
    if let (Some(Tok::Name(_)), Some(Tok::Colon)) = (toks.first(), toks.get(1)) {
        pos = 2;
    }
    let (obj_terms, offset) = parse_expr(&toks, &mut pos, &mut b, obj_line)?;
    if pos != toks.len() {
        return Err(ParseError::new(obj_line, "trailing tokens in objective"));
    }

    struct RowSrc {
        name: String,
        lo: f64,
        hi: f64,
        terms: Vec<(usize, f64)>,
    }
    let toks = lex(&con_src, con_line)?;
    let mut pos = 0;
    let mut rows: Vec<RowSrc> = Vec::new();
    while pos < toks.len() {
        let name = match (toks.get(pos), toks.get(pos + 1)) {
            (Some(Tok::Name(n)), Some(Tok::Colon)) => {
                pos += 2;
                n.clone()
            }
            _ => format!("R{}", rows.len() + 1),
        };
        // Ranged form: number op expr op number; otherwise expr op number.
        let save = pos;
        let mut parsed = None;
        if let Ok(v) = parse_rhs(&toks, &mut pos, con_line) {
            if let Some(lead_op @ (Tok::Le | Tok::Ge)) = toks.get(pos).cloned() {
                pos += 1;
                let mut trial = Builder {
                    index: b.index.clone(),
                    names: b.names.clone(),
                };
                if let Ok((terms, constant)) = parse_expr(&toks, &mut pos, &mut trial, con_line) {
                    if matches!(toks.get(pos), Some(Tok::Le | Tok::Ge | Tok::Eq)) {
                        b = trial;
                        parsed = Some((Some((v, lead_op)), terms, constant));
                    }
                }
            }
        }
        let (lead, terms, constant) = match parsed {
            Some(p) => p,
            None => {
                pos = save;
                let (terms, constant) = parse_expr(&toks, &mut pos, &mut b, con_line)?;
                (None, terms, constant)
            }
        };
        let op = toks
            .get(pos)
            .cloned()
            .ok_or_else(|| ParseError::new(con_line, format!("row `{name}` lacks an operator")))?;
        pos += 1;
        let rhs = parse_rhs(&toks, &mut pos, con_line)? - constant;
        let (lo, hi) = match (lead, op) {
            (None, Tok::Le) => (f64::NEG_INFINITY, rhs),
            (None, Tok::Ge) => (rhs, f64::INFINITY),
            (None, Tok::Eq) => (rhs, rhs),
            (Some((v, Tok::Le)), Tok::Le) => (v - constant, rhs),
            (Some((v, Tok::Ge)), Tok::Ge) => (rhs, v - constant),
            _ => return Err(ParseError::new(con_line, format!("row `{name}` has a malformed range"))),
        };
        rows.push(RowSrc { name, lo, hi, terms });
    }

    let mut bounds: Vec<(usize, Option<f64>, Option<f64>)> = Vec::new();
    for (ln, line) in &bound_lines {
        let toks = lex(line, *ln)?;
        let mut pos = 0;
        let err = || ParseError::new(*ln, format!("unrecognized bound `{line}`"));
        if let [Tok::Name(n), Tok::Name(f)] = toks.as_slice() {
            if f.eq_ignore_ascii_case("free") {
                bounds.push((b.col(n), Some(f64::NEG_INFINITY), Some(f64::INFINITY)));
                continue;
            }
            return Err(err());
        }
        if let Some(Tok::Name(n)) = toks.first() {
            pos += 1;
            let op = toks.get(pos).cloned().ok_or_else(err)?;
            pos += 1;
            let v = parse_rhs(&toks, &mut pos, *ln)?;
            if pos != toks.len() {
                return Err(err());
            }
            let j = b.col(n);
            bounds.push(match op {
                Tok::Le => (j, None, Some(v)),
                Tok::Ge => (j, Some(v), None),
                Tok::Eq => (j, Some(v), Some(v)),
                _ => return Err(err()),
            });
            continue;
        }
        let lo = parse_rhs(&toks, &mut pos, *ln)?;
        if toks.get(pos) != Some(&Tok::Le) {
            return Err(err());
        }
        pos += 1;
        let n = match toks.get(pos) {
            Some(Tok::Name(n)) => n.clone(),
            _ => return Err(err()),
        };
        pos += 1;
        if toks.get(pos) != Some(&Tok::Le) {
            return Err(err());
        }
        pos += 1;
        let hi = parse_rhs(&toks, &mut pos, *ln)?;
        if pos != toks.len() {
            return Err(err());
        }
        bounds.push((b.col(&n), Some(lo), Some(hi)));
    }

    let bin_toks = lex(&bin_src, 0)?;
    let mut binaries = Vec::new();
    for t in bin_toks {
        match t {
            Tok::Name(n) => binaries.push(b.col(&n)),
            _ => return Err(ParseError::new(0, "Binaries section holds a non-name")),
        }
    }

    // Column order follows the Bounds section, then first appearance.
    let mut order: Vec<usize> = Vec::new();
    let mut placed = vec![false; b.names.len()];
    for &(j, _, _) in &bounds {
        if !placed[j] {
            placed[j] = true;
            order.push(j);
        }
    }
    for (j, p) in placed.iter().enumerate() {
        if !p {
            order.push(j);
        }
    }
    let mut new_index = vec![0; b.names.len()];
    for (k, &j) in order.iter().enumerate() {
        new_index[j] = k;
    }

    let mut lp = LinearProgram::new("", sense);
    lp.objective_offset = offset;
    for &j in &order {
        lp.add_col(b.names[j].clone(), 0.0, f64::INFINITY, 0.0);
    }
    for (j, c) in obj_terms {
        let k = new_index[j];
        let cost = lp.cols()[k].cost + c;
        lp.set_cost(k, cost);
    }
    for r in rows {
        lp.add_row(r.name, r.lo, r.hi, r.terms.into_iter().map(|(j, a)| (new_index[j], a)));
    }
    for (j, lo, hi) in bounds {
        let c = lp.col_mut(new_index[j]);
        if let Some(lo) = lo {
            c.lower = lo;
        }
        if let Some(hi) = hi {
            c.upper = hi;
        }
    }
    let mut mip = MixedIntegerProgram::new(lp);
    for j in binaries {
        mip.mark_binary(new_index[j]);
    }
    Ok(mip)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn one_variable_file_is_six_lines() {
        let mut lp = LinearProgram::new("one", Sense::Maximize);
        lp.add_col("x", 0.0, 1.0, 1.0);
        let text = write_lp_text(&MixedIntegerProgram::new(lp)).unwrap();
        assert_eq!(text, "Maximize\n obj: +1 x\nSubject To\nBounds\n 0 <= x <= 1\nEnd\n");
        assert_eq!(text.lines().count(), 6);
    }

    #[test]
    fn parses_hand_written_file() {
        let src = "\\ comment\nMinimize\n obj: 2 x + 3 y - 1\nSubject To\n c1: x + y >= 2\n c2: -3 <= x - y <= 4\n c3: 2 x = 1\nBounds\n x <= 5\n y free\nBinaries\n z\nEnd\n";
        let mip = parse_lp_text(src).unwrap();
        let lp = &mip.lp;
        assert_eq!(lp.num_cols(), 3);
        assert_eq!(lp.objective_offset, -1.0);
        assert_eq!(lp.rows()[1].lower, -3.0);
        assert_eq!(lp.rows()[1].upper, 4.0);
        assert_eq!(lp.rows()[2].lower, 1.0);
        let y = lp.cols().iter().position(|c| c.name == "y").unwrap();
        assert_eq!(lp.cols()[y].lower, f64::NEG_INFINITY);
        assert_eq!(mip.binaries().len(), 1);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_lp_text("Minimize\n obj: x\nSubject To\n c: x ?? 3\nEnd\n").is_err());
        assert!(parse_lp_text("Minimize\n obj: x\n").is_err());
    }
}
