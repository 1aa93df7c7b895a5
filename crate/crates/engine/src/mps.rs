//! MPS writer and reader.
//!
//! The writer uses fixed starting columns: field 1 at column 2, field 2 at
//! column 5, and the following name and number fields each separated by two
//! spaces. Name fields are `max(8, longest name)` wide and numeric fields 20
//! characters, right aligned. Lines never carry trailing blanks, so the
//! output is also valid free-format MPS, which is what the reader accepts.
//! One coefficient per line; binaries are wrapped in `MARKER` lines and get
//! an explicit `UP 1` bound. The objective constant is stored as the negated
//! RHS entry of the objective row.

use std::collections::HashMap;

use crate::error::{ExportError, ParseError};
use crate::model::{LinearProgram, MixedIntegerProgram, Sense};
use crate::numfmt::fmt_num;

const OBJ: &str = "obj";

struct Layout {
    w: usize,
}

impl Layout {
    fn line(&self, f1: &str, f2: &str, f3: &str, num: Option<f64>) -> String {
        let mut s = format!(" {:<2} {:<w$}", f1, f2, w = self.w);
        if !f3.is_empty() || num.is_some() {
            s.push_str(&format!("  {:<w$}", f3, w = self.w));
        }
        if let Some(v) = num {
            s.push_str(&format!("  {:>20}", fmt_num(v)));
        }
        s.trim_end().to_string()
    }
}

pub fn write_mps(mip: &MixedIntegerProgram) -> Result<String, ExportError> {
    let lp = &mip.lp;
    crate::check_names(lp)?;
    if lp.rows().iter().any(|r| r.name == OBJ) {
        return Err(ExportError::NameCollision(OBJ.into()));
    }
    let w = lp
        .cols()
        .iter()
        .map(|c| c.name.len())
        .chain(lp.rows().iter().map(|r| r.name.len()))
        .chain(["MARKER".len(), "'MARKER'".len(), "'INTORG'".len()])
        .max()
        .unwrap_or(8)
        .max(8);
    let l = Layout { w };
    let mut out = Vec::new();
    if lp.name.is_empty() {
        out.push("NAME".to_string());
    } else {
        out.push(format!("NAME          {}", lp.name));
    }
    out.push("OBJSENSE".into());
    out.push(match lp.sense {
        Sense::Maximize => "    MAX".into(),
        Sense::Minimize => "    MIN".into(),
    });
    out.push("ROWS".into());
    out.push(l.line("N", OBJ, "", None));
    for r in lp.rows() {
        let t = row_type(r.lower, r.upper);
        out.push(l.line(t, &r.name, "", None));
    }

    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); lp.num_cols()];
    for (i, r) in lp.rows().iter().enumerate() {
        for &(j, a) in &r.coeffs {
            by_col[j].push((i, a));
        }
    }
    let mut is_bin = vec![false; lp.num_cols()];
    for &j in mip.binaries() {
        is_bin[j] = true;
    }
    out.push("COLUMNS".into());
    let mut in_marker = false;
    for (j, c) in lp.cols().iter().enumerate() {
        if is_bin[j] != in_marker {
            let tag = if is_bin[j] { "'INTORG'" } else { "'INTEND'" };
            out.push(l.line("", "MARKER", "'MARKER'", None) + &format!("  {:>20}", tag));
            in_marker = is_bin[j];
        }
        if c.cost != 0.0 || by_col[j].is_empty() {
            out.push(l.line("", &c.name, OBJ, Some(c.cost)));
        }
        for &(i, a) in &by_col[j] {
            out.push(l.line("", &c.name, &lp.rows()[i].name, Some(a)));
        }
    }
    if in_marker {
        out.push(l.line("", "MARKER", "'MARKER'", None) + &format!("  {:>20}", "'INTEND'"));
    }

    out.push("RHS".into());
    if lp.objective_offset != 0.0 {
        out.push(l.line("", "RHS", OBJ, Some(-lp.objective_offset)));
    }
    let mut ranges = Vec::new();
    for r in lp.rows() {
        let rhs = match row_type(r.lower, r.upper) {
            "E" | "G" => r.lower,
            "L" => r.upper,
            _ => 0.0,
        };
        if rhs != 0.0 {
            out.push(l.line("", "RHS", &r.name, Some(rhs)));
        }
        if r.lower.is_finite() && r.upper.is_finite() && r.lower != r.upper {
            ranges.push(l.line("", "RNG", &r.name, Some(r.upper - r.lower)));
        }
    }
    if !ranges.is_empty() {
        out.push("RANGES".into());
        out.extend(ranges);
    }
    let mut bounds = Vec::new();
    for (j, c) in lp.cols().iter().enumerate() {
        let (lo, hi) = (c.lower, c.upper);
        if lo == hi {
            bounds.push(l.line("FX", "BND", &c.name, Some(lo)));
            continue;
        }
        if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            bounds.push(l.line("FR", "BND", &c.name, None));
            continue;
        }
        if lo == f64::NEG_INFINITY {
            bounds.push(l.line("MI", "BND", &c.name, None));
        } else if lo != 0.0 {
            bounds.push(l.line("LO", "BND", &c.name, Some(lo)));
        }
        if hi.is_finite() {
            bounds.push(l.line("UP", "BND", &c.name, Some(hi)));
        } else if is_bin[j] {
            bounds.push(l.line("PL", "BND", &c.name, None));
        }
    }
    if !bounds.is_empty() {
        out.push("BOUNDS".into());
        out.extend(bounds);
    }
    out.push("ENDATA".into());
    let mut s = out.join("\n");
    s.push('\n');
    Ok(s)
}

fn row_type(lo: f64, hi: f64) -> &'static str {
    if lo == hi {
        "E"
    } else if lo.is_finite() {
        "G"
    } else if hi.is_finite() {
        "L"
    } else {
        "N"
    }
}

fn num(tok: &str, line: usize) -> Result<f64, ParseError> {
    tok.parse::<f64>()
        .map_err(|_| ParseError::new(line, format!("bad number `{tok}`")))
}

pub fn parse_mps(text: &str) -> Result<MixedIntegerProgram, ParseError> {
    #[derive(PartialEq, Clone, Copy)]
    enum Sec {
        Start,
        ObjSense,
        Rows,
        Columns,
        Rhs,
        Ranges,
        Bounds,
        End,
    }
    let mut sec = Sec::Start;
    let mut name = String::new();
    let mut sense = Sense::Minimize;
    let mut obj_row: Option<String> = None;
    // (name, type) of constraint rows; free rows keep type N.
    let mut rows: Vec<(String, char)> = Vec::new();
    let mut row_index: HashMap<String, usize> = HashMap::new();
    let mut cols: Vec<String> = Vec::new();
    let mut col_index: HashMap<String, usize> = HashMap::new();
    let mut costs: Vec<f64> = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut integer = Vec::new();
    let mut in_int = false;
    let mut rhs: Vec<f64> = Vec::new();
    let mut range: Vec<Option<f64>> = Vec::new();
    let mut offset = 0.0;
    let mut lower: Vec<f64> = Vec::new();
    let mut upper: Vec<f64> = Vec::new();
    let mut bin_bound: Vec<bool> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let ln = ln + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            let head = f[0].to_ascii_uppercase();
            sec = match head.as_str() {
                "NAME" => {
                    name = f[1..].join(" ");
                    Sec::Start
                }
                "OBJSENSE" => {
                    if let Some(v) = f.get(1) {
                        sense = parse_sense(v, ln)?;
                        Sec::Start
                    } else {
                        Sec::ObjSense
                    }
                }
                "ROWS" => Sec::Rows,
                "COLUMNS" => Sec::Columns,
                "RHS" => Sec::Rhs,
                "RANGES" => Sec::Ranges,
                "BOUNDS" => Sec::Bounds,
                "ENDATA" => Sec::End,
                other => return Err(ParseError::new(ln, format!("unknown section `{other}`"))),
            };
            continue;
        }
        match sec {
            Sec::ObjSense => {
                sense = parse_sense(f[0], ln)?;
                sec = Sec::Start;
            }
            Sec::Rows => {
                if f.len() != 2 {
                    return Err(ParseError::new(ln, "ROWS entry needs type and name"));
                }
                let t = f[0].to_ascii_uppercase();
                let t = t.chars().next().unwrap_or(' ');
                if !matches!(t, 'N' | 'E' | 'L' | 'G') {
                    return Err(ParseError::new(ln, format!("bad row type `{}`", f[0])));
                }
                if t == 'N' && obj_row.is_none() {
                    obj_row = Some(f[1].to_string());
                    continue;
                }
                if row_index.insert(f[1].to_string(), rows.len()).is_some() {
                    return Err(ParseError::new(ln, format!("duplicate row `{}`", f[1])));
                }
                rows.push((f[1].to_string(), t));
                rhs.push(0.0);
                range.push(None);
            }
            Sec::Columns => {
                if f.len() >= 3 && f[1].trim_matches('\'').eq_ignore_ascii_case("MARKER") {
                    let tag = f[2].trim_matches('\'').to_ascii_uppercase();
                    in_int = match tag.as_str() {
                        "INTORG" => true,
                        "INTEND" => false,
                        _ => return Err(ParseError::new(ln, "bad marker")),
                    };
                    continue;
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(ParseError::new(ln, "COLUMNS entry needs 3 or 5 fields"));
                }
                let j = match col_index.get(f[0]) {
                    Some(&j) => j,
                    None => {
                        cols.push(f[0].to_string());
                        col_index.insert(f[0].to_string(), cols.len() - 1);
                        costs.push(0.0);
                        entries.push(Vec::new());
                        lower.push(0.0);
                        upper.push(f64::INFINITY);
                        bin_bound.push(false);
                        if in_int {
                            integer.push(cols.len() - 1);
                        }
                        cols.len() - 1
                    }
                };
                for pair in f[1..].chunks(2) {
                    let v = num(pair[1], ln)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        costs[j] += v;
                    } else {
                        let i = *row_index
                            .get(pair[0])
                            .ok_or_else(|| ParseError::new(ln, format!("unknown row `{}`", pair[0])))?;
                        entries[j].push((i, v));
                    }
                }
            }
            Sec::Rhs | Sec::Ranges => {
                let body = match f.len() {
                    2 | 4 => &f[..],
                    3 | 5 => &f[1..],
                    _ => return Err(ParseError::new(ln, "RHS/RANGES entry has wrong arity")),
                };
                for pair in body.chunks(2) {
                    let v = num(pair[1], ln)?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        if sec == Sec::Rhs {
                            offset = -v;
                        }
                        continue;
                    }
                    let i = *row_index
                        .get(pair[0])
                        .ok_or_else(|| ParseError::new(ln, format!("unknown row `{}`", pair[0])))?;
                    if sec == Sec::Rhs {
                        rhs[i] = v;
                    } else {
                        range[i] = Some(v);
                    }
                }
            }
            Sec::Bounds => {
                if f.len() < 3 {
                    return Err(ParseError::new(ln, "BOUNDS entry too short"));
                }
                let t = f[0].to_ascii_uppercase();
                let j = *col_index
                    .get(f[2])
                    .ok_or_else(|| ParseError::new(ln, format!("unknown column `{}`", f[2])))?;
                let val = || -> Result<f64, ParseError> {
                    f.get(3)
                        .ok_or_else(|| ParseError::new(ln, "bound value missing"))
                        .and_then(|s| num(s, ln))
                };
                match t.as_str() {
                    "UP" => upper[j] = val()?,
                    "LO" => lower[j] = val()?,
                    "FX" => {
                        let v = val()?;
                        lower[j] = v;
                        upper[j] = v;
                    }
                    "FR" => {
                        lower[j] = f64::NEG_INFINITY;
                        upper[j] = f64::INFINITY;
                    }
                    "MI" => lower[j] = f64::NEG_INFINITY,
                    "PL" => upper[j] = f64::INFINITY,
                    "BV" => {
                        lower[j] = 0.0;
                        upper[j] = 1.0;
                        bin_bound[j] = true;
                    }
                    other => return Err(ParseError::new(ln, format!("unsupported bound type `{other}`"))),
                }
            }
            Sec::Start | Sec::End => {
                return Err(ParseError::new(ln, "data line outside a section"));
            }
        }
    }
    if sec != Sec::End {
        return Err(ParseError::new(text.lines().count(), "missing ENDATA"));
    }

    let mut lp = LinearProgram::new(name, sense);
    lp.objective_offset = offset;
    for (j, c) in cols.iter().enumerate() {
        lp.add_col(c.clone(), lower[j], upper[j], costs[j]);
    }
    let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); rows.len()];
    for (j, es) in entries.iter().enumerate() {
        for &(i, a) in es {
            by_row[i].push((j, a));
        }
    }
    for (i, (rname, t)) in rows.iter().enumerate() {
        let b = rhs[i];
        let (lo, hi) = match (t, range[i]) {
            ('N', _) => (f64::NEG_INFINITY, f64::INFINITY),
            ('E', None) => (b, b),
            ('E', Some(r)) if r >= 0.0 => (b, b + r),
            ('E', Some(r)) => (b + r, b),
            ('L', None) => (f64::NEG_INFINITY, b),
            ('L', Some(r)) => (b - r.abs(), b),
            ('G', None) => (b, f64::INFINITY),
            ('G', Some(r)) => (b, b + r.abs()),
            _ => unreachable!(),
        };
        lp.add_row(rname.clone(), lo, hi, std::mem::take(&mut by_row[i]));
    }
    let mut mip = MixedIntegerProgram::new(lp);
    for j in integer {
        let c = &mip.lp.cols()[j];
        if c.lower < 0.0 || c.upper > 1.0 {
            return Err(ParseError::new(0, format!("integer column `{}` is not binary", c.name)));
        }
        mip.mark_binary(j);
    }
    for (j, &b) in bin_bound.iter().enumerate() {
        if b {
            mip.mark_binary(j);
        }
    }
    Ok(mip)
}

fn parse_sense(v: &str, ln: usize) -> Result<Sense, ParseError> {
    match v.to_ascii_uppercase().as_str() {
        "MAX" | "MAXIMIZE" => Ok(Sense::Maximize),
        "MIN" | "MINIMIZE" => Ok(Sense::Minimize),
        other => Err(ParseError::new(ln, format!("bad objective sense `{other}`"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixed_columns() {
        let mut lp = LinearProgram::new("t", Sense::Minimize);
        let x = lp.add_col("x", 0.0, 4.0, 1.5);
        lp.add_row("c1", 2.0, f64::INFINITY, [(x, 1.0)]);
        let text = write_mps(&MixedIntegerProgram::new(lp)).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[4], " N  obj");
        assert_eq!(lines[5], " G  c1");
        assert_eq!(lines[7], format!("    x         obj       {:>20}", "1.5"));
        assert!(text.contains(" UP BND       x         "));
        assert!(text.lines().all(|l| !l.ends_with(' ')));
    }

    #[test]
    fn empty_model_is_minimal() {
        let lp = LinearProgram::new("", Sense::Minimize);
        let text = write_mps(&MixedIntegerProgram::new(lp)).unwrap();
        assert_eq!(text, "NAME\nOBJSENSE\n    MIN\nROWS\n N  obj\nCOLUMNS\nRHS\nENDATA\n");
        let back = parse_mps(&text).unwrap();
        assert_eq!(back.lp.num_cols(), 0);
    }

    #[test]
    fn objective_row_name_collision() {
        let mut lp = LinearProgram::new("t", Sense::Minimize);
        let x = lp.add_col("x", 0.0, 1.0, 0.0);
        lp.add_row("obj", 0.0, 1.0, [(x, 1.0)]);
        assert!(matches!(
            write_mps(&MixedIntegerProgram::new(lp)),
            Err(ExportError::NameCollision(_))
        ));
    }
}
