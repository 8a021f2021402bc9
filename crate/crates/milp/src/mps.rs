//! MPS interchange.
//!
//! Output follows the fixed-column section layout (NAME, ROWS, COLUMNS, RHS,
//! BOUNDS, ENDATA) with fields padded to the classic positions, but names may
//! be longer than eight characters, so readers must split on whitespace.
//! Binary columns are wrapped in `MARKER INTORG/INTEND` pairs. The objective
//! constant is written as the negated right-hand side of the objective row.

use std::collections::{HashMap, HashSet};
use std::fmt::Write as _;

use crate::error::MpsError;
use crate::model::{LinExpr, MixedIntegerModel, Sense, VarId, VarKind};

const MAX_NAME: usize = 255;

fn sanitize(raw: &str) -> String {
    let mut s: String = raw
        .chars()
        .map(|c| if c.is_whitespace() || c.is_control() { '_' } else { c })
        .collect();
    if s.is_empty() {
        s.push('_');
    }
    if s.starts_with('$') || s.starts_with('*') {
        s.insert(0, '_');
    }
    if s.len() > MAX_NAME {
        let mut cut = MAX_NAME;
        while !s.is_char_boundary(cut) {
            cut -= 1;
        }
        s.truncate(cut);
    }
    s
}

fn uniquify(names: impl Iterator<Item = String>, taken: &mut HashSet<String>) -> Vec<String> {
    let mut out = Vec::new();
    for raw in names {
        let base = sanitize(&raw);
        let mut name = base.clone();
        let mut k = 1usize;
        while taken.contains(&name) {
            let suffix = format!("~{k}");
            let mut stem = base.clone();
            while stem.len() + suffix.len() > MAX_NAME {
                stem.pop();
            }
            name = format!("{stem}{suffix}");
            k += 1;
        }
        taken.insert(name.clone());
        out.push(name);
    }
    out
}

/// Names used for columns, rows and the objective row when writing `model`.
#[derive(Debug, Clone)]
pub struct MpsNames {
    pub objective: String,
    pub columns: Vec<String>,
    pub rows: Vec<String>,
}

pub fn mps_names(model: &MixedIntegerModel) -> MpsNames {
    let mut taken = HashSet::new();
    let columns = uniquify(model.vars().iter().map(|v| v.name.clone()), &mut taken);
    let mut row_taken = HashSet::new();
    let rows = uniquify(model.rows().iter().map(|r| r.name.clone()), &mut row_taken);
    let objective = uniquify(std::iter::once("OBJ".to_string()), &mut row_taken).remove(0);
    MpsNames {
        objective,
        columns,
        rows,
    }
}

fn num(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 {
        "0".to_string()
    } else if (1e-4..1e15).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

fn line4(out: &mut String, f1: &str, f2: &str, f3: &str, f4: &str) {
    // classic columns: field 1 at 2, field 2 at 5, field 3 at 15, field 4 at 25
    let _ = writeln!(out, " {f1:<2} {f2:<8}  {f3:<8}  {f4}");
}

/// Writes `model` as MPS text. Output depends only on the model contents.
pub fn emit_mps(model: &MixedIntegerModel) -> String {
    let names = mps_names(model);
    let mut out = String::new();
    let _ = writeln!(out, "NAME          {}", sanitize(model.name()));
    out.push_str("ROWS\n");
    let _ = writeln!(out, " N  {}", names.objective);
    for (r, row) in model.rows().iter().enumerate() {
        let t = match row.sense {
            Sense::Le => "L",
            Sense::Ge => "G",
            Sense::Eq => "E",
        };
        let _ = writeln!(out, " {t}  {}", names.rows[r]);
    }

    let mut cols: Vec<Vec<(usize, f64)>> = vec![Vec::new(); model.num_vars()];
    for (r, row) in model.rows().iter().enumerate() {
        for &(v, a) in &row.terms {
            if a != 0.0 {
                cols[v.0].push((r, a));
            }
        }
    }
    out.push_str("COLUMNS\n");
    let mut in_int = false;
    let mut marker = 0usize;
    for (j, var) in model.vars().iter().enumerate() {
        let is_int = var.kind == VarKind::Binary;
        if is_int != in_int {
            let tag = if is_int { "'INTORG'" } else { "'INTEND'" };
            line4(&mut out, "", &format!("MARKER{marker}"), "'MARKER'", tag);
            marker += 1;
            in_int = is_int;
        }
        let c = model.objective()[j];
        let name = &names.columns[j];
        if c != 0.0 || cols[j].is_empty() {
            line4(&mut out, "", name, &names.objective, &num(c));
        }
        for &(r, a) in &cols[j] {
            line4(&mut out, "", name, &names.rows[r], &num(a));
        }
    }
    if in_int {
        line4(&mut out, "", &format!("MARKER{marker}"), "'MARKER'", "'INTEND'");
    }

    out.push_str("RHS\n");
    if model.objective_constant() != 0.0 {
        line4(&mut out, "", "RHS", &names.objective, &num(-model.objective_constant()));
    }
    for (r, row) in model.rows().iter().enumerate() {
        if row.rhs != 0.0 {
            line4(&mut out, "", "RHS", &names.rows[r], &num(row.rhs));
        }
    }

    out.push_str("BOUNDS\n");
    for (j, var) in model.vars().iter().enumerate() {
        let name = &names.columns[j];
        let (l, u) = (var.lower, var.upper);
        if var.kind == VarKind::Binary && l == 0.0 && u == 1.0 {
            line4(&mut out, "BV", "BND", name, "");
            continue;
        }
        if l == u {
            line4(&mut out, "FX", "BND", name, &num(l));
            continue;
        }
        if l == f64::NEG_INFINITY && u == f64::INFINITY {
            line4(&mut out, "FR", "BND", name, "");
            continue;
        }
        if l == f64::NEG_INFINITY {
            line4(&mut out, "MI", "BND", name, "");
        } else if l != 0.0 {
            line4(&mut out, "LO", "BND", name, &num(l));
        }
        if u != f64::INFINITY {
            line4(&mut out, "UP", "BND", name, &num(u));
        }
    }
    out.push_str("ENDATA\n");
    // trailing blanks from empty fourth fields
    out.lines().map(|l| l.trim_end()).fold(String::with_capacity(out.len()), |mut s, l| {
        s.push_str(l);
        s.push('\n');
        s
    })
}

#[derive(PartialEq)]
enum Section {
    None,
    Rows,
    Columns,
    Rhs,
    Bounds,
}

/// Reads free-format MPS as produced by [`emit_mps`] (RANGES and integer
/// columns other than binaries are not supported).
pub fn parse_mps(text: &str) -> Result<MixedIntegerModel, MpsError> {
    let err = |line: usize, message: String| MpsError::Parse { line, message };
    let mut name = String::new();
    let mut section = Section::None;
    let mut obj_row: Option<String> = None;
    let mut rows: Vec<(String, Sense)> = Vec::new();
    let mut row_idx: HashMap<String, usize> = HashMap::new();
    let mut col_order: Vec<String> = Vec::new();
    let mut col_idx: HashMap<String, usize> = HashMap::new();
    let mut col_int: Vec<bool> = Vec::new();
    let mut col_obj: Vec<f64> = Vec::new();
    let mut entries: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut rhs: Vec<f64> = Vec::new();
    let mut obj_const = 0.0;
    let mut bounds: Vec<(Option<f64>, Option<f64>)> = Vec::new();
    let mut in_int = false;
    let mut ended = false;

    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        if raw.trim().is_empty() || raw.starts_with('*') {
            continue;
        }
        let f: Vec<&str> = raw.split_whitespace().collect();
        if !raw.starts_with(' ') && !raw.starts_with('\t') {
            section = match f[0] {
                "NAME" => {
                    name = f.get(1).copied().unwrap_or("").to_string();
                    Section::None
                }
                "ROWS" => Section::Rows,
                "COLUMNS" => Section::Columns,
                "RHS" => Section::Rhs,
                "BOUNDS" => Section::Bounds,
                "ENDATA" => {
                    ended = true;
                    break;
                }
                other => return Err(err(ln, format!("unsupported section `{other}`"))),
            };
            continue;
        }
        let parse_num = |s: &str| -> Result<f64, MpsError> {
            s.parse::<f64>()
                .map_err(|_| err(ln, format!("bad number `{s}`")))
        };
        match section {
            Section::Rows => {
                if f.len() != 2 {
                    return Err(err(ln, "expected `type name`".into()));
                }
                let sense = match f[0] {
                    "N" => {
                        if obj_row.is_none() {
                            obj_row = Some(f[1].to_string());
                        }
                        continue;
                    }
                    "L" => Sense::Le,
                    "G" => Sense::Ge,
                    "E" => Sense::Eq,
                    t => return Err(err(ln, format!("unknown row type `{t}`"))),
                };
                if row_idx.insert(f[1].to_string(), rows.len()).is_some() {
                    return Err(err(ln, format!("duplicate row `{}`", f[1])));
                }
                rows.push((f[1].to_string(), sense));
                rhs.push(0.0);
            }
            Section::Columns => {
                if f.len() >= 3 && f[1] == "'MARKER'" {
                    match f[2] {
                        "'INTORG'" => in_int = true,
                        "'INTEND'" => in_int = false,
                        m => return Err(err(ln, format!("unknown marker `{m}`"))),
                    }
                    continue;
                }
                if f.len() != 3 && f.len() != 5 {
                    return Err(err(ln, "expected `column row value [row value]`".into()));
                }
                let c = match col_idx.get(f[0]) {
                    Some(&c) => c,
                    None => {
                        let c = col_order.len();
                        col_idx.insert(f[0].to_string(), c);
                        col_order.push(f[0].to_string());
                        col_int.push(in_int);
                        col_obj.push(0.0);
                        entries.push(Vec::new());
                        bounds.push((None, None));
                        c
                    }
                };
                for pair in f[1..].chunks(2) {
                    let v = parse_num(pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        col_obj[c] += v;
                    } else {
                        let r = *row_idx
                            .get(pair[0])
                            .ok_or_else(|| err(ln, format!("unknown row `{}`", pair[0])))?;
                        entries[c].push((r, v));
                    }
                }
            }
            Section::Rhs => {
                if f.len() != 3 && f.len() != 5 {
                    return Err(err(ln, "expected `set row value [row value]`".into()));
                }
                for pair in f[1..].chunks(2) {
                    let v = parse_num(pair[1])?;
                    if Some(pair[0]) == obj_row.as_deref() {
                        obj_const = -v;
                    } else {
                        let r = *row_idx
                            .get(pair[0])
                            .ok_or_else(|| err(ln, format!("unknown row `{}`", pair[0])))?;
                        rhs[r] = v;
                    }
                }
            }
            Section::Bounds => {
                if f.len() < 3 {
                    return Err(err(ln, "expected `type set column [value]`".into()));
                }
                let c = *col_idx
                    .get(f[2])
                    .ok_or_else(|| err(ln, format!("unknown column `{}`", f[2])))?;
                let val = || -> Result<f64, MpsError> {
                    f.get(3)
                        .ok_or_else(|| err(ln, "missing bound value".into()))
                        .and_then(|s| parse_num(s))
                };
                let b = &mut bounds[c];
                match f[0] {
                    "UP" => b.1 = Some(val()?),
                    "LO" => b.0 = Some(val()?),
                    "FX" => {
                        let v = val()?;
                        *b = (Some(v), Some(v));
                    }
                    "FR" => *b = (Some(f64::NEG_INFINITY), Some(f64::INFINITY)),
                    "MI" => b.0 = Some(f64::NEG_INFINITY),
                    "PL" => b.1 = Some(f64::INFINITY),
                    "BV" => {
                        col_int[c] = true;
                        *b = (Some(0.0), Some(1.0));
                    }
                    t => return Err(err(ln, format!("unsupported bound type `{t}`"))),
                }
            }
            Section::None => return Err(err(ln, "data outside a section".into())),
        }
    }
    if !ended {
        return Err(err(text.lines().count(), "missing ENDATA".into()));
    }

    let mut model = MixedIntegerModel::new(name);
    let mut ids = Vec::with_capacity(col_order.len());
    for (c, cname) in col_order.iter().enumerate() {
        let (l, u) = bounds[c];
        let kind = if col_int[c] { VarKind::Binary } else { VarKind::Continuous };
        let lower = l.unwrap_or(0.0);
        let upper = u.unwrap_or(if col_int[c] { 1.0 } else { f64::INFINITY });
        let id = model.add_var(cname.clone(), kind, lower, upper)?;
        model.set_objective_coef(id, col_obj[c]);
        ids.push(id);
    }
    let mut row_terms: Vec<Vec<(VarId, f64)>> = vec![Vec::new(); rows.len()];
    for (c, col) in entries.iter().enumerate() {
        for &(r, v) in col {
            row_terms[r].push((ids[c], v));
        }
    }
    for (r, (rname, sense)) in rows.into_iter().enumerate() {
        let expr = LinExpr {
            terms: std::mem::take(&mut row_terms[r]),
            constant: 0.0,
        };
        model.add_row(rname, &expr, sense, rhs[r])?;
    }
    model.set_objective_constant(obj_const);
    Ok(model)
}
