//! Landmark files: delimited text with header `specimen,landmark,x1,...,xK`.
//!
//! One row per landmark. `landmark` is a 1-based index; rows of a specimen
//! may appear in any order but must cover `1..N` exactly once. Specimens
//! are kept in order of first appearance. Blank lines and lines starting
//! with `#` are ignored; fields may be padded with spaces.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::geometry::{Dims, LandmarkMatrix};

#[derive(Debug, Clone, PartialEq)]
pub struct Specimen {
    pub id: String,
    pub landmarks: LandmarkMatrix,
}

fn data_err(msg: impl Into<String>) -> Error {
    Error::Data(msg.into())
}

fn check_header(header: &csv::StringRecord) -> Result<usize> {
    let fields: Vec<&str> = header.iter().collect();
    if fields.len() < 3 || fields[0] != "specimen" || fields[1] != "landmark" {
        return Err(data_err(
            "header must be 'specimen,landmark,x1,...,xK' with K ≥ 1",
        ));
    }
    for (j, f) in fields[2..].iter().enumerate() {
        if *f != format!("x{}", j + 1) {
            return Err(data_err(format!(
                "header column {} is '{f}', expected 'x{}'",
                j + 3,
                j + 1
            )));
        }
    }
    Ok(fields.len() - 2)
}

/// A parsed specimen before the `N ≥ 3`, `K ≥ N − 1` checks.
#[derive(Debug, Clone, PartialEq)]
pub struct RawSpecimen {
    pub id: String,
    pub values: DMatrix<f64>,
}

/// Parses landmark rows into matrices; every specimen must have the same
/// number of landmarks.
pub fn parse_raw<R: Read>(reader: R) -> Result<Vec<RawSpecimen>> {
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(reader);
    let k = check_header(&rdr.headers().map_err(|e| data_err(e.to_string()))?.clone())?;

    let mut order: Vec<String> = Vec::new();
    let mut rows: HashMap<String, BTreeMap<usize, Vec<f64>>> = HashMap::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| data_err(e.to_string()))?;
        let line = rec.position().map_or(0, |p| p.line());
        let id = rec.get(0).unwrap_or_default().to_string();
        if rec.len() != k + 2 {
            return Err(data_err(format!(
                "line {line}, specimen '{id}': {} coordinates but the header declares K = {k}",
                rec.len().saturating_sub(2)
            )));
        }
        let idx: usize = rec[1].parse().ok().filter(|v| *v >= 1).ok_or_else(|| {
            data_err(format!(
                "line {line}, specimen '{id}': landmark index '{}' is not a positive integer",
                &rec[1]
            ))
        })?;
        let coords = rec
            .iter()
            .enumerate()
            .skip(2)
            .map(|(j, s)| {
                s.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or_else(|| {
                    data_err(format!(
                        "line {line}, specimen '{id}': coordinate x{} is '{s}', not a finite number",
                        j - 1
                    ))
                })
            })
            .collect::<Result<Vec<f64>>>()?;
        let entry = rows.entry(id.clone()).or_insert_with(|| {
            order.push(id.clone());
            BTreeMap::new()
        });
        if entry.insert(idx, coords).is_some() {
            return Err(data_err(format!(
                "specimen '{id}': landmark {idx} appears more than once"
            )));
        }
    }
    if order.is_empty() {
        return Err(data_err("no specimens in file"));
    }

    let mut n_landmarks = None;
    let mut out = Vec::with_capacity(order.len());
    for id in order {
        let lm = &rows[&id];
        let n = *lm.keys().next_back().unwrap();
        if let Some(missing) = (1..=n).find(|j| !lm.contains_key(j)) {
            return Err(data_err(format!(
                "specimen '{id}': landmark {missing} is missing (landmarks must be 1..{n})"
            )));
        }
        match n_landmarks {
            None => n_landmarks = Some(n),
            Some(n0) if n0 != n => {
                return Err(data_err(format!(
                    "specimen '{id}' has {n} landmarks but earlier specimens have {n0}"
                )))
            }
            _ => {}
        }
        let values = DMatrix::from_fn(n, k, |i, j| lm[&(i + 1)][j]);
        out.push(RawSpecimen { id, values });
    }
    Ok(out)
}

fn checked(raw: &RawSpecimen) -> Result<Specimen> {
    let id = &raw.id;
    let (n, k) = raw.values.shape();
    if n < 3 {
        return Err(data_err(format!(
            "specimen '{id}': {n} landmarks; at least 3 are required"
        )));
    }
    if k + 1 < n {
        return Err(data_err(format!(
            "specimen '{id}': K = {k} < N − 1 = {}; the shape model needs K ≥ N − 1",
            n - 1
        )));
    }
    Ok(Specimen {
        id: id.clone(),
        landmarks: LandmarkMatrix::new(raw.values.clone())
            .map_err(|e| data_err(format!("specimen '{id}': {e}")))?,
    })
}

/// Parses and validates a landmark file's content.
pub fn parse_landmarks<R: Read>(reader: R) -> Result<Vec<Specimen>> {
    parse_raw(reader)?.iter().map(checked).collect()
}

/// Keeps the listed 1-based landmarks, in the listed order, and validates
/// the result.
pub fn select_landmarks(specimens: &[RawSpecimen], select: &[usize]) -> Result<Vec<Specimen>> {
    let mut seen = std::collections::HashSet::new();
    if let Some(dup) = select.iter().find(|j| !seen.insert(**j)) {
        return Err(data_err(format!("landmark {dup} selected twice")));
    }
    specimens
        .iter()
        .map(|s| {
            let x = &s.values;
            if let Some(bad) = select.iter().find(|j| **j == 0 || **j > x.nrows()) {
                return Err(data_err(format!(
                    "specimen '{}': selected landmark {bad} outside 1..{}",
                    s.id,
                    x.nrows()
                )));
            }
            checked(&RawSpecimen {
                id: s.id.clone(),
                values: DMatrix::from_fn(select.len(), x.ncols(), |i, j| x[(select[i] - 1, j)]),
            })
        })
        .collect()
}

/// Reads a landmark file and optionally applies a landmark selection.
pub fn ingest(path: &Path, select: Option<&[usize]>) -> Result<Vec<Specimen>> {
    let file = File::open(path)
        .map_err(|e| data_err(format!("cannot open {}: {e}", path.display())))?;
    let raw = parse_raw(file)?;
    match select {
        Some(sel) => select_landmarks(&raw, sel),
        None => raw.iter().map(checked).collect(),
    }
}

pub fn write_landmarks<W: Write>(writer: W, specimens: &[Specimen]) -> Result<()> {
    let k = specimens.first().map_or(0, |s| s.landmarks.dims().coords);
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["specimen".to_string(), "landmark".to_string()];
    header.extend((1..=k).map(|j| format!("x{j}")));
    w.write_record(&header).map_err(|e| data_err(e.to_string()))?;
    for s in specimens {
        let x = s.landmarks.values();
        for i in 0..x.nrows() {
            let mut rec = vec![s.id.clone(), (i + 1).to_string()];
            rec.extend(x.row(i).iter().map(|v| format!("{v:?}")));
            w.write_record(&rec).map_err(|e| data_err(e.to_string()))?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_landmark_file(path: &Path, specimens: &[Specimen]) -> Result<()> {
    write_landmarks(File::create(path)?, specimens)
}

pub fn dims_of(specimens: &[Specimen]) -> Option<Dims> {
    specimens.first().map(|s| s.landmarks.dims())
}
