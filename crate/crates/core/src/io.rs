//! CSV formats.
//!
//! Point sets: one `re,im[,mult]` row per point, multiplicity defaulting to 1.
//! Interpolation data: `re,im,j,c_re,c_im` rows; slots not listed are zero.
//! An optional header row and `#` comment lines are accepted. Numbers are
//! written with 17 significant digits so files round-trip exactly.

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::MultiSet;
use crate::interp::InterpolationData;
use crate::C64;

fn reader<R: Read>(input: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line()).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::Parse {
            line,
            message: format!("{other:?}"),
        },
    }
}

/// Records as `(line, fields)`, skipping blank rows and a leading header.
fn records<R: Read>(input: R) -> Result<Vec<(u64, Vec<String>)>> {
    let mut out = Vec::new();
    for (k, rec) in reader(input).into_records().enumerate() {
        let rec = rec.map_err(csv_error)?;
        let line = rec.position().map(|p| p.line()).unwrap_or(k as u64 + 1);
        let fields: Vec<String> = rec.iter().map(str::to_owned).collect();
        if fields.iter().all(|f| f.is_empty()) {
            continue;
        }
        if out.is_empty() && k == 0 && fields[0].parse::<f64>().is_err() {
            continue;
        }
        out.push((line, fields));
    }
    Ok(out)
}

fn parse_f64(line: u64, field: &str, name: &str) -> Result<f64> {
    let v: f64 = field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("{name} `{field}` is not a number"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("{name} `{field}` is not finite"),
        });
    }
    Ok(v)
}

fn parse_uint(line: u64, field: &str, name: &str) -> Result<u32> {
    field.parse().map_err(|_| Error::Parse {
        line,
        message: format!("{name} `{field}` is not a nonnegative integer"),
    })
}

pub fn read_point_set<R: Read>(input: R) -> Result<MultiSet> {
    let mut points = Vec::new();
    let mut mult = Vec::new();
    for (line, f) in records(input)? {
        if !(2..=3).contains(&f.len()) {
            return Err(Error::Parse {
                line,
                message: format!("expected re,im[,mult] but found {} fields", f.len()),
            });
        }
        let z = C64::new(parse_f64(line, &f[0], "re")?, parse_f64(line, &f[1], "im")?);
        let m = match f.get(2) {
            Some(s) => parse_uint(line, s, "mult")?,
            None => 1,
        };
        if m == 0 {
            return Err(Error::Parse {
                line,
                message: "multiplicity must be at least 1".into(),
            });
        }
        if points.contains(&z) {
            return Err(Error::Parse {
                line,
                message: format!("point {z} appears twice"),
            });
        }
        points.push(z);
        mult.push(m);
    }
    MultiSet::new(points, mult)
}

pub fn read_point_set_file(path: impl AsRef<Path>) -> Result<MultiSet> {
    read_point_set(File::open(path)?)
}

pub fn write_point_set<W: Write>(set: &MultiSet, mut out: W) -> Result<()> {
    writeln!(out, "re,im,mult")?;
    for (z, m) in set.iter() {
        writeln!(out, "{:.16e},{:.16e},{m}", z.re, z.im)?;
    }
    Ok(())
}

pub fn write_point_set_file(set: &MultiSet, path: impl AsRef<Path>) -> Result<()> {
    let mut buf = Vec::new();
    write_point_set(set, &mut buf)?;
    std::fs::write(path, buf)?;
    Ok(())
}

/// Reads `re,im,j,c_re,c_im` rows keyed by the points of `set`.
pub fn read_data<R: Read>(input: R, set: &MultiSet) -> Result<InterpolationData> {
    let mut data = InterpolationData::zeros(set.clone());
    for (line, f) in records(input)? {
        if f.len() != 5 {
            return Err(Error::Parse {
                line,
                message: format!("expected re,im,j,c_re,c_im but found {} fields", f.len()),
            });
        }
        let z = C64::new(parse_f64(line, &f[0], "re")?, parse_f64(line, &f[1], "im")?);
        let j = parse_uint(line, &f[2], "j")? as usize;
        let c = C64::new(parse_f64(line, &f[3], "c_re")?, parse_f64(line, &f[4], "c_im")?);
        let i = set.index_of(z).ok_or_else(|| Error::Parse {
            line,
            message: format!("point {z} is not in the point set"),
        })?;
        let m = set.mult()[i] as usize;
        if j >= m {
            return Err(Error::Parse {
                line,
                message: format!("order j = {j} at {z} must be below its multiplicity {m}"),
            });
        }
        data.set_value(i, j, c)?;
    }
    Ok(data)
}

pub fn read_data_file(path: impl AsRef<Path>, set: &MultiSet) -> Result<InterpolationData> {
    read_data(File::open(path)?, set)
}

pub fn write_data<W: Write>(data: &InterpolationData, mut out: W) -> Result<()> {
    writeln!(out, "re,im,j,c_re,c_im")?;
    for (z, row) in data.set().points().iter().zip(data.values()) {
        for (j, c) in row.iter().enumerate() {
            writeln!(out, "{:.16e},{:.16e},{j},{:.16e},{:.16e}", z.re, z.im, c.re, c.im)?;
        }
    }
    Ok(())
}
