//! Reading and writing point data as CSV or JSON.
//!
//! CSV uses a header row, either `x,y` or `x,y,batch`; UTF-8 with `.` as
//! the decimal separator, LF or CRLF line endings. JSON is an object with
//! either a `points` array of `[x, y]` pairs or a `batches` array of such
//! arrays, plus an optional `domain` object.
//!
//! Round trips are bit-exact: coordinates are written in the shortest
//! decimal form that parses back to the identical f64.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::{BatchedPointSet, DataError, Dataset, Point2, PointSet, RectDomain};

/// Supported file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// Infers the format from a file extension (`.csv` or `.json`).
    pub fn from_path(path: &Path) -> Result<Format, DataError> {
        match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
            Some(ext) if ext == "csv" => Ok(Format::Csv),
            Some(ext) if ext == "json" => Ok(Format::Json),
            _ => Err(DataError::Invalid(format!(
                "cannot infer format of `{}`; expected a .csv or .json extension",
                path.display()
            ))),
        }
    }
}

/// Loads a point set or batched point set from `reader`.
///
/// A `batch` column (CSV) or `batches` field (JSON) yields a batched set
/// with batches ordered by index; otherwise a single set is returned.
/// Point order within a batch follows source order.
pub fn load_points<R: Read>(reader: R, format: Format) -> Result<Dataset, DataError> {
    match format {
        Format::Csv => load_csv(reader),
        Format::Json => load_json(reader),
    }
}

/// Writes `data` to `writer` in the given format.
pub fn save_points<W: Write>(writer: W, data: &Dataset, format: Format) -> Result<(), DataError> {
    validate_finite(data)?;
    match format {
        Format::Csv => save_csv(writer, data),
        Format::Json => save_json(writer, data),
    }
}

/// Loads from a file path, inferring the format from the extension.
pub fn load_points_path(path: &Path) -> Result<Dataset, DataError> {
    let format = Format::from_path(path)?;
    let file = File::open(path)?;
    load_points(BufReader::new(file), format)
}

/// Saves to a file path, inferring the format from the extension.
pub fn save_points_path(path: &Path, data: &Dataset) -> Result<(), DataError> {
    let format = Format::from_path(path)?;
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    save_points(&mut writer, data, format)?;
    writer.flush()?;
    Ok(())
}

fn validate_finite(data: &Dataset) -> Result<(), DataError> {
    let check = |points: &[Point2], what: &str| -> Result<(), DataError> {
        for (i, p) in points.iter().enumerate() {
            if !p.is_finite() {
                return Err(DataError::Invalid(format!(
                    "{what} {i}: non-finite coordinate ({}, {})",
                    p.x, p.y
                )));
            }
        }
        Ok(())
    };
    match data {
        Dataset::Single(set) => check(&set.points, "point"),
        Dataset::Batched(batched) => {
            for (b, batch) in batched.batches().iter().enumerate() {
                check(batch, &format!("batch {b}, point"))?;
            }
            Ok(())
        }
    }
}

// ── CSV ──────────────────────────────────────────────────────────────────

fn load_csv<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let headers = rdr
        .headers()
        .map_err(|e| csv_error(&e))?
        .iter()
        .map(str::to_ascii_lowercase)
        .collect::<Vec<_>>();
    let has_batch = match headers.as_slice() {
        [x, y] if x == "x" && y == "y" => false,
        [x, y, b] if x == "x" && y == "y" && b == "batch" => true,
        _ => {
            return Err(DataError::Parse {
                line: 1,
                message: format!(
                    "expected header `x,y` or `x,y,batch`, got `{}`",
                    headers.join(",")
                ),
            })
        }
    };

    let mut rows: Vec<(Point2, usize)> = Vec::new();
    for result in rdr.records() {
        let record = result.map_err(|e| csv_error(&e))?;
        let line = record.position().map_or(0, |p| p.line());
        let x = parse_coord(record.get(0).unwrap_or(""), "x", line)?;
        let y = parse_coord(record.get(1).unwrap_or(""), "y", line)?;
        let batch = if has_batch {
            parse_batch_index(record.get(2).unwrap_or(""), line)?
        } else {
            0
        };
        rows.push((Point2::new(x, y), batch));
    }

    if !has_batch {
        let points = rows.into_iter().map(|(p, _)| p).collect();
        return Ok(Dataset::Single(PointSet::new(points)));
    }

    let max_index = rows.iter().map(|(_, b)| *b).max().ok_or_else(|| {
        DataError::Invalid("batched CSV contains no data rows".into())
    })?;
    let mut batches: Vec<Vec<Point2>> = vec![Vec::new(); max_index + 1];
    for (p, b) in rows {
        batches[b].push(p);
    }
    if let Some(missing) = batches.iter().position(Vec::is_empty) {
        return Err(DataError::Invalid(format!(
            "batch index {missing} missing; batch indices must be contiguous from 0"
        )));
    }
    Ok(Dataset::Batched(BatchedPointSet::new(batches)?))
}

fn csv_error(e: &csv::Error) -> DataError {
    let line = e.position().map_or(0, |p| p.line());
    DataError::Parse { line, message: format!("malformed CSV record: {e}") }
}

fn parse_coord(field: &str, name: &str, line: u64) -> Result<f64, DataError> {
    let value: f64 = field.parse().map_err(|_| DataError::Parse {
        line,
        message: format!("invalid {name} coordinate `{field}`"),
    })?;
    if !value.is_finite() {
        return Err(DataError::Validation {
            line,
            message: format!("non-finite {name} coordinate `{field}`"),
        });
    }
    Ok(value)
}

fn parse_batch_index(field: &str, line: u64) -> Result<usize, DataError> {
    let value: i64 = field.parse().map_err(|_| DataError::Parse {
        line,
        message: format!("invalid batch index `{field}`"),
    })?;
    if value < 0 {
        return Err(DataError::Validation {
            line,
            message: format!("negative batch index {value}"),
        });
    }
    Ok(value as usize)
}

fn save_csv<W: Write>(writer: W, data: &Dataset) -> Result<(), DataError> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io_err = |e: csv::Error| DataError::Invalid(format!("CSV write failed: {e}"));
    match data {
        Dataset::Single(set) => {
            wtr.write_record(["x", "y"]).map_err(io_err)?;
            for p in &set.points {
                wtr.serialize((p.x, p.y)).map_err(io_err)?;
            }
        }
        Dataset::Batched(batched) => {
            wtr.write_record(["x", "y", "batch"]).map_err(io_err)?;
            for (b, batch) in batched.batches().iter().enumerate() {
                for p in batch {
                    wtr.serialize((p.x, p.y, b)).map_err(io_err)?;
                }
            }
        }
    }
    wtr.flush()?;
    Ok(())
}

// ── JSON ─────────────────────────────────────────────────────────────────

#[derive(Serialize, Deserialize)]
struct JsonDomain {
    xmin: f64,
    xmax: f64,
    ymin: f64,
    ymax: f64,
}

#[derive(Serialize, Deserialize)]
struct JsonData {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<JsonDomain>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    points: Option<Vec<(f64, f64)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    batches: Option<Vec<Vec<(f64, f64)>>>,
}

fn load_json<R: Read>(reader: R) -> Result<Dataset, DataError> {
    let parsed: JsonData = serde_json::from_reader(reader).map_err(|e| {
        if e.is_io() {
            DataError::Io(std::io::Error::other(e.to_string()))
        } else {
            DataError::Parse { line: e.line() as u64, message: e.to_string() }
        }
    })?;

    let domain = match parsed.domain {
        Some(d) => Some(RectDomain::new(d.xmin, d.xmax, d.ymin, d.ymax)?),
        None => None,
    };

    match (parsed.points, parsed.batches) {
        (Some(_), Some(_)) => Err(DataError::Invalid(
            "JSON data must contain either `points` or `batches`, not both".into(),
        )),
        (None, None) => Err(DataError::Invalid(
            "JSON data must contain a `points` or `batches` field".into(),
        )),
        (Some(pairs), None) => {
            let points = convert_pairs(&pairs, "points")?;
            let mut set = PointSet::new(points);
            set.domain = domain;
            Ok(Dataset::Single(set))
        }
        (None, Some(batch_pairs)) => {
            let mut batches = Vec::with_capacity(batch_pairs.len());
            for (b, pairs) in batch_pairs.iter().enumerate() {
                batches.push(convert_pairs(pairs, &format!("batches[{b}]"))?);
            }
            let mut batched = BatchedPointSet::new(batches)?;
            batched.domain = domain;
            Ok(Dataset::Batched(batched))
        }
    }
}

fn convert_pairs(pairs: &[(f64, f64)], what: &str) -> Result<Vec<Point2>, DataError> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, &(x, y))| {
            let p = Point2::new(x, y);
            if p.is_finite() {
                Ok(p)
            } else {
                Err(DataError::Invalid(format!(
                    "{what}[{i}]: non-finite coordinate ({x}, {y})"
                )))
            }
        })
        .collect()
}

fn save_json<W: Write>(mut writer: W, data: &Dataset) -> Result<(), DataError> {
    let domain = data.domain().map(|d| JsonDomain {
        xmin: d.xmin(),
        xmax: d.xmax(),
        ymin: d.ymin(),
        ymax: d.ymax(),
    });
    let doc = match data {
        Dataset::Single(set) => JsonData {
            domain,
            points: Some(set.points.iter().map(|p| (p.x, p.y)).collect()),
            batches: None,
        },
        Dataset::Batched(batched) => JsonData {
            domain,
            points: None,
            batches: Some(
                batched
                    .batches()
                    .iter()
                    .map(|b| b.iter().map(|p| (p.x, p.y)).collect())
                    .collect(),
            ),
        },
    };
    serde_json::to_writer_pretty(&mut writer, &doc)
        .map_err(|e| DataError::Invalid(format!("JSON write failed: {e}")))?;
    writer.write_all(b"\n")?;
    Ok(())
}
