//! Dataset CSV schema.
//!
//! Header: `x1,...,xp,z,d,s,y` (p may be zero). `z`, `d`, `s` are 0/1;
//! `y` is empty (or the literal `NA`) exactly when `s` is 0, a decimal
//! number otherwise. UTF-8, LF line endings, `.` decimal point. No quoting
//! exists in this schema, so fields never contain commas.

use std::path::Path;

use latesens_core::{Dataset, ObservationRow};

use crate::error::CliError;

fn parse_binary(line: usize, column: &str, field: &str) -> Result<bool, CliError> {
    match field {
        "0" => Ok(false),
        "1" => Ok(true),
        other => Err(CliError::parse(
            line,
            column,
            format!("expected 0 or 1, got `{other}`"),
        )),
    }
}

fn parse_real(line: usize, column: &str, field: &str) -> Result<f64, CliError> {
    let value: f64 = field
        .parse()
        .map_err(|_| CliError::parse(line, column, format!("expected a number, got `{field}`")))?;
    if !value.is_finite() {
        return Err(CliError::parse(line, column, "value must be finite"));
    }
    Ok(value)
}

/// Parse dataset text in the CSV schema. Line numbers in errors are
/// 1-based file lines (the header is line 1).
pub fn parse_dataset(text: &str) -> Result<Dataset, CliError> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| CliError::new("parse_error", "empty input: missing header"))?;
    let header = header.trim_end_matches('\r');
    let columns: Vec<&str> = header.split(',').collect();
    if columns.len() < 4 || columns[columns.len() - 4..] != ["z", "d", "s", "y"] {
        return Err(CliError::parse(
            1,
            "header",
            "header must be `x1,...,xp,z,d,s,y` (covariates may be absent)",
        ));
    }
    let p = columns.len() - 4;
    for (j, name) in columns[..p].iter().enumerate() {
        let expected = format!("x{}", j + 1);
        if *name != expected {
            return Err(CliError::parse(
                1,
                "header",
                format!(
                    "covariate column {} must be named `{expected}`, got `{name}`",
                    j + 1
                ),
            ));
        }
    }

    let mut rows = Vec::new();
    for (index, raw) in lines {
        let line_no = index + 1;
        let raw = raw.trim_end_matches('\r');
        if raw.is_empty() {
            continue;
        }
        let fields: Vec<&str> = raw.split(',').collect();
        if fields.len() != columns.len() {
            return Err(CliError::parse(
                line_no,
                "row",
                format!("expected {} fields, got {}", columns.len(), fields.len()),
            ));
        }
        let mut x = Vec::with_capacity(p);
        for j in 0..p {
            x.push(parse_real(line_no, columns[j], fields[j])?);
        }
        let z = parse_binary(line_no, "z", fields[p])?;
        let d = parse_binary(line_no, "d", fields[p + 1])?;
        let s = parse_binary(line_no, "s", fields[p + 2])?;
        let y_field = fields[p + 3];
        let y = if y_field.is_empty() || y_field == "NA" {
            None
        } else {
            Some(parse_real(line_no, "y", y_field)?)
        };
        if s && y.is_none() {
            return Err(CliError::parse(
                line_no,
                "y",
                "outcome missing on a surviving row",
            ));
        }
        if !s && y.is_some() {
            return Err(CliError::parse(
                line_no,
                "y",
                "outcome present on a censored row (must be empty or NA when s=0)",
            ));
        }
        let row = ObservationRow::new(x, z, d, s, y)
            .map_err(|err| CliError::parse(line_no, "row", err.to_string()))?;
        rows.push(row);
    }

    Dataset::new(rows).map_err(CliError::from)
}

/// Read a dataset file together with its content digest.
pub fn read_dataset(path: &Path) -> Result<(Dataset, String), CliError> {
    let bytes = std::fs::read(path).map_err(|err| CliError::io(path, err))?;
    let digest = crate::manifest::sha256_hex(&bytes);
    let text = String::from_utf8(bytes)
        .map_err(|_| CliError::new("parse_error", "input is not valid UTF-8"))?;
    let dataset = parse_dataset(&text)?;
    Ok((dataset, digest))
}

/// Serialize a dataset in the CSV schema; `y` is the empty string on
/// censored rows.
pub fn dataset_to_csv(data: &Dataset) -> String {
    let p = data.p();
    let mut out = String::new();
    for j in 1..=p {
        out.push_str(&format!("x{j},"));
    }
    out.push_str("z,d,s,y\n");
    for row in data.rows() {
        for v in row.covariates() {
            out.push_str(&format!("{v},"));
        }
        out.push_str(&format!(
            "{},{},{},",
            u8::from(row.instrument()),
            u8::from(row.treatment()),
            u8::from(row.survived())
        ));
        if let Some(y) = row.outcome() {
            out.push_str(&format!("{y}"));
        }
        out.push('\n');
    }
    out
}
