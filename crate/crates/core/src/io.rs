//! Text formats shared by the result files: numeric CSV with a fixed
//! header, LF line endings and shortest round-trip float formatting.

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CsvError {
    #[error("empty CSV input")]
    Empty,
    #[error("bad CSV header: expected {expected:?}, found {found:?}")]
    Header { expected: String, found: String },
    #[error("line {line}: {msg}")]
    Row { line: u64, msg: String },
}

/// Shortest decimal string that parses back to the same `f64`.
///
/// Plain notation in the usual range, exponent notation for very small or
/// very large magnitudes.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if x != 0.0 && a.is_finite() && !(1e-4..1e15).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Parses a CSV whose header must equal `columns` and whose fields are all
/// numeric. Returns each row with its 1-based line number.
pub fn parse_numeric_csv(text: &str, columns: &[&str]) -> Result<Vec<(u64, Vec<f64>)>, CsvError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| CsvError::Row {
        line: 1,
        msg: e.to_string(),
    })?;
    if header.is_empty() {
        return Err(CsvError::Empty);
    }
    let found: Vec<&str> = header.iter().collect();
    if found != columns {
        return Err(CsvError::Header {
            expected: columns.join(","),
            found: found.join(","),
        });
    }
    let mut rows = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| CsvError::Row {
            line: e.position().map(|p| p.line()).unwrap_or(0),
            msg: e.to_string(),
        })?;
        let line = record.position().map(|p| p.line()).unwrap_or(0);
        let values = record
            .iter()
            .map(|field| {
                field.parse::<f64>().map_err(|_| CsvError::Row {
                    line,
                    msg: format!("not a number: {field:?}"),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((line, values));
    }
    Ok(rows)
}

/// Writes a header plus rows of numbers.
pub fn write_numeric_csv<'a, I>(header: &str, rows: I) -> String
where
    I: IntoIterator<Item = &'a [f64]>,
{
    let mut out = String::new();
    out.push_str(header);
    out.push('\n');
    for row in rows {
        let line: Vec<String> = row.iter().map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}
