use std::path::Path;

use anyhow::{anyhow, bail, Context};

use crate::args::Kind;
use crate::UsageError;

/// Reads one column of a delimited file as numbers.
///
/// `column` is a zero-based index or, when it is not a number, a header name
/// (which implies a header row). Errors name the offending line.
pub fn read_column(path: &Path, column: &str, kind: Kind, delimiter: char, skip_header: bool) -> anyhow::Result<Vec<f64>> {
    if !delimiter.is_ascii() {
        return Err(UsageError(format!("delimiter '{delimiter}' must be a single ASCII character")).into());
    }
    let by_name = column.parse::<usize>().is_err();
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter as u8)
        .has_headers(skip_header || by_name)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_path(path)
        .with_context(|| format!("cannot open {}", path.display()))?;
    let index = if by_name {
        let headers = reader.headers().with_context(|| format!("cannot read the header of {}", path.display()))?;
        headers
            .iter()
            .position(|h| h == column)
            .ok_or_else(|| UsageError(format!("no column named '{column}' in the header of {}", path.display())))?
    } else {
        column.parse().expect("checked above")
    };

    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.with_context(|| format!("cannot read {}", path.display()))?;
        let line = record.position().map_or(0, |p| p.line());
        let field = record.get(index).ok_or_else(|| anyhow!("line {line}: row has no column {index}"))?;
        let x: f64 = field.parse().map_err(|_| anyhow!("line {line}: cannot parse '{field}' as a number"))?;
        if !x.is_finite() {
            bail!("line {line}: value '{field}' is not finite");
        }
        if kind == Kind::Binary && x != 0.0 && x != 1.0 {
            bail!("line {line}: value '{field}' is not binary (expected 0 or 1)");
        }
        values.push(x);
    }
    if values.is_empty() {
        bail!("{} contains no observations", path.display());
    }
    Ok(values)
}
