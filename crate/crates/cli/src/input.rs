//! Input parsing: CSV datasets, θ₀ vectors and support lists.
//!
//! CSV rules: a header row is required, fields are UTF-8, numbers use `.` as
//! the decimal separator, and empty or non-finite values are rejected.

use std::collections::HashSet;
use std::path::Path;

use glmsel::{Dataset, GlmFamily, ModelSupport};
use nalgebra::{DMatrix, DVector};

use crate::error::{CliError, CliResult};

fn input_err(msg: impl Into<String>) -> CliError {
    CliError::Input(msg.into())
}

/// Reads a CSV file whose covariates are every column except `response`.
pub fn read_dataset(path: &Path, response: &str, family: GlmFamily) -> CliResult<Dataset> {
    let shown = path.display();
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path)
        .map_err(|e| input_err(format!("{shown}: {e}")))?;
    let headers = rdr.headers().map_err(|e| input_err(format!("{shown}: {e}")))?.clone();
    if headers.is_empty() {
        return Err(input_err(format!("{shown}: missing header row")));
    }
    let mut seen = HashSet::new();
    for h in headers.iter() {
        if h.is_empty() {
            return Err(input_err(format!("{shown}:1: empty column name")));
        }
        if !seen.insert(h) {
            return Err(input_err(format!("{shown}:1: duplicate column name '{h}'")));
        }
    }
    let resp_col = headers
        .iter()
        .position(|h| h == response)
        .ok_or_else(|| input_err(format!("{shown}: response column '{response}' not found")))?;
    let labels: Vec<String> =
        headers.iter().enumerate().filter(|(j, _)| *j != resp_col).map(|(_, h)| h.to_string()).collect();
    if labels.is_empty() {
        return Err(input_err(format!("{shown}: no covariate columns besides '{response}'")));
    }

    let mut xs: Vec<f64> = Vec::new();
    let mut ys: Vec<f64> = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| input_err(format!("{shown}: {e}")))?;
        let line = rec.position().map_or(0, |p| p.line());
        for (j, field) in rec.iter().enumerate() {
            let name = &headers[j];
            let at = || format!("{shown}:{line}: column '{name}' ({})", j + 1);
            if field.trim().is_empty() {
                return Err(input_err(format!("{}: missing value", at())));
            }
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| input_err(format!("{}: '{field}' is not a number", at())))?;
            if !v.is_finite() {
                return Err(input_err(format!("{}: non-finite value '{field}'", at())));
            }
            if j == resp_col {
                if !family.validate_response(v) {
                    let expect = match family {
                        GlmFamily::Logistic => "0 or 1",
                        GlmFamily::Poisson => "a nonnegative integer",
                    };
                    return Err(input_err(format!("{}: response {field} must be {expect} for the {family} family", at())));
                }
                ys.push(v);
            } else {
                xs.push(v);
            }
        }
    }
    let n = ys.len();
    if n == 0 {
        return Err(input_err(format!("{shown}: no data rows")));
    }
    let p = labels.len();
    let x = DMatrix::from_row_slice(n, p, &xs);
    Ok(Dataset::for_family(family, x, DVector::from_vec(ys), Some(labels))?)
}

/// θ₀ from a JSON array or from numbers separated by commas or whitespace.
pub fn read_theta(path: &Path, p: usize) -> CliResult<DVector<f64>> {
    let text = std::fs::read_to_string(path).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    let vals = parse_theta(&text).map_err(|e| input_err(format!("{}: {e}", path.display())))?;
    if vals.len() != p {
        return Err(input_err(format!("{}: {} coefficients for {p} covariates", path.display(), vals.len())));
    }
    Ok(DVector::from_vec(vals))
}

pub fn parse_theta(text: &str) -> Result<Vec<f64>, String> {
    let t = text.trim();
    let vals: Vec<f64> = if t.starts_with('[') {
        serde_json::from_str(t).map_err(|e| e.to_string())?
    } else {
        t.split(|c: char| c == ',' || c.is_whitespace())
            .filter(|s| !s.is_empty())
            .enumerate()
            .map(|(i, s)| s.parse::<f64>().map_err(|_| format!("entry {}: '{s}' is not a number", i + 1)))
            .collect::<Result<_, _>>()?
    };
    if let Some(i) = vals.iter().position(|v| !v.is_finite()) {
        return Err(format!("entry {} is not finite", i + 1));
    }
    Ok(vals)
}

/// A support written as comma-separated 0-based indices; `-` or an empty
/// string is the empty model.
pub fn parse_support(text: &str) -> CliResult<ModelSupport> {
    let t = text.trim().trim_start_matches('{').trim_end_matches('}');
    if t.is_empty() || t == "-" {
        return Ok(ModelSupport::empty());
    }
    let idx = t
        .split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| input_err(format!("support '{text}': bad index '{s}'"))))
        .collect::<CliResult<Vec<_>>>()?;
    ModelSupport::new(idx).map_err(|e| input_err(format!("support '{text}': {e}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn csv_file(body: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(body.as_bytes()).unwrap();
        f
    }

    #[test]
    fn reads_response_and_covariates() {
        let f = csv_file("a,y,b\n1.5,1,2\n-0.5,0,3e-1\n");
        let d = read_dataset(f.path(), "y", GlmFamily::Logistic).unwrap();
        assert_eq!((d.n(), d.p()), (2, 2));
        assert_eq!(d.labels(), ["a", "b"]);
        assert_eq!(d.x()[(1, 1)], 0.3);
        assert_eq!(d.y()[0], 1.0);
    }

    #[test]
    fn rejects_bad_binary_response_with_location() {
        let f = csv_file("a,y\n1,0\n2,2\n");
        let e = read_dataset(f.path(), "y", GlmFamily::Logistic).unwrap_err();
        assert_eq!(e.exit_code(), 2);
        let msg = e.to_string();
        assert!(msg.contains(":3:") && msg.contains("column 'y' (2)"), "{msg}");
    }

    #[test]
    fn rejects_missing_and_non_numeric() {
        let f = csv_file("a,y\n,1\n");
        assert!(read_dataset(f.path(), "y", GlmFamily::Poisson).unwrap_err().to_string().contains("missing value"));
        let f = csv_file("a,y\n1;5,1\n");
        assert!(read_dataset(f.path(), "y", GlmFamily::Poisson).unwrap_err().to_string().contains("not a number"));
        let f = csv_file("a,y\nNaN,1\n");
        assert!(read_dataset(f.path(), "y", GlmFamily::Poisson).is_err());
        let f = csv_file("a,y\n1,1,3\n");
        assert_eq!(read_dataset(f.path(), "y", GlmFamily::Poisson).unwrap_err().exit_code(), 2);
        let f = csv_file("a,b\n1,1\n");
        assert!(read_dataset(f.path(), "y", GlmFamily::Poisson).unwrap_err().to_string().contains("not found"));
        let f = csv_file("a,a,y\n1,1,1\n");
        assert!(read_dataset(f.path(), "y", GlmFamily::Poisson).unwrap_err().to_string().contains("duplicate"));
        let f = csv_file("a,y\n1,1.5\n");
        assert!(read_dataset(f.path(), "y", GlmFamily::Poisson).is_err());
    }

    #[test]
    fn theta_and_support_parsing() {
        assert_eq!(parse_theta("[1.0, -2, 0]").unwrap(), vec![1.0, -2.0, 0.0]);
        assert_eq!(parse_theta("1\n0,  2.5\n").unwrap(), vec![1.0, 0.0, 2.5]);
        assert!(parse_theta("1 x").is_err());
        assert_eq!(parse_support("3, 1").unwrap().indices(), [1, 3]);
        assert!(parse_support("-").unwrap().is_empty());
        assert!(parse_support("{}").unwrap().is_empty());
        assert!(parse_support("1,1").is_err());
    }
}
