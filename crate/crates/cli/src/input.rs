//! Sample streams on stdin and custom coefficient files.

use std::io::BufRead;
use std::path::Path;

use crate::error::{CliError, CliResult};

fn parse_number(token: &str, line: usize) -> CliResult<f64> {
    let v: f64 = token.parse().map_err(|_| CliError::Input(format!("line {line}: '{token}' is not a number")))?;
    if !v.is_finite() {
        return Err(CliError::Input(format!("line {line}: sample '{token}' is not finite")));
    }
    Ok(v)
}

/// One sample per line. Blank lines are skipped.
pub fn read_samples(input: impl BufRead) -> CliResult<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let mut tokens = t.split_whitespace();
        let v = parse_number(tokens.next().unwrap_or_default(), idx + 1)?;
        if tokens.next().is_some() {
            return Err(CliError::Input(format!(
                "line {}: expected one sample, found several fields (use --gradient for pairs)",
                idx + 1
            )));
        }
        out.push(v);
    }
    Ok(out)
}

/// Pairs as `X g_1 ... g_d` per line; `d` is fixed by the first line.
/// Returns `(dim, xs, gs)` with `gs` row-major.
pub fn read_pairs(input: impl BufRead) -> CliResult<(usize, Vec<f64>, Vec<f64>)> {
    let (mut dim, mut xs, mut gs) = (0, Vec::new(), Vec::new());
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let n = idx + 1;
        if fields.len() < 2 {
            return Err(CliError::Input(format!("line {n}: expected 'X g_1 ... g_d', found a single field")));
        }
        if dim == 0 {
            dim = fields.len() - 1;
        } else if fields.len() - 1 != dim {
            return Err(CliError::Input(format!(
                "line {n}: expected {dim} gradient entries, found {}",
                fields.len() - 1
            )));
        }
        xs.push(parse_number(fields[0], n)?);
        for f in &fields[1..] {
            gs.push(parse_number(f, n)?);
        }
    }
    if dim == 0 {
        return Err(CliError::Input("no pairs on input".into()));
    }
    Ok((dim, xs, gs))
}

/// Custom coefficients: a first line `c=<bound>`, then CSV rows `k,gamma_k`
/// with `k = 0, 1, 2, ...` in order. An optional `k,gamma_k` header row is
/// allowed.
pub fn read_coefficients(path: &Path) -> CliResult<(f64, Vec<f64>)> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read coefficient file {}: {e}", path.display())))?;
    let name = path.display();
    let (first, rest) = text.split_once('\n').unwrap_or((&text, ""));
    let c = first
        .trim()
        .strip_prefix("c=")
        .and_then(|v| v.trim().parse::<f64>().ok())
        .ok_or_else(|| CliError::Input(format!("{name}: line 1 must be 'c=<bound>', got '{}'", first.trim())))?;

    let mut reader = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(rest.as_bytes());
    let mut gammas = Vec::new();
    for row in reader.records() {
        let row = row.map_err(|e| CliError::Input(format!("{name}: {e}")))?;
        let line = row.position().map(|p| p.line() as usize + 1).unwrap_or(0);
        if row.len() != 2 {
            return Err(CliError::Input(format!(
                "{name}: line {line}: expected 'k,gamma_k', got {} fields",
                row.len()
            )));
        }
        if gammas.is_empty() && &row[0] == "k" {
            continue;
        }
        let k: usize = row[0]
            .parse()
            .map_err(|_| CliError::Input(format!("{name}: line {line}: index '{}' is not a count", &row[0])))?;
        if k != gammas.len() {
            return Err(CliError::Input(format!(
                "{name}: line {line}: expected index {}, got {k} (indices must run 0, 1, 2, ... without gaps)",
                gammas.len()
            )));
        }
        gammas.push(parse_number(&row[1], line)?);
    }
    if gammas.is_empty() {
        return Err(CliError::Input(format!("{name}: no coefficients")));
    }
    Ok((c, gammas))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn samples_accept_scientific_notation() {
        let v = read_samples("1.5\n  2e-3\n\n-4E2\n".as_bytes()).unwrap();
        assert_eq!(v, vec![1.5, 2e-3, -400.0]);
    }

    #[test]
    fn malformed_sample_names_the_line() {
        let err = read_samples("1\n2\nabc\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        let err = read_samples("1\nnan\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = read_samples("1 2\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 1"), "{err}");
    }

    #[test]
    fn pairs_fix_their_dimension_on_the_first_line() {
        let (dim, xs, gs) = read_pairs("1 0.1 0.2\n2 0.3 0.4\n".as_bytes()).unwrap();
        assert_eq!((dim, xs, gs), (2, vec![1.0, 2.0], vec![0.1, 0.2, 0.3, 0.4]));
        let err = read_pairs("1 0.1 0.2\n2 0.3\n".as_bytes()).unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
    }

    #[test]
    fn coefficient_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.csv");
        std::fs::write(&path, "c=1\nk,gamma_k\n0,0.5\n1,-1\n2,0.25\n").unwrap();
        assert_eq!(read_coefficients(&path).unwrap(), (1.0, vec![0.5, -1.0, 0.25]));
        std::fs::write(&path, "c=1\n0,0.5\n2,0.25\n").unwrap();
        let err = read_coefficients(&path).unwrap_err();
        assert!(err.to_string().contains("line 3"), "{err}");
        std::fs::write(&path, "0,0.5\n").unwrap();
        assert!(read_coefficients(&path).unwrap_err().to_string().contains("c=<bound>"));
    }
}
