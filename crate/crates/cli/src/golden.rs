//! Row-by-row comparison of a CSV report with a golden file.

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

/// Environment variable naming the directory relative golden paths resolve against.
pub const GOLDEN_DIR_ENV: &str = "NONLOCAL_BBM_GOLDEN_DIR";

/// Columns that identify a row when both files have them.
const KEY_COLUMNS: [&str; 3] = ["case_id", "alpha", "point"];

/// Accept `|a - b| <= abs + rel * max(|a|, |b|)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance {
            rel: 1e-9,
            abs: 1e-15,
        }
    }
}

impl Tolerance {
    fn accepts(&self, a: f64, b: f64) -> bool {
        if a == b {
            return true;
        }
        (a - b).abs() <= self.abs + self.rel * a.abs().max(b.abs())
    }
}

/// `COLUMN=REL` or `COLUMN=REL:ABS`.
#[derive(Debug, Clone, PartialEq)]
pub struct ColumnTolerance {
    pub column: String,
    pub tolerance: Tolerance,
}

impl FromStr for ColumnTolerance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (column, tol) = s
            .split_once('=')
            .ok_or_else(|| format!("expected COLUMN=REL[:ABS], got {s:?}"))?;
        let num = |t: &str| {
            t.parse::<f64>()
                .ok()
                .filter(|v| *v >= 0.0)
                .ok_or_else(|| format!("invalid tolerance {t:?} in {s:?}"))
        };
        let tolerance = match tol.split_once(':') {
            Some((rel, abs)) => Tolerance {
                rel: num(rel)?,
                abs: num(abs)?,
            },
            None => Tolerance {
                rel: num(tol)?,
                abs: Tolerance::default().abs,
            },
        };
        Ok(ColumnTolerance {
            column: column.to_string(),
            tolerance,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Mismatch {
    MissingRow {
        key: String,
    },
    Value {
        key: String,
        column: String,
        report: String,
        golden: String,
    },
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mismatch::MissingRow { key } => write!(f, "missing row {key}"),
            Mismatch::Value {
                key,
                column,
                report,
                golden,
            } => write!(
                f,
                "row {key}, column {column}: report {report:?} vs golden {golden:?}"
            ),
        }
    }
}

struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

fn read_table(path: &Path) -> Result<Table, String> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(path)
        .map_err(|e| format!("{}: {e}", path.display()))?;
    let header = reader
        .headers()
        .map_err(|e| format!("{}: {e}", path.display()))?
        .iter()
        .map(str::to_string)
        .collect::<Vec<_>>();
    if !header.iter().any(|h| h == "case_id") {
        return Err(format!("{}: no case_id column", path.display()));
    }
    let rows = reader
        .records()
        .map(|r| {
            r.map(|r| r.iter().map(str::to_string).collect())
                .map_err(|e| format!("{}: {e}", path.display()))
        })
        .collect::<Result<_, _>>()?;
    Ok(Table { header, rows })
}

/// Resolves a relative golden path against the directory in [`GOLDEN_DIR_ENV`].
pub fn resolve_golden(path: &Path) -> PathBuf {
    match std::env::var_os(GOLDEN_DIR_ENV) {
        Some(dir) if path.is_relative() => Path::new(&dir).join(path),
        _ => path.to_path_buf(),
    }
}

fn keyed(table: &Table, keys: &[usize], path: &Path) -> Result<HashMap<String, usize>, String> {
    let mut map = HashMap::new();
    for (i, row) in table.rows.iter().enumerate() {
        let key = keys
            .iter()
            .map(|&k| row[k].as_str())
            .collect::<Vec<_>>()
            .join(" | ");
        if map.insert(key.clone(), i).is_some() {
            return Err(format!("{}: duplicate row {key}", path.display()));
        }
    }
    Ok(map)
}

/// Mismatches of `report` against `golden`; `Err` when either file cannot be parsed.
pub fn compare_files(
    report: &Path,
    golden: &Path,
    tolerances: &[ColumnTolerance],
) -> Result<Vec<Mismatch>, String> {
    let rep = read_table(report)?;
    let gold = read_table(golden)?;
    let index = |t: &Table, c: &str| t.header.iter().position(|h| h == c);
    let keys: Vec<&str> = KEY_COLUMNS
        .iter()
        .copied()
        .filter(|c| index(&rep, c).is_some() && index(&gold, c).is_some())
        .collect();
    let rep_keys: Vec<usize> = keys.iter().map(|c| index(&rep, c).unwrap()).collect();
    let gold_keys: Vec<usize> = keys.iter().map(|c| index(&gold, c).unwrap()).collect();
    let rep_map = keyed(&rep, &rep_keys, report)?;
    keyed(&gold, &gold_keys, golden)?;

    let tol: BTreeMap<&str, Tolerance> = tolerances
        .iter()
        .map(|t| (t.column.as_str(), t.tolerance))
        .collect();
    let mut compared = Vec::new();
    for (gi, name) in gold.header.iter().enumerate() {
        if keys.contains(&name.as_str()) {
            continue;
        }
        let ri =
            index(&rep, name).ok_or_else(|| format!("{}: no column {name}", report.display()))?;
        compared.push((
            name.as_str(),
            gi,
            ri,
            tol.get(name.as_str()).copied().unwrap_or_default(),
        ));
    }

    let mut out = Vec::new();
    for grow in &gold.rows {
        let key = gold_keys
            .iter()
            .map(|&k| grow[k].as_str())
            .collect::<Vec<_>>()
            .join(" | ");
        let Some(&ri) = rep_map.get(&key) else {
            out.push(Mismatch::MissingRow { key });
            continue;
        };
        let rrow = &rep.rows[ri];
        for &(name, gi, rci, t) in &compared {
            let (a, b) = (rrow[rci].as_str(), grow[gi].as_str());
            let ok = match (a.parse::<f64>(), b.parse::<f64>()) {
                (Ok(x), Ok(y)) => t.accepts(x, y),
                _ => a == b,
            };
            if !ok {
                out.push(Mismatch::Value {
                    key: key.clone(),
                    column: name.to_string(),
                    report: a.to_string(),
                    golden: b.to_string(),
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tolerance_parsing() {
        let t: ColumnTolerance = "value=1e-6".parse().unwrap();
        assert_eq!(t.column, "value");
        assert_eq!(t.tolerance.rel, 1e-6);
        let t: ColumnTolerance = "error_estimate=0.5:1e-12".parse().unwrap();
        assert_eq!((t.tolerance.rel, t.tolerance.abs), (0.5, 1e-12));
        assert!("value".parse::<ColumnTolerance>().is_err());
        assert!("value=-1".parse::<ColumnTolerance>().is_err());
    }

    #[test]
    fn tolerance_acceptance() {
        let t = Tolerance {
            rel: 1e-9,
            abs: 0.0,
        };
        assert!(t.accepts(1.0, 1.0 + 5e-10));
        assert!(!t.accepts(1.0, 1.0 + 5e-9));
        assert!(t.accepts(0.0, 0.0));
    }
}
