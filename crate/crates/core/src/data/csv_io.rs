use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dataset::Dataset;
use crate::error::{Error, Result};

/// Row count of the five concatenated gas-turbine yearly files.
pub const GAS_TURBINE_ROWS: usize = 36_733;

/// Maps delimited text columns to features and target.
///
/// Without a header, columns are addressed by zero-based position written
/// as a decimal string (`"0"`, `"1"`, ...).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub feature_columns: Vec<String>,
    pub target_column: String,
    #[serde(default = "default_delimiter")]
    pub delimiter: char,
    #[serde(default = "default_header")]
    pub has_header: bool,
}

fn default_delimiter() -> char {
    ','
}

fn default_header() -> bool {
    true
}

impl CsvSchema {
    /// CO task on the UCI gas-turbine files: the nine process variables
    /// plus NOx as inputs, CO as target.
    pub fn gas_turbine_co() -> Self {
        Self {
            feature_columns: ["AT", "AP", "AH", "AFDP", "GTEP", "TIT", "TAT", "TEY", "CDP", "NOX"]
                .iter()
                .map(|s| s.to_string())
                .collect(),
            target_column: "CO".into(),
            delimiter: ',',
            has_header: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.feature_columns.is_empty() {
            return Err(Error::Config("schema lists no feature columns".into()));
        }
        if self.feature_columns.contains(&self.target_column) {
            return Err(Error::Config(format!(
                "target column {} is also listed as a feature",
                self.target_column
            )));
        }
        let mut names = self.feature_columns.clone();
        names.sort();
        if let Some(w) = names.windows(2).find(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate feature column {}", w[0])));
        }
        if !self.delimiter.is_ascii() {
            return Err(Error::Config("delimiter must be a single ASCII character".into()));
        }
        Ok(())
    }

    fn column_position(&self, header: Option<&csv::StringRecord>, name: &str, path: &Path) -> Result<usize> {
        let missing = || Error::MissingColumn {
            path: path.to_path_buf(),
            column: name.to_string(),
        };
        match header {
            Some(h) => h.iter().position(|c| c.trim() == name).ok_or_else(missing),
            None => name.parse::<usize>().map_err(|_| missing()),
        }
    }
}

/// Replaces each directory in `paths` by its `*.csv` files in filename order.
pub fn expand_paths(paths: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in paths {
        if p.is_dir() {
            let mut files: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Error::io(p, e))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|f| f.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
                .collect();
            files.sort();
            out.extend(files);
        } else {
            out.push(p.clone());
        }
    }
    Ok(out)
}

/// Loads and concatenates delimited files in the order given.
///
/// Features are stored as `f32`, targets as `f64`. Non-numeric or non-finite
/// cells are rejected with their file, row (1-based, data rows only) and column.
pub fn load_csv(paths: &[PathBuf], schema: &CsvSchema, expected_rows: Option<usize>) -> Result<Dataset> {
    schema.validate()?;
    if paths.is_empty() {
        return Err(Error::Config("no input files".into()));
    }
    let n_features = schema.feature_columns.len();
    let mut features = Vec::new();
    let mut targets = Vec::new();

    for path in paths {
        let mut reader = csv::ReaderBuilder::new()
            .delimiter(schema.delimiter as u8)
            .has_headers(schema.has_header)
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| match e.into_kind() {
                csv::ErrorKind::Io(io) => Error::io(path, io),
                other => Error::Parse {
                    path: path.clone(),
                    row: 0,
                    column: String::new(),
                    message: format!("{other:?}"),
                },
            })?;
        let header = if schema.has_header {
            Some(reader.headers()?.clone())
        } else {
            None
        };
        let feature_pos = schema
            .feature_columns
            .iter()
            .map(|c| schema.column_position(header.as_ref(), c, path))
            .collect::<Result<Vec<_>>>()?;
        let target_pos = schema.column_position(header.as_ref(), &schema.target_column, path)?;

        for (r, record) in reader.records().enumerate() {
            let record = record?;
            let row = r + 1;
            let cell = |pos: usize, name: &str| -> Result<f64> {
                let raw = record.get(pos).ok_or_else(|| Error::Parse {
                    path: path.clone(),
                    row,
                    column: name.to_string(),
                    message: "row is too short".into(),
                })?;
                let v: f64 = raw.parse().map_err(|_| Error::Parse {
                    path: path.clone(),
                    row,
                    column: name.to_string(),
                    message: format!("not a number: {raw:?}"),
                })?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: path.clone(),
                        row,
                        column: name.to_string(),
                        message: format!("non-finite value {raw:?}"),
                    });
                }
                Ok(v)
            };
            for (&pos, name) in feature_pos.iter().zip(&schema.feature_columns) {
                let v = cell(pos, name)? as f32;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        path: path.clone(),
                        row,
                        column: name.clone(),
                        message: "value overflows 32-bit float".into(),
                    });
                }
                features.push(v);
            }
            targets.push(cell(target_pos, &schema.target_column)?);
        }
    }

    if let Some(expected) = expected_rows {
        if targets.len() != expected {
            return Err(Error::RowCount {
                expected,
                found: targets.len(),
            });
        }
    }
    Dataset::new(features, n_features, targets, schema.feature_columns.clone())
}

/// JSON sidecar written next to a cached dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CacheSidecar {
    pub schema: CsvSchema,
    pub rows: usize,
    pub sha256: String,
}

pub const CACHE_TARGET_COLUMN: &str = "target";

fn sidecar_path(csv_path: &Path) -> PathBuf {
    let mut s = csv_path.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Writes `data` as canonical CSV (feature columns then `target`) plus a
/// `<file>.json` sidecar holding schema, row count and SHA-256 of the CSV.
///
/// Values are printed in shortest round-trip form, so reloading is bit-exact.
pub fn write_cache(data: &Dataset, path: &Path) -> Result<CacheSidecar> {
    let mut body = String::new();
    body.push_str(&data.feature_names().join(","));
    body.push(',');
    body.push_str(CACHE_TARGET_COLUMN);
    body.push('\n');
    for (row, y) in data.rows().zip(data.targets()) {
        for v in row {
            body.push_str(&v.to_string());
            body.push(',');
        }
        body.push_str(&y.to_string());
        body.push('\n');
    }
    let sidecar = CacheSidecar {
        schema: CsvSchema {
            feature_columns: data.feature_names().to_vec(),
            target_column: CACHE_TARGET_COLUMN.into(),
            delimiter: ',',
            has_header: true,
        },
        rows: data.len(),
        sha256: hex::encode(Sha256::digest(body.as_bytes())),
    };
    fs::write(path, &body).map_err(|e| Error::io(path, e))?;
    let side = sidecar_path(path);
    fs::write(&side, serde_json::to_string_pretty(&sidecar)?).map_err(|e| Error::io(&side, e))?;
    Ok(sidecar)
}

/// Loads a cache written by [`write_cache`], verifying digest and row count.
pub fn read_cache(path: &Path) -> Result<Dataset> {
    let side = sidecar_path(path);
    let sidecar: CacheSidecar = serde_json::from_slice(&fs::read(&side).map_err(|e| Error::io(&side, e))?)?;
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let digest = hex::encode(Sha256::digest(&bytes));
    if digest != sidecar.sha256 {
        return Err(Error::Integrity {
            path: path.to_path_buf(),
            message: format!("digest {digest} does not match sidecar {}", sidecar.sha256),
        });
    }
    load_csv(&[path.to_path_buf()], &sidecar.schema, Some(sidecar.rows))
}
