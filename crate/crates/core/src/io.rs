//! Series ingestion (`day,value` CSV) and the flat `key = value` model file.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::estimation::TimeSeries;
use crate::jumps::JumpMeasure;
use crate::mixing::{Atom, MixingMeasure};
use crate::process::SupJcirModel;

/// Parse a CSV with header `day,value`; `#` lines are comments.
pub fn parse_series_csv(text: &str, name: &str) -> Result<TimeSeries> {
    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let headers = reader
        .headers()
        .map_err(|e| Error::InvalidInput(format!("{name}: unreadable header: {e}")))?
        .clone();
    let cols: Vec<&str> = headers.iter().collect();
    if cols != ["day", "value"] {
        return Err(Error::InvalidInput(format!(
            "{name}: header must be 'day,value', got '{}'",
            cols.join(",")
        )));
    }
    let mut times = Vec::new();
    let mut values = Vec::new();
    for record in reader.records() {
        let record = record.map_err(|e| Error::InvalidInput(format!("{name}: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        if record.len() != 2 {
            return Err(Error::InvalidInput(format!(
                "{name}: line {line}: expected 2 columns, found {}",
                record.len()
            )));
        }
        let mut row = [0.0; 2];
        for (col, (cell, slot)) in record.iter().zip(row.iter_mut()).enumerate() {
            *slot = cell.parse().map_err(|_| {
                Error::InvalidInput(format!(
                    "{name}: line {line}, column {} ({}): '{cell}' is not a number",
                    col + 1,
                    cols[col]
                ))
            })?;
        }
        times.push(row[0]);
        values.push(row[1]);
    }
    TimeSeries::new(times, values, name)
}

pub fn read_series_csv(path: &Path) -> Result<TimeSeries> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
    parse_series_csv(&text, &path.display().to_string())
}

pub fn write_series_csv(series: &TimeSeries) -> String {
    let mut out = String::from("day,value\n");
    for (t, v) in series.times.iter().zip(&series.values) {
        let _ = writeln!(out, "{t},{v}");
    }
    out
}

/// Where a fitted model came from.
#[derive(Debug, Clone, PartialEq)]
pub struct FitProvenance {
    pub y: f64,
    pub error_metric: f64,
    pub include_skew: bool,
    /// SHA-256 of the input series file, hex encoded.
    pub data_sha256: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: SupJcirModel,
    pub provenance: Option<FitProvenance>,
}

fn join(values: impl Iterator<Item = f64>) -> String {
    values.map(|v| v.to_string()).collect::<Vec<_>>().join(", ")
}

impl ModelFile {
    pub fn new(model: SupJcirModel) -> Self {
        Self {
            model,
            provenance: None,
        }
    }

    /// Fixed key order; floats in shortest round-trip form.
    pub fn to_text(&self) -> String {
        let m = &self.model;
        let mut out = String::from("# supjcir model\n");
        let _ = writeln!(out, "a = {}", m.a);
        let _ = writeln!(out, "sigma = {}", m.sigma);
        match m.jumps {
            JumpMeasure::None => out.push_str("jump.variant = none\n"),
            JumpMeasure::Exponential { mu, beta } => {
                out.push_str("jump.variant = exponential\n");
                let _ = writeln!(out, "jump.mu = {mu}");
                let _ = writeln!(out, "jump.beta = {beta}");
            }
            JumpMeasure::TemperedStable { gamma, beta, alpha } => {
                out.push_str("jump.variant = tempered_stable\n");
                let _ = writeln!(out, "jump.gamma = {gamma}");
                let _ = writeln!(out, "jump.beta = {beta}");
                let _ = writeln!(out, "jump.alpha = {alpha}");
            }
        }
        match &m.mixing {
            MixingMeasure::Gamma { omega, theta } => {
                out.push_str("mixing.variant = gamma\n");
                let _ = writeln!(out, "mixing.omega = {omega}");
                let _ = writeln!(out, "mixing.theta = {theta}");
            }
            MixingMeasure::Discrete { atoms } => {
                out.push_str("mixing.variant = discrete\n");
                let _ = writeln!(
                    out,
                    "mixing.weights = {}",
                    join(atoms.iter().map(|a| a.weight))
                );
                let _ = writeln!(out, "mixing.rates = {}", join(atoms.iter().map(|a| a.rate)));
            }
        }
        if let Some(p) = &self.provenance {
            let _ = writeln!(out, "fit.y = {}", p.y);
            let _ = writeln!(out, "fit.error_metric = {}", p.error_metric);
            let _ = writeln!(out, "fit.include_skew = {}", p.include_skew);
            let _ = writeln!(out, "fit.data_sha256 = {}", p.data_sha256);
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, String, usize)> = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidInput(format!("model file line {}: expected 'key = value'", i + 1))
            })?;
            let key = k.trim().to_string();
            if entries.iter().any(|(e, _, _)| *e == key) {
                return Err(Error::InvalidInput(format!(
                    "model file line {}: duplicate key '{key}'",
                    i + 1
                )));
            }
            entries.push((key, v.trim().to_string(), i + 1));
        }
        let get = |key: &str| -> Result<&str> {
            entries
                .iter()
                .find(|(k, _, _)| k == key)
                .map(|(_, v, _)| v.as_str())
                .ok_or_else(|| Error::InvalidInput(format!("model file is missing '{key}'")))
        };
        let num = |key: &str| -> Result<f64> {
            let v = get(key)?;
            v.parse().map_err(|_| {
                Error::InvalidInput(format!("model file key '{key}': '{v}' is not a number"))
            })
        };
        let list = |key: &str| -> Result<Vec<f64>> {
            get(key)?
                .split(',')
                .map(|s| {
                    s.trim().parse().map_err(|_| {
                        Error::InvalidInput(format!(
                            "model file key '{key}': '{}' is not a number",
                            s.trim()
                        ))
                    })
                })
                .collect()
        };

        let jumps = match get("jump.variant")? {
            "none" => JumpMeasure::None,
            "exponential" => JumpMeasure::exponential(num("jump.mu")?, num("jump.beta")?)?,
            "tempered_stable" => JumpMeasure::tempered_stable(
                num("jump.gamma")?,
                num("jump.beta")?,
                num("jump.alpha")?,
            )?,
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown jump.variant '{other}'"
                )))
            }
        };
        let mixing = match get("mixing.variant")? {
            "gamma" => MixingMeasure::gamma(num("mixing.omega")?, num("mixing.theta")?)?,
            "discrete" => {
                let weights = list("mixing.weights")?;
                let rates = list("mixing.rates")?;
                if weights.len() != rates.len() {
                    return Err(Error::invalid(
                        "mixing.atoms",
                        format!("{} weights but {} rates", weights.len(), rates.len()),
                    ));
                }
                MixingMeasure::discrete(
                    weights
                        .into_iter()
                        .zip(rates)
                        .map(|(weight, rate)| Atom { weight, rate })
                        .collect(),
                )?
            }
            other => {
                return Err(Error::InvalidInput(format!(
                    "unknown mixing.variant '{other}'"
                )))
            }
        };
        let model = SupJcirModel::new(num("a")?, num("sigma")?, jumps, mixing)?;
        let provenance = if entries.iter().any(|(k, _, _)| k.starts_with("fit.")) {
            let include_skew = match get("fit.include_skew")? {
                "true" => true,
                "false" => false,
                other => {
                    return Err(Error::InvalidInput(format!(
                        "fit.include_skew must be true or false, got '{other}'"
                    )))
                }
            };
            Some(FitProvenance {
                y: num("fit.y")?,
                error_metric: num("fit.error_metric")?,
                include_skew,
                data_sha256: get("fit.data_sha256")?.to_string(),
            })
        } else {
            None
        };
        const KNOWN: [&str; 15] = [
            "a",
            "sigma",
            "jump.variant",
            "jump.mu",
            "jump.beta",
            "jump.gamma",
            "jump.alpha",
            "mixing.variant",
            "mixing.omega",
            "mixing.theta",
            "mixing.weights",
            "mixing.rates",
            "fit.y",
            "fit.error_metric",
            "fit.include_skew",
        ];
        if let Some((k, _, line)) = entries
            .iter()
            .find(|(k, _, _)| !KNOWN.contains(&k.as_str()) && k != "fit.data_sha256")
        {
            return Err(Error::InvalidInput(format!(
                "model file line {line}: unknown key '{k}'"
            )));
        }
        Ok(Self { model, provenance })
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::InvalidInput(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_text())
            .map_err(|e| Error::InvalidInput(format!("cannot write {}: {e}", path.display())))
    }
}
