use std::str::FromStr;

use serde_json::Value;

use crate::error::CliError;

/// `x` rounded to 12 significant digits, printed in shortest form.
pub fn num12(x: f64) -> String {
    if !x.is_finite() {
        return x.to_string();
    }
    round12(x).to_string()
}

fn round12(x: f64) -> f64 {
    format!("{x:.11e}").parse().expect("formatted float parses")
}

/// JSON number with 12 significant digits; non-finite values become null.
pub fn json12(x: f64) -> Value {
    serde_json::Number::from_f64(round12_or_nan(x)).map_or(Value::Null, Value::Number)
}

fn round12_or_nan(x: f64) -> f64 {
    if x.is_finite() {
        round12(x)
    } else {
        f64::NAN
    }
}

pub fn json12_opt(x: Option<f64>) -> Value {
    x.map_or(Value::Null, json12)
}

/// `start:step:count` with `start, step >= 0` and `count >= 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridSpec {
    pub start: f64,
    pub step: f64,
    pub count: usize,
}

impl GridSpec {
    pub fn values(&self) -> Vec<f64> {
        (0..self.count)
            .map(|k| self.start + self.step * k as f64)
            .collect()
    }
}

impl FromStr for GridSpec {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        let bad = || CliError::Input(format!("grid spec '{s}' must look like start:step:count"));
        let parts: Vec<&str> = s.split(':').collect();
        let [start, step, count] = parts[..] else {
            return Err(bad());
        };
        let start: f64 = start.trim().parse().map_err(|_| bad())?;
        let step: f64 = step.trim().parse().map_err(|_| bad())?;
        let count: usize = count.trim().parse().map_err(|_| bad())?;
        if !(start >= 0.0 && step >= 0.0 && start.is_finite() && step.is_finite()) || count == 0 {
            return Err(CliError::Input(format!(
                "grid spec '{s}' needs start >= 0, step >= 0 and count >= 1"
            )));
        }
        Ok(Self { start, step, count })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(num12(1.0 / 3.0), "0.333333333333");
        assert_eq!(num12(1.24), "1.24");
        assert_eq!(num12(2.0), "2");
        assert_eq!(json12(f64::INFINITY), Value::Null);
    }

    #[test]
    fn grid_specs() {
        let g: GridSpec = "0.01:2000:21".parse().unwrap();
        let v = g.values();
        assert_eq!(v.len(), 21);
        assert_eq!(v[20], 0.01 + 40000.0);
        assert!("1:2".parse::<GridSpec>().is_err());
        assert!("1:-2:3".parse::<GridSpec>().is_err());
        assert!("1:2:0".parse::<GridSpec>().is_err());
    }
}
