//! `key = value` run configuration with `#` comments.

use std::path::PathBuf;

use num_complex::Complex;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("unknown key `{0}`")]
    UnknownKey(String),
    #[error("bad value for `{key}`: {detail}")]
    Value { key: String, detail: String },
    #[error("no preset given (set `preset = ...` or pass --preset)")]
    MissingPreset,
    #[error("cannot read config: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Preset {
    Gerstner,
    Kirchhoff,
    Family1,
    Family2,
    Family3,
    EllipticInverse,
}

impl Preset {
    fn parse(s: &str) -> Option<Self> {
        Some(match s {
            "gerstner" => Preset::Gerstner,
            "kirchhoff" => Preset::Kirchhoff,
            "family1" => Preset::Family1,
            "family2" => Preset::Family2,
            "family3" => Preset::Family3,
            "elliptic-inverse" => Preset::EllipticInverse,
            _ => return None,
        })
    }
}

/// Everything a `flow` run needs. Unset values fall back to per-preset
/// defaults.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub preset: Preset,
    pub k: f64,
    pub s0: f64,
    pub mu0: f64,
    pub mu: f64,
    pub theta: f64,
    /// Initial geodesic state `(s, μ, θ, s', μ', θ')`.
    pub x0: [f64; 6],
    /// Coefficients of the holomorphic polynomial for CR pairs.
    pub poly: Option<Vec<Complex<f64>>>,
    pub reflect: [bool; 2],
    pub grid: [usize; 2],
    /// `(start, step, end)`.
    pub t: Option<(f64, f64, f64)>,
    pub labels: [usize; 2],
    /// Number of times at which the costlier checks run.
    pub check_times: usize,
    pub tol_euler: f64,
    pub tol_det: f64,
    pub tol_curl: f64,
    /// Defaults to 1e-6 for the elliptic solve and 1e-3 for the
    /// (second-order) discrete transport residual.
    pub tol_residual: Option<f64>,
    pub out: Option<PathBuf>,
}

/// Raw assignments in the order given, later ones winning.
#[derive(Clone, Debug, Default)]
pub struct Assignments(pub Vec<(String, String)>);

impl Assignments {
    pub fn parse_text(text: &str) -> Result<Self, ConfigError> {
        let mut out = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or(ConfigError::Syntax { line: i + 1 })?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        Ok(Assignments(out))
    }

    pub fn push(&mut self, key: &str, value: impl ToString) {
        self.0.push((key.to_string(), value.to_string()));
    }
}

fn bad(key: &str, detail: impl ToString) -> ConfigError {
    ConfigError::Value {
        key: key.to_string(),
        detail: detail.to_string(),
    }
}

fn num(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x: f64 = v
        .parse()
        .map_err(|_| bad(key, format!("`{v}` is not a number")))?;
    if x.is_finite() {
        Ok(x)
    } else {
        Err(bad(key, "must be finite"))
    }
}

fn positive(key: &str, v: &str) -> Result<f64, ConfigError> {
    let x = num(key, v)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(bad(key, "tolerances must be positive"))
    }
}

fn dims(key: &str, v: &str) -> Result<[usize; 2], ConfigError> {
    let (a, b) = v
        .split_once('x')
        .ok_or_else(|| bad(key, "expected `N1xN2`"))?;
    let p = |s: &str| {
        s.trim()
            .parse::<usize>()
            .map_err(|_| bad(key, format!("`{s}` is not a count")))
    };
    let d = [p(a)?, p(b)?];
    if d[0] < 3 || d[1] < 3 {
        return Err(bad(key, "at least 3 nodes per axis"));
    }
    Ok(d)
}

fn boolean(key: &str, v: &str) -> Result<bool, ConfigError> {
    match v {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(bad(key, "expected true or false")),
    }
}

/// `re,im; re,im; ...` from the constant term up.
fn polynomial(key: &str, v: &str) -> Result<Vec<Complex<f64>>, ConfigError> {
    let mut out = Vec::new();
    for part in v.split(';').map(str::trim).filter(|s| !s.is_empty()) {
        let (re, im) = part.split_once(',').unwrap_or((part, "0"));
        out.push(Complex::new(num(key, re.trim())?, num(key, im.trim())?));
    }
    if out.is_empty() {
        return Err(bad(key, "no coefficients"));
    }
    Ok(out)
}

fn time_range(key: &str, v: &str) -> Result<(f64, f64, f64), ConfigError> {
    let parts: Vec<&str> = v.split(':').collect();
    if parts.len() != 3 {
        return Err(bad(key, "expected start:step:end"));
    }
    let (a, h, b) = (
        num(key, parts[0])?,
        num(key, parts[1])?,
        num(key, parts[2])?,
    );
    if !(h > 0.0 && b > a) {
        return Err(bad(key, "need step > 0 and end > start"));
    }
    Ok((a, h, b))
}

impl RunConfig {
    pub fn from_assignments(a: &Assignments) -> Result<Self, ConfigError> {
        let mut preset = None;
        let mut c = RunConfig {
            preset: Preset::Gerstner,
            k: 1.0,
            s0: 0.5,
            mu0: 1.0,
            mu: 1.0,
            theta: 2.0,
            x0: [0.5, 0.0, 0.0, 0.3, 1.0, 0.7],
            poly: None,
            reflect: [false, false],
            grid: [64, 64],
            t: None,
            labels: [8, 8],
            check_times: 5,
            tol_euler: 1e-6,
            tol_det: 1e-8,
            tol_curl: 1e-6,
            tol_residual: None,
            out: None,
        };
        for (k, v) in &a.0 {
            let v = v.as_str();
            match k.as_str() {
                "preset" | "family" => {
                    preset = Some(
                        Preset::parse(v).ok_or_else(|| bad(k, format!("unknown preset `{v}`")))?,
                    )
                }
                "k" => c.k = num(k, v)?,
                "s0" => c.s0 = num(k, v)?,
                "mu0" => c.mu0 = num(k, v)?,
                "mu" => c.mu = num(k, v)?,
                "theta" => c.theta = num(k, v)?,
                "x0" => {
                    let xs: Vec<f64> = v
                        .split(',')
                        .map(|s| num(k, s.trim()))
                        .collect::<Result<_, _>>()?;
                    c.x0 = xs.try_into().map_err(|_| bad(k, "expected six numbers"))?;
                }
                "poly" => c.poly = Some(polynomial(k, v)?),
                "reflect1" => c.reflect[0] = boolean(k, v)?,
                "reflect2" => c.reflect[1] = boolean(k, v)?,
                "grid" => c.grid = dims(k, v)?,
                "t" => c.t = Some(time_range(k, v)?),
                "labels" => c.labels = dims(k, v)?,
                "check_times" => {
                    c.check_times = v.parse().map_err(|_| bad(k, "expected a count"))?;
                    if c.check_times < 1 {
                        return Err(bad(k, "at least one"));
                    }
                }
                "tol_euler" => c.tol_euler = positive(k, v)?,
                "tol_det" => c.tol_det = positive(k, v)?,
                "tol_curl" => c.tol_curl = positive(k, v)?,
                "tol_residual" => c.tol_residual = Some(positive(k, v)?),
                "out" => c.out = Some(PathBuf::from(v)),
                _ => return Err(ConfigError::UnknownKey(k.clone())),
            }
        }
        c.preset = preset.ok_or(ConfigError::MissingPreset)?;
        Ok(c)
    }

    /// Sample times of the run.
    pub fn times(&self, default: (f64, f64, f64)) -> Vec<f64> {
        let (a, h, b) = self.t.unwrap_or(default);
        let n = ((b - a) / h + 1e-9).floor() as usize;
        (0..=n).map(|i| a + h * i as f64).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comments_and_overrides() {
        let mut a =
            Assignments::parse_text("# run\npreset = kirchhoff\ns0 = 0.25 # stretch\n\n").unwrap();
        a.push("s0", 0.75);
        let c = RunConfig::from_assignments(&a).unwrap();
        assert_eq!(c.preset, Preset::Kirchhoff);
        assert_eq!(c.s0, 0.75);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_tolerances() {
        let a = Assignments::parse_text("preset = gerstner\ncolour = blue").unwrap();
        assert!(matches!(
            RunConfig::from_assignments(&a),
            Err(ConfigError::UnknownKey(_))
        ));
        let a = Assignments::parse_text("preset = gerstner\ntol_det = 0").unwrap();
        assert!(matches!(
            RunConfig::from_assignments(&a),
            Err(ConfigError::Value { .. })
        ));
        assert!(matches!(
            Assignments::parse_text("nonsense"),
            Err(ConfigError::Syntax { line: 1 })
        ));
    }

    #[test]
    fn time_ranges_and_polynomials() {
        let a = Assignments::parse_text("preset = family2\nt = 0:0.5:2\npoly = 0,0; 1,0.5; 0.2")
            .unwrap();
        let c = RunConfig::from_assignments(&a).unwrap();
        assert_eq!(c.times((0.0, 1.0, 1.0)), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert_eq!(c.poly.unwrap()[2], Complex::new(0.2, 0.0));
    }
}
