//! Run configuration: defaults, then a `key = value` file, then flags.

use std::collections::BTreeSet;
use std::path::PathBuf;

use fockmult::counterexamples::DEFAULT_SIGMA_RADII;
use fockmult::oracle::{DEFAULT_ANGLES, DEFAULT_RADIAL_NODES};
use fockmult::symbols::{format_complex, parse_complex};
use fockmult::verify::{default_grid, DEFAULT_PK_POWERS};
use fockmult::GaussWeight;
use num_complex::Complex64;
use serde::{Serialize, Serializer};

/// Every key accepted by the config file, spelled as its flag.
pub const KEYS: &[&str] = &[
    "r", "N", "tol", "grid", "pk-powers", "radial-nodes", "angles", "depth", "format", "out", "family", "A", "B", "M",
    "k", "j", "w", "a", "R",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    K,
    Pk,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub r: f64,
    #[serde(rename = "N")]
    pub degree: usize,
    pub tol: f64,
    #[serde(serialize_with = "complex_strings")]
    pub grid: Vec<Complex64>,
    #[serde(rename = "pk-powers")]
    pub pk_powers: usize,
    #[serde(rename = "radial-nodes")]
    pub radial_nodes: usize,
    pub angles: usize,
    /// Coefficients inspected by `classify`.
    pub depth: usize,
    pub format: Format,
    pub out: Option<PathBuf>,
    pub family: Family,
    #[serde(rename = "A")]
    pub op_a: Option<String>,
    #[serde(rename = "B")]
    pub op_b: Option<String>,
    #[serde(rename = "M")]
    pub terms: usize,
    pub k: usize,
    pub j: usize,
    #[serde(serialize_with = "complex_string")]
    pub w: Complex64,
    pub a: f64,
    #[serde(rename = "R")]
    pub radii: Vec<f64>,
}

fn complex_string<S: Serializer>(c: &Complex64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_complex(*c))
}

fn complex_strings<S: Serializer>(cs: &[Complex64], s: S) -> Result<S::Ok, S::Error> {
    s.collect_seq(cs.iter().map(|c| format_complex(*c)))
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            r: 1.0,
            degree: 64,
            tol: 1e-8,
            grid: default_grid(),
            pk_powers: DEFAULT_PK_POWERS,
            radial_nodes: DEFAULT_RADIAL_NODES,
            angles: DEFAULT_ANGLES,
            depth: 400,
            format: Format::Json,
            out: None,
            family: Family::K,
            op_a: None,
            op_b: None,
            terms: 10_000,
            k: 0,
            j: 0,
            w: Complex64::new(0.8, 0.0),
            a: 0.5,
            radii: DEFAULT_SIGMA_RADII.to_vec(),
        }
    }
}

fn positive_f64(key: &str, v: &str) -> Result<f64, String> {
    match v.parse::<f64>() {
        Ok(x) if x.is_finite() && x > 0.0 => Ok(x),
        _ => Err(format!("{key}: expected a positive number, got {v:?}")),
    }
}

fn count(key: &str, v: &str, min: usize) -> Result<usize, String> {
    match v.parse::<usize>() {
        Ok(x) if x >= min => Ok(x),
        _ => Err(format!("{key}: expected an integer ≥ {min}, got {v:?}")),
    }
}

impl RunConfig {
    pub fn set(&mut self, key: &str, v: &str) -> Result<(), String> {
        match key {
            "r" => self.r = positive_f64(key, v)?,
            "N" => self.degree = count(key, v, 1)?,
            "tol" => self.tol = positive_f64(key, v)?,
            "grid" => {
                let grid = v
                    .split(',')
                    .map(|s| parse_complex(s).map_err(|e| format!("grid: {e}")))
                    .collect::<Result<Vec<_>, _>>()?;
                if grid.is_empty() {
                    return Err("grid: empty".into());
                }
                self.grid = grid;
            }
            "pk-powers" => self.pk_powers = count(key, v, 0)?,
            "radial-nodes" => self.radial_nodes = count(key, v, 1)?,
            "angles" => self.angles = count(key, v, 1)?,
            "depth" => self.depth = count(key, v, 50)?,
            "format" => {
                self.format = match v {
                    "json" => Format::Json,
                    "csv" => Format::Csv,
                    _ => return Err(format!("format: expected json or csv, got {v:?}")),
                }
            }
            "out" => self.out = Some(PathBuf::from(v)),
            "family" => {
                self.family = match v {
                    "k" | "K" => Family::K,
                    "pk" | "PK" => Family::Pk,
                    _ => return Err(format!("family: expected k or pk, got {v:?}")),
                }
            }
            "A" => self.op_a = Some(v.to_string()),
            "B" => self.op_b = Some(v.to_string()),
            "M" => self.terms = count(key, v, 1)?,
            "k" => self.k = count(key, v, 0)?,
            "j" => self.j = count(key, v, 0)?,
            "w" => self.w = parse_complex(v).map_err(|e| format!("w: {e}"))?,
            "a" => {
                self.a = v.parse::<f64>().ok().filter(|x| x.is_finite()).ok_or_else(|| format!("a: expected a real number, got {v:?}"))?
            }
            "R" => {
                let radii = v.split(',').map(|s| positive_f64("R", s)).collect::<Result<Vec<_>, _>>()?;
                if radii.len() < 2 || radii[0] <= 1.0 || radii.windows(2).any(|p| p[1] <= p[0]) {
                    return Err(format!("R: need at least two increasing radii above 1, got {v:?}"));
                }
                self.radii = radii;
            }
            _ => return Err(format!("unknown key {key:?}; known keys: {}", KEYS.join(", "))),
        }
        Ok(())
    }

    /// Defaults, overridden by `file` pairs, overridden by `flags`.
    pub fn resolve(file: &[(String, String)], flags: &[(&str, String)]) -> Result<Self, String> {
        let mut cfg = Self::default();
        for (k, v) in file {
            cfg.set(k, v)?;
        }
        for (k, v) in flags {
            cfg.set(k, v)?;
        }
        Ok(cfg)
    }

    pub fn weight(&self) -> GaussWeight {
        GaussWeight::new(self.r).expect("r validated on input")
    }
}

/// `key = value` lines; `#` starts a comment. Duplicate and unknown keys are errors.
pub fn parse_config_file(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut seen = BTreeSet::new();
    let mut pairs = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`, got {raw:?}", i + 1))?;
        let (k, v) = (k.trim(), v.trim());
        if !KEYS.contains(&k) {
            return Err(format!("line {}: unknown key {k:?}", i + 1));
        }
        if !seen.insert(k.to_string()) {
            return Err(format!("line {}: duplicate key {k:?}", i + 1));
        }
        pairs.push((k.to_string(), v.to_string()));
    }
    Ok(pairs)
}
