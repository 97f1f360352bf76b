//! Run configuration: a JSON file overlaid by command-line flags.

use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::model::{CavityParams, RawRates};
use crate::optimize::{log_spaced, Scheme};

/// Relative mismatch allowed between an explicit `x` and `g²/κγ`.
const CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(untagged)]
pub enum OneOrMany<T> {
    One(T),
    Many(Vec<T>),
}

impl<T: Clone> OneOrMany<T> {
    pub fn to_vec(&self) -> Vec<T> {
        match self {
            OneOrMany::One(v) => vec![v.clone()],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Clone, Copy, Default, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum Spacing {
    #[default]
    Log,
    Linear,
}

/// Every setting any subcommand reads. Fields left `None` fall back to the
/// subcommand default or are reported as missing.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub scheme: Option<OneOrMany<String>>,
    pub x: Option<OneOrMany<f64>>,
    pub x_min: Option<f64>,
    pub x_max: Option<f64>,
    pub x_points: Option<usize>,
    pub x_spacing: Option<Spacing>,
    pub n: Option<OneOrMany<u32>>,
    pub omega_min: Option<f64>,
    pub omega_max: Option<f64>,
    pub omega_points: Option<usize>,
    pub g: Option<f64>,
    pub kappa_a: Option<f64>,
    pub kappa_b: Option<f64>,
    pub gamma: Option<f64>,
    pub delta: Option<f64>,
    pub g_tilde: Option<f64>,
    pub kappa_tilde: Option<f64>,
    pub eta: Option<OneOrMany<f64>>,
    pub phi: Option<f64>,
    pub n_max: Option<f64>,
    pub f_target: Option<OneOrMany<f64>>,
    pub f_spurious: Option<f64>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub tolerance_scale: Option<f64>,
    pub format: Option<Format>,
    pub out: Option<PathBuf>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($field:ident),* $(,)?) => {
        $( if $top.$field.is_some() { $base.$field = $top.$field; } )*
    };
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("config {}: {e}", path.display())))
    }

    /// Fields set in `top` replace those in `self`.
    pub fn overlay(mut self, top: RunConfig) -> Self {
        overlay!(self, top;
            scheme, x, x_min, x_max, x_points, x_spacing, n, omega_min, omega_max, omega_points,
            g, kappa_a, kappa_b, gamma, delta, g_tilde, kappa_tilde, eta, phi, n_max, f_target,
            f_spurious, seed, samples, tolerance_scale, format, out,
        );
        self
    }

    pub fn format(&self) -> Format {
        self.format.unwrap_or_default()
    }

    pub fn schemes(&self) -> Result<Vec<Scheme>> {
        let names = self
            .scheme
            .as_ref()
            .ok_or_else(|| missing("scheme"))?
            .to_vec();
        if names.is_empty() {
            return Err(Error::Config("scheme list is empty".into()));
        }
        names.iter().map(|s| s.parse()).collect()
    }

    pub fn single_scheme(&self) -> Result<Scheme> {
        single(self.schemes()?, "scheme")
    }

    pub fn etas(&self) -> Result<Vec<f64>> {
        let etas = self.eta.as_ref().map_or(vec![1.0], |e| e.to_vec());
        if etas.is_empty() {
            return Err(Error::Config("eta list is empty".into()));
        }
        for &eta in &etas {
            if !(eta > 0.0 && eta <= 1.0) {
                return Err(Error::Config(format!("eta must lie in (0, 1], got {eta}")));
            }
        }
        Ok(etas)
    }

    pub fn f_targets(&self) -> Result<Vec<f64>> {
        let targets = self
            .f_target
            .as_ref()
            .ok_or_else(|| missing("f_target"))?
            .to_vec();
        if targets.is_empty() {
            return Err(Error::Config("f_target list is empty".into()));
        }
        for &f in &targets {
            if !(f > 0.5 && f < 1.0) {
                return Err(Error::Config(format!(
                    "f_target must lie in (0.5, 1), got {f}"
                )));
            }
        }
        Ok(targets)
    }

    pub fn atoms(&self, default: &[u32]) -> Result<Vec<u32>> {
        let atoms = self.n.as_ref().map_or(default.to_vec(), |n| n.to_vec());
        if atoms.is_empty() {
            return Err(Error::Config("atom-number list is empty".into()));
        }
        Ok(atoms)
    }

    pub fn f_spurious(&self) -> Result<f64> {
        let f = self.f_spurious.unwrap_or(0.0);
        if !(0.0..1.0).contains(&f) {
            return Err(Error::Config(format!(
                "f_spurious must lie in [0, 1), got {f}"
            )));
        }
        Ok(f)
    }

    fn has_raw_rates(&self) -> bool {
        self.g.is_some()
    }

    fn has_x_range(&self) -> bool {
        self.x_min.is_some() || self.x_max.is_some() || self.x_points.is_some()
    }

    /// Cooperativity grid from an explicit list or a range. Strictly
    /// increasing is not required here; callers that need it check.
    pub fn x_grid(&self) -> Result<Vec<f64>> {
        if self.x.is_some() && self.has_x_range() {
            return Err(Error::Config(
                "give either x or x_min/x_max/x_points, not both".into(),
            ));
        }
        let grid = if let Some(x) = &self.x {
            x.to_vec()
        } else if self.has_x_range() {
            let lo = self.x_min.ok_or_else(|| missing("x_min"))?;
            let hi = self.x_max.ok_or_else(|| missing("x_max"))?;
            let points = self.x_points.ok_or_else(|| missing("x_points"))?;
            match self.x_spacing.unwrap_or_default() {
                Spacing::Log => log_spaced(lo, hi, points)?,
                Spacing::Linear => linear(lo, hi, points)?,
            }
        } else {
            return Err(missing("x (or x_min/x_max/x_points, or g)"));
        };
        if grid.is_empty() {
            return Err(Error::Config("x grid is empty".into()));
        }
        if let Some(bad) = grid.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
            return Err(Error::Config(format!(
                "x must be finite and >= 0, got {bad}"
            )));
        }
        Ok(grid)
    }

    pub fn omega_grid(&self) -> Result<Vec<f64>> {
        let lo = self.omega_min.unwrap_or(-5.0);
        let hi = self.omega_max.unwrap_or(5.0);
        let points = self.omega_points.unwrap_or(201);
        linear(lo, hi, points)
    }

    /// Parameter sets, one per cooperativity. With raw rates the single set
    /// they describe is returned (and any explicit `x` must agree with it);
    /// otherwise each `x` is realised with `κa = κb = γ/2` unless mirror
    /// rates are given.
    pub fn param_grid(&self) -> Result<Vec<(f64, CavityParams)>> {
        self.param_grid_or(None)
    }

    /// As [`param_grid`](Self::param_grid), but with `fallback` used when
    /// neither `x` nor raw rates are given.
    pub fn param_grid_or(&self, fallback: Option<Vec<f64>>) -> Result<Vec<(f64, CavityParams)>> {
        let gamma = self.gamma.unwrap_or(1.0);
        let kappa_a = self.kappa_a.unwrap_or(0.5 * gamma);
        let kappa_b = self.kappa_b.unwrap_or(0.5 * gamma);
        let raw = |g: f64| RawRates {
            g,
            kappa_a,
            kappa_b,
            gamma,
            delta: self.delta.unwrap_or(0.0),
            g_tilde: self.g_tilde.unwrap_or(0.0),
            kappa_tilde: self.kappa_tilde.unwrap_or(0.0),
        };
        if self.has_raw_rates() {
            let params = raw(self.g.unwrap_or_default()).normalize()?;
            let x = params.cooperativity();
            if self.x.is_some() || self.has_x_range() {
                let given = self.x_grid()?;
                if given.len() != 1 || (given[0] - x).abs() > CONSISTENCY_TOL * x.max(1.0) {
                    return Err(Error::Config(format!(
                        "x = {given:?} is inconsistent with g²/(κγ) = {x} from the given rates"
                    )));
                }
            }
            return Ok(vec![(x, params)]);
        }
        let xs = match fallback {
            Some(grid) if self.x.is_none() && !self.has_x_range() => grid,
            _ => self.x_grid()?,
        };
        xs.into_iter()
            .map(|x| {
                let kappa = kappa_a + kappa_b;
                let params = raw((x * kappa * gamma).sqrt()).normalize()?;
                Ok((x, params))
            })
            .collect()
    }

    pub fn single_params(&self) -> Result<(f64, CavityParams)> {
        single(self.param_grid()?, "x")
    }

    pub fn phi(&self) -> Result<f64> {
        let phi = self.phi.ok_or_else(|| missing("phi"))?;
        if !(phi > 0.0 && phi < std::f64::consts::FRAC_PI_2) {
            return Err(Error::Config(format!(
                "phi must lie in (0, π/2), got {phi}"
            )));
        }
        Ok(phi)
    }

    pub fn n_max(&self) -> Result<f64> {
        let n_max = self.n_max.ok_or_else(|| missing("n_max"))?;
        if !(n_max.is_finite() && n_max >= 0.0) {
            return Err(Error::Config(format!(
                "n_max must be finite and >= 0, got {n_max}"
            )));
        }
        Ok(n_max)
    }
}

fn missing(field: &str) -> Error {
    Error::Config(format!("missing required setting: {field}"))
}

fn single<T>(mut values: Vec<T>, field: &str) -> Result<T> {
    if values.len() != 1 {
        return Err(Error::Config(format!(
            "{field} must be a single value here, got {}",
            values.len()
        )));
    }
    Ok(values.remove(0))
}

fn linear(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo.is_finite() && hi.is_finite() && hi >= lo) || points == 0 {
        return Err(Error::Config(format!(
            "invalid grid [{lo}, {hi}] with {points} points"
        )));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let step = (hi - lo) / (points - 1) as f64;
    Ok((0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                lo + step * i as f64
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unknown_keys_are_rejected() {
        let err = serde_json::from_str::<RunConfig>(r#"{"x": 1, "bogus": 2}"#).unwrap_err();
        assert!(err.to_string().contains("bogus"));
    }

    #[test]
    fn scalar_or_list() {
        let cfg: RunConfig =
            serde_json::from_str(r#"{"x": [0.5, 1], "scheme": "fock-single"}"#).unwrap();
        assert_eq!(cfg.x_grid().unwrap(), vec![0.5, 1.0]);
        assert_eq!(cfg.schemes().unwrap(), vec![Scheme::FockSingle]);
    }

    #[test]
    fn flags_win() {
        let file = RunConfig {
            phi: Some(0.3),
            eta: Some(OneOrMany::One(0.5)),
            ..Default::default()
        };
        let flags = RunConfig {
            phi: Some(0.2),
            ..Default::default()
        };
        let merged = file.overlay(flags);
        assert_eq!(merged.phi, Some(0.2));
        assert_eq!(merged.etas().unwrap(), vec![0.5]);
    }

    #[test]
    fn raw_rates_are_normalized() {
        let cfg = RunConfig {
            g: Some(2.0),
            kappa_a: Some(1.0),
            kappa_b: Some(1.0),
            gamma: Some(2.0),
            ..Default::default()
        };
        let (x, p) = cfg.single_params().unwrap();
        assert!((x - 1.0).abs() < 1e-15);
        assert_eq!(p.gamma, 1.0);
        assert_eq!(p.g, 1.0);
    }

    #[test]
    fn inconsistent_x_and_rates() {
        let cfg = RunConfig {
            g: Some(1.0),
            x: Some(OneOrMany::One(2.0)),
            ..Default::default()
        };
        assert!(matches!(cfg.param_grid(), Err(Error::Config(_))));
        let ok = RunConfig {
            x: Some(OneOrMany::One(1.0)),
            ..cfg
        };
        assert!(ok.param_grid().is_ok());
    }

    #[test]
    fn empty_grid_is_an_error() {
        let cfg = RunConfig {
            x: Some(OneOrMany::Many(vec![])),
            ..Default::default()
        };
        assert!(cfg.x_grid().is_err());
    }

    #[test]
    fn linear_grid_hits_endpoints() {
        let g = linear(-5.0, 5.0, 11).unwrap();
        assert_eq!(g[0], -5.0);
        assert_eq!(g[5], 0.0);
        assert_eq!(g[10], 5.0);
    }
}
