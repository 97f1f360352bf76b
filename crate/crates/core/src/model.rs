//! Closed-form cavity response in the weak-probe (at most one photon in the
//! cavity) limit.
//!
//! All rates are measured in units of the atomic decay rate γ, which is
//! therefore fixed to 1 inside [`CavityParams`]. Raw rates in any unit are
//! accepted through [`RawRates::normalize`].
//!
//! # Field response off resonance
//!
//! Dropping the atomic noise operators, the Fourier-domain cavity field is
//!
//! ```text
//! c(ω) = (√κa a_in(ω) + √κb b_in(ω)) / D(ω)
//! D(ω) = κ/2 − iω + N g² / (γ/2 + i(δ − ω))
//! ```
//!
//! With the boundary conditions `a_out = a_in − √κa c`, `b_out = b_in − √κb c`
//! and `b_in` in vacuum, the amplitudes follow directly:
//!
//! ```text
//! r(ω) = 1 − κa / D(ω)
//! t(ω) = −√(κa κb) / D(ω)
//! ```
//!
//! Expanding `|D|² − |D − κa|² − κa κb` gives the loss
//! `λ(ω) = 1 − |r|² − |t|² = 2 κa Re(S) / |D|²` with `S = N g²/(γ/2 + i(δ − ω))`,
//! which is evaluated directly rather than by subtraction. At `ω = δ = 0` and
//! `κa = κb` these reduce to `R_N = (C/(1+C))²`, `T_N = (1/(1+C))²`,
//! `λ_N = 2C/(1+C)²` with `C = 4 N g²/(κγ)`.
//!
//! The sign of `t` follows the `a_out = a_in − √κa c` convention; only `|t|²`
//! enters any physical result.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Physical parameters of the cavity, the atoms and the detection chain.
///
/// Rates are in units of γ. `g_tilde`/`kappa_tilde` describe the
/// counter-propagating mode of a ring cavity and are both zero when unused.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CavityParams {
    pub g: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub gamma: f64,
    pub delta: f64,
    pub eta: f64,
    pub f: f64,
    pub g_tilde: f64,
    pub kappa_tilde: f64,
}

impl Default for CavityParams {
    fn default() -> Self {
        Self {
            g: 1.0,
            kappa_a: 0.5,
            kappa_b: 0.5,
            gamma: 1.0,
            delta: 0.0,
            eta: 1.0,
            f: 0.0,
            g_tilde: 0.0,
            kappa_tilde: 0.0,
        }
    }
}

impl CavityParams {
    /// Symmetric resonant cavity with `κa = κb = κ/2` and `κ = γ`, with the
    /// coupling chosen so that `g²/κγ = x`.
    pub fn from_cooperativity(x: f64) -> Result<Self> {
        Self::with_mirrors(x, 0.5, 0.5)
    }

    /// Cavity with the given mirror rates and `g` chosen so that `g²/κγ = x`.
    pub fn with_mirrors(x: f64, kappa_a: f64, kappa_b: f64) -> Result<Self> {
        check_cooperativity(x)?;
        let params = Self {
            g: (x * (kappa_a + kappa_b)).sqrt(),
            kappa_a,
            kappa_b,
            ..Self::default()
        };
        params.validate()?;
        Ok(params)
    }

    pub fn eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    pub fn spurious(mut self, f: f64) -> Self {
        self.f = f;
        self
    }

    pub fn detuning(mut self, delta: f64) -> Self {
        self.delta = delta;
        self
    }

    pub fn counter_mode(mut self, g_tilde: f64, kappa_tilde: f64) -> Self {
        self.g_tilde = g_tilde;
        self.kappa_tilde = kappa_tilde;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.g,
            self.kappa_a,
            self.kappa_b,
            self.gamma,
            self.delta,
            self.eta,
            self.f,
            self.g_tilde,
            self.kappa_tilde,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(domain("all cavity parameters must be finite"));
        }
        if self.g < 0.0 {
            return Err(domain(format!("coupling g must be >= 0, got {}", self.g)));
        }
        if self.kappa_a <= 0.0 || self.kappa_b <= 0.0 {
            return Err(domain(format!(
                "mirror rates must be > 0, got kappa_a={} kappa_b={}",
                self.kappa_a, self.kappa_b
            )));
        }
        if self.gamma != 1.0 {
            return Err(domain(format!(
                "gamma is the unit of all rates and must equal 1, got {}",
                self.gamma
            )));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(domain(format!(
                "detector efficiency must lie in [0,1], got {}",
                self.eta
            )));
        }
        if !(0.0..1.0).contains(&self.f) {
            return Err(domain(format!(
                "spurious fraction must lie in [0,1), got {}",
                self.f
            )));
        }
        if self.g_tilde < 0.0 || self.kappa_tilde < 0.0 {
            return Err(domain("counter-propagating mode parameters must be >= 0"));
        }
        if self.g_tilde > 0.0 && self.kappa_tilde == 0.0 {
            return Err(domain("g_tilde > 0 requires kappa_tilde > 0"));
        }
        Ok(())
    }

    pub fn kappa(&self) -> f64 {
        self.kappa_a + self.kappa_b
    }

    /// Bare cooperativity `g²/κγ`.
    pub fn cooperativity(&self) -> f64 {
        self.g * self.g / (self.kappa() * self.gamma)
    }

    /// Cooperativity used by every protocol formula: the bare value, or the
    /// ring-cavity replacement when a counter-propagating mode is present.
    pub fn protocol_cooperativity(&self) -> Result<f64> {
        effective_cooperativity_ring(self)
    }
}

/// Rates in arbitrary (but common) units, before normalization to γ = 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RawRates {
    pub g: f64,
    pub kappa_a: f64,
    pub kappa_b: f64,
    pub gamma: f64,
    pub delta: f64,
    pub g_tilde: f64,
    pub kappa_tilde: f64,
}

impl RawRates {
    /// Divide every rate by γ. Efficiency and spurious fraction keep their
    /// defaults and are set separately.
    pub fn normalize(&self) -> Result<CavityParams> {
        if !(self.gamma.is_finite() && self.gamma > 0.0) {
            return Err(domain(format!("gamma must be > 0, got {}", self.gamma)));
        }
        let s = 1.0 / self.gamma;
        let params = CavityParams {
            g: self.g * s,
            kappa_a: self.kappa_a * s,
            kappa_b: self.kappa_b * s,
            gamma: 1.0,
            delta: self.delta * s,
            g_tilde: self.g_tilde * s,
            kappa_tilde: self.kappa_tilde * s,
            ..CavityParams::default()
        };
        params.validate()?;
        Ok(params)
    }
}

/// One point of a probe-frequency sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumPoint {
    pub omega: f64,
    pub r: Complex64,
    pub t: Complex64,
    pub reflection: f64,
    pub transmission: f64,
    pub loss: f64,
}

fn check_cooperativity(x: f64) -> Result<()> {
    if x.is_nan() || x < 0.0 {
        return Err(domain(format!("cooperativity must be >= 0, got {x}")));
    }
    Ok(())
}

/// `4 N x`, the collective resonant cooperativity of `N` coupled atoms.
/// `x = ∞` is accepted as the strong-coupling limit.
fn collective(x: f64, atoms: u32) -> Result<f64> {
    check_cooperativity(x)?;
    if atoms == 0 {
        return Ok(0.0);
    }
    Ok(4.0 * f64::from(atoms) * x)
}

/// Resonant reflection probability with `atoms` atoms in the coupled state.
pub fn reflection_probability(x: f64, atoms: u32) -> Result<f64> {
    let c = collective(x, atoms)?;
    if c.is_infinite() {
        return Ok(1.0);
    }
    let r = c / (1.0 + c);
    Ok(r * r)
}

/// Resonant transmission probability with `atoms` atoms in the coupled state.
pub fn transmission_probability(x: f64, atoms: u32) -> Result<f64> {
    let c = collective(x, atoms)?;
    let t = 1.0 / (1.0 + c);
    Ok(t * t)
}

/// Probability that a resonant photon is lost to spontaneous emission.
/// Bounded by 1/2, reached at `4Nx = 1`.
pub fn scattering_loss(x: f64, atoms: u32) -> Result<f64> {
    let c = collective(x, atoms)?;
    if c.is_infinite() {
        return Ok(0.0);
    }
    Ok(2.0 * c / ((1.0 + c) * (1.0 + c)))
}

/// Complex reflection and transmission amplitudes at probe frequency `omega`
/// (relative to the cavity) for `atoms` coupled atoms.
pub fn scattering_amplitudes(
    params: &CavityParams,
    omega: f64,
    atoms: u32,
) -> Result<SpectrumPoint> {
    params.validate()?;
    if !omega.is_finite() {
        return Err(domain(format!(
            "probe frequency must be finite, got {omega}"
        )));
    }
    let n = f64::from(atoms);
    let atomic = Complex64::new(params.gamma / 2.0, params.delta - omega);
    let s = n * params.g * params.g / atomic;
    let d = Complex64::new(params.kappa() / 2.0, -omega) + s;
    let r = Complex64::new(1.0, 0.0) - params.kappa_a / d;
    let t = -(params.kappa_a * params.kappa_b).sqrt() / d;
    let loss = 2.0 * params.kappa_a * s.re / d.norm_sqr();
    Ok(SpectrumPoint {
        omega,
        r,
        t,
        reflection: r.norm_sqr(),
        transmission: t.norm_sqr(),
        loss,
    })
}

/// Cooperativity after treating photons lost through the counter-propagating
/// mode of a ring cavity like spontaneous emission:
/// `g² / (κγ + 4 g̃² κ / κ̃)`.
///
/// With `g̃ = g` and `κ̃ = κ` this is `x/(1 + 4x)`, strictly below 1/4.
pub fn effective_cooperativity_ring(params: &CavityParams) -> Result<f64> {
    params.validate()?;
    let kappa = params.kappa();
    if params.g_tilde == 0.0 {
        return Ok(params.cooperativity());
    }
    let counter = 4.0 * params.g_tilde * params.g_tilde * kappa / params.kappa_tilde;
    Ok(params.g * params.g / (kappa * params.gamma + counter))
}

#[cfg(test)]
mod tests {
    use super::*;

    const EPS: f64 = 1e-12;

    #[test]
    fn resonant_values() {
        assert_eq!(reflection_probability(1.0, 0).unwrap(), 0.0);
        assert!((reflection_probability(1.0, 1).unwrap() - 0.64).abs() < EPS);
        assert!((reflection_probability(1.0, 2).unwrap() - 64.0 / 81.0).abs() < EPS);
        assert_eq!(transmission_probability(5.0, 0).unwrap(), 1.0);
        assert!((transmission_probability(1.0, 1).unwrap() - 0.04).abs() < EPS);
        assert!((transmission_probability(1.0, 2).unwrap() - 1.0 / 81.0).abs() < EPS);
        assert_eq!(scattering_loss(1.0, 0).unwrap(), 0.0);
        assert!((scattering_loss(0.25, 1).unwrap() - 0.5).abs() < EPS);
        assert!((scattering_loss(1.0, 1).unwrap() - 0.32).abs() < EPS);
    }

    #[test]
    fn negative_cooperativity_rejected() {
        assert!(matches!(
            reflection_probability(-0.1, 1),
            Err(crate::Error::Domain(_))
        ));
        assert!(transmission_probability(f64::NAN, 1).is_err());
        assert!(scattering_loss(-1.0, 0).is_err());
    }

    #[test]
    fn infinite_cooperativity_limit() {
        assert_eq!(reflection_probability(f64::INFINITY, 1).unwrap(), 1.0);
        assert_eq!(transmission_probability(f64::INFINITY, 1).unwrap(), 0.0);
        assert_eq!(scattering_loss(f64::INFINITY, 1).unwrap(), 0.0);
    }

    #[test]
    fn amplitudes_reduce_on_resonance() {
        let p = CavityParams::from_cooperativity(1.0).unwrap();
        let s = scattering_amplitudes(&p, 0.0, 1).unwrap();
        assert!((s.reflection - 0.64).abs() < EPS);
        assert!((s.transmission - 0.04).abs() < EPS);
        assert!((s.loss - 0.32).abs() < EPS);

        let empty = scattering_amplitudes(&p, 0.0, 0).unwrap();
        assert!(empty.r.norm() < EPS);
        assert!((empty.t - Complex64::new(-1.0, 0.0)).norm() < EPS);
        assert!((empty.transmission - 1.0).abs() < EPS);
    }

    #[test]
    fn single_mirror_cavity_reflects() {
        let p = CavityParams {
            kappa_b: 1e-15,
            ..CavityParams::from_cooperativity(1.0).unwrap()
        };
        let s = scattering_amplitudes(&p, 0.0, 0).unwrap();
        assert!((s.r.norm() - 1.0).abs() < 1e-12);
        assert!(s.t.norm() < 1e-7);
    }

    #[test]
    fn far_detuned_probe_reflects() {
        let p = CavityParams::from_cooperativity(1.0).unwrap();
        let s = scattering_amplitudes(&p, 1e4, 0).unwrap();
        assert!(s.reflection > 1.0 - 1e-8);
    }

    #[test]
    fn ring_replacement() {
        let p = CavityParams::from_cooperativity(1.0).unwrap();
        assert_eq!(effective_cooperativity_ring(&p).unwrap(), p.cooperativity());
        let ring = p.counter_mode(p.g, p.kappa());
        assert_eq!(effective_cooperativity_ring(&ring).unwrap(), 0.2);
        let bad = p.counter_mode(0.5, 0.0);
        assert!(matches!(
            effective_cooperativity_ring(&bad),
            Err(crate::Error::Domain(_))
        ));
    }

    #[test]
    fn raw_rates_normalize_by_gamma() {
        let raw = RawRates {
            g: 2.0,
            kappa_a: 1.0,
            kappa_b: 1.0,
            gamma: 2.0,
            delta: 0.0,
            g_tilde: 0.0,
            kappa_tilde: 0.0,
        };
        let p = raw.normalize().unwrap();
        assert_eq!(p.gamma, 1.0);
        assert_eq!(p.g, 1.0);
        assert!((p.cooperativity() - 1.0).abs() < EPS);
    }

    #[test]
    fn validation() {
        let p = CavityParams::default();
        assert!(p.validate().is_ok());
        assert!(p.eta(1.5).validate().is_err());
        assert!(p.spurious(1.0).validate().is_err());
        assert!(CavityParams { kappa_a: 0.0, ..p }.validate().is_err());
        assert!(CavityParams { gamma: 2.0, ..p }.validate().is_err());
        assert!(CavityParams { g: -1.0, ..p }.validate().is_err());
    }
}
