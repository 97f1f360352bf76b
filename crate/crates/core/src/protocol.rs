//! Success probability and fidelity of the heralding schemes.
//!
//! The two atoms start in the product state `(cos φ|0⟩ + sin φ|1⟩)^⊗2`. The
//! number of atoms in `|1⟩` is conserved by the probing, so every scheme is a
//! classical mixture over the sectors N = 0, 1, 2 with weights
//! `p0 = cos⁴φ`, `p1 = 2 sin²φ cos²φ`, `p2 = sin⁴φ`. A click selects sectors in
//! proportion to their reflection probability; the fidelity with
//! `(|01⟩ + |10⟩)/√2` is `p1c/2 + Re ξ`, where the coherence `ξ` between
//! `|01⟩` and `|10⟩` decays as `e^{−λn}` after `n` mean photons.
//!
//! Fock schemes use a single incident photon per round. Coherent schemes
//! monitor the reflection continuously and stop at the first click (or, for
//! the double scheme, the second click after swapping `|0⟩ ↔ |1⟩`), giving up
//! once a photon budget `n_max` is exhausted.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;

use crate::error::{domain, Result};
use crate::model::{reflection_probability, scattering_loss, CavityParams};

/// Sector populations of the initial two-atom state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Preparation {
    pub phi: f64,
    pub p0: f64,
    pub p1: f64,
    pub p2: f64,
}

pub fn initial_populations(phi: f64) -> Result<Preparation> {
    if !(0.0..=FRAC_PI_2).contains(&phi) {
        return Err(domain(format!(
            "preparation angle must lie in [0, pi/2], got {phi}"
        )));
    }
    let (s, c) = phi.sin_cos();
    let (s2, c2) = (s * s, c * c);
    Ok(Preparation {
        phi,
        p0: c2 * c2,
        p1: 2.0 * s2 * c2,
        p2: s2 * s2,
    })
}

/// Conditional quantities behind a fidelity value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Diagnostics {
    /// Probability of the single-excitation sector given success.
    pub p1c: f64,
    /// Real part of the `|01⟩⟨10|` coherence given success.
    pub re_xi: f64,
}

/// Result of evaluating one scheme.
///
/// `fidelity` is `None` when nothing can herald (`p_success == 0`); this is
/// the undefined-outcome status, distinct from any numeric fidelity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeOutcome {
    pub p_success: f64,
    pub fidelity: Option<f64>,
    pub diagnostics: Option<Diagnostics>,
}

impl SchemeOutcome {
    fn undefined(p_success: f64) -> Self {
        Self {
            p_success,
            fidelity: None,
            diagnostics: None,
        }
    }

    fn new(p_success: f64, p1c: f64, re_xi: f64) -> Self {
        Self {
            p_success,
            fidelity: Some(p1c / 2.0 + re_xi),
            diagnostics: Some(Diagnostics { p1c, re_xi }),
        }
    }

    pub fn is_defined(&self) -> bool {
        self.fidelity.is_some()
    }

    pub fn status(&self) -> &'static str {
        if self.is_defined() {
            "ok"
        } else {
            "undefined"
        }
    }
}

/// Resonant response of the N = 1 and N = 2 sectors at the protocol
/// cooperativity.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Response {
    pub r1: f64,
    pub r2: f64,
    pub loss: f64,
}

impl Response {
    pub(crate) fn of(params: &CavityParams) -> Result<Self> {
        let x = params.protocol_cooperativity()?;
        Ok(Self {
            r1: reflection_probability(x, 1)?,
            r2: reflection_probability(x, 2)?,
            loss: scattering_loss(x, 1)?,
        })
    }
}

fn check_photons(n: f64, name: &str) -> Result<()> {
    if n.is_nan() || n < 0.0 {
        return Err(domain(format!("{name} must be >= 0, got {n}")));
    }
    Ok(())
}

/// `1 − e^{−rate·n}`, with `0·∞` read as 0.
fn click_fraction(rate: f64, n: f64) -> f64 {
    if rate == 0.0 {
        return 0.0;
    }
    -(-rate * n).exp_m1()
}

/// `(a/b)(1 − e^{−b·n})`, continuous at `b = 0`.
fn damped_fraction(a: f64, b: f64, n: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else if b == 0.0 {
        a * n
    } else {
        a / b * click_fraction(b, n)
    }
}

/// `1 − e^{−u}(1 + u)`, the Erlang-2 distribution function.
pub(crate) fn erlang2_cdf(u: f64) -> f64 {
    if u.is_infinite() {
        return 1.0;
    }
    if u < 0.5 {
        // alternating series Σ_{k≥2} (−1)^k (k−1) u^k / k!
        let mut term = u * u / 2.0;
        let mut sum: f64 = 0.0;
        let mut k = 2.0;
        while term.abs() > 1e-18 * sum.abs().max(f64::MIN_POSITIVE) {
            sum += (k - 1.0) * term;
            k += 1.0;
            term *= -u / k;
        }
        sum
    } else {
        1.0 - (-u).exp() * (1.0 + u)
    }
}

/// Single Fock photon, single click.
pub fn fock_single(params: &CavityParams, phi: f64) -> Result<SchemeOutcome> {
    params.validate()?;
    let prep = initial_populations(phi)?;
    let resp = Response::of(params)?;
    let one = prep.p1 * resp.r1;
    let total = one + prep.p2 * resp.r2;
    if total == 0.0 {
        return Ok(SchemeOutcome::undefined(0.0));
    }
    let p_success = params.eta * total;
    let p1c = one / total;
    // a detected photon rules out spontaneous emission, so the coherence is intact
    Ok(SchemeOutcome::new(p_success, p1c, p1c / 2.0))
}

/// Two Fock-photon rounds at `φ = π/4` with a `|0⟩ ↔ |1⟩` swap in between.
///
/// With a spurious reflection fraction `f > 0`, the heralding probability
/// counts every click pair, `η²((R₁(1−f)+f)² + f(R₂(1−f)+f))/2`, and the
/// fidelity is [`false_reflection_fidelity`].
pub fn fock_double(params: &CavityParams) -> Result<SchemeOutcome> {
    params.validate()?;
    let resp = Response::of(params)?;
    let f = params.f;
    let r1 = resp.r1 * (1.0 - f) + f;
    let r2 = resp.r2 * (1.0 - f) + f;
    let total = r1 * r1 + f * r2;
    let p_success = params.eta * params.eta * total / 2.0;
    if total == 0.0 {
        return Ok(SchemeOutcome::undefined(p_success));
    }
    let p1c = r1 * r1 / total;
    Ok(SchemeOutcome::new(p_success, p1c, p1c / 2.0))
}

/// Fidelity of the double Fock scheme when a fraction `f` of incident photons
/// is reflected regardless of the atoms.
pub fn false_reflection_fidelity(params: &CavityParams, f: f64) -> Result<f64> {
    params.validate()?;
    if !(0.0..1.0).contains(&f) {
        return Err(domain(format!(
            "spurious fraction must lie in [0,1), got {f}"
        )));
    }
    let resp = Response::of(params)?;
    let r1 = resp.r1 * (1.0 - f) + f;
    let r2 = resp.r2 * (1.0 - f) + f;
    let wanted = r1 * r1;
    let total = wanted + f * r2;
    if total == 0.0 {
        // x = 0 and f = 0: no click pair is possible
        return Err(domain("no click pair possible (R1 = 0 and f = 0)"));
    }
    Ok(wanted / total)
}

/// Probability of the N = 1 sector when the first click arrives after `n`
/// mean photons. `None` when no sector can click.
pub fn coherent_conditional_population(
    params: &CavityParams,
    phi: f64,
    n: f64,
) -> Result<Option<f64>> {
    params.validate()?;
    check_photons(n, "mean photon number")?;
    let prep = initial_populations(phi)?;
    let resp = Response::of(params)?;
    let one = prep.p1 * resp.r1;
    let two = prep.p2 * resp.r2;
    if one == 0.0 {
        return Ok(if two == 0.0 { None } else { Some(0.0) });
    }
    // relative weight of N = 2, evaluated as a single exponential so that
    // large n does not underflow both terms
    let rate = params.eta * (resp.r2 - resp.r1);
    let decay = if rate == 0.0 { 1.0 } else { (-rate * n).exp() };
    Ok(Some(1.0 / (1.0 + two / one * decay)))
}

/// Fidelity conditioned on a first click after `n` mean photons:
/// `p1c (1 + e^{−λn}) / 2`.
pub fn coherent_conditional_fidelity(
    params: &CavityParams,
    phi: f64,
    n: f64,
) -> Result<Option<f64>> {
    let Some(p1c) = coherent_conditional_population(params, phi, n)? else {
        return Ok(None);
    };
    let loss = Response::of(params)?.loss;
    let coherence = if loss == 0.0 { 1.0 } else { (-loss * n).exp() };
    Ok(Some(p1c * (1.0 + coherence) / 2.0))
}

/// Probability density of the first click at mean photon number `n`.
pub fn first_click_density(params: &CavityParams, phi: f64, n: f64) -> Result<f64> {
    params.validate()?;
    check_photons(n, "mean photon number")?;
    let prep = initial_populations(phi)?;
    let resp = Response::of(params)?;
    let eta = params.eta;
    let term = |p: f64, r: f64| {
        if p * r == 0.0 {
            0.0
        } else {
            eta * p * r * (-eta * r * n).exp()
        }
    };
    Ok(term(prep.p1, resp.r1) + term(prep.p2, resp.r2))
}

/// Continuous coherent probing with a single click and photon budget `n_max`.
pub fn coherent_single(params: &CavityParams, phi: f64, n_max: f64) -> Result<SchemeOutcome> {
    params.validate()?;
    check_photons(n_max, "photon budget")?;
    let prep = initial_populations(phi)?;
    let resp = Response::of(params)?;
    let a1 = params.eta * resp.r1;
    let a2 = params.eta * resp.r2;
    let from_one = prep.p1 * click_fraction(a1, n_max);
    let p_success = from_one + prep.p2 * click_fraction(a2, n_max);
    if p_success == 0.0 {
        return Ok(SchemeOutcome::undefined(0.0));
    }
    let coherent = prep.p1 * damped_fraction(a1, a1 + resp.loss, n_max);
    let p1c = from_one / p_success;
    let re_xi = coherent / (2.0 * p_success);
    Ok(SchemeOutcome::new(p_success, p1c, re_xi))
}

/// Click probability and `E[e^{−λ(n₁+n₂)}; n₁+n₂ ≤ n_max]` for the double
/// coherent scheme; the Erlang-2 rate is `a = ηR₁`.
fn double_moments(params: &CavityParams, n_max: f64) -> Result<(f64, f64)> {
    params.validate()?;
    check_photons(n_max, "photon budget")?;
    let resp = Response::of(params)?;
    let a = params.eta * resp.r1;
    if a == 0.0 {
        return Ok((0.0, 0.0));
    }
    let b = a + resp.loss;
    // only the N = 1 sector (weight 1/2) can click in both rounds
    let p_success = 0.5 * erlang2_cdf(a * n_max);
    let weighted = 0.5 * (a / b) * (a / b) * erlang2_cdf(b * n_max);
    Ok((p_success, weighted))
}

/// Coherent probing at `φ = π/4`, swap after the first click, success when the
/// second click arrives within a total budget `n₁ + n₂ ≤ n_max`.
///
/// Both clicks come from the N = 1 sector, so `p1c = 1` and
/// `F = 1/2 + E[e^{−λ(n₁+n₂)} | success]/2`.
pub fn coherent_double(params: &CavityParams, n_max: f64) -> Result<SchemeOutcome> {
    let (p_success, weighted) = double_moments(params, n_max)?;
    if p_success == 0.0 {
        return Ok(SchemeOutcome::undefined(0.0));
    }
    Ok(SchemeOutcome::new(
        p_success,
        1.0,
        weighted / (2.0 * p_success),
    ))
}

/// The double-scheme fidelity with the coherence term not halved,
/// `1/2 + E[e^{−λ(n₁+n₂)} | success]`.
///
/// This reading can exceed 1 (about 1.194 at `x = 1`, `η = 1`, `n_max = 2`)
/// and is kept only to report the comparison against [`coherent_double`].
/// Returns `None` when nothing can herald.
pub fn unhalved_double_fidelity(params: &CavityParams, n_max: f64) -> Result<Option<f64>> {
    let (p_success, weighted) = double_moments(params, n_max)?;
    if p_success == 0.0 {
        return Ok(None);
    }
    Ok(Some(0.5 + weighted / p_success))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_4;

    use super::*;

    fn params(x: f64) -> CavityParams {
        CavityParams::from_cooperativity(x).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn populations() {
        let p = initial_populations(0.0).unwrap();
        assert_eq!((p.p0, p.p1, p.p2), (1.0, 0.0, 0.0));
        let p = initial_populations(FRAC_PI_4).unwrap();
        assert!(close(p.p0, 0.25, 1e-15) && close(p.p1, 0.5, 1e-15) && close(p.p2, 0.25, 1e-15));
        let p = initial_populations(FRAC_PI_2).unwrap();
        assert!(close(p.p2, 1.0, 1e-15) && p.p0 < 1e-30);
        assert!(initial_populations(-0.1).is_err());
        assert!(initial_populations(1.6).is_err());
    }

    #[test]
    fn fock_single_values() {
        let out = fock_single(&params(1.0), FRAC_PI_4).unwrap();
        let total = 0.5 * 0.64 + 0.25 * 64.0 / 81.0;
        assert!(close(out.p_success, total, 1e-12));
        assert!(close(out.p_success, 0.517531, 1e-6));
        assert!(close(out.fidelity.unwrap(), 0.618321, 1e-6));

        let out = fock_single(&params(1.0), 0.2).unwrap();
        assert!(close(out.fidelity.unwrap(), 0.97526, 1e-5));

        let dead = fock_single(&params(1.0).eta(0.0), 0.3).unwrap();
        assert_eq!(dead.p_success, 0.0);
    }

    #[test]
    fn fock_single_degenerate() {
        let out = fock_single(&params(1.0), 0.0).unwrap();
        assert!(!out.is_defined());
        assert_eq!(out.status(), "undefined");
        let out = fock_single(&params(0.0), 0.4).unwrap();
        assert!(!out.is_defined());
    }

    #[test]
    fn fock_double_values() {
        let out = fock_double(&params(1.0)).unwrap();
        assert!(close(out.p_success, 0.2048, 1e-12));
        assert_eq!(out.fidelity, Some(1.0));
        let out = fock_double(&params(1.0).eta(0.5)).unwrap();
        assert!(close(out.p_success, 0.0512, 1e-12));
        let out = fock_double(&params(0.0)).unwrap();
        assert_eq!(out.p_success, 0.0);
    }

    #[test]
    fn spurious_reflection() {
        let p = params(1.0);
        assert_eq!(false_reflection_fidelity(&p, 0.0).unwrap(), 1.0);
        assert!(close(
            false_reflection_fidelity(&p, 0.01).unwrap(),
            0.98,
            0.005
        ));
        assert!(close(
            false_reflection_fidelity(&p, 0.1).unwrap(),
            0.85,
            0.005
        ));
        let out = fock_double(&p.spurious(0.01)).unwrap();
        assert_eq!(
            out.fidelity.unwrap(),
            false_reflection_fidelity(&p, 0.01).unwrap()
        );
        assert!(false_reflection_fidelity(&p, 1.0).is_err());
    }

    #[test]
    fn conditional_population_limits() {
        let p = params(1.0);
        let at_zero = coherent_conditional_population(&p, FRAC_PI_4, 0.0)
            .unwrap()
            .unwrap();
        assert!(close(
            at_zero,
            fock_single(&p, FRAC_PI_4).unwrap().fidelity.unwrap(),
            1e-14
        ));
        let far = coherent_conditional_population(&p, FRAC_PI_4, f64::INFINITY)
            .unwrap()
            .unwrap();
        assert_eq!(far, 1.0);
        assert_eq!(coherent_conditional_population(&p, 0.0, 1.0).unwrap(), None);
        assert!(coherent_conditional_population(&p, 0.3, -1.0).is_err());
    }

    #[test]
    fn conditional_fidelity() {
        let p = params(1.0);
        let p1c = coherent_conditional_population(&p, FRAC_PI_4, 0.0)
            .unwrap()
            .unwrap();
        assert_eq!(
            coherent_conditional_fidelity(&p, FRAC_PI_4, 0.0).unwrap(),
            Some(p1c)
        );
        let p1c = coherent_conditional_population(&p, FRAC_PI_4, 1.0)
            .unwrap()
            .unwrap();
        let f = coherent_conditional_fidelity(&p, FRAC_PI_4, 1.0)
            .unwrap()
            .unwrap();
        assert!(close(f, p1c * (1.0 + (-0.32f64).exp()) / 2.0, 1e-14));
    }

    #[test]
    fn first_click_at_origin() {
        let p = params(1.0);
        let d = first_click_density(&p, FRAC_PI_4, 0.0).unwrap();
        assert!(close(
            d,
            fock_single(&p, FRAC_PI_4).unwrap().p_success,
            1e-14
        ));
    }

    #[test]
    fn coherent_single_values() {
        let p = params(1.0);
        let out = coherent_single(&p, FRAC_PI_4, 1.0).unwrap();
        assert!(close(out.p_success, 0.3729, 1e-4));
        assert!(close(out.fidelity.unwrap(), 0.593, 1e-3));
        let inf = coherent_single(&p, FRAC_PI_4, f64::INFINITY).unwrap();
        assert!(close(inf.p_success, 0.75, 1e-15));
        assert!(!coherent_single(&p, 0.0, 1.0).unwrap().is_defined());
    }

    #[test]
    fn coherent_double_values() {
        let p = params(1.0);
        let out = coherent_double(&p, 2.0).unwrap();
        assert!(close(out.p_success, 0.18304, 1e-5));
        assert!(close(out.fidelity.unwrap(), 0.8472, 1e-4));
        let inf = coherent_double(&p, f64::INFINITY).unwrap();
        assert!(close(inf.p_success, 0.5, 1e-15));
        let ratio: f64 = 0.64 / 0.96;
        assert!(close(
            inf.fidelity.unwrap(),
            0.5 + 0.5 * ratio * ratio,
            1e-12
        ));
        let tiny = coherent_double(&p, 1e-9).unwrap();
        assert!(tiny.p_success < 1e-18);
        assert!(close(tiny.fidelity.unwrap(), 1.0, 1e-8));
        assert!(!coherent_double(&params(0.0), 2.0).unwrap().is_defined());
    }

    #[test]
    fn unhalved_reading_exceeds_one() {
        let p = params(1.0);
        let v = unhalved_double_fidelity(&p, 2.0).unwrap().unwrap();
        assert!(close(v, 1.194, 1e-3));
        let tiny = unhalved_double_fidelity(&p, 1e-6).unwrap().unwrap();
        assert!(close(tiny, 1.5, 1e-5));
    }

    #[test]
    fn erlang_series_matches_direct() {
        for &u in &[1e-8f64, 1e-4, 0.01, 0.1, 0.3, 0.49] {
            let direct = 1.0 - (-u).exp() * (1.0 + u);
            let s = erlang2_cdf(u);
            assert!((s - direct).abs() <= 1e-15 + 1e-7 * direct, "u={u}");
        }
        assert!((erlang2_cdf(1e-8) - 0.5e-16).abs() < 1e-24);
        assert_eq!(erlang2_cdf(f64::INFINITY), 1.0);
    }
}
