//! Maximize the success probability of each scheme subject to a fidelity
//! floor, and sweep the optimum over a grid of cooperativities.
//!
//! Every scheme has at most two free parameters (φ and the photon budget). At
//! a fixed budget the fidelity falls monotonically with φ, so the constraint
//! is solved exactly (closed form or bisection) and only the budget is
//! searched, with a coarse log grid followed by golden-section refinement.
//! The fidelity is not monotone in the budget at large φ, which is why the
//! budget is searched rather than bisected for single detection.

use std::f64::consts::FRAC_PI_4;
use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::CavityParams;
use crate::protocol::{coherent_double, coherent_single, fock_double, fock_single, Response};

/// Largest photon budget the searches will consider.
pub const N_MAX_CEILING: f64 = 1e3;

/// Allowed shortfall of the achieved fidelity below the target.
pub const FIDELITY_SLACK: f64 = 1e-9;

const COARSE_POINTS: usize = 96;
const GOLDEN_TOL: f64 = 1e-10;
const BISECTION_TOL: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    FockSingle,
    FockDouble,
    CoherentSingle,
    CoherentDouble,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::FockSingle,
        Scheme::FockDouble,
        Scheme::CoherentSingle,
        Scheme::CoherentDouble,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::FockSingle => "fock-single",
            Scheme::FockDouble => "fock-double",
            Scheme::CoherentSingle => "coherent-single",
            Scheme::CoherentDouble => "coherent-double",
        }
    }

    pub fn is_coherent(self) -> bool {
        matches!(self, Scheme::CoherentSingle | Scheme::CoherentDouble)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|scheme| scheme.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown scheme {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum OptimizationStatus {
    Optimal,
    /// The photon budget sits at [`N_MAX_CEILING`]; the fidelity floor does
    /// not bind.
    AtCeiling,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OptimizationResult {
    pub x: f64,
    pub scheme: Scheme,
    pub eta: f64,
    pub f_target: f64,
    pub phi_opt: f64,
    pub n_max_opt: Option<f64>,
    pub p_success: f64,
    pub fidelity_achieved: f64,
    pub status: OptimizationStatus,
}

fn check_target(f_target: f64) -> Result<()> {
    if !(f_target > 0.5 && f_target < 1.0) {
        return Err(Error::Domain(format!(
            "fidelity target must lie in (0.5, 1), got {f_target}"
        )));
    }
    Ok(())
}

fn infeasible(msg: impl Into<String>) -> Error {
    Error::Infeasible(msg.into())
}

fn defined_fidelity(out: &crate::protocol::SchemeOutcome) -> Result<f64> {
    out.fidelity
        .ok_or_else(|| infeasible("no heralding event is possible at these parameters"))
}

pub fn optimize(
    params: &CavityParams,
    scheme: Scheme,
    f_target: f64,
) -> Result<OptimizationResult> {
    match scheme {
        Scheme::FockSingle => optimize_fock_single(params, f_target),
        Scheme::FockDouble => optimize_fock_double(params, f_target),
        Scheme::CoherentSingle => optimize_coherent_single(params, f_target),
        Scheme::CoherentDouble => optimize_coherent_double(params, f_target),
    }
}

/// The fidelity `p1R1/(p1R1 + p2R2)` falls with φ while the success
/// probability rises, so the optimum meets the target with equality:
/// `tan²φ = 2 (R1/R2)(1 − F)/F`.
pub fn optimize_fock_single(params: &CavityParams, f_target: f64) -> Result<OptimizationResult> {
    params.validate()?;
    check_target(f_target)?;
    let resp = Response::of(params)?;
    if resp.r1 == 0.0 {
        return Err(infeasible("R1 = 0: no single-excitation click is possible"));
    }
    let tan2 = 2.0 * (resp.r1 / resp.r2) * (1.0 - f_target) / f_target;
    let phi = tan2.sqrt().atan();
    let out = fock_single(params, phi)?;
    let fidelity = defined_fidelity(&out)?;
    if (fidelity - f_target).abs() > 1e-10 {
        return Err(Error::Diagnostic(format!(
            "constraint angle {phi} reproduces F = {fidelity}, target {f_target}"
        )));
    }
    Ok(OptimizationResult {
        x: params.protocol_cooperativity()?,
        scheme: Scheme::FockSingle,
        eta: params.eta,
        f_target,
        phi_opt: phi,
        n_max_opt: None,
        p_success: out.p_success,
        fidelity_achieved: fidelity,
        status: OptimizationStatus::Optimal,
    })
}

/// No free parameter: feasible iff the fixed fidelity meets the target.
pub fn optimize_fock_double(params: &CavityParams, f_target: f64) -> Result<OptimizationResult> {
    params.validate()?;
    check_target(f_target)?;
    let out = fock_double(params)?;
    let fidelity = defined_fidelity(&out)?;
    if fidelity < f_target - FIDELITY_SLACK {
        return Err(infeasible(format!(
            "double Fock fidelity {fidelity} is below target {f_target}"
        )));
    }
    Ok(OptimizationResult {
        x: params.protocol_cooperativity()?,
        scheme: Scheme::FockDouble,
        eta: params.eta,
        f_target,
        phi_opt: FRAC_PI_4,
        n_max_opt: None,
        p_success: out.p_success,
        fidelity_achieved: fidelity,
        status: OptimizationStatus::Optimal,
    })
}

/// Closed-form pieces of the single coherent scheme at fixed budget `n`.
struct SingleBudget {
    a1: f64,
    a2: f64,
    loss: f64,
}

impl SingleBudget {
    /// `(1 − e^{−a1 n}, 1 − e^{−a2 n}, A(n))` where
    /// `F = A / (2E1 + tan²φ E2)`.
    fn terms(&self, n: f64) -> (f64, f64, f64) {
        let e1 = -(-self.a1 * n).exp_m1();
        let e2 = -(-self.a2 * n).exp_m1();
        let b = self.a1 + self.loss;
        let damped = self.a1 / b * -(-b * n).exp_m1();
        (e1, e2, e1 + damped)
    }

    /// Fidelity in the `φ → 0` limit, the best reachable at budget `n`.
    fn max_fidelity(&self, n: f64) -> f64 {
        let (e1, _, a) = self.terms(n);
        a / (2.0 * e1)
    }

    /// Largest angle meeting `f_target` at budget `n`.
    fn angle(&self, n: f64, f_target: f64) -> Option<f64> {
        let (e1, e2, a) = self.terms(n);
        let tan2 = (a / f_target - 2.0 * e1) / e2;
        (tan2 > 0.0 && tan2.is_finite()).then(|| tan2.sqrt().atan())
    }
}

/// Maximize over (φ, n_max). For each budget the fidelity constraint fixes φ in
/// closed form; the budget is then found by grid seed plus golden section.
pub fn optimize_coherent_single(
    params: &CavityParams,
    f_target: f64,
) -> Result<OptimizationResult> {
    params.validate()?;
    check_target(f_target)?;
    let resp = Response::of(params)?;
    let budget = SingleBudget {
        a1: params.eta * resp.r1,
        a2: params.eta * resp.r2,
        loss: resp.loss,
    };
    if budget.a1 == 0.0 {
        return Err(infeasible("eta * R1 = 0: no click is possible"));
    }

    // the φ → 0 fidelity falls monotonically from 1 at n → 0
    let n_hi = if budget.max_fidelity(N_MAX_CEILING) >= f_target {
        N_MAX_CEILING
    } else {
        bisect_decreasing(|n| budget.max_fidelity(n), f_target, 0.0, N_MAX_CEILING)
    };

    let objective = |n: f64| -> f64 {
        match budget.angle(n, f_target) {
            Some(phi) => coherent_single(params, phi, n)
                .map(|o| o.p_success)
                .unwrap_or(0.0),
            None => 0.0,
        }
    };
    let n_opt = maximize_log_scale(objective, n_hi * 1e-7, n_hi);
    let phi = budget
        .angle(n_opt, f_target)
        .ok_or_else(|| infeasible(format!("fidelity target {f_target} unreachable")))?;
    let out = coherent_single(params, phi, n_opt)?;
    let fidelity = defined_fidelity(&out)?;
    if fidelity < f_target - FIDELITY_SLACK {
        return Err(Error::Diagnostic(format!(
            "optimum at phi={phi}, n_max={n_opt} undershoots target: F = {fidelity}"
        )));
    }
    let status = if n_opt >= N_MAX_CEILING * (1.0 - 1e-6) {
        OptimizationStatus::AtCeiling
    } else {
        OptimizationStatus::Optimal
    };
    Ok(OptimizationResult {
        x: params.protocol_cooperativity()?,
        scheme: Scheme::CoherentSingle,
        eta: params.eta,
        f_target,
        phi_opt: phi,
        n_max_opt: Some(n_opt),
        p_success: out.p_success,
        fidelity_achieved: fidelity,
        status,
    })
}

/// Success probability rises and fidelity falls with the budget, so the
/// optimum is the largest budget meeting the target (or the ceiling).
pub fn optimize_coherent_double(
    params: &CavityParams,
    f_target: f64,
) -> Result<OptimizationResult> {
    params.validate()?;
    check_target(f_target)?;
    if params.eta * Response::of(params)?.r1 == 0.0 {
        return Err(infeasible("eta * R1 = 0: no click is possible"));
    }
    let fidelity_at = |n: f64| -> Result<f64> { defined_fidelity(&coherent_double(params, n)?) };

    // F(n_max) must be monotone for the bisection to be meaningful
    let grid = log_grid(1e-6, N_MAX_CEILING, 200);
    let mut previous = f64::INFINITY;
    for &n in &grid {
        let f = fidelity_at(n)?;
        if f > previous + 1e-12 {
            return Err(Error::Diagnostic(format!(
                "double-scheme fidelity increases with budget near n_max={n} ({previous} -> {f})"
            )));
        }
        previous = f;
    }

    let (n_opt, status) = if fidelity_at(N_MAX_CEILING)? >= f_target {
        (N_MAX_CEILING, OptimizationStatus::AtCeiling)
    } else {
        let f = |n: f64| fidelity_at(n).unwrap_or(1.0);
        (
            bisect_decreasing(f, f_target, 0.0, N_MAX_CEILING),
            OptimizationStatus::Optimal,
        )
    };
    let out = coherent_double(params, n_opt)?;
    let fidelity = defined_fidelity(&out)?;
    Ok(OptimizationResult {
        x: params.protocol_cooperativity()?,
        scheme: Scheme::CoherentDouble,
        eta: params.eta,
        f_target,
        phi_opt: FRAC_PI_4,
        n_max_opt: Some(n_opt),
        p_success: out.p_success,
        fidelity_achieved: fidelity,
        status,
    })
}

/// Largest `n` in `[lo, hi]` with `f(n) >= target`, for `f` non-increasing
/// and `f(lo) >= target > f(hi)`. Returns the feasible end of the bracket.
fn bisect_decreasing(f: impl Fn(f64) -> f64, target: f64, mut lo: f64, mut hi: f64) -> f64 {
    for _ in 0..400 {
        if hi - lo <= BISECTION_TOL * hi.max(1.0) {
            break;
        }
        let mid = 0.5 * (lo + hi);
        if f(mid) >= target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    lo
}

fn log_grid(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..points)
        .map(|i| {
            if i + 1 == points {
                hi
            } else {
                (a + (b - a) * i as f64 / (points - 1) as f64).exp()
            }
        })
        .collect()
}

/// Maximize `f` on `[lo, hi]`: best point of a log grid, then golden section
/// in `ln n` over the neighbouring cells.
fn maximize_log_scale(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let grid = log_grid(lo, hi, COARSE_POINTS);
    let values: Vec<f64> = grid.iter().map(|&n| f(n)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |best, (i, &v)| if v > values[best] { i } else { best });
    let left = grid[best.saturating_sub(1)].ln();
    let right = grid[(best + 1).min(grid.len() - 1)].ln();
    let g = |u: f64| f(u.exp());
    let u = golden_section_max(g, left, right);
    let candidate = u.exp().clamp(lo, hi);
    if f(candidate) >= values[best] {
        candidate
    } else {
        grid[best]
    }
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > GOLDEN_TOL {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

/// Grid, efficiency, target and scheme for a figure-style sweep. All other
/// cavity properties come from `base`; the coupling is set per grid point.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub x_grid: Vec<f64>,
    pub eta: f64,
    pub f_target: f64,
    pub scheme: Scheme,
    pub base: CavityParams,
}

impl SweepSpec {
    pub fn new(x_grid: Vec<f64>, eta: f64, f_target: f64, scheme: Scheme) -> Self {
        Self {
            x_grid,
            eta,
            f_target,
            scheme,
            base: CavityParams::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.x_grid.is_empty() {
            return Err(Error::Config("x grid is empty".into()));
        }
        if self.x_grid.iter().any(|x| !(x.is_finite() && *x >= 0.0)) {
            return Err(Error::Config(
                "x grid values must be finite and >= 0".into(),
            ));
        }
        if self.x_grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("x grid must be strictly increasing".into()));
        }
        check_target(self.f_target)?;
        self.base.eta(self.eta).validate()
    }

    /// Parameters at bare cooperativity `x`: `g` is rescaled, every other
    /// field is taken from `base`.
    pub fn params_at(&self, x: f64) -> CavityParams {
        let mut p = self.base.eta(self.eta);
        p.g = (x * p.kappa() * p.gamma).sqrt();
        p
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub x: f64,
    pub scheme: Scheme,
    pub eta: f64,
    pub f_target: f64,
    pub result: Result<OptimizationResult>,
}

/// One row per grid point, in grid order. Infeasible points are recorded in
/// their row.
pub fn sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    Ok(spec
        .x_grid
        .par_iter()
        .map(|&x| SweepRow {
            x,
            scheme: spec.scheme,
            eta: spec.eta,
            f_target: spec.f_target,
            result: optimize(&spec.params_at(x), spec.scheme, spec.f_target),
        })
        .collect())
}

/// Cooperativity grid used when a sweep names none: 40 log-spaced points on
/// `[0.05, 2]`.
pub fn default_sweep_grid() -> Vec<f64> {
    log_grid(0.05, 2.0, 40)
}

/// `points` log-spaced values on `[lo, hi]`, endpoints included.
pub fn log_spaced(lo: f64, hi: f64, points: usize) -> Result<Vec<f64>> {
    if !(lo > 0.0 && hi > lo && lo.is_finite() && hi.is_finite()) || points == 0 {
        return Err(Error::Config(format!(
            "invalid log grid [{lo}, {hi}] with {points} points"
        )));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    let mut grid = log_grid(lo, hi, points);
    grid[0] = lo;
    Ok(grid)
}

#[cfg(test)]
mod tests {
    use std::f64::consts::FRAC_PI_2;

    use super::*;

    fn params(x: f64, eta: f64) -> CavityParams {
        CavityParams::from_cooperativity(x).unwrap().eta(eta)
    }

    #[test]
    fn scheme_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        assert!("fock".parse::<Scheme>().is_err());
    }

    #[test]
    fn fock_single_meets_target_exactly() {
        let r = optimize_fock_single(&params(1.0, 1.0), 0.9).unwrap();
        assert!((r.fidelity_achieved - 0.9).abs() < 1e-10);
        assert!(r.phi_opt > 0.0 && r.phi_opt < FRAC_PI_2);
        assert!(r.n_max_opt.is_none());
    }

    #[test]
    fn fock_single_grid_search_agrees() {
        let p = params(1.0, 1.0);
        let r = optimize_fock_single(&p, 0.9).unwrap();
        let mut best: f64 = 0.0;
        for i in 1..2000 {
            let phi = FRAC_PI_2 * i as f64 / 2000.0;
            let out = fock_single(&p, phi).unwrap();
            if out.fidelity.unwrap() >= 0.9 {
                best = best.max(out.p_success);
            }
        }
        assert!(best <= r.p_success + 1e-12);
        assert!(
            r.p_success - best < 1e-3,
            "grid {best} vs optimum {}",
            r.p_success
        );
    }

    #[test]
    fn fock_single_high_fidelity_limit() {
        let r = optimize_fock_single(&params(1.0, 1.0), 1.0 - 1e-9).unwrap();
        assert!(r.phi_opt < 1e-3);
        assert!(r.p_success < 1e-7);
    }

    #[test]
    fn infeasible_without_coupling() {
        for scheme in Scheme::ALL {
            let err = optimize(&params(0.0, 1.0), scheme, 0.9).unwrap_err();
            assert!(matches!(err, Error::Infeasible(_)), "{scheme}: {err}");
        }
    }

    #[test]
    fn targets_outside_range_rejected() {
        assert!(optimize_fock_single(&params(1.0, 1.0), 0.5).is_err());
        assert!(optimize_coherent_single(&params(1.0, 1.0), 1.0).is_err());
    }

    #[test]
    fn fock_double_spurious_infeasible() {
        let p = params(1.0, 1.0).spurious(0.1);
        assert!(matches!(
            optimize_fock_double(&p, 0.9),
            Err(Error::Infeasible(_))
        ));
        assert!(optimize_fock_double(&p, 0.8).is_ok());
    }

    #[test]
    fn coherent_single_anchor() {
        let r = optimize_coherent_single(&params(1.0, 1.0), 0.9).unwrap();
        assert!((0.2..=0.4).contains(&r.phi_opt), "phi {}", r.phi_opt);
        assert!(r.fidelity_achieved >= 0.9 - FIDELITY_SLACK);
        let r = optimize_coherent_single(&params(1.5, 1.0), 0.9).unwrap();
        assert!(r.n_max_opt.unwrap() < 2.0);
    }

    #[test]
    fn coherent_double_bisection() {
        let r = optimize_coherent_double(&params(1.0, 1.0), 0.9).unwrap();
        assert_eq!(r.status, OptimizationStatus::Optimal);
        assert!((r.fidelity_achieved - 0.9).abs() < 1e-9);
        assert!(r.fidelity_achieved >= 0.9);
    }

    #[test]
    fn coherent_double_ceiling() {
        let r = optimize_coherent_double(&params(5.0, 1.0), 0.9).unwrap();
        assert_eq!(r.status, OptimizationStatus::AtCeiling);
        assert_eq!(r.n_max_opt, Some(N_MAX_CEILING));
        assert!((r.p_success - 0.5).abs() < 1e-12);
    }

    #[test]
    fn sweep_validates_grid() {
        let spec = SweepSpec::new(vec![], 1.0, 0.9, Scheme::FockSingle);
        assert!(sweep(&spec).is_err());
        let spec = SweepSpec::new(vec![1.0, 0.5], 1.0, 0.9, Scheme::FockSingle);
        assert!(sweep(&spec).is_err());
    }

    #[test]
    fn sweep_single_point_matches_direct_call() {
        let spec = SweepSpec::new(vec![1.0], 1.0, 0.9, Scheme::CoherentSingle);
        let rows = sweep(&spec).unwrap();
        let direct = optimize_coherent_single(&params(1.0, 1.0), 0.9).unwrap();
        assert_eq!(rows[0].result.as_ref().unwrap(), &direct);
    }

    #[test]
    fn log_spaced_endpoints() {
        let g = log_spaced(0.05, 2.0, 40).unwrap();
        assert_eq!(g.len(), 40);
        assert_eq!(g[0], 0.05);
        assert_eq!(g[39], 2.0);
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
