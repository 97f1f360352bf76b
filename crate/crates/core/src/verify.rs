//! Oracle comparison suite: every closed form against an independent route.

use std::f64::consts::FRAC_PI_4;

use rayon::prelude::*;
use serde::Serialize;

use crate::error::Result;
use crate::model::{
    effective_cooperativity_ring, reflection_probability, scattering_amplitudes, scattering_loss,
    transmission_probability, CavityParams,
};
use crate::oracle::{
    coherence_decay_rate, monte_carlo_double, quadrature_single, steady_response, Drive,
};
use crate::protocol::{
    coherent_double, coherent_single, false_reflection_fidelity, unhalved_double_fidelity,
};

pub const DEFAULT_SEED: u64 = 20_020_601;
pub const DEFAULT_SAMPLES: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Comparison {
    /// `|observed − expected| ≤ tolerance`
    Within,
    /// `observed ≤ expected + tolerance`
    AtMost,
    /// `observed < expected`
    Below,
    /// `observed > expected`
    Above,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub comparison: Comparison,
    pub expected: f64,
    pub observed: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VerifyConfig {
    pub seed: u64,
    pub samples: usize,
    /// Multiplies every tolerance; 1 for the real suite.
    pub tolerance_scale: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            seed: DEFAULT_SEED,
            samples: DEFAULT_SAMPLES,
            tolerance_scale: 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub seed: u64,
    pub samples: usize,
    pub all_pass: bool,
    pub checks: Vec<Check>,
}

struct Builder<'a> {
    cfg: &'a VerifyConfig,
    checks: Vec<Check>,
}

impl<'a> Builder<'a> {
    fn new(cfg: &'a VerifyConfig) -> Self {
        Self {
            cfg,
            checks: Vec::new(),
        }
    }

    fn push(
        &mut self,
        name: impl Into<String>,
        comparison: Comparison,
        expected: f64,
        observed: f64,
        tolerance: f64,
    ) {
        let tol = tolerance * self.cfg.tolerance_scale;
        let pass = match comparison {
            Comparison::Within => (observed - expected).abs() <= tol,
            Comparison::AtMost => observed <= expected + tol,
            Comparison::Below => observed < expected,
            Comparison::Above => observed > expected,
        };
        self.checks.push(Check {
            name: name.into(),
            comparison,
            expected,
            observed,
            tolerance: tol,
            pass,
            detail: String::new(),
        });
    }

    fn within(&mut self, name: impl Into<String>, expected: f64, observed: f64, tolerance: f64) {
        self.push(name, Comparison::Within, expected, observed, tolerance);
    }

    fn failed(&mut self, name: impl Into<String>, err: crate::Error) {
        self.checks.push(Check {
            name: name.into(),
            comparison: Comparison::Within,
            expected: f64::NAN,
            observed: f64::NAN,
            tolerance: f64::NAN,
            pass: false,
            detail: err.to_string(),
        });
    }

    /// Run `f`, turning an error into a failed check named `name`.
    fn guarded(&mut self, name: &str, f: impl FnOnce(&mut Self) -> Result<()>) {
        let before = self.checks.len();
        if let Err(e) = f(self) {
            self.checks.truncate(before);
            self.failed(name, e);
        }
    }
}

fn params(x: f64) -> Result<CavityParams> {
    CavityParams::from_cooperativity(x)
}

fn spurious_reflection(b: &mut Builder) {
    b.guarded("spurious_reflection", |b| {
        let p = params(1.0)?;
        b.within(
            "spurious_reflection_f0.01",
            0.98,
            false_reflection_fidelity(&p, 0.01)?,
            0.005,
        );
        b.within(
            "spurious_reflection_f0.1",
            0.85,
            false_reflection_fidelity(&p, 0.1)?,
            0.005,
        );
        Ok(())
    });
}

/// 25 log-spaced cooperativities on [1e-3, 1e3] for N = 0..=3.
fn identity_grid() -> Vec<(f64, u32)> {
    (0..25)
        .flat_map(|i| {
            let x = 10f64.powf(-3.0 + 6.0 * i as f64 / 24.0);
            (0..4).map(move |n| (x, n))
        })
        .collect()
}

fn analytic_identities(b: &mut Builder) {
    b.guarded("analytic_identities", |b| {
        let mut sum_dev: f64 = 0.0;
        let mut loss_max: f64 = 0.0;
        let mut amp_dev: f64 = 0.0;
        for (x, n) in identity_grid() {
            let r = reflection_probability(x, n)?;
            let t = transmission_probability(x, n)?;
            let l = scattering_loss(x, n)?;
            sum_dev = sum_dev.max((r + t + l - 1.0).abs());
            loss_max = loss_max.max(l);
            let s = scattering_amplitudes(&params(x)?, 0.0, n)?;
            amp_dev = amp_dev
                .max((s.reflection - r).abs())
                .max((s.transmission - t).abs())
                .max((s.loss - l).abs());
        }
        b.within("identity_R_plus_T_plus_loss", 0.0, sum_dev, 1e-12);
        b.push(
            "loss_bounded_by_half",
            Comparison::AtMost,
            0.5,
            loss_max,
            1e-15,
        );
        b.within("loss_half_at_4Nx_1", 0.5, scattering_loss(0.25, 1)?, 1e-12);
        b.within("amplitudes_match_resonant_forms", 0.0, amp_dev, 1e-12);
        Ok(())
    });
}

fn ring_bound(b: &mut Builder) {
    b.guarded("ring_bound", |b| {
        let ring = |x: f64| -> Result<f64> {
            let p = params(x)?;
            effective_cooperativity_ring(&p.counter_mode(p.g, p.kappa()))
        };
        b.within("ring_x_eff_at_x1", 0.2, ring(1.0)?, 0.0);
        let mut sup: f64 = 0.0;
        for i in 0..=90 {
            sup = sup.max(ring(10f64.powf(-3.0 + 9.0 * i as f64 / 90.0))?);
        }
        b.push(
            "ring_x_eff_below_quarter",
            Comparison::Below,
            0.25,
            sup,
            0.0,
        );
        Ok(())
    });
}

/// 20 parameter sets spread over (x, η, φ, n_max).
pub fn quadrature_grid() -> Vec<(f64, f64, f64, f64)> {
    let xs = [0.1, 0.5, 1.0, 2.0, 5.0];
    let etas = [1.0, 0.5];
    let phis = [0.2, FRAC_PI_4];
    let budgets = [0.3, 1.0, 2.5, 8.0];
    (0..20)
        .map(|i| {
            (
                xs[i % 5],
                etas[(i / 5) % 2],
                phis[(i / 10) % 2],
                budgets[(i * 3) % 4],
            )
        })
        .collect()
}

fn quadrature(b: &mut Builder) {
    b.guarded("quadrature_equivalence", |b| {
        let mut dev_p: f64 = 0.0;
        let mut dev_f: f64 = 0.0;
        for (x, eta, phi, n_max) in quadrature_grid() {
            let p = params(x)?.eta(eta);
            let closed = coherent_single(&p, phi, n_max)?;
            let quad = quadrature_single(&p, phi, n_max)?;
            dev_p = dev_p.max((closed.p_success - quad.p_success).abs());
            let (fc, fq) = (
                closed.fidelity.unwrap_or(f64::NAN),
                quad.fidelity.unwrap_or(f64::NAN),
            );
            dev_f = dev_f.max((fc - fq).abs());
            if fc.is_nan() || fq.is_nan() {
                dev_f = f64::INFINITY;
            }
        }
        b.within("quadrature_single_p_success", 0.0, dev_p, 1e-8);
        b.within("quadrature_single_fidelity", 0.0, dev_f, 1e-8);
        Ok(())
    });
}

fn master_equation(b: &mut Builder) {
    for atoms in [1u32, 2] {
        for x in [0.25, 1.0, 2.0] {
            let tag = format!("N{atoms}_x{x}");
            b.guarded(&format!("master_equation_{tag}"), |b| {
                let p = params(x)?;
                let r = reflection_probability(x, atoms)?;
                let t = transmission_probability(x, atoms)?;
                let l = scattering_loss(x, atoms)?;
                let me = steady_response(&p, atoms as usize, Drive::resonant(1e-3))?;
                let weak = steady_response(&p, atoms as usize, Drive::resonant(1e-4))?;
                b.within(
                    format!("master_equation_R_{tag}"),
                    r,
                    me.reflection,
                    0.01 * r,
                );
                b.within(
                    format!("master_equation_T_{tag}"),
                    t,
                    me.transmission,
                    0.01 * t,
                );
                b.within(format!("master_equation_loss_{tag}"), l, me.loss, 0.01 * l);
                b.within(
                    format!("flux_conservation_{tag}"),
                    1.0,
                    me.reflection + me.transmission + me.loss,
                    1e-3,
                );
                let dev = |s: &crate::oracle::SteadyResponse| {
                    ((s.reflection - r) / r)
                        .abs()
                        .max(((s.transmission - t) / t).abs())
                        .max(((s.loss - l) / l).abs())
                };
                b.push(
                    format!("saturation_shrinks_{tag}"),
                    Comparison::Below,
                    dev(&me),
                    dev(&weak),
                    0.0,
                );
                Ok(())
            });
        }
    }
}

fn coherence(b: &mut Builder) {
    for x in [0.25, 1.0] {
        let name = format!("coherence_decay_x{x}");
        b.guarded(&name.clone(), |b| {
            let fit = coherence_decay_rate(&params(x)?, Drive::resonant(1e-3), 3)?;
            b.within(name, fit.predicted, fit.rate, 0.02 * fit.predicted);
            Ok(())
        });
    }
}

fn monte_carlo(b: &mut Builder) {
    b.guarded("monte_carlo_double", |b| {
        let (seed, samples) = (b.cfg.seed, b.cfg.samples);
        let p = params(1.0)?;
        let closed = coherent_double(&p, 2.0)?;
        let mc = monte_carlo_double(&p, 2.0, samples, seed)?;
        b.within(
            "monte_carlo_double_p_success",
            closed.p_success,
            mc.p_success,
            3.0 * mc.p_success_se,
        );
        match (closed.fidelity, mc.fidelity, mc.fidelity_se) {
            (Some(f), Some(m), Some(se)) => b.within("monte_carlo_double_fidelity", f, m, 3.0 * se),
            _ => b.failed(
                "monte_carlo_double_fidelity",
                crate::Error::Diagnostic(format!(
                    "undefined fidelity ({} successes)",
                    mc.successes
                )),
            ),
        }
        let unhalved = unhalved_double_fidelity(&p, 2.0)?.unwrap_or(f64::NAN);
        b.push(
            "unhalved_double_fidelity_exceeds_one",
            Comparison::Above,
            1.0,
            unhalved,
            0.0,
        );
        Ok(())
    });
}

type Group = fn(&mut Builder);

/// Run every comparison. Groups run concurrently; the order of checks in the
/// report is fixed.
pub fn run_suite(cfg: &VerifyConfig) -> VerifyReport {
    let groups: [Group; 7] = [
        spurious_reflection,
        analytic_identities,
        ring_bound,
        quadrature,
        master_equation,
        coherence,
        monte_carlo,
    ];
    let checks: Vec<Check> = groups
        .par_iter()
        .map(|group| {
            let mut b = Builder::new(cfg);
            group(&mut b);
            b.checks
        })
        .collect::<Vec<_>>()
        .into_iter()
        .flatten()
        .collect();
    VerifyReport {
        seed: cfg.seed,
        samples: cfg.samples,
        all_pass: checks.iter().all(|c| c.pass),
        checks,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quadrature_grid_has_twenty_distinct_points() {
        let g = quadrature_grid();
        assert_eq!(g.len(), 20);
        for (i, a) in g.iter().enumerate() {
            for b in &g[i + 1..] {
                assert_ne!(a, b);
            }
        }
    }

    #[test]
    fn identity_grid_has_one_hundred_points() {
        assert_eq!(identity_grid().len(), 100);
    }

    #[test]
    fn zero_scale_fails_inexact_checks() {
        let cfg = VerifyConfig {
            tolerance_scale: 0.0,
            ..VerifyConfig::default()
        };
        let mut b = Builder::new(&cfg);
        spurious_reflection(&mut b);
        assert!(b.checks.iter().all(|c| !c.pass));
    }
}
