//! Click-process sampling for the double-detection coherent scheme.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use crate::error::{domain, Result};
use crate::model::{reflection_probability, scattering_loss, CavityParams};

pub const MIN_SAMPLES: usize = 10_000;

/// One simulated attempt that produced two clicks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectorySample {
    pub n1: f64,
    pub n2: f64,
    /// Atoms in `|1⟩` before the first round.
    pub subspace: u32,
    /// `e^{−λ(n1 + n2)}`.
    pub coherence_weight: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloEstimate {
    pub samples: usize,
    pub successes: usize,
    pub p_success: f64,
    pub p_success_se: f64,
    /// `None` when no attempt succeeded.
    pub fidelity: Option<f64>,
    pub fidelity_se: Option<f64>,
}

/// Waiting "time" in mean photons until a click at `rate` per photon;
/// infinite when the sector never clicks.
fn click<R: Rng>(rng: &mut R, rate: f64) -> f64 {
    if rate == 0.0 {
        return f64::INFINITY;
    }
    Exp::new(rate).expect("positive click rate").sample(rng)
}

struct DoubleSampler {
    rates: [f64; 3],
    loss: f64,
    n_max: f64,
}

impl DoubleSampler {
    fn attempt<R: Rng>(&self, rng: &mut R) -> Option<TrajectorySample> {
        let u: f64 = rng.random();
        let subspace = if u < 0.25 {
            0
        } else if u < 0.75 {
            1
        } else {
            2
        };
        // after the |0⟩ ↔ |1⟩ swap the sector N becomes 2 − N
        let n1 = click(rng, self.rates[subspace as usize]);
        let n2 = click(rng, self.rates[2 - subspace as usize]);
        let total = n1 + n2;
        (total <= self.n_max).then(|| TrajectorySample {
            n1,
            n2,
            subspace,
            coherence_weight: (-self.loss * total).exp(),
        })
    }
}

/// Estimate success probability and fidelity of the double scheme at
/// `φ = π/4` by direct sampling, with binomial and sample standard errors.
///
/// A success from the N = 1 sector contributes `1/2 + w/2` to the fidelity
/// (`p1c = 1`, `Re ξ = w/2`); the other sectors contribute 0.
pub fn monte_carlo_double(
    params: &CavityParams,
    n_max: f64,
    samples: usize,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    params.validate()?;
    if samples < MIN_SAMPLES {
        return Err(domain(format!(
            "need at least {MIN_SAMPLES} samples, got {samples}"
        )));
    }
    if n_max.is_nan() || n_max <= 0.0 {
        return Err(domain(format!("photon budget must be > 0, got {n_max}")));
    }
    let x = params.protocol_cooperativity()?;
    let mut rates = [0.0; 3];
    for (n, rate) in rates.iter_mut().enumerate() {
        *rate = params.eta * reflection_probability(x, n as u32)?;
    }
    let sampler = DoubleSampler {
        rates,
        loss: scattering_loss(x, 1)?,
        n_max,
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut successes = 0usize;
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..samples {
        if let Some(s) = sampler.attempt(&mut rng) {
            successes += 1;
            let contribution = if s.subspace == 1 {
                0.5 + 0.5 * s.coherence_weight
            } else {
                0.0
            };
            sum += contribution;
            sum_sq += contribution * contribution;
        }
    }

    let n = samples as f64;
    let p = successes as f64 / n;
    let (fidelity, fidelity_se) = if successes == 0 {
        (None, None)
    } else {
        let k = successes as f64;
        let mean = sum / k;
        let var = if successes > 1 {
            (sum_sq - k * mean * mean).max(0.0) / (k - 1.0)
        } else {
            0.0
        };
        (Some(mean), Some((var / k).sqrt()))
    };
    Ok(MonteCarloEstimate {
        samples,
        successes,
        p_success: p,
        p_success_se: (p * (1.0 - p) / n).sqrt(),
        fidelity,
        fidelity_se,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dead_detector_never_succeeds() {
        let p = CavityParams::from_cooperativity(1.0).unwrap().eta(0.0);
        let est = monte_carlo_double(&p, 2.0, MIN_SAMPLES, 1).unwrap();
        assert_eq!(est.successes, 0);
        assert_eq!(est.fidelity, None);
    }

    #[test]
    fn same_seed_same_estimate() {
        let p = CavityParams::from_cooperativity(1.0).unwrap();
        let a = monte_carlo_double(&p, 2.0, 20_000, 42).unwrap();
        let b = monte_carlo_double(&p, 2.0, 20_000, 42).unwrap();
        assert_eq!(a, b);
        let c = monte_carlo_double(&p, 2.0, 20_000, 43).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn rejects_small_sample_counts() {
        let p = CavityParams::from_cooperativity(1.0).unwrap();
        assert!(monte_carlo_double(&p, 2.0, 100, 1).is_err());
        assert!(monte_carlo_double(&p, 0.0, MIN_SAMPLES, 1).is_err());
    }
}
