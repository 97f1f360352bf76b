//! Adaptive Gauss-Kronrod (7/15) quadrature and the integral form of the
//! single-detection coherent scheme.
//!
//! The averaged quantities are rebuilt from pointwise ingredients only: the
//! first-click density `η(p1R1 e^{−ηR1 n} + p2R2 e^{−ηR2 n})`, the conditional
//! population at `n`, and the coherence factor `e^{−λn}`.

use crate::error::{domain, Error, Result};
use crate::model::{reflection_probability, scattering_loss, CavityParams};
use crate::protocol::{initial_populations, SchemeOutcome};

#[allow(clippy::excessive_precision)]
const XGK: [f64; 8] = [
    0.991_455_371_120_812_639_206_854_697_526_329,
    0.949_107_912_342_758_524_526_189_684_047_851,
    0.864_864_423_359_769_072_789_712_788_640_926,
    0.741_531_185_599_394_439_863_864_773_280_788,
    0.586_087_235_467_691_130_294_144_845_693_013,
    0.405_845_151_377_397_166_906_606_412_076_961,
    0.207_784_955_007_898_467_600_689_403_773_245,
    0.000_000_000_000_000_000_000_000_000_000_000,
];

#[allow(clippy::excessive_precision)]
const WGK: [f64; 8] = [
    0.022_935_322_010_529_224_963_732_008_058_970,
    0.063_092_092_629_978_553_290_700_663_189_204,
    0.104_790_010_322_250_183_839_876_322_541_518,
    0.140_653_259_715_525_918_745_189_590_510_238,
    0.169_004_726_639_267_902_826_583_426_598_550,
    0.190_350_578_064_785_409_913_256_402_421_014,
    0.204_432_940_075_298_892_414_161_999_234_649,
    0.209_482_141_084_727_828_012_999_174_891_714,
];

#[allow(clippy::excessive_precision)]
const WG: [f64; 4] = [
    0.129_484_966_168_869_693_270_611_432_679_082,
    0.279_705_391_489_276_667_901_467_771_423_780,
    0.381_830_050_505_118_944_950_369_775_488_975,
    0.417_959_183_673_469_387_755_102_040_816_327,
];

/// 15-point Kronrod estimate and its difference from the embedded 7-point
/// Gauss rule.
fn kronrod_15(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    (kronrod * half, ((kronrod - gauss) * half).abs())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

/// Integrate `f` on `[a, b]`, bisecting the interval with the largest error
/// estimate until the total estimate falls below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    rel_tol: f64,
) -> Result<Quadrature> {
    const MAX_INTERVALS: usize = 2000;
    if !(a.is_finite() && b.is_finite()) {
        return Err(domain("integration bounds must be finite"));
    }
    let mut intervals = vec![(a, b, kronrod_15(&f, a, b))];
    loop {
        let value: f64 = intervals.iter().map(|iv| iv.2 .0).sum();
        let error: f64 = intervals.iter().map(|iv| iv.2 .1).sum();
        if error <= abs_tol.max(rel_tol * value.abs()) {
            return Ok(Quadrature {
                value,
                error,
                intervals: intervals.len(),
            });
        }
        if intervals.len() >= MAX_INTERVALS {
            return Err(Error::NotConverged {
                context: "adaptive quadrature".into(),
                residual: error,
            });
        }
        let worst =
            intervals.iter().enumerate().fold(
                0,
                |w, (i, iv)| if iv.2 .1 > intervals[w].2 .1 { i } else { w },
            );
        let (lo, hi, _) = intervals.swap_remove(worst);
        let mid = 0.5 * (lo + hi);
        intervals.push((lo, mid, kronrod_15(&f, lo, mid)));
        intervals.push((mid, hi, kronrod_15(&f, mid, hi)));
    }
}

/// Pointwise click statistics of the continuous single-detection scheme.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClickModel {
    pub eta: f64,
    pub p1: f64,
    pub p2: f64,
    pub r1: f64,
    pub r2: f64,
    pub loss: f64,
}

impl ClickModel {
    pub fn new(params: &CavityParams, phi: f64) -> Result<Self> {
        params.validate()?;
        let prep = initial_populations(phi)?;
        let x = params.protocol_cooperativity()?;
        Ok(Self {
            eta: params.eta,
            p1: prep.p1,
            p2: prep.p2,
            r1: reflection_probability(x, 1)?,
            r2: reflection_probability(x, 2)?,
            loss: scattering_loss(x, 1)?,
        })
    }

    /// Click density contributed by the N = 1 and N = 2 sectors at `n`.
    fn sector_densities(&self, n: f64) -> (f64, f64) {
        let one = self.eta * self.p1 * self.r1 * (-self.eta * self.r1 * n).exp();
        let two = self.eta * self.p2 * self.r2 * (-self.eta * self.r2 * n).exp();
        (one, two)
    }

    pub fn density(&self, n: f64) -> f64 {
        let (one, two) = self.sector_densities(n);
        one + two
    }

    pub fn conditional_population(&self, n: f64) -> f64 {
        let (one, two) = self.sector_densities(n);
        one / (one + two)
    }

    pub fn conditional_fidelity(&self, n: f64) -> f64 {
        self.conditional_population(n) * (1.0 + (-self.loss * n).exp()) / 2.0
    }

    /// Average the conditional quantities over first clicks in `[0, n_max]`.
    pub fn average(&self, n_max: f64) -> Result<SchemeOutcome> {
        if !(n_max.is_finite() && n_max > 0.0) {
            return Err(domain(format!(
                "photon budget must be finite and > 0, got {n_max}"
            )));
        }
        const ABS: f64 = 1e-15;
        const REL: f64 = 1e-13;
        let p_success = integrate(|n| self.density(n), 0.0, n_max, ABS, REL)?.value;
        if p_success == 0.0 || self.density(0.0) == 0.0 {
            return Ok(SchemeOutcome {
                p_success,
                fidelity: None,
                diagnostics: None,
            });
        }
        let weighted_f = integrate(
            |n| self.conditional_fidelity(n) * self.density(n),
            0.0,
            n_max,
            ABS,
            REL,
        )?
        .value;
        let weighted_p1c = integrate(
            |n| self.conditional_population(n) * self.density(n),
            0.0,
            n_max,
            ABS,
            REL,
        )?
        .value;
        let fidelity = weighted_f / p_success;
        let p1c = weighted_p1c / p_success;
        Ok(SchemeOutcome {
            p_success,
            fidelity: Some(fidelity),
            diagnostics: Some(crate::protocol::Diagnostics {
                p1c,
                re_xi: fidelity - p1c / 2.0,
            }),
        })
    }
}

/// Quadrature route to the single-detection coherent scheme.
pub fn quadrature_single(params: &CavityParams, phi: f64, n_max: f64) -> Result<SchemeOutcome> {
    ClickModel::new(params, phi)?.average(n_max)
}
