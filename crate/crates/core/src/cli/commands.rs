//! One function per subcommand. Each validates the whole configuration and
//! computes every row before anything is written.

use serde_json::{Map, Value};

use super::config::{Format, RunConfig};
use super::format::{json_num, Cell, Table};
use crate::error::{Error, Result};
use crate::model::{
    reflection_probability, scattering_amplitudes, scattering_loss, transmission_probability,
    CavityParams,
};
use crate::optimize::{default_sweep_grid, optimize, OptimizationStatus, Scheme};
use crate::protocol::{
    coherent_double, coherent_single, fock_double, fock_single, unhalved_double_fidelity,
    SchemeOutcome,
};
use crate::verify::{
    run_suite, Comparison, VerifyConfig, VerifyReport, DEFAULT_SAMPLES, DEFAULT_SEED,
};

/// Rendered output plus the exit status it implies.
#[derive(Debug, Clone, PartialEq)]
pub struct Output {
    pub text: String,
    pub exit_code: u8,
}

fn render(table: &Table, format: Format) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => table.to_json(),
    }
}

fn is_resonant_symmetric(p: &CavityParams) -> bool {
    p.delta == 0.0 && p.kappa_a == p.kappa_b
}

pub fn cmd_response(cfg: &RunConfig) -> Result<Table> {
    let grid = cfg.param_grid()?;
    let atoms = cfg.atoms(&[0, 1, 2])?;
    let mut table = Table::new(&["x", "N", "R", "T", "lambda"]);
    for (x, params) in grid {
        let ring = params.g_tilde != 0.0;
        if ring && !is_resonant_symmetric(&params) {
            return Err(Error::Config(
                "a counter-propagating mode is only supported for a resonant symmetric cavity"
                    .into(),
            ));
        }
        for &n in &atoms {
            let (r, t, l) = if is_resonant_symmetric(&params) {
                let xe = params.protocol_cooperativity()?;
                (
                    reflection_probability(xe, n)?,
                    transmission_probability(xe, n)?,
                    scattering_loss(xe, n)?,
                )
            } else {
                let s = scattering_amplitudes(&params, 0.0, n)?;
                (s.reflection, s.transmission, s.loss)
            };
            table.push(vec![
                x.into(),
                Cell::Int(n.into()),
                r.into(),
                t.into(),
                l.into(),
            ]);
        }
    }
    Ok(table)
}

pub fn cmd_spectrum(cfg: &RunConfig) -> Result<Table> {
    let (_, params) = cfg.single_params()?;
    if params.g_tilde != 0.0 {
        return Err(Error::Config(
            "the spectrum does not model a counter-propagating mode".into(),
        ));
    }
    let atoms = cfg.atoms(&[1])?;
    if atoms.len() != 1 {
        return Err(Error::Config("spectrum takes a single atom number".into()));
    }
    let mut table = Table::new(&["omega", "Re_r", "Im_r", "Re_t", "Im_t", "R", "T", "lambda"]);
    for omega in cfg.omega_grid()? {
        let s = scattering_amplitudes(&params, omega, atoms[0])?;
        table.push(vec![
            omega.into(),
            s.r.re.into(),
            s.r.im.into(),
            s.t.re.into(),
            s.t.im.into(),
            s.reflection.into(),
            s.transmission.into(),
            s.loss.into(),
        ]);
    }
    Ok(table)
}

pub const PROTOCOL_COLUMNS: [&str; 12] = [
    "scheme",
    "x",
    "eta",
    "phi",
    "n_max",
    "f_spurious",
    "P_s",
    "F",
    "status",
    "p1c",
    "re_xi",
    "F_unhalved",
];

pub fn cmd_protocol(cfg: &RunConfig) -> Result<Table> {
    let scheme = cfg.single_scheme()?;
    let (x, params) = cfg.single_params()?;
    let etas = cfg.etas()?;
    if etas.len() != 1 {
        return Err(Error::Config("protocol takes a single eta".into()));
    }
    let eta = etas[0];
    let f = cfg.f_spurious()?;
    if f > 0.0 && scheme != Scheme::FockDouble {
        return Err(Error::Config(format!(
            "f_spurious is only modelled for fock-double, not {scheme}"
        )));
    }
    let params = params.eta(eta).spurious(f);
    let (phi, n_max) = match scheme {
        Scheme::FockSingle => (Some(cfg.phi()?), None),
        Scheme::FockDouble => (None, None),
        Scheme::CoherentSingle => (Some(cfg.phi()?), Some(cfg.n_max()?)),
        Scheme::CoherentDouble => (None, Some(cfg.n_max()?)),
    };
    let outcome: SchemeOutcome = match scheme {
        Scheme::FockSingle => fock_single(&params, phi.unwrap_or_default())?,
        Scheme::FockDouble => fock_double(&params)?,
        Scheme::CoherentSingle => {
            coherent_single(&params, phi.unwrap_or_default(), n_max.unwrap_or_default())?
        }
        Scheme::CoherentDouble => coherent_double(&params, n_max.unwrap_or_default())?,
    };
    let unhalved = match scheme {
        Scheme::CoherentDouble => unhalved_double_fidelity(&params, n_max.unwrap_or_default())?,
        _ => None,
    };
    let diag = outcome.diagnostics;
    let mut table = Table::new(&PROTOCOL_COLUMNS);
    table.push(vec![
        scheme.name().into(),
        x.into(),
        eta.into(),
        phi.into(),
        n_max.into(),
        f.into(),
        outcome.p_success.into(),
        outcome.fidelity.into(),
        outcome.status().into(),
        diag.map(|d| d.p1c).into(),
        diag.map(|d| d.re_xi).into(),
        unhalved.into(),
    ]);
    Ok(table)
}

pub const OPTIMIZE_COLUMNS: [&str; 9] = [
    "x",
    "scheme",
    "eta",
    "F_target",
    "phi_opt",
    "n_max_opt",
    "P_s",
    "F_achieved",
    "status",
];

/// Rows in order scheme, η, F target, x. The second value counts rows that
/// produced an optimum.
pub fn cmd_optimize(cfg: &RunConfig) -> Result<(Table, usize)> {
    let schemes = cfg.schemes()?;
    let etas = cfg.etas()?;
    let targets = cfg.f_targets()?;
    let grid = cfg.param_grid_or(Some(default_sweep_grid()))?;
    if cfg.f_spurious()? > 0.0 {
        return Err(Error::Config(
            "f_spurious is not used by the optimizer".into(),
        ));
    }
    let mut jobs = Vec::new();
    for &scheme in &schemes {
        for &eta in &etas {
            for &f_target in &targets {
                for &(x, params) in &grid {
                    jobs.push((scheme, eta, f_target, x, params.eta(eta)));
                }
            }
        }
    }
    use rayon::prelude::*;
    let results: Vec<_> = jobs
        .par_iter()
        .map(|&(scheme, _, f_target, _, params)| optimize(&params, scheme, f_target))
        .collect();

    let mut table = Table::new(&OPTIMIZE_COLUMNS);
    let mut solved = 0;
    for ((scheme, eta, f_target, x, _), result) in jobs.into_iter().zip(results) {
        let head = vec![x.into(), scheme.name().into(), eta.into(), f_target.into()];
        let tail = match result {
            Ok(r) => {
                solved += 1;
                let status = match r.status {
                    OptimizationStatus::Optimal => "optimal",
                    OptimizationStatus::AtCeiling => "at-ceiling",
                };
                let phi = match scheme {
                    Scheme::FockDouble | Scheme::CoherentDouble => Cell::Empty,
                    _ => r.phi_opt.into(),
                };
                vec![
                    phi,
                    r.n_max_opt.into(),
                    r.p_success.into(),
                    r.fidelity_achieved.into(),
                    status.into(),
                ]
            }
            Err(Error::Infeasible(_)) => vec![
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                "infeasible".into(),
            ],
            Err(e @ Error::Domain(_)) => return Err(Error::Config(e.to_string())),
            Err(_) => vec![
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                Cell::Empty,
                "error".into(),
            ],
        };
        table.push(head.into_iter().chain(tail).collect());
    }
    Ok((table, solved))
}

pub fn verify_config(cfg: &RunConfig) -> Result<VerifyConfig> {
    let samples = cfg.samples.unwrap_or(DEFAULT_SAMPLES);
    if samples < crate::oracle::monte_carlo::MIN_SAMPLES {
        return Err(Error::Config(format!(
            "samples must be at least {}",
            crate::oracle::monte_carlo::MIN_SAMPLES
        )));
    }
    let tolerance_scale = cfg.tolerance_scale.unwrap_or(1.0);
    if !(tolerance_scale.is_finite() && tolerance_scale >= 0.0) {
        return Err(Error::Config(format!(
            "tolerance scale must be >= 0, got {tolerance_scale}"
        )));
    }
    Ok(VerifyConfig {
        seed: cfg.seed.unwrap_or(DEFAULT_SEED),
        samples,
        tolerance_scale,
    })
}

fn comparison_name(c: Comparison) -> &'static str {
    match c {
        Comparison::Within => "within",
        Comparison::AtMost => "at-most",
        Comparison::Below => "below",
        Comparison::Above => "above",
    }
}

pub fn render_verify(report: &VerifyReport, format: Format) -> String {
    match format {
        Format::Csv => {
            let mut table = Table::new(&[
                "name",
                "comparison",
                "expected",
                "observed",
                "tolerance",
                "pass",
                "detail",
            ]);
            for c in &report.checks {
                table.push(vec![
                    c.name.clone().into(),
                    comparison_name(c.comparison).into(),
                    c.expected.into(),
                    c.observed.into(),
                    c.tolerance.into(),
                    Cell::Bool(c.pass),
                    c.detail.clone().into(),
                ]);
            }
            table.to_csv()
        }
        Format::Json => {
            let checks: Vec<Value> = report
                .checks
                .iter()
                .map(|c| {
                    let mut m = Map::new();
                    m.insert("name".into(), c.name.clone().into());
                    m.insert("comparison".into(), comparison_name(c.comparison).into());
                    m.insert("expected".into(), json_num(c.expected));
                    m.insert("observed".into(), json_num(c.observed));
                    m.insert("tolerance".into(), json_num(c.tolerance));
                    m.insert("pass".into(), c.pass.into());
                    m.insert("detail".into(), c.detail.clone().into());
                    Value::Object(m)
                })
                .collect();
            let mut root = Map::new();
            root.insert("all_pass".into(), report.all_pass.into());
            root.insert("seed".into(), report.seed.into());
            root.insert("samples".into(), report.samples.into());
            root.insert("checks".into(), Value::Array(checks));
            let mut text =
                serde_json::to_string_pretty(&Value::Object(root)).expect("serializable");
            text.push('\n');
            text
        }
    }
}

pub fn cmd_verify(cfg: &RunConfig) -> Result<Output> {
    let vc = verify_config(cfg)?;
    let report = run_suite(&vc);
    // Verification reports default to JSON.
    let format = cfg.format.unwrap_or(Format::Json);
    Ok(Output {
        text: render_verify(&report, format),
        exit_code: if report.all_pass { 0 } else { 1 },
    })
}

pub(super) fn table_output(table: &Table, cfg: &RunConfig) -> Output {
    Output {
        text: render(table, cfg.format()),
        exit_code: 0,
    }
}

#[cfg(test)]
mod tests {
    use super::super::config::OneOrMany;
    use super::*;

    fn cfg_x(x: f64) -> RunConfig {
        RunConfig {
            x: Some(OneOrMany::One(x)),
            ..Default::default()
        }
    }

    #[test]
    fn response_row_at_x1() {
        let cfg = RunConfig {
            n: Some(OneOrMany::One(1)),
            ..cfg_x(1.0)
        };
        let csv = cmd_response(&cfg).unwrap().to_csv();
        assert_eq!(csv, "x,N,R,T,lambda\n1.0,1,0.64,0.04,0.32\n");
    }

    #[test]
    fn protocol_requires_phi() {
        let cfg = RunConfig {
            scheme: Some(OneOrMany::One("fock-single".into())),
            ..cfg_x(1.0)
        };
        assert!(matches!(cmd_protocol(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn spurious_rejected_for_coherent() {
        let cfg = RunConfig {
            scheme: Some(OneOrMany::One("coherent-double".into())),
            n_max: Some(2.0),
            f_spurious: Some(0.01),
            ..cfg_x(1.0)
        };
        assert!(matches!(cmd_protocol(&cfg), Err(Error::Config(_))));
    }

    #[test]
    fn coherent_double_reports_unhalved() {
        let cfg = RunConfig {
            scheme: Some(OneOrMany::One("coherent-double".into())),
            n_max: Some(2.0),
            ..cfg_x(1.0)
        };
        let t = cmd_protocol(&cfg).unwrap();
        match t.rows[0][11] {
            Cell::Num(v) => assert!(v > 1.0),
            ref other => panic!("unexpected cell {other:?}"),
        }
    }

    #[test]
    fn optimize_marks_infeasible_rows() {
        let cfg = RunConfig {
            scheme: Some(OneOrMany::One("coherent-double".into())),
            f_target: Some(OneOrMany::One(0.99)),
            x: Some(OneOrMany::Many(vec![0.0, 10.0])),
            ..Default::default()
        };
        let (t, solved) = cmd_optimize(&cfg).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(solved, 1);
        assert_eq!(t.rows[0][8], Cell::Text("infeasible".into()));
    }
}
