//! Weakly driven two-atom cavity master equation.
//!
//! Basis ordering is `|a1, a2, n⟩ → (3·a1 + a2)·(n_c + 1) + n` with atomic
//! levels `0 = |0⟩`, `1 = |1⟩`, `2 = |e⟩` and cavity Fock states
//! `n = 0..=n_c`. Operators are dense on the full space; the Liouvillian is
//! assembled only on the subspace reachable from the initial state, which is
//! invariant under the Hamiltonian and every collapse operator and therefore
//! exact.
//!
//! The frame rotates at the probe frequency. With the probe offset `ω` from
//! the cavity,
//!
//! ```text
//! H = −ω c†c + Σ_k [(δ − ω) |e⟩⟨e|_k + g (|e⟩⟨1|_k c + c† |1⟩⟨e|_k)]
//!     + i √(κa Φ) (c† − c)
//! ```
//!
//! and the collapse operators are `√κa c`, `√κb c`, `√γ |1⟩⟨e|_k`.

use std::collections::BTreeSet;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{domain, Error, Result};
use crate::model::CavityParams;

type CMatrix = DMatrix<Complex64>;
type CVector = DVector<Complex64>;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Largest drive flux (units of γ) accepted without an explicit override.
pub const WEAK_DRIVE_LIMIT: f64 = 1e-2;

/// Largest steady-state population tolerated in the top Fock state.
pub const BOUNDARY_POPULATION_LIMIT: f64 = 1e-8;

pub const DEFAULT_TRUNCATION: usize = 3;
const MAX_TRUNCATION: usize = 12;

pub const ATOM_LEVELS: usize = 3;
pub const GROUND_0: usize = 0;
pub const GROUND_1: usize = 1;
pub const EXCITED: usize = 2;

/// Probe drive applied through mirror `a`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Drive {
    /// Incident photon flux Φ in units of γ.
    pub flux: f64,
    /// Probe frequency relative to the cavity.
    pub omega: f64,
    /// Skip the weak-drive guard.
    pub allow_strong: bool,
}

impl Drive {
    pub fn resonant(flux: f64) -> Self {
        Self {
            flux,
            omega: 0.0,
            allow_strong: false,
        }
    }
}

/// Hilbert-space layout: two three-level atoms and a truncated cavity mode.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims {
    pub photon_cutoff: usize,
}

impl Dims {
    pub fn photons(&self) -> usize {
        self.photon_cutoff + 1
    }

    pub fn total(&self) -> usize {
        ATOM_LEVELS * ATOM_LEVELS * self.photons()
    }

    pub fn index(&self, atom1: usize, atom2: usize, photons: usize) -> usize {
        (ATOM_LEVELS * atom1 + atom2) * self.photons() + photons
    }

    /// `(atom1, atom2, photons)` for a basis index.
    pub fn levels(&self, index: usize) -> (usize, usize, usize) {
        let atoms = index / self.photons();
        (
            atoms / ATOM_LEVELS,
            atoms % ATOM_LEVELS,
            index % self.photons(),
        )
    }
}

#[derive(Debug, Clone)]
pub struct LindbladSystem {
    pub dims: Dims,
    pub params: CavityParams,
    pub drive: Drive,
    /// Atoms initially in `|1⟩` (the rest start in `|0⟩`).
    pub coupled_atoms: usize,
    pub hamiltonian: CMatrix,
    pub collapse_ops: Vec<CMatrix>,
    pub annihilation: CMatrix,
    /// `|e⟩⟨e|` for each atom.
    pub excited_projectors: [CMatrix; 2],
}

fn atom_op(from: usize, to: usize) -> CMatrix {
    let mut m = CMatrix::zeros(ATOM_LEVELS, ATOM_LEVELS);
    m[(to, from)] = ONE;
    m
}

fn destroy(photons: usize) -> CMatrix {
    let mut m = CMatrix::zeros(photons, photons);
    for n in 1..photons {
        m[(n - 1, n)] = Complex64::new((n as f64).sqrt(), 0.0);
    }
    m
}

fn embed(atom1: &CMatrix, atom2: &CMatrix, cavity: &CMatrix) -> CMatrix {
    atom1.kronecker(atom2).kronecker(cavity)
}

/// Build the driven generator with the default guard and a resonant probe.
pub fn build_system(
    params: &CavityParams,
    coupled_atoms: usize,
    photon_cutoff: usize,
    drive_flux: f64,
) -> Result<LindbladSystem> {
    build_system_with(
        params,
        coupled_atoms,
        photon_cutoff,
        Drive::resonant(drive_flux),
    )
}

pub fn build_system_with(
    params: &CavityParams,
    coupled_atoms: usize,
    photon_cutoff: usize,
    drive: Drive,
) -> Result<LindbladSystem> {
    params.validate()?;
    if photon_cutoff < 2 {
        return Err(Error::Truncation(format!(
            "photon cutoff must be >= 2, got {photon_cutoff}"
        )));
    }
    if coupled_atoms > 2 {
        return Err(domain(format!("at most two atoms, got {coupled_atoms}")));
    }
    if !(drive.flux.is_finite() && drive.flux >= 0.0) || !drive.omega.is_finite() {
        return Err(domain("drive flux must be finite and >= 0"));
    }
    if drive.flux > WEAK_DRIVE_LIMIT * params.gamma && !drive.allow_strong {
        return Err(domain(format!(
            "drive flux {} exceeds the weak-drive limit {WEAK_DRIVE_LIMIT}",
            drive.flux
        )));
    }

    let dims = Dims { photon_cutoff };
    let id_atom = CMatrix::identity(ATOM_LEVELS, ATOM_LEVELS);
    let id_cav = CMatrix::identity(dims.photons(), dims.photons());
    let a = destroy(dims.photons());
    let lower = atom_op(EXCITED, GROUND_1);
    let excited = atom_op(EXCITED, EXCITED);

    let c = embed(&id_atom, &id_atom, &a);
    let c_dag = c.adjoint();
    let lowering = [
        embed(&lower, &id_atom, &id_cav),
        embed(&id_atom, &lower, &id_cav),
    ];
    let excited_projectors = [
        embed(&excited, &id_atom, &id_cav),
        embed(&id_atom, &excited, &id_cav),
    ];

    let g = Complex64::new(params.g, 0.0);
    let mut h = &c_dag * &c * Complex64::new(-drive.omega, 0.0);
    for k in 0..2 {
        let raise = lowering[k].adjoint();
        h += &excited_projectors[k] * Complex64::new(params.delta - drive.omega, 0.0);
        h += (&raise * &c) * g + (&c_dag * &lowering[k]) * g.conj();
    }
    let amplitude = (params.kappa_a * drive.flux).sqrt();
    h += (&c_dag - &c) * Complex64::new(0.0, amplitude);

    let scale = |m: &CMatrix, rate: f64| m * Complex64::new(rate.sqrt(), 0.0);
    let collapse_ops = vec![
        scale(&c, params.kappa_a),
        scale(&c, params.kappa_b),
        scale(&lowering[0], params.gamma),
        scale(&lowering[1], params.gamma),
    ];

    Ok(LindbladSystem {
        dims,
        params: *params,
        drive,
        coupled_atoms,
        hamiltonian: h,
        collapse_ops,
        annihilation: c,
        excited_projectors,
    })
}

impl LindbladSystem {
    /// Basis index of the initial product state (first `coupled_atoms` atoms
    /// in `|1⟩`, cavity in vacuum).
    pub fn initial_index(&self) -> usize {
        let level = |k: usize| {
            if k < self.coupled_atoms {
                GROUND_1
            } else {
                GROUND_0
            }
        };
        self.dims.index(level(0), level(1), 0)
    }

    /// Largest deviation of the Hamiltonian from self-adjointness.
    pub fn hermiticity_error(&self) -> f64 {
        (&self.hamiltonian - self.hamiltonian.adjoint()).camax()
    }

    /// Basis states reachable from `seeds` through the Hamiltonian (both
    /// directions) and the collapse operators (forward). Sorted.
    pub fn reachable(&self, seeds: &[usize]) -> Vec<usize> {
        let dim = self.dims.total();
        let mut seen: BTreeSet<usize> = seeds.iter().copied().collect();
        let mut stack: Vec<usize> = seeds.to_vec();
        while let Some(j) = stack.pop() {
            for i in 0..dim {
                let linked = self.hamiltonian[(i, j)] != ZERO
                    || self.hamiltonian[(j, i)] != ZERO
                    || self.collapse_ops.iter().any(|l| l[(i, j)] != ZERO);
                if linked && seen.insert(i) {
                    stack.push(i);
                }
            }
        }
        seen.into_iter().collect()
    }

    /// Liouvillian restricted to `subspace`, acting on column-stacked density
    /// matrices: `vec(ρ)[i + j·d] = ρ[i, j]`.
    pub fn liouvillian(&self, subspace: &[usize]) -> CMatrix {
        let d = subspace.len();
        let h = restrict(&self.hamiltonian, subspace);
        let id = CMatrix::identity(d, d);
        let minus_i = Complex64::new(0.0, -1.0);
        let mut l = (id.kronecker(&h) - h.transpose().kronecker(&id)) * minus_i;
        for op in &self.collapse_ops {
            let op = restrict(op, subspace);
            let n = op.adjoint() * &op;
            l += op.conjugate().kronecker(&op);
            l -= (id.kronecker(&n) + n.transpose().kronecker(&id)) * Complex64::new(0.5, 0.0);
        }
        l
    }
}

pub(crate) fn restrict(op: &CMatrix, subspace: &[usize]) -> CMatrix {
    let d = subspace.len();
    CMatrix::from_fn(d, d, |i, j| op[(subspace[i], subspace[j])])
}

fn unvec(v: &CVector, d: usize) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| v[i + j * d])
}

fn vec_of(m: &CMatrix) -> CVector {
    let d = m.nrows();
    CVector::from_fn(d * d, |k, _| m[(k % d, k / d)])
}

fn expect(op: &CMatrix, rho: &CMatrix) -> Complex64 {
    (op * rho).trace()
}

/// Steady state on a subspace together with its quality figures.
#[derive(Debug, Clone)]
pub struct SteadyState {
    pub subspace: Vec<usize>,
    pub rho: CMatrix,
    pub residual: f64,
    pub trace_error: f64,
    pub min_eigenvalue: f64,
    pub boundary_population: f64,
}

const STEADY_RESIDUAL: f64 = 1e-10;

/// Null vector of the Liouvillian with unit trace: one row is replaced by the
/// trace functional. Falls back to long-time propagation if the direct solve
/// is singular or inaccurate.
pub fn steady_state(system: &LindbladSystem) -> Result<SteadyState> {
    let subspace = system.reachable(&[system.initial_index()]);
    let d = subspace.len();
    let l = system.liouvillian(&subspace);

    let mut a = l.clone();
    let mut rhs = CVector::zeros(d * d);
    for col in 0..d * d {
        a[(0, col)] = ZERO;
    }
    for i in 0..d {
        a[(0, i + i * d)] = ONE;
    }
    rhs[0] = ONE;

    let direct = a.lu().solve(&rhs);
    let scale = l.camax().max(1.0);
    let residual_of = |v: &CVector| (&l * v).camax() / scale;
    let v = match direct {
        Some(v) if residual_of(&v) < STEADY_RESIDUAL => v,
        _ => propagate_to_steady(&l, d, system.initial_index(), &subspace)?,
    };
    let residual = residual_of(&v);

    let raw = unvec(&v, d);
    let rho = (&raw + raw.adjoint()) * Complex64::new(0.5, 0.0);
    let trace_error = (rho.trace() - ONE).norm();
    let min_eigenvalue = rho
        .clone()
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min);
    let top = system.dims.photon_cutoff;
    let boundary_population = subspace
        .iter()
        .enumerate()
        .filter(|(_, &s)| system.dims.levels(s).2 == top)
        .map(|(i, _)| rho[(i, i)].re)
        .sum();

    Ok(SteadyState {
        subspace,
        rho,
        residual,
        trace_error,
        min_eigenvalue,
        boundary_population,
    })
}

fn propagate_to_steady(l: &CMatrix, d: usize, start: usize, subspace: &[usize]) -> Result<CVector> {
    let mut rho0 = CMatrix::zeros(d, d);
    let pos = subspace
        .iter()
        .position(|&s| s == start)
        .expect("initial state lies in its own reachable subspace");
    rho0[(pos, pos)] = ONE;
    let mut v = vec_of(&rho0);
    let scale = l.camax().max(1.0);
    let mut step = l * Complex64::new(10.0, 0.0);
    let mut residual = f64::INFINITY;
    for _ in 0..40 {
        let propagator = step.exp();
        v = &propagator * &v;
        residual = (l * &v).camax() / scale;
        if residual < STEADY_RESIDUAL {
            return Ok(v);
        }
        step *= Complex64::new(2.0, 0.0);
    }
    Err(Error::NotConverged {
        context: "steady-state propagation".into(),
        residual,
    })
}

/// Reflection, transmission and loss probabilities from the steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyResponse {
    pub reflection: f64,
    pub transmission: f64,
    pub loss: f64,
    pub photon_cutoff: usize,
    pub boundary_population: f64,
    pub residual: f64,
}

/// Output fluxes normalized by the incident flux:
/// `R = (Φ − 2√κa Re(α*⟨c⟩) + κa⟨c†c⟩)/Φ`, `T = κb⟨c†c⟩/Φ`,
/// `λ = γ Σ_k ⟨|e⟩⟨e|_k⟩/Φ`, with `α = √Φ`.
pub fn steady_state_rt(system: &LindbladSystem) -> Result<SteadyResponse> {
    let flux = system.drive.flux;
    if flux <= 0.0 {
        return Err(domain("steady-state response needs a positive drive flux"));
    }
    let ss = steady_state(system)?;
    if ss.residual >= STEADY_RESIDUAL {
        return Err(Error::NotConverged {
            context: "Liouvillian null-space solve".into(),
            residual: ss.residual,
        });
    }
    if ss.trace_error > 1e-10 || ss.min_eigenvalue < -1e-10 {
        return Err(Error::Diagnostic(format!(
            "steady state is not a density matrix (trace error {:.2e}, min eigenvalue {:.2e})",
            ss.trace_error, ss.min_eigenvalue
        )));
    }
    if ss.boundary_population > BOUNDARY_POPULATION_LIMIT {
        return Err(Error::Truncation(format!(
            "population {:.2e} in Fock state {} exceeds {BOUNDARY_POPULATION_LIMIT:e}",
            ss.boundary_population, system.dims.photon_cutoff
        )));
    }

    let p = &system.params;
    let c = restrict(&system.annihilation, &ss.subspace);
    let n = c.adjoint() * &c;
    let field = expect(&c, &ss.rho);
    let photons = expect(&n, &ss.rho).re;
    let alpha = flux.sqrt();
    let excited: f64 = system
        .excited_projectors
        .iter()
        .map(|proj| expect(&restrict(proj, &ss.subspace), &ss.rho).re)
        .sum();

    Ok(SteadyResponse {
        reflection: (flux - 2.0 * p.kappa_a.sqrt() * alpha * field.re + p.kappa_a * photons) / flux,
        transmission: p.kappa_b * photons / flux,
        loss: p.gamma * excited / flux,
        photon_cutoff: system.dims.photon_cutoff,
        boundary_population: ss.boundary_population,
        residual: ss.residual,
    })
}

/// [`steady_state_rt`] starting from the default truncation and raising it
/// until the top Fock state is empty enough.
pub fn steady_response(
    params: &CavityParams,
    coupled_atoms: usize,
    drive: Drive,
) -> Result<SteadyResponse> {
    let mut cutoff = DEFAULT_TRUNCATION;
    loop {
        let system = build_system_with(params, coupled_atoms, cutoff, drive)?;
        match steady_state_rt(&system) {
            Err(Error::Truncation(_)) if cutoff < MAX_TRUNCATION => cutoff += 1,
            other => return other,
        }
    }
}

/// Log-linear fit of `|ξ(t)|` for `ξ = |01⟩⟨10|` under continuous drive.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoherenceFit {
    /// Fitted decay rate of `|ξ|` (units of γ).
    pub rate: f64,
    /// `λ Φ` from the closed-form loss.
    pub predicted: f64,
    /// RMS residual of the fit in `ln|ξ|`.
    pub rms_residual: f64,
    pub window: (f64, f64),
}

const FIT_SAMPLES: usize = 41;
const FIT_RESIDUAL_LIMIT: f64 = 1e-3;
/// Window length used when no decay is predicted.
const UNDRIVEN_WINDOW: f64 = 1e3;

/// Evolve `(|01⟩ + |10⟩)/√2 ⊗ |vac⟩` and fit the decay of the inter-atomic
/// coherence over `[10/κ, 10/κ + 5/(λΦ)]`.
pub fn coherence_decay_rate(
    params: &CavityParams,
    drive: Drive,
    photon_cutoff: usize,
) -> Result<CoherenceFit> {
    let system = build_system_with(params, 0, photon_cutoff, drive)?;
    let dims = system.dims;
    let ket01 = dims.index(GROUND_0, GROUND_1, 0);
    let ket10 = dims.index(GROUND_1, GROUND_0, 0);
    let subspace = system.reachable(&[ket01, ket10]);
    let d = subspace.len();
    let pos = |s: usize| {
        subspace
            .iter()
            .position(|&t| t == s)
            .expect("seed in subspace")
    };

    let mut rho = CMatrix::zeros(d, d);
    for &i in &[pos(ket01), pos(ket10)] {
        for &j in &[pos(ket01), pos(ket10)] {
            rho[(i, j)] = Complex64::new(0.5, 0.0);
        }
    }
    // ⟨ξ⟩ = Σ_n ⟨10, n|ρ|01, n⟩
    let pairs: Vec<(usize, usize)> = (0..dims.photons())
        .filter_map(|n| {
            let row = subspace
                .iter()
                .position(|&s| s == dims.index(GROUND_1, GROUND_0, n))?;
            let col = subspace
                .iter()
                .position(|&s| s == dims.index(GROUND_0, GROUND_1, n))?;
            Some((row, col))
        })
        .collect();
    let coherence = |v: &CVector| -> f64 {
        pairs
            .iter()
            .map(|&(r, c)| v[r + c * d])
            .sum::<Complex64>()
            .norm()
    };

    let x = params.protocol_cooperativity()?;
    let predicted = crate::model::scattering_loss(x, 1)? * drive.flux;
    let start = 10.0 / params.kappa();
    let length = if predicted > 0.0 {
        5.0 / predicted
    } else {
        UNDRIVEN_WINDOW
    };
    let dt = length / (FIT_SAMPLES - 1) as f64;

    let l = system.liouvillian(&subspace);
    let mut v = (&l * Complex64::new(start, 0.0)).exp() * vec_of(&rho);
    let step = (&l * Complex64::new(dt, 0.0)).exp();
    let mut times = Vec::with_capacity(FIT_SAMPLES);
    let mut logs = Vec::with_capacity(FIT_SAMPLES);
    for k in 0..FIT_SAMPLES {
        if k > 0 {
            v = &step * &v;
        }
        let xi = coherence(&v);
        if xi.is_nan() || xi <= 0.0 {
            return Err(Error::Diagnostic(format!(
                "coherence vanished at t = {}",
                start + k as f64 * dt
            )));
        }
        times.push(start + k as f64 * dt);
        logs.push(xi.ln());
    }

    let (slope, intercept) = least_squares_line(&times, &logs);
    let rms_residual = (times
        .iter()
        .zip(&logs)
        .map(|(t, y)| (y - (intercept + slope * t)).powi(2))
        .sum::<f64>()
        / FIT_SAMPLES as f64)
        .sqrt();
    if rms_residual > FIT_RESIDUAL_LIMIT {
        return Err(Error::Diagnostic(format!(
            "coherence decay is not exponential: rms log residual {rms_residual:.2e}"
        )));
    }
    Ok(CoherenceFit {
        rate: -slope,
        predicted,
        rms_residual,
        window: (start, start + length),
    })
}

fn least_squares_line(x: &[f64], y: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    let slope = sxy / sxx;
    (slope, my - slope * mx)
}
