//! Backward Euler solver for the linearized velocity/strain system
//!
//! ```text
//! ρ_t·∂v/∂t − μ·∂²v/∂x² − E√ρ̄·∂ε/∂x = 0
//! ∂ε/∂t − ∂v/∂x + α·ε = 0
//! ```
//!
//! with `v = 0` at both ends and no boundary condition on `ε`. Each step
//! solves the block system
//!
//! ```text
//! [ ρ_t·M + S_vv·δt   S_vε·δt      ] [v]   [ρ_t·M·v_old]
//! [ S_εv·δt           M + S_εε·δt  ] [ε] = [M·ε_old    ]
//! ```
//!
//! with Dirichlet velocity rows replaced by identity rows. The coefficients
//! are constant, so the banded factorization is computed once per
//! (mesh, parameters, δt) and reused across steps.

use thiserror::Error;

use crate::banded::{BandedLu, LinalgError};
use crate::fem::{assemble_mech_matrix, element_mass, FemError, Mesh};
use crate::field::{FieldState, Variable};
use crate::params::ParameterSet;

#[derive(Debug, Error)]
pub enum MechError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error("block system is singular (check dt and parameters): {0}")]
    Singular(LinalgError),
    #[error("time step must be positive, got {0}")]
    BadDt(f64),
    #[error("run horizon t_end = {t_end} is shorter than dt = {dt}")]
    BadHorizon { t_end: f64, dt: f64 },
    #[error("state has {state} nodes but mesh has {mesh}")]
    SizeMismatch { state: usize, mesh: usize },
    #[error("non-finite values after a step")]
    NonFinite,
}

impl From<LinalgError> for MechError {
    fn from(e: LinalgError) -> Self {
        MechError::Singular(e)
    }
}

/// Velocity and effective strain at one instant.
#[derive(Debug, Clone)]
pub struct MechState {
    pub t: f64,
    pub v: FieldState,
    pub eps: FieldState,
}

impl MechState {
    pub fn new(t: f64, v: Vec<f64>, eps: Vec<f64>) -> Self {
        MechState {
            t,
            v: FieldState::new(Variable::V, t, v),
            eps: FieldState::new(Variable::Eps, t, eps),
        }
    }

    pub fn n_nodes(&self) -> usize {
        self.v.len()
    }

    pub fn set_time(&mut self, t: f64) {
        self.t = t;
        self.v.t = t;
        self.eps.t = t;
    }

    /// ∞-norm over both fields.
    pub fn inf_norm(&self) -> f64 {
        self.v.max_abs().max(self.eps.max_abs())
    }
}

/// Pre-factored step operator for a fixed (mesh, parameters, dt).
pub struct MechSystem<'a> {
    p: &'a ParameterSet,
    mesh: &'a Mesh,
    dt: f64,
    lu: BandedLu,
    mass: [f64; 2], // consistent element mass row: (h/3, h/6)
}

impl<'a> MechSystem<'a> {
    pub fn new(p: &'a ParameterSet, mesh: &'a Mesh, dt: f64) -> Result<Self, MechError> {
        if !(dt > 0.0) {
            return Err(MechError::BadDt(dt));
        }
        let matrix = assemble_mech_matrix(mesh, p, dt)?;
        let lu = matrix.factor()?;
        let m = element_mass(mesh.h(), false)?;
        Ok(MechSystem {
            p,
            mesh,
            dt,
            lu,
            mass: [m[0][0], m[0][1]],
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step(&self, state: &MechState) -> Result<MechState, MechError> {
        let n_nodes = self.mesh.n_nodes();
        if state.n_nodes() != n_nodes {
            return Err(MechError::SizeMismatch {
                state: state.n_nodes(),
                mesh: n_nodes,
            });
        }
        let (md, mo) = (self.mass[0], self.mass[1]);
        let mut rhs = vec![0.0; 2 * n_nodes];
        for e in 0..self.mesh.n_elements() {
            let (i, j) = self.mesh.element_nodes(e);
            let (vi, vj) = (state.v.values[i], state.v.values[j]);
            let (ei, ej) = (state.eps.values[i], state.eps.values[j]);
            rhs[2 * i] += self.p.rho_t * (md * vi + mo * vj);
            rhs[2 * j] += self.p.rho_t * (mo * vi + md * vj);
            rhs[2 * i + 1] += md * ei + mo * ej;
            rhs[2 * j + 1] += mo * ei + md * ej;
        }
        rhs[0] = 0.0;
        rhs[2 * (n_nodes - 1)] = 0.0;
        self.lu.solve_in_place(&mut rhs)?;
        let mut v = Vec::with_capacity(n_nodes);
        let mut eps = Vec::with_capacity(n_nodes);
        for i in 0..n_nodes {
            v.push(rhs[2 * i]);
            eps.push(rhs[2 * i + 1]);
        }
        // exact homogeneous Dirichlet
        v[0] = 0.0;
        v[n_nodes - 1] = 0.0;
        let out = MechState::new(state.t + self.dt, v, eps);
        if !out.v.all_finite() || !out.eps.all_finite() {
            return Err(MechError::NonFinite);
        }
        Ok(out)
    }
}

/// Single step without operator reuse (assembles and factors internally).
pub fn mech_step(
    state: &MechState,
    p: &ParameterSet,
    mesh: &Mesh,
    dt: f64,
) -> Result<MechState, MechError> {
    MechSystem::new(p, mesh, dt)?.step(state)
}

/// Consistent-mass quadrature of ∫ε dx over the domain (trapezoid weights).
pub fn strain_integral(state: &MechState, mesh: &Mesh) -> f64 {
    let h = mesh.h();
    let mut total = 0.0;
    for e in 0..mesh.n_elements() {
        let (i, j) = mesh.element_nodes(e);
        total += h / 2.0 * (state.eps.values[i] + state.eps.values[j]);
    }
    total
}

pub struct MechSample<'a> {
    pub t: f64,
    pub x: &'a [f64],
    pub v: &'a [f64],
    pub eps: &'a [f64],
}

pub trait MechObserver {
    fn observe(&mut self, sample: &MechSample);
}

impl<F: FnMut(&MechSample)> MechObserver for F {
    fn observe(&mut self, sample: &MechSample) {
        self(sample)
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct MechSampleStats {
    pub t: f64,
    pub min_v: f64,
    pub max_v: f64,
    pub min_eps: f64,
    pub max_eps: f64,
    pub max_abs_v: f64,
    /// Largest |ε − ε_eq| where ε_eq is 0 for α > 0 and the conserved mean
    /// of the initial strain for α = 0.
    pub max_abs_eps_dev: f64,
    pub strain_integral: f64,
}

#[derive(Debug)]
pub struct MechSummary {
    pub samples: Vec<MechSampleStats>,
    pub final_state: MechState,
    /// Strain equilibrium used in the deviation diagnostics.
    pub eps_eq: f64,
    /// Midpoint velocity at every step, (t, v).
    pub midpoint_v: Vec<(f64, f64)>,
    /// ∫ε dx at every step (index 0 = initial state).
    pub strain_integrals: Vec<f64>,
    /// Largest ∞-norm of (v, ε) over all visited states.
    pub max_inf_norm: f64,
}

/// Advance to `t_end` with a fixed step, sampling at the requested times.
pub fn run_mech(
    p: &ParameterSet,
    mesh: &Mesh,
    ic: &MechState,
    dt: f64,
    t_end: f64,
    sample_times: &[f64],
    observers: &mut [&mut dyn MechObserver],
) -> Result<MechSummary, MechError> {
    if !(dt > 0.0) {
        return Err(MechError::BadDt(dt));
    }
    if t_end < dt {
        return Err(MechError::BadHorizon { t_end, dt });
    }
    let system = MechSystem::new(p, mesh, dt)?;
    let n_steps = (t_end / dt).ceil() as usize;
    let eps_eq = if p.alpha > 0.0 {
        0.0
    } else {
        strain_integral(ic, mesh) / mesh.length()
    };
    let mid = mesh.n_nodes() / 2;

    let mut state = ic.clone();
    let mut samples = Vec::new();
    let mut midpoint_v = Vec::with_capacity(n_steps + 1);
    let mut strain_integrals = Vec::with_capacity(n_steps + 1);
    let mut max_inf_norm = state.inf_norm();

    let mut next_sample = 0usize;
    let emit = |state: &MechState,
                    samples: &mut Vec<MechSampleStats>,
                    observers: &mut [&mut dyn MechObserver]| {
        let mut st = MechSampleStats {
            t: state.t,
            min_v: f64::INFINITY,
            max_v: f64::NEG_INFINITY,
            min_eps: f64::INFINITY,
            max_eps: f64::NEG_INFINITY,
            max_abs_v: 0.0,
            max_abs_eps_dev: 0.0,
            strain_integral: strain_integral(state, mesh),
        };
        for &v in &state.v.values {
            st.min_v = st.min_v.min(v);
            st.max_v = st.max_v.max(v);
            st.max_abs_v = st.max_abs_v.max(v.abs());
        }
        for &e in &state.eps.values {
            st.min_eps = st.min_eps.min(e);
            st.max_eps = st.max_eps.max(e);
            st.max_abs_eps_dev = st.max_abs_eps_dev.max((e - eps_eq).abs());
        }
        samples.push(st);
        let s = MechSample {
            t: state.t,
            x: mesh.nodes(),
            v: &state.v.values,
            eps: &state.eps.values,
        };
        for obs in observers.iter_mut() {
            obs.observe(&s);
        }
    };

    midpoint_v.push((state.t, state.v.values[mid]));
    strain_integrals.push(strain_integral(&state, mesh));
    while next_sample < sample_times.len() && sample_times[next_sample] <= state.t {
        emit(&state, &mut samples, observers);
        next_sample += 1;
    }
    for step in 1..=n_steps {
        state = system.step(&state)?;
        state.set_time(ic.t + step as f64 * dt);
        midpoint_v.push((state.t, state.v.values[mid]));
        strain_integrals.push(strain_integral(&state, mesh));
        max_inf_norm = max_inf_norm.max(state.inf_norm());
        while next_sample < sample_times.len()
            && sample_times[next_sample] <= state.t + 1e-9 * dt
        {
            emit(&state, &mut samples, observers);
            next_sample += 1;
        }
    }
    Ok(MechSummary {
        samples,
        final_state: state,
        eps_eq,
        midpoint_v,
        strain_integrals,
        max_inf_norm,
    })
}

/// Count sign changes of a sampled scalar time series inside `[t_from, t_to]`,
/// ignoring values below `floor` (numerical zeros).
pub fn sign_changes(series: &[(f64, f64)], t_from: f64, t_to: f64, floor: f64) -> usize {
    let mut count = 0;
    let mut last: Option<f64> = None;
    for &(t, v) in series {
        if t < t_from || t > t_to || v.abs() <= floor {
            continue;
        }
        if let Some(prev) = last {
            if prev.signum() != v.signum() {
                count += 1;
            }
        }
        last = Some(v);
    }
    count
}
