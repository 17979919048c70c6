//! Reaction-transport solver for chemokines (c), fibroblasts (N),
//! myofibroblasts (M) and collagen (ρ) on a fixed domain (zero displacement
//! velocity).
//!
//! Time stepping is backward Euler with mass lumping. The nonlinearity is
//! handled monolithically with inner Picard iterations: transport matrices
//! and load vectors are frozen at the current iterate, the four linear
//! systems are solved simultaneously, and the loop repeats until the
//! relative increment of every field drops below tolerance.
//!
//! Kinetics (pointwise):
//!
//! ```text
//! R_c = k_c·[c/(a_c_II+c)]·[N+η_I·M] − δ_c·g·c
//! R_N = r_F·[1+r_F_max·c/(a_c_I+c)]·[1−κ_F·F]·N^(1+q) − k_F·c·N − δ_N·N
//! R_M = r_F·[(1+r_F_max)·c/(a_c_I+c)]·[1−κ_F·F]·M^(1+q) + k_F·c·N − δ_M·M
//! R_ρ = k_ρ·[1+k_ρ_max·c/(a_c_IV+c)]·[N+η_I·M] − δ_ρ·g·ρ
//! g   = [N+η_II·M]·ρ/(1+a_c_III·c),   F = N+M
//! ```
//!
//! Collagen has no flux; c diffuses; N and M diffuse (density-weighted) and
//! drift chemotactically along the chemokine gradient.

use thiserror::Error;

use crate::banded::LinalgError;
use crate::fem::{assemble_scalar, chem_element_blocks, ChemLocal, FemError, Mesh};
use crate::field::{FieldState, Variable};
use crate::params::ParameterSet;

/// Densities below this floor are clamped inside the `z^q` powers (`q < 0`
/// blows up at zero). The floor is far below every simulated density.
pub const DENSITY_FLOOR: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum ChemError {
    #[error(transparent)]
    Fem(#[from] FemError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("time step must be positive, got {0}")]
    BadDt(f64),
    #[error("state has {state} nodes but mesh has {mesh}")]
    SizeMismatch { state: usize, mesh: usize },
    #[error(
        "Picard iteration did not converge at t = {t}: after {iterations} iterations \
         the largest relative increment is {increment:.3e} on field {field}"
    )]
    PicardDiverged {
        t: f64,
        iterations: u32,
        increment: f64,
        field: &'static str,
    },
    #[error("non-finite values in field {0} after a step")]
    NonFinite(&'static str),
    #[error("nonpositive kinetic denominator: c = {c}")]
    BadDenominator { c: f64 },
}

fn powq(p: &ParameterSet, z: f64) -> f64 {
    z.max(DENSITY_FLOOR).powf(p.q)
}

/// Net chemokine coefficient: `R_c = f_c·c`.
pub fn coeff_f_c(p: &ParameterSet, c: f64, n: f64, m: f64, rho: f64) -> f64 {
    p.k_c / (p.a_c_ii + c) * (n + p.eta_i * m)
        - p.delta_c * (n + p.eta_ii * m) * rho / (1.0 + p.a_c_iii * c)
}

/// Fibroblast proliferation coefficient (multiplies N in the kinetics).
pub fn coeff_f_n(p: &ParameterSet, c: f64, n: f64, m: f64) -> f64 {
    p.r_f * (1.0 + p.r_f_max * c / (p.a_c_i + c)) * (1.0 - p.kappa_f * (n + m)) * powq(p, n)
}

/// Myofibroblast proliferation coefficient (multiplies M in the kinetics).
pub fn coeff_f_m(p: &ParameterSet, c: f64, n: f64, m: f64) -> f64 {
    p.r_f * ((1.0 + p.r_f_max) * c / (p.a_c_i + c)) * (1.0 - p.kappa_f * (n + m)) * powq(p, m)
}

/// Collagen decay coefficient: the decay part of `R_ρ` is `g_rho·ρ`.
pub fn coeff_g_rho(p: &ParameterSet, c: f64, n: f64, m: f64, rho: f64) -> f64 {
    p.delta_rho * (n + p.eta_ii * m) * rho / (1.0 + p.a_c_iii * c)
}

/// Collagen secretion load.
pub fn coeff_f_rho(p: &ParameterSet, c: f64, n: f64, m: f64) -> f64 {
    p.k_rho * (1.0 + p.k_rho_max * c / (p.a_c_iv + c)) * (n + p.eta_i * m)
}

/// Pointwise kinetic terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Kinetics {
    pub r_c: f64,
    pub r_n: f64,
    pub r_m: f64,
    pub r_rho: f64,
    /// Generic MMP concentration.
    pub g: f64,
}

/// Evaluate the reaction terms at one point. Errors when a kinetic
/// denominator is nonpositive (concentration far outside model validity).
pub fn reaction_terms(
    c: f64,
    n: f64,
    m: f64,
    rho: f64,
    p: &ParameterSet,
) -> Result<Kinetics, ChemError> {
    if !(p.a_c_i + c > 0.0)
        || !(p.a_c_ii + c > 0.0)
        || !(p.a_c_iv + c > 0.0)
        || !(1.0 + p.a_c_iii * c > 0.0)
    {
        return Err(ChemError::BadDenominator { c });
    }
    let g = (n + p.eta_ii * m) * rho / (1.0 + p.a_c_iii * c);
    let r_c = p.k_c * c / (p.a_c_ii + c) * (n + p.eta_i * m) - p.delta_c * g * c;
    let r_n = coeff_f_n(p, c, n, m) * n - p.k_f * c * n - p.delta_n * n;
    let r_m = coeff_f_m(p, c, n, m) * m + p.k_f * c * n - p.delta_m * m;
    let r_rho = coeff_f_rho(p, c, n, m) - p.delta_rho * g * rho;
    Ok(Kinetics {
        r_c,
        r_n,
        r_m,
        r_rho,
        g,
    })
}

/// Boundary layout of the transport problem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChemBoundary {
    /// Half a wound, exploiting symmetry: the left end is the outer boundary
    /// (c = 0, N = N̄, M = 0) and the right end is the wound center with
    /// natural zero-flux conditions.
    HalfDomain,
    /// Outer boundary values imposed at both ends.
    FullDomain,
}

/// Picard loop settings.
#[derive(Debug, Clone, Copy)]
pub struct PicardSettings {
    /// Relative increment threshold (∞-norm, per field).
    pub tol: f64,
    pub max_iter: u32,
}

impl Default for PicardSettings {
    fn default() -> Self {
        PicardSettings {
            tol: 1e-8,
            max_iter: 50,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct ChemOptions {
    pub boundary: ChemBoundary,
    pub picard: PicardSettings,
}

impl Default for ChemOptions {
    fn default() -> Self {
        ChemOptions {
            boundary: ChemBoundary::HalfDomain,
            picard: PicardSettings::default(),
        }
    }
}

/// State of the four transport fields at one instant.
#[derive(Debug, Clone)]
pub struct ChemState {
    pub t: f64,
    pub c: FieldState,
    pub n: FieldState,
    pub m: FieldState,
    pub rho: FieldState,
}

impl ChemState {
    pub fn new(t: f64, c: Vec<f64>, n: Vec<f64>, m: Vec<f64>, rho: Vec<f64>) -> Self {
        ChemState {
            t,
            c: FieldState::new(Variable::C, t, c),
            n: FieldState::new(Variable::N, t, n),
            m: FieldState::new(Variable::M, t, m),
            rho: FieldState::new(Variable::Rho, t, rho),
        }
    }

    /// The undamaged state `(0, N̄, 0, ρ̄)` on every node.
    pub fn equilibrium(p: &ParameterSet, mesh: &Mesh) -> Self {
        let n_nodes = mesh.n_nodes();
        ChemState::new(
            0.0,
            vec![0.0; n_nodes],
            vec![p.n_bar; n_nodes],
            vec![0.0; n_nodes],
            vec![p.rho_bar; n_nodes],
        )
    }

    pub fn n_nodes(&self) -> usize {
        self.c.len()
    }

    /// Update the time stamp on the state and all four fields.
    pub fn set_time(&mut self, t: f64) {
        self.t = t;
        self.c.t = t;
        self.n.t = t;
        self.m.t = t;
        self.rho.t = t;
    }

    fn fields(&self) -> [(&'static str, &FieldState); 4] {
        [
            ("c", &self.c),
            ("N", &self.n),
            ("M", &self.m),
            ("rho", &self.rho),
        ]
    }
}

/// Outcome of one backward Euler step.
#[derive(Debug, Clone)]
pub struct ChemStep {
    pub state: ChemState,
    pub picard_iterations: u32,
}

fn dirichlet_rows(p: &ParameterSet, n_nodes: usize, boundary: ChemBoundary) -> [Vec<(usize, f64)>; 3] {
    let last = n_nodes - 1;
    let mut c_rows = vec![(0usize, 0.0)];
    let mut n_rows = vec![(0usize, p.n_bar)];
    let mut m_rows = vec![(0usize, 0.0)];
    if boundary == ChemBoundary::FullDomain {
        c_rows.push((last, 0.0));
        n_rows.push((last, p.n_bar));
        m_rows.push((last, 0.0));
    }
    [c_rows, n_rows, m_rows]
}

/// Advance one backward Euler step with inner Picard iterations.
pub fn chem_step(
    state: &ChemState,
    p: &ParameterSet,
    mesh: &Mesh,
    dt: f64,
    opts: &ChemOptions,
) -> Result<ChemStep, ChemError> {
    if !(dt > 0.0) {
        return Err(ChemError::BadDt(dt));
    }
    let n_nodes = mesh.n_nodes();
    if state.n_nodes() != n_nodes {
        return Err(ChemError::SizeMismatch {
            state: state.n_nodes(),
            mesh: n_nodes,
        });
    }
    let h = mesh.h();
    let [c_rows, n_rows, m_rows] = dirichlet_rows(p, n_nodes, opts.boundary);

    let old = [
        state.c.values.clone(),
        state.n.values.clone(),
        state.m.values.clone(),
        state.rho.values.clone(),
    ];
    // Picard iterate, seeded with the previous time level.
    let mut cur = old.clone();

    let mut iterations = 0;
    loop {
        iterations += 1;
        let mut next = [const { Vec::new() }; 4];

        // Freeze all blocks at the current iterate, then solve the four
        // lumped-mass systems of this time step.
        let mut blocks = Vec::with_capacity(mesh.n_elements());
        for e in 0..mesh.n_elements() {
            let local = ChemLocal::from_fields(&cur[0], &cur[1], &cur[2], &cur[3], e, h);
            blocks.push(chem_element_blocks(p, &local, h)?);
        }

        // element matrix: lumped mass + dt·S; element load: lumped mass·old (+ dt·F)
        let lump = h / 2.0;
        let field_specs: [(usize, &dyn Fn(usize) -> crate::fem::ElemMat, Option<&dyn Fn(usize) -> crate::fem::ElemVec>, &[(usize, f64)]); 4] = [
            (0, &|e| blocks[e].s_c, None, &c_rows),
            (1, &|e| blocks[e].s_n, None, &n_rows),
            (2, &|e| blocks[e].s_m, Some(&|e| blocks[e].f_m), &m_rows),
            (3, &|e| blocks[e].s_rho, Some(&|e| blocks[e].f_rho), &[]),
        ];
        for (idx, s_of, f_of, rows) in field_specs {
            let z_old = &old[idx];
            let mut matrix_blocks = |e: usize| -> crate::fem::ElemMat {
                let s = s_of(e);
                let mut out = s;
                for (a, row) in out.iter_mut().enumerate() {
                    for (b, v) in row.iter_mut().enumerate() {
                        *v *= dt;
                        if a == b {
                            *v += lump;
                        }
                    }
                }
                out
            };
            let mut load = |e: usize| -> crate::fem::ElemVec {
                let (i, j) = mesh.element_nodes(e);
                let mut v = [lump * z_old[i], lump * z_old[j]];
                if let Some(f) = f_of {
                    let fe = f(e);
                    v[0] += dt * fe[0];
                    v[1] += dt * fe[1];
                }
                v
            };
            let sys = assemble_scalar(mesh, &mut matrix_blocks, Some(&mut load), rows)?;
            let mut rhs = sys.rhs.clone();
            sys.apply_rhs_constraints(&mut rhs);
            let lu = sys.matrix.factor()?;
            lu.solve_in_place(&mut rhs)?;
            next[idx] = rhs;
        }

        // Convergence: relative increment per field in the ∞-norm.
        let mut worst = 0.0f64;
        let mut worst_field = "c";
        let names = ["c", "N", "M", "rho"];
        let mut converged = true;
        for idx in 0..4 {
            let dz = cur[idx]
                .iter()
                .zip(&next[idx])
                .fold(0.0f64, |a, (x, y)| a.max((y - x).abs()));
            let nz = next[idx].iter().fold(0.0f64, |a, &v| a.max(v.abs()));
            if dz > opts.picard.tol * nz {
                converged = false;
            }
            let rel = if nz > 0.0 { dz / nz } else { dz };
            if rel > worst {
                worst = rel;
                worst_field = names[idx];
            }
        }
        cur = next;
        if converged {
            break;
        }
        if iterations >= opts.picard.max_iter {
            return Err(ChemError::PicardDiverged {
                t: state.t + dt,
                iterations,
                increment: worst,
                field: worst_field,
            });
        }
    }

    let t = state.t + dt;
    let [c, n, m, rho] = cur;
    let new_state = ChemState::new(t, c, n, m, rho);
    for (name, f) in new_state.fields() {
        if !f.all_finite() {
            return Err(ChemError::NonFinite(name));
        }
    }
    Ok(ChemStep {
        state: new_state,
        picard_iterations: iterations,
    })
}

/// One observed sample of the four fields.
pub struct ChemSample<'a> {
    pub t: f64,
    pub x: &'a [f64],
    pub c: &'a [f64],
    pub n: &'a [f64],
    pub m: &'a [f64],
    pub rho: &'a [f64],
}

pub trait ChemObserver {
    fn observe(&mut self, sample: &ChemSample);
}

impl<F: FnMut(&ChemSample)> ChemObserver for F {
    fn observe(&mut self, sample: &ChemSample) {
        self(sample)
    }
}

/// Per-sample statistics of one field.
#[derive(Debug, Clone, serde::Serialize)]
pub struct FieldStats {
    pub min: f64,
    pub max: f64,
    /// Largest deviation from the field's undamaged value.
    pub max_abs_dev: f64,
    /// Value at the last node (the wound center in half-domain layout).
    pub center: f64,
}

fn field_stats(values: &[f64], equilibrium: f64) -> FieldStats {
    let mut min = f64::INFINITY;
    let mut max = f64::NEG_INFINITY;
    let mut dev = 0.0f64;
    for &v in values {
        min = min.min(v);
        max = max.max(v);
        dev = dev.max((v - equilibrium).abs());
    }
    FieldStats {
        min,
        max,
        max_abs_dev: dev,
        center: *values.last().unwrap(),
    }
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct ChemSampleStats {
    pub t: f64,
    pub c: FieldStats,
    pub n: FieldStats,
    pub m: FieldStats,
    pub rho: FieldStats,
}

/// A field dipped below `-1e-9` of its scale at time `t`.
#[derive(Debug, Clone, serde::Serialize)]
pub struct NegativityEvent {
    pub t: f64,
    pub field: &'static str,
    pub min_value: f64,
}

#[derive(Debug)]
pub struct ChemSummary {
    pub samples: Vec<ChemSampleStats>,
    pub final_state: ChemState,
    /// Picard iteration count of every step.
    pub picard_iterations: Vec<u32>,
    /// Fields that went negative beyond tolerance (reported, never clipped).
    pub negativity: Vec<NegativityEvent>,
}

/// Advance to `t_end`, sampling at the requested times (clamped to step
/// boundaries; `t = 0` is sampled if listed).
#[allow(clippy::too_many_arguments)]
pub fn run_chem(
    p: &ParameterSet,
    mesh: &Mesh,
    ic: &ChemState,
    dt: f64,
    t_end: f64,
    opts: &ChemOptions,
    sample_times: &[f64],
    observers: &mut [&mut dyn ChemObserver],
) -> Result<ChemSummary, ChemError> {
    if !(dt > 0.0) {
        return Err(ChemError::BadDt(dt));
    }
    let n_steps = (t_end / dt).ceil() as usize;
    let mut state = ic.clone();
    let mut samples = Vec::new();
    let mut picard = Vec::with_capacity(n_steps);
    let mut negativity = Vec::new();
    let scales = [
        ic.c.max_abs().max(f64::EPSILON),
        ic.n.max_abs().max(p.n_bar),
        ic.m.max_abs().max(f64::EPSILON),
        ic.rho.max_abs().max(p.rho_bar),
    ];

    let mut next_sample = 0usize;
    let emit = |state: &ChemState,
                    samples: &mut Vec<ChemSampleStats>,
                    observers: &mut [&mut dyn ChemObserver]| {
        samples.push(ChemSampleStats {
            t: state.t,
            c: field_stats(&state.c.values, 0.0),
            n: field_stats(&state.n.values, p.n_bar),
            m: field_stats(&state.m.values, 0.0),
            rho: field_stats(&state.rho.values, p.rho_bar),
        });
        let s = ChemSample {
            t: state.t,
            x: mesh.nodes(),
            c: &state.c.values,
            n: &state.n.values,
            m: &state.m.values,
            rho: &state.rho.values,
        };
        for obs in observers.iter_mut() {
            obs.observe(&s);
        }
    };

    while next_sample < sample_times.len() && sample_times[next_sample] <= state.t {
        emit(&state, &mut samples, observers);
        next_sample += 1;
    }
    for step in 1..=n_steps {
        let out = chem_step(&state, p, mesh, dt, opts)?;
        state = out.state;
        state.set_time(ic.t + step as f64 * dt); // avoid accumulation drift
        picard.push(out.picard_iterations);
        for ((name, f), scale) in state.fields().into_iter().zip(scales) {
            let min = f.values.iter().cloned().fold(f64::INFINITY, f64::min);
            if min < -1e-9 * scale {
                negativity.push(NegativityEvent {
                    t: state.t,
                    field: name,
                    min_value: min,
                });
            }
        }
        while next_sample < sample_times.len()
            && sample_times[next_sample] <= state.t + 1e-9 * dt
        {
            emit(&state, &mut samples, observers);
            next_sample += 1;
        }
    }
    Ok(ChemSummary {
        samples,
        final_state: state,
        picard_iterations: picard,
        negativity,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table(delta_c: f64) -> ParameterSet {
        let mut p = ParameterSet::table_defaults(1.0, 0.0);
        p.delta_c = delta_c;
        p
    }

    #[test]
    fn kinetics_vanish_at_equilibrium() {
        let p = table(5e-4);
        let k = reaction_terms(0.0, p.n_bar, 0.0, p.rho_bar, &p).unwrap();
        assert_eq!(k.g, p.n_bar * p.rho_bar);
        assert_eq!(k.r_c, 0.0);
        // q and k_rho are derived precisely to zero these
        assert!(k.r_n.abs() <= 1e-12 * p.delta_n * p.n_bar);
        assert!(k.r_rho.abs() <= 1e-12 * p.k_rho * p.n_bar);
        assert_eq!(k.r_m, 0.0);
    }

    #[test]
    fn secretion_saturation_is_half_at_a_c_ii() {
        let p = table(5e-4);
        let c = p.a_c_ii;
        assert_relative_eq!(c / (p.a_c_ii + c), 0.5, max_relative = 1e-15);
    }

    #[test]
    fn crowded_fibroblasts_decay() {
        // at twice the equilibrium density the net kinetics are negative
        let p = table(5e-4);
        let k = reaction_terms(0.0, 2.0 * p.n_bar, 0.0, p.rho_bar, &p).unwrap();
        assert!(k.r_n < 0.0);
        // 50-digit reference evaluation
        assert_relative_eq!(k.r_n, -103.03684740103716, max_relative = 1e-10);
    }

    #[test]
    fn reaction_terms_reject_bad_denominator() {
        let p = table(5e-4);
        assert!(reaction_terms(-1.0, p.n_bar, 0.0, p.rho_bar, &p).is_err());
    }

    #[test]
    fn equilibrium_is_a_fixed_point_in_one_iteration() {
        let p = table(5e-4);
        let mesh = Mesh::uniform(20, 0.0, 1.0).unwrap();
        let eq = ChemState::equilibrium(&p, &mesh);
        let out = chem_step(&eq, &p, &mesh, 0.1, &ChemOptions::default()).unwrap();
        assert_eq!(out.picard_iterations, 1);
        for (a, b) in out.state.n.values.iter().zip(&eq.n.values) {
            assert!((a - b).abs() <= 1e-10 * p.n_bar);
        }
        for (a, b) in out.state.rho.values.iter().zip(&eq.rho.values) {
            assert!((a - b).abs() <= 1e-10 * p.rho_bar);
        }
        assert_eq!(out.state.c.max_abs(), 0.0);
        assert_eq!(out.state.m.max_abs(), 0.0);
    }

    #[test]
    fn equilibrium_holds_for_100_steps() {
        let p = table(5e-4);
        let mesh = Mesh::uniform(16, 0.0, 1.0).unwrap();
        let eq = ChemState::equilibrium(&p, &mesh);
        let summary = run_chem(
            &p,
            &mesh,
            &eq,
            0.1,
            10.0,
            &ChemOptions::default(),
            &[],
            &mut [],
        )
        .unwrap();
        let s = &summary.final_state;
        assert!(s.n.max_abs_dev(p.n_bar) <= 1e-10 * p.n_bar);
        assert!(s.rho.max_abs_dev(p.rho_bar) <= 1e-10 * p.rho_bar);
        assert!(s.c.max_abs() <= 1e-20);
        assert!(s.m.max_abs() <= 1e-20);
        assert!(summary.negativity.is_empty());
    }

    #[test]
    fn zero_dt_rejected() {
        let p = table(5e-4);
        let mesh = Mesh::uniform(4, 0.0, 1.0).unwrap();
        let eq = ChemState::equilibrium(&p, &mesh);
        assert!(matches!(
            chem_step(&eq, &p, &mesh, 0.0, &ChemOptions::default()),
            Err(ChemError::BadDt(_))
        ));
    }

    #[test]
    fn boundary_values_hold_after_steps() {
        let p = table(5e-4);
        let mesh = Mesh::uniform(40, 0.0, 1.0).unwrap();
        let mut ic = ChemState::equilibrium(&p, &mesh);
        // smooth small perturbations, zero at the outer boundary
        for (i, x) in mesh.nodes().iter().enumerate() {
            let s = (std::f64::consts::PI * x).sin();
            ic.n.values[i] += 10.0 * (2.0 * std::f64::consts::PI * x).sin();
            ic.m.values[i] += 3.0 * s * s;
            ic.c.values[i] += 1e-15 * s * s;
            ic.rho.values[i] += 1e-2 * (2.0 * std::f64::consts::PI * x).sin();
        }
        ic.n.values[0] = p.n_bar;
        let mut state = ic;
        for _ in 0..5 {
            state = chem_step(&state, &p, &mesh, 0.1, &ChemOptions::default())
                .unwrap()
                .state;
        }
        assert_eq!(state.c.values[0], 0.0);
        assert_eq!(state.n.values[0], p.n_bar);
        assert_eq!(state.m.values[0], 0.0);
    }

    #[test]
    fn mirrored_initial_condition_mirrors_solution() {
        // requires symmetric boundary treatment: full-domain Dirichlet
        let p = table(5e-4);
        let mesh = Mesh::uniform(30, 0.0, 1.0).unwrap();
        let opts = ChemOptions {
            boundary: ChemBoundary::FullDomain,
            ..Default::default()
        };
        let bump = |x: f64, center: f64| (-200.0 * (x - center) * (x - center)).exp();
        let build = |center: f64| {
            let mut ic = ChemState::equilibrium(&p, &mesh);
            for (i, &x) in mesh.nodes().iter().enumerate() {
                ic.n.values[i] += 8.0 * bump(x, center);
                ic.m.values[i] += 4.0 * bump(x, center);
                ic.c.values[i] += 1e-15 * bump(x, center);
                ic.rho.values[i] += 5e-3 * bump(x, center);
            }
            ic.n.values[0] = p.n_bar;
            *ic.n.values.last_mut().unwrap() = p.n_bar;
            ic.m.values[0] = 0.0;
            *ic.m.values.last_mut().unwrap() = 0.0;
            ic.c.values[0] = 0.0;
            *ic.c.values.last_mut().unwrap() = 0.0;
            ic
        };
        let a = run_chem(&p, &mesh, &build(0.3), 0.1, 3.0, &opts, &[1.0, 3.0], &mut []).unwrap();
        let b = run_chem(&p, &mesh, &build(0.7), 0.1, 3.0, &opts, &[1.0, 3.0], &mut []).unwrap();
        let n = mesh.n_nodes();
        for (fa, fb) in [
            (&a.final_state.n, &b.final_state.n),
            (&a.final_state.m, &b.final_state.m),
            (&a.final_state.rho, &b.final_state.rho),
        ] {
            for i in 0..n {
                assert!(
                    (fa.values[i] - fb.values[n - 1 - i]).abs() <= 1e-9 * p.n_bar,
                    "mirror mismatch at node {i}"
                );
            }
        }
    }

    #[test]
    fn picard_tolerance_consistency() {
        // halving the tolerance changes the day-10 state by less than the
        // larger tolerance (relative, per field)
        let p = table(5e-4);
        let mesh = Mesh::uniform(50, 0.0, 1.0).unwrap();
        let mut ic = ChemState::equilibrium(&p, &mesh);
        for (i, &x) in mesh.nodes().iter().enumerate() {
            ic.n.values[i] += 10.0 * (20.0 * std::f64::consts::PI * x).sin();
            ic.m.values[i] += 6.0 * (std::f64::consts::PI * x).sin().powi(2);
            ic.c.values[i] += 2e-15 * (std::f64::consts::PI * x).sin().powi(2);
            ic.rho.values[i] += 1e-2 * (20.0 * std::f64::consts::PI * x).sin();
        }
        ic.n.values[0] = p.n_bar;
        let run = |tol: f64| {
            let opts = ChemOptions {
                picard: PicardSettings { tol, max_iter: 100 },
                ..Default::default()
            };
            run_chem(&p, &mesh, &ic, 0.1, 10.0, &opts, &[], &mut [])
                .unwrap()
                .final_state
        };
        let coarse = run(1e-6);
        let fine = run(5e-7);
        for (a, b) in [
            (&coarse.n, &fine.n),
            (&coarse.m, &fine.m),
            (&coarse.rho, &fine.rho),
            (&coarse.c, &fine.c),
        ] {
            let scale = b.max_abs().max(f64::MIN_POSITIVE);
            let diff = a
                .values
                .iter()
                .zip(&b.values)
                .fold(0.0f64, |acc, (x, y)| acc.max((x - y).abs()));
            assert!(diff <= 1e-6 * scale, "diff {diff:.3e} vs scale {scale:.3e}");
        }
    }
}
