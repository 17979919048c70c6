//! Independent verification machinery.
//!
//! Two cross-checks anchor the rest of the crate:
//!
//! 1. **Spectral fidelity** — assemble the periodic finite-difference
//!    operators whose Fourier analysis produces the closed-form discrete
//!    eigenvalues, compute their full spectra with a dense eigensolver, and
//!    compare multisets against the analytic formulas.
//! 2. **Cross-method trajectories** — integrate the same initial-value
//!    problems with a finite-difference space discretization (same backward
//!    Euler time stepping and boundary handling as the finite-element
//!    solvers) and compare sampled field extrema.
//!
//! The periodic wraparound in (1) matches the Fourier-mode setting of the
//! analysis; the production solvers use Dirichlet/no-flux boundaries, so
//! their spectra are compared like-for-like only through (2).

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::banded::Banded;
use crate::chem::{
    coeff_f_c, coeff_f_m, coeff_f_n, coeff_f_rho, coeff_g_rho, ChemBoundary, ChemError,
    ChemOptions, ChemState,
};
use crate::eigen::{eigenvalues, DenseMatrix, EigenError};
use crate::mech::{MechError, MechState};
use crate::params::ParameterSet;
use crate::stability::{chem_discrete_spectrum, mech_discrete_spectrum};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("dense spectra are limited to dimension 2048, got {0}")]
    TooLarge(usize),
    #[error(transparent)]
    Eigen(#[from] EigenError),
    #[error(transparent)]
    Mech(#[from] MechError),
    #[error(transparent)]
    Chem(#[from] ChemError),
    #[error(transparent)]
    Linalg(#[from] crate::banded::LinalgError),
}

/// All eigenvalues of a square operator, sorted by real part then imaginary
/// part.
pub fn dense_spectrum(matrix: &DenseMatrix) -> Result<Vec<Complex64>, OracleError> {
    let n = matrix.n();
    if n > 2048 {
        return Err(OracleError::TooLarge(n));
    }
    Ok(eigenvalues(matrix)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FdmSystem {
    Mech,
    Chem,
}

/// Assemble the periodic (circulant) finite-difference operator of the
/// linearized system on the unit domain with `n` grid points, `h = 1/n`.
/// Its spectrum is exactly the union of the closed-form discrete
/// eigenvalues over the grid modes `β = 0..n-1`.
pub fn build_periodic_fdm_operator(system: FdmSystem, p: &ParameterSet, n: usize) -> DenseMatrix {
    assert!(n >= 4, "need at least 4 grid points");
    let h = 1.0 / n as f64;
    let prev = |k: usize| (k + n - 1) % n;
    let next = |k: usize| (k + 1) % n;
    match system {
        FdmSystem::Mech => {
            // unknowns: v_0..v_{n-1}, then ε_0..ε_{n-1}
            let mut a = DenseMatrix::zeros(2 * n);
            let visc = p.mu / (p.rho_t * h * h);
            let conv = p.stiffness() / (2.0 * p.rho_t * h);
            for k in 0..n {
                a[(k, prev(k))] += -visc;
                a[(k, k)] += 2.0 * visc;
                a[(k, next(k))] += -visc;
                a[(k, n + next(k))] += -conv;
                a[(k, n + prev(k))] += conv;
                a[(n + k, next(k))] += -1.0 / (2.0 * h);
                a[(n + k, prev(k))] += 1.0 / (2.0 * h);
                a[(n + k, n + k)] += p.alpha;
            }
            a
        }
        FdmSystem::Chem => {
            // unknowns: c, N, M, ρ blocks of size n
            let mut a = DenseMatrix::zeros(4 * n);
            let (c0, n0, m0, r0) = (0, n, 2 * n, 3 * n);
            let dc = p.d_c / (h * h);
            let dn = p.d_f * p.n_bar / (h * h);
            let chi = p.chi_f * p.n_bar / (h * h);
            let c_diag = (p.delta_c * p.rho_bar - p.k_c / p.a_c_ii) * p.n_bar;
            let n_diag = p.delta_n - p.r_f * (1.0 - p.kappa_f * p.n_bar) * p.n_bar.powf(p.q);
            for k in 0..n {
                a[(c0 + k, c0 + prev(k))] += -dc;
                a[(c0 + k, c0 + k)] += 2.0 * dc + c_diag;
                a[(c0 + k, c0 + next(k))] += -dc;

                a[(n0 + k, n0 + prev(k))] += -dn;
                a[(n0 + k, n0 + k)] += 2.0 * dn + n_diag;
                a[(n0 + k, n0 + next(k))] += -dn;
                a[(n0 + k, c0 + prev(k))] += chi;
                a[(n0 + k, c0 + k)] += -2.0 * chi + p.k_f * p.n_bar;
                a[(n0 + k, c0 + next(k))] += chi;

                a[(m0 + k, m0 + prev(k))] += -dn;
                a[(m0 + k, m0 + k)] += 2.0 * dn + p.delta_m;
                a[(m0 + k, m0 + next(k))] += -dn;
                a[(m0 + k, c0 + k)] += -p.k_f * p.n_bar;

                a[(r0 + k, n0 + k)] += -p.k_rho;
                a[(r0 + k, m0 + k)] += -p.k_rho * p.eta_i;
                a[(r0 + k, r0 + k)] += p.delta_rho * p.n_bar * p.rho_bar;
            }
            a
        }
    }
}

/// Greedy nearest-neighbor matching between two equally sized multisets of
/// complex numbers; returns the largest matched distance.
pub fn multiset_gap(a: &[Complex64], b: &[Complex64]) -> f64 {
    assert_eq!(a.len(), b.len());
    let mut used = vec![false; b.len()];
    let mut worst = 0.0f64;
    for &x in a {
        let mut best = f64::INFINITY;
        let mut best_j = usize::MAX;
        for (j, &y) in b.iter().enumerate() {
            if used[j] {
                continue;
            }
            let d = (x - y).norm();
            if d < best {
                best = d;
                best_j = j;
            }
        }
        used[best_j] = true;
        worst = worst.max(best);
    }
    worst
}

/// Comparison record emitted by the verification checks.
#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub check: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    pub max_abs_gap: f64,
    pub pass: bool,
}

impl CheckRecord {
    pub fn to_ndjson_line(&self) -> String {
        serde_json::to_string(self).expect("serializable")
    }
}

/// Compare the dense spectrum of the assembled periodic operator against the
/// union of the closed-form discrete eigenvalues over all grid modes.
pub fn von_neumann_check(
    system: FdmSystem,
    p: &ParameterSet,
    n: usize,
    tolerance: f64,
) -> Result<CheckRecord, OracleError> {
    let h = 1.0 / n as f64;
    let operator = build_periodic_fdm_operator(system, p, n);
    let dense = dense_spectrum(&operator)?;
    let mut analytic = Vec::with_capacity(dense.len());
    for beta in 0..n as u32 {
        match system {
            FdmSystem::Mech => analytic.extend(mech_discrete_spectrum(beta, h, p)),
            FdmSystem::Chem => analytic.extend(
                chem_discrete_spectrum(beta, h, p)
                    .as_array()
                    .into_iter()
                    .map(|re| Complex64::new(re, 0.0)),
            ),
        }
    }
    let gap = multiset_gap(&analytic, &dense);
    Ok(CheckRecord {
        check: format!(
            "von-neumann-{}",
            match system {
                FdmSystem::Mech => "mech",
                FdmSystem::Chem => "chem",
            }
        ),
        n: Some(n),
        max_abs_gap: gap,
        pass: gap <= tolerance,
    })
}

/// Finite-difference backward Euler integration of the linearized mechanics
/// with the same boundary handling as the finite-element solver (Dirichlet
/// velocity rows, one-sided strain rows at the ends). Returns the state at
/// `t_end`.
pub fn fdm_reference_mech(
    p: &ParameterSet,
    n: usize,
    x_left: f64,
    x_right: f64,
    ic: &MechState,
    dt: f64,
    t_end: f64,
) -> Result<MechState, OracleError> {
    assert_eq!(ic.n_nodes(), n + 1);
    let h = (x_right - x_left) / n as f64;
    let n_nodes = n + 1;
    let mut a = Banded::new(2 * n_nodes, 3, 3);
    let visc = p.mu / (p.rho_t * h * h);
    let conv = p.stiffness() / (2.0 * p.rho_t * h);
    let inv_dt = 1.0 / dt;
    for i in 0..n_nodes {
        let (vr, er) = (2 * i, 2 * i + 1);
        // velocity rows (interior)
        if i > 0 && i < n_nodes - 1 {
            a.add(vr, vr, inv_dt + 2.0 * visc);
            a.add(vr, vr - 2, -visc);
            a.add(vr, vr + 2, -visc);
            a.add(vr, er + 2, -conv);
            a.add(vr, er - 2, conv);
        }
        // strain rows
        a.add(er, er, inv_dt + p.alpha);
        if i == 0 {
            // one-sided v_x
            a.add(er, vr, 1.0 / h);
            a.add(er, vr + 2, -1.0 / h);
        } else if i == n_nodes - 1 {
            a.add(er, vr, -1.0 / h);
            a.add(er, vr - 2, 1.0 / h);
        } else {
            a.add(er, vr + 2, -1.0 / (2.0 * h));
            a.add(er, vr - 2, 1.0 / (2.0 * h));
        }
    }
    a.set_identity_row(0);
    a.set_identity_row(2 * (n_nodes - 1));
    let lu = a.factor()?;

    let n_steps = (t_end / dt).ceil() as usize;
    let mut v = ic.v.values.clone();
    let mut eps = ic.eps.values.clone();
    let mut rhs = vec![0.0; 2 * n_nodes];
    for _ in 0..n_steps {
        for i in 0..n_nodes {
            rhs[2 * i] = v[i] * inv_dt;
            rhs[2 * i + 1] = eps[i] * inv_dt;
        }
        rhs[0] = 0.0;
        rhs[2 * (n_nodes - 1)] = 0.0;
        lu.solve_in_place(&mut rhs)?;
        for i in 0..n_nodes {
            v[i] = rhs[2 * i];
            eps[i] = rhs[2 * i + 1];
        }
        v[0] = 0.0;
        v[n_nodes - 1] = 0.0;
    }
    Ok(MechState::new(ic.t + n_steps as f64 * dt, v, eps))
}

/// Finite-difference backward Euler/Picard integration of the transport
/// system (conservative flux differencing, mirrored ghost at the zero-flux
/// end). Returns the state at `t_end`.
pub fn fdm_reference_chem(
    p: &ParameterSet,
    n: usize,
    ic: &ChemState,
    dt: f64,
    t_end: f64,
    opts: &ChemOptions,
) -> Result<ChemState, OracleError> {
    assert_eq!(ic.n_nodes(), n + 1);
    let h = 1.0 / n as f64;
    let n_nodes = n + 1;
    let inv_dt = 1.0 / dt;
    let last = n_nodes - 1;

    let mut state = [
        ic.c.values.clone(),
        ic.n.values.clone(),
        ic.m.values.clone(),
        ic.rho.values.clone(),
    ];
    let n_steps = (t_end / dt).ceil() as usize;

    // neighbor index with mirrored ghost on the right in half-domain layout
    let right_mirror = opts.boundary == ChemBoundary::HalfDomain;

    for _ in 0..n_steps {
        let old = state.clone();
        let mut cur = old.clone();
        for iteration in 0.. {
            let (cs, ns, ms, rs) = (&cur[0], &cur[1], &cur[2], &cur[3]);

            // chemokines: tridiagonal diffusion + pointwise reaction
            let mut a_c = Banded::new(n_nodes, 1, 1);
            let mut b_c = vec![0.0; n_nodes];
            // fibroblasts / myofibroblasts: density-weighted diffusion + chemotaxis
            let mut a_n = Banded::new(n_nodes, 1, 1);
            let mut b_n = vec![0.0; n_nodes];
            let mut a_m = Banded::new(n_nodes, 1, 1);
            let mut b_m = vec![0.0; n_nodes];
            // collagen: diagonal
            let mut a_r = Banded::new(n_nodes, 1, 1);
            let mut b_r = vec![0.0; n_nodes];

            for i in 0..n_nodes {
                let fc = coeff_f_c(p, cs[i], ns[i], ms[i], rs[i]);
                let fnn = coeff_f_n(p, cs[i], ns[i], ms[i]);
                let fm = coeff_f_m(p, cs[i], ns[i], ms[i]);
                let gr = coeff_g_rho(p, cs[i], ns[i], ms[i], rs[i]);
                let fr = coeff_f_rho(p, cs[i], ns[i], ms[i]);

                // (left neighbor, right neighbor, weights) with mirroring
                let (il, ir) = (
                    if i == 0 { 1 } else { i - 1 },
                    if i == last {
                        if right_mirror {
                            last - 1
                        } else {
                            last
                        }
                    } else {
                        i + 1
                    },
                );

                // chemokine diffusion
                {
                    let mut diag = inv_dt - fc;
                    let mut stencil = vec![];
                    if i > 0 {
                        stencil.push((il, -p.d_c / (h * h)));
                        diag += p.d_c / (h * h);
                    }
                    if i < last || right_mirror {
                        stencil.push((ir, -p.d_c / (h * h)));
                        diag += p.d_c / (h * h);
                    }
                    a_c.add(i, i, diag);
                    for (j, w) in stencil {
                        a_c.add(i, j, w);
                    }
                    b_c[i] = old[0][i] * inv_dt;
                }

                // cell fields (N and M share the transport structure)
                for (field, a_z, b_z, reaction_diag, load) in [
                    (
                        1usize,
                        &mut a_n,
                        &mut b_n,
                        -(fnn - p.k_f * cs[i] - p.delta_n),
                        0.0,
                    ),
                    (2usize, &mut a_m, &mut b_m, -(fm - p.delta_m), p.k_f * cs[i] * ns[i]),
                ] {
                    let f_tot = |k: usize| ns[k] + ms[k];
                    let mut diag = inv_dt + reaction_diag;
                    let mut entries: Vec<(usize, f64)> = Vec::new();
                    // diffusion flux D_F·F·z_x through both faces
                    if i > 0 {
                        let w = p.d_f * (f_tot(i) + f_tot(il)) / 2.0 / (h * h);
                        diag += w;
                        entries.push((il, -w));
                    }
                    if i < last || right_mirror {
                        let w = p.d_f * (f_tot(i) + f_tot(ir)) / 2.0 / (h * h);
                        diag += w;
                        entries.push((ir, -w));
                    }
                    // chemotaxis flux χ_F·z·c_x through both faces (z implicit
                    // at the face average)
                    if i > 0 {
                        let dc = (cs[i] - cs[il]) / h;
                        let w = p.chi_f * dc / (2.0 * h);
                        diag -= w;
                        entries.push((il, -w));
                    }
                    if i < last || right_mirror {
                        let dc = (cs[ir] - cs[i]) / h;
                        let w = p.chi_f * dc / (2.0 * h);
                        diag += w;
                        entries.push((ir, w));
                    }
                    a_z.add(i, i, diag);
                    for (j, w) in entries {
                        a_z.add(i, j, w);
                    }
                    b_z[i] = old[field][i] * inv_dt + load;
                }

                // collagen
                a_r.add(i, i, inv_dt + gr);
                b_r[i] = old[3][i] * inv_dt + fr;
            }

            // Dirichlet rows at the outer boundary (both ends in full-domain)
            let constrain = |a: &mut Banded, b: &mut [f64], node: usize, value: f64| {
                a.set_identity_row(node);
                b[node] = value;
            };
            constrain(&mut a_c, &mut b_c, 0, 0.0);
            constrain(&mut a_n, &mut b_n, 0, p.n_bar);
            constrain(&mut a_m, &mut b_m, 0, 0.0);
            if !right_mirror {
                constrain(&mut a_c, &mut b_c, last, 0.0);
                constrain(&mut a_n, &mut b_n, last, p.n_bar);
                constrain(&mut a_m, &mut b_m, last, 0.0);
            }

            let mut next = [
                a_c.factor()?.solve(&b_c)?,
                a_n.factor()?.solve(&b_n)?,
                a_m.factor()?.solve(&b_m)?,
                a_r.factor()?.solve(&b_r)?,
            ];
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
            }
            std::mem::swap(&mut cur, &mut next);
            if converged {
                break;
            }
            if iteration + 1 >= opts.picard.max_iter {
                return Err(OracleError::Chem(ChemError::PicardDiverged {
                    t: 0.0,
                    iterations: iteration + 1,
                    increment: f64::NAN,
                    field: "fdm",
                }));
            }
        }
        state = cur;
    }
    let [c, nn, m, rho] = state;
    Ok(ChemState::new(ic.t + n_steps as f64 * dt, c, nn, m, rho))
}
