//! Closed-form linear stability analysis.
//!
//! For perturbations around the equilibria, both subsystems reduce to
//! per-mode linear ODE systems `y' + A·y = 0`; stability requires every
//! eigenvalue of `A` to have a nonnegative real part.
//!
//! Mechanics (Fourier mode `k` on the unit domain):
//!
//! ```text
//! α = 0:  λ± = (2πk)²μ/(2ρ_t) ± ½√[((2πk)²μ/ρ_t)² + 4(2πk)²E√ρ̄(ε₀−1)/ρ_t]
//! α > 0:  λ± = ½[(2πk)²μ/ρ_t + α] ± ½√[((2πk)²μ/ρ_t + α)² − 4(2πk)²(αμ+E√ρ̄)/ρ_t]
//! ```
//!
//! The semi-discrete (Von Neumann) counterpart replaces `(2πk)²` by
//! `(4/h²)sin²(πβh)` in the damping terms and `(2πk)²E√ρ̄` by
//! `(1/h²)sin²(2πβh)E√ρ̄`; agreement with the continuous eigenvalues is
//! O(h²).
//!
//! The transport system decouples mode-by-mode into a triangular matrix, so
//! its four eigenvalues are explicit; only the chemokine one can become
//! negative, which happens exactly when
//! `(2πk)²·D_c + δ_c·N̄·ρ̄ < k_c·N̄/a_c_II`.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::params::ParameterSet;

#[derive(Debug, Error)]
pub enum StabilityError {
    #[error("viscosity bound is undefined for eps0 = {0} > 1")]
    Eps0AboveOne(f64),
    #[error("mode range is empty")]
    EmptyModeRange,
    #[error("discrete analysis needs a grid spacing h > 0")]
    MissingH,
    #[error("consistency fit needs at least 3 spacings, each halving the last")]
    BadSpacingSequence,
    #[error("eigenvalue gap below 1e-13: branch `{0}` is h-independent")]
    DegenerateFit(&'static str),
}

/// λ₊ first (larger real part, then larger imaginary part).
pub type EigenPair = [Complex64; 2];

fn quadratic_eigenvalues(trace: f64, det: f64) -> EigenPair {
    // roots of λ² − trace·λ + det with the principal branch square root;
    // for real roots the small one comes from det/λ₊ to avoid cancellation
    let disc = trace * trace - 4.0 * det;
    if disc >= 0.0 {
        let big = (trace + trace.signum() * disc.sqrt()) / 2.0;
        let small = if big == 0.0 { 0.0 } else { det / big };
        let (plus, minus) = if big >= small { (big, small) } else { (small, big) };
        [Complex64::new(plus, 0.0), Complex64::new(minus, 0.0)]
    } else {
        let im = (-disc).sqrt() / 2.0;
        [
            Complex64::new(trace / 2.0, im),
            Complex64::new(trace / 2.0, -im),
        ]
    }
}

/// Continuous mechanics eigenvalues for Fourier mode `k` (unit domain).
pub fn mech_continuous_spectrum(k: u32, p: &ParameterSet, eps0: f64) -> EigenPair {
    let w2 = (2.0 * std::f64::consts::PI * k as f64).powi(2);
    let ke = p.stiffness();
    if p.alpha == 0.0 {
        let trace = w2 * p.mu / p.rho_t;
        let det = w2 * ke * (1.0 - eps0) / p.rho_t;
        quadratic_eigenvalues(trace, det)
    } else {
        let trace = w2 * p.mu / p.rho_t + p.alpha;
        let det = w2 * (p.alpha * p.mu + ke) / p.rho_t;
        quadratic_eigenvalues(trace, det)
    }
}

/// Smallest viscosity for which the `k = 1` mechanics eigenvalues are real
/// on a domain of the given size: `√(ρ_t·E√ρ̄·(1−ε₀))·|Ω|/π`.
pub fn viscosity_bound(
    p: &ParameterSet,
    eps0: f64,
    domain_size: f64,
) -> Result<f64, StabilityError> {
    if eps0 > 1.0 {
        return Err(StabilityError::Eps0AboveOne(eps0));
    }
    Ok((p.rho_t * p.stiffness() * (1.0 - eps0)).sqrt() / std::f64::consts::PI * domain_size)
}

/// Transport eigenvalues labeled by the variable they govern.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChemEigenvalues {
    pub fibroblast: f64,
    pub myofibroblast: f64,
    pub chemokine: f64,
    pub collagen: f64,
}

impl ChemEigenvalues {
    pub fn as_array(&self) -> [f64; 4] {
        [
            self.fibroblast,
            self.myofibroblast,
            self.chemokine,
            self.collagen,
        ]
    }

    pub fn min(&self) -> f64 {
        self.as_array().into_iter().fold(f64::INFINITY, f64::min)
    }
}

fn chem_eigenvalues_for(w2: f64, p: &ParameterSet) -> ChemEigenvalues {
    ChemEigenvalues {
        fibroblast: w2 * p.d_f * p.n_bar + p.delta_n
            - p.r_f * (1.0 - p.kappa_f * p.n_bar) * p.n_bar.powf(p.q),
        myofibroblast: w2 * p.d_f * p.n_bar + p.delta_m,
        chemokine: w2 * p.d_c + (p.delta_c * p.rho_bar - p.k_c / p.a_c_ii) * p.n_bar,
        collagen: p.delta_rho * p.n_bar * p.rho_bar,
    }
}

/// Continuous transport eigenvalues for Fourier mode `k` (unit domain).
pub fn chem_continuous_spectrum(k: u32, p: &ParameterSet) -> ChemEigenvalues {
    chem_eigenvalues_for((2.0 * std::f64::consts::PI * k as f64).powi(2), p)
}

/// Decay-rate threshold `k_c/(a_c_II·ρ̄)`: constant chemokine perturbations
/// are stable iff `δ_c` is at least this value.
pub fn chem_threshold(p: &ParameterSet) -> f64 {
    crate::params::chem_threshold(p)
}

/// Semi-discrete mechanics eigenvalues for grid mode `β` and spacing `h`
/// (unit domain, central differences).
pub fn mech_discrete_spectrum(beta: u32, h: f64, p: &ParameterSet) -> EigenPair {
    let s1 = (std::f64::consts::PI * beta as f64 * h).sin();
    let s2 = (2.0 * std::f64::consts::PI * beta as f64 * h).sin();
    let damp = 4.0 * p.mu / (p.rho_t * h * h) * s1 * s1;
    let trace = p.alpha + damp;
    let det = p.alpha * damp + p.stiffness() / (p.rho_t * h * h) * s2 * s2;
    quadratic_eigenvalues(trace, det)
}

/// Semi-discrete transport eigenvalues for grid mode `β` and spacing `h`.
pub fn chem_discrete_spectrum(beta: u32, h: f64, p: &ParameterSet) -> ChemEigenvalues {
    let s1 = (std::f64::consts::PI * beta as f64 * h).sin();
    chem_eigenvalues_for(4.0 / (h * h) * s1 * s1, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SystemTag {
    MechContinuous,
    MechDiscrete,
    ChemContinuous,
    ChemDiscrete,
}

impl SystemTag {
    pub fn name(self) -> &'static str {
        match self {
            SystemTag::MechContinuous => "mech-continuous",
            SystemTag::MechDiscrete => "mech-discrete",
            SystemTag::ChemContinuous => "chem-continuous",
            SystemTag::ChemDiscrete => "chem-discrete",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Stable,
    Unstable,
}

/// Eigenvalues of one mode.
#[derive(Debug, Clone, Serialize)]
pub struct ModeSpectrum {
    pub mode: u32,
    pub eigenvalues: Vec<EigenvalueRecord>,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct EigenvalueRecord {
    pub re: f64,
    pub im: f64,
}

impl From<Complex64> for EigenvalueRecord {
    fn from(z: Complex64) -> Self {
        EigenvalueRecord { re: z.re, im: z.im }
    }
}

/// Named threshold values reported alongside a verdict.
#[derive(Debug, Clone, Serialize)]
pub struct Thresholds {
    /// Real-eigenvalue viscosity bound (None when eps0 > 1).
    pub mu_min: Option<f64>,
    /// Chemokine decay threshold.
    pub delta_c_min: f64,
    /// Mechanical equilibrium strain bound.
    pub eps0_max: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectralReport {
    pub system: SystemTag,
    pub modes: Vec<ModeSpectrum>,
    pub verdict: Verdict,
    pub binding_constraint: String,
    pub thresholds: Thresholds,
}

/// Numerical slack on the `Re λ ≥ 0` verdict.
pub const VERDICT_TOLERANCE: f64 = 1e-12;

/// What to analyze.
#[derive(Debug, Clone, Copy)]
pub struct VerdictRequest {
    pub system: SystemTag,
    /// Modes `0..=max_mode` are scanned.
    pub max_mode: u32,
    /// Grid spacing for the discrete systems.
    pub h: Option<f64>,
    /// Equilibrium strain used by the continuous mechanics branch.
    pub eps0: f64,
    /// Domain size used for the reported viscosity bound.
    pub domain_size: f64,
}

impl VerdictRequest {
    pub fn new(system: SystemTag) -> Self {
        VerdictRequest {
            system,
            max_mode: 200,
            h: None,
            eps0: 0.0,
            domain_size: 1.0,
        }
    }

    /// Default mode cap: `min(n_grid − 1, 200)`.
    pub fn with_grid(mut self, n: usize) -> Self {
        self.max_mode = ((n.saturating_sub(1)) as u32).min(200);
        self
    }
}

/// Scan the requested spectrum and render a verdict.
pub fn stability_verdict(
    p: &ParameterSet,
    req: &VerdictRequest,
) -> Result<SpectralReport, StabilityError> {
    let h = match req.system {
        SystemTag::MechDiscrete | SystemTag::ChemDiscrete => {
            Some(req.h.filter(|&h| h > 0.0).ok_or(StabilityError::MissingH)?)
        }
        _ => None,
    };
    let mut modes = Vec::with_capacity(req.max_mode as usize + 1);
    let mut min_re = f64::INFINITY;
    let mut worst_mode = 0u32;
    for mode in 0..=req.max_mode {
        let eigenvalues: Vec<EigenvalueRecord> = match req.system {
            SystemTag::MechContinuous => mech_continuous_spectrum(mode, p, req.eps0)
                .into_iter()
                .map(Into::into)
                .collect(),
            SystemTag::MechDiscrete => mech_discrete_spectrum(mode, h.unwrap(), p)
                .into_iter()
                .map(Into::into)
                .collect(),
            SystemTag::ChemContinuous => chem_continuous_spectrum(mode, p)
                .as_array()
                .into_iter()
                .map(|re| EigenvalueRecord { re, im: 0.0 })
                .collect(),
            SystemTag::ChemDiscrete => chem_discrete_spectrum(mode, h.unwrap(), p)
                .as_array()
                .into_iter()
                .map(|re| EigenvalueRecord { re, im: 0.0 })
                .collect(),
        };
        for ev in &eigenvalues {
            if ev.re < min_re {
                min_re = ev.re;
                worst_mode = mode;
            }
        }
        modes.push(ModeSpectrum { mode, eigenvalues });
    }
    if modes.is_empty() {
        return Err(StabilityError::EmptyModeRange);
    }
    let verdict = if min_re >= -VERDICT_TOLERANCE {
        Verdict::Stable
    } else {
        Verdict::Unstable
    };
    let delta_c_min = chem_threshold(p);
    let thresholds = Thresholds {
        mu_min: viscosity_bound(p, req.eps0, req.domain_size).ok(),
        delta_c_min,
        eps0_max: 1.0,
    };
    let binding_constraint = match (verdict, req.system) {
        (Verdict::Stable, _) => "none".to_string(),
        (Verdict::Unstable, SystemTag::MechContinuous | SystemTag::MechDiscrete) => {
            format!("eps0 <= 1 violated (eps0 = {}, unstable mode k={worst_mode})", req.eps0)
        }
        (Verdict::Unstable, SystemTag::ChemContinuous) => format!(
            "chemokine decay below threshold {delta_c_min:.4e} at k={worst_mode}"
        ),
        (Verdict::Unstable, SystemTag::ChemDiscrete) => format!(
            "chemokine decay below threshold {delta_c_min:.4e} at beta={worst_mode}"
        ),
    };
    Ok(SpectralReport {
        system: req.system,
        modes,
        verdict,
        binding_constraint,
        thresholds,
    })
}

impl SpectralReport {
    pub fn is_stable(&self) -> bool {
        self.verdict == Verdict::Stable
    }

    /// One NDJSON record per mode: `{"system":…,"mode":…,"eigenvalues":[{re,im},…]}`.
    pub fn to_ndjson(&self) -> String {
        let mut out = String::new();
        for m in &self.modes {
            #[derive(Serialize)]
            struct Record<'a> {
                system: &'a str,
                mode: u32,
                eigenvalues: &'a [EigenvalueRecord],
            }
            let rec = Record {
                system: self.system.name(),
                mode: m.mode,
                eigenvalues: &m.eigenvalues,
            };
            out.push_str(&serde_json::to_string(&rec).expect("serializable"));
            out.push('\n');
        }
        out
    }

    /// Human-readable multi-line report.
    pub fn to_lines(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let verdict = match self.verdict {
            Verdict::Stable => "STABLE".to_string(),
            Verdict::Unstable => format!("UNSTABLE: {}", self.binding_constraint),
        };
        let _ = writeln!(s, "{:16} {}", self.system.name(), verdict);
        s
    }
}

/// Branch names used by [`consistency_order`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    MechPlus,
    MechMinus,
    ChemFibroblast,
    ChemMyofibroblast,
    ChemChemokine,
    ChemCollagen,
}

impl Branch {
    pub fn name(self) -> &'static str {
        match self {
            Branch::MechPlus => "mech λ+",
            Branch::MechMinus => "mech λ−",
            Branch::ChemFibroblast => "chem λ_N",
            Branch::ChemMyofibroblast => "chem λ_M",
            Branch::ChemChemokine => "chem λ_c",
            Branch::ChemCollagen => "chem λ_ρ",
        }
    }
}

/// Fit `|λ_discrete(β,h) − λ_continuous(β)| ≈ C·h^r` over a halving sequence
/// of spacings and return the observed order `r`.
pub fn consistency_order(
    branch: Branch,
    beta: u32,
    h_sequence: &[f64],
    p: &ParameterSet,
) -> Result<f64, StabilityError> {
    if h_sequence.len() < 3 {
        return Err(StabilityError::BadSpacingSequence);
    }
    for w in h_sequence.windows(2) {
        let ratio = w[0] / w[1];
        if !(1.99..=2.01).contains(&ratio) {
            return Err(StabilityError::BadSpacingSequence);
        }
    }
    let gap = |h: f64| -> f64 {
        match branch {
            Branch::MechPlus | Branch::MechMinus => {
                let idx = if branch == Branch::MechPlus { 0 } else { 1 };
                let d = mech_discrete_spectrum(beta, h, p)[idx];
                let c = mech_continuous_spectrum(beta, p, p.eps0)[idx];
                (d - c).norm()
            }
            _ => {
                let d = chem_discrete_spectrum(beta, h, p);
                let c = chem_continuous_spectrum(beta, p);
                let pick = |e: &ChemEigenvalues| match branch {
                    Branch::ChemFibroblast => e.fibroblast,
                    Branch::ChemMyofibroblast => e.myofibroblast,
                    Branch::ChemChemokine => e.chemokine,
                    Branch::ChemCollagen => e.collagen,
                    _ => unreachable!(),
                };
                (pick(&d) - pick(&c)).abs()
            }
        }
    };
    let gaps: Vec<f64> = h_sequence.iter().map(|&h| gap(h)).collect();
    if gaps.iter().any(|&g| g < 1e-13) {
        return Err(StabilityError::DegenerateFit(branch.name()));
    }
    // least-squares slope of ln(gap) against ln(h)
    let xs: Vec<f64> = h_sequence.iter().map(|&h| h.ln()).collect();
    let ys: Vec<f64> = gaps.iter().map(|&g| g.ln()).collect();
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    Ok(cov / var)
}
