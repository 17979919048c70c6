//! Model parameters, derived constants and validation.
//!
//! The defaults follow the published simulation values for the wound
//! contraction model. Two constants are consequences of the others and are
//! always recomputed rather than configured:
//!
//! * `q` — the fibroblast proliferation exponent that makes the undamaged
//!   state a kinetic equilibrium,
//!   `q = [log(δ_N) − log(r_F(1−κ_F·N̄))]/log(N̄)`;
//! * `k_ρ` — the collagen secretion rate that balances decay at the
//!   undamaged state, `k_ρ = δ_ρ·ρ̄²`.
//!
//! Viscosity `mu` and the rate of morphoelastic change `alpha` have no
//! tabulated defaults and must be supplied by the configuration.

use serde::Serialize;
use thiserror::Error;

use crate::config::{format_f64, ConfigError, Document};

#[derive(Debug, Error)]
pub enum ParamError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("parameter `{key}` must be strictly positive, got {value}")]
    NotPositive { key: &'static str, value: f64 },
    #[error("parameter `{key}` must be nonnegative, got {value}")]
    Negative { key: &'static str, value: f64 },
    #[error("parameter `{key}` must be {expected}, got {value}")]
    Unsupported {
        key: &'static str,
        expected: &'static str,
        value: f64,
    },
    #[error("cannot derive q: requires N_bar > 0, N_bar != 1 and r_F(1-kappa_F*N_bar) > 0")]
    DegenerateQ,
}

/// Full parameter set. Units: cm, day, g, cells (see field docs).
///
/// Immutable by convention after construction; clone and rebuild to change
/// values. Safe to share across threads.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParameterSet {
    /// Chemokine diffusion coefficient, cm²/day.
    pub d_c: f64,
    /// Cell diffusion coefficient, cm⁵/(cells·day).
    pub d_f: f64,
    /// Cell chemotaxis coefficient, cm⁵/(g·day).
    pub chi_f: f64,
    /// Chemokine maximum net secretion rate, g/(cells·day).
    pub k_c: f64,
    /// Cell division rate, cm^(3q)/(cells^q·day).
    pub r_f: f64,
    /// Maximum division-rate enhancement by chemokines (dimensionless).
    pub r_f_max: f64,
    /// Maximum collagen-secretion enhancement by chemokines (dimensionless).
    pub k_rho_max: f64,
    /// Half-maximum chemokine level for division-rate enhancement, g/cm³.
    pub a_c_i: f64,
    /// Half-maximum chemokine level for net secretion, g/cm³.
    pub a_c_ii: f64,
    /// MMP secretion inhibition constant, cm³/g.
    pub a_c_iii: f64,
    /// Half-maximum chemokine level for collagen-secretion enhancement, g/cm³.
    pub a_c_iv: f64,
    /// Myofibroblast-to-fibroblast ratio in chemokine secretion (dimensionless).
    pub eta_i: f64,
    /// Myofibroblast-to-fibroblast ratio in MMP secretion (dimensionless).
    pub eta_ii: f64,
    /// Chemokine-driven differentiation rate, cm³/(g·day).
    pub k_f: f64,
    /// Crowding reduction of the division rate, cm³/cells.
    pub kappa_f: f64,
    /// Fibroblast apoptosis rate, 1/day.
    pub delta_n: f64,
    /// Myofibroblast apoptosis rate, 1/day.
    pub delta_m: f64,
    /// Chemokine proteolytic breakdown rate, cm⁶/(cells·g·day).
    pub delta_c: f64,
    /// Collagen decay rate, cm⁶/(cells·g·day).
    pub delta_rho: f64,
    /// Fibroblast equilibrium density, cells/cm³.
    pub n_bar: f64,
    /// Myofibroblast equilibrium density, cells/cm³ (must be 0).
    pub m_bar: f64,
    /// Chemokine equilibrium concentration, g/cm³ (must be 0).
    pub c_bar: f64,
    /// Collagen equilibrium density, g/cm³.
    pub rho_bar: f64,
    /// Total mass density of dermal tissue, g/cm³.
    pub rho_t: f64,
    /// Constant in the Young's modulus E√ρ, N/((g·cm)^0.5).
    pub e_young: f64,
    /// Viscosity (no tabulated default; required).
    pub mu: f64,
    /// Rate of morphoelastic change, 1/day (required; 0 recovers
    /// viscoelasticity).
    pub alpha: f64,
    /// Myofibroblast stress per unit cell density (unused by the linearized
    /// mechanics; kept for completeness).
    pub xi: f64,
    /// Collagen constant in the myofibroblast stress function.
    pub r_stress: f64,
    /// Equilibrium effective strain for the viscoelastic (`alpha = 0`) case.
    pub eps0: f64,
    /// Derived proliferation exponent (dimensionless).
    pub q: f64,
    /// Derived collagen secretion rate, g/(cells·day).
    pub k_rho: f64,
}

/// Configuration keys, in canonical order, with the tabulated defaults.
/// `None` marks required keys.
const KEYS: &[(&str, Option<f64>)] = &[
    ("D_c", Some(2.88e-3)),
    ("D_F", Some(1e-7)),
    ("chi_F", Some(3e-7)),
    ("k_c", Some(4e-13)),
    ("r_F", Some(9.24e-1)),
    ("r_F_max", Some(2.0)),
    ("k_rho_max", Some(10.0)),
    ("a_c_I", Some(1e-8)),
    ("a_c_II", Some(1e-8)),
    ("a_c_III", Some(2e8)),
    ("a_c_IV", Some(1e-9)),
    ("eta_I", Some(2.0)),
    ("eta_II", Some(5e-1)),
    ("k_F", Some(1.08e-7)),
    ("kappa_F", Some(1e-6)),
    ("delta_N", Some(2e-2)),
    ("delta_M", Some(6e-2)),
    ("delta_c", Some(5e-4)),
    ("delta_rho", Some(6e-6)),
    ("N_bar", Some(1e4)),
    ("M_bar", Some(0.0)),
    ("c_bar", Some(0.0)),
    ("rho_bar", Some(1.125e-1)),
    ("rho_t", Some(1.09)),
    ("E", Some(2.1e2)),
    ("mu", None),
    ("alpha", None),
    ("xi", Some(0.0)),
    ("R", Some(0.0)),
    ("eps0", Some(0.0)),
];

/// True for every key the parameter loader understands.
pub fn is_parameter_key(key: &str) -> bool {
    KEYS.iter().any(|(k, _)| *k == key)
}

/// Build a parameter set from a configuration document. Keys not listed in
/// the document fall back to their tabulated defaults; `mu` and `alpha` are
/// required. Derived `q` and `k_rho` are always recomputed.
pub fn load_parameters(doc: &Document) -> Result<ParameterSet, ParamError> {
    let get = |key: &str| -> Result<f64, ParamError> {
        let default = KEYS
            .iter()
            .find(|(k, _)| *k == key)
            .expect("key table covers all fields")
            .1;
        match default {
            Some(d) => Ok(doc.f64_or(key, d)?),
            None => Ok(doc.require_f64(key)?),
        }
    };
    let mut p = ParameterSet {
        d_c: get("D_c")?,
        d_f: get("D_F")?,
        chi_f: get("chi_F")?,
        k_c: get("k_c")?,
        r_f: get("r_F")?,
        r_f_max: get("r_F_max")?,
        k_rho_max: get("k_rho_max")?,
        a_c_i: get("a_c_I")?,
        a_c_ii: get("a_c_II")?,
        a_c_iii: get("a_c_III")?,
        a_c_iv: get("a_c_IV")?,
        eta_i: get("eta_I")?,
        eta_ii: get("eta_II")?,
        k_f: get("k_F")?,
        kappa_f: get("kappa_F")?,
        delta_n: get("delta_N")?,
        delta_m: get("delta_M")?,
        delta_c: get("delta_c")?,
        delta_rho: get("delta_rho")?,
        n_bar: get("N_bar")?,
        m_bar: get("M_bar")?,
        c_bar: get("c_bar")?,
        rho_bar: get("rho_bar")?,
        rho_t: get("rho_t")?,
        e_young: get("E")?,
        mu: get("mu")?,
        alpha: get("alpha")?,
        xi: get("xi")?,
        r_stress: get("R")?,
        eps0: get("eps0")?,
        q: 0.0,
        k_rho: 0.0,
    };
    p.check_signs()?;
    p.recompute_derived()?;
    Ok(p)
}

impl ParameterSet {
    /// Tabulated defaults plus explicit `mu` and `alpha`.
    pub fn table_defaults(mu: f64, alpha: f64) -> ParameterSet {
        let mut doc = Document::new();
        doc.set("mu", &format_f64(mu));
        doc.set("alpha", &format_f64(alpha));
        load_parameters(&doc).expect("defaults are valid")
    }

    /// Recompute `q` and `k_rho` from the primitive parameters. Call after
    /// mutating any field they depend on.
    pub fn recompute_derived(&mut self) -> Result<(), ParamError> {
        self.q = derive_q(self)?;
        self.k_rho = derive_k_rho(self);
        Ok(())
    }

    fn check_signs(&self) -> Result<(), ParamError> {
        let positive: &[(&'static str, f64)] = &[
            ("D_c", self.d_c),
            ("D_F", self.d_f),
            ("chi_F", self.chi_f),
            ("k_c", self.k_c),
            ("r_F", self.r_f),
            ("r_F_max", self.r_f_max),
            ("k_rho_max", self.k_rho_max),
            ("a_c_I", self.a_c_i),
            ("a_c_II", self.a_c_ii),
            ("a_c_III", self.a_c_iii),
            ("a_c_IV", self.a_c_iv),
            ("eta_I", self.eta_i),
            ("eta_II", self.eta_ii),
            ("k_F", self.k_f),
            ("kappa_F", self.kappa_f),
            ("delta_N", self.delta_n),
            ("delta_M", self.delta_m),
            ("delta_c", self.delta_c),
            ("delta_rho", self.delta_rho),
            ("N_bar", self.n_bar),
            ("rho_bar", self.rho_bar),
            ("rho_t", self.rho_t),
            ("E", self.e_young),
            ("mu", self.mu),
        ];
        for &(key, value) in positive {
            if !(value > 0.0) || !value.is_finite() {
                return Err(ParamError::NotPositive { key, value });
            }
        }
        for &(key, value) in &[("alpha", self.alpha), ("xi", self.xi), ("R", self.r_stress)] {
            if !(value >= 0.0) || !value.is_finite() {
                return Err(ParamError::Negative { key, value });
            }
        }
        // The stability analysis linearizes around M = 0, c = 0; other
        // equilibria are not supported.
        if self.m_bar != 0.0 {
            return Err(ParamError::Unsupported {
                key: "M_bar",
                expected: "0 (the analyzed equilibrium)",
                value: self.m_bar,
            });
        }
        if self.c_bar != 0.0 {
            return Err(ParamError::Unsupported {
                key: "c_bar",
                expected: "0 (the analyzed equilibrium)",
                value: self.c_bar,
            });
        }
        if !self.eps0.is_finite() {
            return Err(ParamError::Negative {
                key: "eps0",
                value: self.eps0,
            });
        }
        Ok(())
    }

    /// Serialize to the flat key-value format. Reloading the result yields a
    /// bit-identical parameter set.
    pub fn to_document(&self) -> Document {
        let mut doc = Document::new();
        let values: &[(&str, f64)] = &[
            ("D_c", self.d_c),
            ("D_F", self.d_f),
            ("chi_F", self.chi_f),
            ("k_c", self.k_c),
            ("r_F", self.r_f),
            ("r_F_max", self.r_f_max),
            ("k_rho_max", self.k_rho_max),
            ("a_c_I", self.a_c_i),
            ("a_c_II", self.a_c_ii),
            ("a_c_III", self.a_c_iii),
            ("a_c_IV", self.a_c_iv),
            ("eta_I", self.eta_i),
            ("eta_II", self.eta_ii),
            ("k_F", self.k_f),
            ("kappa_F", self.kappa_f),
            ("delta_N", self.delta_n),
            ("delta_M", self.delta_m),
            ("delta_c", self.delta_c),
            ("delta_rho", self.delta_rho),
            ("N_bar", self.n_bar),
            ("M_bar", self.m_bar),
            ("c_bar", self.c_bar),
            ("rho_bar", self.rho_bar),
            ("rho_t", self.rho_t),
            ("E", self.e_young),
            ("mu", self.mu),
            ("alpha", self.alpha),
            ("xi", self.xi),
            ("R", self.r_stress),
            ("eps0", self.eps0),
        ];
        for (k, v) in values {
            doc.set(k, &format_f64(*v));
        }
        doc
    }

    /// Young's modulus at the collagen equilibrium, `E·√ρ̄`.
    pub fn stiffness(&self) -> f64 {
        self.e_young * self.rho_bar.sqrt()
    }
}

/// Exponent that zeroes the fibroblast kinetics at the undamaged state.
pub fn derive_q(p: &ParameterSet) -> Result<f64, ParamError> {
    let base = p.r_f * (1.0 - p.kappa_f * p.n_bar);
    if !(p.n_bar > 0.0) || p.n_bar == 1.0 || !(base > 0.0) || !(p.delta_n > 0.0) {
        return Err(ParamError::DegenerateQ);
    }
    Ok((p.delta_n.ln() - base.ln()) / p.n_bar.ln())
}

/// Collagen secretion rate that zeroes the collagen kinetics at the
/// undamaged state.
pub fn derive_k_rho(p: &ParameterSet) -> f64 {
    p.delta_rho * p.rho_bar * p.rho_bar
}

/// Threshold on the chemokine breakdown rate below which constant
/// perturbations of the chemokine concentration grow.
pub fn chem_threshold(p: &ParameterSet) -> f64 {
    p.k_c / (p.a_c_ii * p.rho_bar)
}

/// Advisory validation report; never mutates the parameter set.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    /// Keys that violate their sign constraints.
    pub positivity_violations: Vec<String>,
    /// Whether `eps0 <= 1` (mechanical equilibrium constraint).
    pub eps0_ok: bool,
    /// Whether `delta_c >= k_c/(a_c_II·rho_bar)` (chemokine decay constraint).
    pub chem_ok: bool,
    /// The chemokine decay threshold `k_c/(a_c_II·rho_bar)`.
    pub chem_threshold: f64,
    /// Viscosity bound for real eigenvalues of the lowest wave mode on the
    /// configured domain; `None` when `eps0 > 1` (not defined).
    pub mu_bound: Option<f64>,
    /// Whether `mu` meets `mu_bound`.
    pub mu_ok: Option<bool>,
}

/// Check the stability-relevant relations for a given domain size (cm).
pub fn validate_parameters(p: &ParameterSet, domain_size: f64) -> ValidationReport {
    let mut violations = Vec::new();
    let mut check = |key: &str, v: f64, strict: bool| {
        let ok = if strict { v > 0.0 } else { v >= 0.0 };
        if !ok || !v.is_finite() {
            violations.push(key.to_string());
        }
    };
    check("D_c", p.d_c, true);
    check("D_F", p.d_f, true);
    check("chi_F", p.chi_f, true);
    check("k_c", p.k_c, true);
    check("r_F", p.r_f, true);
    check("r_F_max", p.r_f_max, true);
    check("k_rho_max", p.k_rho_max, true);
    check("a_c_I", p.a_c_i, true);
    check("a_c_II", p.a_c_ii, true);
    check("a_c_III", p.a_c_iii, true);
    check("a_c_IV", p.a_c_iv, true);
    check("eta_I", p.eta_i, true);
    check("eta_II", p.eta_ii, true);
    check("k_F", p.k_f, true);
    check("kappa_F", p.kappa_f, true);
    check("delta_N", p.delta_n, true);
    check("delta_M", p.delta_m, true);
    check("delta_c", p.delta_c, true);
    check("delta_rho", p.delta_rho, true);
    check("N_bar", p.n_bar, true);
    check("rho_bar", p.rho_bar, true);
    check("rho_t", p.rho_t, true);
    check("E", p.e_young, true);
    check("mu", p.mu, true);
    check("alpha", p.alpha, false);

    let threshold = chem_threshold(p);
    let eps0_ok = p.eps0 <= 1.0;
    let mu_bound = if eps0_ok {
        Some((p.rho_t * p.stiffness() * (1.0 - p.eps0)).sqrt() / std::f64::consts::PI * domain_size)
    } else {
        None
    };
    ValidationReport {
        positivity_violations: violations,
        eps0_ok,
        chem_ok: p.delta_c >= threshold,
        chem_threshold: threshold,
        mu_bound,
        mu_ok: mu_bound.map(|b| p.mu >= b),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    // 50-digit reference evaluations of the derived constants.
    const Q_REF: f64 = -0.41506929253841885;
    const K_RHO_REF: f64 = 7.59375e-8;
    const THRESHOLD_REF: f64 = 3.5555555555555556e-4;

    #[test]
    fn defaults_match_table() {
        let p = ParameterSet::table_defaults(1.0, 0.22);
        assert_eq!(p.d_c, 2.88e-3);
        assert_eq!(p.n_bar, 1e4);
        assert_eq!(p.rho_bar, 0.1125);
        assert_eq!(p.delta_c, 5e-4);
        assert_eq!(p.eps0, 0.0);
        assert_eq!(p.xi, 0.0);
    }

    #[test]
    fn override_delta_c() {
        let doc = Document::parse("mu = 1\nalpha = 0.22\ndelta_c = 5e-4\n").unwrap();
        let p = load_parameters(&doc).unwrap();
        assert_eq!(p.delta_c, 5e-4);
        assert_eq!(p.d_c, 2.88e-3);
    }

    #[test]
    fn negative_diffusion_rejected() {
        let doc = Document::parse("mu = 1\nalpha = 0\nD_F = -1\n").unwrap();
        let err = load_parameters(&doc).unwrap_err();
        assert!(matches!(err, ParamError::NotPositive { key: "D_F", .. }));
    }

    #[test]
    fn missing_mu_is_an_error() {
        let doc = Document::parse("alpha = 0\n").unwrap();
        assert!(matches!(
            load_parameters(&doc).unwrap_err(),
            ParamError::Config(ConfigError::Missing(_))
        ));
    }

    #[test]
    fn q_matches_reference() {
        let p = ParameterSet::table_defaults(1.0, 0.0);
        assert_relative_eq!(p.q, Q_REF, max_relative = 1e-14);
    }

    #[test]
    fn q_zeroes_fibroblast_kinetics() {
        let p = ParameterSet::table_defaults(1.0, 0.0);
        let residual = p.delta_n - p.r_f * (1.0 - p.kappa_f * p.n_bar) * p.n_bar.powf(p.q);
        assert!(residual.abs() <= 1e-12 * p.delta_n);
    }

    #[test]
    fn q_special_cases() {
        let mut p = ParameterSet::table_defaults(1.0, 0.0);
        // numerator vanishes
        p.delta_n = p.r_f * (1.0 - p.kappa_f * p.n_bar);
        p.recompute_derived().unwrap();
        assert_eq!(p.q, 0.0);
        // log ratio equals log(N_bar)
        p.delta_n = p.r_f * (1.0 - p.kappa_f * p.n_bar) * p.n_bar;
        p.recompute_derived().unwrap();
        assert_relative_eq!(p.q, 1.0, max_relative = 1e-14);
    }

    #[test]
    fn q_degenerate_inputs() {
        let mut p = ParameterSet::table_defaults(1.0, 0.0);
        p.n_bar = 1.0;
        assert!(matches!(derive_q(&p), Err(ParamError::DegenerateQ)));
        p.n_bar = 1e4;
        p.kappa_f = 1e-3; // makes 1 - kappa_F*N_bar negative
        assert!(matches!(derive_q(&p), Err(ParamError::DegenerateQ)));
    }

    #[test]
    fn k_rho_matches_reference() {
        let p = ParameterSet::table_defaults(1.0, 0.0);
        assert_relative_eq!(p.k_rho, K_RHO_REF, max_relative = 1e-15);
        let mut z = p.clone();
        z.delta_rho = 1.0;
        z.rho_bar = 1.0;
        assert_eq!(derive_k_rho(&z), 1.0);
    }

    #[test]
    fn threshold_matches_reference() {
        let p = ParameterSet::table_defaults(1.0, 0.0);
        assert_relative_eq!(chem_threshold(&p), THRESHOLD_REF, max_relative = 1e-14);
        // doubling rho_bar halves the threshold
        let mut z = p.clone();
        z.rho_bar *= 2.0;
        assert_relative_eq!(chem_threshold(&z), THRESHOLD_REF / 2.0, max_relative = 1e-14);
    }

    #[test]
    fn validation_flags_chemokine_constraint() {
        let mut p = ParameterSet::table_defaults(1.0, 0.0);
        p.delta_c = 5e-4;
        let r = validate_parameters(&p, 1.0);
        assert!(r.chem_ok);
        assert_relative_eq!(r.chem_threshold, THRESHOLD_REF, max_relative = 1e-14);
        p.delta_c = 3e-4;
        let r = validate_parameters(&p, 1.0);
        assert!(!r.chem_ok);
        assert!(r.positivity_violations.is_empty());
    }

    #[test]
    fn validation_eps0_boundary_case() {
        let mut p = ParameterSet::table_defaults(1.0, 0.0);
        p.eps0 = 1.0;
        let r = validate_parameters(&p, 5.0);
        assert!(r.eps0_ok);
        assert_eq!(r.mu_bound, Some(0.0));
        p.eps0 = 1.5;
        let r = validate_parameters(&p, 5.0);
        assert!(!r.eps0_ok);
        assert!(r.mu_bound.is_none());
    }

    #[test]
    fn document_round_trip_is_bit_identical() {
        let mut p = ParameterSet::table_defaults(100.0, 0.22);
        p.delta_c = 1.0 / 3.0 * 1e-3;
        p.recompute_derived().unwrap();
        let text = p.to_document().to_text();
        let reparsed = load_parameters(&Document::parse(&text).unwrap()).unwrap();
        assert_eq!(p, reparsed);
    }
}
