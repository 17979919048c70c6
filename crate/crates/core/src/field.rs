//! Nodal field vectors tagged with their variable identity.

use serde::Serialize;

/// Model unknowns. `V` and `Eps` belong to the mechanical subsystem, the
/// rest to the reaction-transport subsystem.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Variable {
    /// Displacement velocity of the dermal layer (cm/day).
    V,
    /// Effective strain (dimensionless).
    Eps,
    /// Chemokine concentration (g/cm³).
    C,
    /// Fibroblast cell density (cells/cm³).
    N,
    /// Myofibroblast cell density (cells/cm³).
    M,
    /// Collagen density (g/cm³).
    Rho,
}

impl Variable {
    pub fn name(self) -> &'static str {
        match self {
            Variable::V => "v",
            Variable::Eps => "eps",
            Variable::C => "c",
            Variable::N => "N",
            Variable::M => "M",
            Variable::Rho => "rho",
        }
    }
}

/// Nodal coefficient vector for one unknown at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub variable: Variable,
    /// Time stamp in days.
    pub t: f64,
    pub values: Vec<f64>,
}

impl FieldState {
    pub fn new(variable: Variable, t: f64, values: Vec<f64>) -> Self {
        Self { variable, t, values }
    }

    pub fn constant(variable: Variable, t: f64, value: f64, n_nodes: usize) -> Self {
        Self::new(variable, t, vec![value; n_nodes])
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |a, &v| a.max(v.abs()))
    }

    /// Largest absolute deviation from a reference value.
    pub fn max_abs_dev(&self, reference: f64) -> f64 {
        self.values.iter().fold(0.0, |a, &v| a.max((v - reference).abs()))
    }

    pub fn all_finite(&self) -> bool {
        self.values.iter().all(|v| v.is_finite())
    }
}
