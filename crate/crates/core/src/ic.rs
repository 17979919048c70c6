//! Initial perturbations: sine waves around an equilibrium offset and
//! positive piecewise-linear bumps on 21 uniform knots.

use thiserror::Error;

use crate::fem::Mesh;
use crate::field::{FieldState, Variable};

/// Number of knots of the uniform-spline perturbation, including the two
/// zero-valued boundary knots.
pub const SPLINE_KNOTS: usize = 21;

#[derive(Debug, Error)]
pub enum IcError {
    #[error("expected a {expected:?} perturbation, got {got:?}")]
    KindMismatch {
        expected: PerturbationKind,
        got: PerturbationKind,
    },
    #[error("uniform spline needs exactly {SPLINE_KNOTS} knot values, got {0}")]
    KnotCount(usize),
    #[error("spline boundary knots must be zero, got {0}")]
    BoundaryKnot(f64),
    #[error("spline knots must be nonnegative, got {0}")]
    NegativeKnot(f64),
    #[error("sine wavenumber must be at least 1")]
    ZeroWavenumber,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationKind {
    Sine,
    UniformSpline,
}

/// Description of one field's initial perturbation.
#[derive(Debug, Clone)]
pub struct PerturbationSpec {
    pub kind: PerturbationKind,
    /// Sine amplitude, in the field's units.
    pub amplitude: f64,
    /// Number of full sine periods across the domain.
    pub wavenumber: u32,
    /// Spline knot values (length 21, zero at both ends, nonnegative).
    pub knot_values: Vec<f64>,
    /// Constant added everywhere (the field's equilibrium).
    pub equilibrium_offset: f64,
}

impl PerturbationSpec {
    pub fn sine(amplitude: f64, wavenumber: u32, equilibrium_offset: f64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::Sine,
            amplitude,
            wavenumber,
            knot_values: Vec::new(),
            equilibrium_offset,
        }
    }

    pub fn uniform_spline(knot_values: Vec<f64>, equilibrium_offset: f64) -> Self {
        PerturbationSpec {
            kind: PerturbationKind::UniformSpline,
            amplitude: 0.0,
            wavenumber: 0,
            knot_values,
            equilibrium_offset,
        }
    }

    /// 21 knots alternating `high, low, high, …` between the zero endpoints.
    pub fn alternating_spline(high: f64, low: f64, equilibrium_offset: f64) -> Self {
        let mut knots = vec![0.0; SPLINE_KNOTS];
        for (i, k) in knots.iter_mut().enumerate().take(SPLINE_KNOTS - 1).skip(1) {
            *k = if i % 2 == 1 { high } else { low };
        }
        Self::uniform_spline(knots, equilibrium_offset)
    }
}

/// `offset + A·sin(2πk·(x−a)/(b−a))` sampled at the mesh nodes.
pub fn sine_ic(spec: &PerturbationSpec, mesh: &Mesh, variable: Variable) -> Result<FieldState, IcError> {
    if spec.kind != PerturbationKind::Sine {
        return Err(IcError::KindMismatch {
            expected: PerturbationKind::Sine,
            got: spec.kind,
        });
    }
    if spec.wavenumber == 0 {
        return Err(IcError::ZeroWavenumber);
    }
    let w = 2.0 * std::f64::consts::PI * spec.wavenumber as f64 / mesh.length();
    let values = mesh
        .nodes()
        .iter()
        .map(|&x| spec.equilibrium_offset + spec.amplitude * (w * (x - mesh.x_left())).sin())
        .collect();
    Ok(FieldState::new(variable, 0.0, values))
}

/// Piecewise-linear interpolation of 21 equispaced knots, sampled at the
/// mesh nodes.
pub fn spline_ic(
    spec: &PerturbationSpec,
    mesh: &Mesh,
    variable: Variable,
) -> Result<FieldState, IcError> {
    if spec.kind != PerturbationKind::UniformSpline {
        return Err(IcError::KindMismatch {
            expected: PerturbationKind::UniformSpline,
            got: spec.kind,
        });
    }
    let knots = &spec.knot_values;
    if knots.len() != SPLINE_KNOTS {
        return Err(IcError::KnotCount(knots.len()));
    }
    if knots[0] != 0.0 {
        return Err(IcError::BoundaryKnot(knots[0]));
    }
    if knots[SPLINE_KNOTS - 1] != 0.0 {
        return Err(IcError::BoundaryKnot(knots[SPLINE_KNOTS - 1]));
    }
    if let Some(&bad) = knots.iter().find(|&&k| k < 0.0) {
        return Err(IcError::NegativeKnot(bad));
    }
    let spacing = mesh.length() / (SPLINE_KNOTS - 1) as f64;
    let values = mesh
        .nodes()
        .iter()
        .map(|&x| {
            let s = (x - mesh.x_left()) / spacing;
            let seg = (s.floor() as usize).min(SPLINE_KNOTS - 2);
            let frac = s - seg as f64;
            spec.equilibrium_offset + knots[seg] * (1.0 - frac) + knots[seg + 1] * frac
        })
        .collect();
    Ok(FieldState::new(variable, 0.0, values))
}
