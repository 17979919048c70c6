//! Uniform 1D linear-element machinery: mesh, element matrices/vectors and
//! global assembly with Dirichlet row replacement.
//!
//! All element quantities are 2×2 blocks (or length-2 vectors) over the two
//! nodes of an element of length `h`:
//!
//! * consistent mass `(h/6)[[2,1],[1,2]]`, lumped mass `(h/2)·I`;
//! * velocity/strain blocks `S_vv = (μ/h)[[1,-1],[-1,1]]`,
//!   `S_ve = (E√ρ̄/2)[[-1,-1],[1,1]]`, `S_ev = (1/2)[[-1,-1],[1,1]]`,
//!   `S_ee = α·(h/6)[[2,1],[1,2]]`;
//! * transport blocks for the chemokine/fibroblast/myofibroblast/collagen
//!   system, with reaction coefficients sampled at the element's end nodes
//!   (trapezoid/Newton-Cotes weights, diagonal blocks) and the apoptosis
//!   terms kept on the consistent mass.
//!
//! Nonlinear coefficients are evaluated from the caller-supplied nodal state
//! so the same block functions serve both the equilibrium checks and the
//! Picard iteration.

use thiserror::Error;

use crate::banded::Banded;
use crate::params::ParameterSet;

#[derive(Debug, Error)]
pub enum FemError {
    #[error("mesh needs at least one element, got {0}")]
    NoElements(usize),
    #[error("mesh interval is empty: [{a}, {b}]")]
    EmptyInterval { a: f64, b: f64 },
    #[error("element length must be positive, got {0}")]
    BadElementLength(f64),
    #[error("nonpositive kinetic denominator at a node (c = {c})")]
    BadDenominator { c: f64 },
    #[error("constrained node {node} outside mesh with {n_nodes} nodes")]
    BadConstraint { node: usize, n_nodes: usize },
}

/// Uniform grid on `[x_left, x_right]` with `n` elements and `n+1` nodes.
#[derive(Debug, Clone)]
pub struct Mesh {
    nodes: Vec<f64>,
    h: f64,
    x_left: f64,
    x_right: f64,
}

impl Mesh {
    pub fn uniform(n: usize, a: f64, b: f64) -> Result<Mesh, FemError> {
        if n == 0 {
            return Err(FemError::NoElements(n));
        }
        if !(a < b) {
            return Err(FemError::EmptyInterval { a, b });
        }
        let h = (b - a) / n as f64;
        let mut nodes: Vec<f64> = (0..=n).map(|i| a + i as f64 * h).collect();
        // pin the right end exactly
        nodes[n] = b;
        Ok(Mesh {
            nodes,
            h,
            x_left: a,
            x_right: b,
        })
    }

    pub fn n_elements(&self) -> usize {
        self.nodes.len() - 1
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes.len()
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn x_left(&self) -> f64 {
        self.x_left
    }

    pub fn x_right(&self) -> f64 {
        self.x_right
    }

    pub fn length(&self) -> f64 {
        self.x_right - self.x_left
    }

    /// Global node indices of element `e`.
    pub fn element_nodes(&self, e: usize) -> (usize, usize) {
        (e, e + 1)
    }
}

pub type ElemMat = [[f64; 2]; 2];
pub type ElemVec = [f64; 2];

pub fn zero_mat() -> ElemMat {
    [[0.0; 2]; 2]
}

pub fn mat_add(a: ElemMat, b: ElemMat) -> ElemMat {
    let mut out = a;
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] += b[i][j];
        }
    }
    out
}

pub fn mat_scale(a: ElemMat, s: f64) -> ElemMat {
    let mut out = a;
    for row in &mut out {
        for v in row {
            *v *= s;
        }
    }
    out
}

/// Element mass matrix; `lumped` replaces it by its row-sum diagonal.
pub fn element_mass(h: f64, lumped: bool) -> Result<ElemMat, FemError> {
    if !(h > 0.0) {
        return Err(FemError::BadElementLength(h));
    }
    Ok(if lumped {
        [[h / 2.0, 0.0], [0.0, h / 2.0]]
    } else {
        [[h / 3.0, h / 6.0], [h / 6.0, h / 3.0]]
    })
}

/// The four element blocks of the linearized velocity/strain system.
#[derive(Debug, Clone, Copy)]
pub struct MechBlocks {
    pub s_vv: ElemMat,
    pub s_ve: ElemMat,
    pub s_ev: ElemMat,
    pub s_ee: ElemMat,
}

pub fn mech_element_blocks(p: &ParameterSet, h: f64) -> Result<MechBlocks, FemError> {
    if !(h > 0.0) {
        return Err(FemError::BadElementLength(h));
    }
    let mu_h = p.mu / h;
    let ke = p.stiffness() / 2.0;
    let a6 = p.alpha * h / 6.0;
    Ok(MechBlocks {
        s_vv: [[mu_h, -mu_h], [-mu_h, mu_h]],
        s_ve: [[-ke, -ke], [ke, ke]],
        s_ev: [[-0.5, -0.5], [0.5, 0.5]],
        s_ee: [[2.0 * a6, a6], [a6, 2.0 * a6]],
    })
}

/// Nodal state of one element for the transport system. `dc_dx` is the
/// element-constant gradient of the linear chemokine interpolant,
/// `(c[1]-c[0])/h`.
#[derive(Debug, Clone, Copy)]
pub struct ChemLocal {
    pub c: [f64; 2],
    pub n: [f64; 2],
    pub m: [f64; 2],
    pub rho: [f64; 2],
    pub dc_dx: f64,
}

impl ChemLocal {
    pub fn from_fields(c: &[f64], n: &[f64], m: &[f64], rho: &[f64], e: usize, h: f64) -> Self {
        let (i, j) = (e, e + 1);
        ChemLocal {
            c: [c[i], c[j]],
            n: [n[i], n[j]],
            m: [m[i], m[j]],
            rho: [rho[i], rho[j]],
            dc_dx: (c[j] - c[i]) / h,
        }
    }
}

/// Element matrices and load vectors of the transport system.
#[derive(Debug, Clone, Copy)]
pub struct ChemBlocks {
    pub s_c: ElemMat,
    pub s_n: ElemMat,
    pub s_m: ElemMat,
    pub s_rho: ElemMat,
    pub f_m: ElemVec,
    pub f_rho: ElemVec,
}

pub fn chem_element_blocks(
    p: &ParameterSet,
    local: &ChemLocal,
    h: f64,
) -> Result<ChemBlocks, FemError> {
    if !(h > 0.0) {
        return Err(FemError::BadElementLength(h));
    }
    for &c in &local.c {
        if !(p.a_c_ii + c > 0.0)
            || !(p.a_c_i + c > 0.0)
            || !(p.a_c_iv + c > 0.0)
            || !(1.0 + p.a_c_iii * c > 0.0)
        {
            return Err(FemError::BadDenominator { c });
        }
    }

    let stiff = |k: f64| -> ElemMat { [[k / h, -k / h], [-k / h, k / h]] };
    let mass6 = |k: f64| -> ElemMat {
        let m = k * h / 6.0;
        [[2.0 * m, m], [m, 2.0 * m]]
    };
    // Newton-Cotes (end-node) sampling of a reaction coefficient.
    let diag = |f0: f64, f1: f64| -> ElemMat { [[h / 2.0 * f0, 0.0], [0.0, h / 2.0 * f1]] };

    let fc = [
        crate::chem::coeff_f_c(p, local.c[0], local.n[0], local.m[0], local.rho[0]),
        crate::chem::coeff_f_c(p, local.c[1], local.n[1], local.m[1], local.rho[1]),
    ];
    let fn_ = [
        crate::chem::coeff_f_n(p, local.c[0], local.n[0], local.m[0]),
        crate::chem::coeff_f_n(p, local.c[1], local.n[1], local.m[1]),
    ];
    let fm = [
        crate::chem::coeff_f_m(p, local.c[0], local.n[0], local.m[0]),
        crate::chem::coeff_f_m(p, local.c[1], local.n[1], local.m[1]),
    ];
    let grho = [
        crate::chem::coeff_g_rho(p, local.c[0], local.n[0], local.m[0], local.rho[0]),
        crate::chem::coeff_g_rho(p, local.c[1], local.n[1], local.m[1], local.rho[1]),
    ];
    let frho = [
        crate::chem::coeff_f_rho(p, local.c[0], local.n[0], local.m[0]),
        crate::chem::coeff_f_rho(p, local.c[1], local.n[1], local.m[1]),
    ];

    let s_c = mat_add(stiff(p.d_c), mat_scale(diag(fc[0], fc[1]), -1.0));

    let f_sum = local.n[0] + local.m[0] + local.n[1] + local.m[1];
    let diffusion_n = stiff(p.d_f * f_sum / 2.0);
    // chemotaxis block: -(χ_F/2)[[-c', -c'],[c', c']]
    let cx = p.chi_f * local.dc_dx / 2.0;
    let chemotaxis = [[cx, cx], [-cx, -cx]];
    let s_n = mat_add(
        mat_add(diffusion_n, chemotaxis),
        mat_add(
            mat_scale(diag(fn_[0] - p.k_f * local.c[0], fn_[1] - p.k_f * local.c[1]), -1.0),
            mass6(p.delta_n),
        ),
    );

    let s_m = mat_add(
        mat_add(diffusion_n, chemotaxis),
        mat_add(mat_scale(diag(fm[0], fm[1]), -1.0), mass6(p.delta_m)),
    );

    let s_rho = diag(grho[0], grho[1]);

    let f_m = [
        h / 2.0 * p.k_f * local.c[0] * local.n[0],
        h / 2.0 * p.k_f * local.c[1] * local.n[1],
    ];
    let f_rho = [h / 2.0 * frho[0], h / 2.0 * frho[1]];

    Ok(ChemBlocks {
        s_c,
        s_n,
        s_m,
        s_rho,
        f_m,
        f_rho,
    })
}

/// A globally assembled linear system with Dirichlet bookkeeping: constrained
/// rows are identity rows and their right-hand side carries the prescribed
/// value.
#[derive(Debug)]
pub struct AssembledSystem {
    pub matrix: Banded,
    pub rhs: Vec<f64>,
    pub constrained: Vec<(usize, f64)>,
}

impl AssembledSystem {
    /// Re-apply the prescribed values after the caller edited `rhs`.
    pub fn apply_rhs_constraints(&self, rhs: &mut [f64]) {
        for &(i, v) in &self.constrained {
            rhs[i] = v;
        }
    }
}

/// Assemble a scalar-field system from per-element matrix blocks and optional
/// per-element load vectors. Elements are visited in index order, so the
/// result is deterministic.
pub fn assemble_scalar(
    mesh: &Mesh,
    blocks: &mut dyn FnMut(usize) -> ElemMat,
    loads: Option<&mut dyn FnMut(usize) -> ElemVec>,
    dirichlet: &[(usize, f64)],
) -> Result<AssembledSystem, FemError> {
    let n_nodes = mesh.n_nodes();
    for &(node, _) in dirichlet {
        if node >= n_nodes {
            return Err(FemError::BadConstraint { node, n_nodes });
        }
    }
    let mut matrix = Banded::new(n_nodes, 1, 1);
    let mut rhs = vec![0.0; n_nodes];
    let mut loads = loads;
    for e in 0..mesh.n_elements() {
        let (i, j) = mesh.element_nodes(e);
        let b = blocks(e);
        matrix.add(i, i, b[0][0]);
        matrix.add(i, j, b[0][1]);
        matrix.add(j, i, b[1][0]);
        matrix.add(j, j, b[1][1]);
        if let Some(f) = loads.as_deref_mut() {
            let v = f(e);
            rhs[i] += v[0];
            rhs[j] += v[1];
        }
    }
    for &(node, value) in dirichlet {
        matrix.set_identity_row(node);
        rhs[node] = value;
    }
    Ok(AssembledSystem {
        matrix,
        rhs,
        constrained: dirichlet.to_vec(),
    })
}

/// Node-interleaved global matrix of the coupled velocity/strain backward
/// Euler step: unknown order `v_0, ε_0, v_1, ε_1, …`, giving band widths
/// `kl = ku = 3`. Velocity rows at both ends are identity rows (v = 0).
pub fn assemble_mech_matrix(mesh: &Mesh, p: &ParameterSet, dt: f64) -> Result<Banded, FemError> {
    let h = mesh.h();
    let blocks = mech_element_blocks(p, h)?;
    let mass = element_mass(h, false)?;
    let n_nodes = mesh.n_nodes();
    let mut matrix = Banded::new(2 * n_nodes, 3, 3);
    for e in 0..mesh.n_elements() {
        let (gi, gj) = mesh.element_nodes(e);
        let g = [gi, gj];
        for a in 0..2 {
            for b in 0..2 {
                let (ra, cb) = (2 * g[a], 2 * g[b]);
                matrix.add(ra, cb, p.rho_t * mass[a][b] + dt * blocks.s_vv[a][b]);
                matrix.add(ra, cb + 1, dt * blocks.s_ve[a][b]);
                matrix.add(ra + 1, cb, dt * blocks.s_ev[a][b]);
                matrix.add(ra + 1, cb + 1, mass[a][b] + dt * blocks.s_ee[a][b]);
            }
        }
    }
    matrix.set_identity_row(0);
    matrix.set_identity_row(2 * (n_nodes - 1));
    Ok(matrix)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn table(mu: f64, alpha: f64) -> ParameterSet {
        ParameterSet::table_defaults(mu, alpha)
    }

    #[test]
    fn mesh_spacing() {
        let m = Mesh::uniform(1000, 0.0, 5.0).unwrap();
        assert_eq!(m.n_nodes(), 1001);
        assert_relative_eq!(m.h(), 0.005, max_relative = 1e-15);
        let m = Mesh::uniform(200, 0.0, 1.0).unwrap();
        assert_relative_eq!(m.h(), 0.005, max_relative = 1e-15);
        let m = Mesh::uniform(1, 0.0, 1.0).unwrap();
        assert_eq!(m.nodes(), &[0.0, 1.0]);
        assert_eq!(m.h(), 1.0);
    }

    #[test]
    fn mesh_nodes_equispaced() {
        let m = Mesh::uniform(137, -2.0, 3.5).unwrap();
        let h = m.h();
        for w in m.nodes().windows(2) {
            assert_relative_eq!(w[1] - w[0], h, max_relative = 1e-12);
        }
    }

    #[test]
    fn mesh_rejects_bad_input() {
        assert!(Mesh::uniform(0, 0.0, 1.0).is_err());
        assert!(Mesh::uniform(10, 1.0, 1.0).is_err());
        assert!(Mesh::uniform(10, 2.0, 1.0).is_err());
    }

    #[test]
    fn mass_matrices() {
        let m = element_mass(6.0, false).unwrap();
        assert_eq!(m, [[2.0, 1.0], [1.0, 2.0]]);
        let l = element_mass(2.0, true).unwrap();
        assert_eq!(l, [[1.0, 0.0], [0.0, 1.0]]);
        assert!(element_mass(0.0, false).is_err());
    }

    #[test]
    fn lumping_preserves_row_sums() {
        for &h in &[0.3, 1.0, 5.5] {
            let m = element_mass(h, false).unwrap();
            let l = element_mass(h, true).unwrap();
            for i in 0..2 {
                assert_relative_eq!(m[i][0] + m[i][1], l[i][0] + l[i][1], max_relative = 1e-15);
                assert_relative_eq!(m[i][0] + m[i][1], h / 2.0, max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn mech_blocks_displayed_values() {
        let p = table(1.0, 0.22);
        let b = mech_element_blocks(&p, 1.0).unwrap();
        assert_eq!(b.s_vv, [[1.0, -1.0], [-1.0, 1.0]]);
        assert_eq!(b.s_ev, [[-0.5, -0.5], [0.5, 0.5]]);
        let p0 = table(1.0, 0.0);
        let b0 = mech_element_blocks(&p0, 1.0).unwrap();
        assert_eq!(b0.s_ee, [[0.0, 0.0], [0.0, 0.0]]);
    }

    #[test]
    fn coupling_block_matches_quadrature() {
        // Independent route: 2-point Gauss quadrature of E√ρ̄·φ_j·φ_i' over
        // one element of length h.
        let p = table(1.0, 0.22);
        let h = 0.73;
        let k = p.stiffness();
        let gauss = [-1.0 / 3.0f64.sqrt(), 1.0 / 3.0f64.sqrt()];
        let mut want = [[0.0; 2]; 2];
        for &xi in &gauss {
            // basis on [-1,1]: φ_0=(1-ξ)/2, φ_1=(1+ξ)/2; dφ/dx = ∓1/h
            let phi = [(1.0 - xi) / 2.0, (1.0 + xi) / 2.0];
            let dphi = [-1.0 / h, 1.0 / h];
            for i in 0..2 {
                for j in 0..2 {
                    // weight 1 on [-1,1], jacobian h/2
                    want[i][j] += k * phi[j] * dphi[i] * (h / 2.0);
                }
            }
        }
        let b = mech_element_blocks(&p, h).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(b.s_ve[i][j], want[i][j], max_relative = 1e-13);
            }
        }
        // spot value E√ρ̄/2 = 35.218...
        assert_relative_eq!(b.s_ve[1][0], 35.218070645621688, max_relative = 1e-14);
    }

    #[test]
    fn chem_blocks_equilibrium_coefficient() {
        let p = table(1.0, 0.0); // delta_c = 5e-4
        let h = 0.02;
        let local = ChemLocal {
            c: [0.0; 2],
            n: [p.n_bar; 2],
            m: [0.0; 2],
            rho: [p.rho_bar; 2],
            dc_dx: 0.0,
        };
        let b = chem_element_blocks(&p, &local, h).unwrap();
        // nodal coefficient (k_c/a_c_II − δ_c·ρ̄)·N̄ appears on the reaction diagonal
        let f_c = (p.k_c / p.a_c_ii - p.delta_c * p.rho_bar) * p.n_bar;
        assert_relative_eq!(f_c, -0.1625, max_relative = 1e-12);
        let expect = p.d_c / h - h / 2.0 * f_c;
        assert_relative_eq!(b.s_c[0][0], expect, max_relative = 1e-12);
        assert_relative_eq!(b.s_c[1][1], expect, max_relative = 1e-12);
    }

    #[test]
    fn chem_blocks_zero_density_cases() {
        let p = table(1.0, 0.0);
        let h = 0.01;
        let local = ChemLocal {
            c: [1e-9, 2e-9],
            n: [0.0; 2],
            m: [0.0; 2],
            rho: [p.rho_bar; 2],
            dc_dx: (2e-9 - 1e-9) / h,
        };
        let b = chem_element_blocks(&p, &local, h).unwrap();
        assert_eq!(b.f_m, [0.0, 0.0]);
        assert_eq!(b.f_rho, [0.0, 0.0]);
        // no cells: the density-weighted diffusion part of S_N vanishes; the
        // off-diagonal keeps only chemotaxis plus the consistent apoptosis term
        let cx = p.chi_f * local.dc_dx / 2.0;
        assert_relative_eq!(b.s_n[0][1], cx + p.delta_n * h / 6.0, max_relative = 1e-12);
    }

    #[test]
    fn chem_blocks_zero_gradient_has_no_chemotaxis() {
        let p = table(1.0, 0.0);
        let local = ChemLocal {
            c: [0.0; 2],
            n: [p.n_bar; 2],
            m: [0.0; 2],
            rho: [p.rho_bar; 2],
            dc_dx: 0.0,
        };
        let b = chem_element_blocks(&p, &local, 0.01).unwrap();
        // with dc/dx = 0 the S_N off-diagonal structure is symmetric diffusion
        assert_relative_eq!(b.s_n[0][1], b.s_n[1][0], max_relative = 1e-12);
    }

    #[test]
    fn chem_blocks_reject_bad_denominator() {
        let p = table(1.0, 0.0);
        let local = ChemLocal {
            c: [-1.0, 0.0],
            n: [p.n_bar; 2],
            m: [0.0; 2],
            rho: [p.rho_bar; 2],
            dc_dx: 0.0,
        };
        assert!(matches!(
            chem_element_blocks(&p, &local, 0.01),
            Err(FemError::BadDenominator { .. })
        ));
    }

    #[test]
    fn assembled_mass_two_elements() {
        let mesh = Mesh::uniform(2, 0.0, 1.0).unwrap();
        let h = mesh.h();
        let sys = assemble_scalar(
            &mesh,
            &mut |_| element_mass(h, false).unwrap(),
            None,
            &[],
        )
        .unwrap();
        let want = [
            [2.0 * h / 6.0, h / 6.0, 0.0],
            [h / 6.0, 4.0 * h / 6.0, h / 6.0],
            [0.0, h / 6.0, 2.0 * h / 6.0],
        ];
        for i in 0..3 {
            for j in 0..3 {
                assert_relative_eq!(sys.matrix.get(i, j), want[i][j], max_relative = 1e-14);
            }
        }
    }

    #[test]
    fn assembled_lumped_mass_is_diagonal() {
        let mesh = Mesh::uniform(5, 0.0, 2.5).unwrap();
        let h = mesh.h();
        let sys = assemble_scalar(&mesh, &mut |_| element_mass(h, true).unwrap(), None, &[]).unwrap();
        for i in 0..mesh.n_nodes() {
            let expect = if i == 0 || i == mesh.n_nodes() - 1 { h / 2.0 } else { h };
            assert_relative_eq!(sys.matrix.get(i, i), expect, max_relative = 1e-14);
            if i > 0 {
                assert_eq!(sys.matrix.get(i, i - 1), 0.0);
            }
        }
    }

    #[test]
    fn fully_constrained_single_element() {
        let mesh = Mesh::uniform(1, 0.0, 1.0).unwrap();
        let p = table(3.0, 0.0);
        let blocks = mech_element_blocks(&p, mesh.h()).unwrap();
        let sys = assemble_scalar(
            &mesh,
            &mut |_| blocks.s_vv,
            None,
            &[(0, 0.0), (1, 0.0)],
        )
        .unwrap();
        assert_eq!(sys.matrix.get(0, 0), 1.0);
        assert_eq!(sys.matrix.get(1, 1), 1.0);
        assert_eq!(sys.matrix.get(0, 1), 0.0);
        assert_eq!(sys.rhs, vec![0.0, 0.0]);
    }

    #[test]
    fn assembly_matches_dense_scatter() {
        // brute-force dense assembly as the oracle, n <= 8
        for n in 1..=8usize {
            let mesh = Mesh::uniform(n, 0.0, 1.3).unwrap();
            let p = table(2.0, 0.22);
            let b = mech_element_blocks(&p, mesh.h()).unwrap();
            let sys = assemble_scalar(&mesh, &mut |_| b.s_vv, None, &[]).unwrap();
            let mut dense = vec![vec![0.0; n + 1]; n + 1];
            for e in 0..n {
                for a in 0..2 {
                    for c in 0..2 {
                        dense[e + a][e + c] += b.s_vv[a][c];
                    }
                }
            }
            for i in 0..=n {
                for j in 0..=n {
                    assert!((sys.matrix.get(i, j) - dense[i][j]).abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn stiffness_rows_annihilate_constants() {
        let mesh = Mesh::uniform(7, 0.0, 2.0).unwrap();
        let p = table(4.0, 0.1);
        let b = mech_element_blocks(&p, mesh.h()).unwrap();
        let sys = assemble_scalar(&mesh, &mut |_| b.s_vv, None, &[]).unwrap();
        let y = sys.matrix.matvec(&vec![1.0; mesh.n_nodes()]);
        for v in y {
            assert!(v.abs() <= 1e-12);
        }
    }

    #[test]
    fn strain_coupling_columns_sum_to_zero_at_interior() {
        let mesh = Mesh::uniform(6, 0.0, 3.0).unwrap();
        let p = table(4.0, 0.1);
        let b = mech_element_blocks(&p, mesh.h()).unwrap();
        let sys = assemble_scalar(&mesh, &mut |_| b.s_ev, None, &[]).unwrap();
        let n = mesh.n_nodes();
        for j in 1..n - 1 {
            let col_sum: f64 = (0..n).map(|i| sys.matrix.get(i, j)).sum();
            assert!(col_sum.abs() <= 1e-13);
        }
    }
}
