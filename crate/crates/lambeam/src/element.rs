//! Per-layer element matrices and the interface constraint rows.
//!
//! Displacements and rotations are linear over the element; the transverse
//! shear strain is taken constant and condensed out of the element equations
//! before assembly. With gamma = (phi_a + phi_b)/2 + (w_b - w_a)/l the shear
//! energy is (kGA*l/2) * gamma^2, whose second variation yields the blocks
//! below. The condensation is what keeps the element locking-free at high
//! slenderness: the one-point shear treatment cannot build up spurious
//! constraint energy as l shrinks.

use nalgebra::{DMatrix, Matrix2, Matrix4, Matrix4x2, SMatrix, Vector2, Vector4};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ElementError {
    #[error("element stiffness needs positive EA, EI, kGA, and length; got EA = {ea}, EI = {ei}, kGA = {kga}, l = {l}")]
    NonPositiveInput { ea: f64, ei: f64, kga: f64, l: f64 },
}

/// Stiffness blocks of one layer of one element, shear strain condensed.
///
/// Ordering: `r_e = [u_a, u_b, phi_a, phi_b]`, `r_w = [w_a, w_b]`.
#[derive(Debug, Clone)]
pub struct ElementLayerMatrices {
    pub k_e: Matrix4<f64>,
    pub k_ew: Matrix4x2<f64>,
    pub k_w: Matrix2<f64>,
    pub r_e: Vector4<f64>,
    pub r_w: Vector2<f64>,
}

impl ElementLayerMatrices {
    /// The layer's full 6x6 block on `[u_a, u_b, phi_a, phi_b, w_a, w_b]`.
    pub fn full(&self) -> SMatrix<f64, 6, 6> {
        let mut k = SMatrix::<f64, 6, 6>::zeros();
        k.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.k_e);
        k.fixed_view_mut::<4, 2>(0, 4).copy_from(&self.k_ew);
        k.fixed_view_mut::<2, 4>(4, 0).copy_from(&self.k_ew.transpose());
        k.fixed_view_mut::<2, 2>(4, 4).copy_from(&self.k_w);
        k
    }
}

/// Element stiffness blocks and consistent load vector for one layer.
///
/// `fx`, `fz` are constant line loads [N/m] on this layer.
pub fn layer_element_matrices(
    ea: f64,
    ei: f64,
    kga: f64,
    l: f64,
    fx: f64,
    fz: f64,
) -> Result<ElementLayerMatrices, ElementError> {
    if !(ea > 0.0 && ei > 0.0 && kga > 0.0 && l > 0.0) {
        return Err(ElementError::NonPositiveInput { ea, ei, kga, l });
    }

    let mut k_e = Matrix4::zeros();
    // Membrane block on (u_a, u_b).
    let ca = ea / l;
    k_e[(0, 0)] = ca;
    k_e[(0, 1)] = -ca;
    k_e[(1, 0)] = -ca;
    k_e[(1, 1)] = ca;
    // Rotation block on (phi_a, phi_b): bending plus condensed shear.
    let cb = ei / l;
    let cs = kga * l / 4.0;
    k_e[(2, 2)] = cb + cs;
    k_e[(2, 3)] = -cb + cs;
    k_e[(3, 2)] = -cb + cs;
    k_e[(3, 3)] = cb + cs;

    // Rotation-deflection coupling from the condensed shear term.
    let mut k_ew = Matrix4x2::zeros();
    let ch = kga / 2.0;
    k_ew[(2, 0)] = -ch;
    k_ew[(2, 1)] = ch;
    k_ew[(3, 0)] = -ch;
    k_ew[(3, 1)] = ch;

    let cw = kga / l;
    let k_w = Matrix2::new(cw, -cw, -cw, cw);

    let r_e = Vector4::new(fx * l / 2.0, fx * l / 2.0, 0.0, 0.0);
    let r_w = Vector2::new(fz * l / 2.0, fz * l / 2.0);

    Ok(ElementLayerMatrices { k_e, k_ew, k_w, r_e, r_w })
}

/// Coefficients of one interface continuity condition at a single node:
/// `u_upper + h_upper/2 * phi_upper - u_lower + h_lower/2 * phi_lower = 0`,
/// returned on `(u_upper, phi_upper, u_lower, phi_lower)`.
pub fn interface_coeffs(h_upper: f64, h_lower: f64) -> [f64; 4] {
    [1.0, h_upper / 2.0, -1.0, h_lower / 2.0]
}

/// Element-level constraint matrix tying all adjacent layer pairs at both
/// element nodes: `2(n-1)` rows over the stacked layer DOFs
/// `[u_a, u_b, phi_a, phi_b]` per layer (`4n` columns). Row order:
/// (interface 1, node a), (interface 1, node b), (interface 2, node a), ...
pub fn constraint_matrix(thicknesses: &[f64]) -> DMatrix<f64> {
    let n = thicknesses.len();
    let rows = 2 * n.saturating_sub(1);
    let mut e = DMatrix::zeros(rows, 4 * n);
    for i in 0..n.saturating_sub(1) {
        let c = interface_coeffs(thicknesses[i], thicknesses[i + 1]);
        for node in 0..2 {
            let r = 2 * i + node;
            e[(r, 4 * i + node)] = c[0]; //     u of upper layer
            e[(r, 4 * i + 2 + node)] = c[1]; // phi of upper layer
            e[(r, 4 * (i + 1) + node)] = c[2]; // u of lower layer
            e[(r, 4 * (i + 1) + 2 + node)] = c[3]; // phi of lower layer
        }
    }
    e
}
