//! Global DOF numbering, scatter of element blocks and constraint rows into
//! the bordered KKT system, and support elimination.
//!
//! Global ordering is layer-blocked: `(u, phi)` pairs of layer 0 node by
//! node, then layer 1, ..., then all `w`, then all multipliers interface by
//! interface. Multipliers are nodal: adjacent elements share the interface
//! condition at their common node, so each (interface, node) pair owns exactly
//! one constraint row, assembled once.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use thiserror::Error;

use crate::element::{interface_coeffs, layer_element_matrices};
use crate::model::{BeamModel, SupportKind};

#[derive(Debug, Error)]
pub enum AssemblyError {
    #[error("degree of freedom {0} is fixed twice")]
    DuplicateSupport(String),
    #[error(transparent)]
    Element(#[from] crate::element::ElementError),
}

/// Bijection between (kind, layer, node) labels and 0..n_dofs.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DofMap {
    pub n_layers: usize,
    pub n_nodes: usize,
}

impl DofMap {
    pub fn u(&self, layer: usize, node: usize) -> usize {
        debug_assert!(layer < self.n_layers && node < self.n_nodes);
        layer * 2 * self.n_nodes + 2 * node
    }

    pub fn phi(&self, layer: usize, node: usize) -> usize {
        self.u(layer, node) + 1
    }

    pub fn w(&self, node: usize) -> usize {
        debug_assert!(node < self.n_nodes);
        2 * self.n_layers * self.n_nodes + node
    }

    /// Multiplier of interface `iface` (between layers `iface` and `iface+1`).
    pub fn lambda(&self, iface: usize, node: usize) -> usize {
        debug_assert!(iface + 1 < self.n_layers && node < self.n_nodes);
        (2 * self.n_layers + 1) * self.n_nodes + iface * self.n_nodes + node
    }

    /// Displacement-type DOFs (everything before the multiplier border).
    pub fn n_primal(&self) -> usize {
        (2 * self.n_layers + 1) * self.n_nodes
    }

    pub fn n_dofs(&self) -> usize {
        self.n_primal() + self.n_layers.saturating_sub(1) * self.n_nodes
    }

    pub fn is_multiplier(&self, dof: usize) -> bool {
        dof >= self.n_primal()
    }

    pub fn is_w(&self, dof: usize) -> bool {
        (2 * self.n_layers * self.n_nodes..self.n_primal()).contains(&dof)
    }

    /// Mesh node a DOF belongs to.
    pub fn node_of(&self, dof: usize) -> usize {
        let nn = self.n_nodes;
        if dof < 2 * self.n_layers * nn {
            (dof % (2 * nn)) / 2
        } else {
            (dof - 2 * self.n_layers * nn) % nn
        }
    }

    /// Human-readable DOF label for diagnostics.
    pub fn describe(&self, dof: usize) -> String {
        let nn = self.n_nodes;
        if dof < 2 * self.n_layers * nn {
            let layer = dof / (2 * nn);
            let node = (dof % (2 * nn)) / 2;
            let kind = if dof.is_multiple_of(2) { "u" } else { "phi" };
            format!("{kind}(layer {}, node {node})", layer + 1)
        } else if dof < self.n_primal() {
            format!("w(node {})", dof - 2 * self.n_layers * nn)
        } else {
            let rest = dof - self.n_primal();
            format!("lambda(interface {}, node {})", rest / nn + 1, rest % nn)
        }
    }

    pub fn support_dof(&self, kind: SupportKind, node: usize) -> usize {
        match kind {
            SupportKind::Deflection => self.w(node),
            SupportKind::Axial { layer } => self.u(layer, node),
            SupportKind::Rotation { layer } => self.phi(layer, node),
        }
    }
}

/// Symmetric sparse matrix stored as full rows (both triangles) with ordered
/// column maps; assembly-order deterministic.
#[derive(Debug, Clone)]
pub struct SymSparse {
    rows: Vec<BTreeMap<usize, f64>>,
}

impl SymSparse {
    pub fn zeros(n: usize) -> Self {
        SymSparse { rows: vec![BTreeMap::new(); n] }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn add(&mut self, i: usize, j: usize, v: f64) {
        if v != 0.0 {
            *self.rows[i].entry(j).or_insert(0.0) += v;
        }
    }

    /// Adds `v` at (i, j) and (j, i), once at a diagonal position.
    pub fn add_sym(&mut self, i: usize, j: usize, v: f64) {
        self.add(i, j, v);
        if i != j {
            self.add(j, i, v);
        }
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.rows[i].get(&j).copied().unwrap_or(0.0)
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.rows[i].iter().map(|(&j, &v)| (j, v))
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(|r| r.len()).sum()
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.dim();
        let mut m = DMatrix::zeros(n, n);
        for i in 0..n {
            for (j, v) in self.row(i) {
                m[(i, j)] = v;
            }
        }
        m
    }

    /// max |K - K^T| over all stored entries.
    pub fn asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.dim() {
            for (j, v) in self.row(i) {
                worst = worst.max((v - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn mul_vec(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut y = DVector::zeros(self.dim());
        for i in 0..self.dim() {
            let mut s = 0.0;
            for (j, v) in self.row(i) {
                s += v * x[j];
            }
            y[i] = s;
        }
        y
    }
}

/// Assembled bordered system `[K, E^T; E, 0]` with right-hand side.
#[derive(Debug, Clone)]
pub struct GlobalSystem {
    pub k: SymSparse,
    pub r: DVector<f64>,
    pub dofs: DofMap,
    /// Support DOFs in model order (not yet checked for duplicates).
    pub fixed: Vec<usize>,
}

/// Assembles the global KKT system for a validated model.
pub fn assemble(model: &BeamModel) -> Result<GlobalSystem, AssemblyError> {
    let dofs = DofMap {
        n_layers: model.section.n_layers(),
        n_nodes: model.mesh.n_nodes(),
    };
    let n = dofs.n_dofs();
    let mut k = SymSparse::zeros(n);
    let mut r = DVector::zeros(n);
    let l = model.mesh.element_length();

    for layer in 0..dofs.n_layers {
        let (fx, fz) = model.line_load(layer);
        let m = layer_element_matrices(
            model.section.ea(layer),
            model.section.ei(layer),
            model.section.kga(layer),
            l,
            fx,
            fz,
        )?;
        // The uniform mesh shares one block set across elements.
        for e in 0..model.mesh.n_elements {
            let (a, b) = (e, e + 1);
            let re = [dofs.u(layer, a), dofs.u(layer, b), dofs.phi(layer, a), dofs.phi(layer, b)];
            let rw = [dofs.w(a), dofs.w(b)];
            for (ii, &gi) in re.iter().enumerate() {
                for (jj, &gj) in re.iter().enumerate() {
                    k.add(gi, gj, m.k_e[(ii, jj)]);
                }
                for (jj, &gj) in rw.iter().enumerate() {
                    k.add(gi, gj, m.k_ew[(ii, jj)]);
                    k.add(gj, gi, m.k_ew[(ii, jj)]);
                }
                r[gi] += m.r_e[ii];
            }
            for (ii, &gi) in rw.iter().enumerate() {
                for (jj, &gj) in rw.iter().enumerate() {
                    k.add(gi, gj, m.k_w[(ii, jj)]);
                }
                r[gi] += m.r_w[ii];
            }
        }
    }

    // Interface continuity: one nodal row per (interface, node), entered once
    // into both the row and its transpose. The multiplier block stays zero.
    for iface in 0..dofs.n_layers.saturating_sub(1) {
        let c = interface_coeffs(
            model.section.layers[iface].h,
            model.section.layers[iface + 1].h,
        );
        for node in 0..dofs.n_nodes {
            let row = dofs.lambda(iface, node);
            let cols = [
                dofs.u(iface, node),
                dofs.phi(iface, node),
                dofs.u(iface + 1, node),
                dofs.phi(iface + 1, node),
            ];
            for (coef, col) in c.iter().zip(cols) {
                k.add(row, col, *coef);
                k.add(col, row, *coef);
            }
        }
    }

    for pl in &model.point_loads {
        r[dofs.w(pl.node)] += pl.p;
    }

    let fixed = model
        .supports
        .iter()
        .map(|s| dofs.support_dof(s.kind, s.node))
        .collect();

    Ok(GlobalSystem { k, r, dofs, fixed })
}

/// Reduced system after support elimination by row/column deletion.
#[derive(Debug, Clone)]
pub struct ReducedSystem {
    pub k: SymSparse,
    pub r: DVector<f64>,
    /// Global DOF index of each reduced unknown.
    pub kept: Vec<usize>,
    /// Eliminated support DOFs, sorted.
    pub fixed: Vec<usize>,
    /// Multiplier DOFs dropped because their constraint row became vacuous.
    pub dropped: Vec<usize>,
    pub dofs: DofMap,
}

/// Eliminates supported DOFs. Also drops any multiplier whose constraint row
/// has no remaining nonzero column (a condition fixed entirely by supports,
/// e.g. at a fully clamped symmetry node); keeping such rows would make the
/// reduced matrix structurally singular.
pub fn apply_supports(sys: &GlobalSystem) -> Result<ReducedSystem, AssemblyError> {
    let n = sys.dofs.n_dofs();
    let mut is_fixed = vec![false; n];
    for &dof in &sys.fixed {
        if is_fixed[dof] {
            return Err(AssemblyError::DuplicateSupport(sys.dofs.describe(dof)));
        }
        is_fixed[dof] = true;
    }

    let mut dropped = Vec::new();
    for dof in sys.dofs.n_primal()..n {
        if is_fixed[dof] {
            continue;
        }
        let vacuous = sys.k.row(dof).all(|(j, v)| is_fixed[j] || v == 0.0);
        if vacuous {
            is_fixed[dof] = true;
            dropped.push(dof);
        }
    }

    let kept: Vec<usize> = (0..n).filter(|&d| !is_fixed[d]).collect();
    let mut reduced_index = vec![usize::MAX; n];
    for (ri, &d) in kept.iter().enumerate() {
        reduced_index[d] = ri;
    }

    let mut k = SymSparse::zeros(kept.len());
    let mut r = DVector::zeros(kept.len());
    for (ri, &d) in kept.iter().enumerate() {
        r[ri] = sys.r[d];
        for (j, v) in sys.k.row(d) {
            if reduced_index[j] != usize::MAX {
                k.add(ri, reduced_index[j], v);
            }
        }
    }

    let mut fixed: Vec<usize> = sys.fixed.clone();
    fixed.sort_unstable();
    Ok(ReducedSystem { k, r, kept, fixed, dropped, dofs: sys.dofs })
}
