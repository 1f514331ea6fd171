//! Derived fields: member forces, fiber strains and stresses, interface
//! tractions, and section resultants that tie the solution back to statics.
//!
//! All element fields of this formulation are constant per element and
//! superconvergent at the element midpoint. Plot values are averaged to the
//! nodes; reported extrema instead use one-sided linear extrapolation of the
//! two nearest midpoint values, which keeps the sharp peak under a point load
//! that plain element sampling clips by half an element.

use thiserror::Error;

use crate::model::BeamModel;
use crate::solver::Solution;

#[derive(Debug, Error)]
pub enum PostError {
    #[error("x = {x} m lies outside the span [0, {span}] m")]
    OutOfSpan { x: f64, span: f64 },
}

/// Constant member state of one layer over one element.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayerElementState {
    /// Axial force [N].
    pub n: f64,
    /// Bending moment about the layer centroid [N m].
    pub m: f64,
    /// Shear force [N].
    pub v: f64,
    /// Axial strain at the layer top fiber [-].
    pub eps_top: f64,
    /// Axial strain at the layer bottom fiber [-].
    pub eps_bot: f64,
    /// Fiber stresses [Pa].
    pub sig_top: f64,
    pub sig_bot: f64,
}

/// Element fields for every layer, `states[layer][element]`.
#[derive(Debug, Clone)]
pub struct ElementFields {
    pub states: Vec<Vec<LayerElementState>>,
    pub element_length: f64,
}

pub fn element_fields(model: &BeamModel, sol: &Solution) -> ElementFields {
    let nel = model.mesh.n_elements;
    let l = model.mesh.element_length();
    let mut states = Vec::with_capacity(model.section.n_layers());
    for i in 0..model.section.n_layers() {
        let (ea, ei, kga) = (model.section.ea(i), model.section.ei(i), model.section.kga(i));
        let e_mod = model.section.layers[i].material.e;
        let h = model.section.layers[i].h;
        let mut layer = Vec::with_capacity(nel);
        for e in 0..nel {
            let du = (sol.u(i, e + 1) - sol.u(i, e)) / l;
            let dphi = (sol.phi(i, e + 1) - sol.phi(i, e)) / l;
            let gamma = (sol.phi(i, e) + sol.phi(i, e + 1)) / 2.0
                + (sol.w(e + 1) - sol.w(e)) / l;
            let eps_top = du - h / 2.0 * dphi;
            let eps_bot = du + h / 2.0 * dphi;
            layer.push(LayerElementState {
                n: ea * du,
                m: ei * dphi,
                v: kga * gamma,
                eps_top,
                eps_bot,
                sig_top: e_mod * eps_top,
                sig_bot: e_mod * eps_bot,
            });
        }
        states.push(layer);
    }
    ElementFields { states, element_length: l }
}

/// Averages per-element values to the nodes; end nodes take the single
/// adjacent value. Used for plot output.
pub fn nodal_average(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    (0..=n)
        .map(|j| {
            if j == 0 {
                values[0]
            } else if j == n {
                values[n - 1]
            } else {
                (values[j - 1] + values[j]) / 2.0
            }
        })
        .collect()
}

/// One-sided nodal recovery: each side extrapolates linearly through its two
/// nearest element midpoint values, so a kink at a node survives. A node with
/// a single element on a side takes that midpoint value; an end node reports
/// its only side in both slots. Returns `(from_left, from_right)` per node.
pub fn recover_nodal(values: &[f64]) -> Vec<(f64, f64)> {
    let n = values.len();
    (0..=n)
        .map(|j| {
            let left = if j == 0 {
                None
            } else if j == 1 {
                Some(values[0])
            } else {
                Some(values[j - 1] + (values[j - 1] - values[j - 2]) / 2.0)
            };
            let right = if j == n {
                None
            } else if j == n - 1 {
                Some(values[n - 1])
            } else {
                Some(values[j] + (values[j] - values[j + 1]) / 2.0)
            };
            let l = left.unwrap_or_else(|| right.unwrap());
            let r = right.unwrap_or(l);
            (l, r)
        })
        .collect()
}

/// Most tensile recovered fiber state over all layers and nodes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtremeFiber {
    pub layer: usize,
    pub node: usize,
    pub strain: f64,
    pub stress: f64,
}

pub fn max_tensile_fiber(model: &BeamModel, fields: &ElementFields) -> ExtremeFiber {
    let mut best = ExtremeFiber { layer: 0, node: 0, strain: f64::NEG_INFINITY, stress: 0.0 };
    for (i, layer) in fields.states.iter().enumerate() {
        let e_mod = model.section.layers[i].material.e;
        for fiber in [
            layer.iter().map(|s| s.eps_top).collect::<Vec<_>>(),
            layer.iter().map(|s| s.eps_bot).collect::<Vec<_>>(),
        ] {
            for (node, (l, r)) in recover_nodal(&fiber).into_iter().enumerate() {
                for v in [l, r] {
                    if v > best.strain {
                        best = ExtremeFiber { layer: i, node, strain: v, stress: e_mod * v };
                    }
                }
            }
        }
    }
    best
}

/// Deflection at an arbitrary point by linear interpolation between nodes.
pub fn deflection_at(model: &BeamModel, sol: &Solution, x: f64) -> Result<f64, PostError> {
    let span = model.mesh.span;
    if !x.is_finite() || x < 0.0 || x > span {
        return Err(PostError::OutOfSpan { x, span });
    }
    let l = model.mesh.element_length();
    let e = ((x / l) as usize).min(model.mesh.n_elements - 1);
    let t = (x - model.mesh.node_x(e)) / l;
    Ok((1.0 - t) * sol.w(e) + t * sol.w(e + 1))
}

/// Nodal interface forces and the equivalent shear tractions.
#[derive(Debug, Clone)]
pub struct InterfaceTraction {
    pub iface: usize,
    /// Work-conjugate nodal force of the continuity condition [N].
    pub force: Vec<f64>,
    /// Force divided by tributary interface area [Pa]; the tributary length
    /// is one element interior, half an element at the ends.
    pub traction: Vec<f64>,
}

pub fn interface_tractions(model: &BeamModel, sol: &Solution) -> Vec<InterfaceTraction> {
    let nn = model.mesh.n_nodes();
    let l = model.mesh.element_length();
    let b = model.section.width;
    (0..model.section.n_layers().saturating_sub(1))
        .map(|iface| {
            let force: Vec<f64> = (0..nn).map(|j| sol.lambda(iface, j)).collect();
            let traction = force
                .iter()
                .enumerate()
                .map(|(j, f)| {
                    let trib = if j == 0 || j == nn - 1 { l / 2.0 } else { l };
                    f / (trib * b)
                })
                .collect();
            InterfaceTraction { iface, force, traction }
        })
        .collect()
}

/// Cross-section resultants at element midpoints: the total bending moment
/// about the stack midplane, total shear, and net axial force.
#[derive(Debug, Clone)]
pub struct SectionResultants {
    pub x: Vec<f64>,
    pub moment: Vec<f64>,
    pub shear: Vec<f64>,
    pub axial: Vec<f64>,
}

pub fn section_resultants(model: &BeamModel, fields: &ElementFields) -> SectionResultants {
    let nel = model.mesh.n_elements;
    let l = fields.element_length;
    let mut out = SectionResultants {
        x: (0..nel).map(|e| (e as f64 + 0.5) * l).collect(),
        moment: vec![0.0; nel],
        shear: vec![0.0; nel],
        axial: vec![0.0; nel],
    };
    for (i, layer) in fields.states.iter().enumerate() {
        let z = model.section.centroid_offset(i);
        for (e, s) in layer.iter().enumerate() {
            out.moment[e] += s.m + s.n * z;
            out.shear[e] += s.v;
            out.axial[e] += s.n;
        }
    }
    out
}
