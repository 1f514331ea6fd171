//! Closed-form Timoshenko deflections for the two limiting states of a
//! laminate under a central point load: all structural layers fused into one
//! monolithic section, and the same layers bending independently with equal
//! curvature. Any finite interlayer coupling must land between the two.

use thiserror::Error;

use crate::model::BeamModel;

#[derive(Debug, Error)]
pub enum BoundsError {
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("at least one structural layer is required")]
    NoLayers,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BoundCase {
    Monolithic,
    Independent,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundResult {
    pub case: BoundCase,
    /// Midspan deflection [m].
    pub deflection: f64,
    /// Effective bending stiffness [N m^2].
    pub ei_effective: f64,
    /// Effective shear stiffness [N].
    pub kga_effective: f64,
}

fn require_positive(name: &'static str, value: f64) -> Result<(), BoundsError> {
    if value > 0.0 && value.is_finite() {
        Ok(())
    } else {
        Err(BoundsError::NonPositive { name, value })
    }
}

fn deflect(case: BoundCase, p: f64, span: f64, ei: f64, kga: f64) -> BoundResult {
    // Simply supported, central point load; the shear term survives the
    // shear-rigid limit kGA -> inf as an exact zero.
    let deflection = p * span.powi(3) / (48.0 * ei) + p * span / (4.0 * kga);
    BoundResult { case, deflection, ei_effective: ei, kga_effective: kga }
}

/// All structural layers merged into one slab of their combined thickness.
pub fn monolithic_deflection(
    p: f64,
    span: f64,
    h_total: f64,
    width: f64,
    e: f64,
    g: f64,
    k: f64,
) -> Result<BoundResult, BoundsError> {
    require_positive("span", span)?;
    require_positive("h_total", h_total)?;
    require_positive("width", width)?;
    require_positive("E", e)?;
    require_positive("k", k)?;
    if !(g > 0.0) {
        return Err(BoundsError::NonPositive { name: "G", value: g });
    }
    let area = width * h_total;
    let inertia = width * h_total.powi(3) / 12.0;
    Ok(deflect(BoundCase::Monolithic, p, span, e * inertia, k * g * area))
}

/// Layers `(h, E, G)` deflecting together but without any interface shear
/// transfer: stiffnesses add, each layer bending about its own axis.
pub fn independent_layers_deflection(
    p: f64,
    span: f64,
    layers: &[(f64, f64, f64)],
    width: f64,
    k: f64,
) -> Result<BoundResult, BoundsError> {
    require_positive("span", span)?;
    require_positive("width", width)?;
    require_positive("k", k)?;
    if layers.is_empty() {
        return Err(BoundsError::NoLayers);
    }
    let mut ei = 0.0;
    let mut kga = 0.0;
    for &(h, e, g) in layers {
        require_positive("h", h)?;
        require_positive("E", e)?;
        if !(g > 0.0) {
            return Err(BoundsError::NonPositive { name: "G", value: g });
        }
        ei += e * width * h.powi(3) / 12.0;
        kga += k * g * width * h;
    }
    Ok(deflect(BoundCase::Independent, p, span, ei, kga))
}

/// Both bounds for a model, computed on its structural layers only. A layer
/// counts as structural when its modulus is within two orders of magnitude of
/// the stiffest one; compliant interlayers contribute nothing to either
/// limiting case. The merged slab takes the stiffest layer's material, which
/// covers the usual case of identical face layers.
pub fn structural_bounds(
    model: &BeamModel,
    p: f64,
) -> Result<(BoundResult, BoundResult), BoundsError> {
    let section = &model.section;
    let e_max = section
        .layers
        .iter()
        .map(|l| l.material.e)
        .fold(0.0, f64::max);
    let shear = |e: f64, nu: f64| e / (2.0 * (1.0 + nu));

    let mut h_total = 0.0;
    let mut stiffest = (0.0, 0.0);
    let mut layers = Vec::new();
    for l in &section.layers {
        if l.material.e >= 1e-2 * e_max {
            let g = shear(l.material.e, l.material.nu);
            h_total += l.h;
            if l.material.e > stiffest.0 {
                stiffest = (l.material.e, g);
            }
            layers.push((l.h, l.material.e, g));
        }
    }

    let span = model.mesh.span;
    let mono = monolithic_deflection(
        p,
        span,
        h_total,
        section.width,
        stiffest.0,
        stiffest.1,
        section.k_shear,
    )?;
    let indep = independent_layers_deflection(p, span, &layers, section.width, section.k_shear)?;
    Ok((mono, indep))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const GLASS_G: f64 = 64.5e9 / (2.0 * 1.23);

    #[test]
    fn benchmark_bounds_match_the_closed_forms() {
        let model = crate::bench::benchmark_model(60).unwrap();
        let (mono, indep) = structural_bounds(&model, 50.0).unwrap();
        assert_relative_eq!(mono.deflection, 0.992706e-3, max_relative = 1e-5);
        assert_relative_eq!(indep.deflection, 3.969450e-3, max_relative = 1e-5);
        assert!(mono.deflection < indep.deflection);
        assert_eq!(mono.case, BoundCase::Monolithic);
        assert_eq!(indep.case, BoundCase::Independent);
    }

    #[test]
    fn shear_rigid_limit_is_pure_bending() {
        let r = monolithic_deflection(50.0, 0.8, 0.01, 0.1, 64.5e9, f64::INFINITY, 5.0 / 6.0)
            .unwrap();
        assert_eq!(r.deflection, 50.0 * 0.8f64.powi(3) / (48.0 * r.ei_effective));
        assert_eq!(r.kga_effective, f64::INFINITY);
    }

    #[test]
    fn zero_load_deflects_nothing() {
        let r = monolithic_deflection(0.0, 0.8, 0.01, 0.1, 64.5e9, GLASS_G, 5.0 / 6.0).unwrap();
        assert_eq!(r.deflection, 0.0);
    }

    #[test]
    fn a_single_layer_is_its_own_monolith() {
        let mono =
            monolithic_deflection(50.0, 0.8, 0.005, 0.1, 64.5e9, GLASS_G, 5.0 / 6.0).unwrap();
        let indep = independent_layers_deflection(
            50.0,
            0.8,
            &[(0.005, 64.5e9, GLASS_G)],
            0.1,
            5.0 / 6.0,
        )
        .unwrap();
        assert_relative_eq!(mono.deflection, indep.deflection, max_relative = 1e-15);
    }

    #[test]
    fn doubling_the_layer_count_halves_the_deflection() {
        let one = independent_layers_deflection(
            50.0,
            0.8,
            &[(0.005, 64.5e9, GLASS_G)],
            0.1,
            5.0 / 6.0,
        )
        .unwrap();
        let two = independent_layers_deflection(
            50.0,
            0.8,
            &[(0.005, 64.5e9, GLASS_G); 2],
            0.1,
            5.0 / 6.0,
        )
        .unwrap();
        assert_relative_eq!(two.deflection, one.deflection / 2.0, max_relative = 1e-15);
    }

    #[test]
    fn nonpositive_inputs_are_rejected() {
        assert!(matches!(
            monolithic_deflection(50.0, 0.8, 0.0, 0.1, 64.5e9, GLASS_G, 5.0 / 6.0),
            Err(BoundsError::NonPositive { name: "h_total", .. })
        ));
        assert!(matches!(
            monolithic_deflection(50.0, -0.8, 0.01, 0.1, 64.5e9, GLASS_G, 5.0 / 6.0),
            Err(BoundsError::NonPositive { name: "span", .. })
        ));
        assert!(matches!(
            monolithic_deflection(50.0, 0.8, 0.01, 0.1, 64.5e9, 0.0, 5.0 / 6.0),
            Err(BoundsError::NonPositive { name: "G", .. })
        ));
        assert!(matches!(
            independent_layers_deflection(50.0, 0.8, &[], 0.1, 5.0 / 6.0),
            Err(BoundsError::NoLayers)
        ));
        assert!(matches!(
            independent_layers_deflection(50.0, 0.8, &[(0.005, -1.0, GLASS_G)], 0.1, 5.0 / 6.0),
            Err(BoundsError::NonPositive { name: "E", .. })
        ));
    }
}
