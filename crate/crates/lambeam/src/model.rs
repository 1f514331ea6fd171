//! Problem description: materials, layer stack, mesh, supports, and loads.
//!
//! The JSON input format mirrors [`ModelConfig`]; [`BeamModel`] is the
//! validated domain object the rest of the pipeline consumes. All quantities
//! are SI (m, Pa, N); layer indices in the input are 1-based from the top of
//! the stack, internal indices are 0-based.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("section must have at least one layer")]
    NoLayers,
    #[error("layer {layer}: Young's modulus must be positive, got {value}")]
    BadModulus { layer: usize, value: f64 },
    #[error("layer {layer}: Poisson's ratio must lie in (-1, 0.5), got {value}")]
    BadPoisson { layer: usize, value: f64 },
    #[error("layer {layer}: thickness must be positive, got {value}")]
    BadThickness { layer: usize, value: f64 },
    #[error("section width must be positive, got {0}")]
    BadWidth(f64),
    #[error("shear correction factor must lie in (0, 1], got {0}")]
    BadShearFactor(f64),
    #[error("span must be positive, got {0}")]
    BadSpan(f64),
    #[error("mesh needs at least 2 elements, got {0}")]
    TooFewElements(usize),
    #[error("support references node {node}, mesh has nodes 0..={max}")]
    SupportNodeRange { node: usize, max: usize },
    #[error("support dof \"{dof}\" requires a layer index")]
    SupportLayerMissing { dof: &'static str },
    #[error("support dof \"w\" does not take a layer index")]
    SupportLayerSpurious,
    #[error("unknown support dof \"{0}\" (expected \"w\", \"u\", or \"phi\")")]
    UnknownSupportDof(String),
    #[error("support references layer {layer}, section has layers 1..={max}")]
    SupportLayerRange { layer: usize, max: usize },
    #[error("model needs at least one w support")]
    NoDeflectionSupport,
    #[error("point load references node {node}, mesh has nodes 0..={max}")]
    LoadNodeRange { node: usize, max: usize },
    #[error("distributed load references layer {layer}, section has layers 1..={max}")]
    LoadLayerRange { layer: usize, max: usize },
    #[error("load value is not finite")]
    NonFiniteLoad,
    #[error("shear modulus needs E > 0 and -1 < nu < 0.5, got E = {e}, nu = {nu}")]
    ShearModulusDomain { e: f64, nu: f64 },
}

/// Isotropic shear modulus from the standard closure G = E / (2(1 + nu)).
pub fn shear_modulus(e: f64, nu: f64) -> Result<f64, ModelError> {
    if !(e > 0.0) || !(nu > -1.0 && nu < 0.5) {
        return Err(ModelError::ShearModulusDomain { e, nu });
    }
    Ok(e / (2.0 * (1.0 + nu)))
}

#[derive(Debug, Clone, PartialEq)]
pub struct Material {
    pub name: String,
    /// Young's modulus [Pa].
    pub e: f64,
    /// Poisson's ratio [-].
    pub nu: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub material: Material,
    /// Thickness [m].
    pub h: f64,
}

/// Layered rectangular cross-section, layer 0 on top.
#[derive(Debug, Clone, PartialEq)]
pub struct LaminateSection {
    pub layers: Vec<Layer>,
    /// Width [m].
    pub width: f64,
    /// Shear correction factor, 5/6 for rectangular sections.
    pub k_shear: f64,
}

impl LaminateSection {
    pub fn n_layers(&self) -> usize {
        self.layers.len()
    }

    /// Cross-section area of layer `i` [m^2].
    pub fn area(&self, i: usize) -> f64 {
        self.width * self.layers[i].h
    }

    /// Second moment of area of layer `i` about its own midplane [m^4].
    pub fn inertia(&self, i: usize) -> f64 {
        self.width * self.layers[i].h.powi(3) / 12.0
    }

    /// Axial stiffness E*A of layer `i` [N].
    pub fn ea(&self, i: usize) -> f64 {
        self.layers[i].material.e * self.area(i)
    }

    /// Bending stiffness E*I of layer `i` [N m^2].
    pub fn ei(&self, i: usize) -> f64 {
        self.layers[i].material.e * self.inertia(i)
    }

    /// Shear stiffness k*G*A of layer `i` [N].
    pub fn kga(&self, i: usize) -> f64 {
        let m = &self.layers[i].material;
        let g = m.e / (2.0 * (1.0 + m.nu));
        self.k_shear * g * self.area(i)
    }

    /// Total stack thickness [m].
    pub fn total_thickness(&self) -> f64 {
        self.layers.iter().map(|l| l.h).sum()
    }

    /// Offset of layer `i`'s centroid from the stack midplane, positive
    /// downward [m].
    pub fn centroid_offset(&self, i: usize) -> f64 {
        let above: f64 = self.layers[..i].iter().map(|l| l.h).sum();
        above + self.layers[i].h / 2.0 - self.total_thickness() / 2.0
    }
}

/// Uniform 1D mesh over the span; node j sits at j * span / n_elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh1D {
    pub span: f64,
    pub n_elements: usize,
}

impl Mesh1D {
    pub fn n_nodes(&self) -> usize {
        self.n_elements + 1
    }

    pub fn element_length(&self) -> f64 {
        self.span / self.n_elements as f64
    }

    pub fn node_x(&self, j: usize) -> f64 {
        j as f64 * self.span / self.n_elements as f64
    }
}

/// One constrained degree of freedom. Layer indices are 0-based here.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportKind {
    /// Transverse deflection w (shared by all layers).
    Deflection,
    /// Axial displacement u of one layer.
    Axial { layer: usize },
    /// Cross-section rotation phi of one layer.
    Rotation { layer: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Support {
    pub node: usize,
    pub kind: SupportKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointLoad {
    pub node: usize,
    /// Transverse force [N], positive in +z (downward).
    pub p: f64,
}

/// Constant line loads on one layer over the whole span [N/m].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DistributedLoad {
    pub layer: usize,
    pub fx: f64,
    pub fz: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeamModel {
    pub section: LaminateSection,
    pub mesh: Mesh1D,
    pub supports: Vec<Support>,
    pub point_loads: Vec<PointLoad>,
    pub distributed: Vec<DistributedLoad>,
}

impl BeamModel {
    /// Sum of fx and fz over all distributed entries for `layer`.
    pub fn line_load(&self, layer: usize) -> (f64, f64) {
        self.distributed
            .iter()
            .filter(|d| d.layer == layer)
            .fold((0.0, 0.0), |(fx, fz), d| (fx + d.fx, fz + d.fz))
    }
}

// ---------------------------------------------------------------------------
// JSON configuration mirror.

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerConfig {
    pub name: String,
    #[serde(rename = "E")]
    pub e: f64,
    pub nu: f64,
    pub h: f64,
}

fn default_k_shear() -> f64 {
    5.0 / 6.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectionConfig {
    pub layers: Vec<LayerConfig>,
    pub width: f64,
    #[serde(default = "default_k_shear")]
    pub k_shear: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeshConfig {
    pub span: f64,
    pub n_elements: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SupportConfig {
    pub node: usize,
    /// "w", "u", or "phi".
    pub dof: String,
    /// 1-based layer index; required for "u" and "phi".
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub layer: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointLoadConfig {
    pub node: usize,
    #[serde(rename = "P")]
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributedLoadConfig {
    /// 1-based layer index.
    pub layer: usize,
    #[serde(default)]
    pub fx: f64,
    #[serde(default)]
    pub fz: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct LoadsConfig {
    #[serde(default)]
    pub point: Vec<PointLoadConfig>,
    #[serde(default)]
    pub distributed: Vec<DistributedLoadConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelConfig {
    pub section: SectionConfig,
    pub mesh: MeshConfig,
    #[serde(default)]
    pub supports: Vec<SupportConfig>,
    #[serde(default)]
    pub loads: LoadsConfig,
}

impl ModelConfig {
    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        // Infallible for this type; the config holds only plain data.
        serde_json::to_string_pretty(self).expect("config serialization")
    }
}

/// Validates a configuration into a [`BeamModel`], reporting the first
/// violated invariant.
pub fn build_model(config: &ModelConfig) -> Result<BeamModel, ModelError> {
    let sc = &config.section;
    if sc.layers.is_empty() {
        return Err(ModelError::NoLayers);
    }
    for (idx, l) in sc.layers.iter().enumerate() {
        let layer = idx + 1;
        if !(l.e > 0.0) || !l.e.is_finite() {
            return Err(ModelError::BadModulus { layer, value: l.e });
        }
        if !(l.nu > -1.0 && l.nu < 0.5) {
            return Err(ModelError::BadPoisson { layer, value: l.nu });
        }
        if !(l.h > 0.0) || !l.h.is_finite() {
            return Err(ModelError::BadThickness { layer, value: l.h });
        }
    }
    if !(sc.width > 0.0) || !sc.width.is_finite() {
        return Err(ModelError::BadWidth(sc.width));
    }
    if !(sc.k_shear > 0.0 && sc.k_shear <= 1.0) {
        return Err(ModelError::BadShearFactor(sc.k_shear));
    }
    if !(config.mesh.span > 0.0) || !config.mesh.span.is_finite() {
        return Err(ModelError::BadSpan(config.mesh.span));
    }
    if config.mesh.n_elements < 2 {
        return Err(ModelError::TooFewElements(config.mesh.n_elements));
    }

    let n_layers = sc.layers.len();
    let max_node = config.mesh.n_elements;

    let mut supports = Vec::with_capacity(config.supports.len());
    let mut has_w = false;
    for s in &config.supports {
        if s.node > max_node {
            return Err(ModelError::SupportNodeRange { node: s.node, max: max_node });
        }
        let kind = match s.dof.as_str() {
            "w" => {
                if s.layer.is_some() {
                    return Err(ModelError::SupportLayerSpurious);
                }
                has_w = true;
                SupportKind::Deflection
            }
            "u" | "phi" => {
                let dof: &'static str = if s.dof == "u" { "u" } else { "phi" };
                let layer = s.layer.ok_or(ModelError::SupportLayerMissing { dof })?;
                if layer == 0 || layer > n_layers {
                    return Err(ModelError::SupportLayerRange { layer, max: n_layers });
                }
                if dof == "u" {
                    SupportKind::Axial { layer: layer - 1 }
                } else {
                    SupportKind::Rotation { layer: layer - 1 }
                }
            }
            other => return Err(ModelError::UnknownSupportDof(other.to_string())),
        };
        supports.push(Support { node: s.node, kind });
    }
    if !has_w {
        return Err(ModelError::NoDeflectionSupport);
    }

    let mut point_loads = Vec::with_capacity(config.loads.point.len());
    for pl in &config.loads.point {
        if pl.node > max_node {
            return Err(ModelError::LoadNodeRange { node: pl.node, max: max_node });
        }
        if !pl.p.is_finite() {
            return Err(ModelError::NonFiniteLoad);
        }
        point_loads.push(PointLoad { node: pl.node, p: pl.p });
    }
    let mut distributed = Vec::with_capacity(config.loads.distributed.len());
    for dl in &config.loads.distributed {
        if dl.layer == 0 || dl.layer > n_layers {
            return Err(ModelError::LoadLayerRange { layer: dl.layer, max: n_layers });
        }
        if !dl.fx.is_finite() || !dl.fz.is_finite() {
            return Err(ModelError::NonFiniteLoad);
        }
        distributed.push(DistributedLoad { layer: dl.layer - 1, fx: dl.fx, fz: dl.fz });
    }

    Ok(BeamModel {
        section: LaminateSection {
            layers: sc
                .layers
                .iter()
                .map(|l| Layer {
                    material: Material { name: l.name.clone(), e: l.e, nu: l.nu },
                    h: l.h,
                })
                .collect(),
            width: sc.width,
            k_shear: sc.k_shear,
        },
        mesh: Mesh1D { span: config.mesh.span, n_elements: config.mesh.n_elements },
        supports,
        point_loads,
        distributed,
    })
}

impl From<&BeamModel> for ModelConfig {
    fn from(m: &BeamModel) -> Self {
        ModelConfig {
            section: SectionConfig {
                layers: m
                    .section
                    .layers
                    .iter()
                    .map(|l| LayerConfig {
                        name: l.material.name.clone(),
                        e: l.material.e,
                        nu: l.material.nu,
                        h: l.h,
                    })
                    .collect(),
                width: m.section.width,
                k_shear: m.section.k_shear,
            },
            mesh: MeshConfig { span: m.mesh.span, n_elements: m.mesh.n_elements },
            supports: m
                .supports
                .iter()
                .map(|s| match s.kind {
                    SupportKind::Deflection => SupportConfig {
                        node: s.node,
                        dof: "w".into(),
                        layer: None,
                    },
                    SupportKind::Axial { layer } => SupportConfig {
                        node: s.node,
                        dof: "u".into(),
                        layer: Some(layer + 1),
                    },
                    SupportKind::Rotation { layer } => SupportConfig {
                        node: s.node,
                        dof: "phi".into(),
                        layer: Some(layer + 1),
                    },
                })
                .collect(),
            loads: LoadsConfig {
                point: m
                    .point_loads
                    .iter()
                    .map(|p| PointLoadConfig { node: p.node, p: p.p })
                    .collect(),
                distributed: m
                    .distributed
                    .iter()
                    .map(|d| DistributedLoadConfig { layer: d.layer + 1, fx: d.fx, fz: d.fz })
                    .collect(),
            },
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn glass() -> LayerConfig {
        LayerConfig { name: "glass".into(), e: 64.5e9, nu: 0.23, h: 5e-3 }
    }

    fn interlayer() -> LayerConfig {
        LayerConfig { name: "pvb".into(), e: 4.32432e6, nu: 0.4, h: 0.38e-3 }
    }

    fn three_layer_config() -> ModelConfig {
        ModelConfig {
            section: SectionConfig {
                layers: vec![glass(), interlayer(), glass()],
                width: 0.1,
                k_shear: 5.0 / 6.0,
            },
            mesh: MeshConfig { span: 0.8, n_elements: 60 },
            supports: vec![
                SupportConfig { node: 0, dof: "w".into(), layer: None },
                SupportConfig { node: 60, dof: "w".into(), layer: None },
                SupportConfig { node: 0, dof: "u".into(), layer: Some(2) },
            ],
            loads: LoadsConfig {
                point: vec![PointLoadConfig { node: 30, p: 50.0 }],
                distributed: vec![],
            },
        }
    }

    #[test]
    fn shear_modulus_for_glass() {
        assert_relative_eq!(
            shear_modulus(64.5e9, 0.23).unwrap(),
            26.21951219512195e9,
            max_relative = 1e-12
        );
    }

    #[test]
    fn shear_modulus_for_soft_interlayer() {
        assert_relative_eq!(
            shear_modulus(1.287e6, 0.4).unwrap(),
            459642.85714285716,
            max_relative = 1e-12
        );
    }

    #[test]
    fn shear_modulus_at_zero_poisson() {
        assert_eq!(shear_modulus(2.0, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn shear_modulus_domain_errors() {
        assert!(shear_modulus(-1.0, 0.3).is_err());
        assert!(shear_modulus(0.0, 0.3).is_err());
        assert!(shear_modulus(1.0, 0.5).is_err());
        assert!(shear_modulus(1.0, -1.0).is_err());
    }

    #[test]
    fn benchmark_model_builds() {
        let m = build_model(&three_layer_config()).unwrap();
        assert_eq!(m.mesh.n_nodes(), 61);
        assert_eq!(m.section.n_layers(), 3);
        // Section derived quantities for the top glass layer.
        assert_relative_eq!(m.section.area(0), 5.0e-4, max_relative = 1e-12);
        assert_relative_eq!(m.section.inertia(0), 1.0416666666666667e-9, max_relative = 1e-12);
        // Element length times count recovers the span.
        let l = m.mesh.element_length();
        assert_relative_eq!(l * 60.0, 0.8, max_relative = 1e-15);
    }

    #[test]
    fn single_layer_model_is_valid() {
        let mut cfg = three_layer_config();
        cfg.section.layers = vec![glass()];
        cfg.supports = vec![
            SupportConfig { node: 0, dof: "w".into(), layer: None },
            SupportConfig { node: 60, dof: "w".into(), layer: None },
            SupportConfig { node: 0, dof: "u".into(), layer: Some(1) },
        ];
        let m = build_model(&cfg).unwrap();
        assert_eq!(m.section.n_layers(), 1);
    }

    #[test]
    fn zero_thickness_rejected() {
        let mut cfg = three_layer_config();
        cfg.section.layers[1].h = 0.0;
        assert!(matches!(
            build_model(&cfg),
            Err(ModelError::BadThickness { layer: 2, .. })
        ));
    }

    #[test]
    fn validation_covers_each_invariant() {
        let base = three_layer_config;

        let mut c = base();
        c.section.layers.clear();
        assert!(matches!(build_model(&c), Err(ModelError::NoLayers)));

        let mut c = base();
        c.section.layers[0].e = -2.0;
        assert!(matches!(build_model(&c), Err(ModelError::BadModulus { layer: 1, .. })));

        let mut c = base();
        c.section.layers[2].nu = 0.5;
        assert!(matches!(build_model(&c), Err(ModelError::BadPoisson { layer: 3, .. })));

        let mut c = base();
        c.section.width = 0.0;
        assert!(matches!(build_model(&c), Err(ModelError::BadWidth(_))));

        let mut c = base();
        c.section.k_shear = 1.5;
        assert!(matches!(build_model(&c), Err(ModelError::BadShearFactor(_))));

        let mut c = base();
        c.mesh.span = -0.8;
        assert!(matches!(build_model(&c), Err(ModelError::BadSpan(_))));

        let mut c = base();
        c.mesh.n_elements = 1;
        assert!(matches!(build_model(&c), Err(ModelError::TooFewElements(1))));

        let mut c = base();
        c.supports[0].node = 61;
        assert!(matches!(build_model(&c), Err(ModelError::SupportNodeRange { node: 61, max: 60 })));

        let mut c = base();
        c.supports[2].layer = None;
        assert!(matches!(build_model(&c), Err(ModelError::SupportLayerMissing { .. })));

        let mut c = base();
        c.supports[0].layer = Some(1);
        assert!(matches!(build_model(&c), Err(ModelError::SupportLayerSpurious)));

        let mut c = base();
        c.supports[2].layer = Some(4);
        assert!(matches!(build_model(&c), Err(ModelError::SupportLayerRange { layer: 4, max: 3 })));

        let mut c = base();
        c.supports.retain(|s| s.dof != "w");
        assert!(matches!(build_model(&c), Err(ModelError::NoDeflectionSupport)));

        let mut c = base();
        c.loads.point[0].node = 100;
        assert!(matches!(build_model(&c), Err(ModelError::LoadNodeRange { node: 100, max: 60 })));

        let mut c = base();
        c.loads.point[0].p = f64::NAN;
        assert!(matches!(build_model(&c), Err(ModelError::NonFiniteLoad)));

        let mut c = base();
        c.loads.distributed.push(DistributedLoadConfig { layer: 9, fx: 0.0, fz: 1.0 });
        assert!(matches!(build_model(&c), Err(ModelError::LoadLayerRange { layer: 9, max: 3 })));
    }

    #[test]
    fn json_round_trip_preserves_model() {
        let cfg = three_layer_config();
        let text = cfg.to_json();
        let back = ModelConfig::from_json(&text).unwrap();
        assert_eq!(cfg, back);
        let m1 = build_model(&cfg).unwrap();
        let m2 = build_model(&back).unwrap();
        assert_eq!(m1, m2);
        // Model -> config -> model round trip as well.
        let cfg2 = ModelConfig::from(&m1);
        let m3 = build_model(&cfg2).unwrap();
        assert_eq!(m1, m3);
    }

    #[test]
    fn k_shear_defaults_in_json() {
        let text = r#"{
            "section": {"layers": [{"name": "g", "E": 7e10, "nu": 0.22, "h": 0.01}], "width": 0.1},
            "mesh": {"span": 1.0, "n_elements": 4},
            "supports": [{"node": 0, "dof": "w"}, {"node": 4, "dof": "w"},
                         {"node": 0, "dof": "u", "layer": 1}],
            "loads": {"point": [{"node": 2, "P": 10.0}]}
        }"#;
        let cfg = ModelConfig::from_json(text).unwrap();
        assert_relative_eq!(cfg.section.k_shear, 5.0 / 6.0);
        let m = build_model(&cfg).unwrap();
        assert_eq!(m.supports.len(), 3);
        assert_eq!(m.point_loads[0].p, 10.0);
    }

    #[test]
    fn phi_support_parses() {
        let mut cfg = three_layer_config();
        cfg.supports.push(SupportConfig { node: 60, dof: "phi".into(), layer: Some(1) });
        let m = build_model(&cfg).unwrap();
        assert_eq!(m.supports.last().unwrap().kind, SupportKind::Rotation { layer: 0 });
    }

    #[test]
    fn centroid_offsets_are_symmetric_for_symmetric_stack() {
        let m = build_model(&three_layer_config()).unwrap();
        assert_relative_eq!(m.section.centroid_offset(0), -2.69e-3, max_relative = 1e-12);
        assert_relative_eq!(m.section.centroid_offset(1), 0.0, epsilon = 1e-18);
        assert_relative_eq!(m.section.centroid_offset(2), 2.69e-3, max_relative = 1e-12);
    }
}
