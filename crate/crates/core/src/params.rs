//! Arm parameter record and its flat key-value file format.
//!
//! The file is TOML with one scalar per key. Either `backbone_second_moment_m4`
//! or `backbone_diameter_m` must be present; a diameter is converted to the
//! second moment of a solid round section.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default parameter file shipped with the crate. These are plausible desk-scale
/// values for a NiTi backbone with polymer tendons, not measured constants.
pub const DEFAULT_PARAMS_TOML: &str = include_str!("../../../params/default.toml");

/// Geometric and material constants of a single constant-curvature segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArmParameters {
    /// Backbone length `L` (m).
    pub backbone_length: f64,
    /// Pitch-circle radius `r` of the tendon routing (m).
    pub pitch_radius: f64,
    /// Angular spacing `β` between consecutive tendons (rad).
    pub tendon_division_angle: f64,
    pub tendon_count: usize,
    /// Young's modulus of the backbone `E_p` (Pa).
    pub backbone_youngs_modulus: f64,
    /// Second moment of area of the backbone `I_p` (m⁴).
    pub backbone_second_moment: f64,
    /// Young's modulus of the tendons `E_T` (Pa).
    pub tendon_youngs_modulus: f64,
    /// Tendon cross-section `A` (m²).
    pub tendon_cross_section: f64,
}

/// Non-fatal findings from [`ArmParameters::validate`].
#[derive(Debug, Clone, PartialEq)]
pub enum ParamWarning {
    /// `β` differs from `2π / n`, so the tendons are not evenly spaced.
    UnevenTendonSpacing { division_angle: f64, expected: f64 },
}

impl fmt::Display for ParamWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ParamWarning::UnevenTendonSpacing {
                division_angle,
                expected,
            } => write!(
                f,
                "tendon_division_angle {division_angle:.6} rad differs from 2*pi/n = {expected:.6} rad"
            ),
        }
    }
}

#[derive(Debug, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
struct ParamDocument {
    backbone_length_m: Option<f64>,
    pitch_radius_m: Option<f64>,
    tendon_division_angle_rad: Option<f64>,
    tendon_count: Option<i64>,
    backbone_youngs_modulus_pa: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    backbone_diameter_m: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    backbone_second_moment_m4: Option<f64>,
    tendon_youngs_modulus_pa: Option<f64>,
    tendon_cross_section_m2: Option<f64>,
}

fn required<T>(value: Option<T>, field: &'static str) -> Result<T> {
    value.ok_or(Error::MissingField(field))
}

/// Second moment of area of a solid circular section, `π d⁴ / 64`.
pub fn solid_round_second_moment(diameter: f64) -> f64 {
    PI * diameter.powi(4) / 64.0
}

impl Default for ArmParameters {
    fn default() -> Self {
        Self::from_toml_str(DEFAULT_PARAMS_TOML)
            .expect("bundled default parameters are valid")
            .0
    }
}

impl ArmParameters {
    /// Parses and validates a parameter document, returning any warnings alongside.
    pub fn from_toml_str(text: &str) -> Result<(Self, Vec<ParamWarning>)> {
        let doc: ParamDocument = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;

        let second_moment = match (doc.backbone_second_moment_m4, doc.backbone_diameter_m) {
            (Some(i), None) => i,
            (None, Some(d)) => {
                positive("backbone_diameter", d)?;
                solid_round_second_moment(d)
            }
            (Some(_), Some(_)) => {
                return Err(Error::InvalidParameter {
                    field: "backbone_second_moment_m4",
                    reason: "give either backbone_diameter_m or backbone_second_moment_m4, not both"
                        .into(),
                })
            }
            (None, None) => return Err(Error::MissingField("backbone_second_moment_m4")),
        };

        let count = required(doc.tendon_count, "tendon_count")?;
        if count < 3 {
            return Err(Error::InvalidParameter {
                field: "tendon_count",
                reason: format!("at least 3 tendons are needed, got {count}"),
            });
        }

        let params = ArmParameters {
            backbone_length: required(doc.backbone_length_m, "backbone_length_m")?,
            pitch_radius: required(doc.pitch_radius_m, "pitch_radius_m")?,
            tendon_division_angle: required(doc.tendon_division_angle_rad, "tendon_division_angle_rad")?,
            tendon_count: count as usize,
            backbone_youngs_modulus: required(doc.backbone_youngs_modulus_pa, "backbone_youngs_modulus_pa")?,
            backbone_second_moment: second_moment,
            tendon_youngs_modulus: required(doc.tendon_youngs_modulus_pa, "tendon_youngs_modulus_pa")?,
            tendon_cross_section: required(doc.tendon_cross_section_m2, "tendon_cross_section_m2")?,
        };
        let warnings = params.validate()?;
        for w in &warnings {
            log::warn!("{w}");
        }
        Ok((params, warnings))
    }

    pub fn from_file(path: impl AsRef<Path>) -> Result<(Self, Vec<ParamWarning>)> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    /// Serializes to the flat key-value format, always writing the second moment.
    pub fn to_toml_string(&self) -> String {
        let doc = ParamDocument {
            backbone_length_m: Some(self.backbone_length),
            pitch_radius_m: Some(self.pitch_radius),
            tendon_division_angle_rad: Some(self.tendon_division_angle),
            tendon_count: Some(self.tendon_count as i64),
            backbone_youngs_modulus_pa: Some(self.backbone_youngs_modulus),
            backbone_diameter_m: None,
            backbone_second_moment_m4: Some(self.backbone_second_moment),
            tendon_youngs_modulus_pa: Some(self.tendon_youngs_modulus),
            tendon_cross_section_m2: Some(self.tendon_cross_section),
        };
        toml::to_string(&doc).expect("flat document always serializes")
    }

    /// Checks the invariants. Hard violations are errors; uneven tendon spacing is a warning.
    pub fn validate(&self) -> Result<Vec<ParamWarning>> {
        positive("backbone_length", self.backbone_length)?;
        positive("pitch_radius", self.pitch_radius)?;
        positive("tendon_division_angle", self.tendon_division_angle)?;
        positive("backbone_youngs_modulus", self.backbone_youngs_modulus)?;
        positive("backbone_second_moment", self.backbone_second_moment)?;
        positive("tendon_youngs_modulus", self.tendon_youngs_modulus)?;
        positive("tendon_cross_section", self.tendon_cross_section)?;
        if self.tendon_count < 3 {
            return Err(Error::InvalidParameter {
                field: "tendon_count",
                reason: format!("at least 3 tendons are needed, got {}", self.tendon_count),
            });
        }

        let mut warnings = Vec::new();
        let expected = 2.0 * PI / self.tendon_count as f64;
        if (self.tendon_division_angle - expected).abs() > 1e-9 {
            warnings.push(ParamWarning::UnevenTendonSpacing {
                division_angle: self.tendon_division_angle,
                expected,
            });
        }
        Ok(warnings)
    }

    /// Bending rigidity `E_p I_p` (N·m²).
    pub fn bending_rigidity(&self) -> f64 {
        self.backbone_youngs_modulus * self.backbone_second_moment
    }

    /// Axial stiffness of one tendon over the segment, `E_T A / L` (N/m).
    pub fn tendon_axial_stiffness(&self) -> f64 {
        self.tendon_youngs_modulus * self.tendon_cross_section / self.backbone_length
    }

    /// `(cos iβ, sin iβ)` for each tendon. Values within rounding of 0 are snapped
    /// so that opposite tendons of an even layout cancel exactly.
    pub fn tendon_phases(&self) -> Vec<(f64, f64)> {
        let snap = |v: f64| if v.abs() < 1e-15 { 0.0 } else { v };
        (0..self.tendon_count)
            .map(|i| {
                let (s, c) = (i as f64 * self.tendon_division_angle).sin_cos();
                (snap(c), snap(s))
            })
            .collect()
    }
}

fn positive(field: &'static str, value: f64) -> Result<()> {
    if !value.is_finite() {
        return Err(Error::NonFinite(field));
    }
    if value <= 0.0 {
        return Err(Error::NonPositive { field, value });
    }
    Ok(())
}
