//! Planar scissor-linkage group (SLG) synthesis.
//!
//! All angles are degrees; lengths are millimetres. Trigonometry converts to
//! radians at the call site only.

use serde::{Deserialize, Serialize};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SlgError {
    #[error("collision angle {0}° is not positive (alpha must stay below delta_min / 2)")]
    NonPositiveCollisionAngle(f64),
    #[error("delta_min {0}° must lie in (0°, 180°)")]
    DeltaMinOutOfRange(f64),
    #[error("{name} must be positive, got {value}")]
    NonPositive { name: &'static str, value: f64 },
    #[error("{name} must be finite")]
    NotFinite { name: &'static str },
}

/// Design inputs, keyed like the parameter table of the prototype.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlgDesignInput {
    /// Minimum unfold angle.
    pub delta_min: f64,
    /// Deflection of the edge rod.
    pub alpha: f64,
    /// Hinge-hole radius.
    pub r: f64,
    /// Rod width.
    pub w: f64,
    /// Interference adjustment length.
    pub lambda: f64,
    /// Lever-arm adjustment factor. Carried through, never computed on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    /// Drive-rod length (lower bound). Carried through, never computed on.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub zeta: Option<f64>,
    /// Gap between two mated connectors.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub l_dk: Option<f64>,
}

impl SlgDesignInput {
    fn check(&self) -> Result<(), SlgError> {
        for (name, value) in [
            ("delta_min", self.delta_min),
            ("alpha", self.alpha),
            ("r", self.r),
            ("w", self.w),
            ("lambda", self.lambda),
        ] {
            if !value.is_finite() {
                return Err(SlgError::NotFinite { name });
            }
        }
        if !(self.delta_min > 0.0 && self.delta_min < 180.0) {
            return Err(SlgError::DeltaMinOutOfRange(self.delta_min));
        }
        if self.alpha <= 0.0 {
            return Err(SlgError::NonPositive {
                name: "alpha",
                value: self.alpha,
            });
        }
        for (name, value) in [("r", self.r), ("w", self.w), ("lambda", self.lambda)] {
            if value <= 0.0 {
                return Err(SlgError::NonPositive { name, value });
            }
        }
        Ok(())
    }
}

/// Reference values printed for the built prototype.
///
/// These are shipped as-is and are not expected to agree with [`synthesize`]
/// run on the same inputs (it yields `l = 28 mm`, not 31 mm).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceParameters {
    pub r: f64,
    pub w: f64,
    pub l: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub kappa: f64,
    /// The drive rod is only specified as longer than this.
    pub zeta_min: f64,
    #[serde(rename = "R")]
    pub connector_r: f64,
    #[serde(rename = "L")]
    pub slg_radius: f64,
    pub delta_min: f64,
    pub l_dk: f64,
}

pub const TABLE1: ReferenceParameters = ReferenceParameters {
    r: 3.0,
    w: 9.0,
    l: 31.0,
    alpha: 20.0,
    lambda: 7.0,
    kappa: 0.38,
    zeta_min: 31.0,
    connector_r: 16.7,
    slg_radius: 98.26,
    delta_min: 60.0,
    l_dk: 8.0,
};

impl ReferenceParameters {
    pub fn design_input(&self) -> SlgDesignInput {
        SlgDesignInput {
            delta_min: self.delta_min,
            alpha: self.alpha,
            r: self.r,
            w: self.w,
            lambda: self.lambda,
            kappa: Some(self.kappa),
            zeta: Some(self.zeta_min),
            l_dk: Some(self.l_dk),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlgDesign {
    pub input: SlgDesignInput,
    pub delta_col: f64,
    /// Rod length.
    pub l: f64,
    /// Overall SLG radius.
    #[serde(rename = "L")]
    pub slg_radius: f64,
    /// Connector radius.
    #[serde(rename = "R")]
    pub connector_r: f64,
    pub kappa: Option<f64>,
    pub zeta: Option<f64>,
    pub l_dk: Option<f64>,
}

/// Unfold angle at which the edge rods collide: `delta_min - 2 alpha`.
pub fn collision_angle(delta_min: f64, alpha: f64) -> Result<f64, SlgError> {
    let col = delta_min - 2.0 * alpha;
    if col <= 0.0 {
        return Err(SlgError::NonPositiveCollisionAngle(col));
    }
    Ok(col)
}

/// Rod length. The floor applies to the quotient only; `lambda` is added after.
pub fn rod_length(r: f64, w: f64, delta_col: f64, lambda: f64) -> Result<f64, SlgError> {
    let s = (delta_col.to_radians() / 2.0).sin();
    if s <= 0.0 {
        return Err(SlgError::NonPositiveCollisionAngle(delta_col));
    }
    Ok(((r + w / 2.0) / (2.0 * s)).floor() + lambda)
}

pub fn overall_radius(l: f64, alpha: f64) -> f64 {
    let a = alpha.to_radians();
    l * (1.0 + a.cos() + (2.0 * a).cos())
}

pub fn connector_radius(l: f64, alpha: f64, w: f64) -> f64 {
    let a = alpha.to_radians();
    l * (a.sin() + (2.0 * a).sin()) - w / 2.0
}

pub fn synthesize(input: &SlgDesignInput) -> Result<SlgDesign, SlgError> {
    input.check()?;
    let delta_col = collision_angle(input.delta_min, input.alpha)?;
    let l = rod_length(input.r, input.w, delta_col, input.lambda)?;
    Ok(SlgDesign {
        input: *input,
        delta_col,
        l,
        slg_radius: overall_radius(l, input.alpha),
        connector_r: connector_radius(l, input.alpha, input.w),
        kappa: input.kappa,
        zeta: input.zeta,
        l_dk: input.l_dk,
    })
}

/// True unfold angle from a sensor reading: `delta_s + 2 alpha + delta_e`.
pub fn sensor_to_actual(delta_s: f64, alpha: f64, delta_e: f64) -> f64 {
    delta_s + 2.0 * alpha + delta_e
}

/// Working range every module SLG must cover.
pub const REQUIRED_UNFOLD_RANGE: (f64, f64) = (60.0, 180.0);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum ValidationIssue {
    CollisionAngleNonPositive,
    CollisionAngleInconsistent,
    NonPositiveRodLength,
    NonPositiveSlgRadius,
    NonPositiveConnectorRadius,
    EmptyUnfoldRange,
    RequiredRangeUnreachable,
}

impl fmt::Display for ValidationIssue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let msg = match self {
            Self::CollisionAngleNonPositive => "collision angle non-positive",
            Self::CollisionAngleInconsistent => "collision angle differs from delta_min - 2 alpha",
            Self::NonPositiveRodLength => "non-positive rod length",
            Self::NonPositiveSlgRadius => "non-positive SLG radius",
            Self::NonPositiveConnectorRadius => "non-positive connector radius",
            Self::EmptyUnfoldRange => "unfold range [delta_min, 180] is empty",
            Self::RequiredRangeUnreachable => "required unfold range [60, 180] not reachable",
        };
        f.write_str(msg)
    }
}

/// Checks a design against its invariants. An empty list means it is sound.
pub fn validate(design: &SlgDesign) -> Vec<ValidationIssue> {
    let mut issues = Vec::new();
    if design.delta_col <= 0.0 {
        issues.push(ValidationIssue::CollisionAngleNonPositive);
    }
    let expected = design.input.delta_min - 2.0 * design.input.alpha;
    if (design.delta_col - expected).abs() > 1e-12 {
        issues.push(ValidationIssue::CollisionAngleInconsistent);
    }
    if design.l <= 0.0 {
        issues.push(ValidationIssue::NonPositiveRodLength);
    }
    if design.slg_radius <= 0.0 {
        issues.push(ValidationIssue::NonPositiveSlgRadius);
    }
    if design.connector_r <= 0.0 {
        issues.push(ValidationIssue::NonPositiveConnectorRadius);
    }
    if design.input.delta_min >= 180.0 {
        issues.push(ValidationIssue::EmptyUnfoldRange);
    }
    if design.input.delta_min > REQUIRED_UNFOLD_RANGE.0 {
        issues.push(ValidationIssue::RequiredRangeUnreachable);
    }
    issues
}

/// Synthesizes one design per `(alpha, delta_min)` pair, alpha-major.
pub fn sweep(
    base: &SlgDesignInput,
    alphas: &[f64],
    delta_mins: &[f64],
) -> Result<Vec<SlgDesign>, SlgError> {
    let mut out = Vec::with_capacity(alphas.len() * delta_mins.len());
    for &alpha in alphas {
        for &delta_min in delta_mins {
            out.push(synthesize(&SlgDesignInput {
                alpha,
                delta_min,
                ..*base
            })?);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn collision_angle_examples() {
        assert_eq!(collision_angle(60.0, 20.0).unwrap(), 20.0);
        assert_eq!(collision_angle(90.0, 0.0).unwrap(), 90.0);
        assert_eq!(collision_angle(60.0, 29.0).unwrap(), 2.0);
        assert!(matches!(
            collision_angle(60.0, 30.0),
            Err(SlgError::NonPositiveCollisionAngle(_))
        ));
    }

    #[test]
    fn table_inputs_give_28mm_rod() {
        let d = synthesize(&TABLE1.design_input()).unwrap();
        // 7.5 / (2 sin 10°) = 21.59..., floored to 21, plus lambda 7.
        assert_eq!(d.l, 28.0);
        assert_eq!(d.delta_col, 20.0);
        assert!(validate(&d).is_empty(), "{:?}", validate(&d));
    }

    #[test]
    fn radius_formulas() {
        assert!((overall_radius(31.0, 20.0) - 83.8778).abs() < 1e-3);
        assert!((connector_radius(31.0, 20.0, 9.0) - 26.0290).abs() < 1e-3);
        assert_eq!(overall_radius(31.0, 0.0), 93.0);
        assert_eq!(connector_radius(31.0, 0.0, 0.0), 0.0);
    }

    #[test]
    fn lambda_shifts_lengths_linearly() {
        let base = TABLE1.design_input();
        let a = synthesize(&base).unwrap();
        let b = synthesize(&SlgDesignInput {
            lambda: base.lambda + 1.0,
            ..base
        })
        .unwrap();
        assert_eq!(b.l - a.l, 1.0);
        let per_mm = overall_radius(1.0, base.alpha);
        assert!((b.slg_radius - a.slg_radius - per_mm).abs() < 1e-9);
    }

    #[test]
    fn sensor_correction() {
        assert_eq!(sensor_to_actual(100.0, 20.0, 5.0), 145.0);
        assert_eq!(sensor_to_actual(60.0, 0.0, 0.0), 60.0);
        assert_eq!(sensor_to_actual(20.0, 20.0, 9.0), 69.0);
    }

    #[test]
    fn validate_flags_broken_designs() {
        let good = synthesize(&TABLE1.design_input()).unwrap();
        let bad_col = SlgDesign {
            delta_col: -5.0,
            ..good
        };
        let found = validate(&bad_col);
        assert!(found.contains(&ValidationIssue::CollisionAngleNonPositive));
        assert!(found
            .iter()
            .any(|i| i.to_string() == "collision angle non-positive"));

        let zero_rod = SlgDesign { l: 0.0, ..good };
        assert!(validate(&zero_rod)
            .iter()
            .any(|i| i.to_string() == "non-positive rod length"));
    }

    #[test]
    fn rejects_bad_inputs() {
        let mut input = TABLE1.design_input();
        input.alpha = 31.0;
        assert!(synthesize(&input).is_err());
        input.alpha = 20.0;
        input.w = 0.0;
        assert!(matches!(
            synthesize(&input),
            Err(SlgError::NonPositive { name: "w", .. })
        ));
    }

    #[test]
    fn sweep_rows() {
        let rows = sweep(&TABLE1.design_input(), &[10.0, 15.0, 20.0], &[60.0]).unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].delta_col, 40.0);
    }

    mod props {
        use super::super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn collision_angle_is_linear(x in 1.0f64..179.0, a in 0.0f64..0.49) {
                let alpha = a * x;
                let col = collision_angle(x, alpha).unwrap();
                prop_assert!((col - (x - 2.0 * alpha)).abs() < 1e-12);
                prop_assert_eq!(collision_angle(x, 0.0).unwrap(), x);
            }

            #[test]
            fn sensor_offset_is_twice_alpha(ds in -10.0f64..200.0, a in 0.0f64..45.0) {
                let diff = sensor_to_actual(ds, a, 0.0) - sensor_to_actual(ds, 0.0, 0.0);
                prop_assert!((diff - 2.0 * a).abs() < 1e-9);
            }
        }
    }
}
