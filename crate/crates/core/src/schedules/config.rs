//! JSON description of a schedule:
//! `{"type": "example1"|"example2"|"custom", "params": {...}, "T": .., "tau": ..}`.
//!
//! `T` is the duration of the driving profile and `tau` a centred hold, so the
//! protocol lasts `T + tau`.

use std::f64::consts::{FRAC_PI_3, FRAC_PI_6, FRAC_1_SQRT_2};

use serde::{Deserialize, Serialize};

use super::{
    example1_schedule, example2_schedule, Frame, PiecewiseLinearProfile, SymmetryAxis,
    TlsSchedule,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScheduleConfig {
    #[serde(flatten)]
    pub params: ScheduleParams,
    #[serde(rename = "T")]
    pub total_time: f64,
    #[serde(default)]
    pub tau: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", content = "params", rename_all = "lowercase")]
pub enum ScheduleParams {
    Example1(Example1Params),
    Example2(Example2Params),
    Custom(CustomParams),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Example1Params {
    #[serde(rename = "J0")]
    pub j0: f64,
    #[serde(rename = "Jx")]
    pub jx: f64,
    #[serde(rename = "Jy")]
    pub jy: f64,
    #[serde(rename = "Jz")]
    pub jz: f64,
}

impl Default for Example1Params {
    fn default() -> Self {
        Self { j0: 1.0, jx: 1.5, jy: 0.5, jz: 2.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Example2Params {
    #[serde(rename = "J_theta")]
    pub j_theta: f64,
    #[serde(rename = "J_r")]
    pub j_r: f64,
    #[serde(rename = "J_phi")]
    pub j_phi: f64,
    pub theta: f64,
    pub phi: f64,
}

impl Default for Example2Params {
    fn default() -> Self {
        Self {
            j_theta: FRAC_1_SQRT_2,
            j_r: 1.0,
            j_phi: -FRAC_1_SQRT_2,
            theta: FRAC_PI_3,
            phi: FRAC_PI_6,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FrameKind {
    Cartesian,
    Rotated,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Interpolation {
    #[serde(rename = "piecewise-linear")]
    PiecewiseLinear,
}

/// Sampled coefficients `(d0, d1, d2, d3)` in the declared frame.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CustomParams {
    pub frame: FrameKind,
    #[serde(default)]
    pub theta: f64,
    #[serde(default)]
    pub phi: f64,
    pub times: Vec<f64>,
    pub coeffs: Vec<[f64; 4]>,
    pub interpolation: Interpolation,
}

impl ScheduleConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// The symmetry axis this schedule is meant to respect.
    pub fn axis(&self) -> SymmetryAxis {
        match &self.params {
            ScheduleParams::Example1(_) => SymmetryAxis::Z,
            ScheduleParams::Example2(p) => SymmetryAxis::new(p.theta, p.phi),
            ScheduleParams::Custom(p) => SymmetryAxis::new(p.theta, p.phi),
        }
    }

    pub fn build(&self) -> Result<(TlsSchedule, SymmetryAxis)> {
        let axis = self.axis();
        let sched = match &self.params {
            ScheduleParams::Example1(p) => {
                hold_if_positive(example1_schedule(p.j0, p.jx, p.jy, p.jz, self.total_time)?, self.tau)?
            }
            ScheduleParams::Example2(p) => {
                example2_schedule(p.j_theta, p.j_r, p.j_phi, self.total_time, self.tau, axis)?
            }
            ScheduleParams::Custom(p) => {
                let last = p.times.last().copied().unwrap_or(f64::NAN);
                if (last - self.total_time).abs() > 1e-12 * self.total_time.abs().max(1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "custom samples end at {last} but T = {}",
                        self.total_time
                    )));
                }
                let frame = match p.frame {
                    FrameKind::Cartesian => Frame::Cartesian,
                    FrameKind::Rotated => Frame::Rotated(axis),
                };
                let profile = PiecewiseLinearProfile::new(p.times.clone(), p.coeffs.clone())?;
                hold_if_positive(TlsSchedule::new(frame, profile)?, self.tau)?
            }
        };
        Ok((sched, axis))
    }
}

/// Example II always carries a hold (possibly empty); other schedules only
/// when one is requested.
fn hold_if_positive(sched: TlsSchedule, tau: f64) -> Result<TlsSchedule> {
    if tau == 0.0 {
        Ok(sched)
    } else {
        sched.with_hold(tau)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::{check_symmetry, HermitianOperator2};

    #[test]
    fn parses_example1_with_defaults() {
        let cfg = ScheduleConfig::from_json(r#"{"type":"example1","params":{},"T":3.0}"#).unwrap();
        assert_eq!(cfg.params, ScheduleParams::Example1(Example1Params::default()));
        let (s, axis) = cfg.build().unwrap();
        assert_eq!(axis, SymmetryAxis::Z);
        assert_eq!(s.hamiltonian_at(0.0).unwrap(), HermitianOperator2::new(1.0, 0.0, 0.0, 2.0));
        assert_eq!(s.total_time(), 3.0);
        assert!(s.hold().is_none());
    }

    #[test]
    fn parses_example2_overrides() {
        let cfg = ScheduleConfig::from_json(
            r#"{"type":"example2","params":{"J_r":0.5},"T":1.26,"tau":2.0}"#,
        )
        .unwrap();
        let (s, axis) = cfg.build().unwrap();
        assert!((s.total_time() - 3.26).abs() < 1e-15);
        assert_eq!(s.coefficients(0.0).unwrap()[3], 0.5);
        assert!(check_symmetry(&s, axis, 101) < 1e-12);
    }

    #[test]
    fn custom_piecewise_linear() {
        let text = r#"{
            "type": "custom",
            "params": {
                "frame": "cartesian",
                "times": [0.0, 1.0, 2.0],
                "coeffs": [[1,0,0,1],[0,1,0,0],[-1,0,0,-1]],
                "interpolation": "piecewise-linear"
            },
            "T": 2.0
        }"#;
        let cfg = ScheduleConfig::from_json(text).unwrap();
        let (s, axis) = cfg.build().unwrap();
        assert_eq!(s.hamiltonian_at(0.5).unwrap(), HermitianOperator2::new(0.5, 0.5, 0.0, 0.5));
        assert!(check_symmetry(&s, axis, 21) < 1e-12);
    }

    #[test]
    fn custom_rejects_mismatched_duration_and_unknown_rule() {
        let bad_t = r#"{"type":"custom","params":{"frame":"cartesian","times":[0,1],
            "coeffs":[[0,0,0,1],[0,0,0,1]],"interpolation":"piecewise-linear"},"T":2.0}"#;
        assert!(ScheduleConfig::from_json(bad_t).unwrap().build().is_err());
        let bad_rule = r#"{"type":"custom","params":{"frame":"cartesian","times":[0,1],
            "coeffs":[[0,0,0,1],[0,0,0,1]],"interpolation":"cubic"},"T":1.0}"#;
        assert!(ScheduleConfig::from_json(bad_rule).is_err());
    }

    #[test]
    fn serializes_round_trip() {
        let cfg = ScheduleConfig {
            params: ScheduleParams::Example2(Example2Params::default()),
            total_time: 1.26,
            tau: 0.5,
        };
        let text = serde_json::to_string(&cfg).unwrap();
        assert!(text.contains(r#""type":"example2""#));
        assert_eq!(ScheduleConfig::from_json(&text).unwrap(), cfg);
    }
}
