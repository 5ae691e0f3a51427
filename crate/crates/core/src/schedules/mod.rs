//! Time-dependent two-level Hamiltonian schedules.
//!
//! A schedule is a closed-form coefficient profile evaluated on demand, tagged
//! with the Pauli frame its coefficients live in, plus an optional centred
//! hold segment. During a hold the coefficients stay frozen at the value they
//! had when the hold began; after it the profile resumes shifted by the hold
//! duration.

mod config;
mod pauli;

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

pub use config::{
    CustomParams, Example1Params, Example2Params, FrameKind, ScheduleConfig, ScheduleParams,
};
pub use pauli::{
    pauli_axis, rotated_frame, sigma_x, sigma_y, sigma_z, HermitianOperator2, Mat2, SymmetryAxis,
};

use crate::error::{Error, Result};

/// Frame of the four coefficient functions of a schedule.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Frame {
    /// `(d0, dx, dy, dz)`.
    Cartesian,
    /// `(d0, dθ, dφ, dr)` relative to the given axis.
    Rotated(SymmetryAxis),
}

/// A closed-form set of four real coefficient functions on `[0, duration]`.
pub trait CoefficientProfile: Send + Sync + fmt::Debug {
    fn duration(&self) -> f64;

    /// Coefficients at profile time `t`; callers guarantee `0 ≤ t ≤ duration`.
    fn eval(&self, t: f64) -> [f64; 4];
}

/// `x^p` by repeated squaring.
pub fn pow_by_squaring(mut base: f64, mut p: u32) -> f64 {
    let mut acc = 1.0;
    while p > 0 {
        if p & 1 == 1 {
            acc *= base;
        }
        base *= base;
        p >>= 1;
    }
    acc
}

/// Two-sharp-minima drive: `d0 = J0 cos s`, `dx,y = Jx,y sin² s`, `dz = Jz cos^p s`
/// with `s = πt/T`.
#[derive(Clone, Debug, PartialEq)]
pub struct SharpMinimaProfile {
    pub j0: f64,
    pub jx: f64,
    pub jy: f64,
    pub jz: f64,
    pub power: u32,
    pub period: f64,
}

impl CoefficientProfile for SharpMinimaProfile {
    fn duration(&self) -> f64 {
        self.period
    }

    fn eval(&self, t: f64) -> [f64; 4] {
        let (s, c) = (PI * t / self.period).sin_cos();
        let s2 = s * s;
        [
            self.j0 * c,
            self.jx * s2,
            self.jy * s2,
            self.jz * pow_by_squaring(c, self.power),
        ]
    }
}

/// Flat-band sweep in the rotated frame: `dθ = Jθ sin s`, `dφ = Jφ sin s`,
/// `dr = Jr cos s` with `s = πt/T0`, `d0 = 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct FlatBandProfile {
    pub j_theta: f64,
    pub j_r: f64,
    pub j_phi: f64,
    pub t0: f64,
}

impl CoefficientProfile for FlatBandProfile {
    fn duration(&self) -> f64 {
        self.t0
    }

    fn eval(&self, t: f64) -> [f64; 4] {
        let (s, c) = (PI * t / self.t0).sin_cos();
        [0.0, self.j_theta * s, self.j_phi * s, self.j_r * c]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConstantProfile {
    pub duration: f64,
    pub coeffs: [f64; 4],
}

impl CoefficientProfile for ConstantProfile {
    fn duration(&self) -> f64 {
        self.duration
    }

    fn eval(&self, _t: f64) -> [f64; 4] {
        self.coeffs
    }
}

/// Piecewise-linear interpolation of coefficient samples.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinearProfile {
    times: Vec<f64>,
    values: Vec<[f64; 4]>,
}

impl PiecewiseLinearProfile {
    /// Sample times must start at 0, increase strictly and be finite.
    pub fn new(times: Vec<f64>, values: Vec<[f64; 4]>) -> Result<Self> {
        if times.len() < 2 || times.len() != values.len() {
            return Err(Error::InvalidParameter(format!(
                "piecewise-linear profile needs ≥ 2 samples and matching lengths (got {} times, {} values)",
                times.len(),
                values.len()
            )));
        }
        if times[0] != 0.0 {
            return Err(Error::InvalidParameter("first sample time must be 0".into()));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) || !times.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidParameter(
                "sample times must be finite and strictly increasing".into(),
            ));
        }
        if values.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("coefficient samples must be finite".into()));
        }
        Ok(Self { times, values })
    }
}

impl CoefficientProfile for PiecewiseLinearProfile {
    fn duration(&self) -> f64 {
        *self.times.last().unwrap()
    }

    fn eval(&self, t: f64) -> [f64; 4] {
        let k = self.times.partition_point(|&x| x <= t).clamp(1, self.times.len() - 1);
        let (t0, t1) = (self.times[k - 1], self.times[k]);
        let w = ((t - t0) / (t1 - t0)).clamp(0.0, 1.0);
        let (a, b) = (&self.values[k - 1], &self.values[k]);
        [0, 1, 2, 3].map(|i| a[i] + w * (b[i] - a[i]))
    }
}

/// A hold segment `[start, start + duration]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Hold {
    pub start: f64,
    pub duration: f64,
}

/// Time-dependent two-level Hamiltonian on `[0, T]` in units of `J`.
#[derive(Clone, Debug)]
pub struct TlsSchedule {
    frame: Frame,
    profile: Arc<dyn CoefficientProfile>,
    hold: Option<Hold>,
}

impl TlsSchedule {
    pub fn new(frame: Frame, profile: impl CoefficientProfile + 'static) -> Result<Self> {
        Self::from_arc(frame, Arc::new(profile))
    }

    pub fn from_arc(frame: Frame, profile: Arc<dyn CoefficientProfile>) -> Result<Self> {
        let d = profile.duration();
        if !(d.is_finite() && d > 0.0) {
            return Err(Error::InvalidParameter(format!("profile duration must be > 0, got {d}")));
        }
        Ok(Self { frame, profile, hold: None })
    }

    /// Inserts a hold of length `tau` centred in the protocol.
    pub fn with_hold(mut self, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau >= 0.0) {
            return Err(Error::InvalidParameter(format!("hold duration must be ≥ 0, got {tau}")));
        }
        self.hold = Some(Hold { start: 0.5 * self.profile.duration(), duration: tau });
        Ok(self)
    }

    /// A constant Hamiltonian over `[0, duration]`, Cartesian frame.
    pub fn constant(h: HermitianOperator2, duration: f64) -> Result<Self> {
        Self::new(
            Frame::Cartesian,
            ConstantProfile { duration, coeffs: [h.c0, h.cx, h.cy, h.cz] },
        )
    }

    pub fn frame(&self) -> Frame {
        self.frame
    }

    pub fn hold(&self) -> Option<Hold> {
        self.hold
    }

    pub fn profile(&self) -> &Arc<dyn CoefficientProfile> {
        &self.profile
    }

    /// Total protocol time, hold included.
    pub fn total_time(&self) -> f64 {
        self.profile.duration() + self.hold.map_or(0.0, |h| h.duration)
    }

    /// Times at which the coefficients may have kinks: `0`, hold edges, `T`.
    pub fn breakpoints(&self) -> Vec<f64> {
        let mut pts = vec![0.0];
        if let Some(h) = self.hold.filter(|h| h.duration > 0.0) {
            pts.push(h.start);
            pts.push(h.start + h.duration);
        }
        pts.push(self.total_time());
        pts
    }

    fn check_domain(&self, t: f64) -> Result<f64> {
        let total = self.total_time();
        let slack = 1e-12 * total.max(1.0);
        if !(t >= -slack && t <= total + slack) {
            return Err(Error::OutOfDomain { t, total });
        }
        Ok(t.clamp(0.0, total))
    }

    fn profile_time(&self, t: f64) -> f64 {
        match self.hold {
            None => t,
            Some(h) if t <= h.start => t,
            Some(h) if t < h.start + h.duration => h.start,
            Some(h) => (t - h.duration).min(self.profile.duration()),
        }
    }

    /// Coefficients in the schedule's own frame.
    pub fn coefficients(&self, t: f64) -> Result<[f64; 4]> {
        let t = self.check_domain(t)?;
        Ok(self.profile.eval(self.profile_time(t)))
    }

    /// Cartesian Pauli coefficients of `H(t)`.
    pub fn hamiltonian_at(&self, t: f64) -> Result<HermitianOperator2> {
        let d = self.coefficients(t)?;
        Ok(match self.frame {
            Frame::Cartesian => HermitianOperator2::new(d[0], d[1], d[2], d[3]),
            Frame::Rotated(axis) => axis.to_cartesian(d),
        })
    }

    /// `(d0, dθ, dφ, dr)` of `H(t)` relative to `axis`.
    pub fn rotated_coefficients(&self, t: f64, axis: SymmetryAxis) -> Result<[f64; 4]> {
        Ok(axis.to_rotated(&self.hamiltonian_at(t)?))
    }
}

/// Sharp-minima schedule with `cos²¹` on dz, no hold.
pub fn example1_schedule(j0: f64, jx: f64, jy: f64, jz: f64, total_time: f64) -> Result<TlsSchedule> {
    if !(total_time > 0.0) {
        return Err(Error::InvalidParameter(format!("T must be > 0, got {total_time}")));
    }
    TlsSchedule::new(
        Frame::Cartesian,
        SharpMinimaProfile { j0, jx, jy, jz, power: 21, period: total_time },
    )
}

/// Flat-band rotated-frame sweep of duration `t0` with a centred hold `tau`.
pub fn example2_schedule(
    j_theta: f64,
    j_r: f64,
    j_phi: f64,
    t0: f64,
    tau: f64,
    axis: SymmetryAxis,
) -> Result<TlsSchedule> {
    if !(t0 > 0.0) {
        return Err(Error::InvalidParameter(format!("T0 must be > 0, got {t0}")));
    }
    TlsSchedule::new(Frame::Rotated(axis), FlatBandProfile { j_theta, j_r, j_phi, t0 })?
        .with_hold(tau)
}

/// Maximum Frobenius residual of `H(t) + σ_r H(T−t) σ_r` over a uniform grid.
pub fn check_symmetry(sched: &TlsSchedule, axis: SymmetryAxis, n_samples: usize) -> f64 {
    let n = n_samples.max(2);
    let total = sched.total_time();
    let sr = pauli_axis(axis).matrix();
    (0..n)
        .map(|k| {
            let t = total * k as f64 / (n - 1) as f64;
            let a = sched.hamiltonian_at(t).expect("grid inside domain").matrix();
            let b = sched.hamiltonian_at(total - t).expect("grid inside domain").matrix();
            (a + sr * b * sr).norm()
        })
        .fold(0.0, f64::max)
}
