//! Instantaneous eigenbasis of a two-level schedule, gauge-fixed, and
//! occupation probabilities in that basis.
//!
//! First half of the protocol: `conj(⟨0|E+⟩)⟨0|E−⟩` real and non-negative and
//! `det[v−, v+] = 1`, with the remaining sign chosen for continuity. Second
//! half: `v±(t) = σr v∓(T−t)` and `E±(t) = −E∓(T−t)`.

use nalgebra::Vector2;
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::propagator::{StateVector, Trajectory};
use crate::schedules::{pauli_axis, HermitianOperator2, SymmetryAxis, TlsSchedule};

pub type Vec2 = Vector2<C64>;

/// Spectral gaps below this are treated as degeneracies.
pub const GAP_TOL: f64 = 1e-12;

/// Below this `|conj(⟨0|E+⟩)⟨0|E−⟩|` the product gauge is vacuous.
const VACUOUS_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq)]
pub struct EigenFrame {
    pub t: f64,
    pub e_minus: f64,
    pub e_plus: f64,
    pub v_minus: Vec2,
    pub v_plus: Vec2,
}

impl EigenFrame {
    pub fn gap(&self) -> f64 {
        self.e_plus - self.e_minus
    }

    /// `det[v−, v+]`.
    pub fn det(&self) -> C64 {
        self.v_minus[0] * self.v_plus[1] - self.v_plus[0] * self.v_minus[1]
    }

    /// `⟨E+|0⟩⟨0|E−⟩`.
    pub fn gauge_product(&self) -> C64 {
        self.v_plus[0].conj() * self.v_minus[0]
    }

    /// True when the product gauge condition does not fix the phase.
    pub fn is_vacuous(&self) -> bool {
        self.gauge_product().norm() <= VACUOUS_TOL
    }

    /// `max ‖H v± − E± v±‖`.
    pub fn eigen_residual(&self, h: &HermitianOperator2) -> f64 {
        let m = h.matrix();
        let r_minus = (m * self.v_minus - self.v_minus * C64::from(self.e_minus)).norm();
        let r_plus = (m * self.v_plus - self.v_plus * C64::from(self.e_plus)).norm();
        r_minus.max(r_plus)
    }

    pub fn ground_state(&self) -> StateVector {
        StateVector::from_vector2(&self.v_minus).expect("eigenvectors are unit norm")
    }

    /// `(⟨E−|ψ⟩, ⟨E+|ψ⟩)`.
    pub fn project(&self, psi: &StateVector) -> (C64, C64) {
        let a = psi.amplitudes();
        let v = Vec2::new(a[0], a[1]);
        (self.v_minus.dotc(&v), self.v_plus.dotc(&v))
    }
}

/// Eigenpairs with `v− = (b*, −a*)` for `v+ = (a, b)`, so `det[v−, v+] = 1`.
fn raw_eigenpairs(h: &HermitianOperator2, t: f64) -> Result<(f64, f64, Vec2, Vec2)> {
    let r = h.field_strength();
    if 2.0 * r < GAP_TOL {
        return Err(Error::DegenerateSpectrum { t, gap: 2.0 * r });
    }
    // Pick the better-conditioned of the two closed forms.
    let v_plus = if h.cz >= 0.0 {
        Vec2::new(C64::new(r + h.cz, 0.0), C64::new(h.cx, h.cy))
    } else {
        Vec2::new(C64::new(h.cx, -h.cy), C64::new(r - h.cz, 0.0))
    };
    let v_plus = v_plus.normalize();
    let v_minus = Vec2::new(v_plus[1].conj(), -v_plus[0].conj());
    Ok((h.c0 - r, h.c0 + r, v_minus, v_plus))
}

/// First-half gauge-fixed frame of `h`, continuous with `prev` when given.
pub fn eigenframe(h: &HermitianOperator2, t: f64, prev: Option<&EigenFrame>) -> Result<EigenFrame> {
    let (e_minus, e_plus, mut v_minus, mut v_plus) = raw_eigenpairs(h, t)?;
    // v− → e^{iα} v−, v+ → e^{−iα} v+ keeps the determinant and rotates the
    // gauge product by e^{2iα}.
    let p = v_plus[0].conj() * v_minus[0];
    let alpha = if p.norm() > VACUOUS_TOL {
        -0.5 * p.arg()
    } else if let Some(prev) = prev {
        -prev.v_minus.dotc(&v_minus).arg()
    } else if v_minus[1].norm() > VACUOUS_TOL {
        -v_minus[1].arg()
    } else {
        -v_minus[0].arg()
    };
    let ph = C64::from_polar(1.0, alpha);
    v_minus *= ph;
    v_plus *= ph.conj();
    if let Some(prev) = prev {
        if prev.v_minus.dotc(&v_minus).re < 0.0 {
            v_minus = -v_minus;
            v_plus = -v_plus;
        }
    }
    Ok(EigenFrame { t, e_minus, e_plus, v_minus, v_plus })
}

/// Second-half frame at `T − src.t` built from the first-half frame `src`.
pub fn mirror_frame(src: &EigenFrame, total_time: f64, axis: SymmetryAxis) -> EigenFrame {
    let sr = pauli_axis(axis).matrix();
    EigenFrame {
        t: total_time - src.t,
        e_minus: -src.e_plus,
        e_plus: -src.e_minus,
        v_minus: sr * src.v_plus,
        v_plus: sr * src.v_minus,
    }
}

/// Gauge-fixed frames of `sched` at each of `times` (sorted ascending).
///
/// First-half frames are computed along one continuity walk that also covers
/// the mirror images of all second-half times.
pub fn frames_on_grid(sched: &TlsSchedule, axis: SymmetryAxis, times: &[f64]) -> Result<Vec<EigenFrame>> {
    let total = sched.total_time();
    let half = 0.5 * total;
    let src_time = |t: f64| if t <= half { t } else { (total - t).max(0.0) };
    let mut walk: Vec<f64> = times.iter().map(|&t| src_time(t)).collect();
    walk.sort_by(f64::total_cmp);
    walk.dedup();
    let mut first = Vec::with_capacity(walk.len());
    let mut prev: Option<EigenFrame> = None;
    for &s in &walk {
        let f = eigenframe(&sched.hamiltonian_at(s)?, s, prev.as_ref())?;
        prev = Some(f.clone());
        first.push(f);
    }
    // Leading frames whose gauge product vanishes take their phase from the
    // first well-defined frame instead of the start-of-protocol convention.
    if let Some(k) = first.iter().position(|f| !f.is_vacuous()) {
        for j in (0..k).rev() {
            let s = walk[j];
            first[j] = eigenframe(&sched.hamiltonian_at(s)?, s, Some(&first[j + 1]))?;
        }
    }
    times
        .iter()
        .map(|&t| {
            let s = src_time(t);
            let k = walk.partition_point(|&w| w < s);
            let src = &first[k];
            Ok(if t <= half {
                EigenFrame { t, ..src.clone() }
            } else {
                EigenFrame { t, ..mirror_frame(src, total, axis) }
            })
        })
        .collect()
}

/// Ground state of `H(0)` in the fixed gauge.
pub fn initial_ground_state(sched: &TlsSchedule) -> Result<StateVector> {
    Ok(eigenframe(&sched.hamiltonian_at(0.0)?, 0.0, None)?.ground_state())
}

/// Lower-band occupation and its time derivative along a trajectory.
#[derive(Clone, Debug, Default)]
pub struct OccupationSeries {
    pub times: Vec<f64>,
    pub p_minus: Vec<f64>,
    pub dp_minus: Vec<f64>,
}

/// `P−(t) = |⟨E−(t)|ψ(t)⟩|²` at every trajectory sample, with `dP−/dt`.
///
/// A sample with a closed gap reuses the previous sample's lower eigenvector;
/// a degenerate first sample uses the initial state itself.
pub fn occupation_series(traj: &Trajectory, sched: &TlsSchedule) -> Result<OccupationSeries> {
    let mut p_minus = Vec::with_capacity(traj.len());
    let mut reference: Option<Vec2> = None;
    for (&t, psi) in traj.times.iter().zip(&traj.states) {
        let a = psi.amplitudes();
        if a.len() != 2 {
            return Err(Error::InvalidState(format!("expected a two-level state, got dimension {}", a.len())));
        }
        let v = Vec2::new(a[0], a[1]);
        let v_minus = match raw_eigenpairs(&sched.hamiltonian_at(t)?, t) {
            Ok((_, _, vm, _)) => vm,
            Err(Error::DegenerateSpectrum { .. }) => reference.unwrap_or(v),
            Err(e) => return Err(e),
        };
        reference = Some(v_minus);
        p_minus.push(v_minus.dotc(&v).norm_sqr());
    }
    let dp_minus = derivative(&traj.times, &p_minus);
    Ok(OccupationSeries { times: traj.times.clone(), p_minus, dp_minus })
}

/// Second-order finite differences on a possibly non-uniform grid: central
/// inside, one-sided three-point at the ends.
pub fn derivative(x: &[f64], y: &[f64]) -> Vec<f64> {
    let n = x.len();
    match n {
        0 | 1 => return vec![0.0; n],
        2 => {
            let d = (y[1] - y[0]) / (x[1] - x[0]);
            return vec![d, d];
        }
        _ => {}
    }
    let mut d = vec![0.0; n];
    for i in 1..n - 1 {
        let (h1, h2) = (x[i] - x[i - 1], x[i + 1] - x[i]);
        d[i] = -h2 / (h1 * (h1 + h2)) * y[i - 1]
            + (h2 - h1) / (h1 * h2) * y[i]
            + h1 / (h2 * (h1 + h2)) * y[i + 1];
    }
    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    d[0] = -(2.0 * h1 + h2) / (h1 * (h1 + h2)) * y[0] + (h1 + h2) / (h1 * h2) * y[1]
        - h1 / (h2 * (h1 + h2)) * y[2];
    let (h1, h2) = (x[n - 2] - x[n - 3], x[n - 1] - x[n - 2]);
    d[n - 1] = h2 / (h1 * (h1 + h2)) * y[n - 3] - (h1 + h2) / (h1 * h2) * y[n - 2]
        + (2.0 * h2 + h1) / (h2 * (h1 + h2)) * y[n - 1];
    d
}

/// Upper band energy `E+(t)`.
pub fn upper_energy(sched: &TlsSchedule, t: f64) -> Result<f64> {
    Ok(sched.hamiltonian_at(t)?.eigenvalues().1)
}

/// `φ_d = ∫ E+(t) dt` over `[t_f, T − t_f]`.
///
/// Composite Simpson between breakpoints; hold segments contribute their exact
/// value `τ·E+` since the Hamiltonian is frozen there.
pub fn dynamical_phase(sched: &TlsSchedule, t_f: f64) -> Result<f64> {
    let total = sched.total_time();
    let (a, b) = (t_f, total - t_f);
    if !(t_f >= 0.0) || a > b {
        return Err(Error::InvalidParameter(format!(
            "stage II needs 0 ≤ t_f ≤ T/2 (t_f = {t_f}, T = {total})"
        )));
    }
    let hold = sched.hold().filter(|h| h.duration > 0.0);
    let mut cuts = vec![a];
    if let Some(h) = hold {
        cuts.extend([h.start, h.start + h.duration].into_iter().filter(|&c| c > a && c < b));
    }
    cuts.push(b);
    let mut phase = 0.0;
    for w in cuts.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi <= lo {
            continue;
        }
        let frozen = hold.is_some_and(|h| lo >= h.start && hi <= h.start + h.duration);
        phase += if frozen {
            (hi - lo) * upper_energy(sched, 0.5 * (lo + hi))?
        } else {
            simpson(|t| upper_energy(sched, t), lo, hi, simpson_intervals(hi - lo))?
        };
    }
    Ok(phase)
}

fn simpson_intervals(len: f64) -> usize {
    let n = (200.0 * len).ceil().max(1000.0) as usize;
    n + n % 2
}

/// Composite Simpson rule with `n` (even) intervals.
pub fn simpson(f: impl Fn(f64) -> Result<f64>, a: f64, b: f64, n: usize) -> Result<f64> {
    let n = (n + n % 2).max(2);
    let h = (b - a) / n as f64;
    let mut acc = f(a)? + f(b)?;
    for k in 1..n {
        let w = if k % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + h * k as f64)?;
    }
    Ok(acc * h / 3.0)
}

/// Principal argument on `[−π, π)`.
pub fn arg(z: C64) -> f64 {
    let a = z.arg();
    if a >= std::f64::consts::PI {
        a - 2.0 * std::f64::consts::PI
    } else {
        a
    }
}

/// `φ_c = ½ arg(cosθ + i sinθ sinϑ)` with `ϑ = arg(dθ(T/2) − i dφ(T/2))`.
pub fn phi_c(sched: &TlsSchedule, axis: SymmetryAxis) -> Result<f64> {
    let d = sched.rotated_coefficients(0.5 * sched.total_time(), axis)?;
    phi_c_from(axis, d[1], d[2])
}

/// `φ_c` from the half-time rotated-frame coefficients `(dθ, dφ)`.
pub fn phi_c_from(axis: SymmetryAxis, d_theta: f64, d_phi: f64) -> Result<f64> {
    let (st, ct) = axis.theta.sin_cos();
    if st.abs() < 1e-12 {
        return Ok(0.5 * arg(C64::new(ct, 0.0)));
    }
    if d_theta.hypot(d_phi) < 1e-12 {
        return Err(Error::DegenerateInput(
            "dθ and dφ both vanish at T/2 while sinθ ≠ 0".into(),
        ));
    }
    let vartheta = arg(C64::new(d_theta, -d_phi));
    Ok(0.5 * arg(C64::new(ct, st * vartheta.sin())))
}

/// Which band a check refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Band {
    Lower,
    Upper,
}

/// Largest centred estimate of `|⟨E|∂_t E⟩|` after the accumulated geometric
/// phase has been removed from a sequence of frames.
///
/// The phase is removed by discrete parallel transport, so the residual
/// measures how far that discrete basis is from a smooth parallel-transported
/// one; it should shrink as the sampling is refined.
pub fn transport_residual(frames: &[EigenFrame], band: Band) -> f64 {
    let pick = |f: &EigenFrame| match band {
        Band::Lower => f.v_minus,
        Band::Upper => f.v_plus,
    };
    let mut w: Vec<Vec2> = Vec::with_capacity(frames.len());
    for f in frames {
        let v = pick(f);
        let next = match w.last() {
            None => v,
            Some(prev) => {
                let o = v.dotc(prev);
                v * C64::from_polar(1.0, o.arg())
            }
        };
        w.push(next);
    }
    (1..w.len().saturating_sub(1))
        .map(|k| {
            let dt = frames[k + 1].t - frames[k - 1].t;
            (w[k].dotc(&w[k + 1]) - w[k].dotc(&w[k - 1])).norm() / dt
        })
        .fold(0.0, f64::max)
}
