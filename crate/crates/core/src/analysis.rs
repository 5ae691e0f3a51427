//! Three-stage transfer-matrix description of two-passage interference.
//!
//! Stage I runs from `t_i = 0` to the end `t_f` of the first transition,
//! stage II is adiabatic over `(t_f, T − t_f)`, stage III mirrors stage I.
//! The first stage is summarised by `R = ⟨E−(t_f)|ψ(t_f)⟩` and
//! `T = ⟨E+(t_f)|ψ(t_f)⟩`; the symmetry fixes the rest.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use num_complex::Complex64 as C64;

use crate::adiabatic::{
    arg, dynamical_phase, frames_on_grid, occupation_series, phi_c, EigenFrame, OccupationSeries,
};
use crate::error::{Error, Result};
use crate::propagator::{
    default_tls_steps, evolve_on_grid, piecewise_uniform_grid, propagator_on_grid, uniform_grid,
    Sampling, StateVector,
};
use crate::schedules::{check_symmetry, pauli_axis, sigma_x, Mat2, SymmetryAxis, TlsSchedule};
use crate::table::Table;

/// Smallest dip of `dP−/dt` accepted as a transition.
pub const DIP_DEPTH: f64 = 1e-6;

/// Symmetry residual a schedule must stay below to be analysed.
pub const SYMMETRY_TOL: f64 = 1e-9;

/// Where stage I is taken to end.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TfRule {
    /// The first local minimum of `dP−/dt`.
    DipBottom,
    /// The first time after that minimum at which `dP−/dt` has recovered to
    /// within `rel` of zero, relative to the dip depth.
    DipRecovery { rel: f64 },
}

impl Default for TfRule {
    fn default() -> Self {
        TfRule::DipRecovery { rel: 1e-3 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StageDecomposition {
    pub t_i: f64,
    pub t_f: f64,
    pub total_time: f64,
}

impl StageDecomposition {
    pub fn new(t_f: f64, total_time: f64) -> Result<Self> {
        if !(t_f > 0.0 && t_f <= 0.5 * total_time * (1.0 + 1e-12)) {
            return Err(Error::InvalidParameter(format!(
                "stage boundary t_f = {t_f} must lie in (0, T/2] with T = {total_time}"
            )));
        }
        Ok(Self { t_i: 0.0, t_f, total_time })
    }

    /// `(t_f, T − t_f)`.
    pub fn stage_ii(&self) -> (f64, f64) {
        (self.t_f, self.total_time - self.t_f)
    }
}

/// Locates `t_f` on an occupation series covering at least `[0, T/2]`.
pub fn detect_t_f(occ: &OccupationSeries, total_time: f64, rule: TfRule) -> Result<f64> {
    let half = 0.5 * total_time;
    let n = occ.times.partition_point(|&t| t <= half * (1.0 + 1e-12));
    let d = &occ.dp_minus;
    let bottom = (1..n.saturating_sub(1))
        .find(|&i| d[i] < d[i - 1] && d[i] <= d[i + 1] && d[i] < -DIP_DEPTH)
        .ok_or(Error::DetectionFailed)?;
    let k = match rule {
        TfRule::DipBottom => bottom,
        TfRule::DipRecovery { rel } => {
            let floor = -rel * d[bottom].abs();
            (bottom..n).find(|&j| d[j] >= floor).unwrap_or(n - 1)
        }
    };
    Ok(occ.times[k].min(half))
}

/// Stage boundary for `sched`: the hold start when there is one, otherwise
/// detected from the occupation series.
pub fn stage_decomposition(sched: &TlsSchedule, occ: &OccupationSeries, rule: TfRule) -> Result<StageDecomposition> {
    let total = sched.total_time();
    let t_f = match sched.hold() {
        Some(h) => h.start,
        None => detect_t_f(occ, total, rule)?,
    };
    StageDecomposition::new(t_f, total)
}

/// `(R, T)` as overlaps of `ψ(t_f)` with the gauge-fixed frame at `t_f`.
pub fn extract_rt(psi: &StateVector, frame: &EigenFrame) -> Result<(C64, C64)> {
    let (r, t) = frame.project(psi);
    let defect = (r.norm_sqr() + t.norm_sqr() - 1.0).abs();
    if defect > 1e-6 {
        return Err(Error::InvalidState(format!("|R|² + |T|² deviates from 1 by {defect:e}")));
    }
    Ok((r, t))
}

/// Transfer-matrix prediction of the final occupations.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Prediction {
    pub p_mm: f64,
    pub p_mp: f64,
    /// `arg(R T*)`, `None` when `R T* = 0`.
    pub phi_r: Option<f64>,
    /// `φ_d + 2φ_c + φ_r`, `None` with `phi_r`.
    pub phi_l: Option<f64>,
}

/// `P−+ = 4|R|²|T|² cos²φ_L`, `P−− = 1 − P−+`.
pub fn predict(r: C64, t: C64, phi_d: f64, phi_c: f64) -> Result<Prediction> {
    check_rt(r, t)?;
    let rt = r * t.conj();
    if rt == C64::new(0.0, 0.0) {
        return Ok(Prediction { p_mm: 1.0, p_mp: 0.0, phi_r: None, phi_l: None });
    }
    let phi_r = arg(rt);
    let phi_l = phi_d + 2.0 * phi_c + phi_r;
    let p_mp = 4.0 * r.norm_sqr() * t.norm_sqr() * phi_l.cos().powi(2);
    Ok(Prediction { p_mm: 1.0 - p_mp, p_mp, phi_r: Some(phi_r), phi_l: Some(phi_l) })
}

fn check_rt(r: C64, t: C64) -> Result<()> {
    let defect = (r.norm_sqr() + t.norm_sqr() - 1.0).abs();
    if defect > 1e-6 {
        return Err(Error::InvalidParameter(format!("|R|² + |T|² deviates from 1 by {defect:e}")));
    }
    Ok(())
}

/// Stage matrices in the adiabatic basis `(E−, E+)` with the geometric
/// phase factors stripped, and their product.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrices {
    pub stage_i: Mat2,
    pub stage_ii: Mat2,
    pub stage_iii: Mat2,
    pub total: Mat2,
}

pub fn transfer_matrices(r: C64, t: C64, phi_d: f64, phi_c: f64) -> Result<TransferMatrices> {
    check_rt(r, t)?;
    let c = C64::from_polar(1.0, phi_c);
    let d = C64::from_polar(1.0, phi_d);
    let stage_i = Mat2::new(r * c, -t.conj() * c, t * c.conj(), r.conj() * c.conj());
    let stage_ii = Mat2::new(d, C64::new(0.0, 0.0), C64::new(0.0, 0.0), d.conj());
    let stage_iii = Mat2::new(r * c, -t * c.conj(), t.conj() * c, r.conj() * c.conj());
    let total = stage_iii * stage_ii * stage_i;
    Ok(TransferMatrices { stage_i, stage_ii, stage_iii, total })
}

/// Output of the full pipeline for one schedule.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct InterferenceReport {
    pub t_f: f64,
    pub r: C64,
    pub t: C64,
    pub phi_d: f64,
    pub phi_c: f64,
    pub phi_r: Option<f64>,
    pub phi_l: Option<f64>,
    pub p_mm_tm: f64,
    pub p_mp_tm: f64,
    pub p_mm_num: f64,
    pub p_mp_num: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct AnalysisOptions {
    /// Total step count; `None` uses [`default_tls_steps`].
    pub n_steps: Option<usize>,
    pub rule: TfRule,
}

/// Propagation grid with hold edges as exact grid points; mirror symmetric
/// about `T/2` whenever the breakpoints are.
pub fn analysis_grid(sched: &TlsSchedule, n_steps: Option<usize>) -> Vec<f64> {
    let n = n_steps.unwrap_or_else(|| default_tls_steps(sched.total_time()));
    piecewise_uniform_grid(&sched.breakpoints(), n)
}

/// Evolves the ground state of `H(0)`, locates `t_f`, and compares the
/// transfer-matrix prediction with the propagated result.
pub fn analyze(sched: &TlsSchedule, axis: SymmetryAxis, opts: AnalysisOptions) -> Result<InterferenceReport> {
    Ok(analyze_with_series(sched, axis, opts)?.0)
}

/// [`analyze`] that also returns the occupation series of the run.
pub fn analyze_with_series(
    sched: &TlsSchedule,
    axis: SymmetryAxis,
    opts: AnalysisOptions,
) -> Result<(InterferenceReport, OccupationSeries)> {
    let residual = check_symmetry(sched, axis, 1001);
    if residual > SYMMETRY_TOL {
        return Err(Error::InvalidParameter(format!(
            "schedule violates H(t) = −σr H(T−t) σr (residual {residual:e})"
        )));
    }
    let grid = analysis_grid(sched, opts.n_steps);
    let frames = frames_on_grid(sched, axis, &grid)?;
    let psi0 = frames[0].ground_state();
    let traj = evolve_on_grid(sched, &psi0, &grid, Sampling::Every)?;
    let occ = occupation_series(&traj, sched)?;
    let stages = stage_decomposition(sched, &occ, opts.rule)?;
    let k = grid.partition_point(|&t| t < stages.t_f);
    let (r, t) = extract_rt(&traj.states[k], &frames[k])?;
    let phi_d = dynamical_phase(sched, stages.t_f)?;
    let phi_c = phi_c(sched, axis)?;
    let pred = predict(r, t, phi_d, phi_c)?;
    let last = frames.last().unwrap();
    let (a, b) = last.project(traj.final_state());
    let report = InterferenceReport {
        t_f: stages.t_f,
        r,
        t,
        phi_d,
        phi_c,
        phi_r: pred.phi_r,
        phi_l: pred.phi_l,
        p_mm_tm: pred.p_mm,
        p_mp_tm: pred.p_mp,
        p_mm_num: a.norm_sqr(),
        p_mp_num: b.norm_sqr(),
    };
    Ok((report, occ))
}

/// Numerically propagated stage I and stage III operators, in the fixed
/// basis and in the gauge-fixed adiabatic basis.
#[derive(Clone, Debug, PartialEq)]
pub struct StageOperators {
    pub diabatic_i: Mat2,
    pub diabatic_iii: Mat2,
    pub adiabatic_i: Mat2,
    pub adiabatic_iii: Mat2,
}

impl StageOperators {
    /// `‖Ũ_I − σr Ũ_III⁻¹ σr‖`.
    pub fn diabatic_residual(&self, axis: SymmetryAxis) -> f64 {
        let sr = pauli_axis(axis).matrix();
        (self.diabatic_i - sr * self.diabatic_iii.adjoint() * sr).norm()
    }

    /// `‖𝒰_III − σx 𝒰_I⁻¹ σx‖`.
    pub fn adiabatic_residual(&self) -> f64 {
        let sx = sigma_x();
        (self.adiabatic_iii - sx * self.adiabatic_i.adjoint() * sx).norm()
    }
}

fn to_mat2(m: &nalgebra::DMatrix<C64>) -> Mat2 {
    Mat2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)])
}

/// Propagates stage I over `[0, t_f]` with `n_steps` and stage III over the
/// mirrored grid on `[T − t_f, T]`.
pub fn stage_operators(sched: &TlsSchedule, axis: SymmetryAxis, t_f: f64, n_steps: usize) -> Result<StageOperators> {
    let total = sched.total_time();
    StageDecomposition::new(t_f, total)?;
    let grid_i = uniform_grid(0.0, t_f, n_steps);
    let grid_iii: Vec<f64> = grid_i.iter().rev().map(|&t| total - t).collect();
    let diabatic_i = to_mat2(&propagator_on_grid(sched, &grid_i)?);
    let diabatic_iii = to_mat2(&propagator_on_grid(sched, &grid_iii)?);
    let mut times = grid_i.clone();
    times.extend(grid_iii.iter().skip(usize::from(grid_iii[0] <= t_f)));
    let frames = frames_on_grid(sched, axis, &times)?;
    let basis = |f: &EigenFrame| Mat2::from_columns(&[f.v_minus, f.v_plus]);
    let n = grid_i.len();
    let (s0, sf) = (basis(&frames[0]), basis(&frames[n - 1]));
    let (s3, s4) = (basis(&frames[times.len() - n]), basis(frames.last().unwrap()));
    Ok(StageOperators {
        diabatic_i,
        diabatic_iii,
        adiabatic_i: sf.adjoint() * diabatic_i * s0,
        adiabatic_iii: s4.adjoint() * diabatic_iii * s3,
    })
}

/// One row of a parameter sweep.
#[derive(Debug)]
pub struct SweepRow {
    pub param: f64,
    pub result: Result<InterferenceReport>,
}

/// Runs [`analyze`] for every value, in parallel, keeping input order.
/// A failing row is recorded and the sweep continues.
pub fn sweep<F>(values: &[f64], build: F, opts: AnalysisOptions) -> Vec<SweepRow>
where
    F: Fn(f64) -> Result<(TlsSchedule, SymmetryAxis)> + Sync,
{
    values
        .par_iter()
        .map(|&param| SweepRow {
            param,
            result: build(param).and_then(|(s, axis)| analyze(&s, axis, opts)),
        })
        .collect()
}

pub const SWEEP_HEADER: [&str; 10] = [
    "param", "t_f", "abs_R2", "abs_T2", "phi_d", "phi_c", "phi_r", "phi_L", "P_mm_tm", "P_mm_num",
];

/// Sweep rows as a table; failed rows carry NaN outside the parameter column.
pub fn sweep_table(rows: &[SweepRow]) -> Table {
    let mut table = Table::new(SWEEP_HEADER);
    for row in rows {
        let values = match &row.result {
            Ok(r) => vec![
                row.param,
                r.t_f,
                r.r.norm_sqr(),
                r.t.norm_sqr(),
                r.phi_d,
                r.phi_c,
                r.phi_r.unwrap_or(f64::NAN),
                r.phi_l.unwrap_or(f64::NAN),
                r.p_mm_tm,
                r.p_mm_num,
            ],
            Err(_) => {
                let mut v = vec![f64::NAN; SWEEP_HEADER.len()];
                v[0] = row.param;
                v
            }
        };
        table.push(values);
    }
    table
}

/// Interior local maxima `(x, y)` of a sampled curve.
pub fn local_maxima(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    extrema(x, y, |a, b| a > b)
}

/// Interior local minima `(x, y)` of a sampled curve.
pub fn local_minima(x: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    extrema(x, y, |a, b| a < b)
}

fn extrema(x: &[f64], y: &[f64], better: impl Fn(f64, f64) -> bool) -> Vec<(f64, f64)> {
    (1..y.len().saturating_sub(1))
        .filter(|&i| better(y[i], y[i - 1]) && !better(y[i + 1], y[i]) && y[i].is_finite())
        .map(|i| (x[i], y[i]))
        .collect()
}

/// Vertex of the parabola through three samples around index `i`.
pub fn refine_extremum(x: &[f64], y: &[f64], i: usize) -> (f64, f64) {
    if i == 0 || i + 1 >= x.len() {
        return (x[i], y[i]);
    }
    let (x0, x1, x2) = (x[i - 1], x[i], x[i + 1]);
    let (y0, y1, y2) = (y[i - 1], y[i], y[i + 1]);
    let d01 = (y1 - y0) / (x1 - x0);
    let d12 = (y2 - y1) / (x2 - x1);
    let a = (d12 - d01) / (x2 - x0);
    if a == 0.0 {
        return (x1, y1);
    }
    let b = d01 - a * (x0 + x1);
    let xv = -b / (2.0 * a);
    let c = y1 - a * x1 * x1 - b * x1;
    (xv, a * xv * xv + b * xv + c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::{example1_schedule, example2_schedule, HermitianOperator2};
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_3, FRAC_PI_6, SQRT_2};

    fn half() -> C64 {
        C64::new(0.5f64.sqrt(), 0.0)
    }

    #[test]
    fn predict_examples() {
        let p = predict(half(), half(), FRAC_PI_2, 0.0).unwrap();
        assert!((p.p_mm - 1.0).abs() < 1e-15);
        let p = predict(half(), half(), 0.0, 0.0).unwrap();
        assert!(p.p_mm.abs() < 1e-15);
        assert_eq!(p.p_mm + p.p_mp, 1.0);
        let p = predict(C64::new(1.0, 0.0), C64::new(0.0, 0.0), 0.3, 0.1).unwrap();
        assert_eq!((p.p_mm, p.p_mp, p.phi_r), (1.0, 0.0, None));
        assert!(predict(C64::new(1.0, 0.0), C64::new(1.0, 0.0), 0.0, 0.0).is_err());
    }

    #[test]
    fn extremum_independent_of_amplitudes() {
        for r2 in [0.1, 0.37, 0.9] {
            let r = C64::from_polar(f64::sqrt(r2), 0.4);
            let t = C64::from_polar(f64::sqrt(1.0 - r2), -1.1);
            let phi_r = arg(r * t.conj());
            let p = predict(r, t, FRAC_PI_2 - phi_r - 0.2, 0.1).unwrap();
            assert!((p.p_mm - 1.0).abs() < 1e-15);
        }
    }

    #[test]
    fn transfer_matrices_match_prediction() {
        let r = C64::from_polar(0.8, 0.7);
        let t = C64::from_polar(0.6, -0.2);
        let m = transfer_matrices(r, t, 2.3, 0.4).unwrap();
        for u in [&m.stage_i, &m.stage_ii, &m.stage_iii, &m.total] {
            assert!((u.adjoint() * u - Mat2::identity()).norm() < 1e-12);
        }
        let p = predict(r, t, 2.3, 0.4).unwrap();
        assert!((m.total[(1, 0)].norm_sqr() - p.p_mp).abs() < 1e-12);
    }

    #[test]
    fn total_matrix_closed_form_for_real_r() {
        let (r, t) = (C64::new(0.8, 0.0), C64::new(0.0, 0.6));
        let m = transfer_matrices(r, t, 0.0, 0.0).unwrap();
        assert!((m.total[(0, 0)] - (r * r - t * t)).norm() < 1e-15);
    }

    #[test]
    fn gamma_phases_leave_probabilities_unchanged() {
        let r = C64::from_polar(0.7, 1.3);
        let t = C64::from_polar((1.0 - 0.49f64).sqrt(), 0.5);
        let m = transfer_matrices(r, t, 1.7, 0.25).unwrap();
        let diag = |g: f64| {
            Mat2::new(C64::from_polar(1.0, g), C64::new(0.0, 0.0), C64::new(0.0, 0.0), C64::from_polar(1.0, -g))
        };
        for g in [0.3, -2.2, 5.1] {
            let dressed = diag(-g) * m.total * diag(g);
            assert!((dressed[(1, 0)].norm_sqr() - m.total[(1, 0)].norm_sqr()).abs() < 1e-12);
        }
    }

    #[test]
    fn detection_fails_without_transition() {
        let s = TlsSchedule::constant(HermitianOperator2::SIGMA_Z, 4.0).unwrap();
        let grid = uniform_grid(0.0, 4.0, 400);
        let traj = evolve_on_grid(&s, &StateVector::basis(2, 1), &grid, Sampling::Every).unwrap();
        let occ = occupation_series(&traj, &s).unwrap();
        assert!(matches!(detect_t_f(&occ, 4.0, TfRule::DipBottom), Err(Error::DetectionFailed)));
    }

    #[test]
    fn example1_detection_inside_first_half() {
        for total in [2.0, 8.0] {
            let s = example1_schedule(1.0, 1.5, 0.5, 2.0, total).unwrap();
            for rule in [TfRule::DipBottom, TfRule::default()] {
                let rep = analyze(&s, SymmetryAxis::Z, AnalysisOptions { n_steps: None, rule }).unwrap();
                assert!(rep.t_f > 0.0 && rep.t_f < 0.5 * total);
                assert!((rep.r.norm_sqr() + rep.t.norm_sqr() - 1.0).abs() < 1e-8);
                assert!((rep.p_mm_num + rep.p_mp_num - 1.0).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn example2_uses_hold_start() {
        let axis = SymmetryAxis::new(FRAC_PI_3, FRAC_PI_6);
        let s = example2_schedule(SQRT_2 / 2.0, 1.0, -SQRT_2 / 2.0, 1.26, 1.0, axis).unwrap();
        let rep = analyze(&s, axis, AnalysisOptions::default()).unwrap();
        assert!((rep.t_f - 0.63).abs() < 1e-15);
        assert!((rep.phi_d - 1.0).abs() < 1e-12);
    }

    #[test]
    fn asymmetric_schedule_is_rejected() {
        let s = example1_schedule(1.0, 1.5, 0.5, 2.0, 3.0).unwrap();
        let err = analyze(&s, SymmetryAxis::new(FRAC_PI_2, 0.0), AnalysisOptions::default()).unwrap_err();
        assert!(matches!(err, Error::InvalidParameter(_)));
    }

    #[test]
    fn stage_operator_relations() {
        let s = example1_schedule(1.0, 1.5, 0.5, 2.0, 3.0).unwrap();
        let ops = stage_operators(&s, SymmetryAxis::Z, 0.9, 2000).unwrap();
        assert!(ops.diabatic_residual(SymmetryAxis::Z) < 1e-10);
        assert!(ops.adiabatic_residual() < 1e-10);
    }

    #[test]
    fn sweep_keeps_order_and_records_failures() {
        let values = [3.0, -1.0, 2.0];
        let rows = sweep(
            &values,
            |t| Ok((example1_schedule(1.0, 1.5, 0.5, 2.0, t)?, SymmetryAxis::Z)),
            AnalysisOptions::default(),
        );
        assert_eq!(rows.iter().map(|r| r.param).collect::<Vec<_>>(), values);
        assert!(rows[1].result.is_err());
        let table = sweep_table(&rows);
        assert!(table.rows[1][1].is_nan());
        let single = analyze(&example1_schedule(1.0, 1.5, 0.5, 2.0, 2.0).unwrap(), SymmetryAxis::Z, AnalysisOptions::default()).unwrap();
        assert_eq!(rows[2].result.as_ref().unwrap(), &single);
    }

    #[test]
    fn parabola_vertex() {
        let x = [0.0, 1.0, 2.5];
        let y: Vec<f64> = x.iter().map(|v| -(v - 1.2) * (v - 1.2) + 3.0).collect();
        let (xv, yv) = refine_extremum(&x, &y, 1);
        assert!((xv - 1.2).abs() < 1e-12 && (yv - 3.0).abs() < 1e-12);
        assert_eq!(local_maxima(&x, &y), vec![(1.0, y[1])]);
    }
}
