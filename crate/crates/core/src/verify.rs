//! Built-in invariant suites with machine-readable reports.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{frames_on_grid, initial_ground_state};
use crate::analysis::{stage_operators, sweep, AnalysisOptions};
use crate::error::{Error, Result};
use crate::propagator::{
    default_tls_steps, evolve, evolve_final, propagator_matrix, uniform_grid, StateVector,
};
use crate::schedules::{check_symmetry, example1_schedule, SymmetryAxis, TlsSchedule};
use crate::ssh::{
    edge_fidelity, reduced_by_sandwich, reduced_coefficients, reduced_schedule,
    transport_probability, reduced_transport_probability, ChainHamiltonian, ChainModel,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Symmetry,
    Unitarity,
    Gauge,
    TmAgreement,
    SshReduction,
}

impl Suite {
    pub const ALL: [Suite; 5] =
        [Suite::Symmetry, Suite::Unitarity, Suite::Gauge, Suite::TmAgreement, Suite::SshReduction];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Symmetry => "symmetry",
            Suite::Unitarity => "unitarity",
            Suite::Gauge => "gauge",
            Suite::TmAgreement => "tm-agreement",
            Suite::SshReduction => "ssh-reduction",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown suite '{s}'")))
    }
}

/// One measured assertion: passes when `value ≤ threshold`, or
/// `value ≥ threshold` for lower bounds.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Check {
    pub assertion: String,
    pub value: f64,
    pub threshold: f64,
    pub lower_bound: bool,
    pub passed: bool,
}

impl Check {
    pub fn at_most(assertion: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { assertion: assertion.into(), value, threshold, lower_bound: false, passed: value <= threshold }
    }

    pub fn at_least(assertion: impl Into<String>, value: f64, threshold: f64) -> Self {
        Self { assertion: assertion.into(), value, threshold, lower_bound: true, passed: value >= threshold }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct VerifyReport {
    pub suite: Suite,
    pub target: String,
    pub checks: Vec<Check>,
    pub passed: bool,
}

impl VerifyReport {
    fn new(suite: Suite, target: &str, checks: Vec<Check>) -> Self {
        let passed = checks.iter().all(|c| c.passed);
        Self { suite, target: target.into(), checks, passed }
    }
}

/// The schedule a two-level suite runs on.
#[derive(Clone, Debug)]
pub struct Target {
    pub name: String,
    pub sched: TlsSchedule,
    pub axis: SymmetryAxis,
}

impl Target {
    /// Example I at `T = 3`.
    pub fn default_example() -> Self {
        Self {
            name: "example1 T=3".into(),
            sched: example1_schedule(1.0, 1.5, 0.5, 2.0, 3.0).expect("valid parameters"),
            axis: SymmetryAxis::Z,
        }
    }
}

pub fn run_suite(suite: Suite, target: &Target) -> Result<VerifyReport> {
    let checks = match suite {
        Suite::Symmetry => symmetry_checks(target)?,
        Suite::Unitarity => unitarity_checks(target)?,
        Suite::Gauge => gauge_checks(target)?,
        Suite::TmAgreement => tm_agreement_checks()?,
        Suite::SshReduction => ssh_reduction_checks()?,
    };
    let name = match suite {
        Suite::TmAgreement => "example1 T in [0.5, 10]",
        Suite::SshReduction => "ssh 2N=32 w=1 v0=0.9 delta0=0.1",
        _ => &target.name,
    };
    Ok(VerifyReport::new(suite, name, checks))
}

fn symmetry_checks(target: &Target) -> Result<Vec<Check>> {
    let (s, axis) = (&target.sched, target.axis);
    let total = s.total_time();
    let mut checks = vec![Check::at_most(
        "max ‖H(t) + σr H(T−t) σr‖ on 2001 points",
        check_symmetry(s, axis, 2001),
        1e-12,
    )];
    let n = default_tls_steps(total) / 4;
    let ops = stage_operators(s, axis, 0.25 * total, n)?;
    checks.push(Check::at_most("‖Ũ_I − σr Ũ_III⁻¹ σr‖ at t_f = T/4", ops.diabatic_residual(axis), 1e-6));
    checks.push(Check::at_most("‖𝒰_III − σx 𝒰_I⁻¹ σx‖ at t_f = T/4", ops.adiabatic_residual(), 1e-5));
    Ok(checks)
}

fn unitarity_defect(u: &DMatrix<C64>) -> f64 {
    (u.adjoint() * u - DMatrix::identity(u.nrows(), u.ncols())).norm()
}

/// Step-doubling errors against a 64× refined reference; returns the three
/// observed ratios `e(n)/e(2n)`.
pub fn convergence_ratios(sched: &TlsSchedule, base_steps: usize) -> Result<Vec<f64>> {
    let total = sched.total_time();
    let psi0 = initial_ground_state(sched)?;
    let reference = evolve_final(sched, &psi0, 0.0, total, base_steps * 64)?;
    let errors: Vec<f64> = [1, 2, 4, 8]
        .iter()
        .map(|m| Ok(evolve_final(sched, &psi0, 0.0, total, base_steps * m)?.distance(&reference)))
        .collect::<Result<_>>()?;
    Ok(errors.windows(2).map(|w| w[0] / w[1]).collect())
}

fn unitarity_checks(target: &Target) -> Result<Vec<Check>> {
    let s = &target.sched;
    let total = s.total_time();
    let n = default_tls_steps(total);
    let u = propagator_matrix(s, 0.0, total, n)?;
    let mut checks = vec![Check::at_most("‖U†U − I‖ two-level", unitarity_defect(&u), 1e-10)];
    let traj = evolve(s, &initial_ground_state(s)?, 0.0, total, n)?;
    checks.push(Check::at_most("max |‖ψ(t)‖ − 1| two-level", traj.max_norm_defect(), 1e-10));
    let ratios = convergence_ratios(s, 200)?;
    let worst = ratios.iter().copied().fold(f64::INFINITY, f64::min);
    checks.push(Check::at_least("min error ratio under step doubling", worst, 3.5));
    let chain = ChainModel::reference(20.0)?;
    let traj = evolve(&ChainHamiltonian(&chain), &StateVector::basis(32, 0), 0.0, 20.0, 2000)?;
    checks.push(Check::at_most("max |‖ψ(t)‖ − 1| chain", traj.max_norm_defect(), 1e-9));
    let u = propagator_matrix(&ChainHamiltonian(&chain), 0.0, 20.0, 200)?;
    checks.push(Check::at_most("‖U†U − I‖ chain", unitarity_defect(&u), 1e-10));
    Ok(checks)
}

fn gauge_checks(target: &Target) -> Result<Vec<Check>> {
    let (s, axis) = (&target.sched, target.axis);
    let total = s.total_time();
    let times = uniform_grid(0.0, total, 2000);
    let frames = frames_on_grid(s, axis, &times)?;
    let (mut residual, mut det, mut product, mut antisym) = (0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for (f, g) in frames.iter().zip(frames.iter().rev()) {
        residual = residual.max(f.eigen_residual(&s.hamiltonian_at(f.t)?));
        det = det.max((f.det() - C64::new(1.0, 0.0)).norm());
        if f.t <= 0.5 * total {
            product = product.max(f.gauge_product().im.abs());
        }
        antisym = antisym.max((f.e_plus + g.e_minus).abs()).max((f.e_minus + g.e_plus).abs());
    }
    Ok(vec![
        Check::at_most("symmetry residual", check_symmetry(s, axis, 2001), 1e-9),
        Check::at_most("max ‖H v − E v‖", residual, 1e-10),
        Check::at_most("max |det[v−, v+] − 1|", det, 1e-10),
        Check::at_most("max |Im⟨E+|0⟩⟨0|E−⟩| first half", product, 1e-10),
        Check::at_most("max |E±(t) + E∓(T−t)|", antisym, 1e-10),
    ])
}

/// Example I over 50 points of `T ∈ [0.5, 10]`: `(T, P_mm_tm, P_mm_num)`.
pub fn example1_agreement_rows() -> Result<Vec<(f64, f64, f64)>> {
    let values: Vec<f64> = (0..50).map(|k| 0.5 + 9.5 * k as f64 / 49.0).collect();
    let rows = sweep(
        &values,
        |t| Ok((example1_schedule(1.0, 1.5, 0.5, 2.0, t)?, SymmetryAxis::Z)),
        AnalysisOptions::default(),
    );
    rows.into_iter()
        .map(|row| row.result.map(|r| (row.param, r.p_mm_tm, r.p_mm_num)))
        .collect()
}

fn tm_agreement_checks() -> Result<Vec<Check>> {
    let rows = example1_agreement_rows()?;
    let rms = (rows.iter().map(|(_, a, b)| (a - b).powi(2)).sum::<f64>() / rows.len() as f64).sqrt();
    let max = rows.iter().map(|(_, a, b)| (a - b).abs()).fold(0.0, f64::max);
    Ok(vec![
        Check::at_most("RMS |P_mm_tm − P_mm_num|", rms, 0.02),
        Check::at_most("max |P_mm_tm − P_mm_num|", max, 0.1),
    ])
}

fn ssh_reduction_checks() -> Result<Vec<Check>> {
    let m = ChainModel::reference(170.0)?;
    let total = m.total_time;
    let (mut sandwich, mut parity) = (0.0f64, 0.0f64);
    for k in 0..100 {
        let t = total * k as f64 / 99.0;
        let (d, kappa) = reduced_coefficients(&m, t)?;
        let (ds, ks) = reduced_by_sandwich(&m, t)?;
        sandwich = sandwich.max((d - ds).abs()).max((kappa - ks).abs());
        let (dm, km) = reduced_coefficients(&m, total - t)?;
        parity = parity.max((d + dm).abs()).max((kappa - km).abs());
    }
    let sched = reduced_schedule(&m)?;
    let end = frames_on_grid(&sched, SymmetryAxis::Z, &[0.0, total])?;
    // In the (L, R) basis the edge states are the basis vectors.
    let exchange = end[1].v_minus[0].norm().max(end[1].v_plus[1].norm());
    let weak = ChainModel::new(16, 1.0, 0.5, 0.1, total)?;
    let p_chain = transport_probability(&m, None)?;
    let p_reduced = reduced_transport_probability(&m, None)?;
    Ok(vec![
        Check::at_most("max |Δ̃, κ̃ − sandwich| over 100 times", sandwich, 1e-10),
        Check::at_most("max parity defect of Δ̃, κ̃", parity, 1e-10),
        Check::at_most("ground/excited of H_R(T) are |R⟩/|L⟩ (leakage)", exchange, 1e-10),
        Check::at_least("mid-gap fidelity at T/2, v0 = 0.5", edge_fidelity(&weak, 0.5 * total)?, 0.999),
        Check::at_most("|P_2N − P_mm_reduced| at T = 170", (p_chain - p_reduced).abs(), 0.05),
    ])
}
