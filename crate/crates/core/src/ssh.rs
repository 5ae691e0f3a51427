//! Finite SSH chain with a modulated intracell hopping and an on-site drive on
//! the first site, its edge states and the reduced two-level model built on
//! them.
//!
//! Sites are numbered `1..=2N` in the docs and `0..2N` in code. The chain is
//! a single-particle hopping matrix with `v(t) = v0 sin(πt/T)` on bonds
//! `(2n−1, 2n)`, `w` on bonds `(2n, 2n+1)` and `Δ(t) = −Δ0 cos(πt/T)` on site 1.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::adiabatic::{initial_ground_state, simpson};
use crate::error::{Error, Result};
use crate::propagator::{
    apply_real_symmetric_step, default_chain_steps, default_tls_steps, evolve_final, Hamiltonian,
    StateVector,
};
use crate::schedules::{CoefficientProfile, Frame, TlsSchedule};
use crate::table::Table;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainModel {
    /// Unit cells; the chain has `2N` sites.
    pub n_cells: usize,
    pub w: f64,
    pub v0: f64,
    pub delta0: f64,
    pub total_time: f64,
}

impl ChainModel {
    pub fn new(n_cells: usize, w: f64, v0: f64, delta0: f64, total_time: f64) -> Result<Self> {
        let m = Self { n_cells, w, v0, delta0, total_time };
        m.validate()?;
        Ok(m)
    }

    /// 2N = 32, w = 1, v0 = 0.9, Δ0 = 0.1.
    pub fn reference(total_time: f64) -> Result<Self> {
        Self::new(16, 1.0, 0.9, 0.1, total_time)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_cells < 2 {
            return Err(Error::InvalidParameter(format!("need N ≥ 2 unit cells, got {}", self.n_cells)));
        }
        if !(self.v0.abs() < self.w.abs()) {
            return Err(Error::OutOfRegime(self.v0.abs() / self.w.abs()));
        }
        if !(self.total_time > 0.0 && self.total_time.is_finite()) {
            return Err(Error::InvalidParameter(format!("T must be > 0, got {}", self.total_time)));
        }
        if !self.delta0.is_finite() {
            return Err(Error::InvalidParameter("Δ0 must be finite".into()));
        }
        Ok(())
    }

    pub fn sites(&self) -> usize {
        2 * self.n_cells
    }

    pub fn with_total_time(&self, total_time: f64) -> Result<Self> {
        Self::new(self.n_cells, self.w, self.v0, self.delta0, total_time)
    }

    fn check_time(&self, t: f64) -> Result<f64> {
        let slack = 1e-12 * self.total_time.max(1.0);
        if !(t >= -slack && t <= self.total_time + slack) {
            return Err(Error::OutOfDomain { t, total: self.total_time });
        }
        Ok(t.clamp(0.0, self.total_time))
    }

    /// Intracell hopping `v(t)`.
    pub fn v(&self, t: f64) -> f64 {
        self.v0 * (PI * t / self.total_time).sin()
    }

    /// On-site drive `Δ(t)` on site 1.
    pub fn delta(&self, t: f64) -> f64 {
        -self.delta0 * (PI * t / self.total_time).cos()
    }

    /// Localization factor `η = −v/w`.
    pub fn eta(&self, t: f64) -> f64 {
        -self.v(t) / self.w
    }
}

/// The hopping matrix at time `t`.
pub fn build_chain(model: &ChainModel, t: f64) -> Result<DMatrix<f64>> {
    let t = model.check_time(t)?;
    Ok(chain_matrix(model, t))
}

fn chain_matrix(model: &ChainModel, t: f64) -> DMatrix<f64> {
    let n = model.sites();
    let (v, w) = (model.v(t), model.w);
    let mut h = DMatrix::zeros(n, n);
    for i in 0..n - 1 {
        let hop = if i % 2 == 0 { v } else { w };
        h[(i, i + 1)] = hop;
        h[(i + 1, i)] = hop;
    }
    h[(0, 0)] = model.delta(t);
    h
}

/// The full chain as a propagatable Hamiltonian.
#[derive(Clone, Copy, Debug)]
pub struct ChainHamiltonian<'a>(pub &'a ChainModel);

impl Hamiltonian for ChainHamiltonian<'_> {
    fn dim(&self) -> usize {
        self.0.sites()
    }

    fn apply_step(&self, t_mid: f64, dt: f64, psi: &mut nalgebra::DVector<C64>) -> Result<()> {
        apply_real_symmetric_step(build_chain(self.0, t_mid)?, dt, psi);
        Ok(())
    }
}

/// `Σ_{k<N} η^{2k} = (1 − η^{2N})/(1 − η²)`, equal to 1 at η = 0.
fn geometric_norm(eta: f64, n_cells: usize) -> f64 {
    let e2 = eta * eta;
    if e2 < 1e-8 {
        // Short direct sum avoids the 0/0 form near the dimerized limit.
        (0..n_cells).map(|k| e2.powi(k as i32)).sum()
    } else {
        (1.0 - e2.powi(n_cells as i32)) / (1.0 - e2)
    }
}

/// Normalized left and right edge states.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeStatePair {
    pub l: StateVector,
    pub r: StateVector,
    pub eta: f64,
}

/// `|L⟩ ∝ Σ η^k |2k+1⟩`, `|R⟩ ∝ Σ η^k |2N−2k⟩`.
pub fn edge_states(eta: f64, n_cells: usize) -> Result<EdgeStatePair> {
    if !(eta.abs() < 1.0) {
        return Err(Error::OutOfRegime(eta.abs()));
    }
    let sites = 2 * n_cells;
    let scale = geometric_norm(eta, n_cells).sqrt().recip();
    let mut l = nalgebra::DVector::zeros(sites);
    let mut r = nalgebra::DVector::zeros(sites);
    let mut amp = scale;
    for k in 0..n_cells {
        l[2 * k] = C64::new(amp, 0.0);
        r[sites - 1 - 2 * k] = C64::new(amp, 0.0);
        amp *= eta;
    }
    Ok(EdgeStatePair { l: StateVector::normalized(l)?, r: StateVector::normalized(r)?, eta })
}

/// `(Δ̃, κ̃)` with `Δ̃ = Δ(1−η²)/(1−η^{2N})` and `κ̃ = v η^{N−1}(1−η²)/(1−η^{2N})`.
pub fn reduced_coefficients(model: &ChainModel, t: f64) -> Result<(f64, f64)> {
    let t = model.check_time(t)?;
    Ok(reduced_at(model, t))
}

fn reduced_at(model: &ChainModel, t: f64) -> (f64, f64) {
    let eta = model.eta(t);
    let norm = geometric_norm(eta, model.n_cells);
    let delta = model.delta(t) / norm;
    let kappa = model.v(t) * eta.powi(model.n_cells as i32 - 1) / norm;
    (delta, kappa)
}

/// `(⟨L|H|L⟩, ⟨L|H|R⟩)` by explicit sandwich with the chain matrix.
pub fn reduced_by_sandwich(model: &ChainModel, t: f64) -> Result<(f64, f64)> {
    let h = build_chain(model, t)?.map(|x| C64::new(x, 0.0));
    let pair = edge_states(model.eta(t), model.n_cells)?;
    let (l, r) = (pair.l.amplitudes(), pair.r.amplitudes());
    Ok((l.dotc(&(&h * l)).re, l.dotc(&(&h * r)).re))
}

/// Reduced coefficients as a schedule profile: `(Δ̃/2, κ̃, 0, Δ̃/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReducedProfile {
    pub model: ChainModel,
}

impl CoefficientProfile for ReducedProfile {
    fn duration(&self) -> f64 {
        self.model.total_time
    }

    fn eval(&self, t: f64) -> [f64; 4] {
        let (delta, kappa) = reduced_at(&self.model, t);
        [0.5 * delta, kappa, 0.0, 0.5 * delta]
    }
}

/// `H_R = (Δ̃/2)σ0 + κ̃σx + (Δ̃/2)σz` in the basis `(|L⟩, |R⟩)`.
pub fn reduced_schedule(model: &ChainModel) -> Result<TlsSchedule> {
    model.validate()?;
    TlsSchedule::new(Frame::Cartesian, ReducedProfile { model: *model })
}

/// `P_2N = |⟨2N|ψ(T)⟩|²` after injecting the particle on site 1.
pub fn transport_probability(model: &ChainModel, n_steps: Option<usize>) -> Result<f64> {
    model.validate()?;
    let n = n_steps.unwrap_or_else(|| default_chain_steps(model.total_time));
    let psi0 = StateVector::basis(model.sites(), 0);
    let out = evolve_final(&ChainHamiltonian(model), &psi0, 0.0, model.total_time, n)?;
    Ok(out.probability(model.sites() - 1))
}

/// Ground-state survival `P−−` of the reduced model started in its ground state.
pub fn reduced_transport_probability(model: &ChainModel, n_steps: Option<usize>) -> Result<f64> {
    let sched = reduced_schedule(model)?;
    let n = n_steps.unwrap_or_else(|| default_tls_steps(model.total_time));
    let psi0 = initial_ground_state(&sched)?;
    let out = evolve_final(&sched, &psi0, 0.0, model.total_time, n)?;
    let ground_end = crate::adiabatic::eigenframe(&sched.hamiltonian_at(model.total_time)?, model.total_time, None)?;
    Ok(ground_end.project(&out).0.norm_sqr())
}

/// `⟨κ̃⟩` over `[0, T]` by Simpson quadrature.
pub fn mean_coupling(model: &ChainModel) -> Result<f64> {
    let total = model.total_time;
    let integral = simpson(|t| Ok(reduced_at(model, t).1), 0.0, total, 4000)?;
    Ok(integral / total)
}

/// `T_QSL = π / (2|⟨κ̃⟩|)`.
///
/// `κ̃` carries the sign of `η^{N−1}`, which is negative for even `N` when
/// `v0 > 0`; the magnitude sets the speed limit.
pub fn qsl_time(model: &ChainModel) -> Result<f64> {
    qsl_from_average(mean_coupling(model)?)
}

/// `π / (2|κ|)` for a given mean coupling.
pub fn qsl_from_average(avg: f64) -> Result<f64> {
    if avg.abs() < 1e-300 || !avg.is_finite() {
        return Err(Error::ZeroAverage);
    }
    Ok(PI / (2.0 * avg.abs()))
}

/// Sorted chain eigenvalues at each time: columns `t, E_1..E_2N`.
pub fn spectrum_vs_time(model: &ChainModel, grid: &[f64]) -> Result<Table> {
    let n = model.sites();
    let header = std::iter::once("t".to_string()).chain((1..=n).map(|k| format!("E_{k}")));
    let mut table = Table::new(header);
    for &t in grid {
        let mut e: Vec<f64> = build_chain(model, t)?.symmetric_eigenvalues().iter().copied().collect();
        e.sort_by(f64::total_cmp);
        let mut row = vec![t];
        row.extend(e);
        table.push(row);
    }
    Ok(table)
}

/// The two mid-gap branches `(E_{N−1}, E_N)` (0-based sorted indices).
pub fn edge_branches(model: &ChainModel, t: f64) -> Result<(f64, f64)> {
    let mut e: Vec<f64> = build_chain(model, t)?.symmetric_eigenvalues().iter().copied().collect();
    e.sort_by(f64::total_cmp);
    let n = model.n_cells;
    Ok((e[n - 1], e[n]))
}

/// Worst overlap of the two mid-gap eigenvectors at `t` with the symmetric
/// and antisymmetric edge combinations `(|L⟩ ± |R⟩)/√2`.
pub fn edge_fidelity(model: &ChainModel, t: f64) -> Result<f64> {
    let eig = build_chain(model, t)?.symmetric_eigen();
    let mut order: Vec<usize> = (0..model.sites()).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let pair = edge_states(model.eta(t), model.n_cells)?;
    let s = (pair.l.amplitudes() + pair.r.amplitudes()).map(|z| z.re / 2f64.sqrt());
    let a = (pair.l.amplitudes() - pair.r.amplitudes()).map(|z| z.re / 2f64.sqrt());
    let n = model.n_cells;
    Ok([order[n - 1], order[n]]
        .iter()
        .map(|&k| {
            let u = eig.eigenvectors.column(k);
            u.dot(&s).powi(2).max(u.dot(&a).powi(2))
        })
        .fold(1.0, f64::min))
}

pub const TRANSPORT_HEADER: [&str; 3] = ["T", "P_2N", "P_mm_reduced"];

/// One transport run per total time, in parallel, rows in input order.
/// A failing run yields NaN in its row.
pub fn transport_sweep(model: &ChainModel, totals: &[f64]) -> Table {
    let rows: Vec<Vec<f64>> = totals
        .par_iter()
        .map(|&total| {
            let run = |f: fn(&ChainModel, Option<usize>) -> Result<f64>| {
                model.with_total_time(total).and_then(|m| f(&m, None)).unwrap_or(f64::NAN)
            };
            vec![total, run(transport_probability), run(reduced_transport_probability)]
        })
        .collect();
    let mut table = Table::new(TRANSPORT_HEADER);
    for r in rows {
        table.push(r);
    }
    table
}
