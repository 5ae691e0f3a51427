//! Time-ordered unitary propagation.
//!
//! Each step freezes the Hamiltonian at the step midpoint and applies its
//! exact exponential, so every step is unitary to rounding and the scheme is
//! second order in the step size. Convergence is established by refining the
//! whole run, never by adapting steps inside it.

use nalgebra::{DMatrix, DVector, Vector2};
use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::schedules::{HermitianOperator2, Mat2, TlsSchedule};

/// Tolerance on `|‖ψ‖ − 1|` for states handed to the propagator.
pub const NORM_TOL: f64 = 1e-10;

/// Largest number of stored samples for chain-sized trajectories.
pub const MAX_CHAIN_SAMPLES: usize = 10_000;

/// Normalized complex amplitude vector.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector(DVector<C64>);

impl StateVector {
    /// Wraps `amps`, rejecting vectors whose norm is off by more than [`NORM_TOL`].
    pub fn new(amps: DVector<C64>) -> Result<Self> {
        let s = Self(amps);
        s.check_normalized(NORM_TOL)?;
        Ok(s)
    }

    pub fn from_slice(amps: &[C64]) -> Result<Self> {
        Self::new(DVector::from_column_slice(amps))
    }

    /// Rescales `amps` to unit norm.
    pub fn normalized(amps: DVector<C64>) -> Result<Self> {
        let n = amps.norm();
        if !(n > 0.0 && n.is_finite()) {
            return Err(Error::InvalidState(format!("cannot normalize vector of norm {n}")));
        }
        Ok(Self(amps / C64::from(n)))
    }

    /// Computational basis vector `|index⟩` (0-based).
    pub fn basis(dim: usize, index: usize) -> Self {
        let mut v = DVector::zeros(dim);
        v[index] = C64::new(1.0, 0.0);
        Self(v)
    }

    pub fn from_vector2(v: &Vector2<C64>) -> Result<Self> {
        Self::from_slice(v.as_slice())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn amplitudes(&self) -> &DVector<C64> {
        &self.0
    }

    pub fn into_inner(self) -> DVector<C64> {
        self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.norm()
    }

    /// `⟨self|other⟩`.
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.0.dotc(&other.0)
    }

    /// `|⟨i|ψ⟩|²`.
    pub fn probability(&self, index: usize) -> f64 {
        self.0[index].norm_sqr()
    }

    /// Euclidean distance `‖self − other‖`.
    pub fn distance(&self, other: &StateVector) -> f64 {
        (&self.0 - &other.0).norm()
    }

    pub fn check_normalized(&self, tol: f64) -> Result<()> {
        let norm = self.norm();
        if (norm - 1.0).abs() > tol || !norm.is_finite() {
            return Err(Error::NotNormalized { norm, tol });
        }
        Ok(())
    }
}

/// Sampled states along a propagation run.
#[derive(Clone, Debug, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<StateVector>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn final_state(&self) -> &StateVector {
        self.states.last().expect("trajectory is never empty")
    }

    /// Appends `other`, dropping its first sample when it duplicates our last.
    pub fn extend(&mut self, other: Trajectory) {
        let skip = usize::from(
            !self.is_empty() && other.times.first() == self.times.last(),
        );
        self.times.extend(other.times.into_iter().skip(skip));
        self.states.extend(other.states.into_iter().skip(skip));
    }

    pub fn max_norm_defect(&self) -> f64 {
        self.states.iter().map(|s| (s.norm() - 1.0).abs()).fold(0.0, f64::max)
    }
}

/// Anything that can advance a state by one frozen-midpoint step.
pub trait Hamiltonian: Sync {
    fn dim(&self) -> usize;

    /// Applies `exp(−i H(t_mid) dt)` to `psi` in place.
    fn apply_step(&self, t_mid: f64, dt: f64, psi: &mut DVector<C64>) -> Result<()>;
}

impl Hamiltonian for TlsSchedule {
    fn dim(&self) -> usize {
        2
    }

    fn apply_step(&self, t_mid: f64, dt: f64, psi: &mut DVector<C64>) -> Result<()> {
        let u = step_unitary_2x2(&self.hamiltonian_at(t_mid)?, dt);
        let (a, b) = (psi[0], psi[1]);
        psi[0] = u[(0, 0)] * a + u[(0, 1)] * b;
        psi[1] = u[(1, 0)] * a + u[(1, 1)] * b;
        Ok(())
    }
}

/// Closed-form `exp(−i H dt)` for a 2×2 Hermitian `H`:
/// `e^{−i c0 dt} [cos(|c|dt) I − i sin(|c|dt) ĉ·σ]`.
pub fn step_unitary_2x2(h: &HermitianOperator2, dt: f64) -> Mat2 {
    let r = h.field_strength();
    let x = r * dt;
    let cos = x.cos();
    // sin(|c| dt)/|c|, finite as |c| → 0
    let sinc = if x.abs() < 1e-8 { dt * (1.0 - x * x / 6.0) } else { x.sin() / r };
    let phase = C64::from_polar(1.0, -h.c0 * dt);
    let mi = C64::new(0.0, -1.0);
    Mat2::new(
        C64::new(cos, -sinc * h.cz),
        mi * sinc * C64::new(h.cx, -h.cy),
        mi * sinc * C64::new(h.cx, h.cy),
        C64::new(cos, sinc * h.cz),
    ) * phase
}

/// `exp(−i H dt)` of a Hermitian matrix via its eigendecomposition.
pub fn hermitian_step_unitary(h: &DMatrix<C64>, dt: f64) -> DMatrix<C64> {
    let eig = h.clone().symmetric_eigen();
    let v = &eig.eigenvectors;
    let phases = DMatrix::from_diagonal(&eig.eigenvalues.map(|e| C64::from_polar(1.0, -e * dt)));
    v * phases * v.adjoint()
}

/// Applies `exp(−i H dt) ψ` for a real symmetric `H` without forming the unitary.
pub fn apply_real_symmetric_step(h: DMatrix<f64>, dt: f64, psi: &mut DVector<C64>) {
    let eig = h.symmetric_eigen();
    let v = &eig.eigenvectors;
    let n = psi.len();
    let mut coeffs = DVector::<C64>::zeros(n);
    for k in 0..n {
        let col = v.column(k);
        let mut acc = C64::new(0.0, 0.0);
        for i in 0..n {
            acc += psi[i] * col[i];
        }
        coeffs[k] = acc * C64::from_polar(1.0, -eig.eigenvalues[k] * dt);
    }
    psi.fill(C64::new(0.0, 0.0));
    for k in 0..n {
        let col = v.column(k);
        let c = coeffs[k];
        for i in 0..n {
            psi[i] += c * col[i];
        }
    }
}

/// Which grid points a run keeps.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Sampling {
    Every,
    /// Keeps roughly evenly spaced points, always including both ends.
    AtMost(usize),
    FinalOnly,
}

/// `n_steps + 1` evenly spaced points from `t0` to `t1`, endpoints exact.
pub fn uniform_grid(t0: f64, t1: f64, n_steps: usize) -> Vec<f64> {
    let n = n_steps.max(1);
    (0..=n)
        .map(|k| if k == n { t1 } else { t0 + (t1 - t0) * k as f64 / n as f64 })
        .collect()
}

/// Uniform sub-grids between consecutive breakpoints, with about `n_total`
/// steps shared in proportion to segment length.
pub fn piecewise_uniform_grid(breakpoints: &[f64], n_total: usize) -> Vec<f64> {
    let span = breakpoints.last().unwrap() - breakpoints[0];
    let mut grid = vec![breakpoints[0]];
    for w in breakpoints.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let n = ((n_total as f64 * (w[1] - w[0]) / span).round() as usize).max(1);
        grid.extend(uniform_grid(w[0], w[1], n).into_iter().skip(1));
    }
    grid
}

fn check_initial<H: Hamiltonian + ?Sized>(h: &H, psi0: &StateVector) -> Result<()> {
    if psi0.dim() != h.dim() {
        return Err(Error::InvalidState(format!(
            "state dimension {} does not match Hamiltonian dimension {}",
            psi0.dim(),
            h.dim()
        )));
    }
    psi0.check_normalized(NORM_TOL)
}

/// Propagates `psi0` across an increasing time grid.
pub fn evolve_on_grid<H: Hamiltonian + ?Sized>(
    h: &H,
    psi0: &StateVector,
    grid: &[f64],
    sampling: Sampling,
) -> Result<Trajectory> {
    check_initial(h, psi0)?;
    if grid.len() < 2 || grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    let steps = grid.len() - 1;
    let stride = match sampling {
        Sampling::Every => 1,
        Sampling::AtMost(m) => steps.div_ceil(m.max(2) - 1).max(1),
        Sampling::FinalOnly => usize::MAX,
    };
    let mut traj = Trajectory::default();
    if sampling != Sampling::FinalOnly {
        traj.times.push(grid[0]);
        traj.states.push(psi0.clone());
    }
    let mut psi = psi0.amplitudes().clone();
    for (k, w) in grid.windows(2).enumerate() {
        let dt = w[1] - w[0];
        h.apply_step(0.5 * (w[0] + w[1]), dt, &mut psi)?;
        let step = k + 1;
        if step == steps || (stride != usize::MAX && step % stride == 0) {
            traj.times.push(w[1]);
            traj.states.push(StateVector(psi.clone()));
        }
    }
    Ok(traj)
}

/// Uniform-step run from `t0` to `t1`. Two-level runs store every step
/// boundary; larger systems store at most [`MAX_CHAIN_SAMPLES`] points.
pub fn evolve<H: Hamiltonian + ?Sized>(
    h: &H,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    n_steps: usize,
) -> Result<Trajectory> {
    if !(t1 > t0) || n_steps == 0 {
        return Err(Error::InvalidParameter(format!(
            "need t0 < t1 and n_steps ≥ 1 (got {t0}, {t1}, {n_steps})"
        )));
    }
    let sampling = if h.dim() == 2 { Sampling::Every } else { Sampling::AtMost(MAX_CHAIN_SAMPLES) };
    evolve_on_grid(h, psi0, &uniform_grid(t0, t1, n_steps), sampling)
}

/// Final state of a uniform-step run.
pub fn evolve_final<H: Hamiltonian + ?Sized>(
    h: &H,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    n_steps: usize,
) -> Result<StateVector> {
    if !(t1 > t0) || n_steps == 0 {
        return Err(Error::InvalidParameter(format!(
            "need t0 < t1 and n_steps ≥ 1 (got {t0}, {t1}, {n_steps})"
        )));
    }
    let traj = evolve_on_grid(h, psi0, &uniform_grid(t0, t1, n_steps), Sampling::FinalOnly)?;
    Ok(traj.states.into_iter().last().unwrap())
}

#[derive(Clone, Copy, Debug)]
pub struct ConvergenceOptions {
    pub tol: f64,
    pub min_steps: usize,
    pub max_steps: usize,
}

impl ConvergenceOptions {
    pub fn new(tol: f64) -> Self {
        Self { tol, min_steps: 16, max_steps: 1 << 24 }
    }
}

/// Doubles the step count until successive final states differ by less than `tol`.
pub fn evolve_converged<H: Hamiltonian + ?Sized>(
    h: &H,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<(StateVector, usize)> {
    evolve_converged_with(h, psi0, t0, t1, ConvergenceOptions::new(tol))
}

pub fn evolve_converged_with<H: Hamiltonian + ?Sized>(
    h: &H,
    psi0: &StateVector,
    t0: f64,
    t1: f64,
    opts: ConvergenceOptions,
) -> Result<(StateVector, usize)> {
    if !(opts.tol > 0.0) {
        return Err(Error::InvalidParameter(format!("tolerance must be > 0, got {}", opts.tol)));
    }
    let mut n = opts.min_steps.max(1);
    let mut prev = evolve_final(h, psi0, t0, t1, n)?;
    let mut last_diff = f64::INFINITY;
    while n.saturating_mul(2) <= opts.max_steps {
        n *= 2;
        let cur = evolve_final(h, psi0, t0, t1, n)?;
        last_diff = cur.distance(&prev);
        if last_diff < opts.tol {
            return Ok((cur, n));
        }
        prev = cur;
    }
    Err(Error::NoConvergence { max_steps: opts.max_steps, last_diff })
}

/// The full propagator `U(t1, t0)` built column by column.
pub fn propagator_matrix<H: Hamiltonian + ?Sized>(
    h: &H,
    t0: f64,
    t1: f64,
    n_steps: usize,
) -> Result<DMatrix<C64>> {
    propagator_on_grid(h, &uniform_grid(t0, t1, n_steps))
}

pub fn propagator_on_grid<H: Hamiltonian + ?Sized>(h: &H, grid: &[f64]) -> Result<DMatrix<C64>> {
    let dim = h.dim();
    let mut u = DMatrix::zeros(dim, dim);
    for j in 0..dim {
        let out = evolve_on_grid(h, &StateVector::basis(dim, j), grid, Sampling::FinalOnly)?;
        u.set_column(j, out.final_state().amplitudes());
    }
    Ok(u)
}

/// Step count for two-level runs: `max(10⁴, ⌈200·T⌉)`.
pub fn default_tls_steps(total_time: f64) -> usize {
    ((200.0 * total_time).ceil() as usize).max(10_000)
}

/// Step count for chain runs, `dt ≤ 0.01`.
pub fn default_chain_steps(total_time: f64) -> usize {
    ((total_time / 0.01).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedules::{example1_schedule, sigma_x};
    use std::f64::consts::{FRAC_PI_2, PI};

    fn unitarity_defect(u: &Mat2) -> f64 {
        (u.adjoint() * u - Mat2::identity()).norm()
    }

    #[test]
    fn closed_form_examples() {
        assert_eq!(step_unitary_2x2(&HermitianOperator2::ZERO, 0.7), Mat2::identity());
        let u = step_unitary_2x2(&HermitianOperator2::SIGMA_Z, PI);
        assert!((u + Mat2::identity()).norm() < 1e-15);
        let u = step_unitary_2x2(&HermitianOperator2::SIGMA_X, FRAC_PI_2);
        assert!((u - sigma_x() * C64::new(0.0, -1.0)).norm() < 1e-15);
        let u = step_unitary_2x2(&HermitianOperator2::IDENTITY, 0.3);
        assert!((u - Mat2::identity() * C64::from_polar(1.0, -0.3)).norm() < 1e-15);
    }

    #[test]
    fn closed_form_matches_eigendecomposition() {
        let h = HermitianOperator2::new(0.4, -1.1, 0.6, 0.9);
        let dense = DMatrix::from_iterator(2, 2, h.matrix().iter().copied());
        let u = hermitian_step_unitary(&dense, 0.37);
        let closed = step_unitary_2x2(&h, 0.37);
        for i in 0..2 {
            for j in 0..2 {
                assert!((u[(i, j)] - closed[(i, j)]).norm() < 1e-13);
            }
        }
        assert!(unitarity_defect(&closed) < 1e-14);
    }

    #[test]
    fn real_symmetric_step_matches_dense_unitary() {
        let h = DMatrix::from_row_slice(3, 3, &[0.2, 1.0, 0.0, 1.0, -0.5, 0.3, 0.0, 0.3, 0.1]);
        let hc = h.map(|x| C64::new(x, 0.0));
        let u = hermitian_step_unitary(&hc, 0.8);
        let mut psi = DVector::from_vec(vec![
            C64::new(0.6, 0.0),
            C64::new(0.0, 0.8),
            C64::new(0.0, 0.0),
        ]);
        let expect = &u * &psi;
        apply_real_symmetric_step(h, 0.8, &mut psi);
        assert!((psi - expect).norm() < 1e-13);
    }

    #[test]
    fn rejects_unnormalized_and_mismatched_states() {
        let s = example1_schedule(1.0, 1.5, 0.5, 2.0, 1.0).unwrap();
        let bad = StateVector(DVector::from_vec(vec![C64::new(1.0, 0.0), C64::new(0.1, 0.0)]));
        assert!(matches!(evolve(&s, &bad, 0.0, 1.0, 10), Err(Error::NotNormalized { .. })));
        let wrong_dim = StateVector::basis(3, 0);
        assert!(matches!(evolve(&s, &wrong_dim, 0.0, 1.0, 10), Err(Error::InvalidState(_))));
        assert!(evolve(&s, &StateVector::basis(2, 0), 1.0, 0.5, 10).is_err());
    }

    #[test]
    fn sampling_keeps_endpoints() {
        let s = example1_schedule(1.0, 1.5, 0.5, 2.0, 1.0).unwrap();
        let psi = StateVector::basis(2, 1);
        let grid = uniform_grid(0.0, 1.0, 1000);
        let traj = evolve_on_grid(&s, &psi, &grid, Sampling::AtMost(7)).unwrap();
        assert!(traj.len() <= 8);
        assert_eq!(traj.times[0], 0.0);
        assert_eq!(*traj.times.last().unwrap(), 1.0);
        let full = evolve_on_grid(&s, &psi, &grid, Sampling::Every).unwrap();
        assert_eq!(full.len(), 1001);
        assert_eq!(full.final_state(), traj.final_state());
    }

    #[test]
    fn zero_hamiltonian_converges_immediately() {
        let s = TlsSchedule::constant(HermitianOperator2::ZERO, 3.0).unwrap();
        let psi = StateVector::basis(2, 0);
        let (out, n) = evolve_converged(&s, &psi, 0.0, 3.0, 1e-12).unwrap();
        assert_eq!(n, 2 * ConvergenceOptions::new(1.0).min_steps);
        assert_eq!(out, psi);
    }

    #[test]
    fn convergence_ceiling_reports_failure() {
        let s = example1_schedule(1.0, 1.5, 0.5, 2.0, 5.0).unwrap();
        let opts = ConvergenceOptions { tol: 1e-14, min_steps: 4, max_steps: 64 };
        let err = evolve_converged_with(&s, &StateVector::basis(2, 1), 0.0, 5.0, opts).unwrap_err();
        assert!(matches!(err, Error::NoConvergence { max_steps: 64, .. }));
        assert!(err.is_numerical());
    }

    #[test]
    fn piecewise_grid_hits_breakpoints() {
        let g = piecewise_uniform_grid(&[0.0, 0.63, 1.63, 2.26], 100);
        for b in [0.63, 1.63, 2.26] {
            assert!(g.contains(&b));
        }
        assert!(g.windows(2).all(|w| w[1] > w[0]));
    }
}
