//! Real Pauli-coefficient representation of 2×2 Hermitian operators and the
//! symmetry-axis frame built on it.

use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::Matrix2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

pub type Mat2 = Matrix2<C64>;

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

/// `c0·σ0 + cx·σx + cy·σy + cz·σz` with real coefficients.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct HermitianOperator2 {
    pub c0: f64,
    pub cx: f64,
    pub cy: f64,
    pub cz: f64,
}

impl HermitianOperator2 {
    pub const ZERO: Self = Self::new(0.0, 0.0, 0.0, 0.0);
    pub const IDENTITY: Self = Self::new(1.0, 0.0, 0.0, 0.0);
    pub const SIGMA_X: Self = Self::new(0.0, 1.0, 0.0, 0.0);
    pub const SIGMA_Y: Self = Self::new(0.0, 0.0, 1.0, 0.0);
    pub const SIGMA_Z: Self = Self::new(0.0, 0.0, 0.0, 1.0);

    pub const fn new(c0: f64, cx: f64, cy: f64, cz: f64) -> Self {
        Self { c0, cx, cy, cz }
    }

    pub fn from_vector(c0: f64, v: [f64; 3]) -> Self {
        Self::new(c0, v[0], v[1], v[2])
    }

    /// The traceless part `(cx, cy, cz)`.
    pub fn vector(&self) -> [f64; 3] {
        [self.cx, self.cy, self.cz]
    }

    /// `|(cx, cy, cz)|`, half the spectral gap.
    pub fn field_strength(&self) -> f64 {
        self.cx.hypot(self.cy).hypot(self.cz)
    }

    /// Eigenvalues `(c0 − |c|, c0 + |c|)`.
    pub fn eigenvalues(&self) -> (f64, f64) {
        let r = self.field_strength();
        (self.c0 - r, self.c0 + r)
    }

    pub fn matrix(&self) -> Mat2 {
        Mat2::new(
            C64::new(self.c0 + self.cz, 0.0),
            C64::new(self.cx, -self.cy),
            C64::new(self.cx, self.cy),
            C64::new(self.c0 - self.cz, 0.0),
        )
    }

    /// Projects an arbitrary 2×2 matrix onto its Hermitian part.
    pub fn from_matrix(m: &Mat2) -> Self {
        let c0 = 0.5 * (m[(0, 0)].re + m[(1, 1)].re);
        let cz = 0.5 * (m[(0, 0)].re - m[(1, 1)].re);
        let cx = 0.5 * (m[(1, 0)].re + m[(0, 1)].re);
        let cy = 0.5 * (m[(1, 0)].im - m[(0, 1)].im);
        Self::new(c0, cx, cy, cz)
    }

    pub fn scaled(&self, s: f64) -> Self {
        Self::new(self.c0 * s, self.cx * s, self.cy * s, self.cz * s)
    }
}

impl Add for HermitianOperator2 {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        Self::new(self.c0 + o.c0, self.cx + o.cx, self.cy + o.cy, self.cz + o.cz)
    }
}

impl Sub for HermitianOperator2 {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for HermitianOperator2 {
    type Output = Self;
    fn neg(self) -> Self {
        self.scaled(-1.0)
    }
}

impl Mul<f64> for HermitianOperator2 {
    type Output = Self;
    fn mul(self, s: f64) -> Self {
        self.scaled(s)
    }
}

/// Fixed Pauli matrices as complex 2×2 matrices.
pub fn sigma_x() -> Mat2 {
    Mat2::new(ZERO, ONE, ONE, ZERO)
}

pub fn sigma_y() -> Mat2 {
    Mat2::new(ZERO, -I, I, ZERO)
}

pub fn sigma_z() -> Mat2 {
    Mat2::new(ONE, ZERO, ZERO, -ONE)
}

/// Direction `(θ, φ)` of the operator σ_r entering the chiral-mirror-like
/// constraint `H(t) = −σ_r H(T−t) σ_r`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SymmetryAxis {
    pub theta: f64,
    pub phi: f64,
}

impl Default for SymmetryAxis {
    fn default() -> Self {
        Self::Z
    }
}

impl SymmetryAxis {
    pub const Z: Self = Self { theta: 0.0, phi: 0.0 };

    pub const fn new(theta: f64, phi: f64) -> Self {
        Self { theta, phi }
    }

    /// `r̂ = (sinθ cosφ, sinθ sinφ, cosθ)`.
    pub fn unit_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [st * cp, st * sp, ct]
    }

    /// `θ̂ = (cosθ cosφ, cosθ sinφ, −sinθ)`.
    pub fn theta_vector(&self) -> [f64; 3] {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        [ct * cp, ct * sp, -st]
    }

    /// `φ̂ = (−sinφ, cosφ, 0)`.
    pub fn phi_vector(&self) -> [f64; 3] {
        let (sp, cp) = self.phi.sin_cos();
        [-sp, cp, 0.0]
    }

    /// σ_r as a Pauli-coefficient operator.
    pub fn sigma_r(&self) -> HermitianOperator2 {
        pauli_axis(*self)
    }

    /// Maps rotated-frame coefficients `(d0, dθ, dφ, dr)` to Cartesian ones.
    pub fn to_cartesian(&self, d: [f64; 4]) -> HermitianOperator2 {
        let (th, ph, r) = (self.theta_vector(), self.phi_vector(), self.unit_vector());
        let v = [0, 1, 2].map(|k| d[1] * th[k] + d[2] * ph[k] + d[3] * r[k]);
        HermitianOperator2::from_vector(d[0], v)
    }

    /// Projects a Cartesian operator onto `(σ0, σθ, σφ, σr)`.
    pub fn to_rotated(&self, h: &HermitianOperator2) -> [f64; 4] {
        let c = h.vector();
        [
            h.c0,
            dot(&c, &self.theta_vector()),
            dot(&c, &self.phi_vector()),
            dot(&c, &self.unit_vector()),
        ]
    }
}

fn dot(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

/// `σ_r = sinθ cosφ σx + sinθ sinφ σy + cosθ σz`.
pub fn pauli_axis(axis: SymmetryAxis) -> HermitianOperator2 {
    HermitianOperator2::from_vector(0.0, axis.unit_vector())
}

/// The rotated Pauli frame `(σθ, σφ, σr)`.
pub fn rotated_frame(
    axis: SymmetryAxis,
) -> (HermitianOperator2, HermitianOperator2, HermitianOperator2) {
    (
        HermitianOperator2::from_vector(0.0, axis.theta_vector()),
        HermitianOperator2::from_vector(0.0, axis.phi_vector()),
        pauli_axis(axis),
    )
}
