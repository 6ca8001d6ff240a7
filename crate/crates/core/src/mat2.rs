//! Exact-size complex 2×2 linear algebra.
//!
//! Hamiltonians live in Pauli-coefficient form (`a0·I + ax·σx + ay·σy + az·σz`)
//! so Hermiticity holds by construction. Unitaries are stored as a global
//! phase times an SU(2) matrix `[[u11, -u21*], [u21, u11*]]`. Density
//! matrices are kept as full matrices.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{OttoError, Result};
use crate::model::units::HBAR;

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// A two-component complex column vector.
pub type Ket = [C64; 2];

const ZERO: C64 = C64::new(0.0, 0.0);
const ONE: C64 = C64::new(1.0, 0.0);

/// Relative threshold under which a Hamiltonian is treated as degenerate.
pub const DEGENERACY_THRESHOLD: f64 = 1e-14;

/// Tolerance on `|u11|² + |u21|² = 1`.
pub const UNITARY_NORM_TOL: f64 = 1e-12;

/// Tolerance on trace, Hermiticity and positivity of density matrices.
pub const DENSITY_TOL: f64 = 1e-12;

/// General complex 2×2 matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2(pub [[C64; 2]; 2]);

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2([[ONE, ZERO], [ZERO, ONE]]);
    pub const ZERO: Mat2 = Mat2([[ZERO, ZERO], [ZERO, ZERO]]);

    pub fn new(m11: C64, m12: C64, m21: C64, m22: C64) -> Self {
        Mat2([[m11, m12], [m21, m22]])
    }

    /// `|a⟩⟨b|`
    pub fn outer(a: &Ket, b: &Ket) -> Self {
        Mat2([
            [a[0] * b[0].conj(), a[0] * b[1].conj()],
            [a[1] * b[0].conj(), a[1] * b[1].conj()],
        ])
    }

    pub fn get(&self, row: usize, col: usize) -> C64 {
        self.0[row][col]
    }

    pub fn dagger(&self) -> Self {
        let m = &self.0;
        Mat2([
            [m[0][0].conj(), m[1][0].conj()],
            [m[0][1].conj(), m[1][1].conj()],
        ])
    }

    pub fn trace(&self) -> C64 {
        self.0[0][0] + self.0[1][1]
    }

    pub fn scale(&self, s: C64) -> Self {
        let m = &self.0;
        Mat2([[m[0][0] * s, m[0][1] * s], [m[1][0] * s, m[1][1] * s]])
    }

    pub fn apply(&self, v: &Ket) -> Ket {
        let m = &self.0;
        [
            m[0][0] * v[0] + m[0][1] * v[1],
            m[1][0] * v[0] + m[1][1] * v[1],
        ]
    }

    /// `⟨a|M|b⟩`
    pub fn sandwich(&self, a: &Ket, b: &Ket) -> C64 {
        let mb = self.apply(b);
        a[0].conj() * mb[0] + a[1].conj() * mb[1]
    }

    /// Largest entry modulus.
    pub fn max_norm(&self) -> f64 {
        self.0
            .iter()
            .flatten()
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Expresses the matrix in the orthonormal basis `{b0, b1}`:
    /// entry `(i, j)` is `⟨b_i|M|b_j⟩`.
    pub fn in_basis(&self, b0: &Ket, b1: &Ket) -> Self {
        Mat2([
            [self.sandwich(b0, b0), self.sandwich(b0, b1)],
            [self.sandwich(b1, b0), self.sandwich(b1, b1)],
        ])
    }
}

impl Mul for Mat2 {
    type Output = Mat2;

    fn mul(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [
                a[0][0] * b[0][0] + a[0][1] * b[1][0],
                a[0][0] * b[0][1] + a[0][1] * b[1][1],
            ],
            [
                a[1][0] * b[0][0] + a[1][1] * b[1][0],
                a[1][0] * b[0][1] + a[1][1] * b[1][1],
            ],
        ])
    }
}

impl Add for Mat2 {
    type Output = Mat2;

    fn add(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2 {
    type Output = Mat2;

    fn sub(self, rhs: Mat2) -> Mat2 {
        let (a, b) = (&self.0, &rhs.0);
        Mat2([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

/// Hermitian operator `a0·I + ax·σx + ay·σy + az·σz`.
///
/// Coefficients carry energy units (h·Hz in this crate).
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct HermitianOp {
    pub a0: f64,
    pub ax: f64,
    pub ay: f64,
    pub az: f64,
}

impl HermitianOp {
    pub const fn new(a0: f64, ax: f64, ay: f64, az: f64) -> Self {
        HermitianOp { a0, ax, ay, az }
    }

    pub const fn pauli_x() -> Self {
        HermitianOp::new(0.0, 1.0, 0.0, 0.0)
    }

    pub const fn pauli_y() -> Self {
        HermitianOp::new(0.0, 0.0, 1.0, 0.0)
    }

    pub const fn pauli_z() -> Self {
        HermitianOp::new(0.0, 0.0, 0.0, 1.0)
    }

    /// Length of the Pauli vector `(ax, ay, az)`; half the level splitting.
    pub fn magnitude(&self) -> f64 {
        (self.ax * self.ax + self.ay * self.ay + self.az * self.az).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        [self.a0, self.ax, self.ay, self.az]
            .iter()
            .all(|c| c.is_finite())
    }

    pub fn scaled(&self, s: f64) -> Self {
        HermitianOp::new(self.a0 * s, self.ax * s, self.ay * s, self.az * s)
    }

    pub fn to_mat2(&self) -> Mat2 {
        Mat2::new(
            C64::new(self.a0 + self.az, 0.0),
            C64::new(self.ax, -self.ay),
            C64::new(self.ax, self.ay),
            C64::new(self.a0 - self.az, 0.0),
        )
    }
}

impl Neg for HermitianOp {
    type Output = HermitianOp;

    fn neg(self) -> HermitianOp {
        HermitianOp::new(-self.a0, -self.ax, -self.ay, -self.az)
    }
}

impl Add for HermitianOp {
    type Output = HermitianOp;

    fn add(self, rhs: HermitianOp) -> HermitianOp {
        HermitianOp::new(
            self.a0 + rhs.a0,
            self.ax + rhs.ax,
            self.ay + rhs.ay,
            self.az + rhs.az,
        )
    }
}

/// Unitary `e^{iφ}·[[u11, -u21*], [u21, u11*]]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnitaryOp {
    pub phase: f64,
    pub u11: C64,
    pub u21: C64,
}

impl UnitaryOp {
    pub const IDENTITY: UnitaryOp = UnitaryOp {
        phase: 0.0,
        u11: ONE,
        u21: ZERO,
    };

    /// Builds an SU(2) element, checking `|u11|² + |u21|² = 1`.
    pub fn new(u11: C64, u21: C64) -> Result<Self> {
        Self::with_phase(0.0, u11, u21)
    }

    pub fn with_phase(phase: f64, u11: C64, u21: C64) -> Result<Self> {
        let u = UnitaryOp { phase, u11, u21 };
        let defect = (u.column_norm_sqr() - 1.0).abs();
        if !(defect <= UNITARY_NORM_TOL) || !phase.is_finite() {
            return Err(OttoError::Invariant(format!(
                "|u11|^2 + |u21|^2 deviates from 1 by {defect:e}"
            )));
        }
        Ok(u)
    }

    pub(crate) fn from_parts(phase: f64, u11: C64, u21: C64) -> Self {
        UnitaryOp { phase, u11, u21 }
    }

    pub fn column_norm_sqr(&self) -> f64 {
        self.u11.norm_sqr() + self.u21.norm_sqr()
    }

    pub fn dagger(&self) -> Self {
        UnitaryOp {
            phase: -self.phase,
            u11: self.u11.conj(),
            u21: -self.u21,
        }
    }

    /// SU(2) part without the global phase.
    pub fn su2(&self) -> Mat2 {
        Mat2::new(self.u11, -self.u21.conj(), self.u21, self.u11.conj())
    }

    pub fn to_mat2(&self) -> Mat2 {
        if self.phase == 0.0 {
            self.su2()
        } else {
            self.su2().scale(C64::from_polar(1.0, self.phase))
        }
    }

    /// `max |U†U − I|`.
    pub fn unitarity_defect(&self) -> f64 {
        let m = self.to_mat2();
        (m.dagger() * m - Mat2::IDENTITY).max_norm()
    }

    pub fn is_finite(&self) -> bool {
        self.phase.is_finite()
            && [self.u11, self.u21]
                .iter()
                .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// `U ρ U†`
    pub fn conjugate(&self, rho: &Mat2) -> Mat2 {
        // The global phase cancels.
        let u = self.su2();
        u * *rho * u.dagger()
    }
}

impl Mul for UnitaryOp {
    type Output = UnitaryOp;

    fn mul(self, rhs: UnitaryOp) -> UnitaryOp {
        let (a, b) = (self.u11, self.u21);
        let (c, d) = (rhs.u11, rhs.u21);
        UnitaryOp {
            phase: self.phase + rhs.phase,
            u11: a * c - b.conj() * d,
            u21: b * c + a.conj() * d,
        }
    }
}

/// Qubit density matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityOp(Mat2);

impl DensityOp {
    /// Validates trace, Hermiticity and positivity to [`DENSITY_TOL`].
    pub fn new(m: Mat2) -> Result<Self> {
        if !m.is_finite() {
            return Err(OttoError::Invariant("non-finite density matrix".into()));
        }
        let tr = m.trace();
        if (tr.re - 1.0).abs() > DENSITY_TOL || tr.im.abs() > DENSITY_TOL {
            return Err(OttoError::Invariant(format!("density trace {tr} != 1")));
        }
        let herm = (m - m.dagger()).max_norm();
        if herm > DENSITY_TOL {
            return Err(OttoError::Invariant(format!(
                "density matrix not Hermitian (defect {herm:e})"
            )));
        }
        let d = DensityOp(m);
        let lowest = d.min_eigenvalue();
        if lowest < -DENSITY_TOL {
            return Err(OttoError::Invariant(format!(
                "density matrix has negative eigenvalue {lowest:e}"
            )));
        }
        Ok(d)
    }

    pub fn maximally_mixed() -> Self {
        DensityOp(Mat2::IDENTITY.scale(C64::new(0.5, 0.0)))
    }

    /// `|ψ⟩⟨ψ|` for a normalized ket.
    pub fn pure(psi: &Ket) -> Result<Self> {
        DensityOp::new(Mat2::outer(psi, psi))
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let m = &self.0 .0;
        let mean = 0.5 * (m[0][0].re + m[1][1].re);
        let half_diff = 0.5 * (m[0][0].re - m[1][1].re);
        mean - (half_diff * half_diff + m[0][1].norm_sqr()).sqrt()
    }

    /// `U ρ U†`
    pub fn evolve(&self, u: &UnitaryOp) -> Result<Self> {
        DensityOp::new(u.conjugate(&self.0))
    }

    /// `⟨ψ|ρ|ψ⟩`
    pub fn expectation(&self, psi: &Ket) -> f64 {
        self.0.sandwich(psi, psi).re
    }
}

/// Eigen-decomposition of a 2×2 Hermitian operator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenPair {
    pub e_plus: f64,
    pub e_minus: f64,
    pub psi_plus: Ket,
    pub psi_minus: Ket,
    /// Set when the splitting was below [`DEGENERACY_THRESHOLD`]; the
    /// vectors are then the computational basis.
    pub degenerate: bool,
}

impl EigenPair {
    /// Returns `self` or a degeneracy error.
    pub fn require_nondegenerate(self, h: &HermitianOp) -> Result<Self> {
        if self.degenerate {
            Err(OttoError::DegenerateHamiltonian {
                magnitude: h.magnitude(),
            })
        } else {
            Ok(self)
        }
    }

    /// Half the level splitting, `(e+ − e−)/2`.
    pub fn half_gap(&self) -> f64 {
        0.5 * (self.e_plus - self.e_minus)
    }
}

/// Rotates `v` so that its first nonzero component is real and positive.
fn fix_phase(v: Ket) -> Ket {
    let pivot = if v[0].norm() > 0.0 { v[0] } else { v[1] };
    let norm = (v[0].norm_sqr() + v[1].norm_sqr()).sqrt();
    let rot = pivot.conj() / (pivot.norm() * norm);
    [v[0] * rot, v[1] * rot]
}

/// Closed-form eigendecomposition: `e± = a0 ± |a|`.
pub fn eig_herm2(h: &HermitianOp) -> EigenPair {
    let r = h.magnitude();
    if r < DEGENERACY_THRESHOLD * h.a0.abs().max(1.0) {
        return EigenPair {
            e_plus: h.a0 + r,
            e_minus: h.a0 - r,
            psi_plus: [ONE, ZERO],
            psi_minus: [ZERO, ONE],
            degenerate: true,
        };
    }
    let (ax, ay, az) = (h.ax, h.ay, h.az);
    // Pick the unnormalized form whose pivot is at least r in modulus.
    let (plus, minus) = if az >= 0.0 {
        (
            [C64::new(r + az, 0.0), C64::new(ax, ay)],
            [C64::new(ax, -ay), C64::new(-r - az, 0.0)],
        )
    } else {
        (
            [C64::new(ax, -ay), C64::new(r - az, 0.0)],
            [C64::new(az - r, 0.0), C64::new(ax, ay)],
        )
    };
    EigenPair {
        e_plus: h.a0 + r,
        e_minus: h.a0 - r,
        psi_plus: fix_phase(plus),
        psi_minus: fix_phase(minus),
        degenerate: false,
    }
}

/// `exp(−i·H·dt/ħ)`, with `dt` in seconds and `H` in h·Hz.
pub fn expm_i_herm2(h: &HermitianOp, dt: f64) -> UnitaryOp {
    let r = h.magnitude();
    let theta = r * dt / HBAR;
    let phase = -h.a0 * dt / HBAR;
    if r == 0.0 {
        return UnitaryOp::from_parts(phase, ONE, ZERO);
    }
    let (s, c) = theta.sin_cos();
    let k = s / r;
    // cos θ·I − i sin θ·(n·σ): first column is (cos θ − i sin θ nz, −i sin θ (nx + i ny)).
    UnitaryOp::from_parts(phase, C64::new(c, -k * h.az), C64::new(k * h.ay, -k * h.ax))
}

/// `Tr[A·B]`
pub fn trace_prod(a: &Mat2, b: &Mat2) -> C64 {
    let (x, y) = (&a.0, &b.0);
    x[0][0] * y[0][0] + x[0][1] * y[1][0] + x[1][0] * y[0][1] + x[1][1] * y[1][1]
}

/// `Tr[ρ·H]` as a real number; errors when the imaginary residue exceeds
/// `1e-12` relative to the operator scale.
pub fn expectation(rho: &DensityOp, h: &HermitianOp) -> Result<f64> {
    let z = trace_prod(rho.matrix(), &h.to_mat2());
    let scale = (h.a0.abs() + h.magnitude()).max(1.0);
    if z.im.abs() > 1e-12 * scale {
        return Err(OttoError::Invariant(format!(
            "Tr[rho H] has imaginary part {:e}",
            z.im
        )));
    }
    Ok(z.re)
}

pub fn inner(a: &Ket, b: &Ket) -> C64 {
    a[0].conj() * b[0] + a[1].conj() * b[1]
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::f64::consts::{FRAC_1_SQRT_2, PI};

    fn close(a: C64, b: C64, tol: f64) -> bool {
        (a - b).norm() < tol
    }

    fn residual(h: &HermitianOp, e: f64, psi: &Ket) -> f64 {
        let hv = h.to_mat2().apply(psi);
        ((hv[0] - psi[0] * e).norm()).max((hv[1] - psi[1] * e).norm())
    }

    #[test]
    fn sigma_z_eigenvectors() {
        let eig = eig_herm2(&HermitianOp::pauli_z());
        assert_eq!((eig.e_plus, eig.e_minus), (1.0, -1.0));
        assert_eq!(eig.psi_plus, [ONE, ZERO]);
        assert_eq!(eig.psi_minus, [ZERO, ONE]);
        assert!(!eig.degenerate);
    }

    #[test]
    fn sigma_x_eigenvectors() {
        let eig = eig_herm2(&HermitianOp::pauli_x());
        let s = C64::new(FRAC_1_SQRT_2, 0.0);
        assert!(close(eig.psi_plus[0], s, 1e-15) && close(eig.psi_plus[1], s, 1e-15));
        assert!(close(eig.psi_minus[0], s, 1e-15) && close(eig.psi_minus[1], -s, 1e-15));
    }

    #[test]
    fn sigma_y_eigenvectors_have_real_positive_pivot() {
        let eig = eig_herm2(&HermitianOp::pauli_y().scaled(-1800.0));
        for psi in [eig.psi_plus, eig.psi_minus] {
            assert!(psi[0].im == 0.0 && psi[0].re > 0.0);
            assert!((psi[1].norm() - FRAC_1_SQRT_2).abs() < 1e-15);
            assert!(psi[1].re.abs() < 1e-15);
        }
    }

    #[test]
    fn degenerate_operator_is_flagged() {
        let h = HermitianOp::new(3.0, 0.0, 0.0, 0.0);
        let eig = eig_herm2(&h);
        assert!(eig.degenerate);
        assert_eq!(eig.e_plus, 3.0);
        assert!(eig.require_nondegenerate(&h).is_err());
    }

    #[test]
    fn expm_of_zero_is_identity() {
        let u = expm_i_herm2(&HermitianOp::default(), 0.37);
        assert_eq!(u, UnitaryOp::IDENTITY);
    }

    #[test]
    fn expm_sigma_z_half_turn() {
        // theta = r dt / hbar = pi  →  dt = pi hbar = 1/2.
        let u = expm_i_herm2(&HermitianOp::pauli_z(), 0.5).to_mat2();
        let expect = Mat2::new(C64::new(-1.0, 0.0), ZERO, ZERO, C64::new(-1.0, 0.0));
        assert!((u - expect).max_norm() < 1e-15);
        // quarter turn gives diag(-i, i)
        let u = expm_i_herm2(&HermitianOp::pauli_z(), 0.25).to_mat2();
        let expect = Mat2::new(-C64::i(), ZERO, ZERO, C64::i());
        assert!((u - expect).max_norm() < 1e-15);
    }

    #[test]
    fn expm_keeps_identity_phase() {
        let h = HermitianOp::new(2.0, 0.0, 0.0, 0.0);
        let u = expm_i_herm2(&h, 0.1).to_mat2();
        let z = C64::from_polar(1.0, -2.0 * 0.1 * 2.0 * PI);
        assert!((u - Mat2::IDENTITY.scale(z)).max_norm() < 1e-15);
    }

    #[test]
    fn trace_examples() {
        let half = DensityOp::maximally_mixed();
        assert_eq!(expectation(&half, &HermitianOp::pauli_z()).unwrap(), 0.0);
        let rho = DensityOp::pure(&[C64::new(0.6, 0.0), C64::new(0.0, 0.8)]).unwrap();
        let id = HermitianOp::new(1.0, 0.0, 0.0, 0.0);
        assert!((expectation(&rho, &id).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn density_validation_rejects_bad_matrices() {
        let not_unit_trace = Mat2::IDENTITY;
        assert!(DensityOp::new(not_unit_trace).is_err());
        let negative = Mat2::new(C64::new(1.5, 0.0), ZERO, ZERO, C64::new(-0.5, 0.0));
        assert!(DensityOp::new(negative).is_err());
        let skew = Mat2::new(
            C64::new(0.5, 0.0),
            C64::new(0.1, 0.0),
            ZERO,
            C64::new(0.5, 0.0),
        );
        assert!(DensityOp::new(skew).is_err());
    }

    #[test]
    fn unitary_constructor_checks_norm() {
        assert!(UnitaryOp::new(C64::new(0.6, 0.0), C64::new(0.0, 0.8)).is_ok());
        assert!(UnitaryOp::new(C64::new(0.6, 0.0), C64::new(0.0, 0.9)).is_err());
    }

    fn hermitian() -> impl Strategy<Value = HermitianOp> {
        (-5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64, -5.0..5.0f64)
            .prop_map(|(a0, ax, ay, az)| HermitianOp::new(a0, ax, ay, az))
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(10_000))]

        #[test]
        fn eigen_residual_and_orthonormality(h in hermitian()) {
            let eig = eig_herm2(&h);
            prop_assume!(!eig.degenerate);
            prop_assert!(eig.e_plus >= eig.e_minus);
            let tol = 1e-10 * eig.e_plus.abs().max(eig.e_minus.abs()).max(1e-300);
            prop_assert!(residual(&h, eig.e_plus, &eig.psi_plus) <= tol.max(1e-14));
            prop_assert!(residual(&h, eig.e_minus, &eig.psi_minus) <= tol.max(1e-14));
            prop_assert!((inner(&eig.psi_plus, &eig.psi_plus).re - 1.0).abs() < 1e-12);
            prop_assert!((inner(&eig.psi_minus, &eig.psi_minus).re - 1.0).abs() < 1e-12);
            prop_assert!(inner(&eig.psi_plus, &eig.psi_minus).norm() < 1e-12);
        }
    }

    proptest! {
        #[test]
        fn expm_is_unitary(h in hermitian(), dt in -3.0..3.0f64) {
            let u = expm_i_herm2(&h, dt).to_mat2();
            prop_assert!((u * u.dagger() - Mat2::IDENTITY).max_norm() < 1e-13);
        }

        #[test]
        fn expm_composes_additively(h in hermitian(), dt1 in -1.0..1.0f64, dt2 in -1.0..1.0f64) {
            let lhs = (expm_i_herm2(&h, dt1) * expm_i_herm2(&h, dt2)).to_mat2();
            let rhs = expm_i_herm2(&h, dt1 + dt2).to_mat2();
            prop_assert!((lhs - rhs).max_norm() < 1e-12);
        }

        #[test]
        fn su2_product_matches_dense_product(
            h1 in hermitian(), h2 in hermitian(), dt in -1.0..1.0f64,
        ) {
            let a = expm_i_herm2(&h1, dt);
            let b = expm_i_herm2(&h2, dt);
            let dense = a.to_mat2() * b.to_mat2();
            prop_assert!(((a * b).to_mat2() - dense).max_norm() < 1e-13);
            prop_assert!((a.dagger().to_mat2() - a.to_mat2().dagger()).max_norm() < 1e-15);
        }
    }
}
