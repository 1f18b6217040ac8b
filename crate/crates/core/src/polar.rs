//! Single-photon polarization algebra in the H/V basis.
//!
//! Index 0 is H, index 1 is V. The diagonal states are
//! `|P> = (|H> + |V>)/√2` and `|M> = (|H> - |V>)/√2`, so the PM Stokes
//! operator is the Pauli X matrix and the HV Stokes operator is Pauli Z.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Absolute tolerance for exact-algebra checks on 2x2 problems.
pub const EXACT_TOL: f64 = 1e-12;

/// Default lower bound on `|<m_f|psi_i>|` before a weak value is refused.
pub const DEFAULT_OVERLAP_THRESHOLD: f64 = 1e-12;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn re(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}

/// A plane angle. Stored in radians; constructed from and reported in
/// degrees at every external boundary.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Angle(f64);

impl Angle {
    pub fn from_degrees(deg: f64) -> Self {
        Angle(deg.to_radians())
    }

    pub fn from_radians(rad: f64) -> Self {
        Angle(rad)
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0.to_degrees()
    }

    pub fn is_finite(self) -> bool {
        self.0.is_finite()
    }
}

impl Neg for Angle {
    type Output = Angle;
    fn neg(self) -> Angle {
        Angle(-self.0)
    }
}

impl fmt::Display for Angle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}°", self.degrees())
    }
}

/// A normalized polarization state `c_h |H> + c_v |V>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PureState {
    c_h: Complex64,
    c_v: Complex64,
}

impl PureState {
    /// Builds a state from (possibly unnormalized) amplitudes.
    pub fn new(c_h: Complex64, c_v: Complex64) -> Result<Self> {
        let norm = (c_h.norm_sqr() + c_v.norm_sqr()).sqrt();
        if !norm.is_finite() || norm <= f64::EPSILON {
            return Err(Error::InvalidState(format!(
                "amplitudes ({c_h}, {c_v}) cannot be normalized"
            )));
        }
        Ok(PureState {
            c_h: c_h / norm,
            c_v: c_v / norm,
        })
    }

    pub fn from_real(c_h: f64, c_v: f64) -> Result<Self> {
        Self::new(re(c_h), re(c_v))
    }

    pub fn h() -> Self {
        PureState { c_h: ONE, c_v: ZERO }
    }

    pub fn v() -> Self {
        PureState { c_h: ZERO, c_v: ONE }
    }

    pub fn p() -> Self {
        let a = re(std::f64::consts::FRAC_1_SQRT_2);
        PureState { c_h: a, c_v: a }
    }

    pub fn m() -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        PureState {
            c_h: re(a),
            c_v: re(-a),
        }
    }

    pub fn c_h(&self) -> Complex64 {
        self.c_h
    }

    pub fn c_v(&self) -> Complex64 {
        self.c_v
    }

    /// `<self|other>`.
    pub fn inner(&self, other: &PureState) -> Complex64 {
        self.c_h.conj() * other.c_h + self.c_v.conj() * other.c_v
    }

    /// `|self><self|`.
    pub fn projector(&self) -> Operator2 {
        Operator2::outer(self, self)
    }

    pub fn density(&self) -> DensityMatrix {
        DensityMatrix(self.projector())
    }

    /// Copy with the global phase fixed so the first nonzero amplitude is
    /// real and non-negative. Display only; nothing else depends on phase.
    pub fn canonical(&self) -> PureState {
        let lead = if self.c_h.norm() > EXACT_TOL { self.c_h } else { self.c_v };
        let phase = lead.conj() / lead.norm();
        PureState {
            c_h: self.c_h * phase,
            c_v: self.c_v * phase,
        }
    }

    /// True when both states describe the same ray (equal up to global phase).
    pub fn same_ray(&self, other: &PureState, tol: f64) -> bool {
        (1.0 - self.inner(other).norm()).abs() <= tol
    }
}

impl fmt::Display for PureState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let c = self.canonical();
        write!(f, "({})|H> + ({})|V>", c.c_h, c.c_v)
    }
}

/// Input state used throughout the experiment: `C_H = sin φ`, `C_V = cos φ`.
pub fn input_state(phi: Angle) -> PureState {
    let (s, c) = phi.radians().sin_cos();
    PureState {
        c_h: re(s),
        c_v: re(c),
    }
}

/// A 2x2 complex matrix in the H/V basis, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Operator2 {
    m: [[Complex64; 2]; 2],
}

impl Operator2 {
    pub fn new(m: [[Complex64; 2]; 2]) -> Self {
        Operator2 { m }
    }

    pub fn from_real(m: [[f64; 2]; 2]) -> Self {
        Operator2 {
            m: [[re(m[0][0]), re(m[0][1])], [re(m[1][0]), re(m[1][1])]],
        }
    }

    pub fn zero() -> Self {
        Operator2 { m: [[ZERO; 2]; 2] }
    }

    pub fn identity() -> Self {
        Operator2 {
            m: [[ONE, ZERO], [ZERO, ONE]],
        }
    }

    /// `S_PM = |P><P| - |M><M|`.
    pub fn s_pm() -> Self {
        Operator2::from_real([[0.0, 1.0], [1.0, 0.0]])
    }

    /// `S_HV = |H><H| - |V><V|`.
    pub fn s_hv() -> Self {
        Operator2::from_real([[1.0, 0.0], [0.0, -1.0]])
    }

    /// `|ket><bra|`.
    pub fn outer(ket: &PureState, bra: &PureState) -> Self {
        let k = [ket.c_h, ket.c_v];
        let b = [bra.c_h.conj(), bra.c_v.conj()];
        Operator2 {
            m: [[k[0] * b[0], k[0] * b[1]], [k[1] * b[0], k[1] * b[1]]],
        }
    }

    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.m[row][col]
    }

    pub fn entries(&self) -> [[Complex64; 2]; 2] {
        self.m
    }

    pub fn adjoint(&self) -> Self {
        let m = &self.m;
        Operator2 {
            m: [
                [m[0][0].conj(), m[1][0].conj()],
                [m[0][1].conj(), m[1][1].conj()],
            ],
        }
    }

    pub fn trace(&self) -> Complex64 {
        self.m[0][0] + self.m[1][1]
    }

    pub fn scale(&self, k: f64) -> Self {
        self.scale_complex(re(k))
    }

    pub fn scale_complex(&self, k: Complex64) -> Self {
        let m = &self.m;
        Operator2 {
            m: [[m[0][0] * k, m[0][1] * k], [m[1][0] * k, m[1][1] * k]],
        }
    }

    /// Amplitudes of `self |psi>` (not renormalized).
    pub fn apply(&self, psi: &PureState) -> [Complex64; 2] {
        [
            self.m[0][0] * psi.c_h + self.m[0][1] * psi.c_v,
            self.m[1][0] * psi.c_h + self.m[1][1] * psi.c_v,
        ]
    }

    /// `<bra|self|ket>`.
    pub fn sandwich(&self, bra: &PureState, ket: &PureState) -> Complex64 {
        let v = self.apply(ket);
        bra.c_h.conj() * v[0] + bra.c_v.conj() * v[1]
    }

    /// `self * rho * self^dagger`.
    pub fn conjugate(&self, rho: &Operator2) -> Operator2 {
        *self * *rho * self.adjoint()
    }

    /// Largest absolute entry-wise difference.
    pub fn max_abs_diff(&self, other: &Operator2) -> f64 {
        let mut d: f64 = 0.0;
        for r in 0..2 {
            for c in 0..2 {
                d = d.max((self.m[r][c] - other.m[r][c]).norm());
            }
        }
        d
    }

    pub fn approx_eq(&self, other: &Operator2, tol: f64) -> bool {
        self.max_abs_diff(other) <= tol
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.approx_eq(&self.adjoint(), tol)
    }

    pub fn is_unitary(&self, tol: f64) -> bool {
        (self.adjoint() * *self).approx_eq(&Operator2::identity(), tol)
    }

    /// Eigenvalues of the Hermitian part, ascending.
    pub fn hermitian_eigenvalues(&self) -> [f64; 2] {
        let a = self.m[0][0].re;
        let d = self.m[1][1].re;
        let b = (self.m[0][1] + self.m[1][0].conj()) * 0.5;
        let mean = 0.5 * (a + d);
        let radius = (0.25 * (a - d) * (a - d) + b.norm_sqr()).sqrt();
        [mean - radius, mean + radius]
    }

    pub fn is_psd(&self, tol: f64) -> bool {
        self.hermitian_eigenvalues()[0] >= -tol
    }
}

impl Add for Operator2 {
    type Output = Operator2;
    fn add(self, rhs: Operator2) -> Operator2 {
        let mut m = self.m;
        for (row, rrow) in m.iter_mut().zip(rhs.m.iter()) {
            for (x, y) in row.iter_mut().zip(rrow.iter()) {
                *x += *y;
            }
        }
        Operator2 { m }
    }
}

impl Sub for Operator2 {
    type Output = Operator2;
    fn sub(self, rhs: Operator2) -> Operator2 {
        self + rhs.scale(-1.0)
    }
}

impl Mul for Operator2 {
    type Output = Operator2;
    fn mul(self, rhs: Operator2) -> Operator2 {
        let a = &self.m;
        let b = &rhs.m;
        let mut m = [[ZERO; 2]; 2];
        for (r, row) in m.iter_mut().enumerate() {
            for (c, x) in row.iter_mut().enumerate() {
                *x = a[r][0] * b[0][c] + a[r][1] * b[1][c];
            }
        }
        Operator2 { m }
    }
}

/// Half-wave plate at angle θ: `[[cos 2θ, sin 2θ], [sin 2θ, -cos 2θ]]`.
pub fn hwp_jones(theta: Angle) -> Operator2 {
    let (s, c) = (2.0 * theta.radians()).sin_cos();
    Operator2::from_real([[c, s], [s, -c]])
}

/// A Hermitian, positive semidefinite 2x2 matrix.
///
/// Normalized states have unit trace. Branch outputs of the measurement
/// carry their outcome probability as the trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityMatrix(Operator2);

impl DensityMatrix {
    /// Validates a unit-trace density matrix.
    pub fn new(op: Operator2) -> Result<Self> {
        let rho = Self::new_unnormalized(op)?;
        let tr = rho.trace();
        if (tr - 1.0).abs() > EXACT_TOL {
            return Err(Error::InvalidState(format!("trace {tr} is not 1")));
        }
        Ok(rho)
    }

    /// Validates a Hermitian PSD matrix with trace in `[0, 1]`.
    pub fn new_unnormalized(op: Operator2) -> Result<Self> {
        if !op.entries().iter().flatten().all(|z| z.re.is_finite() && z.im.is_finite()) {
            return Err(Error::InvalidState("non-finite entry".into()));
        }
        if !op.is_hermitian(EXACT_TOL) {
            return Err(Error::InvalidState("matrix is not Hermitian".into()));
        }
        let ev = op.hermitian_eigenvalues();
        if ev[0] < -EXACT_TOL {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                ev[0]
            )));
        }
        let tr = op.trace().re;
        if tr > 1.0 + EXACT_TOL {
            return Err(Error::InvalidState(format!("trace {tr} exceeds 1")));
        }
        Ok(DensityMatrix(op))
    }

    /// Wraps a matrix produced by a validated channel without re-checking it.
    pub(crate) fn from_channel(op: Operator2) -> Self {
        DensityMatrix(op)
    }

    pub fn operator(&self) -> &Operator2 {
        &self.0
    }

    pub fn trace(&self) -> f64 {
        self.0.trace().re
    }

    /// `Tr[rho A]` (real part).
    pub fn expectation(&self, obs: &Operator2) -> f64 {
        (self.0 * *obs).trace().re
    }

    /// `<psi|rho|psi>`.
    pub fn population(&self, psi: &PureState) -> f64 {
        self.0.sandwich(psi, psi).re
    }

    pub fn eigenvalues(&self) -> [f64; 2] {
        self.0.hermitian_eigenvalues()
    }

    /// Validity check used after conversion or arithmetic.
    pub fn check(&self, tol: f64) -> bool {
        self.0.is_hermitian(tol) && self.0.is_psd(tol)
    }
}

/// `Tr[rho S_PM] = 2 Re rho_VH`. Not divided by the trace.
pub fn stokes_pm(rho: &DensityMatrix) -> f64 {
    2.0 * rho.operator().entry(1, 0).re
}

/// `Tr[rho S_HV] = rho_HH - rho_VV`. Not divided by the trace.
pub fn stokes_hv(rho: &DensityMatrix) -> f64 {
    let op = rho.operator();
    op.entry(0, 0).re - op.entry(1, 1).re
}

/// `Re[<m_f|obs|psi_i> / <m_f|psi_i>]`.
pub fn weak_value(psi_i: &PureState, m_f: &PureState, obs: &Operator2) -> Result<f64> {
    weak_value_with_threshold(psi_i, m_f, obs, DEFAULT_OVERLAP_THRESHOLD)
}

pub fn weak_value_with_threshold(
    psi_i: &PureState,
    m_f: &PureState,
    obs: &Operator2,
    threshold: f64,
) -> Result<f64> {
    let overlap = m_f.inner(psi_i);
    if overlap.norm() <= threshold {
        return Err(Error::DegeneratePostSelection {
            overlap: overlap.norm(),
            threshold,
        });
    }
    Ok((obs.sandwich(m_f, psi_i) / overlap).re)
}
