//! Closed-form model of the back-action induced interference measurement.
//!
//! The photon is split by a PBS into a V path and an H path. Each path
//! carries a HWP rotated by ∓θ, and the two paths recombine on a 50/50
//! beam splitter into the output branches b1 and b2. The per-path action is
//! captured by two arm operators:
//!
//! ```text
//! A = [[cos 2θ, 0], [sin 2θ, 0]]    (H component, rotated)
//! B = [[0, sin 2θ], [0, cos 2θ]]    (V component, rotated)
//! M_b1 = (A + B)/√2,  M_b2 = S_HV (A - B)/√2
//! ```
//!
//! The `S_HV` factor is the compensating HWP in b2, which undoes the phase
//! flip between H and V picked up by the extra reflection.
//!
//! Imperfections enter as two independent visibilities. `v_hv` damps the
//! A/B interference terms at the beam splitter; `v_pm` is a PM-basis
//! phase-flip channel applied before the interferometer.

use crate::error::{Error, Result};
use crate::polar::{
    hwp_jones, input_state, stokes_hv, stokes_pm, Angle, DensityMatrix, Operator2, PureState,
    EXACT_TOL,
};

/// Threshold on post-selected probability below which conditional values
/// are refused.
pub const DEFAULT_POSTSELECTION_THRESHOLD: f64 = 1e-15;

/// Threshold on input Stokes components for the trade-off estimators.
pub const STOKES_THRESHOLD: f64 = 1e-9;

/// Smallest resolution the conditional-value estimator accepts.
pub const RESOLUTION_THRESHOLD: f64 = 1e-12;

/// HWP angle plus the two interference visibilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasurementSetting {
    pub theta: Angle,
    pub v_hv: f64,
    pub v_pm: f64,
}

impl MeasurementSetting {
    pub fn new(theta: Angle, v_hv: f64, v_pm: f64) -> Result<Self> {
        if !theta.is_finite() {
            return Err(Error::validation("theta", "must be finite"));
        }
        for (key, v) in [("v_hv", v_hv), ("v_pm", v_pm)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(key, format!("{v} is outside [0, 1]")));
            }
        }
        Ok(MeasurementSetting { theta, v_hv, v_pm })
    }

    pub fn ideal(theta: Angle) -> Self {
        MeasurementSetting {
            theta,
            v_hv: 1.0,
            v_pm: 1.0,
        }
    }

    /// Resolution the setting actually delivers: `v_hv sin 4θ`.
    pub fn epsilon(&self) -> f64 {
        self.v_hv * epsilon_ideal(self.theta)
    }

    /// H/V transition probability the setting actually delivers:
    /// `(1 - v_pm cos 4θ)/2`, which is `sin² 2θ` when `v_pm = 1`.
    pub fn eta(&self) -> f64 {
        0.5 * (1.0 - self.v_pm * (4.0 * self.theta.radians()).cos())
    }
}

/// Unnormalized branch outputs; each trace is that branch's probability.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BranchPair {
    pub b1: DensityMatrix,
    pub b2: DensityMatrix,
}

impl BranchPair {
    pub fn probabilities(&self) -> (f64, f64) {
        (self.b1.trace(), self.b2.trace())
    }

    /// Output (P(H), P(V)) summed over both branches.
    pub fn hv_probabilities(&self) -> (f64, f64) {
        let h = PureState::h();
        let v = PureState::v();
        (
            self.b1.population(&h) + self.b2.population(&h),
            self.b1.population(&v) + self.b2.population(&v),
        )
    }
}

/// One point of the resolution / back-action plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TradeoffPoint {
    pub epsilon_pm: f64,
    /// `2 η_HV`; 1 means complete HV randomization.
    pub back_action: f64,
    pub theta: Angle,
}

impl TradeoffPoint {
    /// Exact point generated by the channel for `setting`.
    pub fn exact(setting: &MeasurementSetting) -> Self {
        TradeoffPoint {
            epsilon_pm: setting.epsilon(),
            back_action: 2.0 * setting.eta(),
            theta: setting.theta,
        }
    }
}

/// Arm operators (A, B): the rotated H column and the rotated V column.
pub fn arm_operators(theta: Angle) -> (Operator2, Operator2) {
    let (s, c) = (2.0 * theta.radians()).sin_cos();
    (
        Operator2::from_real([[c, 0.0], [s, 0.0]]),
        Operator2::from_real([[0.0, s], [0.0, c]]),
    )
}

/// Phase compensation in output b2: a HWP aligned with H/V.
pub fn b2_compensation() -> Operator2 {
    hwp_jones(Angle::from_radians(0.0))
}

/// Measurement operators `(M_b1, M_b2)` built from the arm decomposition.
pub fn kraus_operators(theta: Angle) -> (Operator2, Operator2) {
    let (a, b) = arm_operators(theta);
    let k = std::f64::consts::FRAC_1_SQRT_2;
    ((a + b).scale(k), b2_compensation() * (a - b).scale(k))
}

/// POVM elements `½(1 ± sin 4θ S_PM)`.
pub fn povm_elements(theta: Angle) -> (Operator2, Operator2) {
    let eps = epsilon_ideal(theta);
    let id = Operator2::identity();
    let s = Operator2::s_pm().scale(eps);
    ((id + s).scale(0.5), (id - s).scale(0.5))
}

pub fn epsilon_ideal(theta: Angle) -> f64 {
    (4.0 * theta.radians()).sin()
}

pub fn eta_ideal(theta: Angle) -> f64 {
    (2.0 * theta.radians()).sin().powi(2)
}

/// PM phase-flip channel with flip probability `(1 - v_pm)/2`.
fn pm_dephase(rho: &Operator2, v_pm: f64) -> Operator2 {
    let p = 0.5 * (1.0 - v_pm);
    if p == 0.0 {
        return *rho;
    }
    let s = Operator2::s_pm();
    rho.scale(1.0 - p) + s.conjugate(rho).scale(p)
}

/// Branch outputs of the imperfect interferometer.
///
/// `b1,2 = ½[A ρ' A† + B ρ' B† ± v_hv (A ρ' B† + B ρ' A†)]` where `ρ'` is
/// `rho` after PM dephasing, with b2 then passed through the compensation
/// plate. With both visibilities at 1 this is exactly `M_bj ρ M_bj†`.
pub fn branch_states(rho: &DensityMatrix, s: &MeasurementSetting) -> Result<BranchPair> {
    if !rho.check(EXACT_TOL) {
        return Err(Error::InvalidState(
            "input is not Hermitian positive semidefinite".into(),
        ));
    }
    let rho = pm_dephase(rho.operator(), s.v_pm);
    let (a, b) = arm_operators(s.theta);
    let direct = a.conjugate(&rho) + b.conjugate(&rho);
    let cross = (a * rho * b.adjoint() + b * rho * a.adjoint()).scale(s.v_hv);
    Ok(BranchPair {
        b1: DensityMatrix::from_channel((direct + cross).scale(0.5)),
        b2: DensityMatrix::from_channel(b2_compensation().conjugate(&(direct - cross).scale(0.5))),
    })
}

/// `(P(b1), P(b2))` without post-selection.
pub fn output_probabilities(rho: &DensityMatrix, s: &MeasurementSetting) -> Result<(f64, f64)> {
    Ok(branch_states(rho, s)?.probabilities())
}

/// `(P(b1|m_f), P(b2|m_f))`.
pub fn conditional_probabilities(
    rho: &DensityMatrix,
    s: &MeasurementSetting,
    m_f: &PureState,
) -> Result<(f64, f64)> {
    conditional_probabilities_with_threshold(rho, s, m_f, DEFAULT_POSTSELECTION_THRESHOLD)
}

pub fn conditional_probabilities_with_threshold(
    rho: &DensityMatrix,
    s: &MeasurementSetting,
    m_f: &PureState,
    threshold: f64,
) -> Result<(f64, f64)> {
    let branches = branch_states(rho, s)?;
    let w1 = branches.b1.population(m_f);
    let w2 = branches.b2.population(m_f);
    let total = w1 + w2;
    if total <= threshold {
        return Err(Error::DegeneratePostSelection {
            overlap: total,
            threshold,
        });
    }
    Ok((w1 / total, w2 / total))
}

/// `(p_b1 - p_b2)/ε`.
pub fn experimental_value_from_probs(p_b1: f64, p_b2: f64, epsilon: f64) -> Result<f64> {
    if epsilon.abs() <= RESOLUTION_THRESHOLD {
        return Err(Error::ZeroResolution(epsilon));
    }
    if ((p_b1 + p_b2) - 1.0).abs() > 1e-9 {
        return Err(Error::DomainError(format!(
            "conditional probabilities {p_b1} + {p_b2} do not sum to 1"
        )));
    }
    Ok((p_b1 - p_b2) / epsilon)
}

/// Change in post-selection probability caused by a PM flip:
/// `|<m_f|S_PM|psi_i>|² - |<m_f|psi_i>|²`.
pub fn delta_flip(psi_i: &PureState, m_f: &PureState) -> f64 {
    Operator2::s_pm().sandwich(m_f, psi_i).norm_sqr() - m_f.inner(psi_i).norm_sqr()
}

/// Conditional value at finite back-action with the ideal `η = sin² 2θ`.
pub fn predicted_exp_value(psi_i: &PureState, m_f: &PureState, theta: Angle) -> Result<f64> {
    predicted_exp_value_with_eta(psi_i, m_f, eta_ideal(theta))
}

/// `|<m_f|ψ>|² / (|<m_f|ψ>|² + η Δ_flip) · Re[<m_f|S_PM|ψ>/<m_f|ψ>]`.
///
/// Written as `Re[<ψ|m_f><m_f|S_PM|ψ>] / (|<m_f|ψ>|² + η Δ_flip)` so that it
/// stays finite when the overlap itself vanishes but `η Δ_flip` does not.
pub fn predicted_exp_value_with_eta(psi_i: &PureState, m_f: &PureState, eta: f64) -> Result<f64> {
    let overlap = m_f.inner(psi_i);
    let flipped = Operator2::s_pm().sandwich(m_f, psi_i);
    let denom = overlap.norm_sqr() + eta * delta_flip(psi_i, m_f);
    if denom <= DEFAULT_POSTSELECTION_THRESHOLD {
        return Err(Error::DegeneratePostSelection {
            overlap: denom,
            threshold: DEFAULT_POSTSELECTION_THRESHOLD,
        });
    }
    Ok((overlap.conj() * flipped).re / denom)
}

/// Closed form for `C_H = sin φ`, `C_V = cos φ` and H post-selection:
/// `sin φ cos φ / (sin² φ + η cos 2φ)`.
pub fn predicted_exp_value_phi(phi: Angle, eta: f64) -> Result<f64> {
    let (s, c) = phi.radians().sin_cos();
    let denom = s * s + eta * (2.0 * phi.radians()).cos();
    if denom <= DEFAULT_POSTSELECTION_THRESHOLD {
        return Err(Error::DegeneratePostSelection {
            overlap: denom,
            threshold: DEFAULT_POSTSELECTION_THRESHOLD,
        });
    }
    Ok(s * c / denom)
}

/// Small-η peak of the H post-selected curve: `(1/√(4η), φ* = √η)`.
pub fn max_enhancement(eta: f64) -> Result<(f64, Angle)> {
    check_eta(eta)?;
    Ok(((4.0 * eta).sqrt().recip(), Angle::from_radians(eta.sqrt())))
}

/// Peak of `predicted_exp_value_phi(·, eta)` over φ ∈ (0°, 45°], found by
/// golden-section search to 1e-10 rad.
pub fn max_enhancement_numeric(eta: f64) -> Result<(f64, Angle)> {
    check_eta(eta)?;
    let f = |x: f64| {
        predicted_exp_value_phi(Angle::from_radians(x), eta).unwrap_or(f64::NEG_INFINITY)
    };
    let (x, fx) = golden_section_max(f, 0.0, std::f64::consts::FRAC_PI_4, 1e-10);
    Ok((fx, Angle::from_radians(x)))
}

fn check_eta(eta: f64) -> Result<()> {
    if !(eta > 0.0 && eta <= 0.25) {
        return Err(Error::DomainError(format!(
            "eta = {eta} is outside (0, 1/4]"
        )));
    }
    Ok(())
}

fn golden_section_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> (f64, f64) {
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    while hi - lo > tol {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + inv_phi * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - inv_phi * (hi - lo);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (lo + hi);
    (x, f(x))
}

/// `(p_b1 - p_b2) / <S_PM>_in`.
pub fn resolution_from_stats(p_b1: f64, p_b2: f64, input_stokes_pm: f64) -> Result<f64> {
    if input_stokes_pm.abs() <= STOKES_THRESHOLD {
        return Err(Error::UnpolarizedInput {
            axis: "PM",
            value: input_stokes_pm,
        });
    }
    Ok((p_b1 - p_b2) / input_stokes_pm)
}

/// `2η = 1 - (p_h - p_v) / <S_HV>_in`.
pub fn backaction_from_stats(p_h: f64, p_v: f64, input_stokes_hv: f64) -> Result<f64> {
    if input_stokes_hv.abs() <= STOKES_THRESHOLD {
        return Err(Error::UnpolarizedInput {
            axis: "HV",
            value: input_stokes_hv,
        });
    }
    Ok(1.0 - (p_h - p_v) / input_stokes_hv)
}

/// `ε² + (1 - 2η)²`; at most 1 for any physical setting.
pub fn uncertainty_lhs(epsilon: f64, back_action: f64) -> f64 {
    epsilon * epsilon + (1.0 - back_action).powi(2)
}

/// `ε²/V_HV² + (1 - 2η)²/V_PM² - 1`.
pub fn ellipse_residual(point: &TradeoffPoint, v_hv: f64, v_pm: f64) -> f64 {
    (point.epsilon_pm / v_hv).powi(2) + ((1.0 - point.back_action) / v_pm).powi(2) - 1.0
}

/// Trade-off point estimated from exact channel statistics for an input
/// at angle `phi`.
pub fn tradeoff_from_channel(phi: Angle, s: &MeasurementSetting) -> Result<TradeoffPoint> {
    let rho = input_state(phi).density();
    let branches = branch_states(&rho, s)?;
    let (p1, p2) = branches.probabilities();
    let (ph, pv) = branches.hv_probabilities();
    Ok(TradeoffPoint {
        epsilon_pm: resolution_from_stats(p1, p2, stokes_pm(&rho))?,
        back_action: backaction_from_stats(ph, pv, stokes_hv(&rho))?,
        theta: s.theta,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn deg(d: f64) -> Angle {
        Angle::from_degrees(d)
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn kraus_at_zero_and_full_strength() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let (m1, m2) = kraus_operators(deg(0.0));
        assert!(m1.approx_eq(&Operator2::identity().scale(r), EXACT_TOL));
        // b2 leaves the compensation plate with the input polarization restored
        assert!(m2.approx_eq(&Operator2::identity().scale(r), EXACT_TOL));
        let (a, b) = arm_operators(deg(0.0));
        assert!((a - b).scale(r).approx_eq(&Operator2::s_hv().scale(r), EXACT_TOL));

        let (m1, m2) = kraus_operators(deg(22.5));
        assert!(m1.approx_eq(&PureState::p().projector(), EXACT_TOL));
        assert!(m2.approx_eq(&PureState::m().projector(), EXACT_TOL));
        assert!((m1 * m1).approx_eq(&m1, EXACT_TOL));
        assert!((m2 * m2).approx_eq(&m2, EXACT_TOL));
    }

    #[test]
    fn kraus_matches_explicit_matrices() {
        let t = deg(7.3);
        let (s, c) = (2.0 * t.radians()).sin_cos();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let (m1, m2) = kraus_operators(t);
        assert!(m1.approx_eq(&Operator2::from_real([[c, s], [s, c]]).scale(r), EXACT_TOL));
        assert!(m2.approx_eq(&Operator2::from_real([[c, -s], [-s, c]]).scale(r), EXACT_TOL));
    }

    #[test]
    fn povm_reference_points() {
        let (e1, e2) = povm_elements(deg(0.0));
        let half = Operator2::identity().scale(0.5);
        assert!(e1.approx_eq(&half, EXACT_TOL) && e2.approx_eq(&half, EXACT_TOL));
        let (e1, e2) = povm_elements(deg(22.5));
        assert!(e1.approx_eq(&PureState::p().projector(), EXACT_TOL));
        assert!(e2.approx_eq(&PureState::m().projector(), EXACT_TOL));
        let (e1, _) = povm_elements(deg(0.5));
        assert!(close(e1.entry(0, 1).re, 0.5 * 2f64.to_radians().sin(), EXACT_TOL));
    }

    #[test]
    fn epsilon_and_eta_reference_points() {
        assert_eq!(epsilon_ideal(deg(0.0)), 0.0);
        assert!(close(epsilon_ideal(deg(22.5)), 1.0, EXACT_TOL));
        assert!(close(epsilon_ideal(deg(0.5)), 0.0349, 5e-5));
        assert_eq!(eta_ideal(deg(0.0)), 0.0);
        assert!(close(eta_ideal(deg(0.5)), 0.000305, 5e-7));
        assert!(close(eta_ideal(deg(22.5)), 0.5, EXACT_TOL));
    }

    #[test]
    fn branch_states_examples() {
        let p = PureState::p().density();
        let b = branch_states(&p, &MeasurementSetting::ideal(deg(22.5))).unwrap();
        assert!(close(b.b1.trace(), 1.0, EXACT_TOL) && close(b.b2.trace(), 0.0, EXACT_TOL));

        let s = MeasurementSetting::new(deg(22.5), 0.71, 1.0).unwrap();
        let (p1, p2) = output_probabilities(&p, &s).unwrap();
        assert!(close(p1 - p2, 0.71, EXACT_TOL));
        assert!(close(p1 + p2, 1.0, EXACT_TOL));
    }

    #[test]
    fn branch_states_reject_invalid_input() {
        let bad = DensityMatrix::from_channel(Operator2::from_real([[1.5, 0.0], [0.0, -0.5]]));
        let err = branch_states(&bad, &MeasurementSetting::ideal(deg(3.0))).unwrap_err();
        assert!(matches!(err, Error::InvalidState(_)));
    }

    #[test]
    fn output_probabilities_examples() {
        let h = PureState::h().density();
        for t in [0.0, 3.0, 22.5, 40.0] {
            let (p1, p2) = output_probabilities(&h, &MeasurementSetting::ideal(deg(t))).unwrap();
            assert!(close(p1, 0.5, EXACT_TOL) && close(p2, 0.5, EXACT_TOL));
        }
        let rho = input_state(deg(25.0)).density();
        let (p1, p2) = output_probabilities(&rho, &MeasurementSetting::ideal(deg(0.5))).unwrap();
        let expected = 2f64.to_radians().sin() * 50f64.to_radians().sin();
        assert!(close(p1 - p2, expected, EXACT_TOL));
        assert!(close(p1 - p2, 0.02673, 1e-5));

        let rho = input_state(deg(45.0)).density();
        let (p1, p2) = output_probabilities(&rho, &MeasurementSetting::ideal(deg(22.5))).unwrap();
        assert!(close(p1, 1.0, EXACT_TOL) && close(p2, 0.0, EXACT_TOL));
    }

    #[test]
    fn conditional_probability_examples() {
        let p = PureState::p();
        let (c1, c2) =
            conditional_probabilities(&p.density(), &MeasurementSetting::ideal(deg(22.5)), &p)
                .unwrap();
        assert!(close(c1, 1.0, EXACT_TOL) && close(c2, 0.0, EXACT_TOL));

        let err = conditional_probabilities(
            &PureState::v().density(),
            &MeasurementSetting::ideal(deg(0.0)),
            &PureState::h(),
        )
        .unwrap_err();
        assert!(matches!(err, Error::DegeneratePostSelection { .. }));
    }

    #[test]
    fn experimental_value_examples() {
        assert_eq!(experimental_value_from_probs(0.5, 0.5, 0.2).unwrap(), 0.0);
        assert_eq!(experimental_value_from_probs(1.0, 0.0, 1.0).unwrap(), 1.0);
        let eps = 0.0349;
        let d = eps * 0.5;
        let v = experimental_value_from_probs(0.5 + d / 2.0, 0.5 - d / 2.0, eps).unwrap();
        assert!(close(v, 0.5, EXACT_TOL));
        assert!(matches!(
            experimental_value_from_probs(0.5, 0.5, 0.0),
            Err(Error::ZeroResolution(_))
        ));
    }

    #[test]
    fn delta_flip_examples() {
        assert!(close(delta_flip(&PureState::p(), &PureState::h()), 0.0, EXACT_TOL));
        assert!(close(delta_flip(&PureState::p(), &PureState::m()), 0.0, EXACT_TOL));
        let phi = 12f64.to_radians();
        let d = delta_flip(&input_state(Angle::from_radians(phi)), &PureState::h());
        assert!(close(d, phi.cos().powi(2) - phi.sin().powi(2), EXACT_TOL));
        assert!(close(delta_flip(&PureState::v(), &PureState::h()), 1.0, EXACT_TOL));
    }

    #[test]
    fn predicted_value_examples() {
        let h = PureState::h();
        let psi = input_state(deg(10.0));
        let v = predicted_exp_value(&psi, &h, Angle::from_radians(1e-6)).unwrap();
        let w = 1.0 / 10f64.to_radians().tan();
        assert!(((v - w) / w).abs() < 1e-6);

        let v = predicted_exp_value(&input_state(deg(2.0)), &h, deg(0.5)).unwrap();
        assert!(close(v, 22.9188, 1e-3));

        let v = predicted_exp_value(&input_state(deg(45.0)), &h, deg(9.0)).unwrap();
        assert!(close(v, 1.0, EXACT_TOL));
    }

    #[test]
    fn predicted_value_phi_examples() {
        assert!(close(predicted_exp_value_phi(deg(1.0), 0.0003).unwrap(), 28.871, 1e-3));
        let v = predicted_exp_value_phi(deg(4.0), 0.0).unwrap();
        assert!(close(v, 1.0 / 4f64.to_radians().tan(), 1e-12));
        assert_eq!(predicted_exp_value_phi(deg(0.0), 0.0003).unwrap(), 0.0);
        assert!(predicted_exp_value_phi(deg(0.0), 0.0).is_err());
    }

    #[test]
    fn max_enhancement_examples() {
        let (v, phi) = max_enhancement(0.0003).unwrap();
        assert!(close(v, 28.8675, 1e-4));
        assert!(close(phi.degrees(), 0.9924, 1e-4));
        assert!(close(max_enhancement(0.25).unwrap().0, 1.0, EXACT_TOL));
        assert!(close(max_enhancement(0.0006).unwrap().0, 20.41, 0.01));
        assert!(matches!(max_enhancement(0.0), Err(Error::DomainError(_))));
        assert!(max_enhancement(-1.0).is_err());
    }

    #[test]
    fn numeric_peak_is_a_stationary_point() {
        for eta in [1e-5, 0.0003, 0.0006, 0.01] {
            let (v, phi) = max_enhancement_numeric(eta).unwrap();
            let h = 1e-5;
            let left = predicted_exp_value_phi(Angle::from_radians(phi.radians() - h), eta).unwrap();
            let right = predicted_exp_value_phi(Angle::from_radians(phi.radians() + h), eta).unwrap();
            assert!(v >= left && v >= right, "eta {eta}");
            let (approx, _) = max_enhancement(eta).unwrap();
            assert!((v - approx).abs() / approx < 0.02 + 10.0 * eta);
        }
    }

    #[test]
    fn resolution_examples() {
        let p = PureState::p().density();
        for t in [0.5, 5.0, 17.0] {
            let s = MeasurementSetting::ideal(deg(t));
            let (p1, p2) = output_probabilities(&p, &s).unwrap();
            let e = resolution_from_stats(p1, p2, stokes_pm(&p)).unwrap();
            assert!(close(e, epsilon_ideal(deg(t)), EXACT_TOL));
        }
        let s = MeasurementSetting::new(deg(22.5), 0.71, 1.0).unwrap();
        let (p1, p2) = output_probabilities(&p, &s).unwrap();
        assert!(close(resolution_from_stats(p1, p2, 1.0).unwrap(), 0.71, EXACT_TOL));
        assert!(matches!(
            resolution_from_stats(0.5, 0.5, stokes_pm(&PureState::h().density())),
            Err(Error::UnpolarizedInput { axis: "PM", .. })
        ));
    }

    #[test]
    fn backaction_examples() {
        let rho = input_state(deg(25.0)).density();
        let hv = stokes_hv(&rho);
        let run = |s: MeasurementSetting| {
            let (ph, pv) = branch_states(&rho, &s).unwrap().hv_probabilities();
            backaction_from_stats(ph, pv, hv).unwrap()
        };
        assert!(close(run(MeasurementSetting::ideal(deg(0.0))), 0.0, EXACT_TOL));
        assert!(close(run(MeasurementSetting::ideal(deg(22.5))), 1.0, EXACT_TOL));
        assert!(close(run(MeasurementSetting::new(deg(0.0), 1.0, 0.9).unwrap()), 0.1, EXACT_TOL));
        assert!(backaction_from_stats(0.5, 0.5, 0.0).is_err());
    }

    #[test]
    fn uncertainty_and_ellipse_examples() {
        for t in [0.0, 3.0, 13.0, 22.5] {
            let p = TradeoffPoint::exact(&MeasurementSetting::ideal(deg(t)));
            assert!(close(uncertainty_lhs(p.epsilon_pm, p.back_action), 1.0, EXACT_TOL));
        }
        assert!(close(uncertainty_lhs(0.71, 1.0), 0.5041, EXACT_TOL));
        assert_eq!(uncertainty_lhs(0.0, 0.0), 1.0);

        let ideal = tradeoff_from_channel(deg(25.0), &MeasurementSetting::ideal(deg(13.0))).unwrap();
        assert!(close(ellipse_residual(&ideal, 1.0, 1.0), 0.0, EXACT_TOL));
        let s = MeasurementSetting::new(deg(10.0), 0.7, 1.0).unwrap();
        let p = tradeoff_from_channel(deg(25.0), &s).unwrap();
        assert!(close(ellipse_residual(&p, 0.7, 1.0), 0.0, EXACT_TOL));
        let center = TradeoffPoint {
            epsilon_pm: 0.0,
            back_action: 1.0,
            theta: deg(0.0),
        };
        assert_eq!(ellipse_residual(&center, 0.4, 0.9), -1.0);
    }

    #[test]
    fn setting_validation() {
        assert!(MeasurementSetting::new(deg(1.0), 1.2, 1.0).is_err());
        assert!(MeasurementSetting::new(deg(1.0), 1.0, -0.1).is_err());
        assert!(MeasurementSetting::new(Angle::from_radians(f64::NAN), 1.0, 1.0).is_err());
    }
}
