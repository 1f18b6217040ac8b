//! Independent reference computations for real-amplitude inputs.
//!
//! Nothing here goes through the library's operator algebra: branch
//! vectors are built directly from the per-path polarization vectors, and
//! the imperfect channel is written as an explicit Kraus mixture instead of
//! damped cross terms.

#![allow(dead_code)]

pub type M2 = [[f64; 2]; 2];

pub fn mat_mul(a: &M2, b: &M2) -> M2 {
    let mut out = [[0.0; 2]; 2];
    for r in 0..2 {
        for c in 0..2 {
            out[r][c] = a[r][0] * b[0][c] + a[r][1] * b[1][c];
        }
    }
    out
}

pub fn transpose(a: &M2) -> M2 {
    [[a[0][0], a[1][0]], [a[0][1], a[1][1]]]
}

/// `k ρ kᵀ` for real matrices.
pub fn sandwich(k: &M2, rho: &M2) -> M2 {
    mat_mul(&mat_mul(k, rho), &transpose(k))
}

pub fn add_scaled(acc: &mut M2, m: &M2, w: f64) {
    for r in 0..2 {
        for c in 0..2 {
            acc[r][c] += w * m[r][c];
        }
    }
}

pub fn trace(m: &M2) -> f64 {
    m[0][0] + m[1][1]
}

/// Output vectors for input amplitudes (c_h, c_v) after the compensation
/// plate: b1 = (C_H r_H + C_V r_V)/√2, b2 = flip(C_H r_H - C_V r_V)/√2 with
/// r_H = (cos 2θ, sin 2θ), r_V = (sin 2θ, cos 2θ).
pub fn branch_vectors(c_h: f64, c_v: f64, theta_rad: f64) -> ([f64; 2], [f64; 2]) {
    let (s, c) = (2.0 * theta_rad).sin_cos();
    let k = std::f64::consts::FRAC_1_SQRT_2;
    let b1 = [k * (c_h * c + c_v * s), k * (c_h * s + c_v * c)];
    let b2_raw = [k * (c_h * c - c_v * s), k * (c_h * s - c_v * c)];
    (b1, [b2_raw[0], -b2_raw[1]])
}

/// Ideal Kraus matrices read off the branch vectors column by column.
pub fn kraus(theta_rad: f64) -> (M2, M2) {
    let (h1, h2) = branch_vectors(1.0, 0.0, theta_rad);
    let (v1, v2) = branch_vectors(0.0, 1.0, theta_rad);
    ([[h1[0], v1[0]], [h1[1], v1[1]]], [[h2[0], v2[0]], [h2[1], v2[1]]])
}

/// Kraus matrix of the "wrong-sign" interference, (A - B)/√2 routed to b1.
fn swapped_kraus(theta_rad: f64) -> (M2, M2) {
    let (m1, m2) = kraus(theta_rad);
    let flip = [[1.0, 0.0], [0.0, -1.0]];
    (mat_mul(&flip, &m2), mat_mul(&flip, &m1))
}

/// Imperfect branch outputs as a Kraus mixture:
/// b1 = (1+v)/2 · M1 ρ' M1ᵀ + (1-v)/2 · M2' ρ' M2'ᵀ, with ρ' the
/// PM phase-flipped input.
pub fn branches(rho: &M2, theta_rad: f64, v_hv: f64, v_pm: f64) -> (M2, M2) {
    let p = 0.5 * (1.0 - v_pm);
    let x = [[0.0, 1.0], [1.0, 0.0]];
    let mut rho_d = [[0.0; 2]; 2];
    add_scaled(&mut rho_d, rho, 1.0 - p);
    add_scaled(&mut rho_d, &sandwich(&x, rho), p);

    let (m1, m2) = kraus(theta_rad);
    let (w1, w2) = swapped_kraus(theta_rad);
    let mut b1 = [[0.0; 2]; 2];
    let mut b2 = [[0.0; 2]; 2];
    add_scaled(&mut b1, &sandwich(&m1, &rho_d), 0.5 * (1.0 + v_hv));
    add_scaled(&mut b1, &sandwich(&w1, &rho_d), 0.5 * (1.0 - v_hv));
    add_scaled(&mut b2, &sandwich(&m2, &rho_d), 0.5 * (1.0 + v_hv));
    add_scaled(&mut b2, &sandwich(&w2, &rho_d), 0.5 * (1.0 - v_hv));
    (b1, b2)
}

pub fn pure(c_h: f64, c_v: f64) -> M2 {
    [[c_h * c_h, c_h * c_v], [c_v * c_h, c_v * c_v]]
}

pub fn input(phi_rad: f64) -> M2 {
    pure(phi_rad.sin(), phi_rad.cos())
}

/// Conditional value for H post-selection from the raw branch vectors.
pub fn conditional_value_h(phi_rad: f64, theta_rad: f64) -> f64 {
    let (b1, b2) = branch_vectors(phi_rad.sin(), phi_rad.cos(), theta_rad);
    let (w1, w2) = (b1[0] * b1[0], b2[0] * b2[0]);
    (w1 - w2) / (w1 + w2) / (4.0 * theta_rad).sin()
}

/// Direct evaluation of sin φ cos φ / (sin² φ + η (cos² φ - sin² φ)).
pub fn model_curve(phi_rad: f64, eta: f64) -> f64 {
    let (s, c) = phi_rad.sin_cos();
    s * c / (s * s + eta * (c * c - s * s))
}

/// Brute-force maximum of `model_curve` on a fine grid over (0, 45°], refined once.
pub fn model_peak_brute(eta: f64) -> (f64, f64) {
    let scan = |lo: f64, hi: f64, n: usize| {
        (0..=n)
            .map(|i| lo + (hi - lo) * i as f64 / n as f64)
            .filter(|x| *x > 0.0)
            .map(|x| (x, model_curve(x, eta)))
            .fold((0.0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    };
    let quarter = std::f64::consts::FRAC_PI_4;
    let (x0, _) = scan(0.0, quarter, 200_000);
    let h = quarter / 200_000.0;
    let (x, v) = scan(x0 - h, x0 + h, 20_000);
    (x.to_degrees(), v)
}
