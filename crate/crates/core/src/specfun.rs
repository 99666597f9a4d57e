//! Integer-order Bessel functions of real argument.
//!
//! J is computed with Miller's backward recurrence (normalised by
//! J_0 + 2 sum J_2k = 1) or, for large arguments, with the Hankel asymptotic
//! expansion followed by upward recurrence. Y_0 and Y_1 come from Neumann
//! series over the same J values, then upward recurrence. I uses backward
//! recurrence normalised by e^x = I_0 + 2 sum I_k. K_0 and K_1 use the
//! ascending series for x <= 2 and trapezoidal quadrature of
//! int_0^inf exp(-x cosh t) cosh(nu t) dt beyond, then upward recurrence.

use num_complex::Complex64;
use std::f64::consts::{FRAC_2_PI, PI};

use crate::error::{Error, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Largest order accepted by the scalar entry points.
pub const MAX_ORDER: usize = 64;

const ASYMPTOTIC_X: f64 = 25.0;
const RESCALE_AT: f64 = 1e250;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BesselKind {
    J,
    Y,
    I,
    K,
}

/// Scalar Bessel function of integer order.
pub fn bessel(kind: BesselKind, order: usize, x: f64) -> Result<f64> {
    if order > MAX_ORDER {
        return Err(Error::Domain(format!("order {order} exceeds {MAX_ORDER}")));
    }
    if !x.is_finite() {
        return Err(Error::Domain(format!("non-finite argument {x}")));
    }
    let seq = match kind {
        BesselKind::J => bessel_j_seq(order, x)?,
        BesselKind::Y => bessel_y_seq(order, x)?,
        BesselKind::I => bessel_i_seq(order, x)?,
        BesselKind::K => bessel_k_seq(order, x)?,
    };
    Ok(seq[order])
}

pub fn bessel_j(n: usize, x: f64) -> Result<f64> {
    bessel(BesselKind::J, n, x)
}

pub fn bessel_y(n: usize, x: f64) -> Result<f64> {
    bessel(BesselKind::Y, n, x)
}

pub fn bessel_i(n: usize, x: f64) -> Result<f64> {
    bessel(BesselKind::I, n, x)
}

pub fn bessel_k(n: usize, x: f64) -> Result<f64> {
    bessel(BesselKind::K, n, x)
}

/// J_0(x), ..., J_nmax(x) for x >= 0.
pub fn bessel_j_seq(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("J requires x >= 0, got {x}")));
    }
    Ok(j_array(nmax, x))
}

/// Y_0(x), ..., Y_nmax(x) for x > 0. Entries may be -inf for tiny x and
/// large order, which is reported as overflow.
pub fn bessel_y_seq(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("Y requires x > 0, got {x}")));
    }
    let out = y_array(nmax, x);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow(format!("Y_{nmax}({x})")));
    }
    Ok(out)
}

/// I_0(x), ..., I_nmax(x) for x >= 0.
pub fn bessel_i_seq(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("I requires x >= 0, got {x}")));
    }
    let scale = x.exp();
    if !scale.is_finite() {
        return Err(Error::Overflow(format!("I_n({x})")));
    }
    let out: Vec<f64> = i_scaled_array(nmax, x).into_iter().map(|v| v * scale).collect();
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow(format!("I_n({x})")));
    }
    Ok(out)
}

/// K_0(x), ..., K_nmax(x) for x > 0.
pub fn bessel_k_seq(nmax: usize, x: f64) -> Result<Vec<f64>> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("K requires x > 0, got {x}")));
    }
    let out = k_array(nmax, x);
    if out.iter().any(|v| !v.is_finite()) {
        return Err(Error::Overflow(format!("K_{nmax}({x})")));
    }
    Ok(out)
}

/// H_0^{(1)}(x) = J_0(x) + i Y_0(x).
pub fn hankel1_0(x: f64) -> Result<Complex64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("H0 requires x > 0, got {x}")));
    }
    let (j0, y0) = j0_y0(x);
    Ok(Complex64::new(j0, y0))
}

/// (J_0(x), Y_0(x)) for x > 0.
pub(crate) fn j0_y0(x: f64) -> (f64, f64) {
    if x >= ASYMPTOTIC_X {
        let (j0, _, y0, _) = jy01_asymptotic(x);
        (j0, y0)
    } else {
        let js = miller_j(2, x);
        let (y0, _) = y01_neumann(&js, x);
        (js[0], y0)
    }
}

pub(crate) fn j_array(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    if x >= ASYMPTOTIC_X && (nmax as f64) + 10.0 <= x {
        let (j0, j1, _, _) = jy01_asymptotic(x);
        out[0] = j0;
        if nmax >= 1 {
            out[1] = j1;
        }
        for n in 1..nmax {
            out[n + 1] = (2.0 * n as f64 / x) * out[n] - out[n - 1];
        }
        return out;
    }
    let full = miller_j(nmax, x);
    out.copy_from_slice(&full[..=nmax]);
    out
}

pub(crate) fn y_array(nmax: usize, x: f64) -> Vec<f64> {
    let (y0, y1) = if x >= ASYMPTOTIC_X {
        let (_, _, y0, y1) = jy01_asymptotic(x);
        (y0, y1)
    } else {
        let js = miller_j(2, x);
        y01_neumann(&js, x)
    };
    let mut out = vec![0.0; nmax + 1];
    out[0] = y0;
    if nmax >= 1 {
        out[1] = y1;
    }
    for n in 1..nmax {
        out[n + 1] = (2.0 * n as f64 / x) * out[n] - out[n - 1];
    }
    out
}

pub(crate) fn k_array(nmax: usize, x: f64) -> Vec<f64> {
    let (k0, k1) = k01(x);
    let mut out = vec![0.0; nmax + 1];
    out[0] = k0;
    if nmax >= 1 {
        out[1] = k1;
    }
    for n in 1..nmax {
        out[n + 1] = out[n - 1] + (2.0 * n as f64 / x) * out[n];
    }
    out
}

/// Normalised Miller recurrence. Returns J_0..J_m for some m >= nmax large
/// enough that the tail of the Neumann series is negligible.
fn miller_j(nmax: usize, x: f64) -> Vec<f64> {
    let top = (nmax as f64).max(x);
    let mut m = (top + 30.0 + 2.0 * top.sqrt()).ceil() as usize;
    if m % 2 == 1 {
        m += 1;
    }
    let mut v = vec![0.0; m + 2];
    v[m] = 1.0;
    let inv_x = 1.0 / x;
    for n in (1..=m).rev() {
        v[n - 1] = 2.0 * n as f64 * inv_x * v[n] - v[n + 1];
        if v[n - 1].abs() > RESCALE_AT {
            for vi in v[n - 1..].iter_mut() {
                *vi /= RESCALE_AT;
            }
        }
    }
    let mut norm = v[0];
    for k in (2..=m).step_by(2) {
        norm += 2.0 * v[k];
    }
    v.truncate(m + 1);
    for vi in v.iter_mut() {
        *vi /= norm;
    }
    v
}

/// Y_0 and Y_1 from the Neumann series over normalised J values.
fn y01_neumann(js: &[f64], x: f64) -> (f64, f64) {
    let l = (0.5 * x).ln() + EULER_GAMMA;
    let m = js.len() - 1;
    let mut s0 = 0.0;
    let mut k = 1;
    while 2 * k <= m {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        s0 += sign * js[2 * k] / k as f64;
        k += 1;
    }
    let y0 = FRAC_2_PI * (l * js[0] - 2.0 * s0);
    let mut s1 = 0.0;
    let mut j = 1;
    while 2 * j < m {
        let sign = if j % 2 == 0 { -1.0 } else { 1.0 };
        let jf = j as f64;
        s1 += sign * (2.0 * jf + 1.0) / (jf * (jf + 1.0)) * js[2 * j + 1];
        j += 1;
    }
    let y1 = FRAC_2_PI * ((l - 1.0) * js[1] - js[0] / x + s1);
    (y0, y1)
}

/// Hankel expansion of J_0, J_1, Y_0, Y_1 for large x.
fn jy01_asymptotic(x: f64) -> (f64, f64, f64, f64) {
    let amp = (FRAC_2_PI / x).sqrt();
    let mut res = [0.0; 4];
    for nu in 0..2usize {
        let mu = 4.0 * (nu * nu) as f64;
        let (mut p, mut q) = (1.0, 0.0);
        let mut t = 1.0f64;
        let mut prev = f64::INFINITY;
        for k in 1..200usize {
            let odd = (2 * k - 1) as f64;
            t *= (mu - odd * odd) / (k as f64 * 8.0 * x);
            if t.abs() > prev || t == 0.0 {
                break;
            }
            prev = t.abs();
            // t_k enters P (even k) or Q (odd k) with alternating signs.
            match k % 4 {
                1 => q += t,
                2 => p -= t,
                3 => q -= t,
                _ => p += t,
            }
            if t.abs() < 1e-17 {
                break;
            }
        }
        let chi = x - (0.5 * nu as f64 + 0.25) * PI;
        let (s, c) = chi.sin_cos();
        res[nu] = amp * (p * c - q * s);
        res[2 + nu] = amp * (p * s + q * c);
    }
    (res[0], res[1], res[2], res[3])
}

/// e^{-x} I_n(x) for n = 0..=nmax.
pub(crate) fn i_scaled_array(nmax: usize, x: f64) -> Vec<f64> {
    let mut out = vec![0.0; nmax + 1];
    if x == 0.0 {
        out[0] = 1.0;
        return out;
    }
    let m = nmax + 20 + (80.0 * x).sqrt().ceil() as usize;
    let mut v = vec![0.0; m + 2];
    v[m] = 1.0;
    let inv_x = 1.0 / x;
    for n in (1..=m).rev() {
        v[n - 1] = 2.0 * n as f64 * inv_x * v[n] + v[n + 1];
        if v[n - 1] > RESCALE_AT {
            for vi in v[n - 1..].iter_mut() {
                *vi /= RESCALE_AT;
            }
        }
    }
    let mut norm = v[0];
    for vi in &v[1..=m] {
        norm += 2.0 * vi;
    }
    for (o, vi) in out.iter_mut().zip(v.iter()) {
        *o = vi / norm;
    }
    out
}

fn k01(x: f64) -> (f64, f64) {
    if x <= 2.0 {
        k01_series(x)
    } else {
        let (s0, s1) = k01_scaled_quadrature(x);
        let e = (-x).exp();
        (s0 * e, s1 * e)
    }
}

fn k01_series(x: f64) -> (f64, f64) {
    let y = 0.25 * x * x;
    let l = (0.5 * x).ln();
    // term_k = y^k / (k!)^2, term1_k = y^k / (k! (k+1)!)
    let mut term = 1.0;
    let mut term1 = 1.0;
    let mut h = 0.0;
    let mut i0 = 1.0;
    let mut i1s = 1.0;
    let mut s0 = 0.0;
    let mut s1 = 2.0 * (-EULER_GAMMA) + 1.0;
    for k in 1..60 {
        let kf = k as f64;
        term *= y / (kf * kf);
        term1 *= y / (kf * (kf + 1.0));
        h += 1.0 / kf;
        i0 += term;
        i1s += term1;
        s0 += h * term;
        let psi_sum = 2.0 * (-EULER_GAMMA) + 2.0 * h + 1.0 / (kf + 1.0);
        s1 += psi_sum * term1;
        if term < 1e-18 * i0 {
            break;
        }
    }
    let i1 = 0.5 * x * i1s;
    let k0 = -(l + EULER_GAMMA) * i0 + s0;
    let k1 = 1.0 / x + l * i1 - 0.25 * x * s1;
    (k0, k1)
}

/// e^x K_0(x), e^x K_1(x) by the trapezoidal rule, x > 2.
fn k01_scaled_quadrature(x: f64) -> (f64, f64) {
    let h = (0.7 / x.sqrt()).min(0.25);
    let mut s0 = 0.5;
    let mut s1 = 0.5;
    for j in 1..10_000 {
        let t = j as f64 * h;
        let sh = (0.5 * t).sinh();
        let e = (-2.0 * x * sh * sh).exp();
        let c = t.cosh();
        s0 += e;
        s1 += e * c;
        if e * c < 1e-18 * s1 {
            break;
        }
    }
    (h * s0, h * s1)
}
