//! Integer-order Bessel functions `J_m`, `Y_m` and the Hankel function
//! `H_m^(2) = J_m - i Y_m` for real, non-negative arguments.
//!
//! Evaluation picks one of three routes per `(m, x)`:
//!
//! * ascending power series when `x^2 <= 4(m + 1)` (terms shrink from the
//!   first one, so there is no cancellation),
//! * Miller's backward recurrence normalised with `J_0 + 2 sum J_2k = 1`
//!   for moderate arguments, with `Y_0`/`Y_1` from their Neumann series over
//!   the same sequence,
//! * Hankel's asymptotic expansion of orders 0 and 1 for `x >= 25`, followed
//!   by forward recurrence (`Y` always, `J` while `m < x`). Above the turning
//!   point `J_m` comes from the continued fraction for `J_{m+1}/J_m` closed
//!   with the Wronskian.
//!
//! Negative orders use `J_{-m} = (-1)^m J_m` and the same identity for `Y`.
//! Accuracy is targeted for `|m| <= 256` and `x <= 1e4`.

use std::f64::consts::{FRAC_1_SQRT_2, PI};

use num_complex::Complex64;

use crate::error::{Error, Result};

const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;
const ASYMPTOTIC_MIN_X: f64 = 25.0;
const RESCALE_ABOVE: f64 = 1e250;

fn check_j_domain(x: f64) -> Result<()> {
    if x >= 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            function: "bessel_j",
            arg: x,
            requirement: "0 <= x < inf",
        })
    }
}

fn check_y_domain(function: &'static str, x: f64) -> Result<()> {
    if x > 0.0 && x.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            function,
            arg: x,
            requirement: "0 < x < inf",
        })
    }
}

#[inline]
fn parity(m: i32) -> f64 {
    if m % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

/// Bessel function of the first kind `J_m(x)`.
pub fn bessel_j(m: i32, x: f64) -> Result<f64> {
    check_j_domain(x)?;
    let n = m.unsigned_abs();
    let value = j_nonneg(n, x);
    Ok(if m < 0 { parity(m) * value } else { value })
}

/// Bessel function of the second kind `Y_m(x)`, `x > 0`.
pub fn bessel_y(m: i32, x: f64) -> Result<f64> {
    check_y_domain("bessel_y", x)?;
    let n = m.unsigned_abs();
    let value = *y_orders(n, x).last().expect("at least order 0");
    Ok(if m < 0 { parity(m) * value } else { value })
}

/// Hankel function of the second kind `H_m^(2)(x) = J_m(x) - i Y_m(x)`.
pub fn hankel2(m: i32, x: f64) -> Result<Complex64> {
    check_y_domain("hankel2", x)?;
    let n = m.unsigned_abs();
    let y = *y_orders(n, x).last().expect("at least order 0");
    let j = j_nonneg(n, x);
    let sign = if m < 0 { parity(m) } else { 1.0 };
    Ok(Complex64::new(sign * j, -sign * y))
}

/// `J_0(x), ..., J_max_order(x)` in one call.
pub fn bessel_j_orders(max_order: u32, x: f64) -> Result<Vec<f64>> {
    check_j_domain(x)?;
    if x == 0.0 {
        let mut out = vec![0.0; max_order as usize + 1];
        out[0] = 1.0;
        return Ok(out);
    }
    if x >= ASYMPTOTIC_MIN_X {
        return Ok((0..=max_order).map(|n| j_nonneg(n, x)).collect());
    }
    // One Miller sweep covers every order outside the series region.
    let mut miller_seq: Option<Vec<f64>> = None;
    let out = (0..=max_order)
        .map(|n| {
            if use_series(n, x) {
                j_series(n, x)
            } else {
                let seq = miller_seq.get_or_insert_with(|| miller(x, max_order));
                seq[n as usize]
            }
        })
        .collect();
    Ok(out)
}

/// `Y_0(x), ..., Y_max_order(x)` in one call.
pub fn bessel_y_orders(max_order: u32, x: f64) -> Result<Vec<f64>> {
    check_y_domain("bessel_y", x)?;
    Ok(y_orders(max_order, x))
}

/// `H^(2)_0(x), ..., H^(2)_max_order(x)` in one call.
pub fn hankel2_orders(max_order: u32, x: f64) -> Result<Vec<Complex64>> {
    check_y_domain("hankel2", x)?;
    let j = bessel_j_orders(max_order, x)?;
    let y = y_orders(max_order, x);
    Ok(j.into_iter()
        .zip(y)
        .map(|(j, y)| Complex64::new(j, -y))
        .collect())
}

#[inline]
fn use_series(n: u32, x: f64) -> bool {
    x * x <= 4.0 * (f64::from(n) + 1.0)
}

fn j_nonneg(n: u32, x: f64) -> f64 {
    if x == 0.0 {
        return if n == 0 { 1.0 } else { 0.0 };
    }
    if use_series(n, x) {
        return j_series(n, x);
    }
    if x >= ASYMPTOTIC_MIN_X {
        let nf = f64::from(n);
        if nf < x {
            let (j0, _) = hankel_asymptotic(0, x);
            let (j1, _) = hankel_asymptotic(1, x);
            return forward_recurrence(j0, j1, n, x);
        }
        // minimal solution: ratio from the continued fraction, scale from the Wronskian
        let y = y_orders(n + 1, x);
        let ratio = j_ratio(n, x);
        let yn = y[n as usize];
        let yn1 = y[n as usize + 1];
        return 2.0 / (PI * x * (ratio * yn - yn1));
    }
    miller(x, n)[n as usize]
}

/// `(x/2)^n / n! * sum_k (-x^2/4)^k / (k! (n+k)!) * n!`
fn j_series(n: u32, x: f64) -> f64 {
    let half = 0.5 * x;
    let mut lead = 1.0;
    for k in 1..=n {
        lead *= half / f64::from(k);
    }
    if lead == 0.0 {
        return 0.0;
    }
    let q = -half * half;
    let nf = f64::from(n);
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..500 {
        let kf = f64::from(k);
        term *= q / (kf * (nf + kf));
        sum += term;
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    lead * sum
}

/// Normalised backward recurrence. Returns `J_0..=J_top` for some even
/// `top >= max(n_max, x)` with enough headroom for the normalisation sum.
fn miller(x: f64, n_max: u32) -> Vec<f64> {
    let base = f64::from(n_max).max(x.ceil());
    let mut top = (base + 30.0 + 2.0 * (40.0 * base.max(1.0)).sqrt()) as usize;
    if top % 2 == 1 {
        top += 1;
    }
    let mut f = vec![0.0; top + 2];
    f[top] = 1e-30;
    for k in (1..=top).rev() {
        let next = 2.0 * k as f64 / x * f[k] - f[k + 1];
        f[k - 1] = next;
        if next.abs() > RESCALE_ABOVE {
            for v in f[k - 1..].iter_mut() {
                *v /= RESCALE_ABOVE;
            }
        }
    }
    let norm = f[0] + 2.0 * f.iter().skip(2).step_by(2).sum::<f64>();
    f.truncate(top + 1);
    for v in f.iter_mut() {
        *v /= norm;
    }
    f
}

/// `J_{n+1}(x) / J_n(x)` by modified Lentz evaluation of
/// `1 / (2(n+1)/x - 1 / (2(n+2)/x - ...))`.
fn j_ratio(n: u32, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut f = TINY;
    let mut c = f;
    let mut d = 0.0;
    for i in 1..100_000u32 {
        let a = if i == 1 { 1.0 } else { -1.0 };
        let b = 2.0 * (f64::from(n) + f64::from(i)) / x;
        d = b + a * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + a / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-16 {
            break;
        }
    }
    f
}

fn forward_recurrence(f0: f64, f1: f64, n: u32, x: f64) -> f64 {
    match n {
        0 => f0,
        1 => f1,
        _ => {
            let (mut prev, mut cur) = (f0, f1);
            for k in 1..n {
                let next = 2.0 * f64::from(k) / x * cur - prev;
                prev = cur;
                cur = next;
            }
            cur
        }
    }
}

/// Hankel's expansion for order 0 or 1; returns `(J_nu, Y_nu)`.
fn hankel_asymptotic(nu: u32, x: f64) -> (f64, f64) {
    let mu = 4.0 * f64::from(nu * nu);
    let mut p = 1.0;
    let mut q = 0.0;
    let mut term: f64 = 1.0;
    let mut last = f64::INFINITY;
    for k in 1..200u32 {
        let odd = f64::from(2 * k - 1);
        let next = term * (mu - odd * odd) / (f64::from(k) * 8.0 * x);
        if next.abs() >= last || next == 0.0 {
            break;
        }
        last = next.abs();
        term = next;
        // terms alternate between Q (odd k) and P (even k) with sign (-1)^{floor(k/2)}
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        if k % 2 == 1 {
            q += sign * term;
        } else {
            p += sign * term;
        }
        if term.abs() < 1e-17 {
            break;
        }
    }
    // chi = x - (nu/2 + 1/4) pi, expanded to avoid cancellation for large x
    let (s, c) = x.sin_cos();
    let (sin_t, cos_t) = if nu == 0 {
        (FRAC_1_SQRT_2, FRAC_1_SQRT_2)
    } else {
        (FRAC_1_SQRT_2, -FRAC_1_SQRT_2)
    };
    let cos_chi = c * cos_t + s * sin_t;
    let sin_chi = s * cos_t - c * sin_t;
    let amp = (2.0 / (PI * x)).sqrt();
    (
        amp * (p * cos_chi - q * sin_chi),
        amp * (p * sin_chi + q * cos_chi),
    )
}

fn y_orders(n_max: u32, x: f64) -> Vec<f64> {
    let (y0, y1) = if x >= ASYMPTOTIC_MIN_X {
        (hankel_asymptotic(0, x).1, hankel_asymptotic(1, x).1)
    } else {
        y01_neumann(x)
    };
    let mut out = Vec::with_capacity(n_max as usize + 1);
    out.push(y0);
    if n_max >= 1 {
        out.push(y1);
    }
    for k in 1..n_max {
        let next = 2.0 * f64::from(k) / x * out[k as usize] - out[k as usize - 1];
        out.push(next);
    }
    out
}

/// Neumann series for `Y_0` and `Y_1` over a Miller sequence of `J`.
fn y01_neumann(x: f64) -> (f64, f64) {
    let j = miller(x, 1);
    let log_term = (0.5 * x).ln() + EULER_GAMMA;
    let mut s0 = 0.0;
    let mut s1 = 0.0;
    let top = j.len() - 1;
    let mut k = 1usize;
    while 2 * k <= top {
        let sign = if k % 2 == 0 { 1.0 } else { -1.0 };
        let kf = k as f64;
        s0 += sign * j[2 * k] / kf;
        if 2 * k + 1 <= top {
            s1 += sign * (2.0 * kf + 1.0) * j[2 * k + 1] / (kf * (kf + 1.0));
        }
        k += 1;
    }
    let y0 = 2.0 / PI * log_term * j[0] - 4.0 / PI * s0;
    let y1 = -2.0 / (PI * x) * j[0] + 2.0 / PI * (log_term - 1.0) * j[1] - 2.0 / PI * s1;
    (y0, y1)
}
