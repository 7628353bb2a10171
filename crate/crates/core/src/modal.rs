//! Circular-harmonic analysis and synthesis.
//!
//! A field inside a source-free disc is written as
//! `S(r, phi) = sum_m beta_m J_m(k r) exp(i m phi)`, truncated to `|m| <= M`.

use std::f64::consts::{E, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{ArrayGeometry, Point};
use crate::specfun::bessel_j_orders;
use crate::ComplexVec;

/// Default threshold below which `|J_m(k r)|` makes a mode unrecoverable.
pub const BESSEL_ZERO_THRESHOLD: f64 = 1e-6;

/// `i^m` for any integer `m`.
pub fn i_pow(m: i32) -> Complex64 {
    match m.rem_euclid(4) {
        0 => Complex64::new(1.0, 0.0),
        1 => Complex64::new(0.0, 1.0),
        2 => Complex64::new(-1.0, 0.0),
        _ => Complex64::new(0.0, -1.0),
    }
}

/// Coefficients `beta_m`, `m = -M..=M`, for one wavenumber.
///
/// Modes whose extraction divided by a vanishing Bessel factor are flagged
/// and hold zero; consumers skip them.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeCoefficients {
    order: usize,
    wavenumber: f64,
    coeffs: Vec<Complex64>,
    flagged: Vec<bool>,
}

impl ModeCoefficients {
    pub fn zeros(order: usize, wavenumber: f64) -> Self {
        Self {
            order,
            wavenumber,
            coeffs: vec![Complex64::new(0.0, 0.0); 2 * order + 1],
            flagged: vec![false; 2 * order + 1],
        }
    }

    pub fn from_fn(order: usize, wavenumber: f64, mut f: impl FnMut(i32) -> Complex64) -> Self {
        let m_max = order as i32;
        let coeffs = (-m_max..=m_max).map(&mut f).collect();
        Self {
            order,
            wavenumber,
            coeffs,
            flagged: vec![false; 2 * order + 1],
        }
    }

    /// Builds from a slice ordered `m = -M..=M`.
    pub fn from_vec(wavenumber: f64, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::Shape {
                what: "mode coefficients must have odd length 2M+1",
                expected: coeffs.len() + 1,
                actual: coeffs.len(),
            });
        }
        let order = coeffs.len() / 2;
        Ok(Self {
            order,
            wavenumber,
            flagged: vec![false; coeffs.len()],
            coeffs,
        })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    #[inline]
    pub fn index(&self, m: i32) -> usize {
        debug_assert!(m.unsigned_abs() as usize <= self.order);
        (m + self.order as i32) as usize
    }

    pub fn get(&self, m: i32) -> Complex64 {
        self.coeffs[self.index(m)]
    }

    pub fn set(&mut self, m: i32, value: Complex64) {
        let i = self.index(m);
        self.coeffs[i] = value;
    }

    pub fn is_flagged(&self, m: i32) -> bool {
        self.flagged[self.index(m)]
    }

    pub fn flag(&mut self, m: i32) {
        let i = self.index(m);
        self.flagged[i] = true;
        self.coeffs[i] = Complex64::new(0.0, 0.0);
    }

    pub fn flagged_count(&self) -> usize {
        self.flagged.iter().filter(|&&f| f).count()
    }

    /// Coefficients ordered `m = -M..=M`.
    pub fn as_slice(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn flags(&self) -> &[bool] {
        &self.flagged
    }

    /// `(m, beta_m)` pairs, flagged modes included.
    pub fn iter(&self) -> impl Iterator<Item = (i32, Complex64)> + '_ {
        let m0 = -(self.order as i32);
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(i, &c)| (m0 + i as i32, c))
    }

    pub fn orders(&self) -> std::ops::RangeInclusive<i32> {
        -(self.order as i32)..=self.order as i32
    }

    pub fn scaled(&self, factor: Complex64) -> Self {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= factor;
        }
        out
    }

    /// Elementwise sum; flags are the union of both operands.
    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    fn zip_with(&self, other: &Self, f: impl Fn(Complex64, Complex64) -> Complex64) -> Result<Self> {
        if self.order != other.order {
            return Err(Error::OrderMismatch {
                left: self.order,
                right: other.order,
            });
        }
        let mut out = self.clone();
        for i in 0..out.coeffs.len() {
            out.flagged[i] |= other.flagged[i];
            out.coeffs[i] = if out.flagged[i] {
                Complex64::new(0.0, 0.0)
            } else {
                f(self.coeffs[i], other.coeffs[i])
            };
        }
        Ok(out)
    }

    /// Same coefficients, re-indexed to a different order (zero padded or
    /// truncated).
    pub fn with_order(&self, order: usize) -> Self {
        let mut out = Self::zeros(order, self.wavenumber);
        let common = order.min(self.order) as i32;
        for m in -common..=common {
            let src = self.index(m);
            let dst = out.index(m);
            out.coeffs[dst] = self.coeffs[src];
            out.flagged[dst] = self.flagged[src];
        }
        out
    }

    pub fn is_finite(&self) -> bool {
        self.coeffs.iter().all(|c| c.re.is_finite() && c.im.is_finite())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TruncationRule {
    /// `M = ceil(k R)`
    CeilKr,
    /// `M = ceil(e k R / 2)`
    CeilEkrHalf,
}

/// Truncation order for a disc of radius `radius` at wavenumber `k`.
///
/// Returns at least 1 for any positive `k R`.
pub fn truncation_order(k: f64, radius: f64, rule: TruncationRule) -> usize {
    let kr = k * radius;
    let raw = match rule {
        TruncationRule::CeilKr => kr.ceil(),
        TruncationRule::CeilEkrHalf => (E * kr / 2.0).ceil(),
    };
    raw.max(1.0) as usize
}

/// Highest frequency at which `count` elements on a circle of `radius`
/// resolve every order up to `ceil(k r)` (`count >= 2 ceil(k r) + 1`).
pub fn spatial_nyquist_frequency(count: usize, radius: f64, speed_of_sound: f64) -> f64 {
    let max_order = (count.saturating_sub(1) / 2) as f64;
    max_order * speed_of_sound / (2.0 * PI * radius)
}

/// Mode extraction from uniform circular-array samples using the
/// orthogonality of `exp(i m phi_q)`.
pub fn extract_modes(
    samples: &ComplexVec,
    array: &ArrayGeometry,
    k: f64,
    order: usize,
) -> Result<ModeCoefficients> {
    extract_modes_with_threshold(samples, array, k, order, BESSEL_ZERO_THRESHOLD)
}

pub fn extract_modes_with_threshold(
    samples: &ComplexVec,
    array: &ArrayGeometry,
    k: f64,
    order: usize,
    bessel_zero_threshold: f64,
) -> Result<ModeCoefficients> {
    let q = array.count();
    if samples.len() != q {
        return Err(Error::Shape {
            what: "samples vs array elements",
            expected: q,
            actual: samples.len(),
        });
    }
    let bessel = bessel_j_orders(order as u32, k * array.radius())?;
    let angles = array.angles();
    let mut out = ModeCoefficients::zeros(order, k);
    for m in out.orders() {
        let jm = if m < 0 && m % 2 != 0 {
            -bessel[m.unsigned_abs() as usize]
        } else {
            bessel[m.unsigned_abs() as usize]
        };
        if jm.abs() < bessel_zero_threshold {
            out.flag(m);
            continue;
        }
        let mf = f64::from(m);
        let sum: Complex64 = samples
            .iter()
            .zip(&angles)
            .map(|(s, &phi)| s * Complex64::from_polar(1.0, -mf * phi))
            .sum();
        out.set(m, sum / (q as f64 * jm));
    }
    Ok(out)
}

/// Mode coefficients of a plane-wave superposition:
/// `beta_m = i^m sum_l gamma_l exp(-i m phi_l)`.
pub fn modes_from_plane_waves(
    gamma: &ComplexVec,
    angles: &[f64],
    k: f64,
    order: usize,
) -> Result<ModeCoefficients> {
    if gamma.len() != angles.len() {
        return Err(Error::Shape {
            what: "plane-wave weights vs angles",
            expected: angles.len(),
            actual: gamma.len(),
        });
    }
    Ok(ModeCoefficients::from_fn(order, k, |m| {
        let mf = f64::from(m);
        let sum: Complex64 = gamma
            .iter()
            .zip(angles)
            .map(|(g, &phi)| g * Complex64::from_polar(1.0, -mf * phi))
            .sum();
        i_pow(m) * sum
    }))
}

/// Truncated circular-harmonic series at a single point. Flagged modes are
/// skipped.
pub fn synthesize_field(beta: &ModeCoefficients, point: Point) -> Complex64 {
    let (r, phi) = point.to_polar();
    let bessel = bessel_j_orders(beta.order() as u32, beta.wavenumber() * r)
        .expect("non-negative radius");
    beta.iter()
        .filter(|&(m, _)| !beta.is_flagged(m))
        .map(|(m, c)| {
            let n = m.unsigned_abs() as usize;
            let jm = if m < 0 && m % 2 != 0 { -bessel[n] } else { bessel[n] };
            c * jm * Complex64::from_polar(1.0, f64::from(m) * phi)
        })
        .sum()
}

/// Precomputed `J_m(k r_p) exp(i m phi_p)` for a fixed point set, so that
/// repeated synthesis is a matrix-vector product.
#[derive(Debug, Clone)]
pub struct SynthesisBasis {
    order: usize,
    wavenumber: f64,
    // row-major: points x (2M+1)
    values: Vec<Complex64>,
    points: usize,
}

impl SynthesisBasis {
    pub fn new(points: &[Point], k: f64, order: usize) -> Self {
        let width = 2 * order + 1;
        let mut values = Vec::with_capacity(points.len() * width);
        for p in points {
            let (r, phi) = p.to_polar();
            let bessel = bessel_j_orders(order as u32, k * r).expect("non-negative radius");
            for m in -(order as i32)..=order as i32 {
                let n = m.unsigned_abs() as usize;
                let jm = if m < 0 && m % 2 != 0 { -bessel[n] } else { bessel[n] };
                values.push(jm * Complex64::from_polar(1.0, f64::from(m) * phi));
            }
        }
        Self {
            order,
            wavenumber: k,
            values,
            points: points.len(),
        }
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn point_count(&self) -> usize {
        self.points
    }

    /// Field values at every basis point. Coefficients of a different order
    /// are matched on the common range of `m`.
    pub fn synthesize(&self, beta: &ModeCoefficients) -> Vec<Complex64> {
        let width = 2 * self.order + 1;
        let common = self.order.min(beta.order()) as i32;
        let mut out = vec![Complex64::new(0.0, 0.0); self.points];
        for (p, value) in out.iter_mut().enumerate() {
            let row = &self.values[p * width..(p + 1) * width];
            let mut acc = Complex64::new(0.0, 0.0);
            for m in -common..=common {
                if beta.is_flagged(m) {
                    continue;
                }
                acc += row[(m + self.order as i32) as usize] * beta.get(m);
            }
            *value = acc;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::ArrayRole;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn i_pow_cycles() {
        assert_eq!(i_pow(0), c(1.0, 0.0));
        assert_eq!(i_pow(1), c(0.0, 1.0));
        assert_eq!(i_pow(-1), c(0.0, -1.0));
        assert_eq!(i_pow(-2), c(-1.0, 0.0));
        assert_eq!(i_pow(7), c(0.0, -1.0));
    }

    #[test]
    fn truncation_examples() {
        let k = |f: f64| 2.0 * PI * f / 343.0;
        // the Nyquist frequencies for 41 elements are 545.9 Hz (r = 2) and 1091.8 Hz (r = 1)
        assert_eq!(truncation_order(k(545.9), 2.0, TruncationRule::CeilKr), 20);
        assert_eq!(truncation_order(k(1091.8), 1.0, TruncationRule::CeilKr), 20);
        assert_eq!(truncation_order(1e-9, 2.0, TruncationRule::CeilKr), 1);
        assert_eq!(truncation_order(10.0, 1.0, TruncationRule::CeilEkrHalf), 14);
        assert!((spatial_nyquist_frequency(41, 2.0, 343.0) - 545.9).abs() < 0.05);
        assert!((spatial_nyquist_frequency(41, 1.0, 343.0) - 1091.8).abs() < 0.05);
        assert_eq!(spatial_nyquist_frequency(41, 2.0, 343.0).round(), 546.0);
    }

    #[test]
    fn plane_wave_modes() {
        let k = 3.0;
        let one = ComplexVec::from_vec(vec![c(1.0, 0.0)]);
        let beta = modes_from_plane_waves(&one, &[0.0], k, 6).unwrap();
        for (m, b) in beta.iter() {
            assert!((b - i_pow(m)).norm() < 1e-15);
        }
        let zero = ComplexVec::from_vec(vec![c(0.0, 0.0); 3]);
        let beta = modes_from_plane_waves(&zero, &[0.0, 1.0, 2.0], k, 4).unwrap();
        assert!(beta.iter().all(|(_, b)| b == c(0.0, 0.0)));
        let two = ComplexVec::from_vec(vec![c(1.0, 0.0), c(1.0, 0.0)]);
        let beta = modes_from_plane_waves(&two, &[0.0, PI], k, 5).unwrap();
        for (m, b) in beta.iter() {
            let want = i_pow(m) * (1.0 + if m % 2 == 0 { 1.0 } else { -1.0 });
            assert!((b - want).norm() < 1e-12, "m={m}");
        }
        assert!(modes_from_plane_waves(&two, &[0.0], k, 2).is_err());
    }

    #[test]
    fn synthesis_edge_cases() {
        let zero = ModeCoefficients::zeros(5, 2.0);
        assert_eq!(synthesize_field(&zero, Point::from_polar(0.7, 1.0)), c(0.0, 0.0));
        let beta = ModeCoefficients::from_fn(8, 2.0, i_pow);
        let at_origin = synthesize_field(&beta, Point::new(0.0, 0.0));
        assert!((at_origin - c(1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn zero_samples_give_zero_modes() {
        let arr = ArrayGeometry::new(2.0, 41, ArrayRole::Reference).unwrap();
        let s = ComplexVec::zeros(41);
        let beta = extract_modes(&s, &arr, 5.0, 20).unwrap();
        assert!(beta.iter().all(|(_, b)| b.norm() == 0.0));
    }

    #[test]
    fn extraction_checks_lengths() {
        let arr = ArrayGeometry::new(2.0, 41, ArrayRole::Reference).unwrap();
        let s = ComplexVec::zeros(40);
        assert!(matches!(extract_modes(&s, &arr, 5.0, 20), Err(Error::Shape { .. })));
    }

    #[test]
    fn bessel_zero_modes_are_flagged() {
        // J_0 vanishes at k r = 2.404825557695773
        let arr = ArrayGeometry::new(1.0, 9, ArrayRole::Error).unwrap();
        let k = 2.404825557695773;
        let s = ComplexVec::from_element(9, c(1.0, 0.0));
        let beta = extract_modes(&s, &arr, k, 4).unwrap();
        assert!(beta.is_flagged(0));
        assert_eq!(beta.get(0), c(0.0, 0.0));
        assert!(!beta.is_flagged(1));
    }

    #[test]
    fn basis_matches_pointwise_synthesis() {
        let beta = ModeCoefficients::from_fn(6, 4.0, |m| c(f64::from(m), 0.5 - f64::from(m * m)));
        let pts: Vec<Point> = (0..10)
            .map(|i| Point::from_polar(0.1 * f64::from(i), 0.7 * f64::from(i)))
            .collect();
        let basis = SynthesisBasis::new(&pts, 4.0, 9);
        let fast = basis.synthesize(&beta);
        for (p, v) in pts.iter().zip(fast) {
            assert!((synthesize_field(&beta, *p) - v).norm() < 1e-12);
        }
    }

    #[test]
    fn arithmetic_checks_order() {
        let a = ModeCoefficients::zeros(3, 1.0);
        let b = ModeCoefficients::zeros(4, 1.0);
        assert!(matches!(a.try_add(&b), Err(Error::OrderMismatch { .. })));
        let padded = a.with_order(4);
        assert_eq!(padded.len(), 9);
        assert!(padded.try_sub(&b).is_ok());
    }
}
