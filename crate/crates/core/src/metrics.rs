//! Evaluation over the control region: SDR, noise level and mode-error maps.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::Point;
use crate::modal::{ModeCoefficients, SynthesisBasis};

/// Lowest dB value written to output files.
pub const DB_FLOOR: f64 = -120.0;
/// Noise levels above this are clamped (the loop has lost control).
pub const NOISE_LEVEL_CEILING: f64 = 20.0;

/// Polar sample grid covering a disc.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalGrid {
    control_radius: f64,
    radii: usize,
    angles: usize,
    points: Vec<Point>,
}

impl EvalGrid {
    /// `radii` rings at the midpoints of equal radial intervals, each with
    /// `angles` equally spaced points.
    pub fn polar(control_radius: f64, radii: usize, angles: usize) -> Result<Self> {
        if !(control_radius > 0.0 && control_radius.is_finite()) {
            return Err(Error::Domain {
                function: "EvalGrid::polar",
                arg: control_radius,
                requirement: "control radius must be positive",
            });
        }
        if radii == 0 || angles == 0 {
            return Err(Error::Undefined("evaluation grid must be nonempty"));
        }
        let mut points = Vec::with_capacity(radii * angles);
        for i in 0..radii {
            let r = control_radius * (i as f64 + 0.5) / radii as f64;
            for j in 0..angles {
                let phi = 2.0 * std::f64::consts::PI * j as f64 / angles as f64;
                points.push(Point::from_polar(r, phi));
            }
        }
        Ok(Self {
            control_radius,
            radii,
            angles,
            points,
        })
    }

    /// The default 24 x 64 grid.
    pub fn standard(control_radius: f64) -> Result<Self> {
        Self::polar(control_radius, 24, 64)
    }

    pub fn control_radius(&self) -> f64 {
        self.control_radius
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.radii, self.angles)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn basis(&self, k: f64, order: usize) -> SynthesisBasis {
        SynthesisBasis::new(&self.points, k, order)
    }
}

fn power(values: &[Complex64]) -> f64 {
    values.iter().map(|v| v.norm_sqr()).sum()
}

fn same_len(a: &[Complex64], b: &[Complex64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Shape {
            what: "field values on the evaluation grid",
            expected: a.len(),
            actual: b.len(),
        });
    }
    Ok(())
}

/// `10 log10(sum |S|^2 / sum |S - S_rep|^2)`; `+inf` on an exact match.
pub fn sdr(truth: &[Complex64], reproduced: &[Complex64]) -> Result<f64> {
    same_len(truth, reproduced)?;
    let signal = power(truth);
    if signal == 0.0 {
        return Err(Error::Undefined("SDR of an all-zero field"));
    }
    let distortion: f64 = truth
        .iter()
        .zip(reproduced)
        .map(|(t, r)| (t - r).norm_sqr())
        .sum();
    if distortion == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (signal / distortion).log10())
}

/// SDR between two mode expansions synthesized with a shared basis.
pub fn sdr_modes(
    truth: &ModeCoefficients,
    reproduced: &ModeCoefficients,
    basis: &SynthesisBasis,
) -> Result<f64> {
    sdr(&basis.synthesize(truth), &basis.synthesize(reproduced))
}

/// `10 log10(sum |e|^2 / sum |S|^2)` on field values, clamped at
/// [`NOISE_LEVEL_CEILING`]; `-inf` for a silent residual.
pub fn noise_level_values(residual: &[Complex64], initial: &[Complex64]) -> Result<f64> {
    same_len(residual, initial)?;
    pooled_noise_level(power(residual), power(initial))
}

/// Noise level from accumulated residual and primary powers.
pub fn pooled_noise_level(residual_power: f64, initial_power: f64) -> Result<f64> {
    if initial_power == 0.0 {
        return Err(Error::Undefined("noise level relative to a silent field"));
    }
    if residual_power == 0.0 {
        return Ok(f64::NEG_INFINITY);
    }
    if !residual_power.is_finite() {
        return Ok(NOISE_LEVEL_CEILING);
    }
    Ok((10.0 * (residual_power / initial_power).log10()).min(NOISE_LEVEL_CEILING))
}

/// Noise level of a residual mode expansion relative to the primary field.
pub fn noise_level(
    residual: &ModeCoefficients,
    initial: &ModeCoefficients,
    grid: &EvalGrid,
) -> Result<f64> {
    if residual.order() != initial.order() {
        return Err(Error::OrderMismatch {
            left: residual.order(),
            right: initial.order(),
        });
    }
    let basis = grid.basis(initial.wavenumber(), initial.order());
    noise_level_values(&basis.synthesize(residual), &basis.synthesize(initial))
}

/// `20 log10 |beta_hat_m - beta_m|` over a frequency x mode grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorMap {
    pub frequencies: Vec<f64>,
    pub order: usize,
    /// One row per frequency, `m = -M..=M`; `None` marks a flagged mode.
    pub rows: Vec<Vec<Option<f64>>>,
}

impl ErrorMap {
    pub fn get(&self, row: usize, m: i32) -> Option<f64> {
        self.rows[row][(m + self.order as i32) as usize]
    }
}

pub fn mode_error_map(
    frequencies: &[f64],
    truth: &[ModeCoefficients],
    estimated: &[ModeCoefficients],
) -> Result<ErrorMap> {
    if truth.len() != frequencies.len() || estimated.len() != frequencies.len() {
        return Err(Error::Shape {
            what: "mode sets per frequency",
            expected: frequencies.len(),
            actual: truth.len().min(estimated.len()),
        });
    }
    let order = truth.first().map_or(0, ModeCoefficients::order);
    let mut rows = Vec::with_capacity(frequencies.len());
    for (t, e) in truth.iter().zip(estimated) {
        if t.order() != order || e.order() != order {
            return Err(Error::OrderMismatch {
                left: order,
                right: if t.order() != order { t.order() } else { e.order() },
            });
        }
        rows.push(
            t.orders()
                .map(|m| {
                    if e.is_flagged(m) || t.is_flagged(m) {
                        None
                    } else {
                        let err = (e.get(m) - t.get(m)).norm();
                        Some(if err == 0.0 { f64::NEG_INFINITY } else { 20.0 * err.log10() })
                    }
                })
                .collect(),
        );
    }
    Ok(ErrorMap {
        frequencies: frequencies.to_vec(),
        order,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::i_pow;

    fn field(n: usize) -> Vec<Complex64> {
        (0..n).map(|i| Complex64::new((i as f64).cos(), 0.3 * i as f64)).collect()
    }

    #[test]
    fn grid_shape() {
        let g = EvalGrid::standard(1.0).unwrap();
        assert_eq!(g.len(), 24 * 64);
        assert!(g.points().iter().all(|p| p.to_polar().0 <= 1.0));
        assert!(EvalGrid::polar(0.0, 2, 2).is_err());
        assert!(EvalGrid::polar(1.0, 0, 2).is_err());
    }

    #[test]
    fn sdr_examples() {
        let t = field(50);
        assert_eq!(sdr(&t, &t).unwrap(), f64::INFINITY);
        let zero = vec![Complex64::new(0.0, 0.0); 50];
        assert!(sdr(&t, &zero).unwrap().abs() < 1e-12);
        let scaled: Vec<_> = t.iter().map(|v| v * 1.001).collect();
        assert!((sdr(&t, &scaled).unwrap() - 60.0).abs() < 1e-6);
        assert!(matches!(sdr(&zero, &t), Err(Error::Undefined(_))));
        assert!(sdr(&t, &t[..3]).is_err());
    }

    #[test]
    fn sdr_is_scale_invariant() {
        let t = field(40);
        let r: Vec<_> = t.iter().map(|v| v * Complex64::new(0.9, 0.05)).collect();
        let c = Complex64::new(-3.0, 7.5);
        let ts: Vec<_> = t.iter().map(|v| v * c).collect();
        let rs: Vec<_> = r.iter().map(|v| v * c).collect();
        assert!((sdr(&t, &r).unwrap() - sdr(&ts, &rs).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn noise_level_examples() {
        let grid = EvalGrid::standard(1.0).unwrap();
        let beta = ModeCoefficients::from_fn(10, 6.0, |m| i_pow(m) * 0.5);
        assert!(noise_level(&beta, &beta, &grid).unwrap().abs() < 1e-12);
        let zero = ModeCoefficients::zeros(10, 6.0);
        assert_eq!(noise_level(&zero, &beta, &grid).unwrap(), f64::NEG_INFINITY);
        let tenth = beta.scaled(Complex64::new(0.1, 0.0));
        assert!((noise_level(&tenth, &beta, &grid).unwrap() + 20.0).abs() < 1e-10);
        let c = Complex64::new(0.3, -0.4);
        let level = noise_level(&beta.scaled(c), &beta, &grid).unwrap();
        assert!((level - 20.0 * c.norm().log10()).abs() < 1e-10);
        let huge = beta.scaled(Complex64::new(1e3, 0.0));
        assert_eq!(noise_level(&huge, &beta, &grid).unwrap(), NOISE_LEVEL_CEILING);
        assert!(noise_level(&beta, &zero, &grid).is_err());
    }

    #[test]
    fn grid_refinement_is_stable() {
        let truth = ModeCoefficients::from_fn(12, 8.0, |m| i_pow(m) * Complex64::from_polar(1.0, -0.4 * f64::from(m)));
        let rep = ModeCoefficients::from_fn(12, 8.0, |m| {
            truth.get(m) * if m.abs() > 8 { 0.0 } else { 1.0 }
        });
        let coarse = EvalGrid::polar(1.0, 24, 64).unwrap();
        let fine = EvalGrid::polar(1.0, 48, 128).unwrap();
        let a = sdr_modes(&truth, &rep, &coarse.basis(8.0, 12)).unwrap();
        let b = sdr_modes(&truth, &rep, &fine.basis(8.0, 12)).unwrap();
        assert!((a - b).abs() < 0.1, "{a} vs {b}");
    }

    #[test]
    fn error_map_cells() {
        let t = ModeCoefficients::from_fn(2, 1.0, |m| Complex64::new(f64::from(m), 0.0));
        let mut e = t.clone();
        e.set(1, Complex64::new(1.1, 0.0));
        e.flag(-2);
        let map = mode_error_map(&[100.0], &[t.clone()], &[e]).unwrap();
        assert_eq!(map.get(0, 0), Some(f64::NEG_INFINITY));
        assert!((map.get(0, 1).unwrap() + 20.0).abs() < 1e-9);
        assert_eq!(map.get(0, -2), None);
        assert!(mode_error_map(&[1.0, 2.0], &[t.clone()], &[t]).is_err());
    }
}
