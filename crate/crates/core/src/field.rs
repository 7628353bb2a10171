//! Sources, circular arrays and the exact 2-D sound field.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::modal::{i_pow, ModeCoefficients};
use crate::specfun::{hankel2, hankel2_orders};
use crate::ComplexVec;

/// Points closer than this to a line source are treated as coincident.
const SINGULAR_DISTANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn from_polar(r: f64, phi: f64) -> Self {
        Self {
            x: r * phi.cos(),
            y: r * phi.sin(),
        }
    }

    pub fn to_polar(self) -> (f64, f64) {
        (self.x.hypot(self.y), self.y.atan2(self.x))
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A single primary source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Source {
    /// Infinite line source perpendicular to the plane; Green's function
    /// `-(i/4) H0^(2)(k |x - x_s|)`.
    Line {
        radius: f64,
        azimuth: f64,
        amplitude: Complex64,
    },
    /// Plane wave arriving from `azimuth`, `exp(i k (x cos phi + y sin phi))`.
    PlaneWave { azimuth: f64, amplitude: Complex64 },
}

impl Source {
    pub fn line(radius: f64, azimuth: f64, amplitude: Complex64) -> Self {
        Source::Line {
            radius,
            azimuth,
            amplitude,
        }
    }

    pub fn plane_wave(azimuth: f64, amplitude: Complex64) -> Self {
        Source::PlaneWave { azimuth, amplitude }
    }

    pub fn amplitude(&self) -> Complex64 {
        match *self {
            Source::Line { amplitude, .. } | Source::PlaneWave { amplitude, .. } => amplitude,
        }
    }

    pub fn with_amplitude(self, amplitude: Complex64) -> Self {
        match self {
            Source::Line { radius, azimuth, .. } => Source::Line {
                radius,
                azimuth,
                amplitude,
            },
            Source::PlaneWave { azimuth, .. } => Source::PlaneWave { azimuth, amplitude },
        }
    }

    /// Pressure at `x` for wavenumber `k`.
    pub fn pressure(&self, k: f64, x: Point) -> Result<Complex64> {
        match *self {
            Source::PlaneWave { azimuth, amplitude } => {
                let phase = k * (x.x * azimuth.cos() + x.y * azimuth.sin());
                Ok(amplitude * Complex64::from_polar(1.0, phase))
            }
            Source::Line {
                radius,
                azimuth,
                amplitude,
            } => {
                let d = x.distance(Point::from_polar(radius, azimuth));
                if d < SINGULAR_DISTANCE {
                    return Err(Error::Singular { x: x.x, y: x.y });
                }
                Ok(amplitude * Complex64::new(0.0, -0.25) * hankel2(0, k * d)?)
            }
        }
    }

    /// Exact circular-harmonic coefficients valid inside the disc that
    /// excludes the source.
    pub fn modes(&self, k: f64, order: usize) -> Result<ModeCoefficients> {
        match *self {
            Source::PlaneWave { azimuth, amplitude } => Ok(ModeCoefficients::from_fn(order, k, |m| {
                amplitude * i_pow(m) * Complex64::from_polar(1.0, -f64::from(m) * azimuth)
            })),
            Source::Line {
                radius,
                azimuth,
                amplitude,
            } => {
                let h = hankel2_orders(order as u32, k * radius)?;
                let scale = amplitude * Complex64::new(0.0, -0.25);
                Ok(ModeCoefficients::from_fn(order, k, |m| {
                    let n = m.unsigned_abs() as usize;
                    let hm = if m < 0 && m % 2 != 0 { -h[n] } else { h[n] };
                    scale * hm * Complex64::from_polar(1.0, -f64::from(m) * azimuth)
                }))
            }
        }
    }
}

/// A collection of primary sources in a medium with speed of sound `c`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub sources: Vec<Source>,
    pub speed_of_sound: f64,
}

impl Scene {
    pub fn new(sources: Vec<Source>, speed_of_sound: f64) -> Self {
        Self {
            sources,
            speed_of_sound,
        }
    }

    pub fn wavenumber(&self, frequency: f64) -> f64 {
        2.0 * PI * frequency / self.speed_of_sound
    }

    /// Same geometry with every amplitude multiplied by the matching factor.
    pub fn with_amplitude_factors(&self, factors: &[Complex64]) -> Scene {
        let sources = self
            .sources
            .iter()
            .zip(factors)
            .map(|(s, &f)| s.with_amplitude(s.amplitude() * f))
            .collect();
        Scene::new(sources, self.speed_of_sound)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrayRole {
    Reference,
    Error,
    Loudspeaker,
}

/// Uniform circular array: element `q` sits at angle `2 pi q / Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct ArrayGeometry {
    radius: f64,
    count: usize,
    role: ArrayRole,
}

impl ArrayGeometry {
    pub fn new(radius: f64, count: usize, role: ArrayRole) -> Result<Self> {
        if !(radius >= 0.0 && radius.is_finite()) {
            return Err(Error::Domain {
                function: "ArrayGeometry::new",
                arg: radius,
                requirement: "radius must be finite and non-negative",
            });
        }
        if count == 0 {
            return Err(Error::Domain {
                function: "ArrayGeometry::new",
                arg: 0.0,
                requirement: "at least one element",
            });
        }
        Ok(Self {
            radius,
            count,
            role,
        })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn role(&self) -> ArrayRole {
        self.role
    }

    pub fn angle(&self, q: usize) -> f64 {
        2.0 * PI * q as f64 / self.count as f64
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.count).map(|q| self.angle(q)).collect()
    }

    pub fn positions(&self) -> Vec<Point> {
        (0..self.count)
            .map(|q| Point::from_polar(self.radius, self.angle(q)))
            .collect()
    }
}

/// Total pressure of the scene at `x`.
pub fn pressure_at(scene: &Scene, frequency: f64, x: Point) -> Result<Complex64> {
    let k = scene.wavenumber(frequency);
    scene
        .sources
        .iter()
        .try_fold(Complex64::new(0.0, 0.0), |acc, s| Ok(acc + s.pressure(k, x)?))
}

/// Pressure at every element of `array`.
pub fn sample_array(scene: &Scene, frequency: f64, array: &ArrayGeometry) -> Result<ComplexVec> {
    let values = array
        .positions()
        .into_iter()
        .map(|p| pressure_at(scene, frequency, p))
        .collect::<Result<Vec<_>>>()?;
    Ok(ComplexVec::from_vec(values))
}

/// Exact mode coefficients of the scene up to `order`.
pub fn true_mode_coefficients(
    scene: &Scene,
    frequency: f64,
    order: usize,
) -> Result<ModeCoefficients> {
    let k = scene.wavenumber(frequency);
    scene
        .sources
        .iter()
        .try_fold(ModeCoefficients::zeros(order, k), |acc, s| acc.try_add(&s.modes(k, order)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::modal::{extract_modes, synthesize_field};

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn plane_wave_at_origin_is_amplitude() {
        let a = Complex64::new(0.3, -1.2);
        let scene = Scene::new(vec![Source::plane_wave(0.4, a)], 343.0);
        let p = pressure_at(&scene, 700.0, Point::new(0.0, 0.0)).unwrap();
        assert!((p - a).norm() < 1e-15);
    }

    #[test]
    fn empty_scene_is_silent() {
        let scene = Scene::new(vec![], 343.0);
        let arr = ArrayGeometry::new(1.0, 7, ArrayRole::Error).unwrap();
        assert!(sample_array(&scene, 300.0, &arr).unwrap().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn line_source_reference_value() {
        // -(i/4) H0^(2)(2 pi 400 / 343 * 1.5), H0^(2) from mpmath
        let h = Complex64::new(-0.17277599119516, 0.16736567544394575);
        let want = Complex64::new(0.0, -0.25) * h;
        let scene = Scene::new(vec![Source::line(1.5, 0.0, one())], 343.0);
        let p = pressure_at(&scene, 400.0, Point::new(0.0, 0.0)).unwrap();
        assert!((p - want).norm() < 1e-12);
    }

    #[test]
    fn coincident_point_is_singular() {
        let scene = Scene::new(vec![Source::line(3.0, PI / 2.0, one())], 343.0);
        let err = pressure_at(&scene, 100.0, Point::new(0.0, 3.0)).unwrap_err();
        assert!(matches!(err, Error::Singular { .. }));
    }

    #[test]
    fn array_validation() {
        assert!(ArrayGeometry::new(-1.0, 4, ArrayRole::Reference).is_err());
        assert!(ArrayGeometry::new(1.0, 0, ArrayRole::Reference).is_err());
        let a = ArrayGeometry::new(2.0, 4, ArrayRole::Reference).unwrap();
        let p = a.positions();
        assert!((p[1].y - 2.0).abs() < 1e-15 && p[1].x.abs() < 1e-15);
    }

    #[test]
    fn line_source_modes_reproduce_field() {
        let scene = Scene::new(vec![Source::line(3.0, 0.3, Complex64::new(0.5, 0.5))], 343.0);
        let f = 500.0;
        let beta = true_mode_coefficients(&scene, f, 60).unwrap();
        for &(r, phi) in &[(0.0, 0.0), (0.5, 1.0), (1.0, -2.0), (1.9, 0.3)] {
            let x = Point::from_polar(r, phi);
            let exact = pressure_at(&scene, f, x).unwrap();
            let series = synthesize_field(&beta, x);
            assert!((exact - series).norm() < 1e-9 * exact.norm().max(1e-3), "r={r}");
        }
    }

    #[test]
    fn extraction_recovers_true_modes_below_nyquist() {
        let scene = Scene::new(
            vec![
                Source::line(3.0, 0.0, one()),
                Source::plane_wave(2.0, Complex64::new(0.0, 1.0)),
            ],
            343.0,
        );
        let arr = ArrayGeometry::new(2.0, 41, ArrayRole::Reference).unwrap();
        let f = 300.0;
        let k = scene.wavenumber(f);
        let s = sample_array(&scene, f, &arr).unwrap();
        let est = extract_modes(&s, &arr, k, 20).unwrap();
        let truth = true_mode_coefficients(&scene, f, 20).unwrap();
        for m in est.orders() {
            if est.is_flagged(m) || m.unsigned_abs() > 12 {
                continue;
            }
            assert!((est.get(m) - truth.get(m)).norm() < 1e-6, "m={m}");
        }
    }
}
