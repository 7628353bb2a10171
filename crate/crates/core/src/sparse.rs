//! Plane-wave dictionary and sparse solvers for the reference field.
//!
//! The reference samples are modelled as `s = E gamma + v`, where column `l`
//! of `E` is a unit plane wave from angle `2 pi l / L` sampled on the array.
//! Two solvers estimate a sparse `gamma`: a subgradient descent on
//! `||v||^2 + lambda1 (||Re gamma||_1 + ||Im gamma||_1)` and an IRLS scheme
//! for `(1/p) ||gamma||_p^p + (lambda2 / 2) ||v||^2`.

use std::f64::consts::PI;

use nalgebra::Cholesky;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::ArrayGeometry;
use crate::{ComplexMat, ComplexVec};

const DIVERGENCE_RATIO: f64 = 1e6;

#[derive(Debug, Clone)]
pub struct Dictionary {
    matrix: ComplexMat,
    // conjugate transpose, cached: every iteration of both solvers needs it
    adjoint: ComplexMat,
    angles: Vec<f64>,
    array: ArrayGeometry,
    wavenumber: f64,
}

impl Dictionary {
    /// `Q x L` matrix `E`.
    pub fn matrix(&self) -> &ComplexMat {
        &self.matrix
    }

    pub fn adjoint(&self) -> &ComplexMat {
        &self.adjoint
    }

    pub fn angles(&self) -> &[f64] {
        &self.angles
    }

    pub fn array(&self) -> &ArrayGeometry {
        &self.array
    }

    pub fn wavenumber(&self) -> f64 {
        self.wavenumber
    }

    pub fn rows(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn atoms(&self) -> usize {
        self.matrix.ncols()
    }

    /// Spectral norm of `E` by power iteration on `E E^H`.
    pub fn spectral_norm(&self) -> f64 {
        // a ramp start vector: a constant one would stay inside the
        // rotation-invariant subspace of a uniform circular array
        let q = self.rows();
        let mut x = ComplexVec::from_fn(q, |i, _| Complex64::new(1.0 + i as f64, 0.5));
        x.unscale_mut(x.norm());
        let mut sigma2 = 0.0;
        for _ in 0..1000 {
            let y = &self.matrix * (&self.adjoint * &x);
            let norm = y.norm();
            if norm == 0.0 {
                return 0.0;
            }
            let prev = sigma2;
            sigma2 = norm;
            x = y.unscale(norm);
            if (sigma2 - prev).abs() <= 1e-13 * sigma2 {
                break;
            }
        }
        sigma2.sqrt()
    }
}

/// `E[q, l] = exp(i k r cos(phi_q - phi_l))` with `phi_l = 2 pi l / L`.
pub fn build_dictionary(array: &ArrayGeometry, k: f64, atoms: usize) -> Result<Dictionary> {
    if atoms == 0 {
        return Err(Error::Domain {
            function: "build_dictionary",
            arg: 0.0,
            requirement: "at least one plane wave",
        });
    }
    if !(k >= 0.0 && k.is_finite()) {
        return Err(Error::Domain {
            function: "build_dictionary",
            arg: k,
            requirement: "wavenumber must be finite and non-negative",
        });
    }
    let angles: Vec<f64> = (0..atoms).map(|l| 2.0 * PI * l as f64 / atoms as f64).collect();
    let mic = array.angles();
    let kr = k * array.radius();
    let matrix = ComplexMat::from_fn(mic.len(), atoms, |q, l| {
        Complex64::from_polar(1.0, kr * (mic[q] - angles[l]).cos())
    });
    let adjoint = matrix.adjoint();
    Ok(Dictionary {
        matrix,
        adjoint,
        angles,
        array: array.clone(),
        wavenumber: k,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverVariant {
    L1,
    Irls,
}

/// Solver hyperparameters. `None` for `lambda1` / `mu_mic` selects the
/// data-dependent defaults (`lambda1_scale * ||E^H s||_inf` and
/// `mu_scale / ||E||_2^2`).
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub variant: SolverVariant,
    pub lambda1: Option<f64>,
    pub lambda1_scale: f64,
    pub mu_mic: Option<f64>,
    pub mu_scale: f64,
    pub lambda2: f64,
    pub p: f64,
    pub max_iters: usize,
    pub tolerance: f64,
    pub eps_initial: f64,
    pub eps_decay: f64,
    pub eps_floor: f64,
    /// Solve IRLS on `s / rms(s)` and rescale, making `lambda2` scale-free.
    pub normalize: bool,
}

impl SolverConfig {
    pub fn l1() -> Self {
        Self {
            variant: SolverVariant::L1,
            max_iters: 500,
            ..Self::irls(1.0)
        }
    }

    pub fn irls(p: f64) -> Self {
        Self {
            variant: SolverVariant::Irls,
            lambda1: None,
            lambda1_scale: 1e-2,
            mu_mic: None,
            mu_scale: 0.5,
            lambda2: 1e3,
            p,
            max_iters: 100,
            tolerance: 1e-6,
            eps_initial: 1.0,
            eps_decay: 10.0,
            eps_floor: 1e-8,
            normalize: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let check = |ok: bool, arg: f64, requirement: &'static str| {
            if ok {
                Ok(())
            } else {
                Err(Error::Domain {
                    function: "SolverConfig",
                    arg,
                    requirement,
                })
            }
        };
        if let Some(mu) = self.mu_mic {
            check(mu > 0.0, mu, "mu_mic > 0")?;
        }
        if let Some(l1) = self.lambda1 {
            check(l1 >= 0.0, l1, "lambda1 >= 0")?;
        }
        check(self.mu_scale > 0.0, self.mu_scale, "mu scale > 0")?;
        check(self.lambda1_scale >= 0.0, self.lambda1_scale, "lambda1 scale >= 0")?;
        check(self.lambda2 >= 0.0, self.lambda2, "lambda2 >= 0")?;
        check(self.p > 0.0 && self.p <= 1.0, self.p, "0 < p <= 1")?;
        check(self.tolerance >= 0.0, self.tolerance, "tolerance >= 0")?;
        check(self.eps_initial > 0.0, self.eps_initial, "eps_initial > 0")?;
        check(self.eps_decay > 1.0, self.eps_decay, "eps_decay > 1")?;
        check(
            self.eps_floor > 0.0 && self.eps_floor <= self.eps_initial,
            self.eps_floor,
            "0 < eps_floor <= eps_initial",
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveResult {
    pub gamma: ComplexVec,
    pub iterations: usize,
    /// `||s - E gamma||_2`, recomputed at exit.
    pub residual_norm: f64,
    pub converged: bool,
    /// Residual norm after each iteration.
    pub residual_history: Vec<f64>,
}

/// `(d/d Re + i d/d Im) ||s - E gamma||^2 = -2 E^H (s - E gamma)`.
pub fn smooth_gradient(dict: &Dictionary, s: &ComplexVec, gamma: &ComplexVec) -> ComplexVec {
    let v = s - dict.matrix() * gamma;
    dict.adjoint() * v * Complex64::new(-2.0, 0.0)
}

/// `||v||^2 + lambda1 (||Re gamma||_1 + ||Im gamma||_1)`.
pub fn l1_cost(dict: &Dictionary, s: &ComplexVec, gamma: &ComplexVec, lambda1: f64) -> f64 {
    let v = s - dict.matrix() * gamma;
    let penalty: f64 = gamma.iter().map(|g| g.re.abs() + g.im.abs()).sum();
    v.norm_squared() + lambda1 * penalty
}

/// `(1/p) sum (|gamma|^2 + eps)^(p/2) + (lambda2 / 2) ||v||^2`.
pub fn irls_objective(
    dict: &Dictionary,
    s: &ComplexVec,
    gamma: &ComplexVec,
    p: f64,
    lambda2: f64,
    eps: f64,
) -> f64 {
    let v = s - dict.matrix() * gamma;
    let penalty: f64 = gamma.iter().map(|g| (g.norm_sqr() + eps).powf(p / 2.0)).sum();
    penalty / p + 0.5 * lambda2 * v.norm_squared()
}

fn check_lengths(dict: &Dictionary, s: &ComplexVec, warm: Option<&ComplexVec>) -> Result<()> {
    if s.len() != dict.rows() {
        return Err(Error::Shape {
            what: "observation vs dictionary rows",
            expected: dict.rows(),
            actual: s.len(),
        });
    }
    if let Some(g) = warm {
        if g.len() != dict.atoms() {
            return Err(Error::Shape {
                what: "warm start vs dictionary atoms",
                expected: dict.atoms(),
                actual: g.len(),
            });
        }
    }
    Ok(())
}

fn sgn(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Subgradient descent state for the l1-penalized least-squares problem.
#[derive(Debug, Clone)]
pub struct L1Solver<'a> {
    dict: &'a Dictionary,
    s: ComplexVec,
    s_norm: f64,
    gamma: ComplexVec,
    mu: f64,
    lambda1: f64,
    tolerance: f64,
    iterations: usize,
    history: Vec<f64>,
}

impl<'a> L1Solver<'a> {
    pub fn new(
        dict: &'a Dictionary,
        s: &ComplexVec,
        cfg: &SolverConfig,
        warm_start: Option<&ComplexVec>,
    ) -> Result<Self> {
        cfg.validate()?;
        check_lengths(dict, s, warm_start)?;
        let mu = match cfg.mu_mic {
            Some(mu) => mu,
            None => {
                let norm = dict.spectral_norm();
                if norm == 0.0 {
                    cfg.mu_scale
                } else {
                    cfg.mu_scale / (norm * norm)
                }
            }
        };
        let lambda1 = match cfg.lambda1 {
            Some(l) => l,
            None => cfg.lambda1_scale * (dict.adjoint() * s).iter().map(|c| c.norm()).fold(0.0, f64::max),
        };
        Ok(Self {
            dict,
            s: s.clone(),
            s_norm: s.norm(),
            gamma: warm_start
                .cloned()
                .unwrap_or_else(|| ComplexVec::zeros(dict.atoms())),
            mu,
            lambda1,
            tolerance: cfg.tolerance,
            iterations: 0,
            history: Vec::new(),
        })
    }

    pub fn gamma(&self) -> &ComplexVec {
        &self.gamma
    }

    pub fn step_size(&self) -> f64 {
        self.mu
    }

    pub fn lambda1(&self) -> f64 {
        self.lambda1
    }

    pub fn cost(&self) -> f64 {
        l1_cost(self.dict, &self.s, &self.gamma, self.lambda1)
    }

    /// One descent step. Returns `true` once the relative change falls
    /// below the tolerance.
    pub fn step(&mut self) -> Result<bool> {
        let v = &self.s - self.dict.matrix() * &self.gamma;
        let v_norm = v.norm();
        if v_norm > DIVERGENCE_RATIO * self.s_norm && self.s_norm > 0.0 {
            return Err(Error::Divergence {
                iterations: self.iterations,
                residual: v_norm,
                observation: self.s_norm,
            });
        }
        let grad = self.dict.adjoint() * v;
        let shrink = 0.5 * self.mu * self.lambda1;
        let mut delta_sq = 0.0;
        for (g, d) in self.gamma.iter_mut().zip(grad.iter()) {
            let next = *g + d * self.mu - Complex64::new(sgn(g.re), sgn(g.im)) * shrink;
            delta_sq += (next - *g).norm_sqr();
            *g = next;
        }
        self.iterations += 1;
        self.history
            .push((&self.s - self.dict.matrix() * &self.gamma).norm());
        Ok(delta_sq.sqrt() <= self.tolerance * self.gamma.norm())
    }

    pub fn run(mut self, max_iters: usize) -> Result<SolveResult> {
        let mut converged = false;
        while self.iterations < max_iters {
            if self.step()? {
                converged = true;
                break;
            }
        }
        Ok(finish(self.dict, &self.s, self.gamma, self.iterations, converged, self.history, 1.0))
    }
}

fn finish(
    dict: &Dictionary,
    s: &ComplexVec,
    gamma: ComplexVec,
    iterations: usize,
    converged: bool,
    mut history: Vec<f64>,
    scale: f64,
) -> SolveResult {
    let gamma = gamma * Complex64::new(scale, 0.0);
    for h in history.iter_mut() {
        *h *= scale;
    }
    let residual_norm = (s * Complex64::new(scale, 0.0) - dict.matrix() * &gamma).norm();
    SolveResult {
        gamma,
        iterations,
        residual_norm,
        converged,
        residual_history: history,
    }
}

/// Information about a single IRLS outer iteration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IrlsStep {
    /// Smoothing parameter used to form this iteration's weights.
    pub eps: f64,
    /// Objective at the new iterate, evaluated with `eps`.
    pub objective: f64,
    pub change: f64,
    pub converged: bool,
}

/// Iteratively reweighted least squares for the lp-penalized BPD problem.
#[derive(Debug, Clone)]
pub struct IrlsSolver<'a> {
    dict: &'a Dictionary,
    // observation after optional normalization
    s: ComplexVec,
    scale: f64,
    gamma: ComplexVec,
    p: f64,
    lambda2: f64,
    eps: f64,
    eps_decay: f64,
    eps_floor: f64,
    tolerance: f64,
    iterations: usize,
    history: Vec<f64>,
}

impl<'a> IrlsSolver<'a> {
    pub fn new(
        dict: &'a Dictionary,
        s: &ComplexVec,
        cfg: &SolverConfig,
        warm_start: Option<&ComplexVec>,
    ) -> Result<Self> {
        cfg.validate()?;
        check_lengths(dict, s, warm_start)?;
        let rms = s.norm() / (s.len() as f64).sqrt();
        let scale = if cfg.normalize && rms > 0.0 { rms } else { 1.0 };
        let inv = Complex64::new(1.0 / scale, 0.0);
        Ok(Self {
            dict,
            s: s * inv,
            scale,
            gamma: warm_start
                .map(|g| g * inv)
                .unwrap_or_else(|| ComplexVec::zeros(dict.atoms())),
            p: cfg.p,
            lambda2: cfg.lambda2,
            eps: cfg.eps_initial,
            eps_decay: cfg.eps_decay,
            eps_floor: cfg.eps_floor,
            tolerance: cfg.tolerance,
            iterations: 0,
            history: Vec::new(),
        })
    }

    /// Current iterate in the caller's scale.
    pub fn gamma(&self) -> ComplexVec {
        &self.gamma * Complex64::new(self.scale, 0.0)
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Objective of the (normalized) problem at the current iterate.
    pub fn objective(&self, eps: f64) -> f64 {
        irls_objective(self.dict, &self.s, &self.gamma, self.p, self.lambda2, eps)
    }

    pub fn step(&mut self) -> Result<IrlsStep> {
        let eps = self.eps;
        let e = self.dict.matrix();
        let eh = self.dict.adjoint();
        let q = self.dict.rows();
        let l = self.dict.atoms();
        let weights: Vec<f64> = self
            .gamma
            .iter()
            .map(|g| (g.norm_sqr() + eps).powf(1.0 - self.p / 2.0))
            .collect();
        let next = if self.lambda2 == 0.0 {
            // pure penalty: the minimizer is zero
            ComplexVec::zeros(l)
        } else if q < l {
            // gamma = U E^H (E U E^H + I / lambda2)^{-1} s, a Q x Q solve
            let mut eu = e.clone();
            for (j, &u) in weights.iter().enumerate() {
                eu.column_mut(j).scale_mut(u);
            }
            let mut a = &eu * eh;
            let ridge = 1.0 / self.lambda2;
            for i in 0..q {
                a[(i, i)] += ridge;
            }
            let chol = Cholesky::new(a).ok_or(Error::LinearSolve {
                iteration: self.iterations,
            })?;
            let z = chol.solve(&self.s);
            eu.adjoint() * z
        } else {
            // equivalent primal form when the dictionary is not wide:
            // (E^H E + U^{-1} / lambda2) gamma = E^H s
            let mut a = eh * e;
            for (j, &u) in weights.iter().enumerate() {
                a[(j, j)] += 1.0 / (u * self.lambda2);
            }
            let chol = Cholesky::new(a).ok_or(Error::LinearSolve {
                iteration: self.iterations,
            })?;
            chol.solve(&(eh * &self.s))
        };
        if next.iter().any(|g| !g.re.is_finite() || !g.im.is_finite()) {
            return Err(Error::LinearSolve {
                iteration: self.iterations,
            });
        }
        let s_norm = self.s.norm();
        let v_norm = (&self.s - e * &next).norm();
        if s_norm > 0.0 && v_norm > DIVERGENCE_RATIO * s_norm {
            return Err(Error::Divergence {
                iterations: self.iterations,
                residual: v_norm * self.scale,
                observation: s_norm * self.scale,
            });
        }
        let change = (&next - &self.gamma).norm();
        let norm = next.norm();
        self.gamma = next;
        self.iterations += 1;
        self.history.push(v_norm * self.scale);
        let objective = self.objective(eps);

        let mut converged = false;
        if self.eps > self.eps_floor && change < self.eps.sqrt() * norm / 100.0 {
            self.eps = (self.eps / self.eps_decay).max(self.eps_floor);
        } else if change <= self.tolerance * norm {
            converged = true;
        }
        Ok(IrlsStep {
            eps,
            objective,
            change,
            converged,
        })
    }

    pub fn run(mut self, max_iters: usize) -> Result<SolveResult> {
        let mut converged = false;
        while self.iterations < max_iters {
            if self.step()?.converged {
                converged = true;
                break;
            }
        }
        Ok(finish(
            self.dict,
            &self.s,
            self.gamma,
            self.iterations,
            converged,
            self.history,
            self.scale,
        ))
    }
}

/// The trivial solution for a silent observation with no warm start.
fn silent(dict: &Dictionary) -> SolveResult {
    SolveResult {
        gamma: ComplexVec::zeros(dict.atoms()),
        iterations: 0,
        residual_norm: 0.0,
        converged: true,
        residual_history: Vec::new(),
    }
}

fn is_silent(s: &ComplexVec, warm: Option<&ComplexVec>) -> bool {
    s.iter().all(|c| c.norm_sqr() == 0.0) && warm.map_or(true, |g| g.iter().all(|c| c.norm_sqr() == 0.0))
}

pub fn solve_l1(s: &ComplexVec, dict: &Dictionary, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_l1_from(s, dict, cfg, None)
}

pub fn solve_l1_from(
    s: &ComplexVec,
    dict: &Dictionary,
    cfg: &SolverConfig,
    warm_start: Option<&ComplexVec>,
) -> Result<SolveResult> {
    let solver = L1Solver::new(dict, s, cfg, warm_start)?;
    if is_silent(s, warm_start) {
        return Ok(silent(dict));
    }
    solver.run(cfg.max_iters)
}

pub fn solve_irls(s: &ComplexVec, dict: &Dictionary, cfg: &SolverConfig) -> Result<SolveResult> {
    solve_irls_from(s, dict, cfg, None)
}

pub fn solve_irls_from(
    s: &ComplexVec,
    dict: &Dictionary,
    cfg: &SolverConfig,
    warm_start: Option<&ComplexVec>,
) -> Result<SolveResult> {
    let solver = IrlsSolver::new(dict, s, cfg, warm_start)?;
    if is_silent(s, warm_start) {
        return Ok(silent(dict));
    }
    solver.run(cfg.max_iters)
}

/// Dispatches on `cfg.variant`.
pub fn solve(
    s: &ComplexVec,
    dict: &Dictionary,
    cfg: &SolverConfig,
    warm_start: Option<&ComplexVec>,
) -> Result<SolveResult> {
    match cfg.variant {
        SolverVariant::L1 => solve_l1_from(s, dict, cfg, warm_start),
        SolverVariant::Irls => solve_irls_from(s, dict, cfg, warm_start),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::{sample_array, ArrayRole, Scene, Source};

    fn reference_array() -> ArrayGeometry {
        ArrayGeometry::new(2.0, 41, ArrayRole::Reference).unwrap()
    }

    fn k(f: f64) -> f64 {
        2.0 * PI * f / 343.0
    }

    fn one_hot(l: usize, idx: &[usize]) -> ComplexVec {
        let mut g = ComplexVec::zeros(l);
        for &i in idx {
            g[i] = Complex64::new(1.0, 0.0);
        }
        g
    }

    #[test]
    fn dictionary_entries() {
        let d = build_dictionary(&reference_array(), k(400.0), 128).unwrap();
        let kr = k(400.0) * 2.0;
        let mic = d.array().angles();
        for &(q, l) in &[(0, 0), (3, 17), (40, 127), (20, 64)] {
            let e = d.matrix()[(q, l)];
            assert!((e.norm() - 1.0).abs() < 1e-14);
            let want = Complex64::from_polar(1.0, kr * (mic[q] - d.angles()[l]).cos());
            assert!((e - want).norm() < 1e-14);
        }
        let origin = ArrayGeometry::new(0.0, 1, ArrayRole::Reference).unwrap();
        let d0 = build_dictionary(&origin, 5.0, 16).unwrap();
        assert!(d0.matrix().iter().all(|e| (e - Complex64::new(1.0, 0.0)).norm() == 0.0));
        let dk = build_dictionary(&reference_array(), 0.0, 16).unwrap();
        assert!(dk.matrix().iter().all(|e| (e - Complex64::new(1.0, 0.0)).norm() == 0.0));
        assert!(build_dictionary(&reference_array(), 1.0, 0).is_err());
    }

    #[test]
    fn dictionary_matches_field_samples() {
        let arr = reference_array();
        let f = 800.0;
        let d = build_dictionary(&arr, k(f), 128).unwrap();
        let gamma_star = [(5usize, Complex64::new(0.7, -0.2)), (77, Complex64::new(-1.0, 0.4))];
        let sources = gamma_star
            .iter()
            .map(|&(l, a)| Source::plane_wave(d.angles()[l], a))
            .collect();
        let scene = Scene::new(sources, 343.0);
        let s = sample_array(&scene, f, &arr).unwrap();
        let mut g = ComplexVec::zeros(128);
        for &(l, a) in &gamma_star {
            g[l] = a;
        }
        assert!((s - d.matrix() * g).norm() < 1e-10);
    }

    #[test]
    fn spectral_norm_matches_svd() {
        let d = build_dictionary(&reference_array(), k(600.0), 128).unwrap();
        let svd = d.matrix().clone().svd(false, false);
        let largest = svd.singular_values.max();
        assert!((d.spectral_norm() - largest).abs() < 1e-6 * largest);
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let d = build_dictionary(&reference_array(), k(700.0), 32).unwrap();
        let s = ComplexVec::from_fn(41, |q, _| Complex64::new((q as f64).sin(), (0.3 * q as f64).cos()));
        let gamma = ComplexVec::from_fn(32, |l, _| Complex64::new(0.1 * l as f64, -0.05 * l as f64));
        let grad = smooth_gradient(&d, &s, &gamma);
        let f = |g: &ComplexVec| (&s - d.matrix() * g).norm_squared();
        let h = 1e-6;
        for l in [0, 7, 31] {
            let mut plus = gamma.clone();
            let mut minus = gamma.clone();
            plus[l].re += h;
            minus[l].re -= h;
            let dre = (f(&plus) - f(&minus)) / (2.0 * h);
            let mut plus = gamma.clone();
            let mut minus = gamma.clone();
            plus[l].im += h;
            minus[l].im -= h;
            let dim = (f(&plus) - f(&minus)) / (2.0 * h);
            let fd = Complex64::new(dre, dim);
            assert!((fd - grad[l]).norm() <= 1e-5 * grad[l].norm(), "l={l}");
        }
    }

    #[test]
    fn silent_observation() {
        let d = build_dictionary(&reference_array(), k(500.0), 128).unwrap();
        let s = ComplexVec::zeros(41);
        let r = solve_l1(&s, &d, &SolverConfig::l1()).unwrap();
        assert_eq!(r.iterations, 0);
        assert!(r.gamma.iter().all(|g| g.norm() == 0.0));
        let r = solve_irls(&s, &d, &SolverConfig::irls(0.5)).unwrap();
        assert!(r.gamma.iter().all(|g| g.norm() == 0.0));
        assert!(r.converged);
    }

    #[test]
    fn l1_single_column() {
        let d = build_dictionary(&reference_array(), k(800.0), 128).unwrap();
        let target = 40;
        let s = d.matrix().column(target).into_owned();
        let r = solve_l1(&s, &d, &SolverConfig::l1()).unwrap();
        let peak = r.gamma[target].norm();
        for l in 0..128 {
            let dist = (l as i64 - target as i64).rem_euclid(128).min((target as i64 - l as i64).rem_euclid(128));
            if dist > 6 {
                assert!(peak > 10.0 * r.gamma[l].norm(), "l={l}");
            }
        }
    }

    #[test]
    fn l1_two_waves_residual() {
        let d = build_dictionary(&reference_array(), k(800.0), 128).unwrap();
        let s = d.matrix() * one_hot(128, &[10, 70]);
        let cfg = SolverConfig {
            max_iters: 200,
            ..SolverConfig::l1()
        };
        let r = solve_l1(&s, &d, &cfg).unwrap();
        assert!(r.iterations <= 200);
        assert!(r.residual_norm / s.norm() < 0.1, "{}", r.residual_norm / s.norm());
        let exact = (&s - d.matrix() * &r.gamma).norm();
        assert!((exact - r.residual_norm).abs() < 1e-12);
    }

    #[test]
    fn l1_cost_decreases_with_default_step() {
        let d = build_dictionary(&reference_array(), k(700.0), 128).unwrap();
        let s = d.matrix() * one_hot(128, &[3, 90]);
        let mut solver = L1Solver::new(&d, &s, &SolverConfig::l1(), None).unwrap();
        let mut prev = solver.cost();
        for _ in 0..30 {
            solver.step().unwrap();
            let cost = solver.cost();
            assert!(cost <= prev * (1.0 + 1e-9), "{cost} > {prev}");
            prev = cost;
        }
    }

    #[test]
    fn irls_recovers_two_waves_quickly() {
        let d = build_dictionary(&reference_array(), k(800.0), 128).unwrap();
        let s = d.matrix() * one_hot(128, &[10, 70]);
        let mut solver = IrlsSolver::new(&d, &s, &SolverConfig::irls(0.5), None).unwrap();
        for _ in 0..10 {
            solver.step().unwrap();
        }
        let g = solver.gamma();
        let mut idx: Vec<usize> = (0..128).collect();
        idx.sort_by(|&a, &b| g[b].norm().total_cmp(&g[a].norm()));
        let mut top = [idx[0], idx[1]];
        top.sort();
        assert_eq!(top, [10, 70]);
    }

    #[test]
    fn irls_objective_is_monotone_at_fixed_eps() {
        let d = build_dictionary(&reference_array(), k(900.0), 128).unwrap();
        let s = d.matrix() * one_hot(128, &[20, 21, 100]);
        let mut solver = IrlsSolver::new(&d, &s, &SolverConfig::irls(0.5), None).unwrap();
        for _ in 0..60 {
            let eps = solver.eps();
            let before = solver.objective(eps);
            let step = solver.step().unwrap();
            assert_eq!(step.eps, eps);
            assert!(step.objective <= before * (1.0 + 1e-12), "{} > {}", step.objective, before);
            if step.converged {
                break;
            }
        }
    }

    #[test]
    fn irls_tall_dictionary_approaches_least_squares() {
        let arr = ArrayGeometry::new(1.0, 24, ArrayRole::Reference).unwrap();
        let d = build_dictionary(&arr, 4.0, 8).unwrap();
        let s = d.matrix() * one_hot(8, &[3]) * Complex64::new(0.5, 1.0);
        let cfg = SolverConfig {
            lambda2: 1e12,
            ..SolverConfig::irls(1.0)
        };
        let r = solve_irls(&s, &d, &cfg).unwrap();
        let ls = d.matrix().clone().svd(true, true).solve(&s, 1e-12).unwrap();
        assert!((&r.gamma - ls).norm() < 1e-5);
    }

    #[test]
    fn warm_start_length_checked() {
        let d = build_dictionary(&reference_array(), k(500.0), 128).unwrap();
        let s = ComplexVec::zeros(41);
        let bad = ComplexVec::zeros(5);
        assert!(matches!(
            solve_irls_from(&s, &d, &SolverConfig::irls(0.5), Some(&bad)),
            Err(Error::Shape { .. })
        ));
        assert!(SolverConfig::irls(0.0).validate().is_err());
        assert!(SolverConfig::irls(1.5).validate().is_err());
    }
}
