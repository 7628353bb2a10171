//! Mode-domain feedforward control loop with a normalized LMS update.
//!
//! Each bin is simulated independently. The primary field is a sum of
//! sources whose complex amplitudes may change from frame to frame
//! ([`PhaseModel::Random`]); per frame the reference array is sampled, the
//! reference modes `x_m` are estimated, and the residual modes
//! `e_m = beta_m + w_m g_m x_m` drive the weight update.

use std::f64::consts::{PI, TAU};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{sample_array, ArrayGeometry, ArrayRole, Scene};
use crate::metrics::{pooled_noise_level, EvalGrid};
use crate::modal::{
    extract_modes_with_threshold, modes_from_plane_waves, truncation_order, ModeCoefficients,
    TruncationRule, BESSEL_ZERO_THRESHOLD,
};
use crate::sparse::{build_dictionary, Dictionary, IrlsSolver, L1Solver, SolverConfig};
use crate::specfun::hankel2_orders;
use crate::ComplexVec;

/// `|x'_m|^2` below this freezes the mode for the current step.
pub const FREEZE_THRESHOLD: f64 = 1e-20;

/// Reference-mode estimator.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Method {
    /// Direct circular-harmonic extraction from the reference array.
    Mdff,
    /// Sparse plane-wave fit by l1 subgradient descent.
    L1,
    /// Sparse plane-wave fit by lp IRLS.
    Irls { p: f64 },
}

impl Method {
    pub fn is_sparse(&self) -> bool {
        !matches!(self, Method::Mdff)
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Mdff => f.write_str("mdff"),
            Method::L1 => f.write_str("l1"),
            Method::Irls { p } => write!(f, "irls-p{p}"),
        }
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mdff" | "direct" => Ok(Method::Mdff),
            "l1" => Ok(Method::L1),
            _ => {
                let p = s
                    .strip_prefix("irls-p")
                    .and_then(|p| p.parse::<f64>().ok())
                    .ok_or_else(|| {
                        Error::Config(format!(
                            "unknown method `{s}` (expected mdff, l1 or irls-p<p>)"
                        ))
                    })?;
                if !(p > 0.0 && p <= 1.0) {
                    return Err(Error::Config(format!("method `{s}`: p must lie in (0, 1]")));
                }
                Ok(Method::Irls { p })
            }
        }
    }
}

impl Serialize for Method {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Method {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Free-field transfer from the loudspeaker ring to each mode.
#[derive(Debug, Clone, PartialEq)]
pub struct SecondaryPath {
    radius: f64,
    gains: ModeCoefficients,
}

impl SecondaryPath {
    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn gains(&self) -> &ModeCoefficients {
        &self.gains
    }

    pub fn gain(&self, m: i32) -> Complex64 {
        self.gains.get(m)
    }
}

/// `g_m = -(i/4) H_m^(2)(k R_s)` for `m = -M..=M`.
pub fn secondary_path(radius: f64, k: f64, order: usize) -> Result<SecondaryPath> {
    if !(k > 0.0) {
        return Err(Error::Domain {
            function: "secondary_path",
            arg: k,
            requirement: "wavenumber must be positive",
        });
    }
    if !(radius > 0.0) {
        return Err(Error::Domain {
            function: "secondary_path",
            arg: radius,
            requirement: "loudspeaker radius must be positive",
        });
    }
    let h = hankel2_orders(order as u32, k * radius)?;
    let scale = Complex64::new(0.0, -0.25);
    // H_{-m} = (-1)^m H_m, so the gains are even in m
    let gains = ModeCoefficients::from_fn(order, k, |m| scale * h[m.unsigned_abs() as usize]);
    Ok(SecondaryPath { radius, gains })
}

/// Adaptive mode weights.
#[derive(Debug, Clone, PartialEq)]
pub struct AncState {
    pub weights: ModeCoefficients,
    pub iteration: usize,
    pub step_size: f64,
    /// Modes skipped by the most recent step.
    pub frozen: Vec<bool>,
}

impl AncState {
    pub fn new(order: usize, k: f64, step_size: f64) -> Self {
        Self {
            weights: ModeCoefficients::zeros(order, k),
            iteration: 0,
            step_size,
            frozen: vec![false; 2 * order + 1],
        }
    }

    /// Anti-noise modes `w_m g_m x_m` for the current weights.
    pub fn anti_noise(&self, x: &ModeCoefficients, sp: &SecondaryPath) -> ModeCoefficients {
        ModeCoefficients::from_fn(self.weights.order(), x.wavenumber(), |m| {
            if x.is_flagged(m) {
                Complex64::new(0.0, 0.0)
            } else {
                self.weights.get(m) * sp.gain(m) * x.get(m)
            }
        })
    }

    /// Computes `e_m = beta_m + w_m x'_m` and applies
    /// `w_m <- w_m - mu e_m conj(x'_m) / |x'_m|^2`. Returns the residual.
    ///
    /// Modes where `beta` is flagged stay unmeasured: their residual is
    /// flagged and their weight is left alone.
    pub fn step(
        &mut self,
        x: &ModeCoefficients,
        beta: &ModeCoefficients,
        sp: &SecondaryPath,
    ) -> Result<ModeCoefficients> {
        let order = self.weights.order();
        for other in [x.order(), beta.order(), sp.gains().order()] {
            if other != order {
                return Err(Error::OrderMismatch {
                    left: order,
                    right: other,
                });
            }
        }
        let mut residual = ModeCoefficients::zeros(order, beta.wavenumber());
        for (i, m) in self.weights.orders().enumerate() {
            let xf = if x.is_flagged(m) {
                Complex64::new(0.0, 0.0)
            } else {
                sp.gain(m) * x.get(m)
            };
            if beta.is_flagged(m) {
                residual.flag(m);
                self.frozen[i] = true;
                continue;
            }
            let w = self.weights.get(m);
            let e = beta.get(m) + w * xf;
            residual.set(m, e);
            let power = xf.norm_sqr();
            self.frozen[i] = power < FREEZE_THRESHOLD;
            if !self.frozen[i] {
                self.weights.set(m, w - self.step_size * e * xf.conj() / power);
            }
        }
        self.iteration += 1;
        Ok(residual)
    }
}

/// Functional form of [`AncState::step`].
pub fn anc_step(
    state: &AncState,
    x: &ModeCoefficients,
    beta: &ModeCoefficients,
    sp: &SecondaryPath,
) -> Result<(AncState, ModeCoefficients)> {
    let mut next = state.clone();
    let residual = next.step(x, beta, sp)?;
    Ok((next, residual))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseModel {
    /// Source amplitudes are the configured constants in every frame.
    Fixed,
    /// Every frame multiplies each source by an independent random phase.
    Random,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SolverMode {
    /// Run the sparse solver to convergence on every frame.
    Converged,
    /// Run a fixed number of solver iterations per frame, continuing from
    /// the previous frame's estimate.
    Interleaved,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AncSettings {
    pub iterations: usize,
    pub step_size: f64,
    pub order: usize,
    pub plane_waves: usize,
    pub l1: SolverConfig,
    pub irls: SolverConfig,
    pub phases: PhaseModel,
    pub solver_mode: SolverMode,
    /// Solver iterations per frame in interleaved mode.
    pub interleaved_iterations: usize,
    /// Start each frame's sparse solve from the previous frame's weights.
    pub warm_start: bool,
    /// Frames, after adaptation, over which the final noise level is averaged.
    pub eval_frames: usize,
    pub seed: u64,
    pub bessel_zero_threshold: f64,
    pub grid_radii: usize,
    pub grid_angles: usize,
}

impl Default for AncSettings {
    fn default() -> Self {
        Self {
            iterations: 50,
            step_size: 0.5,
            order: 20,
            plane_waves: 128,
            l1: SolverConfig::l1(),
            irls: SolverConfig::irls(0.5),
            phases: PhaseModel::Random,
            solver_mode: SolverMode::Converged,
            interleaved_iterations: 1,
            warm_start: true,
            eval_frames: 8,
            seed: 1,
            bessel_zero_threshold: BESSEL_ZERO_THRESHOLD,
            grid_radii: 24,
            grid_angles: 64,
        }
    }
}

impl AncSettings {
    /// Solver configuration for a sparse method, `None` for direct extraction.
    pub fn solver_config(&self, method: Method) -> Option<SolverConfig> {
        match method {
            Method::Mdff => None,
            Method::L1 => Some(self.l1.clone()),
            Method::Irls { p } => Some(SolverConfig { p, ..self.irls.clone() }),
        }
    }
}

/// Reference, error and loudspeaker arrays around the control disc.
#[derive(Debug, Clone, PartialEq)]
pub struct AncGeometry {
    pub reference: ArrayGeometry,
    pub error: ArrayGeometry,
    pub loudspeaker_radius: f64,
    pub control_radius: f64,
}

impl AncGeometry {
    pub fn new(
        reference: ArrayGeometry,
        error: ArrayGeometry,
        loudspeaker_radius: f64,
        control_radius: f64,
    ) -> Result<Self> {
        let g = Self {
            reference,
            error,
            loudspeaker_radius,
            control_radius,
        };
        g.validate()?;
        Ok(g)
    }

    /// 41-element reference ring at 2 m, loudspeakers at 1.5 m, 41-element
    /// error ring at 1 m bounding the control disc.
    pub fn standard() -> Self {
        Self {
            reference: ArrayGeometry::new(2.0, 41, ArrayRole::Reference).unwrap(),
            error: ArrayGeometry::new(1.0, 41, ArrayRole::Error).unwrap(),
            loudspeaker_radius: 1.5,
            control_radius: 1.0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (r_ref, r_err) = (self.reference.radius(), self.error.radius());
        if !(r_ref > self.loudspeaker_radius && self.loudspeaker_radius > r_err && r_err > 0.0) {
            return Err(Error::Config(format!(
                "array radii must satisfy reference ({r_ref}) > loudspeaker ({}) > error ({r_err}) > 0",
                self.loudspeaker_radius
            )));
        }
        if !(self.control_radius > 0.0 && self.control_radius <= r_err) {
            return Err(Error::Config(format!(
                "control radius {} must lie in (0, {r_err}]",
                self.control_radius
            )));
        }
        Ok(())
    }
}

/// Stateful per-bin reference estimator.
#[derive(Debug, Clone)]
pub struct ReferenceEstimator {
    method: Method,
    array: ArrayGeometry,
    k: f64,
    order: usize,
    threshold: f64,
    dictionary: Option<Dictionary>,
    solver: Option<SolverConfig>,
    mode: SolverMode,
    interleaved_iterations: usize,
    warm_start: bool,
    gamma: Option<ComplexVec>,
    eps: Option<f64>,
    last_iterations: usize,
}

impl ReferenceEstimator {
    pub fn new(
        method: Method,
        array: &ArrayGeometry,
        k: f64,
        settings: &AncSettings,
    ) -> Result<Self> {
        let solver = settings.solver_config(method);
        let dictionary = match &solver {
            Some(cfg) => {
                cfg.validate()?;
                Some(build_dictionary(array, k, settings.plane_waves)?)
            }
            None => None,
        };
        Ok(Self {
            method,
            array: array.clone(),
            k,
            order: settings.order,
            threshold: settings.bessel_zero_threshold,
            dictionary,
            solver,
            mode: settings.solver_mode,
            interleaved_iterations: settings.interleaved_iterations.max(1),
            warm_start: settings.warm_start,
            gamma: None,
            eps: None,
            last_iterations: 0,
        })
    }

    pub fn method(&self) -> Method {
        self.method
    }

    /// Plane-wave weights from the latest sparse solve.
    pub fn gamma(&self) -> Option<&ComplexVec> {
        self.gamma.as_ref()
    }

    /// Solver iterations spent on the latest frame.
    pub fn last_iterations(&self) -> usize {
        self.last_iterations
    }

    pub fn estimate(&mut self, samples: &ComplexVec) -> Result<ModeCoefficients> {
        let (Some(dict), Some(cfg)) = (&self.dictionary, &self.solver) else {
            return extract_modes_with_threshold(samples, &self.array, self.k, self.order, self.threshold);
        };
        let warm = if self.warm_start || self.mode == SolverMode::Interleaved {
            self.gamma.as_ref()
        } else {
            None
        };
        let max_iters = match self.mode {
            SolverMode::Converged => cfg.max_iters,
            SolverMode::Interleaved => self.interleaved_iterations,
        };
        let result = match self.method {
            Method::L1 => L1Solver::new(dict, samples, cfg, warm)?.run(max_iters)?,
            _ => {
                let mut cfg = cfg.clone();
                if self.mode == SolverMode::Interleaved {
                    if let Some(eps) = self.eps {
                        cfg.eps_initial = eps;
                    }
                }
                let mut solver = IrlsSolver::new(dict, samples, &cfg, warm)?;
                let mut iterations = 0;
                if samples.iter().any(|s| s.norm_sqr() > 0.0) {
                    while iterations < max_iters {
                        iterations += 1;
                        if solver.step()?.converged {
                            break;
                        }
                    }
                }
                self.eps = Some(solver.eps());
                let gamma = solver.gamma();
                self.last_iterations = iterations;
                let modes = modes_from_plane_waves(&gamma, dict.angles(), self.k, self.order)?;
                self.gamma = Some(gamma);
                return Ok(modes);
            }
        };
        self.last_iterations = result.iterations;
        let modes = modes_from_plane_waves(&result.gamma, dict.angles(), self.k, self.order)?;
        self.gamma = Some(result.gamma);
        Ok(modes)
    }
}

/// One-shot reference-mode estimate with default settings apart from
/// `order` and `plane_waves`.
pub fn reference_modes(
    method: Method,
    samples: &ComplexVec,
    array: &ArrayGeometry,
    k: f64,
    order: usize,
    plane_waves: usize,
) -> Result<ModeCoefficients> {
    let settings = AncSettings {
        order,
        plane_waves,
        ..AncSettings::default()
    };
    ReferenceEstimator::new(method, array, k, &settings)?.estimate(samples)
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    /// Measured residual modes `e_m(n)`.
    pub residual: ModeCoefficients,
    /// Reference modes `x_m(n)`.
    pub reference: ModeCoefficients,
    /// Noise level over the control disc for the weights used at this step.
    pub noise_level_db: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AncTrace {
    pub frequency: f64,
    pub method: String,
    pub records: Vec<IterationRecord>,
    pub final_weights: ModeCoefficients,
    /// Noise level with the final weights, averaged over the evaluation frames.
    pub final_noise_level_db: f64,
}

/// Per-frame complex factors multiplying each source's amplitude.
///
/// The stream depends only on `seed` and `frequency`, so every method
/// sees the same frames.
pub fn frame_factors(
    model: PhaseModel,
    seed: u64,
    frequency: f64,
    sources: usize,
    frames: usize,
) -> Vec<Vec<Complex64>> {
    match model {
        PhaseModel::Fixed => vec![vec![Complex64::new(1.0, 0.0); sources]; frames],
        PhaseModel::Random => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(frequency.to_bits());
            (0..frames)
                .map(|_| {
                    (0..sources)
                        .map(|_| Complex64::from_polar(1.0, TAU * rng.random::<f64>()))
                        .collect()
                })
                .collect()
        }
    }
}

/// Highest order used when evaluating fields on the control disc.
pub fn evaluation_order(k: f64, control_radius: f64, order: usize) -> usize {
    order.max(truncation_order(k, control_radius, TruncationRule::CeilEkrHalf) + 10)
}

/// Runs the loop for one bin with the selected reference estimator.
pub fn run_anc(
    scene: &Scene,
    geometry: &AncGeometry,
    method: Method,
    frequency: f64,
    settings: &AncSettings,
) -> Result<AncTrace> {
    let k = scene.wavenumber(frequency);
    let mut estimator = ReferenceEstimator::new(method, &geometry.reference, k, settings)?;
    run_anc_with(scene, geometry, frequency, settings, &method.to_string(), |s| {
        estimator.estimate(s)
    })
}

/// Runs the loop for one bin with a caller-supplied reference estimator,
/// which receives the reference-array samples of each frame.
pub fn run_anc_with(
    scene: &Scene,
    geometry: &AncGeometry,
    frequency: f64,
    settings: &AncSettings,
    label: &str,
    mut reference: impl FnMut(&ComplexVec) -> Result<ModeCoefficients>,
) -> Result<AncTrace> {
    geometry.validate()?;
    if scene.sources.is_empty() {
        return Err(Error::Undefined("scene without sources"));
    }
    let k = scene.wavenumber(frequency);
    let order = settings.order;
    let eval_order = evaluation_order(k, geometry.control_radius, order);
    let sp = secondary_path(geometry.loudspeaker_radius, k, order)?;
    let grid = EvalGrid::polar(geometry.control_radius, settings.grid_radii, settings.grid_angles)?;
    let basis = grid.basis(k, eval_order);

    // every source is simulated once; frames are linear combinations
    let mut ref_templates = Vec::new();
    let mut err_templates = Vec::new();
    let mut primary_templates = Vec::new();
    for src in &scene.sources {
        let single = Scene::new(vec![*src], scene.speed_of_sound);
        ref_templates.push(sample_array(&single, frequency, &geometry.reference)?);
        err_templates.push(sample_array(&single, frequency, &geometry.error)?);
        primary_templates.push(basis.synthesize(&src.modes(k, eval_order)?));
    }
    let combine_vec = |templates: &[ComplexVec], a: &[Complex64]| {
        templates
            .iter()
            .zip(a)
            .fold(ComplexVec::zeros(templates[0].len()), |acc, (t, &c)| acc + t * c)
    };
    let combine_grid = |a: &[Complex64]| {
        let mut out = vec![Complex64::new(0.0, 0.0); grid.len()];
        for (t, &c) in primary_templates.iter().zip(a) {
            for (o, v) in out.iter_mut().zip(t) {
                *o += v * c;
            }
        }
        out
    };
    let powers = |state: &AncState, x: &ModeCoefficients, primary: &[Complex64]| {
        let anti = basis.synthesize(&state.anti_noise(x, &sp).with_order(eval_order));
        let residual: f64 = primary.iter().zip(&anti).map(|(p, a)| (p + a).norm_sqr()).sum();
        let initial: f64 = primary.iter().map(|p| p.norm_sqr()).sum();
        (residual, initial)
    };

    let frames = frame_factors(
        settings.phases,
        settings.seed,
        frequency,
        scene.sources.len(),
        settings.iterations + settings.eval_frames.max(1),
    );
    let mut state = AncState::new(order, k, settings.step_size);
    let mut records = Vec::with_capacity(settings.iterations);
    for (n, a) in frames.iter().take(settings.iterations).enumerate() {
        let x = reference(&combine_vec(&ref_templates, a))?;
        let beta = extract_modes_with_threshold(
            &combine_vec(&err_templates, a),
            &geometry.error,
            k,
            order,
            settings.bessel_zero_threshold,
        )?;
        let (res_p, init_p) = powers(&state, &x, &combine_grid(a));
        let residual = state.step(&x, &beta, &sp)?;
        records.push(IterationRecord {
            iteration: n,
            residual,
            reference: x,
            noise_level_db: pooled_noise_level(res_p, init_p)?,
        });
    }

    let (mut res_total, mut init_total) = (0.0, 0.0);
    for a in frames.iter().skip(settings.iterations) {
        let x = reference(&combine_vec(&ref_templates, a))?;
        let (r, i) = powers(&state, &x, &combine_grid(a));
        res_total += r;
        init_total += i;
    }
    log::debug!(
        "{label} at {frequency} Hz: {} iterations, eval order {eval_order}",
        settings.iterations
    );
    Ok(AncTrace {
        frequency,
        method: label.to_string(),
        records,
        final_weights: state.weights,
        final_noise_level_db: pooled_noise_level(res_total, init_total)?,
    })
}

/// Wavenumber helper shared by callers that only know a frequency.
pub fn wavenumber(frequency: f64, speed_of_sound: f64) -> f64 {
    2.0 * PI * frequency / speed_of_sound
}
