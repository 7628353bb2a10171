//! Run configuration: a TOML document where every key is optional.
//!
//! Missing keys take the defaults of [`RunConfig::default`]; unknown keys are
//! rejected. See `configs/default.toml` for a fully spelled-out example.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::anc::{AncGeometry, AncSettings, Method, PhaseModel, SolverMode};
use crate::field::{ArrayGeometry, ArrayRole, Scene, Source};
use crate::sparse::{SolverConfig, SolverVariant};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub speed_of_sound: f64,
    /// Highest controlled mode order `M`.
    pub order: usize,
    /// Dictionary size `L`.
    pub plane_waves: usize,
    pub seed: u64,
    pub control_radius: f64,
    pub methods: Vec<Method>,
    pub sweep: Sweep,
    pub arrays: Arrays,
    pub scene: SceneSpec,
    pub solver: SolverSpec,
    pub anc: AncSpec,
    pub grid: GridSpec,
    pub fig1: Fig1Spec,
    pub fig4: Fig4Spec,
    pub fig6: Fig6Spec,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            speed_of_sound: 343.0,
            order: 20,
            plane_waves: 128,
            seed: 1,
            control_radius: 1.0,
            methods: vec![
                Method::Mdff,
                Method::L1,
                Method::Irls { p: 1.0 },
                Method::Irls { p: 0.5 },
            ],
            sweep: Sweep {
                start_hz: 100.0,
                stop_hz: 1400.0,
                step_hz: 10.0,
            },
            arrays: Arrays::default(),
            scene: SceneSpec::two_plane_waves(),
            solver: SolverSpec::default(),
            anc: AncSpec::default(),
            grid: GridSpec::default(),
            fig1: Fig1Spec::default(),
            fig4: Fig4Spec::default(),
            fig6: Fig6Spec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Sweep {
    pub start_hz: f64,
    pub stop_hz: f64,
    pub step_hz: f64,
}

impl Sweep {
    /// Frequencies `start + i step` up to and including `stop`.
    pub fn frequencies(&self) -> Vec<f64> {
        let count = ((self.stop_hz - self.start_hz) / self.step_hz + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| self.start_hz + i as f64 * self.step_hz)
            .collect()
    }

    /// Parses `start:stop:step`.
    pub fn parse(spec: &str) -> Result<Self, String> {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(format!("frequency range `{spec}` must look like start:stop:step"));
        }
        let num = |s: &str| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| format!("`{s}` in frequency range is not a number"))
        };
        let sweep = Self {
            start_hz: num(parts[0])?,
            stop_hz: num(parts[1])?,
            step_hz: num(parts[2])?,
        };
        let mut errors = Vec::new();
        sweep.check("freq-range", &mut errors);
        match errors.first() {
            Some(e) => Err(e.clone()),
            None => Ok(sweep),
        }
    }

    fn check(&self, path: &str, errors: &mut Vec<String>) {
        if !(self.start_hz > 0.0 && self.start_hz.is_finite()) {
            errors.push(format!("{path}.start_hz: frequencies must be positive"));
        }
        if !(self.stop_hz >= self.start_hz && self.stop_hz.is_finite()) {
            errors.push(format!("{path}.stop_hz: must be finite and >= start_hz"));
        }
        if !(self.step_hz > 0.0 && self.step_hz.is_finite()) {
            errors.push(format!("{path}.step_hz: must be positive"));
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub radius: f64,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Arrays {
    pub reference: ArraySpec,
    pub error: ArraySpec,
    pub loudspeaker: ArraySpec,
}

impl Default for Arrays {
    fn default() -> Self {
        Self {
            reference: ArraySpec { radius: 2.0, count: 41 },
            error: ArraySpec { radius: 1.0, count: 41 },
            loudspeaker: ArraySpec { radius: 1.5, count: 41 },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceKind {
    Line,
    PlaneWave,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SourceSpec {
    pub kind: SourceKind,
    pub azimuth_deg: f64,
    /// Distance from the origin; line sources only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    /// `[re, im]`
    #[serde(default = "unit_amplitude")]
    pub amplitude: [f64; 2],
}

fn unit_amplitude() -> [f64; 2] {
    [1.0, 0.0]
}

impl SourceSpec {
    pub fn to_source(&self) -> Source {
        let amplitude = Complex64::new(self.amplitude[0], self.amplitude[1]);
        let azimuth = self.azimuth_deg.to_radians();
        match self.kind {
            SourceKind::Line => Source::line(self.radius.unwrap_or(0.0), azimuth, amplitude),
            SourceKind::PlaneWave => Source::plane_wave(azimuth, amplitude),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneSpec {
    pub sources: Vec<SourceSpec>,
}

impl SceneSpec {
    /// Two plane waves on the 128-direction grid (0 and 135 degrees).
    pub fn two_plane_waves() -> Self {
        Self {
            sources: vec![
                SourceSpec {
                    kind: SourceKind::PlaneWave,
                    azimuth_deg: 0.0,
                    radius: None,
                    amplitude: [1.0, 0.0],
                },
                SourceSpec {
                    kind: SourceKind::PlaneWave,
                    azimuth_deg: 135.0,
                    radius: None,
                    amplitude: [0.7, 0.0],
                },
            ],
        }
    }

    /// A unit line source 3 m from the origin on the x axis.
    pub fn line_source() -> Self {
        Self {
            sources: vec![SourceSpec {
                kind: SourceKind::Line,
                azimuth_deg: 0.0,
                radius: Some(3.0),
                amplitude: [1.0, 0.0],
            }],
        }
    }

    pub fn to_scene(&self, speed_of_sound: f64) -> Scene {
        Scene::new(self.sources.iter().map(SourceSpec::to_source).collect(), speed_of_sound)
    }

    fn check(&self, path: &str, outer_radius: f64, errors: &mut Vec<String>) {
        if self.sources.is_empty() {
            errors.push(format!("{path}.sources: at least one source is required"));
        }
        for (i, s) in self.sources.iter().enumerate() {
            let p = format!("{path}.sources[{i}]");
            if !s.azimuth_deg.is_finite() || !s.amplitude.iter().all(|a| a.is_finite()) {
                errors.push(format!("{p}: azimuth and amplitude must be finite"));
            }
            match (s.kind, s.radius) {
                (SourceKind::Line, None) => errors.push(format!("{p}.radius: required for line sources")),
                (SourceKind::Line, Some(r)) if !(r > outer_radius) => errors.push(format!(
                    "{p}.radius: line source at {r} m must lie outside the reference array ({outer_radius} m)"
                )),
                (SourceKind::PlaneWave, Some(_)) => {
                    errors.push(format!("{p}.radius: not used by plane waves"))
                }
                _ => {}
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverSpec {
    /// Fixed l1 weight; omitted means `lambda1_scale * ||E^H s||_inf`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lambda1: Option<f64>,
    pub lambda1_scale: f64,
    /// Fixed descent step; omitted means `mu_scale / ||E||_2^2`.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu_mic: Option<f64>,
    pub mu_scale: f64,
    pub lambda2: f64,
    pub l1_max_iters: usize,
    pub irls_max_iters: usize,
    pub tolerance: f64,
    pub eps_initial: f64,
    pub eps_decay: f64,
    pub eps_floor: f64,
    pub normalize: bool,
}

impl Default for SolverSpec {
    fn default() -> Self {
        let d = SolverConfig::irls(0.5);
        Self {
            lambda1: d.lambda1,
            lambda1_scale: d.lambda1_scale,
            mu_mic: d.mu_mic,
            mu_scale: d.mu_scale,
            lambda2: d.lambda2,
            l1_max_iters: SolverConfig::l1().max_iters,
            irls_max_iters: d.max_iters,
            tolerance: d.tolerance,
            eps_initial: d.eps_initial,
            eps_decay: d.eps_decay,
            eps_floor: d.eps_floor,
            normalize: d.normalize,
        }
    }
}

impl SolverSpec {
    pub fn config(&self, variant: SolverVariant, p: f64) -> SolverConfig {
        SolverConfig {
            variant,
            lambda1: self.lambda1,
            lambda1_scale: self.lambda1_scale,
            mu_mic: self.mu_mic,
            mu_scale: self.mu_scale,
            lambda2: self.lambda2,
            p,
            max_iters: match variant {
                SolverVariant::L1 => self.l1_max_iters,
                SolverVariant::Irls => self.irls_max_iters,
            },
            tolerance: self.tolerance,
            eps_initial: self.eps_initial,
            eps_decay: self.eps_decay,
            eps_floor: self.eps_floor,
            normalize: self.normalize,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AncSpec {
    pub iterations: usize,
    pub step_size: f64,
    pub source_phases: PhaseModel,
    pub eval_frames: usize,
    pub solver_mode: SolverMode,
    pub interleaved_iterations: usize,
    pub warm_start: bool,
    pub bessel_zero_threshold: f64,
}

impl Default for AncSpec {
    fn default() -> Self {
        let d = AncSettings::default();
        Self {
            iterations: d.iterations,
            step_size: d.step_size,
            source_phases: d.phases,
            eval_frames: d.eval_frames,
            solver_mode: d.solver_mode,
            interleaved_iterations: d.interleaved_iterations,
            warm_start: d.warm_start,
            bessel_zero_threshold: d.bessel_zero_threshold,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub radii: usize,
    pub angles: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { radii: 24, angles: 64 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig1Spec {
    pub sweep: Sweep,
    pub scene: SceneSpec,
}

impl Default for Fig1Spec {
    fn default() -> Self {
        Self {
            sweep: Sweep {
                start_hz: 1.0,
                stop_hz: 1400.0,
                step_hz: 1.0,
            },
            scene: SceneSpec::line_source(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig4Spec {
    pub methods: Vec<Method>,
    pub scene: SceneSpec,
}

impl Default for Fig4Spec {
    fn default() -> Self {
        Self {
            methods: vec![Method::Mdff, Method::Irls { p: 0.5 }],
            scene: SceneSpec::line_source(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Fig6Spec {
    pub ref_mics: Vec<usize>,
    pub methods: Vec<Method>,
}

impl Default for Fig6Spec {
    fn default() -> Self {
        Self {
            ref_mics: vec![21, 41, 81],
            methods: vec![Method::Mdff, Method::Irls { p: 0.5 }],
        }
    }
}

/// Everything wrong with a configuration, one entry per problem.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub diagnostics: Vec<String>,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration:")?;
        for d in &self.diagnostics {
            writeln!(f, "  - {d}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ConfigError {}

impl From<ConfigError> for crate::Error {
    fn from(e: ConfigError) -> Self {
        crate::Error::Config(e.diagnostics.join("; "))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| ConfigError {
            diagnostics: vec![e.to_string().trim_end().to_string()],
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration is always serializable")
    }

    /// Semantic checks that the parser cannot express.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let mut e = Vec::new();
        let positive = |v: f64| v > 0.0 && v.is_finite();
        if !positive(self.speed_of_sound) {
            e.push("speed_of_sound: must be positive".to_string());
        }
        if self.plane_waves == 0 {
            e.push("plane_waves: must be at least 1".to_string());
        }
        if self.methods.is_empty() {
            e.push("methods: at least one method is required".to_string());
        }
        self.sweep.check("sweep", &mut e);
        self.fig1.sweep.check("fig1.sweep", &mut e);

        let a = &self.arrays;
        for (name, spec) in [("reference", a.reference), ("error", a.error), ("loudspeaker", a.loudspeaker)] {
            if spec.count == 0 {
                e.push(format!("arrays.{name}.count: must be at least 1"));
            }
            if !positive(spec.radius) {
                e.push(format!("arrays.{name}.radius: must be positive"));
            }
        }
        if !(a.reference.radius > a.loudspeaker.radius && a.loudspeaker.radius > a.error.radius) {
            e.push(format!(
                "arrays: radii must satisfy reference ({}) > loudspeaker ({}) > error ({})",
                a.reference.radius, a.loudspeaker.radius, a.error.radius
            ));
        }
        if !(positive(self.control_radius) && self.control_radius <= a.error.radius) {
            e.push(format!(
                "control_radius: must lie in (0, {}] (inside the error array)",
                a.error.radius
            ));
        }

        let outer = a.reference.radius;
        self.scene.check("scene", outer, &mut e);
        self.fig1.scene.check("fig1.scene", outer, &mut e);
        self.fig4.scene.check("fig4.scene", outer, &mut e);
        if self.fig4.methods.is_empty() {
            e.push("fig4.methods: at least one method is required".to_string());
        }
        if self.fig6.methods.is_empty() {
            e.push("fig6.methods: at least one method is required".to_string());
        }
        if self.fig6.ref_mics.is_empty() || self.fig6.ref_mics.contains(&0) {
            e.push("fig6.ref_mics: needs at least one entry, each at least 1".to_string());
        }

        let s = &self.solver;
        if let Some(l) = s.lambda1 {
            if !(l >= 0.0) {
                e.push("solver.lambda1: must be >= 0".to_string());
            }
        }
        if let Some(mu) = s.mu_mic {
            if !positive(mu) {
                e.push("solver.mu_mic: must be positive".to_string());
            }
        }
        if !(s.lambda1_scale >= 0.0) {
            e.push("solver.lambda1_scale: must be >= 0".to_string());
        }
        if !positive(s.mu_scale) {
            e.push("solver.mu_scale: must be positive".to_string());
        }
        if !(s.lambda2 >= 0.0) {
            e.push("solver.lambda2: must be >= 0".to_string());
        }
        if !(s.tolerance >= 0.0) {
            e.push("solver.tolerance: must be >= 0".to_string());
        }
        if !(positive(s.eps_initial) && positive(s.eps_floor) && s.eps_floor <= s.eps_initial) {
            e.push("solver.eps_floor: need 0 < eps_floor <= eps_initial".to_string());
        }
        if !(s.eps_decay > 1.0) {
            e.push("solver.eps_decay: must exceed 1".to_string());
        }

        if !positive(self.anc.step_size) {
            e.push("anc.step_size: must be positive".to_string());
        }
        if !(self.anc.bessel_zero_threshold >= 0.0) {
            e.push("anc.bessel_zero_threshold: must be >= 0".to_string());
        }
        if self.grid.radii == 0 || self.grid.angles == 0 {
            e.push("grid: radii and angles must be at least 1".to_string());
        }

        if e.is_empty() {
            Ok(())
        } else {
            Err(ConfigError { diagnostics: e })
        }
    }

    pub fn geometry(&self) -> AncGeometry {
        self.geometry_with_reference_count(self.arrays.reference.count)
    }

    pub fn geometry_with_reference_count(&self, count: usize) -> AncGeometry {
        let a = &self.arrays;
        AncGeometry {
            reference: ArrayGeometry::new(a.reference.radius, count, ArrayRole::Reference)
                .expect("validated"),
            error: ArrayGeometry::new(a.error.radius, a.error.count, ArrayRole::Error).expect("validated"),
            loudspeaker_radius: a.loudspeaker.radius,
            control_radius: self.control_radius,
        }
    }

    pub fn anc_settings(&self) -> AncSettings {
        AncSettings {
            iterations: self.anc.iterations,
            step_size: self.anc.step_size,
            order: self.order,
            plane_waves: self.plane_waves,
            l1: self.solver.config(SolverVariant::L1, 1.0),
            irls: self.solver.config(SolverVariant::Irls, 0.5),
            phases: self.anc.source_phases,
            solver_mode: self.anc.solver_mode,
            interleaved_iterations: self.anc.interleaved_iterations,
            warm_start: self.anc.warm_start,
            eval_frames: self.anc.eval_frames,
            seed: self.seed,
            bessel_zero_threshold: self.anc.bessel_zero_threshold,
            grid_radii: self.grid.radii,
            grid_angles: self.grid.angles,
        }
    }
}

/// Reads, parses and validates a configuration file.
pub fn validate_config(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|e| ConfigError {
        diagnostics: vec![format!("{}: {e}", path.display())],
    })?;
    RunConfig::from_toml(&text).map_err(|mut err| {
        for d in err.diagnostics.iter_mut() {
            *d = format!("{}: {d}", path.display());
        }
        err
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_gives_defaults() {
        let cfg = RunConfig::from_toml("").unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!(cfg.arrays.reference.count, 41);
        assert_eq!(cfg.order, 20);
        assert_eq!(cfg.plane_waves, 128);
        assert_eq!(cfg.anc.iterations, 50);
        assert_eq!(cfg.sweep.frequencies().len(), 131);
    }

    #[test]
    fn defaults_round_trip_through_toml() {
        let cfg = RunConfig::default();
        let again = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn zero_reference_mics_rejected() {
        let err = RunConfig::from_toml("[arrays.reference]\nradius = 2.0\ncount = 0\n").unwrap_err();
        assert!(err.diagnostics.iter().any(|d| d.contains("arrays.reference.count")), "{err}");
    }

    #[test]
    fn bad_p_rejected() {
        let err = RunConfig::from_toml("methods = [\"irls-p1.5\"]\n").unwrap_err();
        assert!(err.to_string().contains("p must lie in (0, 1]"), "{err}");
    }

    #[test]
    fn geometry_order_checked() {
        let text = "[arrays.error]\nradius = 1.6\ncount = 41\n";
        let err = RunConfig::from_toml(text).unwrap_err();
        assert!(err.diagnostics.iter().any(|d| d.starts_with("arrays:")), "{err}");
    }

    #[test]
    fn parse_errors_have_positions() {
        let err = RunConfig::from_toml("order = 20\nseed = \"x\"\n").unwrap_err();
        assert!(err.to_string().contains("line 2"), "{err}");
        let err = RunConfig::from_toml("nonsense = 1\n").unwrap_err();
        assert!(err.to_string().contains("nonsense"), "{err}");
    }

    #[test]
    fn line_source_needs_radius_outside_arrays() {
        let text = "[[scene.sources]]\nkind = \"line\"\nazimuth_deg = 0.0\nradius = 1.0\n";
        let err = RunConfig::from_toml(text).unwrap_err();
        assert!(err.diagnostics[0].contains("scene.sources[0].radius"), "{err}");
    }

    #[test]
    fn sweep_parsing() {
        let s = Sweep::parse("500:600:50").unwrap();
        assert_eq!(s.frequencies(), vec![500.0, 550.0, 600.0]);
        assert_eq!(Sweep::parse("1:1:1").unwrap().frequencies(), vec![1.0]);
        assert!(Sweep::parse("600:500:10").is_err());
        assert!(Sweep::parse("0:10:1").is_err());
        assert!(Sweep::parse("1:2").is_err());
        assert!(Sweep::parse("a:2:1").is_err());
    }
}
