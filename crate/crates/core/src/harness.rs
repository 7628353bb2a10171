//! Canned experiments and their CSV output.

use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use crate::anc::{evaluation_order, run_anc, AncSettings, Method, ReferenceEstimator};
use crate::config::{RunConfig, Sweep};
use crate::error::{Error, Result};
use crate::field::{sample_array, true_mode_coefficients, ArrayGeometry, ArrayRole, Scene};
use crate::metrics::{mode_error_map, sdr_modes, EvalGrid, DB_FLOOR};
use crate::modal::extract_modes_with_threshold;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Directly extracted mode magnitudes of a line source over frequency.
    Fig1,
    /// SDR of the reconstructed reference field per method.
    Fig3,
    /// Mode-coefficient error per frequency and order.
    Fig4,
    /// Noise level after adaptation, plus per-iteration traces.
    Fig5,
    /// Noise level for several reference-array sizes.
    Fig6,
}

impl Experiment {
    pub const ALL: [Experiment; 5] = [
        Experiment::Fig1,
        Experiment::Fig3,
        Experiment::Fig4,
        Experiment::Fig5,
        Experiment::Fig6,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Experiment::Fig1 => "fig1",
            Experiment::Fig3 => "fig3",
            Experiment::Fig4 => "fig4",
            Experiment::Fig5 => "fig5",
            Experiment::Fig6 => "fig6",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Experiment::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown experiment `{s}` (expected fig1, fig3, fig4, fig5 or fig6)")))
    }
}

/// Command-line adjustments applied on top of a configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    /// Replaces every frequency sweep.
    pub sweep: Option<Sweep>,
    /// Replaces the reference-array size (and the fig6 size list).
    pub ref_mics: Option<usize>,
    /// Replaces every method list.
    pub methods: Option<Vec<Method>>,
}

impl Overrides {
    pub fn apply(&self, cfg: &RunConfig) -> std::result::Result<RunConfig, crate::config::ConfigError> {
        let mut cfg = cfg.clone();
        if let Some(sweep) = self.sweep {
            cfg.sweep = sweep;
            cfg.fig1.sweep = sweep;
        }
        if let Some(q) = self.ref_mics {
            cfg.arrays.reference.count = q;
            cfg.fig6.ref_mics = vec![q];
        }
        if let Some(methods) = &self.methods {
            cfg.methods = methods.clone();
            cfg.fig4.methods = methods.clone();
            cfg.fig6.methods = methods.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Formats a dB value; non-finite values use `inf`, `-inf` and `nan`.
fn db(value: f64) -> String {
    if value.is_nan() {
        "nan".to_string()
    } else if value == f64::INFINITY {
        "inf".to_string()
    } else if value == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{value:.6}")
    }
}

fn floored(value: f64) -> f64 {
    if value.is_nan() {
        value
    } else {
        value.max(DB_FLOOR)
    }
}

struct CsvFile {
    path: PathBuf,
    text: String,
}

impl CsvFile {
    fn new(dir: &Path, name: &str, experiment: Experiment, cfg: &RunConfig, columns: &[String]) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# experiment: {experiment}");
        let _ = writeln!(text, "# generator: spatial-anc {}", env!("CARGO_PKG_VERSION"));
        let _ = writeln!(text, "# db_floor: {DB_FLOOR}");
        let _ = writeln!(text, "# config:");
        for line in cfg.to_toml().lines() {
            if line.is_empty() {
                text.push_str("#\n");
            } else {
                let _ = writeln!(text, "#   {line}");
            }
        }
        text.push_str(&columns.join(","));
        text.push('\n');
        Self {
            path: dir.join(name),
            text,
        }
    }

    fn row(&mut self, fields: &[String]) {
        self.text.push_str(&fields.join(","));
        self.text.push('\n');
    }

    fn write(self) -> Result<PathBuf> {
        fs::write(&self.path, self.text)?;
        Ok(self.path)
    }
}

fn columns(names: &[&str]) -> Vec<String> {
    names.iter().map(|s| s.to_string()).collect()
}

/// Runs one experiment and writes its CSV files into `out_dir`.
pub fn run_experiment(experiment: Experiment, cfg: &RunConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    fs::create_dir_all(out_dir)?;
    log::info!("running {experiment} into {}", out_dir.display());
    match experiment {
        Experiment::Fig1 => fig1(cfg, out_dir),
        Experiment::Fig3 => fig3(cfg, out_dir),
        Experiment::Fig4 => fig4(cfg, out_dir),
        Experiment::Fig5 => fig5(cfg, out_dir),
        Experiment::Fig6 => fig6(cfg, out_dir),
    }
}

fn reference_array(cfg: &RunConfig) -> Result<ArrayGeometry> {
    ArrayGeometry::new(cfg.arrays.reference.radius, cfg.arrays.reference.count, ArrayRole::Reference)
}

fn fig1(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let scene = cfg.fig1.scene.to_scene(cfg.speed_of_sound);
    let array = reference_array(cfg)?;
    let m_max = cfg.order as i32;
    let mut cols = columns(&["frequency_hz"]);
    cols.extend((-m_max..=m_max).map(|m| format!("m_{m}")));
    let mut csv = CsvFile::new(out, "fig1.csv", Experiment::Fig1, cfg, &cols);
    for f in cfg.fig1.sweep.frequencies() {
        let k = scene.wavenumber(f);
        let s = sample_array(&scene, f, &array)?;
        let beta = extract_modes_with_threshold(&s, &array, k, cfg.order, cfg.anc.bessel_zero_threshold)?;
        let mut row = vec![f.to_string()];
        row.extend(beta.iter().map(|(m, b)| {
            if beta.is_flagged(m) {
                db(f64::NAN)
            } else {
                db(floored(20.0 * b.norm().log10()))
            }
        }));
        csv.row(&row);
    }
    Ok(vec![csv.write()?])
}

/// Reference modes estimated from a single frame with the configured
/// source amplitudes.
fn estimate_single_frame(
    scene: &Scene,
    array: &ArrayGeometry,
    method: Method,
    frequency: f64,
    settings: &AncSettings,
) -> Result<crate::modal::ModeCoefficients> {
    let k = scene.wavenumber(frequency);
    let s = sample_array(scene, frequency, array)?;
    ReferenceEstimator::new(method, array, k, settings)?.estimate(&s)
}

fn fig3(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let scene = cfg.scene.to_scene(cfg.speed_of_sound);
    let array = reference_array(cfg)?;
    let settings = cfg.anc_settings();
    let grid = EvalGrid::polar(cfg.control_radius, cfg.grid.radii, cfg.grid.angles)?;
    let mut csv = CsvFile::new(out, "fig3.csv", Experiment::Fig3, cfg, &columns(&["frequency_hz", "method", "sdr_db"]));
    for f in cfg.sweep.frequencies() {
        let k = scene.wavenumber(f);
        let order = evaluation_order(k, cfg.control_radius, cfg.order);
        let truth = true_mode_coefficients(&scene, f, order)?;
        let basis = grid.basis(k, order);
        for &method in &cfg.methods {
            let x = estimate_single_frame(&scene, &array, method, f, &settings)?;
            let value = sdr_modes(&truth, &x.with_order(order), &basis)?;
            log::debug!("fig3 {f} Hz {method}: {value:.2} dB");
            csv.row(&[f.to_string(), method.to_string(), db(value)]);
        }
    }
    Ok(vec![csv.write()?])
}

fn fig4(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let scene = cfg.fig4.scene.to_scene(cfg.speed_of_sound);
    let array = reference_array(cfg)?;
    let settings = cfg.anc_settings();
    let mut csv = CsvFile::new(
        out,
        "fig4.csv",
        Experiment::Fig4,
        cfg,
        &columns(&["frequency_hz", "method", "mode", "error_db"]),
    );
    for f in cfg.sweep.frequencies() {
        let truth = true_mode_coefficients(&scene, f, cfg.order)?;
        for &method in &cfg.fig4.methods {
            let x = estimate_single_frame(&scene, &array, method, f, &settings)?;
            let map = mode_error_map(&[f], std::slice::from_ref(&truth), &[x])?;
            for (i, m) in truth.orders().enumerate() {
                let cell = map.rows[0][i].map_or(f64::NAN, floored);
                csv.row(&[f.to_string(), method.to_string(), m.to_string(), db(cell)]);
            }
        }
    }
    Ok(vec![csv.write()?])
}

fn fig5(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let scene = cfg.scene.to_scene(cfg.speed_of_sound);
    let geometry = cfg.geometry();
    let settings = cfg.anc_settings();
    let mut summary = CsvFile::new(
        out,
        "fig5.csv",
        Experiment::Fig5,
        cfg,
        &columns(&["frequency_hz", "method", "noise_level_db"]),
    );
    let mut trace = CsvFile::new(
        out,
        "fig5_trace.csv",
        Experiment::Fig5,
        cfg,
        &columns(&["frequency_hz", "iteration", "method", "noise_level_db"]),
    );
    for f in cfg.sweep.frequencies() {
        for &method in &cfg.methods {
            let t = run_anc(&scene, &geometry, method, f, &settings)?;
            log::info!("fig5 {f} Hz {method}: {:.2} dB", t.final_noise_level_db);
            summary.row(&[f.to_string(), method.to_string(), db(t.final_noise_level_db)]);
            for r in &t.records {
                trace.row(&[f.to_string(), r.iteration.to_string(), method.to_string(), db(r.noise_level_db)]);
            }
        }
    }
    Ok(vec![summary.write()?, trace.write()?])
}

fn fig6(cfg: &RunConfig, out: &Path) -> Result<Vec<PathBuf>> {
    let scene = cfg.scene.to_scene(cfg.speed_of_sound);
    let settings = cfg.anc_settings();
    let mut csv = CsvFile::new(
        out,
        "fig6.csv",
        Experiment::Fig6,
        cfg,
        &columns(&["ref_mics", "frequency_hz", "method", "noise_level_db"]),
    );
    for &q in &cfg.fig6.ref_mics {
        let geometry = cfg.geometry_with_reference_count(q);
        for f in cfg.sweep.frequencies() {
            for &method in &cfg.fig6.methods {
                let t = run_anc(&scene, &geometry, method, f, &settings)?;
                log::info!("fig6 Q={q} {f} Hz {method}: {:.2} dB", t.final_noise_level_db);
                csv.row(&[q.to_string(), f.to_string(), method.to_string(), db(t.final_noise_level_db)]);
            }
        }
    }
    Ok(vec![csv.write()?])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn experiment_names() {
        for e in Experiment::ALL {
            assert_eq!(e.name().parse::<Experiment>().unwrap(), e);
        }
        assert!("fig2".parse::<Experiment>().is_err());
    }

    #[test]
    fn db_formatting() {
        assert_eq!(db(f64::INFINITY), "inf");
        assert_eq!(db(f64::NEG_INFINITY), "-inf");
        assert_eq!(db(f64::NAN), "nan");
        assert_eq!(db(-3.25), "-3.250000");
        assert_eq!(floored(-500.0), DB_FLOOR);
    }

    #[test]
    fn overrides_replace_lists() {
        let o = Overrides {
            sweep: Some(Sweep::parse("400:500:50").unwrap()),
            ref_mics: Some(21),
            methods: Some(vec![Method::L1]),
        };
        let cfg = o.apply(&RunConfig::default()).unwrap();
        assert_eq!(cfg.sweep.frequencies(), vec![400.0, 450.0, 500.0]);
        assert_eq!(cfg.fig1.sweep, cfg.sweep);
        assert_eq!(cfg.arrays.reference.count, 21);
        assert_eq!(cfg.fig6.ref_mics, vec![21]);
        assert_eq!(cfg.fig4.methods, vec![Method::L1]);
        let bad = Overrides {
            ref_mics: Some(0),
            ..Overrides::default()
        };
        assert!(bad.apply(&RunConfig::default()).is_err());
    }
}
