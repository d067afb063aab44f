//! JSON-configured experiments: loading, overrides, validation, and runs
//! that leave CSV reports, JSON sidecars and a manifest behind.

use std::path::{Path, PathBuf};
use std::time::Instant;

use num_complex::Complex64;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{DlabError, Result};
use crate::field::Field;
use crate::fit::{PassRule, ScanPoint, ScanReport};
use crate::grid::Grid;
use crate::imethod::{imethod_scan, ImethodScan};
use crate::interaction::{
    bilinear_decay_scan, sharpness_scan, theorem1_ratio_scan, trilinear_decay_scan, BilinearScan, SharpnessScan,
    Theorem1Scan, TrilinearScan,
};
use crate::lp::{band_random, derive_seed, SupportSpec};
use crate::nls::{rough_datum, smoothing_scan, solve, NlsConfig, SmoothingScan};
use crate::wave_packets::{off_tube_mass, packet_decompose, packet_reconstruct};

/// Exit status of a run that completed but whose check failed.
pub const EXIT_MEASURED_FAIL: i32 = 2;
/// Exit status of an operational error.
pub const EXIT_ERROR: i32 = 1;

struct Descriptor {
    id: &'static str,
    description: &'static str,
    anchor: &'static str,
    seeded: bool,
}

const EXPERIMENTS: [Descriptor; 9] = [
    Descriptor {
        id: "bilinear",
        description: "bilinear Strichartz norm of two free waves against the frequency ratio",
        anchor: "bilinear interaction estimate, gain (N1/N2)^(1-2/r)",
        seeded: true,
    },
    Descriptor {
        id: "trilinear",
        description: "trilinear Hartree interaction against max/min frequency",
        anchor: "trilinear Hartree estimate, gain min(N1,N2,N3)/max(N1,N2,N3) to the 1/2",
        seeded: true,
    },
    Descriptor {
        id: "sharpness",
        description: "squashed-cap lower bound for the bilinear estimate",
        anchor: "sharpness of the bilinear exponent, rho^(n+1-2(n+1)/r-4/q)",
        seeded: false,
    },
    Descriptor {
        id: "theorem1",
        description: "bilinear norm over the H^s x H^-s data norm",
        anchor: "bilinear Strichartz estimate with derivative transfer",
        seeded: true,
    },
    Descriptor {
        id: "wavepacket",
        description: "wave packet reconstruction and off-tube mass",
        anchor: "wave packet decomposition along tubes of width lambda^(1/2)",
        seeded: true,
    },
    Descriptor {
        id: "nls",
        description: "split-step solve with conservation and Richardson diagnostics",
        anchor: "Hartree and mass-critical NLS, mass and energy conservation",
        seeded: true,
    },
    Descriptor {
        id: "smoothing",
        description: "H^1 growth of rough data against the Duhamel part",
        anchor: "nonlinear smoothing of the Duhamel term for 1/2 < s < 1",
        seeded: true,
    },
    Descriptor {
        id: "imethod-energy",
        description: "modified energy deviation against the I-method cutoff",
        anchor: "almost conservation of E(Iu), decay N^(-3/2+)",
        seeded: true,
    },
    Descriptor {
        id: "imethod-error",
        description: "Morawetz commutator error against the I-method cutoff",
        anchor: "interaction Morawetz error, decay N^(-3/2+)",
        seeded: true,
    },
];

/// `(id, description, anchor)` for every experiment, in a fixed order.
pub fn list_experiments() -> Vec<(&'static str, &'static str, &'static str)> {
    EXPERIMENTS.iter().map(|d| (d.id, d.description, d.anchor)).collect()
}

fn descriptor(id: &str) -> Result<&'static Descriptor> {
    EXPERIMENTS.iter().find(|d| d.id == id).ok_or_else(|| DlabError::UnknownExperiment(id.to_string()))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: String,
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    pub params: Value,
}

/// Datum of the `nls` experiment.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NlsDatum {
    /// Unit-mass random data on a ball about the origin, times `amplitude`.
    Band { radius: f64, amplitude: f64 },
    /// The rough family of the smoothing experiment.
    Rough { s: f64, cutoff: f64, amplitude: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NlsRun {
    pub nls: NlsConfig,
    pub datum: NlsDatum,
    /// Number of dt halvings for the energy-drift ratio.
    #[serde(default = "one")]
    pub refinements: usize,
    pub seed: u64,
}

fn one() -> usize {
    1
}

/// Accepted Richardson ratio of energy drifts when dt halves.
pub const RICHARDSON_RANGE: (f64, f64) = (3.0, 5.0);
/// Largest accepted relative mass drift.
pub const MASS_DRIFT_BOUND: f64 = 1e-10;

impl NlsRun {
    pub fn validate(&self) -> Result<()> {
        self.nls.validate()?;
        for k in 0..=self.refinements {
            let fine = NlsConfig { dt: self.nls.dt / 2f64.powi(k as i32), save_stride: 1, ..self.nls };
            fine.steps()?;
        }
        Ok(())
    }

    pub fn datum(&self) -> Result<Field> {
        let grid = self.nls.grid;
        match self.datum {
            NlsDatum::Band { radius, amplitude } => {
                let spec = SupportSpec::Ball { center: [0.0; 3], radius };
                Ok(band_random(&grid, &spec, derive_seed(self.seed, &[0x4e]))?.scale(Complex64::new(amplitude, 0.0)))
            }
            NlsDatum::Rough { s, cutoff, amplitude } => rough_datum(&grid, s, cutoff, amplitude, self.seed),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WavepacketRun {
    pub n: usize,
    pub lambdas: Vec<f64>,
    /// Box side in units of `lambda^{1/2}`.
    pub cells: usize,
    /// Lattice spacing.
    pub spacing: f64,
    pub inputs: usize,
    pub delta: f64,
    /// Packets of the first input that enter the off-tube average.
    pub top: usize,
    /// Uniform samples of `[-4 lambda, 4 lambda]`.
    pub time_samples: usize,
    pub seed: u64,
}

/// Largest accepted relative reconstruction error.
pub const RECONSTRUCTION_BOUND: f64 = 1e-8;

impl WavepacketRun {
    pub fn grid_for(&self, lambda: f64) -> Result<Grid> {
        let l = self.cells as f64 * lambda.sqrt();
        let m = l / self.spacing;
        if (m - m.round()).abs() > 1e-9 {
            return Err(DlabError::InvalidGrid(format!("box side {l} is not a multiple of the spacing")));
        }
        Grid::new(self.n, l, m.round() as usize)
    }

    pub fn validate(&self) -> Result<()> {
        if self.lambdas.is_empty() || self.inputs == 0 || self.top == 0 || self.time_samples < 2 {
            return Err(DlabError::InvalidTimes("need scales, inputs, packets and two time samples".into()));
        }
        if !(self.delta > 0.0 && self.delta <= 0.5) {
            return Err(DlabError::InvalidExponent(format!("delta = {} must lie in (0, 1/2]", self.delta)));
        }
        for &lambda in &self.lambdas {
            crate::wave_packets::check_scale(&self.grid_for(lambda)?, lambda)?;
        }
        Ok(())
    }
}

/// A configuration with typed parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum Experiment {
    Bilinear(BilinearScan),
    Trilinear(TrilinearScan),
    Sharpness(SharpnessScan),
    Theorem1(Theorem1Scan),
    Wavepacket(WavepacketRun),
    Nls(NlsRun),
    Smoothing(SmoothingScan),
    ImethodEnergy(ImethodScan),
    ImethodError(ImethodScan),
}

impl Experiment {
    pub fn validate(&self) -> Result<()> {
        match self {
            Experiment::Bilinear(c) => c.validate(),
            Experiment::Trilinear(c) => c.validate(),
            Experiment::Sharpness(c) => c.validate(),
            Experiment::Theorem1(c) => c.validate(),
            Experiment::Wavepacket(c) => c.validate(),
            Experiment::Nls(c) => c.validate(),
            Experiment::Smoothing(c) => c.validate(),
            Experiment::ImethodEnergy(c) | Experiment::ImethodError(c) => c.validate(),
        }
    }
}

fn typed<T: DeserializeOwned>(params: Value) -> Result<T> {
    serde_path_to_error::deserialize(params).map_err(|e| DlabError::Config {
        path: format!("params.{}", e.path()),
        message: e.inner().to_string(),
    })
}

impl ExperimentConfig {
    /// Parse JSON text; errors carry the offending field path and line.
    pub fn from_json(text: &str) -> Result<Self> {
        let mut de = serde_json::Deserializer::from_str(text);
        serde_path_to_error::deserialize(&mut de).map_err(|e| DlabError::Config {
            path: e.path().to_string(),
            message: e.inner().to_string(),
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_json(&text)
    }

    /// Apply a `dotted.path=value` override; the value is read as JSON when
    /// it parses and as a string otherwise.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment.split_once('=').ok_or_else(|| DlabError::Config {
            path: assignment.to_string(),
            message: "override must look like key=value".into(),
        })?;
        let value: Value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
        let mut doc = serde_json::to_value(&*self)?;
        set_path(&mut doc, key, value)?;
        *self = serde_json::from_value(doc).map_err(|e| DlabError::Config { path: key.to_string(), message: e.to_string() })?;
        Ok(())
    }

    /// Typed parameters, with the top-level seed folded in.
    pub fn resolve(&self) -> Result<Experiment> {
        let d = descriptor(&self.experiment)?;
        let mut params = self.params.clone();
        let obj = params.as_object_mut().ok_or_else(|| DlabError::Config {
            path: "params".into(),
            message: "expected an object".into(),
        })?;
        if d.seeded {
            if obj.contains_key("seed") {
                return Err(DlabError::Config {
                    path: "params.seed".into(),
                    message: "the seed belongs at the top level".into(),
                });
            }
            obj.insert("seed".into(), json!(self.seed));
        }
        let kind = |obj: &mut serde_json::Map<String, Value>, k: &str| -> Result<()> {
            if obj.insert("kind".into(), json!(k)).is_some() {
                return Err(DlabError::Config { path: "params.kind".into(), message: "set by the experiment id".into() });
            }
            Ok(())
        };
        let exp = match d.id {
            "bilinear" => Experiment::Bilinear(typed(params)?),
            "trilinear" => Experiment::Trilinear(typed(params)?),
            "sharpness" => Experiment::Sharpness(typed(params)?),
            "theorem1" => Experiment::Theorem1(typed(params)?),
            "wavepacket" => Experiment::Wavepacket(typed(params)?),
            "nls" => Experiment::Nls(typed(params)?),
            "smoothing" => Experiment::Smoothing(typed(params)?),
            "imethod-energy" => {
                kind(obj, "energy_deviation")?;
                Experiment::ImethodEnergy(typed(params)?)
            }
            _ => {
                kind(obj, "error_term")?;
                Experiment::ImethodError(typed(params)?)
            }
        };
        exp.validate()?;
        Ok(exp)
    }
}

fn set_path(doc: &mut Value, key: &str, value: Value) -> Result<()> {
    let bad = |msg: &str| DlabError::Config { path: key.to_string(), message: msg.to_string() };
    let parts: Vec<&str> = key.split('.').collect();
    if parts.iter().any(|p| p.is_empty()) {
        return Err(bad("empty path segment"));
    }
    let mut cur = doc;
    for (i, part) in parts.iter().enumerate() {
        let last = i + 1 == parts.len();
        cur = match cur {
            Value::Object(map) => {
                if last {
                    map.insert(part.to_string(), value);
                    return Ok(());
                }
                map.get_mut(*part).ok_or_else(|| bad("no such field"))?
            }
            Value::Array(items) => {
                let idx: usize = part.parse().map_err(|_| bad("array index expected"))?;
                let slot = items.get_mut(idx).ok_or_else(|| bad("array index out of range"))?;
                if last {
                    *slot = value;
                    return Ok(());
                }
                slot
            }
            _ => return Err(bad("path descends into a scalar")),
        };
    }
    Ok(())
}

/// Best-effort line of the field at a dotted path inside JSON text.
pub fn locate_line(text: &str, path: &str) -> Option<usize> {
    let mut offset = 0;
    for part in path.split('.').filter(|p| !p.is_empty() && p.parse::<usize>().is_err()) {
        let key = format!("\"{part}\"");
        offset += text[offset..].find(&key)? + key.len();
    }
    Some(text[..offset].lines().count().max(1))
}

/// Files and verdict of a completed run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutcome {
    pub pass: bool,
    pub files: Vec<PathBuf>,
    pub reports: Vec<ScanReport>,
}

impl RunOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.pass {
            0
        } else {
            EXIT_MEASURED_FAIL
        }
    }
}

fn write_report(dir: &Path, stem: &str, report: &ScanReport, files: &mut Vec<PathBuf>) -> Result<()> {
    report.write_files(dir, stem)?;
    files.push(dir.join(format!("{stem}.csv")));
    files.push(dir.join(format!("{stem}.json")));
    Ok(())
}

fn run_wavepacket(cfg: &WavepacketRun, dir: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<ScanReport>> {
    let mut recon = Vec::new();
    let mut off = Vec::new();
    for (il, &lambda) in cfg.lambdas.iter().enumerate() {
        let grid = cfg.grid_for(lambda)?;
        let spec = SupportSpec::Cube { half_side: 1.0 };
        let times: Vec<f64> = (0..cfg.time_samples)
            .map(|k| -4.0 * lambda + 8.0 * lambda * k as f64 / (cfg.time_samples - 1) as f64)
            .collect();
        let mut worst: f64 = 0.0;
        let mut fractions = Vec::new();
        for input in 0..cfg.inputs {
            let f = band_random(&grid, &spec, derive_seed(cfg.seed, &[il as u64, input as u64]))?;
            let d = packet_decompose(&f, lambda)?;
            worst = worst.max(packet_reconstruct(&d).relative_distance(&f));
            if input == 0 {
                let name = format!("packets_lambda{lambda}.csv");
                d.write_inventory(std::io::BufWriter::new(std::fs::File::create(dir.join(&name))?))?;
                files.push(dir.join(name));
                let mut order: Vec<usize> = (0..d.packets.len()).collect();
                order.sort_by(|a, b| d.packets[*b].norm.total_cmp(&d.packets[*a].norm).then(a.cmp(b)));
                for &i in order.iter().take(cfg.top) {
                    fractions.push(off_tube_mass(&d.packets[i], cfg.delta, &times)?);
                }
            }
        }
        recon.push(ScanPoint::single(lambda, worst));
        off.push(ScanPoint::from_trials(lambda, &fractions));
    }
    let rec = ScanReport::assemble(
        "packet reconstruction error",
        "lambda",
        recon,
        0.0,
        0.0,
        PassRule::AllBelow { max: RECONSTRUCTION_BOUND },
    );
    let mut tube = ScanReport::assemble("off-tube mass", "lambda", off, 0.0, 0.0, PassRule::StrictlyDecreasing);
    tube.flag("off-tube values are regression constants, not predicted values");
    Ok(vec![rec, tube])
}

fn run_nls(cfg: &NlsRun, dir: &Path, files: &mut Vec<PathBuf>) -> Result<Vec<ScanReport>> {
    let u0 = cfg.datum()?;
    let mut points = Vec::new();
    let mut mass_drift: f64 = 0.0;
    let mut aborted = None;
    for k in 0..=cfg.refinements {
        let nls = NlsConfig { dt: cfg.nls.dt / 2f64.powi(k as i32), save_stride: cfg.nls.save_stride << k, ..cfg.nls };
        let nls = if nls.steps().is_ok() { nls } else { NlsConfig { save_stride: 1, ..nls } };
        let trace = solve(&nls, &u0)?;
        if k == 0 {
            let name = "trace.csv";
            trace.write_csv(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))?;
            files.push(dir.join(name));
        }
        mass_drift = mass_drift.max(trace.mass_drift());
        if aborted.is_none() {
            aborted = trace.aborted.clone();
        }
        let mut pt = ScanPoint::single(nls.dt, trace.energy_drift());
        pt.extra = vec![trace.mass_drift()];
        points.push(pt);
    }
    let (lo, hi) = RICHARDSON_RANGE;
    let mut report = ScanReport::assemble("energy drift", "dt", points, 2.0, 0.0, PassRule::AdjacentRatio { lo, hi });
    report.extra_columns = vec!["mass_drift".into()];
    if mass_drift > MASS_DRIFT_BOUND {
        report.pass = false;
        report.flag(format!("mass drift {mass_drift:e} exceeds {MASS_DRIFT_BOUND:e}"));
    }
    if let Some(why) = aborted {
        report.pass = false;
        report.flag(why);
    }
    Ok(vec![report])
}

/// Execute a configuration and write its files into `output_dir`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    let exp = config.resolve()?;
    let start = Instant::now();
    let dir = config.output_dir.clone();
    std::fs::create_dir_all(&dir)?;
    let mut files = Vec::new();
    let reports: Vec<ScanReport> = match &exp {
        Experiment::Bilinear(c) => vec![bilinear_decay_scan(c)?],
        Experiment::Trilinear(c) => trilinear_decay_scan(c)?,
        Experiment::Sharpness(c) => vec![sharpness_scan(c)?],
        Experiment::Theorem1(c) => vec![theorem1_ratio_scan(c)?],
        Experiment::Wavepacket(c) => run_wavepacket(c, &dir, &mut files)?,
        Experiment::Nls(c) => run_nls(c, &dir, &mut files)?,
        Experiment::Smoothing(c) => {
            let r = smoothing_scan(c)?;
            vec![r.datum, r.duhamel]
        }
        Experiment::ImethodEnergy(c) | Experiment::ImethodError(c) => vec![imethod_scan(c)?],
    };
    for (i, report) in reports.iter().enumerate() {
        let stem = if reports.len() == 1 { config.experiment.clone() } else { format!("{}_{}", config.experiment, i) };
        write_report(&dir, &stem, report, &mut files)?;
    }
    let pass = reports.iter().all(|r| r.pass);
    let manifest = json!({
        "config": config,
        "version": env!("CARGO_PKG_VERSION"),
        "wall_time_s": start.elapsed().as_secs_f64(),
        "pass": pass,
        "outputs": files.iter().map(|f| f.file_name().map(|n| n.to_string_lossy().into_owned())).collect::<Vec<_>>(),
    });
    let manifest_path = dir.join("manifest.json");
    std::fs::write(&manifest_path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    files.push(manifest_path);
    Ok(RunOutcome { pass, files, reports })
}

/// The pretty-printed `config` entry when `text` is a run manifest.
pub fn manifest_config_text(text: &str) -> Option<String> {
    let doc: Value = serde_json::from_str(text).ok()?;
    let obj = doc.as_object()?;
    if obj.contains_key("experiment") || !obj.contains_key("version") {
        return None;
    }
    serde_json::to_string_pretty(obj.get("config")?).ok()
}

/// Re-read the configuration recorded in a manifest.
pub fn config_from_manifest(path: &Path) -> Result<ExperimentConfig> {
    let doc: Value = serde_json::from_str(&std::fs::read_to_string(path)?)?;
    let cfg = doc.get("config").cloned().ok_or_else(|| DlabError::Config {
        path: "config".into(),
        message: "manifest has no config".into(),
    })?;
    Ok(serde_json::from_value(cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sharpness_text() -> String {
        r#"{
  "experiment": "sharpness",
  "output_dir": "out",
  "params": {
    "n": 2,
    "pair": {"q": 4, "r": 4},
    "rhos": [0.5, 0.25, 0.125],
    "m": 128,
    "cap_points": 4,
    "time_factor": 1.0,
    "samples": 8
  }
}"#
        .to_string()
    }

    #[test]
    fn listing_is_complete_and_stable() {
        let a = list_experiments();
        assert_eq!(a.len(), 9);
        assert_eq!(a, list_experiments());
        assert!(a.iter().all(|(_, d, anchor)| !d.is_empty() && !anchor.is_empty()));
        assert_eq!(a[7].0, "imethod-energy");
    }

    #[test]
    fn parse_override_and_resolve() {
        let mut cfg = ExperimentConfig::from_json(&sharpness_text()).unwrap();
        assert!(matches!(cfg.resolve().unwrap(), Experiment::Sharpness(_)));
        cfg.apply_override("params.m=256").unwrap();
        cfg.apply_override("params.rhos.1=0.2").unwrap();
        match cfg.resolve().unwrap() {
            Experiment::Sharpness(s) => {
                assert_eq!(s.m, 256);
                assert_eq!(s.rhos[1], 0.2);
            }
            other => panic!("{other:?}"),
        }
        cfg.apply_override("output_dir=elsewhere").unwrap();
        assert_eq!(cfg.output_dir, PathBuf::from("elsewhere"));
        assert!(cfg.apply_override("params.rhos.9=1").is_err());
        assert!(cfg.apply_override("nonsense").is_err());
        assert!(cfg.apply_override("params.m.x=1").is_err());
    }

    #[test]
    fn diagnostics_name_the_field() {
        let text = sharpness_text().replace("\"m\": 128", "\"m\": \"many\"");
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        match cfg.resolve() {
            Err(DlabError::Config { path, .. }) => {
                assert_eq!(path, "params.m");
                assert_eq!(locate_line(&text, &path), Some(8));
            }
            other => panic!("{other:?}"),
        }
        let unknown = sharpness_text().replace("sharpness", "nonesuch");
        let cfg = ExperimentConfig::from_json(&unknown).unwrap();
        assert!(matches!(cfg.resolve(), Err(DlabError::UnknownExperiment(_))));
        let typo = sharpness_text().replace("output_dir", "outdir");
        assert!(matches!(ExperimentConfig::from_json(&typo), Err(DlabError::Config { .. })));
        let bad = sharpness_text().replace("\"m\": 128", "\"m\": 48");
        assert!(ExperimentConfig::from_json(&bad).unwrap().resolve().is_err());
    }

    #[test]
    fn seed_is_top_level_only() {
        let text = r#"{"experiment": "smoothing", "seed": 3, "output_dir": "o", "params": {
            "nls": {"nonlinearity": {"kind": "hartree", "kappa": 1.0},
                    "grid": {"n": 3, "L": 3.14159, "M": 16}, "dt": 0.01, "T": 0.02},
            "s": 0.75, "cutoffs": [2, 4, 6], "amplitude": 0.1}}"#;
        let cfg = ExperimentConfig::from_json(text).unwrap();
        match cfg.resolve().unwrap() {
            Experiment::Smoothing(s) => assert_eq!(s.seed, 3),
            other => panic!("{other:?}"),
        }
        let mut dup = cfg.clone();
        dup.apply_override("params.seed=4").unwrap();
        assert!(matches!(dup.resolve(), Err(DlabError::Config { .. })));
    }

    #[test]
    fn run_writes_reports_and_manifest() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::from_json(&sharpness_text()).unwrap();
        cfg.output_dir = dir.path().join("run");
        cfg.apply_override("params.samples=4").unwrap();
        let out = run_experiment(&cfg).unwrap();
        assert!(out.files.iter().all(|f| f.exists()));
        let csv = std::fs::read_to_string(cfg.output_dir.join("sharpness.csv")).unwrap();
        assert_eq!(csv.lines().count(), 4);
        let manifest = cfg.output_dir.join("manifest.json");
        let again = config_from_manifest(&manifest).unwrap();
        assert_eq!(again, cfg);
        let text = manifest_config_text(&std::fs::read_to_string(&manifest).unwrap()).unwrap();
        assert_eq!(ExperimentConfig::from_json(&text).unwrap(), cfg);
        assert!(manifest_config_text(&sharpness_text()).is_none());
        let first = std::fs::read(cfg.output_dir.join("sharpness.csv")).unwrap();
        run_experiment(&again).unwrap();
        assert_eq!(first, std::fs::read(cfg.output_dir.join("sharpness.csv")).unwrap());
    }

    #[test]
    fn unknown_id_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = ExperimentConfig::from_json(&sharpness_text().replace("sharpness", "nonesuch")).unwrap();
        cfg.output_dir = dir.path().join("run");
        assert!(run_experiment(&cfg).is_err());
        assert!(!cfg.output_dir.exists());
    }
}
