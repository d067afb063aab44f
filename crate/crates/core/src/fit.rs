//! Log-log exponent fits and scan reports.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{DlabError, Result};

/// Schema version of the JSON sidecar.
pub const SIDECAR_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Fit {
    pub slope: f64,
    pub intercept: f64,
    pub stderr: f64,
    pub r_squared: f64,
}

/// Ordinary least squares of `log y` on `log x`.
pub fn fit_exponent(points: &[(f64, f64)]) -> Result<Fit> {
    if points.len() < 3 {
        return Err(DlabError::Fit(format!("need at least 3 points, got {}", points.len())));
    }
    if let Some(p) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0 && x.is_finite() && y.is_finite())) {
        return Err(DlabError::Fit(format!("non-positive or non-finite point {p:?}")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(x, y)| (x.ln(), y.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(DlabError::Fit("abscissae coincide".into()));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let syy: f64 = logs.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = logs.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = (ss_res / (k - 2.0) / sxx).sqrt();
    let r_squared = if syy <= f64::EPSILON * k * my.abs().max(1.0) {
        1.0
    } else {
        (1.0 - ss_res / syy).clamp(0.0, 1.0)
    };
    Ok(Fit { slope, intercept, stderr, r_squared })
}

/// How a fitted slope is compared with the prediction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PassRule {
    /// `slope <= predicted + tolerance`.
    AtMost,
    /// `|slope - predicted| <= tolerance`.
    TwoSided,
    /// Measured values stay within `factor` of the first one.
    BoundedRatio { factor: f64 },
    /// Every value is at most `max`.
    AllBelow { max: f64 },
    /// Values strictly decrease along the scan.
    StrictlyDecreasing,
    /// Each ratio of consecutive values, `v[i] / v[i+1]`, lies in `[lo, hi]`.
    AdjacentRatio { lo: f64, hi: f64 },
}

impl PassRule {
    fn needs_fit(&self) -> bool {
        matches!(self, PassRule::AtMost | PassRule::TwoSided)
    }
}

/// One abscissa of a scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanPoint {
    pub param: f64,
    /// Arithmetic mean over trials.
    pub value: f64,
    pub n_trials: usize,
    /// Geometric mean over trials; the fitted quantity.
    pub geo_mean: f64,
    /// Standard error of the mean of `log` values.
    pub stderr: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra: Vec<f64>,
}

impl ScanPoint {
    pub fn from_trials(param: f64, trials: &[f64]) -> ScanPoint {
        let k = trials.len().max(1) as f64;
        let value = trials.iter().sum::<f64>() / k;
        let positive = trials.iter().all(|v| *v > 0.0);
        let (geo_mean, stderr) = if positive && !trials.is_empty() {
            let logs: Vec<f64> = trials.iter().map(|v| v.ln()).collect();
            let ml = logs.iter().sum::<f64>() / k;
            let var = if trials.len() > 1 {
                logs.iter().map(|l| (l - ml).powi(2)).sum::<f64>() / (k - 1.0)
            } else {
                0.0
            };
            (ml.exp(), (var / k).sqrt())
        } else {
            (0.0, 0.0)
        };
        ScanPoint { param, value, n_trials: trials.len(), geo_mean, stderr, extra: Vec::new() }
    }

    pub fn single(param: f64, value: f64) -> ScanPoint {
        ScanPoint::from_trials(param, &[value])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScanReport {
    pub label: String,
    pub abscissa: String,
    pub points: Vec<ScanPoint>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub extra_columns: Vec<String>,
    pub fit: Option<Fit>,
    pub predicted: f64,
    pub tolerance: f64,
    pub rule: PassRule,
    pub min_r_squared: Option<f64>,
    pub pass: bool,
    pub flags: Vec<String>,
}

impl ScanReport {
    /// Fit the geometric means and evaluate the pass rule. A scan with
    /// fewer than three usable points keeps its points and fails.
    pub fn assemble(
        label: &str,
        abscissa: &str,
        points: Vec<ScanPoint>,
        predicted: f64,
        tolerance: f64,
        rule: PassRule,
    ) -> ScanReport {
        let mut report = ScanReport {
            label: label.to_string(),
            abscissa: abscissa.to_string(),
            points,
            extra_columns: Vec::new(),
            fit: None,
            predicted,
            tolerance,
            rule,
            min_r_squared: None,
            pass: false,
            flags: Vec::new(),
        };
        report.evaluate();
        report
    }

    pub fn with_min_r_squared(mut self, min: f64) -> ScanReport {
        self.min_r_squared = Some(min);
        self.evaluate();
        self
    }

    pub fn flag(&mut self, text: impl Into<String>) {
        let text = text.into();
        if !self.flags.contains(&text) {
            self.flags.push(text);
        }
    }

    pub fn evaluate(&mut self) {
        let data: Vec<(f64, f64)> = self.points.iter().map(|p| (p.param, p.geo_mean)).collect();
        self.fit = match fit_exponent(&data) {
            Ok(f) => Some(f),
            Err(e) => {
                if self.rule.needs_fit() {
                    self.flag(format!("fit rejected: {e}"));
                }
                None
            }
        };
        self.pass = match (self.rule, self.fit) {
            (PassRule::BoundedRatio { factor }, _) => {
                let first = self.points.first().map(|p| p.geo_mean).unwrap_or(0.0);
                first > 0.0 && self.points.len() >= 3 && self.points.iter().all(|p| p.geo_mean <= factor * first)
            }
            (PassRule::AllBelow { max }, _) => {
                !self.points.is_empty() && self.points.iter().all(|p| p.geo_mean <= max)
            }
            (PassRule::StrictlyDecreasing, _) => self.points.len() >= 2 && self.strictly_decreasing(),
            (PassRule::AdjacentRatio { lo, hi }, _) => {
                self.points.len() >= 2
                    && self.points.windows(2).all(|w| {
                        let r = w[0].geo_mean / w[1].geo_mean;
                        r >= lo && r <= hi
                    })
            }
            (_, None) => false,
            (PassRule::AtMost, Some(f)) => f.slope <= self.predicted + self.tolerance,
            (PassRule::TwoSided, Some(f)) => (f.slope - self.predicted).abs() <= self.tolerance,
        };
        if let (Some(min), Some(f)) = (self.min_r_squared, self.fit) {
            if f.r_squared < min {
                self.pass = false;
            }
        }
    }

    pub fn slope(&self) -> Option<f64> {
        self.fit.map(|f| f.slope)
    }

    /// Geometric means strictly decrease along the scan.
    pub fn strictly_decreasing(&self) -> bool {
        self.points.windows(2).all(|w| w[1].geo_mean < w[0].geo_mean)
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let mut header = vec!["param", "value", "n_trials", "geo_mean", "stderr"];
        header.extend(self.extra_columns.iter().map(String::as_str));
        out.write_record(&header)?;
        for p in &self.points {
            let mut row = vec![
                p.param.to_string(),
                p.value.to_string(),
                p.n_trials.to_string(),
                p.geo_mean.to_string(),
                p.stderr.to_string(),
            ];
            row.extend(p.extra.iter().map(|v| v.to_string()));
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }

    pub fn sidecar(&self) -> serde_json::Value {
        serde_json::json!({
            "schema_version": SIDECAR_VERSION,
            "label": self.label,
            "abscissa": self.abscissa,
            "fitted_slope": self.fit.map(|f| f.slope),
            "stderr": self.fit.map(|f| f.stderr),
            "r_squared": self.fit.map(|f| f.r_squared),
            "predicted": self.predicted,
            "tolerance": self.tolerance,
            "rule": self.rule,
            "min_r_squared": self.min_r_squared,
            "pass": self.pass,
            "flags": self.flags,
        })
    }

    /// Write `<stem>.csv` and `<stem>.json` into `dir`.
    pub fn write_files(&self, dir: &Path, stem: &str) -> Result<()> {
        let csv_file = std::fs::File::create(dir.join(format!("{stem}.csv")))?;
        self.write_csv(std::io::BufWriter::new(csv_file))?;
        let json = serde_json::to_string_pretty(&self.sidecar())?;
        std::fs::write(dir.join(format!("{stem}.json")), json + "\n")?;
        Ok(())
    }
}
