//! Mixed Lebesgue norms, Sobolev norms, the windowed Bourgain norm and
//! exponent bookkeeping for Strichartz pairs.

use std::fmt;

use num_complex::Complex64;
use num_rational::Rational64;
use rustfft::FftDirection;
use serde::{Deserialize, Serialize};

use crate::error::{DlabError, Result};
use crate::fft;
use crate::field::{Field, SpacetimeField};
use crate::par;
use crate::spectral::{norm_sq, power_symbol, SobolevKind};

const EXACT_TOL: f64 = 1e-12;

/// Exponents `(q, r)` of `L^q_t L^r_x`; `f64::INFINITY` encodes infinity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LebesguePair {
    #[serde(with = "extended")]
    pub q: f64,
    #[serde(with = "extended")]
    pub r: f64,
}

mod extended {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_infinite() {
            s.serialize_str("inf")
        } else {
            s.serialize_f64(*v)
        }
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Raw {
        Num(f64),
        Text(String),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(v),
            Raw::Text(t) if matches!(t.as_str(), "inf" | "infinity" | "∞") => Ok(f64::INFINITY),
            Raw::Text(t) => t.parse().map_err(serde::de::Error::custom),
        }
    }
}

impl LebesguePair {
    pub fn new(q: f64, r: f64) -> Result<Self> {
        let p = LebesguePair { q, r };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("q", self.q), ("r", self.r)] {
            if v.is_nan() || v < 1.0 {
                return Err(DlabError::InvalidExponent(format!("{name} = {v} must be >= 1")));
            }
        }
        Ok(())
    }

    /// `(q/2, r/2)`, the pair for a product of two functions in `(q, r)`.
    pub fn halved(&self) -> LebesguePair {
        LebesguePair { q: self.q / 2.0, r: self.r / 2.0 }
    }

    /// Either exponent is a lattice or sample maximum.
    pub fn uses_sup(&self) -> bool {
        self.q.is_infinite() || self.r.is_infinite()
    }
}

impl fmt::Display for LebesguePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let show = |v: f64| if v.is_infinite() { "inf".to_string() } else { format!("{v}") };
        write!(f, "({}, {})", show(self.q), show(self.r))
    }
}

/// Spatial `L^r` norm of lattice values with cell weight `cell`.
pub fn lattice_lr_norm(values: &[Complex64], r: f64, cell: f64) -> f64 {
    if r.is_infinite() {
        return par::max_map(values, |z| z.norm());
    }
    let s = if r == 2.0 {
        par::pairwise_map_sum(values, |z| z.norm_sqr())
    } else {
        par::pairwise_map_sum(values, |z| z.norm().powf(r))
    };
    (s * cell).powf(1.0 / r)
}

/// Streaming time quadrature for `L^q_t` of spatial norms sampled at a
/// uniform step: trapezoid rule for finite `q`, sample maximum otherwise.
#[derive(Debug, Clone)]
pub struct TimeAccumulator {
    q: f64,
    dt: f64,
    samples: Vec<f64>,
}

impl TimeAccumulator {
    pub fn new(q: f64, dt: f64) -> Self {
        TimeAccumulator { q, dt, samples: Vec::new() }
    }

    pub fn push(&mut self, spatial_norm: f64) {
        self.samples.push(spatial_norm);
    }

    pub fn finish(&self) -> f64 {
        if self.q.is_infinite() {
            return self.samples.iter().copied().fold(0.0, f64::max);
        }
        let k = self.samples.len();
        if k < 2 {
            return 0.0;
        }
        let powered: Vec<f64> = self
            .samples
            .iter()
            .enumerate()
            .map(|(i, v)| {
                let w = if i == 0 || i == k - 1 { 0.5 } else { 1.0 };
                w * v.powf(self.q)
            })
            .collect();
        (par::pairwise_sum(&powered) * self.dt).powf(1.0 / self.q)
    }
}

/// `( int_0^T ( int |F|^r dx )^{q/r} dt )^{1/q}`.
pub fn mixed_norm(traj: &SpacetimeField, p: LebesguePair) -> Result<f64> {
    p.validate()?;
    let cell = traj.grid().cell_volume();
    let spatial = par::map_slice(traj.frames(), |f| lattice_lr_norm(f.values(), p.r, cell));
    let mut acc = TimeAccumulator::new(p.q, traj.dt());
    spatial.into_iter().for_each(|v| acc.push(v));
    Ok(acc.finish())
}

/// `|| |xi|^s f^ ||` or `|| <xi>^s f^ ||` with Parseval weights.
pub fn sobolev_norm(f: &Field, s: f64, kind: SobolevKind) -> f64 {
    sobolev_norm_raw(f.grid(), &f.raw_fft(), s, kind)
}

pub(crate) fn sobolev_norm_raw(grid: &crate::grid::Grid, raw: &[Complex64], s: f64, kind: SobolevKind) -> f64 {
    let sym = power_symbol(s, kind);
    let total = par::pairwise_index_sum(raw.len(), |i| {
        let w = sym(grid.freq(i));
        w * w * raw[i].norm_sqr()
    });
    (total * grid.cell_volume() / grid.len() as f64).sqrt()
}

/// `2/q = n(1/2 - 1/r)`, `q, r >= 2`, excluding `(2, inf)` in the plane.
pub fn admissible_check(p: LebesguePair, n: usize) -> bool {
    if p.q < 2.0 || p.r < 2.0 || p.q.is_nan() || p.r.is_nan() {
        return false;
    }
    if n == 2 && p.q == 2.0 && p.r.is_infinite() {
        return false;
    }
    let lhs = 2.0 / p.q;
    let rhs = n as f64 * (0.5 - 1.0 / p.r);
    (lhs - rhs).abs() <= EXACT_TOL
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PredictedExponents {
    pub alpha: f64,
    pub bilinear_gain: f64,
    pub trilinear_gain: f64,
    pub cap_lower: f64,
    pub gwp_threshold: f64,
}

fn recip(v: f64) -> f64 {
    if v.is_infinite() {
        0.0
    } else {
        1.0 / v
    }
}

pub fn predicted_exponents(p: LebesguePair, n: usize) -> PredictedExponents {
    let nf = n as f64;
    let ir = recip(p.r);
    let iq = recip(p.q);
    PredictedExponents {
        alpha: (nf + 1.0) * (1.0 - 2.0 * ir) - 4.0 * iq,
        bilinear_gain: 1.0 - 2.0 * ir,
        trilinear_gain: 0.5,
        cap_lower: nf + 1.0 - 2.0 * (nf + 1.0) * ir - 4.0 * iq,
        gwp_threshold: gwp_threshold(n),
    }
}

/// `4(n-2)/(7n-8)`.
pub fn gwp_threshold(n: usize) -> f64 {
    let nf = n as f64;
    4.0 * (nf - 2.0) / (7.0 * nf - 8.0)
}

/// Exponent pair with rational entries; `None` is infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactPair {
    pub q: Option<Rational64>,
    pub r: Option<Rational64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExactExponents {
    pub alpha: Rational64,
    pub bilinear_gain: Rational64,
    pub trilinear_gain: Rational64,
    pub cap_lower: Rational64,
    pub gwp_threshold: Rational64,
}

fn exact_recip(v: Option<Rational64>) -> Rational64 {
    v.map(|x| x.recip()).unwrap_or_else(|| Rational64::from_integer(0))
}

pub fn predicted_exponents_exact(p: ExactPair, n: i64) -> ExactExponents {
    let one = Rational64::from_integer(1);
    let two = Rational64::from_integer(2);
    let four = Rational64::from_integer(4);
    let nr = Rational64::from_integer(n);
    let ir = exact_recip(p.r);
    let iq = exact_recip(p.q);
    ExactExponents {
        alpha: (nr + one) * (one - two * ir) - four * iq,
        bilinear_gain: one - two * ir,
        trilinear_gain: Rational64::new(1, 2),
        cap_lower: nr + one - two * (nr + one) * ir - four * iq,
        gwp_threshold: gwp_threshold_exact(n),
    }
}

pub fn gwp_threshold_exact(n: i64) -> Rational64 {
    Rational64::new(4 * (n - 2), 7 * n - 8)
}

/// Nonlinearity families whose Duhamel smoothing threshold is tabulated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NonlinearityKind {
    Hartree,
    Power,
}

/// Lower end of the regularity range on which the Duhamel part gains
/// regularity: `1/2` for Hartree, and for the power case `1/2` when
/// `n = 3, 4` and `s_n = 1 - 8/n^2` when `n >= 5`.
pub fn smoothing_threshold_exact(n: i64, kind: NonlinearityKind) -> Result<Rational64> {
    match (kind, n) {
        (NonlinearityKind::Hartree, n) if n >= 3 => Ok(Rational64::new(1, 2)),
        (NonlinearityKind::Power, 3 | 4) => Ok(Rational64::new(1, 2)),
        (NonlinearityKind::Power, n) if n >= 5 => Ok(Rational64::new(n * n - 8, n * n)),
        _ => Err(DlabError::Dimension { n: n.max(0) as usize, reason: "no smoothing threshold below n = 3".into() }),
    }
}

pub fn smoothing_threshold(n: usize, kind: NonlinearityKind) -> Result<f64> {
    let r = smoothing_threshold_exact(n as i64, kind)?;
    Ok(*r.numer() as f64 / *r.denom() as f64)
}

/// Time taper applied before the space-time transform.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TimeWindow {
    Flat,
    /// Smooth, 1 on `[T/4, 3T/4]`, vanishing at both ends.
    Bump,
}

fn smooth_step(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let a = (-1.0 / x).exp();
    let b = (-1.0 / (1.0 - x)).exp();
    a / (a + b)
}

impl TimeWindow {
    pub fn value(&self, t: f64, total: f64) -> f64 {
        match self {
            TimeWindow::Flat => 1.0,
            TimeWindow::Bump => {
                let q = 0.25 * total;
                smooth_step(t / q) * smooth_step((total - t) / q)
            }
        }
    }
}

/// Minimum number of time samples accepted by [`xsb_norm`].
pub const XSB_MIN_SAMPLES: usize = 8;

/// Windowed `X^{s,b}` norm: `( sum <xi>^{2s} <tau - |xi|^2>^{2b} |(w u)~|^2 )^{1/2}`
/// over the space-time lattice, with Parseval weights in space and a
/// periodic Riemann rule over the samples in time.
pub fn xsb_norm(u: &SpacetimeField, s: f64, b: f64, window: TimeWindow) -> Result<f64> {
    let k = u.len();
    if k < XSB_MIN_SAMPLES {
        return Err(DlabError::InvalidTimes(format!(
            "the space-time transform needs at least {XSB_MIN_SAMPLES} samples, got {k}"
        )));
    }
    let grid = *u.grid();
    let dt = u.dt();
    let total = u.final_time();
    let raws: Vec<Vec<Complex64>> = par::map_slice(u.frames(), |f| f.raw_fft());
    let weights: Vec<f64> = (0..k).map(|j| window.value(j as f64 * dt, total)).collect();
    let period = k as f64 * dt;
    let sigma: Vec<f64> = (0..k)
        .map(|j| {
            let sj = if j < k.div_ceil(2) { j as i64 } else { j as i64 - k as i64 };
            std::f64::consts::TAU * sj as f64 / period
        })
        .collect();
    let spatial = power_symbol(s, SobolevKind::Inhomogeneous);
    let per_mode = par::map_indexed(grid.len(), |i| {
        let xi = grid.freq(i);
        let k2 = norm_sq(xi);
        let mut line: Vec<Complex64> = (0..k)
            .map(|j| raws[j][i] * weights[j] * Complex64::from_polar(1.0, j as f64 * dt * k2))
            .collect();
        fft::transform(&mut line, 1, k, FftDirection::Forward);
        let ws = spatial(xi);
        let sum: f64 = line
            .iter()
            .zip(&sigma)
            .map(|(z, sg)| (1.0 + sg * sg).powf(b) * z.norm_sqr())
            .sum();
        ws * ws * sum
    });
    let dxn = grid.cell_volume();
    let scale = dxn * dxn / grid.box_volume() * dt / k as f64;
    Ok((par::pairwise_sum(&per_mode) * scale).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::spectral::propagate_trajectory;
    use crate::field::uniform_times;
    use std::f64::consts::PI;

    fn constant_traj(grid: Grid, c: Complex64, t: f64, k: usize) -> SpacetimeField {
        let f = Field::from_fn(grid, move |_| c);
        let times = uniform_times(t, k);
        SpacetimeField::new(times[1] - times[0], vec![f; k]).unwrap()
    }

    #[test]
    fn constant_field_closed_form() {
        let g = Grid::new(2, 3.0, 8).unwrap();
        let traj = constant_traj(g, Complex64::new(0.0, 2.0), 1.5, 11);
        for (q, r) in [(2.0, 2.0), (4.0, 3.0), (1.0, 6.0)] {
            let v = mixed_norm(&traj, LebesguePair::new(q, r).unwrap()).unwrap();
            let expect = 2.0 * 1.5f64.powf(1.0 / q) * 3.0f64.powf(2.0 / r);
            assert!((v - expect).abs() < 1e-12 * expect, "{q} {r}");
        }
        let sup = mixed_norm(&traj, LebesguePair::new(f64::INFINITY, f64::INFINITY).unwrap()).unwrap();
        assert!((sup - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_small_exponents() {
        assert!(LebesguePair::new(0.5, 2.0).is_err());
        assert!(LebesguePair::new(2.0, f64::NAN).is_err());
    }

    #[test]
    fn q_infinity_is_sample_max() {
        let g = Grid::new(1, 2.0 * PI, 16).unwrap();
        let frames: Vec<Field> = (1..=4).map(|k| Field::from_fn(g, move |_| Complex64::new(k as f64, 0.0))).collect();
        let traj = SpacetimeField::new(0.1, frames).unwrap();
        let v = mixed_norm(&traj, LebesguePair::new(f64::INFINITY, 2.0).unwrap()).unwrap();
        assert!((v - 4.0 * (2.0 * PI).sqrt()).abs() < 1e-12);
    }

    #[test]
    fn pair_serde_accepts_inf() {
        let p: LebesguePair = serde_json::from_str(r#"{"q":"inf","r":2}"#).unwrap();
        assert!(p.q.is_infinite());
        assert_eq!(serde_json::to_string(&p).unwrap(), r#"{"q":"inf","r":2.0}"#);
    }

    #[test]
    fn sobolev_examples() {
        let g = Grid::new(2, 2.0 * PI, 16).unwrap();
        let e = Field::plane_wave(g, [2, 0, 0]);
        let l2 = e.l2_norm();
        assert!((sobolev_norm(&e, 1.0, SobolevKind::Homogeneous) - 2.0 * l2).abs() < 1e-12);
        assert!((sobolev_norm(&e, 0.0, SobolevKind::Inhomogeneous) - l2).abs() < 1e-12);
        let c = Field::from_fn(g, |_| Complex64::new(1.0, 0.0));
        assert!((sobolev_norm(&c, 3.0, SobolevKind::Inhomogeneous) - c.l2_norm()).abs() < 1e-12);
        assert!(sobolev_norm(&c, 1.0, SobolevKind::Homogeneous) < 1e-12);
    }

    #[test]
    fn admissibility() {
        let inf = f64::INFINITY;
        assert!(admissible_check(LebesguePair { q: 2.0, r: 6.0 }, 3));
        assert!(!admissible_check(LebesguePair { q: 2.0, r: inf }, 2));
        assert!(admissible_check(LebesguePair { q: 8.0 / 3.0, r: 4.0 }, 3));
        assert!(admissible_check(LebesguePair { q: inf, r: 2.0 }, 3));
        assert!(admissible_check(LebesguePair { q: 4.0, r: 4.0 }, 2));
        assert!(!admissible_check(LebesguePair { q: 2.0, r: 2.0 }, 2));
        assert!(admissible_check(LebesguePair { q: 4.0, r: inf }, 1));
    }

    #[test]
    fn predicted_values() {
        let p = predicted_exponents(LebesguePair { q: 8.0 / 3.0, r: 4.0 }, 3);
        assert!((p.alpha - 0.5).abs() < 1e-15);
        assert!((p.cap_lower - 0.5).abs() < 1e-15);
        assert!((p.bilinear_gain - 0.5).abs() < 1e-15);
        assert!((p.gwp_threshold - 4.0 / 13.0).abs() < 1e-15);
        let q = predicted_exponents(LebesguePair { q: 4.0, r: 4.0 }, 2);
        assert!((q.bilinear_gain - 0.5).abs() < 1e-15);
        assert!((q.cap_lower - 0.5).abs() < 1e-15);
        let exact = predicted_exponents_exact(
            ExactPair { q: Some(Rational64::new(8, 3)), r: Some(Rational64::from_integer(4)) },
            3,
        );
        assert_eq!(exact.alpha, Rational64::new(1, 2));
        assert_eq!(exact.gwp_threshold, Rational64::new(4, 13));
    }

    #[test]
    fn smoothing_thresholds() {
        assert_eq!(smoothing_threshold_exact(5, NonlinearityKind::Power).unwrap(), Rational64::new(17, 25));
        assert_eq!(smoothing_threshold_exact(3, NonlinearityKind::Power).unwrap(), Rational64::new(1, 2));
        assert_eq!(smoothing_threshold_exact(3, NonlinearityKind::Hartree).unwrap(), Rational64::new(1, 2));
        assert!(smoothing_threshold_exact(2, NonlinearityKind::Hartree).is_err());
    }

    #[test]
    fn trapezoid_is_second_order() {
        let g = Grid::new(1, 2.0 * PI, 16).unwrap();
        let run = |k: usize| {
            let times = uniform_times(1.0, k);
            let frames = times
                .iter()
                .map(|&t| Field::from_fn(g, move |_| Complex64::new((2.0 * t).sin() + 1.5, 0.0)))
                .collect();
            let traj = SpacetimeField::new(times[1], frames).unwrap();
            mixed_norm(&traj, LebesguePair { q: 3.0, r: 2.0 }).unwrap()
        };
        let coarse = run(17);
        let fine = run(33);
        assert!((coarse - fine).abs() < 0.01 * fine);
    }

    #[test]
    fn xsb_on_paraboloid_mode() {
        let g = Grid::new(1, 2.0 * PI, 16).unwrap();
        let e = Field::plane_wave(g, [3, 0, 0]);
        let times = uniform_times(0.7, 16);
        let traj = propagate_trajectory(&e, &times).unwrap();
        let mode_mass = (16.0 * times[1] * e.mass()).sqrt();
        for b in [0.0, 0.5, 0.9] {
            let v = xsb_norm(&traj, 1.0, b, TimeWindow::Flat).unwrap();
            assert!((v - 10f64.sqrt() * mode_mass).abs() < 1e-10, "{b}");
        }
        assert!(xsb_norm(&SpacetimeField::new(0.1, vec![e.clone(); 4]).unwrap(), 0.0, 0.0, TimeWindow::Flat).is_err());
    }

    #[test]
    fn xsb_reduces_to_windowed_l2_and_grows_in_b() {
        let g = Grid::new(1, 2.0 * PI, 16).unwrap();
        let times = uniform_times(1.0, 20);
        let frames: Vec<Field> = times
            .iter()
            .map(|&t| Field::from_fn(g, move |x| Complex64::new((x[0] + 3.0 * t).cos(), (2.0 * x[0] * t).sin())))
            .collect();
        let traj = SpacetimeField::new(times[1], frames).unwrap();
        let plain = xsb_norm(&traj, 0.0, 0.0, TimeWindow::Bump).unwrap();
        let total = traj.final_time();
        let direct: f64 = traj
            .frames()
            .iter()
            .enumerate()
            .map(|(j, f)| TimeWindow::Bump.value(j as f64 * traj.dt(), total).powi(2) * f.mass())
            .sum::<f64>()
            * traj.dt();
        assert!((plain - direct.sqrt()).abs() < 1e-10 * plain);
        let mut prev = 0.0;
        for b in [0.0, 0.25, 0.5, 1.0] {
            let v = xsb_norm(&traj, 0.5, b, TimeWindow::Bump).unwrap();
            assert!(v >= prev);
            prev = v;
        }
    }
}
