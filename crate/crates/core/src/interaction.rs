//! Bilinear and trilinear interaction norms of free waves, their decay
//! scans, and the squashed-cap lower bound.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DlabError, Result};
use crate::fft;
use crate::field::{uniform_step, uniform_times, Field};
use crate::fit::{PassRule, ScanPoint, ScanReport};
use crate::grid::{wrap_safe_horizon, Grid};
use crate::lp::{band_random, derive_seed, localized_band_random, DyadicIndex, SupportSpec};
use crate::norms::{admissible_check, lattice_lr_norm, predicted_exponents, LebesguePair, TimeAccumulator};
use crate::par;
use crate::spectral::{for_each_freq_mut, norm_sq, product_raw, resample_raw, riesz_symbol, spectral_extent};

/// Slope tolerance for the decay scans.
pub const DECAY_TOLERANCE: f64 = 0.15;
/// Least accepted goodness of fit of the bilinear decay curve.
pub const BILINEAR_MIN_R_SQUARED: f64 = 0.95;
/// Slope tolerance for the two-sided cap scan.
pub const SHARPNESS_TOLERANCE: f64 = 0.2;

fn schrodinger_phase(xi: [f64; 3], boost: [f64; 3], t: f64) -> Complex64 {
    let s = [xi[0] + boost[0], xi[1] + boost[1], xi[2] + boost[2]];
    Complex64::from_polar(1.0, -t * norm_sq(s))
}

fn evolve_raw(grid: &Grid, raw: &[Complex64], boost: [f64; 3], t: f64) -> Vec<Complex64> {
    let mut out = raw.to_vec();
    for_each_freq_mut(grid, &mut out, |xi, z| *z *= schrodinger_phase(xi, boost, t));
    fft::inverse(&mut out, grid.n, grid.m);
    let inv = 1.0 / grid.len() as f64;
    out.iter_mut().for_each(|z| *z *= inv);
    out
}

/// `|| e^{it Delta} f e^{it Delta} g ||` in `L^{q/2}_t L^{r/2}_x` over `times`.
pub fn bilinear_norm(f: &Field, g: &Field, p: LebesguePair, times: &[f64]) -> Result<f64> {
    bilinear_norm_boosted(f, g, [0.0; 3], [0.0; 3], p, times)
}

/// [`bilinear_norm`] for `e^{i x.bf} f` and `e^{i x.bg} g`, with `f`, `g`
/// given as profiles in their co-moving spectral frames.
pub fn bilinear_norm_boosted(
    f: &Field,
    g: &Field,
    boost_f: [f64; 3],
    boost_g: [f64; 3],
    p: LebesguePair,
    times: &[f64],
) -> Result<f64> {
    f.check_same_grid(g)?;
    let half = p.halved();
    half.validate()?;
    let dt = uniform_step(times)?;
    let grid = *f.grid();
    let (fr, gr) = (f.raw_fft(), g.raw_fft());
    let cell = grid.cell_volume();
    let mut acc = TimeAccumulator::new(half.q, dt);
    for &t in times {
        let a = evolve_raw(&grid, &fr, boost_f, t);
        let b = evolve_raw(&grid, &gr, boost_g, t);
        let prod = par::map_indexed(a.len(), |i| a[i] * b[i]);
        acc.push(lattice_lr_norm(&prod, half.r, cell));
    }
    Ok(acc.finish())
}

// Relative size below which spectral coefficients do not count towards the
// band of a factor when choosing the grid for the Riesz product.
const BAND_TOL: f64 = 1e-13;

fn coarse_grid_for(grid: &Grid, extent: i64) -> Grid {
    let mut m = 2;
    while (m as i64) < 4 * (extent + 1) && m < grid.m {
        m *= 2;
    }
    grid.with_points(m.min(grid.m)).expect("power of two below the grid size")
}

/// `|| |nabla|^{2-n}(e^{it Delta} f e^{it Delta} g) e^{it Delta} h ||` for
/// each pair in `pairs`.
pub fn trilinear_h_norms(f: &Field, g: &Field, h: &Field, pairs: &[LebesguePair], times: &[f64]) -> Result<Vec<f64>> {
    trilinear_h_norms_boosted(f, g, h, [0.0; 3], pairs, times)
}

/// As [`trilinear_h_norms`] with the third factor `e^{i b.x} h`, evolved in
/// the frame moving with it; only `|e^{it Delta} h|` enters the norms.
pub fn trilinear_h_norms_boosted(
    f: &Field,
    g: &Field,
    h: &Field,
    boost_h: [f64; 3],
    pairs: &[LebesguePair],
    times: &[f64],
) -> Result<Vec<f64>> {
    f.check_same_grid(g)?;
    f.check_same_grid(h)?;
    let grid = *f.grid();
    if grid.n < 3 {
        return Err(DlabError::Dimension { n: grid.n, reason: "the trilinear operator needs n >= 3".into() });
    }
    for p in pairs {
        p.validate()?;
    }
    let dt = uniform_step(times)?;
    let (fr, gr, hr) = (f.raw_fft(), g.raw_fft(), h.raw_fft());
    // the Riesz product only involves f and g, so it is formed on the
    // smallest grid that holds their product without aliasing
    let extent = spectral_extent(&grid, &fr, BAND_TOL).max(spectral_extent(&grid, &gr, BAND_TOL));
    let coarse = coarse_grid_for(&grid, extent);
    let (fc, gc) = (resample_raw(&grid, &fr, &coarse), resample_raw(&grid, &gr, &coarse));
    let riesz = riesz_symbol(grid.n);
    let cell = grid.cell_volume();
    let mut accs: Vec<TimeAccumulator> = pairs.iter().map(|p| TimeAccumulator::new(p.q, dt)).collect();
    for &t in times {
        let a = evolve_raw(&coarse, &fc, [0.0; 3], t);
        let b = evolve_raw(&coarse, &gc, [0.0; 3], t);
        let mut ar = a.clone();
        let mut br = b.clone();
        fft::forward(&mut ar, coarse.n, coarse.m);
        fft::forward(&mut br, coarse.n, coarse.m);
        let mut prod = product_raw(&coarse, &a, &ar, &b, &br);
        for_each_freq_mut(&coarse, &mut prod, |xi, z| *z *= riesz(xi));
        let mut pot = resample_raw(&coarse, &prod, &grid);
        fft::inverse(&mut pot, grid.n, grid.m);
        let inv = 1.0 / grid.len() as f64;
        let c = evolve_raw(&grid, &hr, boost_h, t);
        let out = par::map_indexed(c.len(), |i| pot[i] * inv * c[i]);
        for (acc, p) in accs.iter_mut().zip(pairs) {
            acc.push(lattice_lr_norm(&out, p.r, cell));
        }
    }
    Ok(accs.iter().map(TimeAccumulator::finish).collect())
}

pub fn trilinear_h_norm(f: &Field, g: &Field, h: &Field, pair: LebesguePair, times: &[f64]) -> Result<f64> {
    Ok(trilinear_h_norms(f, g, h, &[pair], times)?[0])
}

/// The two endpoint dual pairs `(1, 2)` and `(2, 2n/(n+2))`.
pub fn trilinear_endpoints(n: usize) -> [LebesguePair; 2] {
    let nf = n as f64;
    [LebesguePair { q: 1.0, r: 2.0 }, LebesguePair { q: 2.0, r: 2.0 * nf / (nf + 2.0) }]
}

/// Random test data used by the scans.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum DataFamily {
    /// Gaussian coefficients on every lattice point of the support.
    Box,
    /// Band-limited noise under a spatial Gaussian window of this width.
    Localized { width: f64 },
}

impl DataFamily {
    pub fn sample(&self, grid: &Grid, spec: &SupportSpec, seed: u64) -> Result<Field> {
        match *self {
            DataFamily::Box => band_random(grid, spec, seed),
            DataFamily::Localized { width } => localized_band_random(grid, spec, width, seed),
        }
    }

    /// Radius of the region that holds the data at time 0.
    pub fn support_radius(&self, grid: &Grid) -> f64 {
        match *self {
            DataFamily::Box => 0.5 * grid.l,
            DataFamily::Localized { width } => 3.0 * width + 2.0,
        }
    }
}

/// Length of the time window of a scan point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Horizon {
    Fixed { t: f64 },
    /// The longest time before the fastest mode wraps around the box.
    WrapSafe,
}

impl Horizon {
    pub fn resolve(&self, grid: &Grid, data: &DataFamily, max_freq: f64) -> Result<f64> {
        let t = match *self {
            Horizon::Fixed { t } => t,
            Horizon::WrapSafe => wrap_safe_horizon(grid, data.support_radius(grid), max_freq),
        };
        if !(t > 0.0 && t.is_finite()) {
            return Err(DlabError::Unresolvable(format!(
                "no wrap-free time window on a box of side {} at |xi| = {max_freq}",
                grid.l
            )));
        }
        Ok(t)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BilinearScan {
    pub grid: Grid,
    pub pair: LebesguePair,
    pub n1: DyadicIndex,
    pub n2_list: Vec<DyadicIndex>,
    pub trials: usize,
    pub seed: u64,
    pub samples: usize,
    pub horizon: Horizon,
    pub data: DataFamily,
}

impl BilinearScan {
    pub fn validate(&self) -> Result<()> {
        self.grid.validated()?;
        self.pair.validate()?;
        if self.trials == 0 || self.samples < 2 {
            return Err(DlabError::InvalidTimes("need at least one trial and two time samples".into()));
        }
        for big in std::iter::once(&self.n1).chain(&self.n2_list) {
            SupportSpec::Annulus { n: big.value() }.validate(&self.grid)?;
        }
        Ok(())
    }
}

fn unit_cell(seed: u64, point: usize, trial: usize, slot: u64) -> u64 {
    derive_seed(seed, &[point as u64, trial as u64, slot])
}

/// Normalized bilinear norm against `N2` on `A(N1) x A(N2)`; the fitted
/// slope in `N2` is compared with `-(1 - 2/r)`.
pub fn bilinear_decay_scan(cfg: &BilinearScan) -> Result<ScanReport> {
    cfg.validate()?;
    let grid = cfg.grid;
    let spec1 = SupportSpec::Annulus { n: cfg.n1.value() };
    let mut points = Vec::new();
    for (ip, n2) in cfg.n2_list.iter().enumerate() {
        let spec2 = SupportSpec::Annulus { n: n2.value() };
        let kmax = spec1.outer_radius(grid.n).max(spec2.outer_radius(grid.n));
        let t = cfg.horizon.resolve(&grid, &cfg.data, kmax)?;
        let times = uniform_times(t, cfg.samples);
        let trials = par::map_indexed(cfg.trials, |k| -> Result<f64> {
            let f = cfg.data.sample(&grid, &spec1, unit_cell(cfg.seed, ip, k, 1))?;
            let g = cfg.data.sample(&grid, &spec2, unit_cell(cfg.seed, ip, k, 2))?;
            bilinear_norm(&f, &g, cfg.pair, &times)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        let mut pt = ScanPoint::from_trials(n2.value(), &trials);
        pt.extra = vec![t];
        points.push(pt);
    }
    let gain = predicted_exponents(cfg.pair, grid.n).bilinear_gain;
    let mut report = ScanReport::assemble("bilinear", "N2", points, -gain, DECAY_TOLERANCE, PassRule::AtMost)
        .with_min_r_squared(BILINEAR_MIN_R_SQUARED);
    report.extra_columns = vec!["T".into()];
    if !admissible_check(cfg.pair, grid.n) {
        report.flag("pair is not admissible");
    }
    if cfg.pair.uses_sup() {
        report.flag("sup norms are lattice maxima (under-estimates)");
    }
    Ok(report)
}

/// Which dyadic index of the trilinear scan grows.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrilinearPattern {
    /// `N1 = N2 = 1`, `N3` grows.
    ThirdGrows,
    /// `N2 = N3 = 1`, `N1` grows.
    FirstGrows,
}

/// Fourier support of the growing factor of a [`TrilinearPattern::ThirdGrows`] scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum HighProfile {
    /// The whole annulus `A(N)`, sampled on the lattice.
    Annulus,
    /// The ball `B(N e_1, radius)` inside `A(N)`, carried by a Galilean
    /// boost so the lattice only resolves the ball about the origin.
    BoostedBall { radius: f64 },
}

impl Default for HighProfile {
    fn default() -> Self {
        HighProfile::Annulus
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrilinearScan {
    pub grid: Grid,
    pub pairs: Vec<LebesguePair>,
    pub pattern: TrilinearPattern,
    pub scales: Vec<DyadicIndex>,
    pub trials: usize,
    pub seed: u64,
    pub samples: usize,
    pub horizon: Horizon,
    pub data: DataFamily,
    #[serde(default)]
    pub high: HighProfile,
}

/// Normalized trilinear norm against `max/min` of the dyadic indices, one
/// report per dual pair; predicted slope `-1/2`.
impl TrilinearScan {
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.validated()?;
        if grid.n < 3 {
            return Err(DlabError::Dimension { n: grid.n, reason: "the trilinear operator needs n >= 3".into() });
        }
        if self.trials == 0 || self.samples < 2 || self.pairs.is_empty() {
            return Err(DlabError::InvalidTimes("need trials, pairs and at least two time samples".into()));
        }
        for p in &self.pairs {
            p.validate()?;
        }
        match self.high {
            HighProfile::Annulus => {
                for scale in &self.scales {
                    SupportSpec::Annulus { n: scale.value() }.validate(&grid)?;
                }
            }
            HighProfile::BoostedBall { radius } => {
                if self.pattern != TrilinearPattern::ThirdGrows {
                    return Err(DlabError::InvalidSupport("a boosted ball needs the third_grows pattern".into()));
                }
                for scale in &self.scales {
                    if !(radius > 0.0 && radius < 0.5 * scale.value()) {
                        return Err(DlabError::InvalidSupport(format!(
                            "ball of radius {radius} about {} e_1 leaves the annulus",
                            scale.value()
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

pub fn trilinear_decay_scan(cfg: &TrilinearScan) -> Result<Vec<ScanReport>> {
    cfg.validate()?;
    let grid = cfg.grid;
    let unit = SupportSpec::Annulus { n: 1.0 };
    let mut per_pair: Vec<Vec<ScanPoint>> = vec![Vec::new(); cfg.pairs.len()];
    for (ip, scale) in cfg.scales.iter().enumerate() {
        let big = SupportSpec::Annulus { n: scale.value() };
        let (specs, boost, kmax) = match (cfg.pattern, cfg.high) {
            (TrilinearPattern::ThirdGrows, HighProfile::BoostedBall { radius }) => {
                let ball = SupportSpec::Ball { center: [0.0; 3], radius };
                ball.validate(&grid)?;
                let b = [scale.value(), 0.0, 0.0];
                ([unit, unit, ball], b, (scale.value() + radius).max(unit.outer_radius(grid.n)))
            }
            (TrilinearPattern::ThirdGrows, HighProfile::Annulus) => {
                big.validate(&grid)?;
                ([unit, unit, big], [0.0; 3], big.outer_radius(grid.n).max(unit.outer_radius(grid.n)))
            }
            (TrilinearPattern::FirstGrows, _) => {
                big.validate(&grid)?;
                ([big, unit, unit], [0.0; 3], big.outer_radius(grid.n).max(unit.outer_radius(grid.n)))
            }
        };
        let t = cfg.horizon.resolve(&grid, &cfg.data, kmax)?;
        let times = uniform_times(t, cfg.samples);
        let trials = par::map_indexed(cfg.trials, |k| -> Result<Vec<f64>> {
            let mut fields = Vec::with_capacity(3);
            for (slot, spec) in specs.iter().enumerate() {
                fields.push(cfg.data.sample(&grid, spec, unit_cell(cfg.seed, ip, k, slot as u64))?);
            }
            trilinear_h_norms_boosted(&fields[0], &fields[1], &fields[2], boost, &cfg.pairs, &times)
        })
        .into_iter()
        .collect::<Result<Vec<Vec<f64>>>>()?;
        for (j, pts) in per_pair.iter_mut().enumerate() {
            let vals: Vec<f64> = trials.iter().map(|v| v[j]).collect();
            let mut pt = ScanPoint::from_trials(scale.value(), &vals);
            pt.extra = vec![t];
            pts.push(pt);
        }
    }
    Ok(cfg
        .pairs
        .iter()
        .zip(per_pair)
        .map(|(p, pts)| {
            let mut r = ScanReport::assemble(
                &format!("trilinear {p}"),
                "max/min",
                pts,
                -predicted_exponents(*p, grid.n).trilinear_gain,
                DECAY_TOLERANCE,
                PassRule::AtMost,
            );
            r.extra_columns = vec!["T".into()];
            r
        })
        .collect())
}

/// Smallest `rho` whose cap spans four lattice spacings along `xi_1`.
pub fn min_cap_rho(grid: &Grid) -> f64 {
    (4.0 * grid.dk()).sqrt()
}

fn check_cap(grid: &Grid, rho: f64) -> Result<()> {
    let min = min_cap_rho(grid);
    if !(rho >= min * (1.0 - 1e-12)) {
        return Err(DlabError::Unresolvable(format!(
            "rho = {rho} is below the smallest resolvable cap rho = {min:.6} on a box of side {}",
            grid.l
        )));
    }
    Ok(())
}

fn normalized_indicator(grid: &Grid, spec: SupportSpec) -> Result<Field> {
    // physical spectrum, so the cap wave is centred at the origin
    let spectrum = par::map_indexed(grid.len(), |i| {
        if spec.contains(grid.freq(i), grid.n) {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::default()
        }
    });
    let f = Field::from_spectrum(*grid, spectrum)?;
    let norm = f.l2_norm();
    if norm == 0.0 {
        return Err(DlabError::InvalidSupport("cap holds no lattice frequency".into()));
    }
    Ok(f.scale(Complex64::new(1.0 / norm, 0.0)))
}

/// Unit-L2 fields with indicator spectra on the caps
/// `|xi_1 -+ 1| <= rho^2, |xi_i| <= rho`.
pub fn build_squashed_caps(grid: &Grid, rho: f64) -> Result<(Field, Field)> {
    check_cap(grid, rho)?;
    let plus = SupportSpec::Cap { rho, sign: 1 };
    plus.validate(grid)?;
    let f = normalized_indicator(grid, plus)?;
    let g = normalized_indicator(grid, SupportSpec::Cap { rho, sign: -1 })?;
    Ok((f, g))
}

/// The cap recentred at the origin: `|xi_1| <= rho^2, |xi_i| <= rho`.
pub fn cap_profile(grid: &Grid, rho: f64) -> Result<Field> {
    check_cap(grid, rho)?;
    let spec = SupportSpec::Cap { rho, sign: 0 };
    let outer = ((rho * rho).powi(2) + (grid.n as f64 - 1.0) * rho * rho).sqrt();
    if outer > grid.resolvable_radius() {
        return Err(DlabError::Unresolvable(format!("cap of width {rho} exceeds the resolvable band")));
    }
    normalized_indicator(grid, spec)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SharpnessScan {
    pub n: usize,
    pub pair: LebesguePair,
    pub rhos: Vec<f64>,
    /// Points per axis of every box.
    pub m: usize,
    /// Lattice spacings across the cap along `xi_1`; the box side is
    /// `2 pi cap_points / rho^2`.
    pub cap_points: f64,
    /// Time window `time_factor / rho^2`.
    pub time_factor: f64,
    pub samples: usize,
}

/// Normalized bilinear norm of the two caps against `rho`; two-sided
/// comparison with `n + 1 - 2(n+1)/r - 4/q`.
impl SharpnessScan {
    pub fn validate(&self) -> Result<()> {
        self.pair.validate()?;
        if self.cap_points < 4.0 {
            return Err(DlabError::Unresolvable("caps need at least 4 lattice spacings".into()));
        }
        if self.samples < 2 {
            return Err(DlabError::InvalidTimes("need at least two time samples".into()));
        }
        if !(self.time_factor > 0.0) {
            return Err(DlabError::InvalidTimes(format!("time factor {} must be positive", self.time_factor)));
        }
        for &rho in &self.rhos {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(DlabError::InvalidSupport(format!("rho = {rho} must lie in (0, 1)")));
            }
            Grid::new(self.n, std::f64::consts::TAU * self.cap_points / (rho * rho), self.m)?;
        }
        Ok(())
    }
}

pub fn sharpness_scan(cfg: &SharpnessScan) -> Result<ScanReport> {
    cfg.validate()?;
    let mut points = Vec::new();
    for &rho in &cfg.rhos {
        let grid = Grid::new(cfg.n, std::f64::consts::TAU * cfg.cap_points / (rho * rho), cfg.m)?;
        let profile = cap_profile(&grid, rho)?;
        let t = cfg.time_factor / (rho * rho);
        let times = uniform_times(t, cfg.samples);
        let v = bilinear_norm_boosted(&profile, &profile, [1.0, 0.0, 0.0], [-1.0, 0.0, 0.0], cfg.pair, &times)?;
        let mut pt = ScanPoint::single(rho, v);
        pt.extra = vec![grid.l, t];
        points.push(pt);
    }
    let predicted = predicted_exponents(cfg.pair, cfg.n).cap_lower;
    let mut r = ScanReport::assemble("sharpness", "rho", points, predicted, SHARPNESS_TOLERANCE, PassRule::TwoSided);
    r.extra_columns = vec!["L".into(), "T".into()];
    Ok(r)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Theorem1Scan {
    pub grid: Grid,
    pub pair: LebesguePair,
    pub s: f64,
    pub n2_list: Vec<DyadicIndex>,
    pub trials: usize,
    pub seed: u64,
    pub samples: usize,
    pub horizon: Horizon,
    pub data: DataFamily,
    /// Allowed growth of the ratio over its first value.
    pub factor: f64,
}

/// `|| e^{it Delta} f e^{it Delta} g || / (||f||_{H^s} ||g||_{H^{-s}})` with
/// `f` on `A(1)` and `g` on `A(N2)`.
impl Theorem1Scan {
    pub fn validate(&self) -> Result<()> {
        let grid = self.grid.validated()?;
        self.pair.validate()?;
        if self.trials == 0 || self.samples < 2 {
            return Err(DlabError::InvalidTimes("need at least one trial and two time samples".into()));
        }
        if !(self.factor >= 1.0) {
            return Err(DlabError::InvalidExponent(format!("growth factor {} must be at least 1", self.factor)));
        }
        for n2 in &self.n2_list {
            SupportSpec::Annulus { n: n2.value() }.validate(&grid)?;
        }
        Ok(())
    }
}

pub fn theorem1_ratio_scan(cfg: &Theorem1Scan) -> Result<ScanReport> {
    cfg.validate()?;
    let grid = cfg.grid;
    let unit = SupportSpec::Annulus { n: 1.0 };
    let mut points = Vec::new();
    for (ip, n2) in cfg.n2_list.iter().enumerate() {
        let spec2 = SupportSpec::Annulus { n: n2.value() };
        spec2.validate(&grid)?;
        let t = cfg.horizon.resolve(&grid, &cfg.data, spec2.outer_radius(grid.n).max(2.0))?;
        let times = uniform_times(t, cfg.samples);
        let trials = par::map_indexed(cfg.trials, |k| -> Result<f64> {
            let f = cfg.data.sample(&grid, &unit, unit_cell(cfg.seed, ip, k, 1))?;
            let g = cfg.data.sample(&grid, &spec2, unit_cell(cfg.seed, ip, k, 2))?;
            let num = bilinear_norm(&f, &g, cfg.pair, &times)?;
            let kind = crate::spectral::SobolevKind::Homogeneous;
            let den = crate::norms::sobolev_norm(&f, cfg.s, kind) * crate::norms::sobolev_norm(&g, -cfg.s, kind);
            Ok(num / den)
        })
        .into_iter()
        .collect::<Result<Vec<f64>>>()?;
        points.push(ScanPoint::from_trials(n2.value(), &trials));
    }
    let mut r = ScanReport::assemble("theorem1", "N2", points, 0.0, 0.0, PassRule::BoundedRatio { factor: cfg.factor });
    let limit = predicted_exponents(cfg.pair, grid.n).bilinear_gain;
    if cfg.s.abs() >= limit {
        r.flag(format!("|s| >= 1 - 2/r = {limit}: outside the range of the estimate, growth expected"));
    }
    if !admissible_check(cfg.pair, grid.n) {
        r.flag("pair is not admissible");
    }
    Ok(r)
}
