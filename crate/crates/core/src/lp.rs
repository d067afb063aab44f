//! Littlewood-Paley cutoffs, frequency supports and random band-limited data.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{DlabError, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::par;
use crate::spectral::{apply_multiplier, for_each_freq_mut, norm_sq};

fn bump_tail(x: f64) -> f64 {
    if x > 0.0 {
        (-1.0 / x).exp()
    } else {
        0.0
    }
}

/// Smooth monotone ramp: 1 on `[0,1]`, 0 on `[2, inf)`.
pub fn theta(r: f64) -> f64 {
    let a = bump_tail(2.0 - r);
    let b = bump_tail(r - 1.0);
    a / (a + b)
}

/// Annular cutoff `theta(r) - theta(2r)`, supported in `[1/2, 2]`.
pub fn chi(r: f64) -> f64 {
    theta(r) - theta(2.0 * r)
}

/// A dyadic number `2^k`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DyadicIndex {
    log2: i32,
}

impl DyadicIndex {
    pub fn from_log2(log2: i32) -> Self {
        DyadicIndex { log2 }
    }

    pub fn new(value: f64) -> Result<Self> {
        if !(value.is_finite() && value > 0.0) {
            return Err(DlabError::InvalidSupport(format!("dyadic index must be positive, got {value}")));
        }
        let k = value.log2().round();
        if (k.exp2() - value).abs() > 1e-12 * value {
            return Err(DlabError::InvalidSupport(format!("{value} is not a power of two")));
        }
        Ok(DyadicIndex { log2: k as i32 })
    }

    pub fn value(self) -> f64 {
        (self.log2 as f64).exp2()
    }

    pub fn log2(self) -> i32 {
        self.log2
    }
}

impl Serialize for DyadicIndex {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_f64(self.value())
    }
}

impl<'de> Deserialize<'de> for DyadicIndex {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let v = f64::deserialize(d)?;
        DyadicIndex::new(v).map_err(serde::de::Error::custom)
    }
}

/// A frequency set used to localize test data.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum SupportSpec {
    /// `N/2 <= |xi| <= 2N`.
    Annulus { n: f64 },
    Ball { center: [f64; 3], radius: f64 },
    /// `|xi_i| <= half_side` for every axis.
    Cube { half_side: f64 },
    /// `|xi_1 - sign| <= rho^2`, `|xi_i| <= rho` for `i >= 2`.
    Cap { rho: f64, sign: i8 },
}

impl SupportSpec {
    pub fn contains(&self, xi: [f64; 3], n: usize) -> bool {
        match *self {
            SupportSpec::Annulus { n: big } => {
                let r = norm_sq(xi).sqrt();
                r >= 0.5 * big && r <= 2.0 * big
            }
            SupportSpec::Ball { center, radius } => {
                let d: f64 = (0..n).map(|a| (xi[a] - center[a]).powi(2)).sum();
                d.sqrt() <= radius
            }
            SupportSpec::Cube { half_side } => (0..n).all(|a| xi[a].abs() <= half_side),
            SupportSpec::Cap { rho, sign } => {
                (xi[0] - sign as f64).abs() <= rho * rho && (1..n).all(|a| xi[a].abs() <= rho)
            }
        }
    }

    /// Smooth weight inside the set: the LP cutoff for annuli, the indicator otherwise.
    pub fn weight(&self, xi: [f64; 3], n: usize) -> f64 {
        match *self {
            SupportSpec::Annulus { n: big } => chi(norm_sq(xi).sqrt() / big),
            _ => {
                if self.contains(xi, n) {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    /// Largest `|xi|` in the set.
    pub fn outer_radius(&self, n: usize) -> f64 {
        match *self {
            SupportSpec::Annulus { n: big } => 2.0 * big,
            SupportSpec::Ball { center, radius } => {
                (0..n).map(|a| center[a] * center[a]).sum::<f64>().sqrt() + radius
            }
            SupportSpec::Cube { half_side } => half_side * (n as f64).sqrt(),
            SupportSpec::Cap { rho, .. } => ((1.0 + rho * rho).powi(2) + (n as f64 - 1.0) * rho * rho).sqrt(),
        }
    }

    pub fn validate(&self, grid: &Grid) -> Result<()> {
        let ok = match *self {
            SupportSpec::Annulus { n } => n > 0.0,
            SupportSpec::Ball { radius, center } => radius > 0.0 && center.iter().all(|c| c.is_finite()),
            SupportSpec::Cube { half_side } => half_side > 0.0,
            SupportSpec::Cap { rho, sign } => rho > 0.0 && (sign == 1 || sign == -1),
        };
        if !ok {
            return Err(DlabError::InvalidSupport(format!("bad parameters in `{self}`")));
        }
        let outer = self.outer_radius(grid.n);
        if outer > grid.resolvable_radius() {
            return Err(DlabError::Unresolvable(format!(
                "`{self}` reaches |xi| = {outer:.4} beyond the resolvable radius {:.4}",
                grid.resolvable_radius()
            )));
        }
        Ok(())
    }
}

impl fmt::Display for SupportSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            SupportSpec::Annulus { n } => write!(f, "annulus:N={n}"),
            SupportSpec::Ball { center, radius } => {
                write!(f, "ball:c=({},{},{}),r={radius}", center[0], center[1], center[2])
            }
            SupportSpec::Cube { half_side } => write!(f, "cube:a={half_side}"),
            SupportSpec::Cap { rho, sign } => {
                write!(f, "cap:rho={rho},sign={}", if sign > 0 { '+' } else { '-' })
            }
        }
    }
}

fn parse_num(s: &str, text: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| DlabError::InvalidSupport(format!("bad number `{s}` in `{text}`")))
}

impl FromStr for SupportSpec {
    type Err = DlabError;

    fn from_str(text: &str) -> Result<Self> {
        let bad = || DlabError::InvalidSupport(format!("cannot parse support `{text}`"));
        let (kind, rest) = text.trim().split_once(':').ok_or_else(bad)?;
        // split on commas outside parentheses
        let mut params = Vec::new();
        let mut depth = 0;
        let mut start = 0;
        for (i, c) in rest.char_indices() {
            match c {
                '(' => depth += 1,
                ')' => depth -= 1,
                ',' if depth == 0 => {
                    params.push(&rest[start..i]);
                    start = i + 1;
                }
                _ => {}
            }
        }
        params.push(&rest[start..]);
        let mut map = std::collections::BTreeMap::new();
        for p in params {
            let (k, v) = p.split_once('=').ok_or_else(bad)?;
            map.insert(k.trim().to_string(), v.trim().to_string());
        }
        let get = |k: &str| map.get(k).ok_or_else(bad);
        let spec = match kind.trim() {
            "annulus" => SupportSpec::Annulus { n: parse_num(get("N")?, text)? },
            "ball" => {
                let c = get("c")?;
                let inner = c.strip_prefix('(').and_then(|c| c.strip_suffix(')')).ok_or_else(bad)?;
                let parts: Vec<f64> = inner.split(',').map(|p| parse_num(p, text)).collect::<Result<_>>()?;
                if parts.is_empty() || parts.len() > 3 {
                    return Err(bad());
                }
                let mut center = [0.0; 3];
                center[..parts.len()].copy_from_slice(&parts);
                SupportSpec::Ball { center, radius: parse_num(get("r")?, text)? }
            }
            "cube" => SupportSpec::Cube { half_side: parse_num(get("a")?, text)? },
            "cap" => {
                let sign = match get("sign")?.as_str() {
                    "+" | "+1" => 1,
                    "-" | "-1" => -1,
                    _ => return Err(bad()),
                };
                SupportSpec::Cap { rho: parse_num(get("rho")?, text)?, sign }
            }
            _ => return Err(bad()),
        };
        Ok(spec)
    }
}

impl TryFrom<String> for SupportSpec {
    type Error = DlabError;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<SupportSpec> for String {
    fn from(s: SupportSpec) -> String {
        s.to_string()
    }
}

/// Output of [`lp_project`].
#[derive(Debug, Clone)]
pub struct Projection {
    pub field: Field,
    /// The annulus misses the resolvable band, so the output is empty.
    pub outside_band: bool,
}

/// `P_N f` with symbol `chi(|xi|/N)`.
pub fn lp_project(f: &Field, big_n: DyadicIndex) -> Projection {
    let grid = *f.grid();
    let nv = big_n.value();
    let field = apply_multiplier(f, |xi| Complex64::new(chi(norm_sq(xi).sqrt() / nv), 0.0));
    let max_freq = grid.nyquist() * (grid.n as f64).sqrt();
    let outside_band = 0.5 * nv > max_freq || 2.0 * nv < grid.dk();
    Projection { field, outside_band }
}

/// The low piece `id - sum_{N > 1} P_N`, symbol `theta(|xi|)`.
pub fn low_project(f: &Field) -> Field {
    apply_multiplier(f, |xi| Complex64::new(theta(norm_sq(xi).sqrt()), 0.0))
}

/// Dyadic `N = 2, 4, ...` whose annuli cover every lattice frequency above 1.
pub fn dyadic_range(grid: &Grid) -> Vec<DyadicIndex> {
    let max_freq = grid.nyquist() * (grid.n as f64).sqrt();
    let mut out = Vec::new();
    let mut k = 1;
    loop {
        let big = DyadicIndex::from_log2(k);
        out.push(big);
        if big.value() >= max_freq {
            break;
        }
        k += 1;
    }
    out
}

/// Derive an independent seed from `seed` and a list of tags.
pub fn derive_seed(seed: u64, tags: &[u64]) -> u64 {
    fn splitmix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    tags.iter().fold(splitmix(seed), |acc, t| splitmix(acc ^ splitmix(*t)))
}

fn keyed_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Standard complex Gaussian keyed by `(seed, index)`.
pub fn keyed_gaussian(seed: u64, index: u64) -> Complex64 {
    let mut rng = keyed_rng(seed, index);
    let re: f64 = StandardNormal.sample(&mut rng);
    let im: f64 = StandardNormal.sample(&mut rng);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Uniform phase in `[0, 2 pi)` keyed by `(seed, index)`.
pub fn keyed_phase(seed: u64, index: u64) -> f64 {
    use rand::Rng;
    keyed_rng(seed, index).gen_range(0.0..std::f64::consts::TAU)
}

fn normalize(field: Field) -> Result<Field> {
    let norm = field.l2_norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(DlabError::InvalidSupport("support holds no lattice frequency".into()));
    }
    Ok(field.scale(Complex64::new(1.0 / norm, 0.0)))
}

/// Unit-L2 field with iid complex Gaussian coefficients on the lattice
/// points of `spec` and zero elsewhere.
pub fn band_random(grid: &Grid, spec: &SupportSpec, seed: u64) -> Result<Field> {
    spec.validate(grid)?;
    let raw = par::map_indexed(grid.len(), |i| {
        if spec.contains(grid.freq(i), grid.n) {
            keyed_gaussian(seed, i as u64)
        } else {
            Complex64::default()
        }
    });
    normalize(Field::from_raw_fft(*grid, raw))
}

/// Unit-L2 field whose spectrum is `weight(xi)` times the spectrum of
/// Gaussian-windowed white noise. The window `exp(-|x|^2 / (2 width^2))` keeps
/// the field spatially localized while the frequency support stays inside
/// `spec`.
pub fn localized_band_random(grid: &Grid, spec: &SupportSpec, width: f64, seed: u64) -> Result<Field> {
    spec.validate(grid)?;
    if !(width > 0.0) {
        return Err(DlabError::InvalidSupport(format!("window width must be positive, got {width}")));
    }
    let noise = Field::from_values(
        *grid,
        par::map_indexed(grid.len(), |i| {
            let x = grid.position(i);
            let r2: f64 = x[..grid.n].iter().map(|c| c * c).sum();
            keyed_gaussian(seed, i as u64) * (-0.5 * r2 / (width * width)).exp()
        }),
    )?;
    let mut raw = noise.raw_fft();
    let n = grid.n;
    for_each_freq_mut(grid, &mut raw, |xi, z| *z *= spec.weight(xi, n));
    normalize(Field::from_raw_fft(*grid, raw))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    fn noise(grid: Grid, seed: u64) -> Field {
        Field::from_values(grid, (0..grid.len()).map(|i| keyed_gaussian(seed, i as u64)).collect()).unwrap()
    }

    #[test]
    fn ramp_and_cutoff_shape() {
        assert_eq!(theta(0.0), 1.0);
        assert_eq!(theta(1.0), 1.0);
        assert_eq!(theta(2.0), 0.0);
        assert_eq!(theta(5.0), 0.0);
        assert!((theta(1.5) - 0.5).abs() < 1e-15);
        assert_eq!(chi(0.49), 0.0);
        assert_eq!(chi(2.01), 0.0);
        assert_eq!(chi(1.0), 1.0);
        let mut prev = 1.0;
        for i in 0..200 {
            let t = theta(i as f64 * 0.015);
            assert!(t <= prev);
            prev = t;
        }
    }

    #[test]
    fn telescoping_partition() {
        for r in [0.3, 1.0, 1.7, 3.3, 10.0, 100.5] {
            let sum: f64 = theta(r) + (1..12).map(|k| chi(r / (k as f64).exp2())).sum::<f64>();
            assert!((sum - 1.0).abs() < 1e-15, "{r}");
        }
    }

    #[test]
    fn partition_of_unity_on_fields() {
        let g = Grid::new(2, 2.0 * PI, 32).unwrap();
        let f = noise(g, 4);
        let mut sum = low_project(&f);
        for big in dyadic_range(&g) {
            sum = &sum + &lp_project(&f, big).field;
        }
        assert!(sum.relative_distance(&f) < 1e-12);
    }

    #[test]
    fn single_mode_support() {
        let g = Grid::new(2, 2.0 * PI, 64).unwrap();
        let e = Field::plane_wave(g, [8, 0, 0]);
        for k in 0..6 {
            let big = DyadicIndex::from_log2(k);
            let p = lp_project(&e, big).field;
            if !(4.0..=16.0).contains(&big.value()) {
                assert!(p.max_abs() < 1e-14, "N = {}", big.value());
            }
        }
        assert!(low_project(&e).max_abs() < 1e-14);
        let slow = Field::from_fn(g, |_| Complex64::new(1.0, 0.0));
        assert!(low_project(&slow).relative_distance(&slow) < 1e-14);
    }

    #[test]
    fn disjoint_annuli_annihilate() {
        let g = Grid::new(2, 2.0 * PI, 64).unwrap();
        let f = noise(g, 1);
        let a = lp_project(&f, DyadicIndex::from_log2(1)).field;
        let b = lp_project(&a, DyadicIndex::from_log2(3)).field;
        assert!(b.l2_norm() < 1e-14 * f.l2_norm());
    }

    #[test]
    fn almost_orthogonality_bounds() {
        let g = Grid::new(2, 2.0 * PI, 32).unwrap();
        let f = noise(g, 2);
        let total = f.mass();
        let pieces: f64 = dyadic_range(&g).into_iter().map(|b| lp_project(&f, b).field.mass()).sum::<f64>()
            + low_project(&f).mass();
        assert!(pieces <= total * (1.0 + 1e-12));
        assert!(pieces >= 0.5 * total);
    }

    #[test]
    fn outside_band_flag() {
        let g = Grid::new(1, 2.0 * PI, 16).unwrap();
        let f = noise(g, 3);
        let p = lp_project(&f, DyadicIndex::from_log2(6));
        assert!(p.outside_band);
        assert_eq!(p.field.max_abs(), 0.0);
        assert!(!lp_project(&f, DyadicIndex::from_log2(2)).outside_band);
    }

    #[test]
    fn support_text_round_trip() {
        for text in ["annulus:N=8", "ball:c=(1,0,0),r=0.25", "cap:rho=0.125,sign=+", "cap:rho=0.5,sign=-", "cube:a=1"] {
            let spec: SupportSpec = text.parse().unwrap();
            assert_eq!(spec.to_string(), text);
        }
        assert!("annulus:M=8".parse::<SupportSpec>().is_err());
        assert!("disk:r=1".parse::<SupportSpec>().is_err());
        let json = serde_json::to_string(&SupportSpec::Annulus { n: 4.0 }).unwrap();
        assert_eq!(json, "\"annulus:N=4\"");
    }

    #[test]
    fn dyadic_validation() {
        assert_eq!(DyadicIndex::new(0.25).unwrap().log2(), -2);
        assert!(DyadicIndex::new(3.0).is_err());
        assert!(DyadicIndex::new(-1.0).is_err());
    }

    #[test]
    fn band_random_contract() {
        let g = Grid::new(2, 8.0 * PI, 64).unwrap();
        let spec = SupportSpec::Annulus { n: 2.0 };
        let f = band_random(&g, &spec, 7).unwrap();
        assert!((f.l2_norm() - 1.0).abs() < 1e-12);
        let raw = f.raw_fft();
        for (i, z) in raw.iter().enumerate() {
            if !spec.contains(g.freq(i), 2) {
                assert!(z.norm() < 1e-12);
            }
        }
        assert_eq!(f, band_random(&g, &spec, 7).unwrap());
        assert_ne!(f, band_random(&g, &spec, 8).unwrap());
        let empty = SupportSpec::Ball { center: [0.1, 0.1, 0.0], radius: 0.01 };
        assert!(band_random(&g, &empty, 1).is_err());
        assert!(band_random(&g, &SupportSpec::Annulus { n: 64.0 }, 1).is_err());
    }

    #[test]
    fn localized_field_is_band_limited() {
        let g = Grid::new(2, 16.0 * PI, 128).unwrap();
        let spec = SupportSpec::Annulus { n: 2.0 };
        let f = localized_band_random(&g, &spec, 4.0, 3).unwrap();
        assert!((f.l2_norm() - 1.0).abs() < 1e-12);
        for (i, z) in f.raw_fft().iter().enumerate() {
            if !spec.contains(g.freq(i), 2) {
                assert!(z.norm() < 1e-12);
            }
        }
    }
}
