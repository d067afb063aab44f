use std::io::{Read, Write};
use std::ops::{Add, Mul, Sub};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use num_complex::Complex64;

use crate::error::{DlabError, Result};
use crate::fft;
use crate::grid::Grid;
use crate::par;

pub const CONTAINER_MAGIC: &[u8; 4] = b"DLAB";
pub const CONTAINER_VERSION: u32 = 1;

/// Complex lattice function at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct Field {
    grid: Grid,
    values: Vec<Complex64>,
}

impl Field {
    pub fn zeros(grid: Grid) -> Self {
        Self { grid, values: vec![Complex64::default(); grid.len()] }
    }

    pub fn from_values(grid: Grid, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(DlabError::GridMismatch(format!(
                "{} values for a grid of {} points",
                values.len(),
                grid.len()
            )));
        }
        Ok(Self { grid, values })
    }

    /// Sample `f(x)` at every lattice point.
    pub fn from_fn<F>(grid: Grid, f: F) -> Self
    where
        F: Fn([f64; 3]) -> Complex64 + Send + Sync,
    {
        let values = par::map_indexed(grid.len(), |i| f(grid.position(i)));
        Self { grid, values }
    }

    /// `exp(i k . x)` for signed lattice indices `k`.
    pub fn plane_wave(grid: Grid, k: [i64; 3]) -> Self {
        let dk = grid.dk();
        Self::from_fn(grid, move |x| {
            let phase = (0..grid.n).map(|a| k[a] as f64 * dk * x[a]).sum::<f64>();
            Complex64::from_polar(1.0, phase)
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [Complex64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    /// Discrete `||f||_{L^r}` with Riemann weight `(L/M)^n`; `r = inf` is the
    /// lattice maximum.
    pub fn lp_norm(&self, r: f64) -> f64 {
        if r.is_infinite() {
            return par::max_map(&self.values, |z| z.norm());
        }
        let s = par::pairwise_map_sum(&self.values, |z| z.norm().powf(r));
        (s * self.grid.cell_volume()).powf(1.0 / r)
    }

    pub fn l2_norm(&self) -> f64 {
        self.mass().sqrt()
    }

    /// `||f||_{L^2}^2`.
    pub fn mass(&self) -> f64 {
        par::pairwise_map_sum(&self.values, |z| z.norm_sqr()) * self.grid.cell_volume()
    }

    pub fn max_abs(&self) -> f64 {
        par::max_map(&self.values, |z| z.norm())
    }

    pub fn scale(&self, c: Complex64) -> Field {
        self.map(|z| z * c)
    }

    pub fn conj(&self) -> Field {
        self.map(|z| z.conj())
    }

    pub fn map<F>(&self, f: F) -> Field
    where
        F: Fn(Complex64) -> Complex64 + Send + Sync,
    {
        Field { grid: self.grid, values: par::map_slice(&self.values, |z| f(*z)) }
    }

    /// Pointwise combination of two fields on the same grid.
    pub fn zip_with<F>(&self, other: &Field, f: F) -> Result<Field>
    where
        F: Fn(Complex64, Complex64) -> Complex64 + Send + Sync,
    {
        self.check_same_grid(other)?;
        let values = par::map_indexed(self.values.len(), |i| f(self.values[i], other.values[i]));
        Ok(Field { grid: self.grid, values })
    }

    /// Pointwise product with no dealiasing.
    pub fn pointwise_mul(&self, other: &Field) -> Result<Field> {
        self.zip_with(other, |a, b| a * b)
    }

    pub fn check_same_grid(&self, other: &Field) -> Result<()> {
        if self.grid != other.grid {
            return Err(DlabError::GridMismatch(format!("{:?} vs {:?}", self.grid, other.grid)));
        }
        Ok(())
    }

    /// Relative L2 distance `||self - other|| / ||other||`.
    pub fn relative_distance(&self, other: &Field) -> f64 {
        let diff = par::pairwise_index_sum(self.values.len(), |i| {
            (self.values[i] - other.values[i]).norm_sqr()
        });
        let base = par::pairwise_map_sum(&other.values, |z| z.norm_sqr());
        if base == 0.0 {
            diff.sqrt()
        } else {
            (diff / base).sqrt()
        }
    }

    /// Unnormalized DFT of the values, FFT order.
    pub fn raw_fft(&self) -> Vec<Complex64> {
        let mut buf = self.values.clone();
        fft::forward(&mut buf, self.grid.n, self.grid.m);
        buf
    }

    /// Inverse of [`Field::raw_fft`].
    pub fn from_raw_fft(grid: Grid, mut raw: Vec<Complex64>) -> Field {
        fft::inverse(&mut raw, grid.n, grid.m);
        let inv = 1.0 / grid.len() as f64;
        raw.iter_mut().for_each(|z| *z *= inv);
        Field { grid, values: raw }
    }

    /// Continuum-normalized transform `f^(xi) = int e^{-i x.xi} f dx`
    /// sampled on the frequency lattice (FFT order).
    pub fn spectrum(&self) -> Vec<Complex64> {
        let mut raw = self.raw_fft();
        let w = self.grid.cell_volume();
        let g = self.grid;
        par::for_each_chunk_mut(&mut raw, g.m, |row, chunk| {
            for (j, z) in chunk.iter_mut().enumerate() {
                *z *= w * centering_sign(&g, row * g.m + j);
            }
        });
        raw
    }

    /// Inverse of [`Field::spectrum`]: `f(x) = (2 pi)^{-n} int e^{i x.xi} f^ dxi`
    /// evaluated as a lattice sum.
    pub fn from_spectrum(grid: Grid, mut spec: Vec<Complex64>) -> Result<Field> {
        if spec.len() != grid.len() {
            return Err(DlabError::GridMismatch("spectrum length".into()));
        }
        let w = 1.0 / grid.cell_volume();
        par::for_each_chunk_mut(&mut spec, grid.m, |row, chunk| {
            for (j, z) in chunk.iter_mut().enumerate() {
                *z *= w * centering_sign(&grid, row * grid.m + j);
            }
        });
        Ok(Self::from_raw_fft(grid, spec))
    }

    /// Serialize into the binary container (little-endian).
    pub fn write_container<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(CONTAINER_MAGIC)?;
        w.write_u32::<LittleEndian>(CONTAINER_VERSION)?;
        w.write_u32::<LittleEndian>(self.grid.n as u32)?;
        w.write_f64::<LittleEndian>(self.grid.l)?;
        w.write_u32::<LittleEndian>(self.grid.m as u32)?;
        for z in &self.values {
            w.write_f64::<LittleEndian>(z.re)?;
            w.write_f64::<LittleEndian>(z.im)?;
        }
        Ok(())
    }

    pub fn read_container<R: Read>(mut r: R) -> Result<Field> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CONTAINER_MAGIC {
            return Err(DlabError::Format(format!("bad magic {magic:?}")));
        }
        let version = r.read_u32::<LittleEndian>()?;
        if version != CONTAINER_VERSION {
            return Err(DlabError::Format(format!("unsupported version {version}")));
        }
        let n = r.read_u32::<LittleEndian>()? as usize;
        let l = r.read_f64::<LittleEndian>()?;
        let m = r.read_u32::<LittleEndian>()? as usize;
        let grid = Grid::new(n, l, m)?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            let re = r.read_f64::<LittleEndian>()?;
            let im = r.read_f64::<LittleEndian>()?;
            values.push(Complex64::new(re, im));
        }
        Ok(Field { grid, values })
    }
}

// exp(-i xi . x_0) with x_0 = (-L/2, ...) is (-1)^(k_1 + ... + k_n).
fn centering_sign(grid: &Grid, flat: usize) -> f64 {
    let k = grid.freq_index(flat);
    if (k[0] + k[1] + k[2]).rem_euclid(2) == 0 {
        1.0
    } else {
        -1.0
    }
}

impl Add for &Field {
    type Output = Field;
    fn add(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a + b).expect("adding fields on different grids")
    }
}

impl Sub for &Field {
    type Output = Field;
    fn sub(self, rhs: &Field) -> Field {
        self.zip_with(rhs, |a, b| a - b).expect("subtracting fields on different grids")
    }
}

impl Mul<f64> for &Field {
    type Output = Field;
    fn mul(self, rhs: f64) -> Field {
        self.map(|z| z * rhs)
    }
}

/// Uniformly sampled trajectory `t_k = k dt`, `k = 0..K`.
#[derive(Debug, Clone)]
pub struct SpacetimeField {
    grid: Grid,
    dt: f64,
    frames: Vec<Field>,
}

impl SpacetimeField {
    pub fn new(dt: f64, frames: Vec<Field>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| DlabError::InvalidTimes("trajectory needs at least one frame".into()))?;
        let grid = *first.grid();
        if frames.iter().any(|f| *f.grid() != grid) {
            return Err(DlabError::GridMismatch("frames on different grids".into()));
        }
        if frames.len() > 1 && !(dt.is_finite() && dt > 0.0) {
            return Err(DlabError::InvalidTimes(format!("time step {dt} must be positive")));
        }
        Ok(Self { grid, dt, frames })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn frames(&self) -> &[Field] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        (0..self.frames.len()).map(|k| k as f64 * self.dt).collect()
    }

    pub fn final_time(&self) -> f64 {
        (self.frames.len().saturating_sub(1)) as f64 * self.dt
    }

    pub fn map_frames<F>(&self, f: F) -> SpacetimeField
    where
        F: Fn(&Field) -> Field + Send + Sync,
    {
        SpacetimeField { grid: self.grid, dt: self.dt, frames: par::map_slice(&self.frames, f) }
    }
}

/// Validate a sample list as `0 = t_0 < t_1 < ...` with uniform step and
/// return the step (0 for a single sample).
pub fn uniform_step(times: &[f64]) -> Result<f64> {
    match times {
        [] => Err(DlabError::InvalidTimes("empty time list".into())),
        [t0] if *t0 == 0.0 => Ok(0.0),
        [t0, t1, ..] if *t0 == 0.0 && *t1 > 0.0 => {
            let dt = t1 - t0;
            for (k, t) in times.iter().enumerate() {
                let expected = k as f64 * dt;
                if (t - expected).abs() > 1e-9 * (1.0 + expected.abs()) {
                    return Err(DlabError::InvalidTimes(format!(
                        "sample {k} at {t} breaks the uniform step {dt}"
                    )));
                }
            }
            Ok(dt)
        }
        _ => Err(DlabError::InvalidTimes("times must start at 0 and increase".into())),
    }
}

/// `count` uniform samples on `[0, t_final]`.
pub fn uniform_times(t_final: f64, count: usize) -> Vec<f64> {
    if count <= 1 {
        return vec![0.0];
    }
    let dt = t_final / (count - 1) as f64;
    (0..count).map(|k| k as f64 * dt).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn spectrum_round_trip_and_parseval() {
        let g = Grid::new(2, 7.0, 16).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new((x[0] * 1.3).sin() + x[1], (x[1] * 0.4).cos()));
        let spec = f.spectrum();
        let back = Field::from_spectrum(g, spec.clone()).unwrap();
        assert!(back.relative_distance(&f) < 1e-14);
        let spectral_mass: f64 = spec.iter().map(|z| z.norm_sqr()).sum::<f64>() / g.box_volume();
        assert!((spectral_mass - f.mass()).abs() < 1e-12 * f.mass());
    }

    #[test]
    fn spectrum_of_gaussian_matches_continuum_transform() {
        // int exp(-x^2/2) exp(-i x xi) dx = sqrt(2 pi) exp(-xi^2/2)
        let g = Grid::new(1, 40.0, 256).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new((-0.5 * x[0] * x[0]).exp(), 0.0));
        let spec = f.spectrum();
        for (i, z) in spec.iter().enumerate() {
            let xi = g.freq(i)[0];
            let exact = (2.0 * PI).sqrt() * (-0.5 * xi * xi).exp();
            assert!((z - Complex64::new(exact, 0.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn container_round_trip() {
        let g = Grid::new(2, 3.5, 4).unwrap();
        let f = Field::from_fn(g, |x| Complex64::new(x[0], -x[1]));
        let mut buf = Vec::new();
        f.write_container(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"DLAB");
        assert_eq!(buf.len(), 4 + 4 + 4 + 8 + 4 + 16 * 16);
        let back = Field::read_container(buf.as_slice()).unwrap();
        assert_eq!(back, f);
        buf[0] = b'X';
        assert!(Field::read_container(buf.as_slice()).is_err());
    }

    #[test]
    fn uniform_step_validation() {
        assert_eq!(uniform_step(&[0.0]).unwrap(), 0.0);
        assert!((uniform_step(&[0.0, 0.5, 1.0]).unwrap() - 0.5).abs() < 1e-15);
        assert!(uniform_step(&[0.0, 0.5, 1.2]).is_err());
        assert!(uniform_step(&[0.1, 0.5]).is_err());
    }
}
