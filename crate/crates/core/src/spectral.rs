//! Fourier multipliers, the free Schrödinger group and dealiased products.

use num_complex::Complex64;

use crate::error::{DlabError, Result};
use crate::fft;
use crate::field::{uniform_step, Field, SpacetimeField};
use crate::grid::Grid;
use crate::par;

/// Apply `f(xi, z)` to every coefficient of a raw FFT-order spectrum.
pub fn for_each_freq_mut<F>(grid: &Grid, data: &mut [Complex64], f: F)
where
    F: Fn([f64; 3], &mut Complex64) + Send + Sync,
{
    let axis = grid.axis_freqs();
    let m = grid.m;
    let n = grid.n;
    par::for_each_chunk_mut(data, m, |row, chunk| {
        let mut xi = [0.0; 3];
        let mut r = row;
        for a in (0..n - 1).rev() {
            xi[a] = axis[r % m];
            r /= m;
        }
        for (j, z) in chunk.iter_mut().enumerate() {
            xi[n - 1] = axis[j];
            f(xi, z);
        }
    });
}

pub fn norm_sq(xi: [f64; 3]) -> f64 {
    xi[0] * xi[0] + xi[1] * xi[1] + xi[2] * xi[2]
}

/// Apply a complex multiplier without validation.
pub fn apply_multiplier<S>(f: &Field, symbol: S) -> Field
where
    S: Fn([f64; 3]) -> Complex64 + Send + Sync,
{
    let grid = *f.grid();
    let mut raw = f.raw_fft();
    for_each_freq_mut(&grid, &mut raw, |xi, z| *z *= symbol(xi));
    Field::from_raw_fft(grid, raw)
}

/// `F^{-1}(sigma(xi) F f)` for a real symbol; rejects non-finite values.
pub fn apply_symbol<S>(f: &Field, symbol: S) -> Result<Field>
where
    S: Fn([f64; 3]) -> f64 + Send + Sync,
{
    let grid = *f.grid();
    let bad = par::map_indexed(grid.len(), |i| {
        let xi = grid.freq(i);
        (!symbol(xi).is_finite()).then_some(xi)
    })
    .into_iter()
    .flatten()
    .next();
    if let Some(xi) = bad {
        return Err(DlabError::NonFiniteSymbol { xi });
    }
    Ok(apply_multiplier(f, |xi| Complex64::new(symbol(xi), 0.0)))
}

/// `e^{it Delta} f`, symbol `exp(-i t |xi|^2)`.
pub fn free_propagate(f: &Field, t: f64) -> Field {
    if t == 0.0 {
        return f.clone();
    }
    apply_multiplier(f, |xi| Complex64::from_polar(1.0, -t * norm_sq(xi)))
}

/// `e^{-i x.b} e^{it Delta} (e^{i x.b} f)`: free evolution of `f` boosted to
/// mean frequency `b`, returned in the co-moving spectral frame. For
/// lattice `b` this is demodulated [`free_propagate`]; for any `b` the
/// modulus equals that of the lab-frame evolution.
pub fn free_propagate_boosted(f: &Field, t: f64, boost: [f64; 3]) -> Field {
    apply_multiplier(f, |xi| {
        let s = [xi[0] + boost[0], xi[1] + boost[1], xi[2] + boost[2]];
        Complex64::from_polar(1.0, -t * norm_sq(s))
    })
}

/// Frames `e^{i t_k Delta} f` for uniform `times` starting at 0.
pub fn propagate_trajectory(f: &Field, times: &[f64]) -> Result<SpacetimeField> {
    let dt = uniform_step(times)?;
    let spec = f.raw_fft();
    let grid = *f.grid();
    let frames = times
        .iter()
        .map(|&t| {
            let mut raw = spec.clone();
            for_each_freq_mut(&grid, &mut raw, |xi, z| *z *= Complex64::from_polar(1.0, -t * norm_sq(xi)));
            Field::from_raw_fft(grid, raw)
        })
        .collect();
    SpacetimeField::new(dt, frames)
}

/// Symbol `|xi|^{2-n}` with the zero mode removed.
pub fn riesz_symbol(n: usize) -> impl Fn([f64; 3]) -> f64 + Send + Sync + Copy {
    move |xi| {
        let k = norm_sq(xi).sqrt();
        if k == 0.0 {
            0.0
        } else {
            k.powi(2 - n as i32)
        }
    }
}

/// `|nabla|^{2-n} f`, i.e. convolution with `c_n |x|^{-2}`; `n >= 3`.
pub fn riesz_potential(f: &Field) -> Result<Field> {
    let n = f.grid().n;
    if n < 3 {
        return Err(DlabError::Dimension { n, reason: "the Riesz potential needs n >= 3".into() });
    }
    let sym = riesz_symbol(n);
    Ok(apply_multiplier(f, move |xi| Complex64::new(sym(xi), 0.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SobolevKind {
    Homogeneous,
    Inhomogeneous,
}

/// `|xi|^s` or `<xi>^s`; the homogeneous symbol vanishes at 0 for `s != 0`.
pub fn power_symbol(s: f64, kind: SobolevKind) -> impl Fn([f64; 3]) -> f64 + Send + Sync + Copy {
    move |xi| {
        let k2 = norm_sq(xi);
        match kind {
            SobolevKind::Inhomogeneous => (1.0 + k2).powf(0.5 * s),
            SobolevKind::Homogeneous if s == 0.0 => 1.0,
            SobolevKind::Homogeneous if k2 == 0.0 => 0.0,
            SobolevKind::Homogeneous => k2.powf(0.5 * s),
        }
    }
}

/// `|nabla|^s f` or `<nabla>^s f`.
pub fn fractional_power(f: &Field, s: f64, kind: SobolevKind) -> Field {
    let sym = power_symbol(s, kind);
    apply_multiplier(f, move |xi| Complex64::new(sym(xi), 0.0))
}

/// Spectral gradient `(d_1 f, ..., d_n f)`.
pub fn gradient(f: &Field) -> Vec<Field> {
    let raw = f.raw_fft();
    gradient_from_raw(f.grid(), &raw)
}

pub(crate) fn gradient_from_raw(grid: &Grid, raw: &[Complex64]) -> Vec<Field> {
    (0..grid.n)
        .map(|a| {
            let mut d = raw.to_vec();
            for_each_freq_mut(grid, &mut d, |xi, z| *z *= Complex64::new(0.0, xi[a]));
            Field::from_raw_fft(*grid, d)
        })
        .collect()
}

/// Largest `|k|` (signed index, any axis) carrying a coefficient above
/// `rel_tol` times the largest coefficient.
pub fn spectral_extent(grid: &Grid, raw: &[Complex64], rel_tol: f64) -> i64 {
    let peak = par::max_map(raw, |z| z.norm());
    if peak == 0.0 {
        return 0;
    }
    let cut = peak * rel_tol;
    let ext = par::map_indexed(raw.len(), |i| {
        if raw[i].norm() > cut {
            let k = grid.freq_index(i);
            k[0].abs().max(k[1].abs()).max(k[2].abs())
        } else {
            0
        }
    });
    ext.into_iter().max().unwrap_or(0)
}

// Coefficients below this fraction of the peak are treated as absent when
// deciding whether a product can be formed without padding.
const NEGLIGIBLE: f64 = 1e-15;

/// Side of the padded grid used for quadratic products (3/2 rule).
pub fn padded_points(m: usize) -> usize {
    (3 * m).div_ceil(2).max(m + 1)
}

fn embed(grid: &Grid, raw: &[Complex64], p: usize) -> Vec<Complex64> {
    let n = grid.n;
    let mut out = vec![Complex64::default(); p.pow(n as u32)];
    for (i, z) in raw.iter().enumerate() {
        if *z == Complex64::default() {
            continue;
        }
        let k = grid.freq_index(i);
        let mut flat = 0usize;
        for &ka in k.iter().take(n) {
            flat = flat * p + ka.rem_euclid(p as i64) as usize;
        }
        out[flat] = *z;
    }
    out
}

fn extract(grid: &Grid, padded: &[Complex64], p: usize) -> Vec<Complex64> {
    let n = grid.n;
    let nyquist = -((grid.m / 2) as i64);
    par::map_indexed(grid.len(), |i| {
        let k = grid.freq_index(i);
        // the unpaired Nyquist slot would break conjugate symmetry
        if k.iter().take(n).any(|&ka| ka == nyquist) {
            return Complex64::default();
        }
        let mut flat = 0usize;
        for &ka in k.iter().take(n) {
            flat = flat * p + ka.rem_euclid(p as i64) as usize;
        }
        padded[flat]
    })
}

/// Raw spectrum (FFT order, unnormalized DFT convention) of the product
/// `a b` truncated to the grid's band with no aliasing. Values and raw
/// spectra of both factors are supplied by the caller.
pub fn product_raw(
    grid: &Grid,
    a: &[Complex64],
    a_raw: &[Complex64],
    b: &[Complex64],
    b_raw: &[Complex64],
) -> Vec<Complex64> {
    let quarter = (grid.m / 4) as i64;
    let fits = spectral_extent(grid, a_raw, NEGLIGIBLE) < quarter
        && spectral_extent(grid, b_raw, NEGLIGIBLE) < quarter;
    if fits {
        let mut prod = par::map_indexed(a.len(), |i| a[i] * b[i]);
        fft::forward(&mut prod, grid.n, grid.m);
        return prod;
    }
    let n = grid.n;
    let p = padded_points(grid.m);
    let inv_m = 1.0 / grid.len() as f64;
    let mut pa = embed(grid, a_raw, p);
    let mut pb = embed(grid, b_raw, p);
    fft::inverse(&mut pa, n, p);
    fft::inverse(&mut pb, n, p);
    let mut pc = par::map_indexed(pa.len(), |i| pa[i] * pb[i] * inv_m * inv_m);
    fft::forward(&mut pc, n, p);
    let mut out = extract(grid, &pc, p);
    let scale = (grid.m as f64 / p as f64).powi(n as i32);
    out.iter_mut().for_each(|z| *z *= scale);
    out
}

/// Alias-free product `a b` on the grid of `a`.
pub fn dealiased_product(a: &Field, b: &Field) -> Result<Field> {
    a.check_same_grid(b)?;
    let grid = *a.grid();
    let raw = product_raw(&grid, a.values(), &a.raw_fft(), b.values(), &b.raw_fft());
    Ok(Field::from_raw_fft(grid, raw))
}

/// Raw spectrum of the alias-free `|u|^2`.
pub fn modulus_squared_raw(u: &Field, u_raw: &[Complex64]) -> Vec<Complex64> {
    let grid = *u.grid();
    let conj_vals: Vec<Complex64> = par::map_slice(u.values(), |z| z.conj());
    let conj_raw = conjugate_spectrum(&grid, u_raw);
    product_raw(&grid, u.values(), u_raw, &conj_vals, &conj_raw)
}

/// Raw spectrum of `conj(u)` from that of `u`: `conj(U(-k))`.
pub fn conjugate_spectrum(grid: &Grid, raw: &[Complex64]) -> Vec<Complex64> {
    par::map_indexed(raw.len(), |i| {
        let mi = grid.multi_index(i);
        let mut neg = [0usize; 3];
        for a in 0..grid.n {
            neg[a] = (grid.m - mi[a]) % grid.m;
        }
        raw[grid.flat_index(&neg[..grid.n])].conj()
    })
}

/// Spectral interpolation (or truncation) onto a grid with the same box.
pub fn resample(f: &Field, target: Grid) -> Result<Field> {
    let src = *f.grid();
    if src.n != target.n || (src.l - target.l).abs() > 1e-12 * src.l {
        return Err(DlabError::GridMismatch("resampling needs the same box and dimension".into()));
    }
    Ok(Field::from_raw_fft(target, resample_raw(&src, &f.raw_fft(), &target)))
}

/// Raw-spectrum form of [`resample`]; the grids must share `n` and `L`.
pub fn resample_raw(src: &Grid, raw: &[Complex64], target: &Grid) -> Vec<Complex64> {
    let half = (target.m / 2) as i64;
    let scale = (target.m as f64 / src.m as f64).powi(src.n as i32);
    let mut out = vec![Complex64::default(); target.len()];
    for (i, z) in raw.iter().enumerate() {
        let k = src.freq_index(i);
        if k.iter().take(src.n).any(|&ka| ka < -half || ka >= half) {
            continue;
        }
        let mut flat = 0usize;
        for &ka in k.iter().take(src.n) {
            flat = flat * target.m + target.slot(ka);
        }
        out[flat] = z * scale;
    }
    out
}
