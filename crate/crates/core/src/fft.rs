//! Unnormalized n-dimensional complex FFT on cubic row-major arrays.

use std::collections::HashMap;
use std::sync::{Arc, LazyLock, Mutex};

use num_complex::Complex64;
use rustfft::{Fft, FftDirection, FftPlanner};

use crate::par;

type Plan = Arc<dyn Fft<f64>>;

static PLANS: LazyLock<Mutex<HashMap<(usize, bool), Plan>>> = LazyLock::new(|| Mutex::new(HashMap::new()));

fn plan(len: usize, direction: FftDirection) -> Plan {
    let forward = direction == FftDirection::Forward;
    let mut cache = PLANS.lock().expect("fft plan cache poisoned");
    cache
        .entry((len, forward))
        .or_insert_with(|| FftPlanner::new().plan_fft(len, direction))
        .clone()
}

/// In-place transform of an `m`-per-axis, `n`-dimensional array.
///
/// Forward computes `sum_j a_j exp(-2 pi i j k / m)` along each axis; the
/// inverse uses `+i` and does not divide by `m^n`.
pub fn transform(data: &mut [Complex64], n: usize, m: usize, direction: FftDirection) {
    debug_assert_eq!(data.len(), m.pow(n as u32));
    let fft = plan(m, direction);
    for axis in 0..n {
        let stride = m.pow((n - 1 - axis) as u32);
        if stride == 1 {
            let lines_per_chunk = (4096 / m).max(1);
            par::for_each_chunk_mut(data, m * lines_per_chunk, |_, chunk| {
                let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
                fft.process_with_scratch(chunk, &mut scratch);
            });
        } else {
            transform_strided(data, m, stride, &fft);
        }
    }
}

// Each block of `m * stride` values holds `stride` interleaved lines; they
// are transposed into contiguous rows, transformed, and written back.
fn transform_strided(data: &mut [Complex64], m: usize, stride: usize, fft: &Plan) {
    let block = m * stride;
    let n_blocks = data.len() / block;
    let per_block = |blk: &mut [Complex64]| {
        let mut rows = vec![Complex64::default(); block];
        for j in 0..m {
            let src = &blk[j * stride..(j + 1) * stride];
            for (inner, v) in src.iter().enumerate() {
                rows[inner * m + j] = *v;
            }
        }
        let lines_per_chunk = (4096 / m).max(1);
        par::for_each_chunk_mut(&mut rows, m * lines_per_chunk, |_, chunk| {
            let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
            fft.process_with_scratch(chunk, &mut scratch);
        });
        for j in 0..m {
            let dst = &mut blk[j * stride..(j + 1) * stride];
            for (inner, v) in dst.iter_mut().enumerate() {
                *v = rows[inner * m + j];
            }
        }
    };
    if n_blocks == 1 {
        per_block(data);
    } else {
        par::for_each_chunk_mut(data, block, |_, blk| per_block(blk));
    }
}

pub fn forward(data: &mut [Complex64], n: usize, m: usize) {
    transform(data, n, m, FftDirection::Forward);
}

pub fn inverse(data: &mut [Complex64], n: usize, m: usize) {
    transform(data, n, m, FftDirection::Inverse);
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(data: &[Complex64], n: usize, m: usize) -> Vec<Complex64> {
        let total = m.pow(n as u32);
        let idx = |flat: usize| -> Vec<usize> {
            let mut v = vec![0; n];
            let mut r = flat;
            for a in (0..n).rev() {
                v[a] = r % m;
                r /= m;
            }
            v
        };
        (0..total)
            .map(|k| {
                let kv = idx(k);
                let mut acc = Complex64::default();
                for (j, a) in data.iter().enumerate() {
                    let jv = idx(j);
                    let phase: f64 = kv.iter().zip(&jv).map(|(x, y)| (x * y) as f64).sum();
                    acc += a * Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * phase / m as f64);
                }
                acc
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_in_three_dimensions() {
        let (n, m) = (3, 4);
        let data: Vec<Complex64> = (0..64)
            .map(|i| Complex64::new((i as f64 * 0.7).sin(), (i as f64 * 1.3).cos()))
            .collect();
        let mut fast = data.clone();
        forward(&mut fast, n, m);
        let slow = naive_dft(&data, n, m);
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn inverse_undoes_forward_up_to_scale() {
        let (n, m) = (2, 8);
        let data: Vec<Complex64> = (0..64).map(|i| Complex64::new(i as f64, -(i as f64) / 3.0)).collect();
        let mut buf = data.clone();
        forward(&mut buf, n, m);
        inverse(&mut buf, n, m);
        for (a, b) in buf.iter().zip(&data) {
            assert!((a / 64.0 - b).norm() < 1e-12);
        }
    }
}
