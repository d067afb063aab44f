//! Wave-packet decomposition at scale `lambda`: spatial cells of side
//! `lambda^{1/2}`, velocity cells of side `lambda^{-1/2}`.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{DlabError, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::par;
use crate::spectral::{apply_multiplier, free_propagate, norm_sq};

/// Smallest admissible scale.
pub const MIN_LAMBDA: f64 = 64.0;
/// Packets lighter than this fraction of the datum are dropped.
pub const DROP_FRACTION: f64 = 1e-12;

fn bump(u: f64) -> f64 {
    if u.abs() < 1.0 {
        (-1.0 / (1.0 - u * u)).exp()
    } else {
        0.0
    }
}

/// `eta^`: radial bump on `B(0,1)` with `eta^(0) = 1`.
pub fn eta_hat(xi: [f64; 3], n: usize) -> f64 {
    radial_bump(xi, n) / bump(0.0)
}

fn radial_bump(xi: [f64; 3], n: usize) -> f64 {
    let r2: f64 = (0..n).map(|a| xi[a] * xi[a]).sum();
    bump(r2.sqrt())
}

/// `psi`: radial bump on `B(0,1)` divided by its integer translates, so
/// that `sum_k psi(. - k) = 1`.
pub fn psi(xi: [f64; 3], n: usize) -> f64 {
    let own = radial_bump(xi, n);
    if own == 0.0 {
        return 0.0;
    }
    let base: Vec<i64> = (0..n).map(|a| xi[a].floor() as i64).collect();
    let mut total = 0.0;
    let mut idx = vec![-1i64; n];
    loop {
        let mut shifted = [0.0; 3];
        for a in 0..n {
            shifted[a] = xi[a] - (base[a] + idx[a]) as f64;
        }
        total += radial_bump(shifted, n);
        let mut a = 0;
        loop {
            if a == n {
                return own / total;
            }
            idx[a] += 1;
            if idx[a] <= 2 {
                break;
            }
            idx[a] = -1;
            a += 1;
        }
    }
}

/// Tube `{(x,t): |t| <= 4 lambda, |x - (y + 2tv)| <= lambda^{1/2}}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tube {
    pub y: [f64; 3],
    pub v: [f64; 3],
    pub lambda: f64,
}

impl Tube {
    pub fn radius(&self) -> f64 {
        self.lambda.sqrt()
    }

    /// Membership of `(x, t)` in the tube dilated by `dilation`, with
    /// periodic distance on `grid`.
    pub fn contains(&self, grid: &Grid, x: [f64; 3], t: f64, dilation: f64) -> bool {
        if t.abs() > 4.0 * self.lambda {
            return false;
        }
        let d2: f64 = (0..grid.n)
            .map(|a| grid.periodic_delta(x[a] - self.y[a] - 2.0 * t * self.v[a]).powi(2))
            .sum();
        d2.sqrt() <= dilation * self.radius()
    }
}

/// Lattice indicator of the dilated tube at each of `times`.
pub fn tube_mask(tube: &Tube, dilation: f64, grid: &Grid, times: &[f64]) -> Result<Vec<Vec<bool>>> {
    if !(dilation >= 1.0) {
        return Err(DlabError::InvalidSupport(format!("dilation {dilation} must be >= 1")));
    }
    Ok(times
        .iter()
        .map(|&t| par::map_indexed(grid.len(), |i| tube.contains(grid, grid.position(i), t, dilation)))
        .collect())
}

#[derive(Debug, Clone)]
pub struct Packet {
    pub tube: Tube,
    pub field: Field,
    pub norm: f64,
}

#[derive(Debug, Clone)]
pub struct PacketDecomposition {
    pub lambda: f64,
    pub grid: Grid,
    /// Retained packets in lexicographic `(y, v)` order.
    pub packets: Vec<Packet>,
    /// Dropped tubes with their norms.
    pub dropped: Vec<(Tube, f64)>,
}

/// Check that `grid` carries the cell lattices of scale `lambda`.
pub fn check_scale(grid: &Grid, lambda: f64) -> Result<()> {
    if grid.n > 2 {
        return Err(DlabError::Dimension { n: grid.n, reason: "packet decompositions use n <= 2".into() });
    }
    if !(lambda >= MIN_LAMBDA) {
        return Err(DlabError::Unresolvable(format!("lambda = {lambda} is below {MIN_LAMBDA}")));
    }
    let s = lambda.sqrt();
    let cells = grid.l / s;
    let per_cell = s / grid.dx();
    if (cells - cells.round()).abs() > 1e-9 || (per_cell - per_cell.round()).abs() > 1e-9 {
        return Err(DlabError::Unresolvable(format!(
            "box side {} and spacing {} must both divide lambda^(1/2) = {s} evenly",
            grid.l,
            grid.dx()
        )));
    }
    let band = 1.0 + 2.0 / s;
    if band > grid.nyquist() {
        return Err(DlabError::Unresolvable(format!(
            "packets reach |xi| = {band:.4} beyond the Nyquist frequency {:.4}",
            grid.nyquist()
        )));
    }
    Ok(())
}

fn cell_points(n: usize, lo: i64, hi: i64) -> Vec<[i64; 3]> {
    let mut out = Vec::new();
    let span = hi - lo + 1;
    let total = span.pow(n as u32);
    for flat in 0..total {
        let mut r = flat;
        let mut idx = [0i64; 3];
        for a in (0..n).rev() {
            idx[a] = lo + r % span;
            r /= span;
        }
        out.push(idx);
    }
    out
}

/// Spatial window `eta((x - y)/lambda^{1/2})` periodized over the box.
pub fn spatial_window(grid: &Grid, lambda: f64, y: [f64; 3]) -> Result<Field> {
    let s = lambda.sqrt();
    let n = grid.n;
    let spectrum = par::map_indexed(grid.len(), |i| {
        let xi = grid.freq(i);
        let scaled = [s * xi[0], s * xi[1], s * xi[2]];
        let phase: f64 = (0..n).map(|a| xi[a] * y[a]).sum();
        Complex64::from_polar(s.powi(n as i32) * eta_hat(scaled, n), -phase)
    });
    Field::from_spectrum(*grid, spectrum)
}

/// Decompose `f`, whose spectrum lies in `Q(1)`, into packets
/// `f_T = eta((x - y)/lambda^{1/2}) F^{-1}[f^ psi(lambda^{1/2}(. - v))]`.
pub fn packet_decompose(f: &Field, lambda: f64) -> Result<PacketDecomposition> {
    let grid = *f.grid();
    check_scale(&grid, lambda)?;
    let n = grid.n;
    let raw = f.raw_fft();
    let peak = par::max_map(&raw, |z| z.norm());
    let outside = (0..grid.len()).find(|&i| {
        let xi = grid.freq(i);
        (0..n).any(|a| xi[a].abs() > 1.0 + 1e-12) && raw[i].norm() > 1e-12 * peak
    });
    if let Some(i) = outside {
        return Err(DlabError::InvalidSupport(format!(
            "spectrum reaches {:?} outside Q(1)",
            &grid.freq(i)[..n]
        )));
    }
    let s = lambda.sqrt();
    let ny = (grid.l / s).round() as i64;
    let ys: Vec<[f64; 3]> = cell_points(n, 0, ny - 1)
        .into_iter()
        .map(|k| {
            let mut y = [0.0; 3];
            for a in 0..n {
                y[a] = grid.periodic_delta(k[a] as f64 * s);
            }
            y
        })
        .collect();
    let kv = s.ceil() as i64 + 1;
    let vs: Vec<[f64; 3]> = cell_points(n, -kv, kv)
        .into_iter()
        .map(|k| {
            let mut v = [0.0; 3];
            for a in 0..n {
                v[a] = k[a] as f64 / s;
            }
            v
        })
        .filter(|v| (0..n).all(|a| v[a].abs() <= 1.0 + 1.0 / s + 1e-12))
        .collect();
    let windows = par::map_slice(&ys, |y| spatial_window(&grid, lambda, *y)).into_iter().collect::<Result<Vec<_>>>()?;
    let pieces: Vec<Field> = par::map_slice(&vs, |v| {
        let v = *v;
        apply_multiplier(f, move |xi| {
            let u = [s * (xi[0] - v[0]), s * (xi[1] - v[1]), s * (xi[2] - v[2])];
            Complex64::new(psi(u, n), 0.0)
        })
    });
    let total = f.l2_norm();
    let mut order: Vec<(usize, usize)> = Vec::new();
    for iy in 0..ys.len() {
        for iv in 0..vs.len() {
            order.push((iy, iv));
        }
    }
    order.sort_by(|a, b| {
        let (ya, va) = (ys[a.0], vs[a.1]);
        let (yb, vb) = (ys[b.0], vs[b.1]);
        ya.partial_cmp(&yb).unwrap().then(va.partial_cmp(&vb).unwrap())
    });
    let built = par::map_slice(&order, |&(iy, iv)| {
        let field = windows[iy].pointwise_mul(&pieces[iv]).expect("same grid");
        let norm = field.l2_norm();
        (Tube { y: ys[iy], v: vs[iv], lambda }, field, norm)
    });
    let mut packets = Vec::new();
    let mut dropped = Vec::new();
    for (tube, field, norm) in built {
        if norm < DROP_FRACTION * total {
            dropped.push((tube, norm));
        } else {
            packets.push(Packet { tube, field, norm });
        }
    }
    Ok(PacketDecomposition { lambda, grid, packets, dropped })
}

/// Plain sum of the retained packets.
pub fn packet_reconstruct(d: &PacketDecomposition) -> Field {
    let mut sum = vec![Complex64::default(); d.grid.len()];
    for p in &d.packets {
        for (acc, z) in sum.iter_mut().zip(p.field.values()) {
            *acc += z;
        }
    }
    Field::from_values(d.grid, sum).expect("grid length")
}

impl PacketDecomposition {
    /// CSV inventory `y, v, norm, retained`.
    pub fn write_inventory<W: Write>(&self, w: W) -> Result<()> {
        let n = self.grid.n;
        let mut out = csv::Writer::from_writer(w);
        let mut header: Vec<String> = (1..=n).map(|a| format!("y{a}")).collect();
        header.extend((1..=n).map(|a| format!("v{a}")));
        header.push("norm".into());
        header.push("retained".into());
        out.write_record(&header)?;
        let rows = self
            .packets
            .iter()
            .map(|p| (p.tube, p.norm, true))
            .chain(self.dropped.iter().map(|(t, nm)| (*t, *nm, false)));
        for (tube, norm, kept) in rows {
            let mut row: Vec<String> = (0..n).map(|a| tube.y[a].to_string()).collect();
            row.extend((0..n).map(|a| tube.v[a].to_string()));
            row.push(norm.to_string());
            row.push(kept.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Space-time mass fraction of `e^{it Delta} f_T` outside the tube dilated
/// by `lambda^delta`, with equal weights on the samples `times`.
pub fn off_tube_mass(packet: &Packet, delta: f64, times: &[f64]) -> Result<f64> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(DlabError::InvalidExponent(format!("delta = {delta} must lie in (0, 1/2]")));
    }
    let grid = *packet.field.grid();
    let dilation = packet.tube.lambda.powf(delta);
    let mut inside = Vec::with_capacity(times.len());
    let mut all = Vec::with_capacity(times.len());
    for &t in times {
        let w = free_propagate(&packet.field, t);
        let vals = w.values();
        let out = par::pairwise_index_sum(vals.len(), |i| {
            if packet.tube.contains(&grid, grid.position(i), t, dilation) {
                0.0
            } else {
                vals[i].norm_sqr()
            }
        });
        inside.push(out);
        all.push(par::pairwise_map_sum(vals, |z| z.norm_sqr()));
    }
    let total = par::pairwise_sum(&all);
    if total == 0.0 {
        return Ok(0.0);
    }
    Ok((par::pairwise_sum(&inside) / total).clamp(0.0, 1.0))
}

/// Spectral mass of `f_T` outside the ball of radius `radius` about `v_T`,
/// relative to the packet mass.
pub fn spectral_leak(packet: &Packet, radius: f64) -> f64 {
    let grid = *packet.field.grid();
    let raw = packet.field.raw_fft();
    let v = packet.tube.v;
    let outside = par::pairwise_index_sum(raw.len(), |i| {
        let xi = grid.freq(i);
        let d = [xi[0] - v[0], xi[1] - v[1], xi[2] - v[2]];
        if norm_sq(d).sqrt() > radius {
            raw[i].norm_sqr()
        } else {
            0.0
        }
    });
    let total = par::pairwise_map_sum(&raw, |z| z.norm_sqr());
    if total == 0.0 {
        0.0
    } else {
        outside / total
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lp::{band_random, SupportSpec};

    fn grid_for(lambda: f64, cells: f64, m: usize) -> Grid {
        Grid::new(1, lambda.sqrt() * cells, m).unwrap()
    }

    #[test]
    fn frequency_partition_sums_to_one() {
        for i in 0..200 {
            let x = -3.0 + 0.0311 * i as f64;
            let sum: f64 = (-6..=6).map(|k| psi([x - k as f64, 0.0, 0.0], 1)).sum();
            assert!((sum - 1.0).abs() < 1e-14);
            let y = 0.73;
            let sum2: f64 = (-5..=5)
                .flat_map(|a| (-5..=5).map(move |b| (a, b)))
                .map(|(a, b)| psi([x - a as f64, y - b as f64, 0.0], 2))
                .sum();
            assert!((sum2 - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn spatial_windows_partition_unity() {
        let lambda = 64.0;
        let g = grid_for(lambda, 16.0, 256);
        let s = lambda.sqrt();
        let mut sum = Field::zeros(g);
        for k in 0..16 {
            let y = g.periodic_delta(k as f64 * s);
            sum = &sum + &spatial_window(&g, lambda, [y, 0.0, 0.0]).unwrap();
        }
        assert!(sum.values().iter().all(|z| (z - Complex64::new(1.0, 0.0)).norm() < 1e-12));
    }

    #[test]
    fn reconstruction_and_velocity_range() {
        let lambda = 64.0;
        let g = grid_for(lambda, 16.0, 256);
        let f = band_random(&g, &SupportSpec::Cube { half_side: 1.0 }, 3).unwrap();
        let d = packet_decompose(&f, lambda).unwrap();
        assert!(packet_reconstruct(&d).relative_distance(&f) < 1e-10);
        let s = lambda.sqrt();
        assert!(d.packets.iter().all(|p| p.tube.v[0].abs() <= 1.0 + 1.0 / s + 1e-12 && p.tube.v[0].abs() <= 2.0));
        let energy: f64 = d.packets.iter().map(|p| p.norm * p.norm).sum();
        assert!(energy <= 10.0 * f.mass());
        for p in d.packets.iter().step_by(37) {
            assert!(spectral_leak(p, 2.0 / s) < 1e-10);
        }
        let mut buf = Vec::new();
        d.write_inventory(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1 + d.packets.len() + d.dropped.len());
    }

    #[test]
    fn rejects_out_of_band_and_bad_scale() {
        let lambda = 64.0;
        let g = grid_for(lambda, 16.0, 256);
        let wide = band_random(&g, &SupportSpec::Cube { half_side: 1.5 }, 3).unwrap();
        assert!(matches!(packet_decompose(&wide, lambda), Err(DlabError::InvalidSupport(_))));
        let f = band_random(&g, &SupportSpec::Cube { half_side: 1.0 }, 3).unwrap();
        assert!(packet_decompose(&f, 16.0).is_err());
        assert!(packet_decompose(&f, 100.0).is_err());
    }

    #[test]
    fn empty_decomposition_is_zero() {
        let g = grid_for(64.0, 16.0, 256);
        let d = PacketDecomposition { lambda: 64.0, grid: g, packets: vec![], dropped: vec![] };
        assert_eq!(packet_reconstruct(&d).max_abs(), 0.0);
    }

    #[test]
    fn tube_geometry() {
        let g = grid_for(64.0, 16.0, 256);
        let tube = Tube { y: [8.0, 0.0, 0.0], v: [0.5, 0.0, 0.0], lambda: 64.0 };
        assert!(tube.contains(&g, [8.0, 0.0, 0.0], 0.0, 1.0));
        assert!(!tube.contains(&g, [8.0 + 2.0 * 8.0, 0.0, 0.0], 0.0, 1.0));
        assert!(!tube.contains(&g, [8.0, 0.0, 0.0], 4.0 * 64.0 + 1.0, 1.0));
        let times = [0.0, 8.0];
        let masks = tube_mask(&tube, 1.0, &g, &times).unwrap();
        let shift = (2.0 * 8.0 * 0.5 / g.dx()).round() as usize;
        for i in 0..g.len() {
            assert_eq!(masks[0][i], masks[1][(i + shift) % g.len()]);
        }
        assert!(tube_mask(&tube, 0.5, &g, &times).is_err());
    }

    #[test]
    fn off_tube_fraction_is_a_fraction() {
        let lambda = 64.0;
        let g = grid_for(lambda, 16.0, 256);
        let f = band_random(&g, &SupportSpec::Cube { half_side: 1.0 }, 5).unwrap();
        let d = packet_decompose(&f, lambda).unwrap();
        let p = d.packets.iter().max_by(|a, b| a.norm.partial_cmp(&b.norm).unwrap()).unwrap();
        let times: Vec<f64> = (0..9).map(|k| -4.0 * lambda + k as f64 * lambda).collect();
        let frac = off_tube_mass(p, 0.25, &times).unwrap();
        assert!((0.0..=1.0).contains(&frac));
        assert!(off_tube_mass(p, 0.0, &times).is_err());
    }
}
