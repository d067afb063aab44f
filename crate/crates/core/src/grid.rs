use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{DlabError, Result};

/// Fraction of the Nyquist radius treated as resolvable.
pub const RESOLVABLE_FRACTION: f64 = 0.9;

/// Periodic lattice `[-L/2, L/2)^n` with `M` points per axis.
///
/// Point `j` on an axis sits at `-L/2 + j L/M`; frequency index `k` (FFT
/// order) maps to `2 pi k / L` with `k` folded into `[-M/2, M/2)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub n: usize,
    #[serde(rename = "L")]
    pub l: f64,
    #[serde(rename = "M")]
    pub m: usize,
}

impl Grid {
    pub fn new(n: usize, l: f64, m: usize) -> Result<Self> {
        if !(1..=3).contains(&n) {
            return Err(DlabError::InvalidGrid(format!("dimension {n} outside 1..=3")));
        }
        if !(l.is_finite() && l > 0.0) {
            return Err(DlabError::InvalidGrid(format!("box side {l} must be positive")));
        }
        if m < 2 || !m.is_power_of_two() {
            return Err(DlabError::InvalidGrid(format!("M = {m} must be a power of two >= 2")));
        }
        Ok(Self { n, l, m })
    }

    /// Re-check invariants, for grids that arrived through deserialization.
    pub fn validated(self) -> Result<Self> {
        Self::new(self.n, self.l, self.m)
    }

    pub fn len(&self) -> usize {
        self.m.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.l / self.m as f64
    }

    pub fn cell_volume(&self) -> f64 {
        self.dx().powi(self.n as i32)
    }

    pub fn box_volume(&self) -> f64 {
        self.l.powi(self.n as i32)
    }

    /// Frequency lattice spacing `2 pi / L`.
    pub fn dk(&self) -> f64 {
        2.0 * PI / self.l
    }

    /// Nyquist radius `pi M / L`.
    pub fn nyquist(&self) -> f64 {
        PI * self.m as f64 / self.l
    }

    /// Largest `|xi|` considered resolvable by test-field constructors.
    pub fn resolvable_radius(&self) -> f64 {
        RESOLVABLE_FRACTION * self.nyquist()
    }

    pub fn signed_index(&self, i: usize) -> i64 {
        let m = self.m as i64;
        let i = i as i64;
        if i < m / 2 {
            i
        } else {
            i - m
        }
    }

    /// FFT-order slot holding signed index `k`.
    pub fn slot(&self, k: i64) -> usize {
        k.rem_euclid(self.m as i64) as usize
    }

    pub fn multi_index(&self, flat: usize) -> [usize; 3] {
        let mut out = [0; 3];
        let mut r = flat;
        for a in (0..self.n).rev() {
            out[a] = r % self.m;
            r /= self.m;
        }
        out
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().take(self.n).fold(0, |acc, &i| acc * self.m + i)
    }

    /// Signed frequency indices of a flat FFT-order slot (unused axes are 0).
    pub fn freq_index(&self, flat: usize) -> [i64; 3] {
        let mi = self.multi_index(flat);
        let mut out = [0; 3];
        for a in 0..self.n {
            out[a] = self.signed_index(mi[a]);
        }
        out
    }

    pub fn freq(&self, flat: usize) -> [f64; 3] {
        let k = self.freq_index(flat);
        let dk = self.dk();
        [k[0] as f64 * dk, k[1] as f64 * dk, k[2] as f64 * dk]
    }

    pub fn position(&self, flat: usize) -> [f64; 3] {
        let mi = self.multi_index(flat);
        let dx = self.dx();
        let mut out = [0.0; 3];
        for a in 0..self.n {
            out[a] = -0.5 * self.l + mi[a] as f64 * dx;
        }
        out
    }

    /// Axis frequencies in FFT order.
    pub fn axis_freqs(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.signed_index(i) as f64 * self.dk()).collect()
    }

    /// Minimal-image displacement on one axis.
    pub fn periodic_delta(&self, d: f64) -> f64 {
        d - self.l * (d / self.l).round()
    }

    /// Same box, `m` points per axis.
    pub fn with_points(&self, m: usize) -> Result<Grid> {
        Grid::new(self.n, self.l, m)
    }
}

/// Outcome of the wrap-around rule `L >= 2 (w + 2 k_max T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WrapCheck {
    pub required_l: f64,
    pub actual_l: f64,
    pub safe: bool,
}

/// Check that waves of speed up to `2 max_freq` launched from a region of
/// width `support_width` stay clear of their periodic images up to time `t`.
pub fn wrap_check(grid: &Grid, support_width: f64, max_freq: f64, t: f64) -> WrapCheck {
    let required_l = 2.0 * (support_width + 2.0 * max_freq * t.abs());
    WrapCheck {
        required_l,
        actual_l: grid.l,
        safe: grid.l >= required_l * (1.0 - 1e-12),
    }
}

/// Longest time for which [`wrap_check`] passes; zero if the support alone
/// is too wide.
pub fn wrap_safe_horizon(grid: &Grid, support_width: f64, max_freq: f64) -> f64 {
    ((0.5 * grid.l - support_width) / (2.0 * max_freq)).max(0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_parameters() {
        assert!(Grid::new(4, 1.0, 8).is_err());
        assert!(Grid::new(2, -1.0, 8).is_err());
        assert!(Grid::new(2, 1.0, 12).is_err());
    }

    #[test]
    fn lattice_is_symmetric_up_to_nyquist() {
        let g = Grid::new(1, 2.0 * PI, 8).unwrap();
        let f = g.axis_freqs();
        assert_eq!(f, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
        assert_eq!(g.len(), 8);
        assert_eq!(Grid::new(3, 1.0, 8).unwrap().len(), 512);
    }

    #[test]
    fn index_round_trip() {
        let g = Grid::new(3, 1.0, 8).unwrap();
        for flat in [0, 7, 63, 200, 511] {
            assert_eq!(g.flat_index(&g.multi_index(flat)), flat);
        }
        assert_eq!(g.slot(-1), 7);
        assert_eq!(g.position(0)[0], -0.5);
    }

    #[test]
    fn horizon_is_consistent_with_check() {
        let g = Grid::new(2, 40.0, 64).unwrap();
        let t = wrap_safe_horizon(&g, 5.0, 4.0);
        assert!(wrap_check(&g, 5.0, 4.0, t).safe);
        assert!(!wrap_check(&g, 5.0, 4.0, t * 1.01).safe);
    }
}
