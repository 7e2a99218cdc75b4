//! Square 2-D and plain 1-D complex FFTs on top of `rustfft`.
//!
//! The 2-D forward transform leaves the spectrum transposed: coefficient
//! `(k1, k2)` sits at `k2 * n + k1`. The inverse transform expects that
//! layout and restores `i * n + j` order, which saves two transposes per
//! operator application.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Clone)]
pub(crate) struct Fft2d {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft2d {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn scratch_len(&self) -> usize {
        self.fwd
            .get_inplace_scratch_len()
            .max(self.inv.get_inplace_scratch_len())
    }

    pub fn forward(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n * self.n);
        self.fwd.process_with_scratch(buf, scratch);
        transpose_square(buf, self.n);
        self.fwd.process_with_scratch(buf, scratch);
    }

    /// Unnormalized inverse; divide by `n²` to undo [`Fft2d::forward`].
    pub fn inverse(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        debug_assert_eq!(buf.len(), self.n * self.n);
        self.inv.process_with_scratch(buf, scratch);
        transpose_square(buf, self.n);
        self.inv.process_with_scratch(buf, scratch);
    }
}

#[derive(Clone)]
pub(crate) struct Fft1d {
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl Fft1d {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        }
    }

    pub fn forward(&self, buf: &mut [Complex64]) {
        self.fwd.process(buf);
    }

    pub fn inverse(&self, buf: &mut [Complex64]) {
        self.inv.process(buf);
    }
}

/// Signed frequency of DFT index `p` on an `n`-point grid.
pub(crate) fn signed_freq(p: usize, n: usize) -> i64 {
    if p < n.div_ceil(2) {
        p as i64
    } else {
        p as i64 - n as i64
    }
}

const BLOCK: usize = 32;

fn transpose_square(buf: &mut [Complex64], n: usize) {
    for bi in (0..n).step_by(BLOCK) {
        for bj in (bi..n).step_by(BLOCK) {
            for i in bi..(bi + BLOCK).min(n) {
                let start = if bi == bj { i + 1 } else { bj };
                for j in start..(bj + BLOCK).min(n) {
                    buf.swap(i * n + j, j * n + i);
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn forward_matches_direct_dft() {
        let n = 8;
        let field: Vec<Complex64> = (0..n * n)
            .map(|idx| Complex64::new((idx as f64 * 0.37).sin(), (idx as f64 * 0.11).cos()))
            .collect();
        let mut buf = field.clone();
        let fft = Fft2d::new(n);
        let mut scratch = vec![Complex64::default(); fft.scratch_len()];
        fft.forward(&mut buf, &mut scratch);
        for k1 in 0..n {
            for k2 in 0..n {
                let mut acc = Complex64::default();
                for i in 0..n {
                    for j in 0..n {
                        let phase = -2.0 * PI * ((k1 * i + k2 * j) as f64) / n as f64;
                        acc += field[i * n + j] * Complex64::from_polar(1.0, phase);
                    }
                }
                assert!((acc - buf[k2 * n + k1]).norm() < 1e-12);
            }
        }
        fft.inverse(&mut buf, &mut scratch);
        for (a, b) in buf.iter().zip(&field) {
            assert!((a / (n * n) as f64 - b).norm() < 1e-14);
        }
    }

    #[test]
    fn transpose_odd_blocks() {
        let n = 70;
        let mut buf: Vec<Complex64> = (0..n * n).map(|x| Complex64::new(x as f64, 0.0)).collect();
        transpose_square(&mut buf, n);
        for i in 0..n {
            for j in 0..n {
                assert_eq!(buf[i * n + j].re, (j * n + i) as f64);
            }
        }
    }

    #[test]
    fn signed_frequencies() {
        let f: Vec<i64> = (0..8).map(|p| signed_freq(p, 8)).collect();
        assert_eq!(f, vec![0, 1, 2, 3, -4, -3, -2, -1]);
    }
}
