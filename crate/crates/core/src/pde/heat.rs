//! Exact time integration of the second-order finite-difference heat
//! equation along one axis.
//!
//! For `u_t = κ D u` with `D` the 3-point Laplacian, `exp(τκD)` is applied in
//! Fourier space: periodic grids use a plain DFT of length `n`, Dirichlet
//! grids use the odd extension of length `2(n + 1)`. The operator is
//! entrywise nonnegative and sup-norm nonincreasing for every `τ`, so the
//! diffusion stage preserves `[0, 1]` without any step restriction.
//!
//! Real lines are processed two at a time packed into one complex vector:
//! the multiplier is real and even in the wavenumber, so it maps the real
//! and imaginary parts independently.

use std::f64::consts::PI;
use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis1D {
    Periodic,
    Dirichlet,
}

pub struct HeatOperator {
    n: usize,
    axis: Axis1D,
    spacing: f64,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
    /// Cached `(κτ, multipliers)`.
    cache: Vec<(f64, Vec<f64>)>,
}

impl std::fmt::Debug for HeatOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HeatOperator")
            .field("n", &self.n)
            .field("axis", &self.axis)
            .field("spacing", &self.spacing)
            .finish()
    }
}

impl HeatOperator {
    pub fn new(n: usize, spacing: f64, axis: Axis1D) -> Self {
        let len = match axis {
            Axis1D::Periodic => n,
            Axis1D::Dirichlet => 2 * (n + 1),
        };
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(len);
        let inv = planner.plan_fft_inverse(len);
        let scratch_len = fwd
            .get_inplace_scratch_len()
            .max(inv.get_inplace_scratch_len());
        Self {
            n,
            axis,
            spacing,
            fwd,
            inv,
            buf: vec![Complex64::default(); len],
            scratch: vec![Complex64::default(); scratch_len],
            cache: Vec::new(),
        }
    }

    fn fft_len(&self) -> usize {
        self.buf.len()
    }

    /// Eigenvalues of the discrete Laplacian on the FFT ring.
    fn eigenvalue(&self, m: usize) -> f64 {
        let s = (PI * m as f64 / self.fft_len() as f64).sin();
        -4.0 * s * s / (self.spacing * self.spacing)
    }

    fn multipliers(&mut self, kappa_tau: f64) -> usize {
        if let Some(i) = self.cache.iter().position(|(k, _)| *k == kappa_tau) {
            return i;
        }
        let len = self.fft_len();
        // Normalization of the inverse transform folded in.
        let norm = 1.0 / len as f64;
        let mult = (0..len)
            .map(|m| (kappa_tau * self.eigenvalue(m)).exp() * norm)
            .collect();
        if self.cache.len() >= 4 {
            self.cache.remove(0);
        }
        self.cache.push((kappa_tau, mult));
        self.cache.len() - 1
    }

    /// Applies `exp(κτD)` to `n_lines` lines stored in `data`; element `k`
    /// of line `l` lives at `l * line_stride + k * elem_stride`. Lines that
    /// are identically zero are skipped.
    pub fn apply_strided(
        &mut self,
        data: &mut [f64],
        n_lines: usize,
        line_stride: usize,
        elem_stride: usize,
        kappa_tau: f64,
    ) {
        if kappa_tau == 0.0 || n_lines == 0 {
            return;
        }
        let mi = self.multipliers(kappa_tau);
        let n = self.n;
        let idx = |l: usize, k: usize| l * line_stride + k * elem_stride;
        let is_zero = |data: &[f64], l: usize| (0..n).all(|k| data[idx(l, k)] == 0.0);
        let mut line = 0;
        while line < n_lines {
            let pair = line + 1 < n_lines;
            let za = is_zero(data, line);
            let zb = !pair || is_zero(data, line + 1);
            if za && zb {
                line += if pair { 2 } else { 1 };
                continue;
            }
            let read = |k: usize| {
                let a = data[idx(line, k)];
                let b = if pair { data[idx(line + 1, k)] } else { 0.0 };
                Complex64::new(a, b)
            };
            match self.axis {
                Axis1D::Periodic => {
                    for k in 0..n {
                        self.buf[k] = read(k);
                    }
                }
                Axis1D::Dirichlet => {
                    let len = self.buf.len();
                    self.buf[0] = Complex64::default();
                    self.buf[n + 1] = Complex64::default();
                    for k in 0..n {
                        let z = read(k);
                        self.buf[k + 1] = z;
                        self.buf[len - 1 - k] = -z;
                    }
                }
            }
            self.fwd.process_with_scratch(&mut self.buf, &mut self.scratch);
            let mult = &self.cache[mi].1;
            for (z, m) in self.buf.iter_mut().zip(mult) {
                *z *= *m;
            }
            self.inv.process_with_scratch(&mut self.buf, &mut self.scratch);
            let off = match self.axis {
                Axis1D::Periodic => 0,
                Axis1D::Dirichlet => 1,
            };
            for k in 0..n {
                let z = self.buf[k + off];
                data[idx(line, k)] = z.re;
                if pair {
                    data[idx(line + 1, k)] = z.im;
                }
            }
            line += if pair { 2 } else { 1 };
        }
    }

    /// Convenience for a single contiguous line.
    pub fn apply(&mut self, data: &mut [f64], kappa_tau: f64) {
        assert_eq!(data.len(), self.n);
        self.apply_strided(data, 1, 0, 1, kappa_tau);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Brute-force `exp(τD)` by many tiny explicit Euler steps.
    fn explicit_reference(u0: &[f64], h: f64, tau: f64, axis: Axis1D) -> Vec<f64> {
        let n = u0.len();
        let steps = 200_000;
        let dt = tau / steps as f64;
        let mut u = u0.to_vec();
        let mut next = u.clone();
        for _ in 0..steps {
            for k in 0..n {
                let (l, r) = match axis {
                    Axis1D::Periodic => (u[(k + n - 1) % n], u[(k + 1) % n]),
                    Axis1D::Dirichlet => (
                        if k == 0 { 0.0 } else { u[k - 1] },
                        if k + 1 == n { 0.0 } else { u[k + 1] },
                    ),
                };
                next[k] = u[k] + dt * (l - 2.0 * u[k] + r) / (h * h);
            }
            std::mem::swap(&mut u, &mut next);
        }
        u
    }

    #[test]
    fn matches_explicit_semidiscrete_solution() {
        let n = 12;
        let u0: Vec<f64> = (0..n).map(|k| if (3..7).contains(&k) { 1.0 } else { 0.0 }).collect();
        for axis in [Axis1D::Periodic, Axis1D::Dirichlet] {
            let mut op = HeatOperator::new(n, 0.5, axis);
            let mut u = u0.clone();
            op.apply(&mut u, 0.3);
            let r = explicit_reference(&u0, 0.5, 0.3, axis);
            for (a, b) in u.iter().zip(&r) {
                assert!((a - b).abs() < 1e-5, "{axis:?}: {a} vs {b}");
            }
        }
    }

    #[test]
    fn positivity_and_mass() {
        let n = 33;
        let u0: Vec<f64> = (0..n).map(|k| if k == 5 { 1.0 } else { 0.0 }).collect();
        let mut op = HeatOperator::new(n, 0.1, Axis1D::Periodic);
        let mut u = u0.clone();
        op.apply(&mut u, 1e-5);
        assert!(u.iter().all(|v| *v >= -1e-15));
        assert!((u.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        let mut op = HeatOperator::new(n, 0.1, Axis1D::Dirichlet);
        let mut u = u0;
        op.apply(&mut u, 100.0);
        assert!(u.iter().all(|v| *v >= -1e-15 && *v < 1e-10));
    }

    #[test]
    fn paired_lines_are_independent() {
        let n = 10;
        let rows: Vec<Vec<f64>> = (0..3)
            .map(|r| (0..n).map(|k| ((k * (r + 1)) as f64).sin().abs()).collect())
            .collect();
        let mut op = HeatOperator::new(n, 1.0, Axis1D::Dirichlet);
        // Column-major storage exercises the strides.
        let mut flat = vec![0.0; 3 * n];
        for (l, row) in rows.iter().enumerate() {
            for k in 0..n {
                flat[k * 3 + l] = row[k];
            }
        }
        op.apply_strided(&mut flat, 3, 1, 3, 0.7);
        for (l, row) in rows.iter().enumerate() {
            let mut single = row.clone();
            op.apply(&mut single, 0.7);
            for k in 0..n {
                assert!((single[k] - flat[k * 3 + l]).abs() < 1e-14);
            }
        }
    }
}
