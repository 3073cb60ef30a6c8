//! Linear propagator that is exact in time for shear flows.
//!
//! With x periodic on the window, each x-wavenumber `k` decouples and the
//! linear part `κΔ − (Au − c)∂ₓ` becomes the `ny × ny` matrix
//! `G_k = κD_yy − ik·diag(Au_j − c) − κλ_x(k)`, whose exponential is
//! precomputed once per run. Only the reaction is split off, so the step
//! is limited by the reaction alone even when y-mixing across a period is
//! far faster than the step (large α). Translation is band-limited, so
//! sharp data shows small Gibbs overshoots that the caller clamps.

use rustfft::num_complex::Complex64 as C64;
use rustfft::{Fft, FftPlanner};
use std::f64::consts::PI;
use std::sync::Arc;

/// Dense row-major complex square matrix.
#[derive(Clone)]
struct Mat {
    n: usize,
    a: Vec<C64>,
}

impl Mat {
    fn identity(n: usize) -> Self {
        let mut a = vec![C64::default(); n * n];
        for i in 0..n {
            a[i * n + i] = C64::new(1.0, 0.0);
        }
        Self { n, a }
    }

    fn mul(&self, o: &Mat) -> Mat {
        let n = self.n;
        let mut r = vec![C64::default(); n * n];
        for i in 0..n {
            for k in 0..n {
                let s = self.a[i * n + k];
                if s == C64::default() {
                    continue;
                }
                let orow = &o.a[k * n..(k + 1) * n];
                let rrow = &mut r[i * n..(i + 1) * n];
                for (x, y) in rrow.iter_mut().zip(orow) {
                    *x += s * y;
                }
            }
        }
        Mat { n, a: r }
    }

    fn norm1(&self) -> f64 {
        let n = self.n;
        (0..n)
            .map(|j| (0..n).map(|i| self.a[i * n + j].norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Scaling and squaring with a degree-12 Taylor polynomial.
    fn exp(&self) -> Mat {
        let n = self.n;
        let norm = self.norm1();
        let s = if norm > 0.25 {
            (norm / 0.25).log2().ceil() as i32
        } else {
            0
        };
        let scale = 0.5f64.powi(s);
        let x = Mat {
            n,
            a: self.a.iter().map(|z| z * scale).collect(),
        };
        let mut e = Mat::identity(n);
        for j in (1..=12).rev() {
            // e ← I + (x/j)·e
            let mut t = x.mul(&e);
            for z in t.a.iter_mut() {
                *z /= j as f64;
            }
            for i in 0..n {
                t.a[i * n + i] += 1.0;
            }
            e = t;
        }
        for _ in 0..s {
            e = e.mul(&e);
        }
        e
    }

    fn apply(&self, v: &[C64], out: &mut [C64]) {
        let n = self.n;
        for (i, o) in out.iter_mut().enumerate() {
            let row = &self.a[i * n..(i + 1) * n];
            *o = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
    }
}

/// Exact `exp(τ·L)` for the linear shear operator on an x-periodic window.
pub struct ShearPropagator {
    nx: usize,
    ny: usize,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
    /// Propagators for modes `0..=nx/2`, keyed by `τ`.
    mats: Vec<(f64, Vec<Mat>)>,
    spec: Vec<C64>,
    buf: Vec<C64>,
    scratch: Vec<C64>,
    tmp_in: Vec<C64>,
    tmp_out: Vec<C64>,
}

impl std::fmt::Debug for ShearPropagator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ShearPropagator")
            .field("nx", &self.nx)
            .field("ny", &self.ny)
            .finish()
    }
}

/// Data defining the linear operator.
#[derive(Debug, Clone)]
pub struct ShearOperator {
    pub nx: usize,
    pub dx: f64,
    pub ny: usize,
    pub dy: f64,
    pub kappa: f64,
    pub x_diffusion: bool,
    pub row_velocity: Vec<f64>,
}

impl ShearPropagator {
    /// Precomputes propagators for each step length in `taus`.
    pub fn new(op: &ShearOperator, taus: &[f64]) -> Self {
        let (nx, ny) = (op.nx, op.ny);
        let mut planner = FftPlanner::new();
        let fft = planner.plan_fft_forward(nx);
        let ifft = planner.plan_fft_inverse(nx);
        let scratch_len = fft
            .get_inplace_scratch_len()
            .max(ifft.get_inplace_scratch_len());
        let n_modes = nx / 2 + 1;
        let mut mats: Vec<(f64, Vec<Mat>)> = Vec::new();
        for &tau in taus {
            // A step twice an existing one is that propagator squared.
            let half = mats.iter().find(|(t, _)| (2.0 * t - tau).abs() <= 1e-15 * tau);
            let set = match half {
                Some((_, hm)) => hm.iter().map(|e| e.mul(e)).collect(),
                None => (0..n_modes).map(|m| mode_matrix(op, m, tau)).collect(),
            };
            mats.push((tau, set));
        }
        Self {
            nx,
            ny,
            fft,
            ifft,
            mats,
            spec: vec![C64::default(); n_modes * ny],
            buf: vec![C64::default(); nx],
            scratch: vec![C64::default(); scratch_len],
            tmp_in: vec![C64::default(); ny],
            tmp_out: vec![C64::default(); ny],
        }
    }

    /// Applies the propagator for step `tau` (which must have been
    /// precomputed) to the row-major real field `values`.
    pub fn apply(&mut self, values: &mut [f64], tau: f64) {
        let (nx, ny) = (self.nx, self.ny);
        let n_modes = nx / 2 + 1;
        let idx = self
            .mats
            .iter()
            .position(|(t, _)| *t == tau)
            .expect("propagator for this step was not precomputed");

        // Forward: two real rows per complex FFT.
        let mut j = 0;
        while j < ny {
            let pair = j + 1 < ny;
            for x in 0..nx {
                let b = if pair { values[(j + 1) * nx + x] } else { 0.0 };
                self.buf[x] = C64::new(values[j * nx + x], b);
            }
            self.fft.process_with_scratch(&mut self.buf, &mut self.scratch);
            for m in 0..n_modes {
                let z = self.buf[m];
                let zc = self.buf[(nx - m) % nx].conj();
                self.spec[m * ny + j] = 0.5 * (z + zc);
                if pair {
                    self.spec[m * ny + j + 1] = C64::new(0.0, -0.5) * (z - zc);
                }
            }
            j += if pair { 2 } else { 1 };
        }

        let mats = &self.mats[idx].1;
        for m in 0..n_modes {
            let v = &mut self.spec[m * ny..(m + 1) * ny];
            self.tmp_in.copy_from_slice(v);
            mats[m].apply(&self.tmp_in, &mut self.tmp_out);
            v.copy_from_slice(&self.tmp_out);
        }
        if nx % 2 == 0 {
            // The Nyquist mode cannot carry a real translation.
            let m = nx / 2;
            for z in &mut self.spec[m * ny..(m + 1) * ny] {
                *z = C64::new(z.re, 0.0);
            }
        }

        let norm = 1.0 / nx as f64;
        let mut j = 0;
        while j < ny {
            let pair = j + 1 < ny;
            for m in 0..n_modes {
                let a = self.spec[m * ny + j];
                let b = if pair { self.spec[m * ny + j + 1] } else { C64::default() };
                self.buf[m] = a + C64::new(0.0, 1.0) * b;
                if m > 0 && m < nx - m {
                    self.buf[nx - m] = a.conj() + C64::new(0.0, 1.0) * b.conj();
                }
            }
            self.ifft.process_with_scratch(&mut self.buf, &mut self.scratch);
            for x in 0..nx {
                values[j * nx + x] = self.buf[x].re * norm;
                if pair {
                    values[(j + 1) * nx + x] = self.buf[x].im * norm;
                }
            }
            j += if pair { 2 } else { 1 };
        }
    }
}

fn mode_matrix(op: &ShearOperator, m: usize, tau: f64) -> Mat {
    let ny = op.ny;
    let k = 2.0 * PI * m as f64 / (op.nx as f64 * op.dx);
    let lam_x = if op.x_diffusion {
        let s = (0.5 * k * op.dx).sin();
        4.0 * s * s / (op.dx * op.dx)
    } else {
        0.0
    };
    let c = op.kappa / (op.dy * op.dy);
    let mut g = Mat {
        n: ny,
        a: vec![C64::default(); ny * ny],
    };
    for j in 0..ny {
        g.a[j * ny + j] = C64::new(-2.0 * c, -k * op.row_velocity[j]) * tau;
        g.a[j * ny + (j + 1) % ny] += C64::new(c * tau, 0.0);
        g.a[j * ny + (j + ny - 1) % ny] += C64::new(c * tau, 0.0);
    }
    let mut e = g.exp();
    let damp = (-op.kappa * lam_x * tau).exp();
    for z in e.a.iter_mut() {
        *z *= damp;
    }
    e
}
