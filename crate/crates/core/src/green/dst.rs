//! Fast Poisson solve on all-inside rectangle grids.
//!
//! The cell-centered 5-point Laplacian with the Dirichlet value imposed on
//! cell faces (ghost = -first cell) is diagonalized by the DST-II basis
//! `sin(pi (a+1/2)(k+1)/n)` with eigenvalues `4 sin^2(pi (k+1)/(2n)) / h^2`.
//! Forward DST-II and its transpose (DST-III) are evaluated through
//! complex FFTs of length `2n`.

use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};

pub struct DstSolver {
    nx: usize,
    ny: usize,
    h: f64,
    fft_x: Arc<dyn Fft<f64>>,
    fft_y: Arc<dyn Fft<f64>>,
    eig_x: Vec<f64>,
    eig_y: Vec<f64>,
    // phase tables e^{-i pi k / (2n)} for k = 0..2n
    phase_x: Vec<Complex<f64>>,
    phase_y: Vec<Complex<f64>>,
}

fn eigenvalues(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| {
            let s = (std::f64::consts::PI * (k + 1) as f64 / (2.0 * n as f64)).sin();
            4.0 * s * s
        })
        .collect()
}

fn phases(n: usize) -> Vec<Complex<f64>> {
    (0..=2 * n)
        .map(|k| Complex::from_polar(1.0, -std::f64::consts::PI * k as f64 / (2.0 * n as f64)))
        .collect()
}

impl DstSolver {
    pub fn new(nx: usize, ny: usize, h: f64) -> Self {
        let mut planner = FftPlanner::new();
        DstSolver {
            nx,
            ny,
            h,
            fft_x: planner.plan_fft_forward(2 * nx),
            fft_y: planner.plan_fft_forward(2 * ny),
            eig_x: eigenvalues(nx),
            eig_y: eigenvalues(ny),
            phase_x: phases(nx),
            phase_y: phases(ny),
        }
    }

    /// DST-II of `x` into `out`: `out[k] = sum_a x[a] sin(pi (a+1/2)(k+1)/n)`.
    fn dst2(
        x: &[f64],
        out: &mut [f64],
        fft: &Arc<dyn Fft<f64>>,
        phase: &[Complex<f64>],
        buf: &mut Vec<Complex<f64>>,
    ) {
        let n = x.len();
        buf.clear();
        buf.resize(2 * n, Complex::new(0.0, 0.0));
        for a in 0..n {
            buf[a] = Complex::new(x[a], 0.0);
            buf[2 * n - 1 - a] = Complex::new(-x[a], 0.0);
        }
        fft.process(buf);
        for k in 1..=n {
            // X_{k-1} = (i/2) e^{-i pi k/(2n)} Y_k, real up to roundoff
            let y = buf[k] * phase[k];
            out[k - 1] = -0.5 * y.im;
        }
    }

    /// DST-III (transpose of DST-II): `out[a] = sum_k y[k] sin(pi (a+1/2)(k+1)/n)`.
    fn dst3(
        y: &[f64],
        out: &mut [f64],
        fft: &Arc<dyn Fft<f64>>,
        phase: &[Complex<f64>],
        buf: &mut Vec<Complex<f64>>,
    ) {
        let n = y.len();
        buf.clear();
        buf.resize(2 * n, Complex::new(0.0, 0.0));
        for m in 1..=n {
            buf[m] = phase[m] * y[m - 1];
        }
        fft.process(buf);
        for a in 0..n {
            out[a] = -buf[a].im;
        }
    }

    /// Solve `-lap psi = omega` (row-major values over the full grid).
    pub fn solve(&self, omega: &[f64]) -> Vec<f64> {
        let (nx, ny) = (self.nx, self.ny);
        debug_assert_eq!(omega.len(), nx * ny);
        let mut work = omega.to_vec();
        let mut buf = Vec::new();
        let mut line_in = vec![0.0; nx.max(ny)];
        let mut line_out = vec![0.0; nx.max(ny)];

        // Forward DST-II along x, then y.
        for iy in 0..ny {
            line_in[..nx].copy_from_slice(&work[iy * nx..(iy + 1) * nx]);
            Self::dst2(&line_in[..nx], &mut line_out[..nx], &self.fft_x, &self.phase_x, &mut buf);
            work[iy * nx..(iy + 1) * nx].copy_from_slice(&line_out[..nx]);
        }
        for ix in 0..nx {
            for iy in 0..ny {
                line_in[iy] = work[iy * nx + ix];
            }
            Self::dst2(&line_in[..ny], &mut line_out[..ny], &self.fft_y, &self.phase_y, &mut buf);
            for iy in 0..ny {
                work[iy * nx + ix] = line_out[iy];
            }
        }

        // Scale: eigen-solve plus the DST-II -> DST-III normalization
        // (columns of the basis have squared norm n/2, except the last
        // mode with norm n).
        let h2 = self.h * self.h;
        for iy in 0..ny {
            let wy = if iy + 1 == ny { 1.0 / ny as f64 } else { 2.0 / ny as f64 };
            for ix in 0..nx {
                let wx = if ix + 1 == nx { 1.0 / nx as f64 } else { 2.0 / nx as f64 };
                let lam = (self.eig_x[ix] + self.eig_y[iy]) / h2;
                work[iy * nx + ix] *= wx * wy / lam;
            }
        }

        // Inverse: DST-III along x, then y.
        for iy in 0..ny {
            line_in[..nx].copy_from_slice(&work[iy * nx..(iy + 1) * nx]);
            Self::dst3(&line_in[..nx], &mut line_out[..nx], &self.fft_x, &self.phase_x, &mut buf);
            work[iy * nx..(iy + 1) * nx].copy_from_slice(&line_out[..nx]);
        }
        for ix in 0..nx {
            for iy in 0..ny {
                line_in[iy] = work[iy * nx + ix];
            }
            Self::dst3(&line_in[..ny], &mut line_out[..ny], &self.fft_y, &self.phase_y, &mut buf);
            for iy in 0..ny {
                work[iy * nx + ix] = line_out[iy];
            }
        }
        work
    }

    /// Residual `omega - (-lap psi)` with the same face-Dirichlet stencil.
    pub fn residual(&self, psi: &[f64], omega: &[f64], out: &mut [f64]) {
        let (nx, ny) = (self.nx, self.ny);
        let h2 = self.h * self.h;
        for iy in 0..ny {
            for ix in 0..nx {
                let i = iy * nx + ix;
                let c = psi[i];
                let mut acc = 0.0;
                let mut diag = 4.0;
                if ix > 0 {
                    acc += psi[i - 1];
                } else {
                    diag += 1.0;
                }
                if ix + 1 < nx {
                    acc += psi[i + 1];
                } else {
                    diag += 1.0;
                }
                if iy > 0 {
                    acc += psi[i - nx];
                } else {
                    diag += 1.0;
                }
                if iy + 1 < ny {
                    acc += psi[i + nx];
                } else {
                    diag += 1.0;
                }
                out[i] = omega[i] - (diag * c - acc) / h2;
            }
        }
    }
}
