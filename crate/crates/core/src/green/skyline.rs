//! Direct factorization of the masked 5-point Laplacian.
//!
//! Unknowns are the inside cells in row-major order; the matrix (scaled
//! by h^2) has `4 + b` on the diagonal, where `b` counts non-inside
//! neighbors (the Dirichlet value sits on the exposed cell faces via the
//! ghost reflection), and -1 for each inside neighbor. Cholesky fill
//! stays inside the row envelope, which for convex-ish masks mirrors the
//! chord widths of the domain, so an envelope (skyline) factorization is
//! stored: row `i` keeps columns `first[i] ..= i` contiguously.

use crate::domain::Grid;
use crate::error::{Error, Result};

pub struct SkylineCholesky {
    n: usize,
    /// unknown index -> linear cell index
    cell_of: Vec<usize>,
    first: Vec<usize>,
    row_start: Vec<usize>,
    vals: Vec<f64>,
    /// diagonal of A and inside-neighbor unknowns, for residual applies
    diag: Vec<f64>,
    nbrs: Vec<[usize; 4]>,
}

const NONE: usize = usize::MAX;

impl SkylineCholesky {
    pub fn new(grid: &Grid) -> Result<Self> {
        let (nx, ny) = (grid.nx(), grid.ny());
        let mut unknown_of = vec![NONE; nx * ny];
        let mut cell_of = Vec::with_capacity(grid.inside_count());
        for i in grid.inside_indices() {
            unknown_of[i] = cell_of.len();
            cell_of.push(i);
        }
        let n = cell_of.len();

        let mut diag = vec![0.0; n];
        let mut nbrs = vec![[NONE; 4]; n];
        let mut first = vec![0usize; n];
        for u in 0..n {
            let i = cell_of[u];
            let (ix, iy) = grid.coords(i);
            let mut b = 0usize;
            let mut f = u;
            let mut k = 0;
            let visit = |cell: Option<usize>| -> usize {
                match cell {
                    Some(j) if unknown_of[j] != NONE => unknown_of[j],
                    _ => NONE,
                }
            };
            let west = visit((ix > 0).then(|| i - 1));
            let east = visit((ix + 1 < nx).then(|| i + 1));
            let south = visit((iy > 0).then(|| i - nx));
            let north = visit((iy + 1 < ny).then(|| i + nx));
            for v in [west, east, south, north] {
                if v == NONE {
                    b += 1;
                } else {
                    nbrs[u][k] = v;
                    k += 1;
                    if v < f {
                        f = v;
                    }
                }
            }
            diag[u] = 4.0 + b as f64;
            first[u] = f;
        }

        let mut row_start = vec![0usize; n + 1];
        for u in 0..n {
            row_start[u + 1] = row_start[u] + (u - first[u] + 1);
        }
        let mut vals = vec![0.0; row_start[n]];

        // Assemble A into the envelope.
        for u in 0..n {
            let base = row_start[u];
            let f = first[u];
            vals[base + (u - f)] = diag[u];
            for &v in &nbrs[u] {
                if v != NONE && v < u {
                    vals[base + (v - f)] = -1.0;
                }
            }
        }

        let mut me = SkylineCholesky {
            n,
            cell_of,
            first,
            row_start,
            vals,
            diag,
            nbrs,
        };
        me.factor()?;
        Ok(me)
    }

    fn factor(&mut self) -> Result<()> {
        for i in 0..self.n {
            let fi = self.first[i];
            let bi = self.row_start[i];
            for j in fi..i {
                let fj = self.first[j];
                let bj = self.row_start[j];
                let lo = fi.max(fj);
                let mut sum = self.vals[bi + (j - fi)];
                if lo < j {
                    let (ri, rj) = (bi + (lo - fi), bj + (lo - fj));
                    let len = j - lo;
                    // Contiguous envelope ranges: dot product.
                    let mut dot = 0.0;
                    for k in 0..len {
                        dot += self.vals[ri + k] * self.vals[rj + k];
                    }
                    sum -= dot;
                }
                self.vals[bi + (j - fi)] = sum / self.vals[bj + (j - fj)];
            }
            let mut d = self.vals[bi + (i - fi)];
            for k in fi..i {
                let l = self.vals[bi + (k - fi)];
                d -= l * l;
            }
            if d <= 0.0 || !d.is_finite() {
                return Err(Error::SingularSystem(format!(
                    "nonpositive pivot {d:e} at unknown {i}"
                )));
            }
            self.vals[bi + (i - fi)] = d.sqrt();
        }
        Ok(())
    }

    pub fn unknowns(&self) -> usize {
        self.n
    }

    pub fn cell_of_unknown(&self, u: usize) -> usize {
        self.cell_of[u]
    }

    /// Solve `A x = b` in place (both in unknown ordering).
    pub fn solve(&self, b: &mut Vec<f64>) {
        debug_assert_eq!(b.len(), self.n);
        // Forward: L y = b
        for i in 0..self.n {
            let fi = self.first[i];
            let bi = self.row_start[i];
            let mut sum = b[i];
            for k in fi..i {
                sum -= self.vals[bi + (k - fi)] * b[k];
            }
            b[i] = sum / self.vals[bi + (i - fi)];
        }
        // Backward: L^T x = y  (column sweep over the row storage)
        for i in (0..self.n).rev() {
            let fi = self.first[i];
            let bi = self.row_start[i];
            let xi = b[i] / self.vals[bi + (i - fi)];
            b[i] = xi;
            for k in fi..i {
                b[k] -= self.vals[bi + (k - fi)] * xi;
            }
        }
    }

    /// `out = A x` via the stencil (scaled form: diagonal 4+b, -1 links).
    pub fn apply(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..self.n {
            let mut acc = self.diag[i] * x[i];
            for &v in &self.nbrs[i] {
                if v != NONE {
                    acc -= x[v];
                }
            }
            out[i] = acc;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{discretize, Domain};

    #[test]
    fn solve_matches_apply_on_disk() {
        let grid = discretize(Domain::UnitDisk, 24).unwrap();
        let chol = SkylineCholesky::new(&grid).unwrap();
        let n = chol.unknowns();
        let b: Vec<f64> = (0..n).map(|i| ((i * 97 + 13) % 31) as f64 / 31.0 - 0.4).collect();
        let mut x = b.clone();
        chol.solve(&mut x);
        let mut back = vec![0.0; n];
        chol.apply(&x, &mut back);
        let err = b
            .iter()
            .zip(&back)
            .fold(0.0f64, |m, (a, c)| m.max((a - c).abs()));
        assert!(err < 1e-11, "round trip error {err}");
    }

    #[test]
    fn spd_diagonal_positive() {
        let grid = discretize(Domain::UnitDisk, 16).unwrap();
        assert!(SkylineCholesky::new(&grid).is_ok());
    }
}
