//! Domain geometry, uniform cell-centered grids, scalar fields, and
//! midpoint quadrature.
//!
//! All grids are uniform square-cell grids over an axis-aligned bounding
//! box; the domain boundary is resolved by the `inside` mask (first
//! order). Fields carry one value per cell of the full bounding grid and
//! read as exactly 0 on outside cells.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geometry::Point;

/// Boolean raster backing a [`Domain::MaskedBitmap`]. Row-major, row 0 at
/// the bottom (smallest y).
#[derive(Debug, Clone, PartialEq)]
pub struct Bitmap {
    pub nx: usize,
    pub ny: usize,
    pub cells: Vec<bool>,
}

impl Bitmap {
    pub fn new(nx: usize, ny: usize, cells: Vec<bool>) -> Result<Self> {
        if cells.len() != nx * ny {
            return Err(Error::InvalidConfig(format!(
                "bitmap needs {}x{}={} cells, got {}",
                nx,
                ny,
                nx * ny,
                cells.len()
            )));
        }
        Ok(Bitmap { nx, ny, cells })
    }

    fn at(&self, ix: usize, iy: usize) -> bool {
        self.cells[iy * self.nx + ix]
    }
}

/// The bounded, simply connected planar domain the flow lives in.
#[derive(Debug, Clone, PartialEq)]
pub enum Domain {
    /// The open unit disk; its bounding box is [-1,1]^2.
    UnitDisk,
    /// The open rectangle (0,width) x (0,height).
    Rectangle { width: f64, height: f64 },
    /// An arbitrary raster mask. Cells are squares of side 1/n where `n`
    /// is the resolution passed to [`discretize`]; the raster is used at
    /// its native size, so the bounding box is (0, nx/n) x (0, ny/n).
    MaskedBitmap(Bitmap),
}

impl Domain {
    pub fn rectangle(width: f64, height: f64) -> Result<Self> {
        if !(width > 0.0 && height > 0.0) || !width.is_finite() || !height.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "rectangle sides must be positive finite, got {width} x {height}"
            )));
        }
        Ok(Domain::Rectangle { width, height })
    }
}

/// Uniform square-cell grid with an inside mask.
///
/// Cell `(ix, iy)` has center `(x0 + (ix+0.5)h, y0 + (iy+0.5)h)`; linear
/// indices are row-major with `ix` fastest.
#[derive(Debug)]
pub struct Grid {
    domain: Domain,
    nx: usize,
    ny: usize,
    h: f64,
    x0: f64,
    y0: f64,
    inside: Vec<bool>,
    inside_count: usize,
}

impl PartialEq for Grid {
    fn eq(&self, other: &Self) -> bool {
        self.nx == other.nx
            && self.ny == other.ny
            && self.h == other.h
            && self.x0 == other.x0
            && self.y0 == other.y0
            && self.inside == other.inside
    }
}

/// Build the grid for `domain` at resolution `n` (cells per unit of the
/// reference length: the bounding-square side for the disk, the width for
/// rectangles, unit length for bitmaps).
pub fn discretize(domain: Domain, n: usize) -> Result<Arc<Grid>> {
    if n < 4 {
        return Err(Error::ResolutionTooCoarse(0));
    }
    let (nx, ny, h, x0, y0) = match &domain {
        Domain::UnitDisk => (n, n, 2.0 / n as f64, -1.0, -1.0),
        Domain::Rectangle { width, height } => {
            let h = width / n as f64;
            let ny = (height / h).round() as usize;
            if ny == 0 || (ny as f64 * h - height).abs() > 1e-9 * height.max(1.0) {
                return Err(Error::InvalidConfig(format!(
                    "rectangle {width} x {height} is not commensurate with n={n} square cells"
                )));
            }
            (n, ny, h, 0.0, 0.0)
        }
        Domain::MaskedBitmap(bm) => (bm.nx, bm.ny, 1.0 / n as f64, 0.0, 0.0),
    };

    let mut inside = vec![false; nx * ny];
    match &domain {
        Domain::UnitDisk => {
            for iy in 0..ny {
                for ix in 0..nx {
                    let cx = x0 + (ix as f64 + 0.5) * h;
                    let cy = y0 + (iy as f64 + 0.5) * h;
                    inside[iy * nx + ix] = cx * cx + cy * cy < 1.0;
                }
            }
        }
        Domain::Rectangle { .. } => inside.fill(true),
        Domain::MaskedBitmap(bm) => {
            for iy in 0..ny {
                for ix in 0..nx {
                    inside[iy * nx + ix] = bm.at(ix, iy);
                }
            }
        }
    }

    validate_mask(&inside, nx, ny)?;
    let inside_count = inside.iter().filter(|b| **b).count();
    if inside_count < 16 {
        return Err(Error::ResolutionTooCoarse(inside_count));
    }

    Ok(Arc::new(Grid {
        domain,
        nx,
        ny,
        h,
        x0,
        y0,
        inside,
        inside_count,
    }))
}

/// One 4-connected component, no holes, no isolated cells.
fn validate_mask(inside: &[bool], nx: usize, ny: usize) -> Result<()> {
    let idx = |ix: usize, iy: usize| iy * nx + ix;

    // Single 4-connected inside component.
    let first = match inside.iter().position(|b| *b) {
        Some(i) => i,
        None => return Err(Error::MaskNotSimplyConnected("mask is empty".into())),
    };
    let mut seen = vec![false; nx * ny];
    let mut stack = vec![first];
    seen[first] = true;
    let mut reached = 0usize;
    while let Some(i) = stack.pop() {
        reached += 1;
        let (ix, iy) = (i % nx, i / nx);
        let mut push = |jx: usize, jy: usize| {
            let j = idx(jx, jy);
            if inside[j] && !seen[j] {
                seen[j] = true;
                stack.push(j);
            }
        };
        if ix > 0 {
            push(ix - 1, iy);
        }
        if ix + 1 < nx {
            push(ix + 1, iy);
        }
        if iy > 0 {
            push(ix, iy - 1);
        }
        if iy + 1 < ny {
            push(ix, iy + 1);
        }
    }
    let total = inside.iter().filter(|b| **b).count();
    if reached != total {
        return Err(Error::MaskNotSimplyConnected(format!(
            "{} of {} inside cells in the first component",
            reached, total
        )));
    }

    // No holes: every outside cell must reach the bounding-box border.
    let mut out_seen = vec![false; nx * ny];
    let mut stack = Vec::new();
    for ix in 0..nx {
        for iy in [0, ny - 1] {
            let i = idx(ix, iy);
            if !inside[i] && !out_seen[i] {
                out_seen[i] = true;
                stack.push(i);
            }
        }
    }
    for iy in 0..ny {
        for ix in [0, nx - 1] {
            let i = idx(ix, iy);
            if !inside[i] && !out_seen[i] {
                out_seen[i] = true;
                stack.push(i);
            }
        }
    }
    while let Some(i) = stack.pop() {
        let (ix, iy) = (i % nx, i / nx);
        let mut push = |jx: usize, jy: usize| {
            let j = idx(jx, jy);
            if !inside[j] && !out_seen[j] {
                out_seen[j] = true;
                stack.push(j);
            }
        };
        if ix > 0 {
            push(ix - 1, iy);
        }
        if ix + 1 < nx {
            push(ix + 1, iy);
        }
        if iy > 0 {
            push(ix, iy - 1);
        }
        if iy + 1 < ny {
            push(ix, iy + 1);
        }
    }
    if (0..nx * ny).any(|i| !inside[i] && !out_seen[i]) {
        return Err(Error::MaskNotSimplyConnected("mask has a hole".into()));
    }

    // No isolated cells (implied by connectivity once total >= 2, but the
    // check is cheap and guards the single-cell mask).
    for iy in 0..ny {
        for ix in 0..nx {
            if !inside[idx(ix, iy)] {
                continue;
            }
            let has_nbr = (ix > 0 && inside[idx(ix - 1, iy)])
                || (ix + 1 < nx && inside[idx(ix + 1, iy)])
                || (iy > 0 && inside[idx(ix, iy - 1)])
                || (iy + 1 < ny && inside[idx(ix, iy + 1)]);
            if !has_nbr {
                return Err(Error::MaskNotSimplyConnected(format!(
                    "isolated cell at ({ix}, {iy})"
                )));
            }
        }
    }
    Ok(())
}

impl Grid {
    pub fn domain(&self) -> &Domain {
        &self.domain
    }
    pub fn nx(&self) -> usize {
        self.nx
    }
    pub fn ny(&self) -> usize {
        self.ny
    }
    pub fn h(&self) -> f64 {
        self.h
    }
    pub fn origin(&self) -> Point {
        Point::new(self.x0, self.y0)
    }
    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }
    pub fn inside_count(&self) -> usize {
        self.inside_count
    }

    pub fn index(&self, ix: usize, iy: usize) -> usize {
        debug_assert!(ix < self.nx && iy < self.ny);
        iy * self.nx + ix
    }

    pub fn coords(&self, i: usize) -> (usize, usize) {
        (i % self.nx, i / self.nx)
    }

    pub fn is_inside(&self, ix: usize, iy: usize) -> bool {
        self.inside[self.index(ix, iy)]
    }

    pub fn is_inside_idx(&self, i: usize) -> bool {
        self.inside[i]
    }

    pub fn center(&self, ix: usize, iy: usize) -> Point {
        Point::new(
            self.x0 + (ix as f64 + 0.5) * self.h,
            self.y0 + (iy as f64 + 0.5) * self.h,
        )
    }

    pub fn center_idx(&self, i: usize) -> Point {
        let (ix, iy) = self.coords(i);
        self.center(ix, iy)
    }

    /// Linear indices of all inside cells, in row-major order.
    pub fn inside_indices(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.nx * self.ny).filter(move |&i| self.inside[i])
    }

    /// Cell containing `p`, if within the bounding box.
    pub fn locate(&self, p: Point) -> Option<(usize, usize)> {
        let fx = (p.x - self.x0) / self.h;
        let fy = (p.y - self.y0) / self.h;
        if fx < 0.0 || fy < 0.0 {
            return None;
        }
        let (ix, iy) = (fx.floor() as usize, fy.floor() as usize);
        if ix < self.nx && iy < self.ny {
            Some((ix, iy))
        } else {
            None
        }
    }

    /// Whether `p` lies in the discrete domain (inside cell of the mask;
    /// analytic test for the disk and rectangle).
    pub fn contains_point(&self, p: Point) -> bool {
        match &self.domain {
            Domain::UnitDisk => p.norm_sq() < 1.0,
            Domain::Rectangle { width, height } => {
                p.x > 0.0 && p.x < *width && p.y > 0.0 && p.y < *height
            }
            Domain::MaskedBitmap(_) => match self.locate(p) {
                Some((ix, iy)) => self.is_inside(ix, iy),
                None => false,
            },
        }
    }

    /// Distance from `p` to the domain boundary (analytic for disk and
    /// rectangle, staircase-face distance for bitmaps). Nonpositive when
    /// `p` is outside.
    pub fn boundary_distance(&self, p: Point) -> f64 {
        match &self.domain {
            Domain::UnitDisk => 1.0 - p.norm(),
            Domain::Rectangle { width, height } => {
                let dx = p.x.min(width - p.x);
                let dy = p.y.min(height - p.y);
                dx.min(dy)
            }
            Domain::MaskedBitmap(_) => {
                if !self.contains_point(p) {
                    return 0.0;
                }
                // Distance to the nearest exposed cell face.
                let mut best = f64::INFINITY;
                for i in self.inside_indices() {
                    let (ix, iy) = self.coords(i);
                    let c = self.center(ix, iy);
                    let exposed = |jx: isize, jy: isize| -> bool {
                        jx < 0
                            || jy < 0
                            || jx as usize >= self.nx
                            || jy as usize >= self.ny
                            || !self.is_inside(jx as usize, jy as usize)
                    };
                    let half = 0.5 * self.h;
                    if exposed(ix as isize - 1, iy as isize) {
                        best = best.min(dist_to_vseg(p, c.x - half, c.y - half, c.y + half));
                    }
                    if exposed(ix as isize + 1, iy as isize) {
                        best = best.min(dist_to_vseg(p, c.x + half, c.y - half, c.y + half));
                    }
                    if exposed(ix as isize, iy as isize - 1) {
                        best = best.min(dist_to_hseg(p, c.y - half, c.x - half, c.x + half));
                    }
                    if exposed(ix as isize, iy as isize + 1) {
                        best = best.min(dist_to_hseg(p, c.y + half, c.x - half, c.x + half));
                    }
                }
                best
            }
        }
    }
}

fn dist_to_vseg(p: Point, x: f64, y0: f64, y1: f64) -> f64 {
    let cy = p.y.clamp(y0, y1);
    Point::new(x, cy).dist(p)
}

fn dist_to_hseg(p: Point, y: f64, x0: f64, x1: f64) -> f64 {
    let cx = p.x.clamp(x0, x1);
    Point::new(cx, y).dist(p)
}

/// A closed ball whose closure must sit strictly inside the domain.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Ball {
    pub center: Point,
    pub radius: f64,
}

impl Ball {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::InvalidConfig(format!("ball radius {radius} invalid")));
        }
        Ok(Ball { center, radius })
    }

    pub fn contains(&self, p: Point) -> bool {
        p.dist(self.center) < self.radius
    }

    /// Closure strictly inside the domain, with `margin` extra clearance.
    pub fn check_compactly_inside(&self, grid: &Grid, margin: f64) -> Result<()> {
        if grid.boundary_distance(self.center) > self.radius + margin {
            Ok(())
        } else {
            Err(Error::OutsideDomain(self.center.x, self.center.y))
        }
    }
}

/// Scalar field over a grid: one value per bounding-grid cell, exactly 0
/// outside the mask.
#[derive(Debug, Clone)]
pub struct ScalarField {
    grid: Arc<Grid>,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn zeros(grid: Arc<Grid>) -> Self {
        let n = grid.cell_count();
        ScalarField {
            grid,
            values: vec![0.0; n],
        }
    }

    /// Build from a per-cell function, evaluated on inside cells only.
    pub fn from_fn(grid: Arc<Grid>, mut f: impl FnMut(Point) -> f64) -> Result<Self> {
        let mut values = vec![0.0; grid.cell_count()];
        for i in grid.inside_indices() {
            let v = f(grid.center_idx(i));
            if !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "non-finite field value {v} at cell {i}"
                )));
            }
            values[i] = v;
        }
        Ok(ScalarField { grid, values })
    }

    /// Wrap raw values (row-major over the bounding grid). Outside cells
    /// are forced to 0; non-finite values are rejected.
    pub fn from_values(grid: Arc<Grid>, mut values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cell_count() {
            return Err(Error::GridMismatch);
        }
        for (i, v) in values.iter_mut().enumerate() {
            if !grid.is_inside_idx(i) {
                *v = 0.0;
            } else if !v.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "non-finite field value {v} at cell {i}"
                )));
            }
        }
        Ok(ScalarField { grid, values })
    }

    pub fn grid(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, ix: usize, iy: usize) -> f64 {
        self.values[self.grid.index(ix, iy)]
    }

    pub fn get_idx(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn set_idx(&mut self, i: usize, v: f64) {
        debug_assert!(self.grid.is_inside_idx(i) || v == 0.0);
        self.values[i] = v;
    }

    pub fn same_grid(&self, other: &ScalarField) -> bool {
        Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Indices of cells with nonzero value.
    pub fn support(&self) -> Vec<usize> {
        (0..self.values.len())
            .filter(|&i| self.values[i] != 0.0)
            .collect()
    }

    /// Midpoint quadrature of the field over the domain.
    pub fn integrate(&self) -> f64 {
        let h2 = self.grid.h() * self.grid.h();
        self.values.iter().sum::<f64>() * h2
    }

    /// L1 distance between two fields on the same grid.
    pub fn l1_distance(&self, other: &ScalarField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let h2 = self.grid.h() * self.grid.h();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>()
            * h2)
    }

    /// Discrete inner product `h^2 * sum(f g)`.
    pub fn inner(&self, other: &ScalarField) -> Result<f64> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        let h2 = self.grid.h() * self.grid.h();
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b)
            .sum::<f64>()
            * h2)
    }

    /// Bilinear interpolation at `p` on cell-centered data; cells outside
    /// the grid (or outside the mask, which store 0) read as 0.
    pub fn interp_bilinear(&self, p: Point) -> f64 {
        let g = &self.grid;
        let gx = (p.x - g.origin().x) / g.h() - 0.5;
        let gy = (p.y - g.origin().y) / g.h() - 0.5;
        let ix0 = gx.floor();
        let iy0 = gy.floor();
        let tx = gx - ix0;
        let ty = gy - iy0;
        let read = |ix: i64, iy: i64| -> f64 {
            if ix < 0 || iy < 0 || ix >= g.nx() as i64 || iy >= g.ny() as i64 {
                0.0
            } else {
                self.values[iy as usize * g.nx() + ix as usize]
            }
        };
        let (i, j) = (ix0 as i64, iy0 as i64);
        let v00 = read(i, j);
        let v10 = read(i + 1, j);
        let v01 = read(i, j + 1);
        let v11 = read(i + 1, j + 1);
        (1.0 - ty) * ((1.0 - tx) * v00 + tx * v10) + ty * ((1.0 - tx) * v01 + tx * v11)
    }

    /// In-place `self += scale * other`.
    pub fn axpy(&mut self, scale: f64, other: &ScalarField) -> Result<()> {
        if !self.same_grid(other) {
            return Err(Error::GridMismatch);
        }
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += scale * b;
        }
        Ok(())
    }
}

/// Free-function form of [`ScalarField::integrate`].
pub fn integrate(f: &ScalarField) -> f64 {
    f.integrate()
}

/// Free-function form of [`ScalarField::l1_distance`].
pub fn l1_distance(f: &ScalarField, g: &ScalarField) -> Result<f64> {
    f.l1_distance(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn unit_square_n4_has_16_cells() {
        let g = discretize(Domain::rectangle(1.0, 1.0).unwrap(), 4).unwrap();
        assert_eq!(g.cell_count(), 16);
        assert_eq!(g.inside_count(), 16);
        assert_eq!(g.h(), 0.25);
    }

    #[test]
    fn disk_mask_area_close_to_pi() {
        let g = discretize(Domain::UnitDisk, 64).unwrap();
        let area = g.inside_count() as f64 * g.h() * g.h();
        assert!((area - PI).abs() / PI < 0.05, "area {area}");
    }

    #[test]
    fn disjoint_blobs_rejected() {
        let mut cells = vec![false; 8 * 8];
        for iy in 1..3 {
            for ix in 1..3 {
                cells[iy * 8 + ix] = true;
            }
        }
        for iy in 5..7 {
            for ix in 5..7 {
                cells[iy * 8 + ix] = true;
            }
        }
        let bm = Bitmap::new(8, 8, cells).unwrap();
        let err = discretize(Domain::MaskedBitmap(bm), 16).unwrap_err();
        assert!(matches!(err, Error::MaskNotSimplyConnected(_)));
    }

    #[test]
    fn donut_mask_rejected() {
        let n = 12;
        let mut cells = vec![false; n * n];
        for iy in 2..10 {
            for ix in 2..10 {
                cells[iy * n + ix] = true;
            }
        }
        cells[5 * n + 5] = false; // hole
        let bm = Bitmap::new(n, n, cells).unwrap();
        let err = discretize(Domain::MaskedBitmap(bm), 16).unwrap_err();
        assert!(matches!(err, Error::MaskNotSimplyConnected(_)));
    }

    #[test]
    fn too_coarse_rejected() {
        let mut cells = vec![false; 8 * 8];
        for iy in 3..5 {
            for ix in 3..5 {
                cells[iy * 8 + ix] = true;
            }
        }
        let bm = Bitmap::new(8, 8, cells).unwrap();
        let err = discretize(Domain::MaskedBitmap(bm), 16).unwrap_err();
        assert!(matches!(err, Error::ResolutionTooCoarse(_)));
    }

    #[test]
    fn integrate_constant_on_rectangle() {
        let g = discretize(Domain::rectangle(2.0, 1.0).unwrap(), 32).unwrap();
        let f = ScalarField::from_fn(g, |_| 1.0).unwrap();
        assert!((f.integrate() - 2.0).abs() <= 1e-12);
    }

    #[test]
    fn integrate_zero_field() {
        let g = discretize(Domain::UnitDisk, 32).unwrap();
        let f = ScalarField::zeros(g);
        assert_eq!(f.integrate(), 0.0);
    }

    #[test]
    fn integrate_disk_area_within_2_percent() {
        let g = discretize(Domain::UnitDisk, 128).unwrap();
        let f = ScalarField::from_fn(g, |_| 1.0).unwrap();
        assert!((f.integrate() - PI).abs() / PI < 0.02);
    }

    #[test]
    fn disk_area_first_order_in_h() {
        let errs: Vec<f64> = [64usize, 128, 256]
            .iter()
            .map(|&n| {
                let g = discretize(Domain::UnitDisk, n).unwrap();
                (g.inside_count() as f64 * g.h() * g.h() - PI).abs()
            })
            .collect();
        // First-order boundary: refining n by 2 should cut the error
        // roughly in half; allow generous slack for mask jitter.
        assert!(errs[1] < 0.8 * errs[0] + 1e-4, "{errs:?}");
        assert!(errs[2] < 0.8 * errs[1] + 1e-4, "{errs:?}");
    }

    #[test]
    fn l1_identity_and_disjoint_supports() {
        let g = discretize(Domain::rectangle(1.0, 1.0).unwrap(), 16).unwrap();
        let lam = 3.0;
        let a = ScalarField::from_fn(g.clone(), |p| if p.x < 0.25 { lam } else { 0.0 }).unwrap();
        let b = ScalarField::from_fn(g.clone(), |p| if p.x > 0.75 { lam } else { 0.0 }).unwrap();
        assert_eq!(a.l1_distance(&a).unwrap(), 0.0);
        let na = a.support().len() as f64;
        let nb = b.support().len() as f64;
        let expect = lam * (na + nb) * g.h() * g.h();
        assert!((a.l1_distance(&b).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn l1_one_cell_translate_counts_symmetric_difference() {
        let g = discretize(Domain::rectangle(1.0, 1.0).unwrap(), 32).unwrap();
        let lam = 2.0;
        let sel = |ix: usize, iy: usize| (8..16).contains(&ix) && (8..16).contains(&iy);
        let mut a = ScalarField::zeros(g.clone());
        let mut b = ScalarField::zeros(g.clone());
        let mut sym_diff = 0usize;
        for iy in 0..g.ny() {
            for ix in 0..g.nx() {
                let in_a = sel(ix, iy);
                let in_b = ix > 0 && sel(ix - 1, iy);
                if in_a {
                    a.set_idx(g.index(ix, iy), lam);
                }
                if in_b {
                    b.set_idx(g.index(ix, iy), lam);
                }
                if in_a != in_b {
                    sym_diff += 1;
                }
            }
        }
        let expect = lam * sym_diff as f64 * g.h() * g.h();
        assert!((a.l1_distance(&b).unwrap() - expect).abs() < 1e-12);
    }

    #[test]
    fn grid_mismatch_detected() {
        let g1 = discretize(Domain::UnitDisk, 32).unwrap();
        let g2 = discretize(Domain::UnitDisk, 64).unwrap();
        let f = ScalarField::zeros(g1);
        let g = ScalarField::zeros(g2);
        assert!(matches!(f.l1_distance(&g), Err(Error::GridMismatch)));
    }

    #[test]
    fn ball_containment_margin() {
        let g = discretize(Domain::UnitDisk, 64).unwrap();
        let ok = Ball::new(Point::new(0.5, 0.0), 0.2).unwrap();
        assert!(ok.check_compactly_inside(&g, g.h()).is_ok());
        let bad = Ball::new(Point::new(0.85, 0.0), 0.2).unwrap();
        assert!(bad.check_compactly_inside(&g, g.h()).is_err());
    }

    #[test]
    fn bitmap_boundary_distance() {
        let n = 10;
        let cells = vec![true; n * n];
        let bm = Bitmap::new(n, n, cells).unwrap();
        let g = discretize(Domain::MaskedBitmap(bm), 10).unwrap();
        // 10x10 unit-size box; center is 0.5 from every side.
        let d = g.boundary_distance(Point::new(0.5, 0.5));
        assert!((d - 0.5).abs() < 1e-12, "{d}");
    }
}
