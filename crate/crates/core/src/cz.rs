//! Calderon-Zygmund decomposition at a height on the dyadic cubes of a torus.

use std::io::Write;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::grid::Grid;
use crate::norms::lp_norm;
use crate::scalar::Real;

/// Dyadic cube `corner + [0, side)^n` in lattice units.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Cube {
    pub corner: [usize; 3],
    pub side: usize,
}

impl Cube {
    /// Linear indices of the cube's points, in row-major order within the cube.
    pub fn indices<T: Real>(&self, grid: &Grid<T>) -> Vec<usize> {
        let dim = grid.dim();
        let total = self.side.pow(dim as u32);
        (0..total)
            .map(|mut local| {
                let mut idx = [0; 3];
                for axis in (0..dim).rev() {
                    idx[axis] = self.corner[axis] + local % self.side;
                    local /= self.side;
                }
                grid.linear_index(&idx[..dim])
                    .expect("cube lies inside the grid")
            })
            .collect()
    }

    pub fn side_length<T: Real>(&self, grid: &Grid<T>) -> T {
        T::from_count(self.side) * grid.spacing()
    }

    /// Half the side length.
    pub fn radius<T: Real>(&self, grid: &Grid<T>) -> T {
        self.side_length(grid) / T::lit(2.0)
    }

    pub fn measure<T: Real>(&self, grid: &Grid<T>) -> T {
        T::from_count(self.side.pow(grid.dim() as u32)) * grid.cell_measure()
    }

    /// The integer `k` with `2^k <= radius < 2^{k+1}`.
    pub fn scale<T: Real>(&self, grid: &Grid<T>) -> i32 {
        let r = self.radius(grid).to_f64_lossy();
        let mut k = r.log2().floor() as i32;
        while 2f64.powi(k + 1) <= r {
            k += 1;
        }
        while 2f64.powi(k) > r {
            k -= 1;
        }
        k
    }

    fn children(&self, dim: usize) -> impl Iterator<Item = Cube> + '_ {
        let half = self.side / 2;
        (0..1usize << dim).map(move |bits| {
            let mut corner = self.corner;
            for (axis, c) in corner.iter_mut().enumerate().take(dim) {
                if bits >> axis & 1 == 1 {
                    *c += half;
                }
            }
            Cube { corner, side: half }
        })
    }
}

/// `b_j = (f - avg_Q f) chi_Q`, stored on its cube only.
#[derive(Debug, Clone)]
pub struct BadPart<T: Real> {
    pub cube: Cube,
    /// Values at `cube.indices(grid)`, in that order.
    pub values: Vec<Complex<T>>,
    pub scale: i32,
}

impl<T: Real> BadPart<T> {
    pub fn to_field(&self, grid: &Grid<T>) -> Field<T> {
        let mut values = vec![Complex::default(); grid.len()];
        for (i, v) in self.cube.indices(grid).into_iter().zip(&self.values) {
            values[i] = *v;
        }
        Field::from_values(grid, values).expect("length matches grid")
    }

    pub fn integral(&self, grid: &Grid<T>) -> Complex<T> {
        self.values
            .iter()
            .fold(Complex::default(), |a, v| a + v)
            .scale(grid.cell_measure())
    }

    pub fn l1(&self, grid: &Grid<T>) -> T {
        self.values.iter().fold(T::zero(), |a, v| a + v.norm()) * grid.cell_measure()
    }
}

/// Constants measured by re-checking a decomposition from scratch.
#[derive(Debug, Clone, PartialEq)]
pub struct CzReport<T> {
    /// `max |f - g - sum b_j|`.
    pub reconstruction_error: T,
    /// `max_j |int b_j|`.
    pub max_mean: T,
    /// `||g||_inf / lambda`.
    pub c_good_sup: T,
    /// `lambda sum mu(Q_j) / ||f||_1`.
    pub c_measure: T,
    /// `||g||_2^2 / (lambda ||f||_1)`.
    pub c_good_l2: T,
    pub disjoint: bool,
    pub supported: bool,
    /// Largest number of `9/8`-dilated cubes containing a single point.
    pub dilate_overlap: usize,
    pub dim: usize,
}

impl<T: Real> CzReport<T> {
    /// Whether every property holds; `tol` bounds the reconstruction and
    /// mean-zero errors relative to `scale`.
    pub fn passes(&self, tol: T, scale: T) -> bool {
        let slack = T::one() + T::lit(1e-12);
        let two_n = T::from_count(1 << self.dim);
        self.reconstruction_error <= tol * scale
            && self.max_mean <= tol * scale
            && self.c_good_sup <= two_n * slack
            && self.c_measure <= slack
            && self.c_good_l2 <= T::lit(2.0) * two_n * slack
            && self.disjoint
            && self.supported
    }
}

#[derive(Debug, Clone)]
pub struct CzResult<T: Real> {
    pub height: T,
    pub good: Field<T>,
    pub bad: Vec<BadPart<T>>,
    /// Overlap constant of the selected cubes; dyadic cubes are disjoint.
    pub overlap_bound: usize,
    pub report: CzReport<T>,
}

fn mean_abs<T: Real>(values: &[Complex<T>], cells: &[usize]) -> T {
    cells.iter().fold(T::zero(), |a, &i| a + values[i].norm()) / T::from_count(cells.len())
}

/// Dyadic stopping time from the whole torus: select the maximal cubes with
/// `avg_Q |f| > lambda`; `g = avg_Q f` on them and `f` elsewhere.
pub fn decompose<T: Real>(f: &Field<T>, lambda: T) -> Result<CzResult<T>> {
    let grid = f.grid();
    let mean = lp_norm(f, T::one())? / grid.total_measure();
    if !(lambda > mean) {
        return Err(Error::HeightTooLow {
            height: lambda.to_f64_lossy(),
            mean: mean.to_f64_lossy(),
        });
    }
    let values = f.values();
    let mut good = values.to_vec();
    let mut bad = Vec::new();
    let mut stack = vec![Cube {
        corner: [0; 3],
        side: grid.points_per_axis(),
    }];
    while let Some(cube) = stack.pop() {
        let cells = cube.indices(grid);
        if mean_abs(values, &cells) > lambda {
            let avg = cells
                .iter()
                .fold(Complex::default(), |a, &i| a + values[i])
                .unscale(T::from_count(cells.len()));
            let local = cells.iter().map(|&i| values[i] - avg).collect();
            for &i in &cells {
                good[i] = avg;
            }
            bad.push(BadPart {
                cube,
                values: local,
                scale: cube.scale(grid),
            });
        } else if cube.side > 1 {
            stack.extend(cube.children(grid.dim()));
        }
    }
    bad.sort_by_key(|b| (b.cube.corner, b.cube.side));
    let good = Field::from_values(grid, good)?;
    let mut out = CzResult {
        height: lambda,
        good,
        bad,
        overlap_bound: 1,
        report: empty_report(grid.dim()),
    };
    out.report = verify_properties(&out, f)?;
    Ok(out)
}

fn empty_report<T: Real>(dim: usize) -> CzReport<T> {
    CzReport {
        reconstruction_error: T::zero(),
        max_mean: T::zero(),
        c_good_sup: T::zero(),
        c_measure: T::zero(),
        c_good_l2: T::zero(),
        disjoint: true,
        supported: true,
        dilate_overlap: 0,
        dim,
    }
}

/// Recomputes every property of a decomposition of `f` from its parts.
pub fn verify_properties<T: Real>(r: &CzResult<T>, f: &Field<T>) -> Result<CzReport<T>> {
    let grid = f.grid();
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let mut sum = r.good.clone();
    let mut cover = vec![0usize; grid.len()];
    let mut supported = true;
    let mut max_mean = T::zero();
    let mut total_measure = T::zero();
    for b in &r.bad {
        supported &= (0..dim).all(|a| b.cube.corner[a] + b.cube.side <= n)
            && b.values.len() == b.cube.side.pow(dim as u32);
        let full = b.to_field(grid);
        max_mean = max_mean.max(
            full.inner(&Field::constant(grid, Complex::new(T::one(), T::zero())))?
                .norm(),
        );
        sum = sum.add(&full)?;
        for i in b.cube.indices(grid) {
            cover[i] += 1;
        }
        total_measure += b.cube.measure(grid);
    }
    let reconstruction_error = sum
        .values()
        .iter()
        .zip(f.values())
        .fold(T::zero(), |a, (x, y)| a.max((x - y).norm()));
    let l1 = lp_norm(f, T::one())?;
    let g_sup = lp_norm(&r.good, T::infinity())?;
    let g_l2 = lp_norm(&r.good, T::lit(2.0))?;
    let safe_l1 = if l1 > T::zero() { l1 } else { T::one() };
    Ok(CzReport {
        reconstruction_error,
        max_mean,
        c_good_sup: g_sup / r.height,
        c_measure: r.height * total_measure / safe_l1,
        c_good_l2: g_l2 * g_l2 / (r.height * safe_l1),
        disjoint: cover.iter().all(|&c| c <= 1),
        supported,
        dilate_overlap: dilate_overlap(r, grid),
        dim,
    })
}

/// Largest number of `9/8`-dilates of the selected cubes (same centre,
/// wrapped around the torus) that contain one lattice point.
pub fn dilate_overlap<T: Real>(r: &CzResult<T>, grid: &Grid<T>) -> usize {
    let n = grid.points_per_axis();
    let dim = grid.dim();
    let mut count = vec![0usize; grid.len()];
    for b in &r.bad {
        // Work in units of 1/16 cell so that centres and half-widths are integers.
        let half = 9 * b.cube.side;
        let reach = half.div_ceil(16) + 1;
        let mut per_axis: Vec<Vec<usize>> = Vec::with_capacity(dim);
        for axis in 0..dim {
            let centre16 = 16 * b.cube.corner[axis] + 8 * b.cube.side;
            let lo = b.cube.corner[axis] as isize + (b.cube.side as isize) / 2 - reach as isize;
            let hi = lo + 2 * reach as isize + 1;
            let mut hits: Vec<usize> = (lo..=hi)
                .filter(|&i| (16 * i - centre16 as isize).unsigned_abs() < half)
                .map(|i| i.rem_euclid(n as isize) as usize)
                .collect();
            hits.sort_unstable();
            hits.dedup();
            per_axis.push(hits);
        }
        let mut idx = [0usize; 3];
        let mut stack = vec![(0usize, 0usize)];
        // Cartesian product of the per-axis hits.
        while let Some((axis, lin)) = stack.pop() {
            if axis == dim {
                count[lin] += 1;
                continue;
            }
            for &i in &per_axis[axis] {
                idx[axis] = i;
                stack.push((axis + 1, lin * n + i));
            }
        }
    }
    count.into_iter().max().unwrap_or(0)
}

impl<T: Real> CzResult<T> {
    /// `(h1, h2)`: sums of the bad parts with scale `<= k0` and `> k0`.
    pub fn split_scales(&self, k0: i32) -> (Field<T>, Field<T>) {
        let grid = self.good.grid();
        let mut h1 = vec![Complex::default(); grid.len()];
        let mut h2 = vec![Complex::default(); grid.len()];
        for b in &self.bad {
            let target = if b.scale <= k0 { &mut h1 } else { &mut h2 };
            for (i, v) in b.cube.indices(grid).into_iter().zip(&b.values) {
                target[i] += *v;
            }
        }
        (
            Field::from_values(grid, h1).expect("length matches grid"),
            Field::from_values(grid, h2).expect("length matches grid"),
        )
    }

    pub fn total_bad_measure(&self) -> T {
        let grid = self.good.grid();
        self.bad
            .iter()
            .fold(T::zero(), |a, b| a + b.cube.measure(grid))
    }

    /// Cube table with columns `k, corner, side, mass`; the corner is written
    /// as space-separated lattice indices and `mass = ||b_j||_1`.
    pub fn write_cube_csv<W: Write>(&self, w: W) -> Result<()> {
        let grid = self.good.grid();
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["k", "corner", "side", "mass"])?;
        for b in &self.bad {
            let corner: Vec<String> = b.cube.corner[..grid.dim()]
                .iter()
                .map(|c| c.to_string())
                .collect();
            out.write_record([
                b.scale.to_string(),
                corner.join(" "),
                b.cube.side_length(grid).to_string(),
                b.l1(grid).to_string(),
            ])?;
        }
        out.flush()?;
        Ok(())
    }
}
