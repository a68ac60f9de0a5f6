//! Discrete periodic tori: the metric measure spaces every operator acts on.

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Measured doubling constants of a grid over a range of radii.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DoublingReport<T> {
    /// Smallest `C` with `V(x, 2r) <= C V(x, r)` over the scanned radii.
    pub c_doub: T,
    /// Smallest `n` with `V(x, s r) <= s^n V(x, r)` for `s` in {2, 4, 8}.
    pub n_exp: T,
    /// Exponent of the comparison between balls of equal radius; equals
    /// `n_exp` on a homogeneous torus.
    pub d_exp: T,
    pub r_min: T,
    pub r_max: T,
}

/// A flat `n`-dimensional torus sampled with `N` points per axis.
///
/// Points are addressed either by multi-index (one entry per axis) or by
/// row-major linear index, axis 0 varying slowest.
#[derive(Debug, Clone)]
pub struct Grid<T> {
    dim: usize,
    points: usize,
    box_length: T,
    spacing: T,
    doubling: Option<DoublingReport<T>>,
}

impl<T: Real> PartialEq for Grid<T> {
    fn eq(&self, other: &Self) -> bool {
        self.same_lattice(other)
    }
}

impl<T: Real> Grid<T> {
    pub fn new(dim: usize, points: usize, box_length: T) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::BadDimension(dim));
        }
        if points < 8 || !points.is_power_of_two() {
            return Err(Error::BadResolution(points));
        }
        if !(box_length > T::zero()) || !box_length.is_finite() {
            return Err(Error::BadBoxLength(box_length.to_f64_lossy()));
        }
        Ok(Self {
            dim,
            points,
            box_length,
            spacing: box_length / T::from_count(points),
            doubling: None,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn points_per_axis(&self) -> usize {
        self.points
    }

    pub fn box_length(&self) -> T {
        self.box_length
    }

    pub fn spacing(&self) -> T {
        self.spacing
    }

    /// Total number of lattice points, `N^n`.
    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Measure of a single cell, `h^n`.
    pub fn cell_measure(&self) -> T {
        self.spacing.powi(self.dim as i32)
    }

    /// `mu(X) = L^n`.
    pub fn total_measure(&self) -> T {
        self.box_length.powi(self.dim as i32)
    }

    /// Largest torus distance between two lattice points.
    pub fn diameter(&self) -> T {
        T::from_count(self.points / 2) * self.spacing * T::from_count(self.dim).sqrt()
    }

    pub fn doubling_report(&self) -> Option<&DoublingReport<T>> {
        self.doubling.as_ref()
    }

    /// True when both grids describe the same lattice (dimension, resolution
    /// and box length); cached reports are ignored.
    pub fn same_lattice(&self, other: &Self) -> bool {
        self.dim == other.dim && self.points == other.points && self.box_length == other.box_length
    }

    pub fn linear_index(&self, index: &[usize]) -> Result<usize> {
        if index.len() != self.dim || index.iter().any(|&i| i >= self.points) {
            return Err(Error::IndexOutOfRange {
                index: index.to_vec(),
                dim: self.dim,
                points: self.points,
            });
        }
        Ok(index.iter().fold(0, |acc, &i| acc * self.points + i))
    }

    /// Multi-index of a linear index; unused trailing axes are zero.
    pub fn multi_index(&self, mut linear: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dim).rev() {
            out[axis] = linear % self.points;
            linear /= self.points;
        }
        out
    }

    /// Per-axis lattice offset with wraparound, `min(|a-b|, N-|a-b|)`.
    #[inline]
    pub fn wrapped_offset(&self, a: usize, b: usize) -> usize {
        let d = a.abs_diff(b);
        d.min(self.points - d)
    }

    /// Squared wrapped lattice offset between two linear indices, in units of `h^2`.
    pub fn offset_squared(&self, a: usize, b: usize) -> u64 {
        let (ia, ib) = (self.multi_index(a), self.multi_index(b));
        (0..self.dim)
            .map(|axis| {
                let d = self.wrapped_offset(ia[axis], ib[axis]) as u64;
                d * d
            })
            .sum()
    }

    pub fn torus_distance(&self, i: &[usize], j: &[usize]) -> Result<T> {
        let a = self.linear_index(i)?;
        let b = self.linear_index(j)?;
        Ok(self.distance_linear(a, b))
    }

    pub fn distance_linear(&self, a: usize, b: usize) -> T {
        T::from_count(self.offset_squared(a, b) as usize).sqrt() * self.spacing
    }

    /// Torus distance from `source` to every lattice point, in linear order.
    pub fn distances_from(&self, source: usize) -> Vec<T> {
        let src = self.multi_index(source);
        let axis_sq: Vec<Vec<u64>> = (0..self.dim)
            .map(|axis| {
                (0..self.points)
                    .map(|i| {
                        let d = self.wrapped_offset(i, src[axis]) as u64;
                        d * d
                    })
                    .collect()
            })
            .collect();
        (0..self.len())
            .map(|lin| {
                let idx = self.multi_index(lin);
                let sq: u64 = (0..self.dim).map(|axis| axis_sq[axis][idx[axis]]).sum();
                T::from_count(sq as usize).sqrt() * self.spacing
            })
            .collect()
    }

    /// `V(x, r) = mu(B(x, r))` for the open ball `d(x, j) < r`.
    pub fn ball_volume(&self, center: &[usize], r: T) -> Result<T> {
        if !(r > T::zero()) {
            return Err(invalid("r", "ball radius must be positive"));
        }
        let c = self.linear_index(center)?;
        let count = self
            .distances_from(c)
            .into_iter()
            .filter(|&d| d < r)
            .count();
        Ok(T::from_count(count) * self.cell_measure())
    }

    /// Sorted squared lattice offsets from a point to every point, in units of `h^2`.
    fn sorted_offsets(&self) -> Vec<u64> {
        let mut sq: Vec<u64> = (0..self.len())
            .map(|lin| self.offset_squared(0, lin))
            .collect();
        sq.sort_unstable();
        sq
    }

    fn closed_count(sorted: &[u64], r_over_h: f64) -> usize {
        let limit = r_over_h * r_over_h * (1.0 + 1e-12);
        sorted.partition_point(|&q| (q as f64) <= limit)
    }

    /// Measured doubling constants over dyadic radii `2h, 4h, ...` capped at `L/8`.
    pub fn measure_doubling(&self) -> DoublingReport<T> {
        let cap = self.box_length / T::lit(8.0);
        let start = (self.spacing * T::lit(2.0)).min(cap);
        self.measure_doubling_over(start, cap)
    }

    /// Measured doubling constants over dyadic radii `r_min * 2^j <= r_max`.
    ///
    /// Volumes are those of closed balls: at radii that are exact lattice
    /// multiples the open ball drops the whole boundary shell, which
    /// inflates the small-radius ratios without reflecting any geometry.
    pub fn measure_doubling_over(&self, r_min: T, r_max: T) -> DoublingReport<T> {
        let sorted = self.sorted_offsets();
        let h = self.spacing.to_f64_lossy();
        let volume = |r: f64| Self::closed_count(&sorted, r / h) as f64;
        let mut c_doub: f64 = 1.0;
        let mut n_exp: f64 = 0.0;
        let mut r = r_min.to_f64_lossy();
        let r_max = r_max.to_f64_lossy();
        while r <= r_max * (1.0 + 1e-12) {
            let base = volume(r);
            for s in [2.0_f64, 4.0, 8.0] {
                let ratio = volume(s * r) / base;
                if s == 2.0 {
                    c_doub = c_doub.max(ratio);
                }
                n_exp = n_exp.max(ratio.ln() / s.ln());
            }
            r *= 2.0;
        }
        DoublingReport {
            c_doub: T::lit(c_doub),
            n_exp: T::lit(n_exp),
            d_exp: T::lit(n_exp),
            r_min,
            r_max: T::lit(r_max),
        }
    }

    /// Returns the grid with its doubling report measured and cached.
    pub fn with_doubling_report(mut self) -> Self {
        self.doubling = Some(self.measure_doubling());
        self
    }

    /// Signed mode number `k in [-N/2, N/2)` of an FFT-ordered index.
    #[inline]
    pub fn signed_mode(&self, k: usize) -> isize {
        if k < self.points / 2 {
            k as isize
        } else {
            k as isize - self.points as isize
        }
    }

    /// Angular frequency `2 pi k / L` of an FFT-ordered index along one axis.
    #[inline]
    pub fn frequency(&self, k: usize) -> T {
        T::lit(2.0) * T::PI() * T::lit(self.signed_mode(k) as f64) / self.box_length
    }

    /// `|xi|^2` for every FFT-ordered frequency index, in linear order.
    pub fn frequency_norms_squared(&self) -> Vec<T> {
        let axis: Vec<T> = (0..self.points)
            .map(|k| self.frequency(k).powi(2))
            .collect();
        (0..self.len())
            .map(|lin| {
                let idx = self.multi_index(lin);
                (0..self.dim).fold(T::zero(), |acc, a| acc + axis[idx[a]])
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn construction_and_measure() {
        let g = Grid::<f64>::new(1, 16, 16.0).unwrap();
        assert_eq!(g.spacing(), 1.0);
        assert_eq!(g.total_measure(), 16.0);
        let g = Grid::<f64>::new(2, 8, 4.0).unwrap();
        assert_eq!(g.spacing(), 0.5);
        assert_eq!(g.total_measure(), 16.0);
        assert!((g.spacing() * 8.0 - 4.0).abs() <= f64::EPSILON * 4.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(
            Grid::<f64>::new(1, 12, 1.0),
            Err(Error::BadResolution(12))
        ));
        assert!(matches!(
            Grid::<f64>::new(1, 4, 1.0),
            Err(Error::BadResolution(4))
        ));
        assert!(matches!(
            Grid::<f64>::new(4, 8, 1.0),
            Err(Error::BadDimension(4))
        ));
        assert!(matches!(
            Grid::<f64>::new(0, 8, 1.0),
            Err(Error::BadDimension(0))
        ));
        assert!(Grid::<f64>::new(1, 8, 0.0).is_err());
        assert!(Grid::<f64>::new(1, 8, f64::NAN).is_err());
    }

    #[test]
    fn wraparound_distances() {
        let g = Grid::<f64>::new(1, 16, 16.0).unwrap();
        assert_eq!(g.torus_distance(&[0], &[15]).unwrap(), 1.0);
        assert_eq!(g.torus_distance(&[0], &[8]).unwrap(), 8.0);
        assert!(g.torus_distance(&[0], &[16]).is_err());

        // Oracle: enumerate both wrap choices per axis and keep the shorter.
        let g = Grid::<f64>::new(2, 8, 4.0).unwrap();
        let per_axis = |a: i64, b: i64| {
            let direct = (a - b).abs();
            let wrapped = 8 - direct;
            (direct.min(wrapped) as f64) * 0.5
        };
        let expected = (per_axis(0, 7).powi(2) + per_axis(0, 4).powi(2)).sqrt();
        assert_eq!(expected, (0.25f64 + 4.0).sqrt());
        assert_eq!(g.torus_distance(&[0, 0], &[7, 4]).unwrap(), expected);
    }

    #[test]
    fn metric_axioms_exhaustive_small_grid() {
        let g = Grid::<f64>::new(2, 8, 3.0).unwrap();
        let n = g.len();
        let d: Vec<Vec<f64>> = (0..n).map(|a| g.distances_from(a)).collect();
        for a in 0..n {
            assert_eq!(d[a][a], 0.0);
            for b in 0..n {
                assert_eq!(d[a][b], d[b][a]);
                assert_eq!(d[a][b], g.distance_linear(a, b));
                for c in 0..n {
                    assert!(d[a][c] <= d[a][b] + d[b][c] + 1e-12);
                }
            }
        }
    }

    #[test]
    fn ball_volumes() {
        let g = Grid::<f64>::new(1, 16, 16.0).unwrap();
        assert_eq!(g.ball_volume(&[3], 1.5).unwrap(), 3.0);
        assert_eq!(g.ball_volume(&[3], 100.0).unwrap(), g.total_measure());
        assert!(g.ball_volume(&[3], 0.0).is_err());

        // Oracle: brute-force lattice points strictly inside a disk of radius 2.5.
        let g = Grid::<f64>::new(2, 16, 16.0).unwrap();
        let mut count = 0;
        for x in -3i64..=3 {
            for y in -3i64..=3 {
                if ((x * x + y * y) as f64) < 6.25 {
                    count += 1;
                }
            }
        }
        assert_eq!(count, 21);
        assert_eq!(g.ball_volume(&[5, 9], 2.5).unwrap(), count as f64);
    }

    #[test]
    fn ball_volume_independent_of_center() {
        let g = Grid::<f64>::new(2, 16, 5.0).unwrap();
        let reference = g.ball_volume(&[0, 0], 1.3).unwrap();
        for c in [
            [1, 2],
            [15, 15],
            [7, 3],
            [8, 8],
            [0, 11],
            [4, 4],
            [13, 2],
            [9, 14],
            [6, 6],
            [2, 12],
        ] {
            assert_eq!(g.ball_volume(&c, 1.3).unwrap(), reference);
        }
    }

    #[test]
    fn doubling_constants() {
        let g = Grid::<f64>::new(1, 256, 256.0).unwrap();
        let below_quarter = g.measure_doubling_over(2.0, 64.0);
        assert!(below_quarter.n_exp <= 1.0 + 1e-9, "{below_quarter:?}");
        let rep = g.measure_doubling();
        assert!(rep.n_exp <= 1.2);
        assert_eq!(rep.d_exp, rep.n_exp);

        // Oracle: closed lattice-disk counts by brute force at radii 2..16.
        let disk = |r: i64| {
            let mut c = 0usize;
            for x in -r..=r {
                for y in -r..=r {
                    c += usize::from(x * x + y * y <= r * r);
                }
            }
            c as f64
        };
        assert_eq!(disk(2), 13.0);
        let expected = [2, 4, 8]
            .iter()
            .map(|&r| disk(2 * r) / disk(r))
            .fold(1.0f64, f64::max);
        let g = Grid::<f64>::new(2, 64, 64.0).unwrap();
        let rep = g.measure_doubling();
        assert!((rep.c_doub - expected).abs() < 1e-12, "{rep:?}");
        assert!(rep.c_doub <= 4.5);
        assert!(rep.n_exp <= 2.2);

        let saturated = g.measure_doubling_over(64.0, 128.0);
        assert_eq!(saturated.c_doub, 1.0);

        let g = g.with_doubling_report();
        assert!(g.doubling_report().is_some());
    }

    #[test]
    fn frequencies() {
        let g = Grid::<f64>::new(1, 8, 2.0 * std::f64::consts::PI).unwrap();
        let ks: Vec<f64> = (0..8).map(|k| g.frequency(k)).collect();
        assert_eq!(ks, vec![0.0, 1.0, 2.0, 3.0, -4.0, -3.0, -2.0, -1.0]);
    }

    #[test]
    fn single_precision_grid() {
        let g = Grid::<f32>::new(3, 8, 2.0).unwrap();
        assert_eq!(g.len(), 512);
        assert_eq!(
            g.torus_distance(&[0, 0, 0], &[7, 7, 7]).unwrap(),
            3f32.sqrt() * 0.25
        );
    }
}
