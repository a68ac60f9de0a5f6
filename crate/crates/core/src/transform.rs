//! Multi-dimensional FFTs over a grid, with the unitary normalization used
//! throughout: `f^ = (h / sqrt(2 pi))^n FFT(f)` and its exact inverse.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex;
use rustfft::{Fft, FftPlanner};

use crate::grid::Grid;
use crate::scalar::Real;

/// Cached one-dimensional plans reused along every axis.
#[derive(Clone)]
pub struct FftPlan<T: Real> {
    dim: usize,
    points: usize,
    forward: Arc<dyn Fft<T>>,
    inverse: Arc<dyn Fft<T>>,
    forward_scale: T,
    inverse_scale: T,
}

impl<T: Real> fmt::Debug for FftPlan<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("FftPlan")
            .field("dim", &self.dim)
            .field("points", &self.points)
            .finish()
    }
}

impl<T: Real> FftPlan<T> {
    pub fn new(grid: &Grid<T>) -> Self {
        let mut planner = FftPlanner::new();
        let points = grid.points_per_axis();
        let root_two_pi = (T::lit(2.0) * T::PI()).sqrt();
        let n = grid.dim() as i32;
        Self {
            dim: grid.dim(),
            points,
            forward: planner.plan_fft_forward(points),
            inverse: planner.plan_fft_inverse(points),
            forward_scale: (grid.spacing() / root_two_pi).powi(n),
            inverse_scale: (root_two_pi / grid.box_length()).powi(n),
        }
    }

    pub fn len(&self) -> usize {
        self.points.pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn run(&self, fft: &Arc<dyn Fft<T>>, data: &mut [Complex<T>]) {
        assert_eq!(data.len(), self.len(), "buffer does not match the plan");
        let n = self.points;
        let mut scratch = vec![Complex::default(); fft.get_inplace_scratch_len()];
        // Last axis is contiguous.
        for line in data.chunks_exact_mut(n) {
            fft.process_with_scratch(line, &mut scratch);
        }
        let mut line = vec![Complex::default(); n];
        for axis in 0..self.dim.saturating_sub(1) {
            let stride = n.pow((self.dim - 1 - axis) as u32);
            let block = stride * n;
            for base in (0..data.len()).step_by(block) {
                for offset in 0..stride {
                    let start = base + offset;
                    for (i, v) in line.iter_mut().enumerate() {
                        *v = data[start + i * stride];
                    }
                    fft.process_with_scratch(&mut line, &mut scratch);
                    for (i, v) in line.iter().enumerate() {
                        data[start + i * stride] = *v;
                    }
                }
            }
        }
    }

    /// Unnormalized forward DFT, `sum_j f_j e^{-2 pi i jk/N}` per axis.
    pub fn forward_raw(&self, data: &mut [Complex<T>]) {
        self.run(&self.forward, data);
    }

    /// Unnormalized inverse DFT, `sum_k c_k e^{+2 pi i jk/N}` per axis.
    pub fn inverse_raw(&self, data: &mut [Complex<T>]) {
        self.run(&self.inverse, data);
    }

    /// Physical samples to unitary Fourier coefficients.
    pub fn forward(&self, data: &mut [Complex<T>]) {
        self.forward_raw(data);
        for v in data.iter_mut() {
            *v = v.scale(self.forward_scale);
        }
    }

    /// Unitary Fourier coefficients back to physical samples.
    pub fn inverse(&self, data: &mut [Complex<T>]) {
        self.inverse_raw(data);
        for v in data.iter_mut() {
            *v = v.scale(self.inverse_scale);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn naive_dft(grid: &Grid<f64>, data: &[Complex<f64>]) -> Vec<Complex<f64>> {
        let n = grid.points_per_axis() as f64;
        (0..grid.len())
            .map(|k| {
                let ki = grid.multi_index(k);
                (0..grid.len())
                    .map(|j| {
                        let ji = grid.multi_index(j);
                        let phase: f64 =
                            (0..grid.dim()).map(|a| (ki[a] * ji[a]) as f64).sum::<f64>()
                                * -2.0
                                * std::f64::consts::PI
                                / n;
                        data[j] * Complex::from_polar(1.0, phase)
                    })
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_naive_dft_in_every_dimension() {
        for dim in 1..=3 {
            let g = Grid::<f64>::new(dim, 8, 3.0).unwrap();
            let data: Vec<Complex<f64>> = (0..g.len())
                .map(|j| Complex::new((j as f64 * 0.37).sin(), (j as f64 * 0.11).cos()))
                .collect();
            let mut fast = data.clone();
            let plan = FftPlan::new(&g);
            plan.forward_raw(&mut fast);
            for (a, b) in fast.iter().zip(naive_dft(&g, &data)) {
                assert!((a - b).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn unitary_round_trip_and_plancherel() {
        let g = Grid::<f64>::new(2, 16, 7.0).unwrap();
        let plan = FftPlan::new(&g);
        let data: Vec<Complex<f64>> = (0..g.len())
            .map(|j| Complex::new(((j * 7) % 13) as f64 - 6.0, ((j * 3) % 5) as f64))
            .collect();
        let mut spec = data.clone();
        plan.forward(&mut spec);
        let phys: f64 = data.iter().map(|v| v.norm_sqr()).sum::<f64>() * g.cell_measure();
        let freq: f64 = spec.iter().map(|v| v.norm_sqr()).sum::<f64>()
            * (2.0 * std::f64::consts::PI / 7.0).powi(2);
        assert!((phys - freq).abs() < 1e-10 * phys);
        plan.inverse(&mut spec);
        for (a, b) in spec.iter().zip(&data) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn gaussian_transform_matches_closed_form() {
        // exp(-x^2/2) is its own unitary transform.
        let g = Grid::<f64>::new(1, 256, 40.0).unwrap();
        let plan = FftPlan::new(&g);
        let mut data: Vec<Complex<f64>> = (0..256)
            .map(|j| {
                let x = g.signed_mode(j) as f64 * g.spacing();
                Complex::new((-x * x / 2.0).exp(), 0.0)
            })
            .collect();
        plan.forward(&mut data);
        for (k, v) in data.iter().enumerate() {
            let xi = g.frequency(k);
            assert!((v.re - (-xi * xi / 2.0).exp()).abs() < 1e-12);
            assert!(v.im.abs() < 1e-12);
        }
    }
}
