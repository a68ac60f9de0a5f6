//! Complex fields sampled on a grid, optional subdomain masks, and their
//! serialization.

use std::io::{Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::scalar::Real;
use crate::transform::FftPlan;

/// Which side of the unitary transform a field's samples live on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Space {
    Physical,
    Frequency,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Inverse,
}

/// Indicator of a subdomain of the torus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    dim: usize,
    points: usize,
    inside: Vec<bool>,
    indices: Vec<usize>,
}

impl Mask {
    pub fn new<T: Real>(grid: &Grid<T>, inside: Vec<bool>) -> Result<Self> {
        if inside.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: inside.len(),
            });
        }
        let indices: Vec<usize> = inside
            .iter()
            .enumerate()
            .filter_map(|(i, &b)| b.then_some(i))
            .collect();
        if indices.is_empty() {
            return Err(Error::EmptyMask);
        }
        Ok(Self {
            dim: grid.dim(),
            points: grid.points_per_axis(),
            inside,
            indices,
        })
    }

    pub fn from_fn<T: Real>(grid: &Grid<T>, mut f: impl FnMut(&[usize]) -> bool) -> Result<Self> {
        let inside = (0..grid.len())
            .map(|lin| f(&grid.multi_index(lin)[..grid.dim()]))
            .collect();
        Self::new(grid, inside)
    }

    pub fn contains(&self, linear: usize) -> bool {
        self.inside.get(linear).copied().unwrap_or(false)
    }

    /// Linear indices of interior points, ascending.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn count(&self) -> usize {
        self.indices.len()
    }

    pub fn fits<T: Real>(&self, grid: &Grid<T>) -> bool {
        self.dim == grid.dim() && self.points == grid.points_per_axis()
    }
}

/// Complex samples on every lattice point of a grid.
#[derive(Debug, Clone)]
pub struct Field<T: Real> {
    grid: Grid<T>,
    values: Vec<Complex<T>>,
    mask: Option<Arc<Mask>>,
    space: Space,
}

impl<T: Real> Field<T> {
    pub fn zeros(grid: &Grid<T>) -> Self {
        Self {
            grid: grid.clone(),
            values: vec![Complex::default(); grid.len()],
            mask: None,
            space: Space::Physical,
        }
    }

    pub fn constant(grid: &Grid<T>, c: Complex<T>) -> Self {
        Self {
            values: vec![c; grid.len()],
            ..Self::zeros(grid)
        }
    }

    pub fn from_values(grid: &Grid<T>, values: Vec<Complex<T>>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: values.len(),
            });
        }
        Ok(Self {
            values,
            ..Self::zeros(grid)
        })
    }

    pub fn from_real(grid: &Grid<T>, values: &[T]) -> Result<Self> {
        Self::from_values(
            grid,
            values.iter().map(|&v| Complex::new(v, T::zero())).collect(),
        )
    }

    pub fn from_fn(grid: &Grid<T>, mut f: impl FnMut(&[usize]) -> Complex<T>) -> Self {
        let values = (0..grid.len())
            .map(|lin| f(&grid.multi_index(lin)[..grid.dim()]))
            .collect();
        Self {
            values,
            ..Self::zeros(grid)
        }
    }

    /// Discrete approximation of the Dirac mass at a lattice point: `h^{-n}`
    /// there, zero elsewhere, so that its integral is one.
    pub fn delta(grid: &Grid<T>, index: &[usize]) -> Result<Self> {
        let lin = grid.linear_index(index)?;
        let mut out = Self::zeros(grid);
        out.values[lin] = Complex::new(grid.cell_measure().recip(), T::zero());
        Ok(out)
    }

    /// Restricts the field to a subdomain, zeroing every exterior sample.
    pub fn with_mask(mut self, mask: Arc<Mask>) -> Result<Self> {
        if !mask.fits(&self.grid) {
            return Err(Error::MaskMismatch);
        }
        for (i, v) in self.values.iter_mut().enumerate() {
            if !mask.contains(i) {
                *v = Complex::default();
            }
        }
        self.mask = Some(mask);
        Ok(self)
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    pub fn into_values(self) -> Vec<Complex<T>> {
        self.values
    }

    pub fn mask(&self) -> Option<&Arc<Mask>> {
        self.mask.as_ref()
    }

    pub fn space(&self) -> Space {
        self.space
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Quadrature weight of one sample: `h^n` in physical space and
    /// `(2 pi / L)^n` in frequency space.
    pub fn measure_weight(&self) -> T {
        match self.space {
            Space::Physical => self.grid.cell_measure(),
            Space::Frequency => {
                (T::lit(2.0) * T::PI() / self.grid.box_length()).powi(self.grid.dim() as i32)
            }
        }
    }

    pub fn real_parts(&self) -> Vec<T> {
        self.values.iter().map(|v| v.re).collect()
    }

    pub fn magnitudes(&self) -> Vec<T> {
        self.values.iter().map(|v| v.norm()).collect()
    }

    fn check_compatible(&self, other: &Self) -> Result<()> {
        if !self.grid.same_lattice(&other.grid) {
            return Err(Error::GridMismatch);
        }
        if self.space != other.space {
            return Err(Error::WrongSpace {
                expected: self.space,
            });
        }
        Ok(())
    }

    /// Pointwise map keeping grid, space and mask.
    pub fn map(&self, mut f: impl FnMut(Complex<T>) -> Complex<T>) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = f(*v);
        }
        out.reapply_mask();
        out
    }

    pub fn scale(&self, c: T) -> Self {
        self.map(|v| v.scale(c))
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a + b)
    }

    pub fn sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a - b)
    }

    pub fn zip_with(
        &self,
        other: &Self,
        f: impl Fn(Complex<T>, Complex<T>) -> Complex<T>,
    ) -> Result<Self> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (a, b) in out.values.iter_mut().zip(&other.values) {
            *a = f(*a, *b);
        }
        out.reapply_mask();
        Ok(out)
    }

    fn reapply_mask(&mut self) {
        if let Some(mask) = &self.mask {
            for (i, v) in self.values.iter_mut().enumerate() {
                if !mask.contains(i) {
                    *v = Complex::default();
                }
            }
        }
    }

    /// `<f, g> = sum f conj(g) w` with the weight of the current space.
    pub fn inner(&self, other: &Self) -> Result<Complex<T>> {
        self.check_compatible(other)?;
        let sum: Complex<T> = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a * b.conj())
            .fold(Complex::default(), |acc, v| acc + v);
        Ok(sum.scale(self.measure_weight()))
    }

    /// Unitary Fourier transform in the requested direction.
    ///
    /// Masked fields are not periodic objects and are rejected; extend them
    /// by zero first.
    pub fn spectral_transform(&self, direction: Direction) -> Result<Self> {
        self.spectral_transform_with(&FftPlan::new(&self.grid), direction)
    }

    pub fn spectral_transform_with(&self, plan: &FftPlan<T>, direction: Direction) -> Result<Self> {
        if self.mask.is_some() {
            return Err(Error::MaskedTransform);
        }
        let (expected, target) = match direction {
            Direction::Forward => (Space::Physical, Space::Frequency),
            Direction::Inverse => (Space::Frequency, Space::Physical),
        };
        if self.space != expected {
            return Err(Error::WrongSpace { expected });
        }
        let mut values = self.values.clone();
        match direction {
            Direction::Forward => plan.forward(&mut values),
            Direction::Inverse => plan.inverse(&mut values),
        }
        Ok(Self {
            grid: self.grid.clone(),
            values,
            mask: None,
            space: target,
        })
    }

    /// Drops the mask, keeping the (already zero) exterior samples.
    pub fn unmasked(mut self) -> Self {
        self.mask = None;
        self
    }

    /// Binary layout, little endian: `u32 n`, `u32 N`, `f64 L`, then
    /// `(re, im)` pairs of `f64` in linear order.
    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(&(self.grid.dim() as u32).to_le_bytes())?;
        w.write_all(&(self.grid.points_per_axis() as u32).to_le_bytes())?;
        w.write_all(&self.grid.box_length().to_f64_lossy().to_le_bytes())?;
        for v in &self.values {
            w.write_all(&v.re.to_f64_lossy().to_le_bytes())?;
            w.write_all(&v.im.to_f64_lossy().to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R) -> Result<Self> {
        let mut u = [0u8; 4];
        let mut f = [0u8; 8];
        r.read_exact(&mut u)?;
        let dim = u32::from_le_bytes(u) as usize;
        r.read_exact(&mut u)?;
        let points = u32::from_le_bytes(u) as usize;
        r.read_exact(&mut f)?;
        let grid = Grid::new(dim, points, T::lit(f64::from_le_bytes(f)))?;
        let mut values = Vec::with_capacity(grid.len());
        for _ in 0..grid.len() {
            r.read_exact(&mut f)?;
            let re = T::lit(f64::from_le_bytes(f));
            r.read_exact(&mut f)?;
            let im = T::lit(f64::from_le_bytes(f));
            values.push(Complex::new(re, im));
        }
        Self::from_values(&grid, values)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_binary(std::io::BufWriter::new(file))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let file = std::fs::File::open(path)?;
        Self::read_binary(std::io::BufReader::new(file))
    }

    /// CSV with one row per sample: axis indices, then `re,im`.
    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        let axes = ["i", "j", "k"];
        let mut header: Vec<&str> = axes[..self.grid.dim()].to_vec();
        header.extend(["re", "im"]);
        out.write_record(&header)?;
        for (lin, v) in self.values.iter().enumerate() {
            let idx = self.grid.multi_index(lin);
            let mut row: Vec<String> = idx[..self.grid.dim()]
                .iter()
                .map(|i| i.to_string())
                .collect();
            row.push(v.re.to_string());
            row.push(v.im.to_string());
            out.write_record(&row)?;
        }
        out.flush()?;
        Ok(())
    }
}

/// Samples carried only on the interior points of a mask.
#[derive(Debug, Clone)]
pub struct SubdomainField<T: Real> {
    grid: Grid<T>,
    mask: Arc<Mask>,
    values: Vec<Complex<T>>,
}

impl<T: Real> SubdomainField<T> {
    pub fn new(grid: &Grid<T>, mask: Arc<Mask>, values: Vec<Complex<T>>) -> Result<Self> {
        if !mask.fits(grid) {
            return Err(Error::MaskMismatch);
        }
        if values.len() != mask.count() {
            return Err(Error::LengthMismatch {
                expected: mask.count(),
                got: values.len(),
            });
        }
        Ok(Self {
            grid: grid.clone(),
            mask,
            values,
        })
    }

    pub fn grid(&self) -> &Grid<T> {
        &self.grid
    }

    pub fn mask(&self) -> &Arc<Mask> {
        &self.mask
    }

    pub fn values(&self) -> &[Complex<T>] {
        &self.values
    }

    /// `E_0 f`: the full-torus field equal to `f` on the mask and zero outside.
    pub fn extend_by_zero(&self) -> Field<T> {
        let mut out = Field::zeros(&self.grid);
        for (&lin, v) in self.mask.indices().iter().zip(&self.values) {
            out.values[lin] = *v;
        }
        out.with_mask(self.mask.clone())
            .expect("mask was validated against this grid")
    }
}

impl<T: Real> Field<T> {
    /// `R_Omega f`: the samples of `f` on the interior of `mask`.
    pub fn restrict(&self, mask: Arc<Mask>) -> Result<SubdomainField<T>> {
        if !mask.fits(&self.grid) {
            return Err(Error::MaskMismatch);
        }
        let values = mask.indices().iter().map(|&i| self.values[i]).collect();
        SubdomainField::new(&self.grid, mask, values)
    }
}
