//! Non-negative self-adjoint operators on a grid and their functional
//! calculus `F(L)`.

use std::sync::Arc;

use nalgebra::{DMatrix, RealField, SymmetricEigen};
use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::field::{Field, Mask, Space, SubdomainField};
use crate::grid::Grid;
use crate::scalar::Real;
use crate::symbols::SymbolFn;
use crate::transform::FftPlan;

/// Largest number of unknowns accepted by the dense eigendecomposition.
pub const DENSE_LIMIT: usize = 4096;

/// `L` diagonal in the Fourier basis with symbol `|xi|^m`.
#[derive(Debug, Clone)]
pub struct FourierModel<T: Real> {
    grid: Grid<T>,
    order: u32,
    eigenvalues: Vec<T>,
    plan: FftPlan<T>,
}

/// `L` given by a dense symmetric matrix and its eigendecomposition.
#[derive(Debug, Clone)]
pub struct MatrixModel<T: Real> {
    grid: Grid<T>,
    mask: Option<Arc<Mask>>,
    eigenvalues: Vec<T>,
    /// Orthonormal eigenvectors as columns, one row per unknown.
    eigenvectors: DMatrix<T>,
}

#[derive(Debug, Clone)]
pub enum OperatorModel<T: Real> {
    FourierDiagonal(FourierModel<T>),
    MatrixEig(MatrixModel<T>),
}

/// `K(., y) = F(L) delta_y`, the kernel of `F(L)` as a function of its first variable.
#[derive(Debug, Clone)]
pub struct KernelColumn<T: Real> {
    pub source: usize,
    pub values: Field<T>,
}

/// `|xi|^m` on the frequency lattice of `grid`.
pub fn build_periodic<T: Real>(grid: &Grid<T>, m: u32) -> Result<OperatorModel<T>> {
    check_order(m)?;
    let half = T::lit(m as f64 / 2.0);
    let eigenvalues = grid
        .frequency_norms_squared()
        .into_iter()
        .map(|q| {
            if q == T::zero() {
                T::zero()
            } else {
                q.powf(half)
            }
        })
        .collect();
    Ok(OperatorModel::FourierDiagonal(FourierModel {
        grid: grid.clone(),
        order: m,
        eigenvalues,
        plan: FftPlan::new(grid),
    }))
}

fn check_order(m: u32) -> Result<()> {
    if m < 2 {
        return Err(invalid(
            "m",
            format!("operator order must be at least 2 (got {m})"),
        ));
    }
    if m > 2 && m % 2 == 1 {
        return Err(invalid(
            "m",
            format!("orders above 2 must be even (got {m})"),
        ));
    }
    Ok(())
}

fn check_dense(size: usize) -> Result<()> {
    if size > DENSE_LIMIT {
        return Err(Error::TooLarge {
            size,
            limit: DENSE_LIMIT,
        });
    }
    Ok(())
}

/// Periodic `(2n+1)`-point finite-difference Laplacian `-Delta_h` as a dense matrix.
fn laplacian_matrix<T: Real + RealField>(grid: &Grid<T>) -> DMatrix<T> {
    let size = grid.len();
    let n = grid.points_per_axis();
    let inv_h2 = T::one() / (grid.spacing() * grid.spacing());
    let mut a = DMatrix::<T>::zeros(size, size);
    for lin in 0..size {
        let idx = grid.multi_index(lin);
        for axis in 0..grid.dim() {
            for step in [1, n - 1] {
                let mut nb = idx;
                nb[axis] = (idx[axis] + step) % n;
                let j = grid
                    .linear_index(&nb[..grid.dim()])
                    .expect("neighbour index is in range");
                a[(lin, lin)] += inv_h2;
                a[(lin, j)] -= inv_h2;
            }
        }
    }
    a
}

fn decompose<T: Real + RealField>(
    grid: &Grid<T>,
    mask: Option<Arc<Mask>>,
    matrix: DMatrix<T>,
) -> OperatorModel<T> {
    let eig = SymmetricEigen::new(matrix);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .expect("symmetric eigenvalues are finite")
    });
    // Rounding can push the zero mode slightly negative.
    let eigenvalues = order
        .iter()
        .map(|&i| num_traits::Float::max(eig.eigenvalues[i], T::zero()))
        .collect();
    let eigenvectors = eig.eigenvectors.select_columns(order.iter());
    OperatorModel::MatrixEig(MatrixModel {
        grid: grid.clone(),
        mask,
        eigenvalues,
        eigenvectors,
    })
}

/// `-Delta_h + V` on the periodic grid, `V` real and non-negative.
pub fn build_schrodinger<T: Real + RealField>(
    grid: &Grid<T>,
    v: &Field<T>,
) -> Result<OperatorModel<T>> {
    check_dense(grid.len())?;
    if !v.grid().same_lattice(grid) {
        return Err(Error::GridMismatch);
    }
    let mut a = laplacian_matrix(grid);
    for (i, value) in v.values().iter().enumerate() {
        if value.im != T::zero() {
            return Err(invalid("V", format!("potential must be real (index {i})")));
        }
        if !(value.re >= T::zero()) {
            return Err(Error::NegativePotential {
                index: i,
                value: value.re.to_f64_lossy(),
            });
        }
        a[(i, i)] += value.re;
    }
    Ok(decompose(grid, None, a))
}

/// Dirichlet Laplacian on a subdomain: the periodic stencil restricted to
/// the mask, exterior values pinned to zero.
pub fn build_dirichlet<T: Real + RealField>(
    grid: &Grid<T>,
    mask: Arc<Mask>,
) -> Result<OperatorModel<T>> {
    if !mask.fits(grid) {
        return Err(Error::MaskMismatch);
    }
    check_dense(mask.count())?;
    let full = laplacian_matrix(grid);
    let idx = mask.indices();
    let a = DMatrix::from_fn(idx.len(), idx.len(), |r, c| full[(idx[r], idx[c])]);
    Ok(decompose(grid, Some(mask), a))
}

/// Dense circulant realization of `|xi|^m`, diagonalized numerically; an
/// oracle for the Fourier-diagonal model.
pub fn build_periodic_dense<T: Real + RealField>(
    grid: &Grid<T>,
    m: u32,
) -> Result<OperatorModel<T>> {
    check_dense(grid.len())?;
    let OperatorModel::FourierDiagonal(model) = build_periodic(grid, m)? else {
        unreachable!("build_periodic returns the Fourier-diagonal variant")
    };
    let size = grid.len();
    let mut column: Vec<Complex<T>> = model
        .eigenvalues
        .iter()
        .map(|&l| Complex::new(l, T::zero()))
        .collect();
    model.plan.inverse_raw(&mut column);
    let scale = T::one() / T::from_count(size);
    let points = grid.points_per_axis();
    let a = DMatrix::from_fn(size, size, |r, c| {
        let (ir, ic) = (grid.multi_index(r), grid.multi_index(c));
        let offset = (0..grid.dim()).fold(0, |acc, axis| {
            acc * points + (ir[axis] + points - ic[axis]) % points
        });
        column[offset].re * scale
    });
    Ok(decompose(grid, None, a))
}

impl<T: Real> MatrixModel<T> {
    pub fn eigenvectors(&self) -> &DMatrix<T> {
        &self.eigenvectors
    }

    /// `F(L)` as a dense matrix over the unknowns, row-major.
    pub fn function_matrix(&self, f: &SymbolFn<T>) -> Result<Vec<Complex<T>>> {
        let weights = symbol_weights(f, &self.eigenvalues)?;
        let size = self.eigenvalues.len();
        let v = &self.eigenvectors;
        let mut out = vec![Complex::default(); size * size];
        for a in 0..size {
            for b in a..size {
                let mut acc = Complex::default();
                for (i, w) in weights.iter().enumerate() {
                    acc += w.scale(v[(a, i)] * v[(b, i)]);
                }
                out[a * size + b] = acc;
                out[b * size + a] = acc;
            }
        }
        Ok(out)
    }

    /// Largest entry of `|V^T V - I|`.
    pub fn orthonormality_defect(&self) -> T {
        let v = &self.eigenvectors;
        let size = v.ncols();
        let mut worst = T::zero();
        for i in 0..size {
            for j in i..size {
                let mut dot = T::zero();
                for r in 0..v.nrows() {
                    dot += v[(r, i)] * v[(r, j)];
                }
                let target = if i == j { T::one() } else { T::zero() };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }

    /// Linear grid indices of the unknowns.
    pub fn unknowns(&self) -> Vec<usize> {
        match &self.mask {
            Some(mask) => mask.indices().to_vec(),
            None => (0..self.grid.len()).collect(),
        }
    }
}

fn symbol_weights<T: Real>(f: &SymbolFn<T>, eigenvalues: &[T]) -> Result<Vec<Complex<T>>> {
    eigenvalues
        .iter()
        .map(|&l| {
            let w = f.eval(l);
            if w.re.is_finite() && w.im.is_finite() {
                Ok(w)
            } else {
                Err(Error::NonFiniteSymbol {
                    label: f.label().to_string(),
                    eigenvalue: l.to_f64_lossy(),
                })
            }
        })
        .collect()
}

impl<T: Real> OperatorModel<T> {
    pub fn grid(&self) -> &Grid<T> {
        match self {
            Self::FourierDiagonal(m) => &m.grid,
            Self::MatrixEig(m) => &m.grid,
        }
    }

    pub fn mask(&self) -> Option<&Arc<Mask>> {
        match self {
            Self::FourierDiagonal(_) => None,
            Self::MatrixEig(m) => m.mask.as_ref(),
        }
    }

    /// Eigenvalues: per FFT-ordered frequency for the Fourier model,
    /// ascending for matrix models.
    pub fn eigenvalues(&self) -> &[T] {
        match self {
            Self::FourierDiagonal(m) => &m.eigenvalues,
            Self::MatrixEig(m) => &m.eigenvalues,
        }
    }

    /// Order `m` of the Fourier model; matrix models are second order.
    pub fn order(&self) -> u32 {
        match self {
            Self::FourierDiagonal(m) => m.order,
            Self::MatrixEig(_) => 2,
        }
    }

    /// `Lambda_max`: `(pi N sqrt(n) / L)^m` for the Fourier model, the top
    /// eigenvalue for matrix models.
    pub fn spectral_bound(&self) -> T {
        match self {
            Self::FourierDiagonal(m) => {
                let g = &m.grid;
                (T::PI() * T::from_count(g.points_per_axis()) * T::from_count(g.dim()).sqrt()
                    / g.box_length())
                .powi(m.order as i32)
            }
            Self::MatrixEig(m) => m.eigenvalues.iter().copied().fold(T::zero(), T::max),
        }
    }

    pub fn as_matrix(&self) -> Option<&MatrixModel<T>> {
        match self {
            Self::MatrixEig(m) => Some(m),
            Self::FourierDiagonal(_) => None,
        }
    }

    fn check_field(&self, f: &Field<T>) -> Result<()> {
        if !f.grid().same_lattice(self.grid()) {
            return Err(Error::GridMismatch);
        }
        if f.space() != Space::Physical {
            return Err(Error::WrongSpace {
                expected: Space::Physical,
            });
        }
        match (self.mask(), f.mask()) {
            (None, None) => Ok(()),
            (Some(a), Some(b)) if Arc::ptr_eq(a, b) || a == b => Ok(()),
            _ => Err(Error::MaskMismatch),
        }
    }

    /// Coordinates of `f` in the eigenbasis of `L`.
    pub fn analyze(&self, f: &Field<T>) -> Result<Vec<Complex<T>>> {
        self.check_field(f)?;
        Ok(match self {
            Self::FourierDiagonal(m) => {
                let mut data = f.values().to_vec();
                m.plan.forward(&mut data);
                data
            }
            Self::MatrixEig(m) => {
                let unknowns = m.unknowns();
                let v = &m.eigenvectors;
                (0..v.ncols())
                    .map(|i| {
                        unknowns
                            .iter()
                            .enumerate()
                            .fold(Complex::default(), |acc, (r, &lin)| {
                                acc + f.values()[lin].scale(v[(r, i)])
                            })
                    })
                    .collect()
            }
        })
    }

    /// `sum_i F(lambda_i) c_i e_i` for eigenbasis coordinates `c`.
    pub fn synthesize(&self, coeffs: &[Complex<T>], f: &SymbolFn<T>) -> Result<Field<T>> {
        let weights = symbol_weights(f, self.eigenvalues())?;
        if coeffs.len() != weights.len() {
            return Err(Error::LengthMismatch {
                expected: weights.len(),
                got: coeffs.len(),
            });
        }
        let grid = self.grid();
        match self {
            Self::FourierDiagonal(m) => {
                let mut data: Vec<Complex<T>> =
                    coeffs.iter().zip(&weights).map(|(c, w)| c * w).collect();
                m.plan.inverse(&mut data);
                Field::from_values(grid, data)
            }
            Self::MatrixEig(m) => {
                let scaled: Vec<Complex<T>> =
                    coeffs.iter().zip(&weights).map(|(c, w)| c * w).collect();
                let v = &m.eigenvectors;
                let mut values = vec![Complex::default(); grid.len()];
                for (r, lin) in m.unknowns().into_iter().enumerate() {
                    values[lin] = scaled
                        .iter()
                        .enumerate()
                        .fold(Complex::default(), |acc, (i, c)| acc + c.scale(v[(r, i)]));
                }
                let field = Field::from_values(grid, values)?;
                match &m.mask {
                    Some(mask) => field.with_mask(mask.clone()),
                    None => Ok(field),
                }
            }
        }
    }

    /// `F(L) f`.
    pub fn apply(&self, f: &SymbolFn<T>, field: &Field<T>) -> Result<Field<T>> {
        let coeffs = self.analyze(field)?;
        self.synthesize(&coeffs, f)
    }

    /// `F(L)` applied to a field living on the model's subdomain.
    pub fn apply_subdomain(
        &self,
        f: &SymbolFn<T>,
        field: &SubdomainField<T>,
    ) -> Result<SubdomainField<T>> {
        let mask = self.mask().ok_or(Error::MaskMismatch)?.clone();
        if field.mask() != &mask && **field.mask() != *mask {
            return Err(Error::MaskMismatch);
        }
        self.apply(f, &field.extend_by_zero())?.restrict(mask)
    }

    /// The extended operator `f -> F(L)(f chi_Omega)` on the whole torus,
    /// zero outside `Omega`.
    pub fn apply_extended(&self, f: &SymbolFn<T>, field: &Field<T>) -> Result<Field<T>> {
        match self.mask() {
            None => self.apply(f, field),
            Some(mask) => {
                let inner = field.clone().unmasked().restrict(mask.clone())?;
                Ok(self.apply_subdomain(f, &inner)?.extend_by_zero().unmasked())
            }
        }
    }

    /// `K(., y) = F(L) delta_y` with the unit-mass delta `h^{-n}` at `y`.
    pub fn kernel_column(&self, f: &SymbolFn<T>, y: &[usize]) -> Result<KernelColumn<T>> {
        let grid = self.grid();
        let source = grid.linear_index(y)?;
        let mut delta = Field::delta(grid, y)?;
        if let Some(mask) = self.mask() {
            if !mask.contains(source) {
                return Err(invalid("y", "kernel source lies outside the domain mask"));
            }
            delta = delta.with_mask(mask.clone())?;
        }
        Ok(KernelColumn {
            source,
            values: self.apply(f, &delta)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbols::{heat_symbol, resolvent_power, schrodinger_symbol};
    use std::f64::consts::PI;

    fn wave(grid: &Grid<f64>) -> Field<f64> {
        Field::from_fn(grid, |i| {
            let s = i
                .iter()
                .enumerate()
                .map(|(a, &v)| (a + 1) * v)
                .sum::<usize>() as f64;
            Complex::new((0.9 * s).sin() + 0.3, (0.4 * s).cos())
        })
    }

    #[test]
    fn periodic_symbol_values() {
        let g = Grid::<f64>::new(1, 16, 3.0).unwrap();
        let model = build_periodic(&g, 4).unwrap();
        for (k, &l) in model.eigenvalues().iter().enumerate() {
            let xi = 2.0 * PI * g.signed_mode(k) as f64 / 3.0;
            assert!((l - xi.powi(4)).abs() <= 1e-12 * xi.powi(4).max(1.0));
        }
        assert_eq!(model.eigenvalues()[0], 0.0);
        assert!((model.spectral_bound() - (PI * 16.0 / 3.0).powi(4)).abs() < 1e-6);
        assert!(build_periodic(&g, 1).is_err());
        assert!(build_periodic(&g, 3).is_err());
    }

    #[test]
    fn heat_fixes_constants_and_damps_waves() {
        let g = Grid::<f64>::new(1, 32, 8.0).unwrap();
        let model = build_periodic(&g, 2).unwrap();
        let one = Field::constant(&g, Complex::new(1.0, 0.0));
        let out = model.apply(&heat_symbol(2.5), &one).unwrap();
        assert!(out
            .values()
            .iter()
            .all(|v| (v - Complex::new(1.0, 0.0)).norm() < 1e-12));
        let xi = 2.0 * PI * 3.0 / 8.0;
        let plane = Field::from_fn(&g, |i| {
            Complex::from_polar(1.0, xi * i[0] as f64 * g.spacing())
        });
        let out = model.apply(&heat_symbol(0.1), &plane).unwrap();
        for (a, b) in out.values().iter().zip(plane.values()) {
            assert!((a - b * (-0.1 * xi * xi).exp()).norm() < 1e-12);
        }
    }

    #[test]
    fn schrodinger_spectrum() {
        let g = Grid::<f64>::new(2, 8, 4.0).unwrap();
        let zero = Field::zeros(&g);
        let model = build_schrodinger(&g, &zero).unwrap();
        // Oracle: 4 h^-2 sum_i sin^2(pi k_i / N).
        let h = g.spacing();
        let mut expected: Vec<f64> = (0..64)
            .map(|lin| {
                let i = g.multi_index(lin);
                (0..2)
                    .map(|a| 4.0 / (h * h) * (PI * i[a] as f64 / 8.0).sin().powi(2))
                    .sum()
            })
            .collect();
        expected.sort_by(f64::total_cmp);
        for (a, b) in model.eigenvalues().iter().zip(&expected) {
            assert!((a - b).abs() < 1e-9, "{a} {b}");
        }
        let shifted = build_schrodinger(&g, &Field::constant(&g, Complex::new(0.7, 0.0))).unwrap();
        for (a, b) in shifted.eigenvalues().iter().zip(&expected) {
            assert!((a - b - 0.7).abs() < 1e-9);
        }
        let m = shifted.as_matrix().unwrap();
        assert!(m.orthonormality_defect() < 1e-10);
    }

    #[test]
    fn rejects_bad_potentials() {
        let g = Grid::<f64>::new(1, 8, 1.0).unwrap();
        let mut v = vec![0.0; 8];
        v[3] = -1.0;
        let v = Field::from_real(&g, &v).unwrap();
        assert!(matches!(
            build_schrodinger(&g, &v),
            Err(Error::NegativePotential { index: 3, .. })
        ));
        let big = Grid::<f64>::new(2, 128, 1.0).unwrap();
        assert!(matches!(
            build_schrodinger(&big, &Field::zeros(&big)),
            Err(Error::TooLarge { .. })
        ));
    }

    #[test]
    fn dirichlet_interval_spectrum() {
        let g = Grid::<f64>::new(1, 32, 32.0).unwrap();
        let m = 20;
        let mask = Arc::new(Mask::from_fn(&g, |i| (1..=m).contains(&i[0])).unwrap());
        let model = build_dirichlet(&g, mask).unwrap();
        // Oracle: 4 sin^2(pi j / (2(M+1))), j = 1..M.
        for (j, l) in model.eigenvalues().iter().enumerate() {
            let e = 4.0 * (PI * (j + 1) as f64 / (2.0 * (m + 1) as f64)).sin().powi(2);
            assert!((l - e).abs() < 1e-9);
        }
    }

    #[test]
    fn full_mask_is_periodic() {
        let g = Grid::<f64>::new(1, 16, 5.0).unwrap();
        let mask = Arc::new(Mask::from_fn(&g, |_| true).unwrap());
        let a = build_dirichlet(&g, mask).unwrap();
        let b = build_schrodinger(&g, &Field::zeros(&g)).unwrap();
        for (x, y) in a.eigenvalues().iter().zip(b.eigenvalues()) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn dense_oracle_matches_fourier_model() {
        let g = Grid::<f64>::new(1, 16, 6.0).unwrap();
        let fast = build_periodic(&g, 2).unwrap();
        let dense = build_periodic_dense(&g, 2).unwrap();
        let f = wave(&g);
        let symbol = schrodinger_symbol(0.7, 0.5).unwrap();
        let a = fast.apply(&symbol, &f).unwrap();
        let b = dense.apply(&symbol, &f).unwrap();
        let scale = a.values().iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (x, y) in a.values().iter().zip(b.values()) {
            assert!((x - y).norm() < 1e-9 * scale);
        }
    }

    #[test]
    fn identity_and_unitarity() {
        let g = Grid::<f64>::new(2, 16, 4.0).unwrap();
        let model = build_periodic(&g, 2).unwrap();
        let f = wave(&g);
        let same = model.apply(&SymbolFn::one(), &f).unwrap();
        for (a, b) in same.values().iter().zip(f.values()) {
            assert!((a - b).norm() < 1e-12);
        }
        let evolved = model
            .apply(&schrodinger_symbol(3.0, 0.0).unwrap(), &f)
            .unwrap();
        let (n0, n1) = (f.inner(&f).unwrap().re, evolved.inner(&evolved).unwrap().re);
        assert!((n0 - n1).abs() < 1e-10 * n0);
    }

    #[test]
    fn kernel_columns() {
        let g = Grid::<f64>::new(1, 64, 16.0).unwrap();
        let model = build_periodic(&g, 2).unwrap();
        let delta = model.kernel_column(&SymbolFn::one(), &[5]).unwrap();
        assert!((delta.values.values()[5].re - 4.0).abs() < 1e-10);
        let heat = model.kernel_column(&heat_symbol(0.3), &[5]).unwrap();
        let mass: f64 = heat.values.values().iter().map(|v| v.re).sum::<f64>() * g.spacing();
        assert!((mass - 1.0).abs() < 1e-10);
        let res = model
            .kernel_column(&resolvent_power(1.0, 1.0).unwrap(), &[0])
            .unwrap();
        let v: Vec<f64> = res.values.real_parts();
        assert!(v.iter().all(|&x| x <= v[0]));
        for r in 0..6 {
            assert!(v[r + 1] < v[r]);
        }
    }

    #[test]
    fn masked_models_require_masked_fields() {
        let g = Grid::<f64>::new(1, 16, 16.0).unwrap();
        let mask = Arc::new(Mask::from_fn(&g, |i| i[0] > 2 && i[0] < 12).unwrap());
        let model = build_dirichlet(&g, mask.clone()).unwrap();
        let f = wave(&g);
        assert!(matches!(
            model.apply(&heat_symbol(1.0), &f),
            Err(Error::MaskMismatch)
        ));
        let out = model.apply_extended(&heat_symbol(1.0), &f).unwrap();
        for i in 0..16 {
            if !mask.contains(i) {
                assert_eq!(out.values()[i], Complex::default());
            }
        }
        assert!(model.kernel_column(&heat_symbol(1.0), &[0]).is_err());
    }
}
