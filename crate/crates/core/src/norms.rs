//! `L^p` norms, distribution functions, weak-`L^p` quasinorms, kernel
//! tail integrals and log-log regression.

use std::io::Write;

use crate::error::{invalid, Error, Result};
use crate::field::Field;
use crate::operators::KernelColumn;
use crate::scalar::Real;

/// `(sum |f|^p h^n)^{1/p}`, or `max |f|` for `p = inf`.
pub fn lp_norm<T: Real>(f: &Field<T>, p: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(invalid("p", format!("need p >= 1 (got {p})")));
    }
    let mags = f.values().iter().map(|v| v.norm());
    if p.is_infinite() {
        return Ok(mags.fold(T::zero(), T::max));
    }
    let w = f.measure_weight();
    if p == T::one() {
        return Ok(mags.fold(T::zero(), |a, v| a + v) * w);
    }
    if p == T::lit(2.0) {
        return Ok((mags.fold(T::zero(), |a, v| a + v * v) * w).sqrt());
    }
    Ok((mags.fold(T::zero(), |a, v| a + v.powf(p)) * w).powf(p.recip()))
}

/// Distribution function of `|f|` and the weak-`L^p` quasinorm it determines.
#[derive(Debug, Clone, PartialEq)]
pub struct DistributionReport<T> {
    pub p: T,
    /// Distinct positive values of `|f|`, ascending.
    pub thresholds: Vec<T>,
    /// `mu{|f| > lambda}` for each threshold.
    pub measures: Vec<T>,
    /// `sup_lambda lambda mu{|f| > lambda}^{1/p}`.
    pub weak_quasinorm: T,
    pub l1: T,
    pub l2: T,
    pub linf: T,
}

impl<T: Real> DistributionReport<T> {
    pub const CSV_HEADER: [&'static str; 6] = ["label", "p", "weak_quasinorm", "l1", "l2", "linf"];

    pub fn csv_record(&self, label: &str) -> [String; 6] {
        [
            label.to_string(),
            self.p.to_string(),
            self.weak_quasinorm.to_string(),
            self.l1.to_string(),
            self.l2.to_string(),
            self.linf.to_string(),
        ]
    }
}

pub fn write_distribution_csv<W: Write, T: Real>(
    w: W,
    rows: &[(&str, &DistributionReport<T>)],
) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(DistributionReport::<T>::CSV_HEADER)?;
    for (label, r) in rows {
        out.write_record(r.csv_record(label))?;
    }
    out.flush()?;
    Ok(())
}

fn sorted_magnitudes<T: Real>(f: &Field<T>) -> Vec<T> {
    let mut v: Vec<T> = f.values().iter().map(|x| x.norm()).collect();
    v.sort_by(|a, b| b.partial_cmp(a).expect("magnitudes are not NaN"));
    v
}

/// Exact weak-`L^p` quasinorm by order statistics: with `|f|` sorted as
/// `v_1 >= v_2 >= ...`, the supremum is `max_k v_k (k h^n)^{1/p}`.
pub fn weak_lp_quasinorm<T: Real>(f: &Field<T>, p: T) -> Result<DistributionReport<T>> {
    if !(p >= T::one()) {
        return Err(invalid("p", format!("need p >= 1 (got {p})")));
    }
    let w = f.measure_weight();
    let v = sorted_magnitudes(f);
    let inv_p = p.recip();
    let weak = v
        .iter()
        .enumerate()
        .map(|(k, &x)| x * (T::from_count(k + 1) * w).powf(inv_p))
        .fold(T::zero(), T::max);
    let mut thresholds = Vec::new();
    let mut measures = Vec::new();
    // Walk ascending; the count strictly above v is the number of larger entries.
    let mut k = v.len();
    while k > 0 {
        let x = v[k - 1];
        let first = v.partition_point(|&y| y > x);
        if x > T::zero() {
            thresholds.push(x);
            measures.push(T::from_count(first) * w);
        }
        k = first;
    }
    Ok(DistributionReport {
        p,
        thresholds,
        measures,
        weak_quasinorm: weak,
        l1: lp_norm(f, T::one())?,
        l2: lp_norm(f, T::lit(2.0))?,
        linf: lp_norm(f, T::infinity())?,
    })
}

/// `sup_{lambda > lambda_min} lambda mu{|f| > lambda}^{1/p}`.
pub fn weak_lp_quasinorm_above<T: Real>(f: &Field<T>, p: T, lambda_min: T) -> Result<T> {
    if !(p >= T::one()) {
        return Err(invalid("p", format!("need p >= 1 (got {p})")));
    }
    let w = f.measure_weight();
    let v = sorted_magnitudes(f);
    let inv_p = p.recip();
    let above = v.partition_point(|&x| x > lambda_min);
    let edge = lambda_min * (T::from_count(above) * w).powf(inv_p);
    Ok(v[..above]
        .iter()
        .enumerate()
        .map(|(k, &x)| x * (T::from_count(k + 1) * w).powf(inv_p))
        .fold(edge, T::max))
}

/// `sum_{d(x, y) > radius} |K(x, y)| h^n`.
pub fn annulus_tail_integral<T: Real>(column: &KernelColumn<T>, radius: T) -> T {
    let field = &column.values;
    let d = field.grid().distances_from(column.source);
    field
        .values()
        .iter()
        .zip(d)
        .filter(|(_, r)| *r > radius)
        .fold(T::zero(), |acc, (v, _)| acc + v.norm())
        * field.grid().cell_measure()
}

/// `sum |K(x, y)|^2 (1 + R d(x, y))^s h^n`.
pub fn weighted_l2_kernel<T: Real>(column: &KernelColumn<T>, r: T, s: T) -> Result<T> {
    if !(r > T::zero()) {
        return Err(invalid("R", "scale must be positive"));
    }
    if !(s >= T::zero()) {
        return Err(invalid("s", "weight exponent must be non-negative"));
    }
    let field = &column.values;
    let d = field.grid().distances_from(column.source);
    Ok(field
        .values()
        .iter()
        .zip(d)
        .fold(T::zero(), |acc, (v, dist)| {
            acc + v.norm_sqr() * (T::one() + r * dist).powf(s)
        })
        * field.grid().cell_measure())
}

/// Least-squares line `y = slope x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FitReport {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
    pub npoints: usize,
}

impl FitReport {
    pub const CSV_HEADER: [&'static str; 5] = ["label", "slope", "intercept", "r2", "npoints"];

    pub fn csv_record(&self, label: &str) -> [String; 5] {
        [
            label.to_string(),
            self.slope.to_string(),
            self.intercept.to_string(),
            self.r_squared.to_string(),
            self.npoints.to_string(),
        ]
    }

    /// For a log-log fit, the prefactor `c` in `y = c x^slope`.
    pub fn prefactor(&self) -> f64 {
        self.intercept.exp()
    }
}

pub fn write_fit_csv<W: Write>(w: W, rows: &[(&str, &FitReport)]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(FitReport::CSV_HEADER)?;
    for (label, r) in rows {
        out.write_record(r.csv_record(label))?;
    }
    out.flush()?;
    Ok(())
}

pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<FitReport> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    if xs.len() < 2 {
        return Err(Error::TooFewPoints {
            needed: 2,
            got: xs.len(),
        });
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    if sxx == 0.0 {
        return Err(invalid("x", "abscissae are all equal"));
    }
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let ss_res: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (y - slope * x - intercept).powi(2))
        .sum();
    let r_squared = if ss_tot > 0.0 {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    } else {
        1.0
    };
    Ok(FitReport {
        slope,
        intercept,
        r_squared,
        npoints: xs.len(),
    })
}

/// Fits `log y = slope log x + intercept`.
///
/// Points whose ordinate is below `1e3` machine epsilons of the largest
/// ordinate are dropped as noise floor before fitting.
pub fn fit_power_law(points: &[(f64, f64)]) -> Result<FitReport> {
    if let Some(&(x, y)) = points.iter().find(|(x, y)| !(*x > 0.0 && *y > 0.0)) {
        return Err(Error::NonPositiveData { x, y });
    }
    let ymax = points.iter().map(|p| p.1).fold(0.0, f64::max);
    let floor = 1e3 * f64::EPSILON * ymax;
    let kept: Vec<(f64, f64)> = points.iter().copied().filter(|p| p.1 >= floor).collect();
    if kept.len() < 3 {
        return Err(Error::TooFewPoints {
            needed: 3,
            got: kept.len(),
        });
    }
    let xs: Vec<f64> = kept.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = kept.iter().map(|p| p.1.ln()).collect();
    fit_line(&xs, &ys)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use num_complex::Complex;

    fn real_field(values: &[f64]) -> Field<f64> {
        let g = Grid::<f64>::new(1, values.len(), values.len() as f64).unwrap();
        Field::from_real(&g, values).unwrap()
    }

    #[test]
    fn indicator_norms() {
        let f = real_field(&[1.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(lp_norm(&f, 1.0).unwrap(), 3.0);
        assert!((lp_norm(&f, 2.0).unwrap().powi(2) - f.inner(&f).unwrap().re).abs() < 1e-12);
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), 1.0);
        assert!(lp_norm(&f, 0.5).is_err());
        let d = weak_lp_quasinorm(&f.scale(2.5), 1.0).unwrap();
        assert_eq!(d.weak_quasinorm, 7.5);
    }

    #[test]
    fn three_level_example() {
        let f = real_field(&[4.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d = weak_lp_quasinorm(&f, 1.0).unwrap();
        // Oracle: candidates 4*1, 2*2, 1*3.
        let expected = [4.0 * 1.0, 2.0 * 2.0, 1.0 * 3.0]
            .into_iter()
            .fold(0.0, f64::max);
        assert_eq!(d.weak_quasinorm, expected);
        assert_eq!(d.thresholds, vec![1.0, 2.0, 4.0]);
        assert_eq!(d.measures, vec![2.0, 1.0, 0.0]);
    }

    #[test]
    fn restricted_supremum() {
        let f = real_field(&[4.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        assert_eq!(weak_lp_quasinorm_above(&f, 1.0, 0.0).unwrap(), 4.0);
        // Above 1.5 the candidates are 4*1, 2*2 and the edge 1.5*2.
        assert_eq!(weak_lp_quasinorm_above(&f, 1.0, 1.5).unwrap(), 4.0);
        assert_eq!(weak_lp_quasinorm_above(&f, 1.0, 4.0).unwrap(), 0.0);
    }

    #[test]
    fn power_law_fits() {
        let pts: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, (i * i) as f64)).collect();
        let fit = fit_power_law(&pts).unwrap();
        assert!((fit.slope - 2.0).abs() < 1e-12);
        assert!((fit.r_squared - 1.0).abs() < 1e-12);
        let flat: Vec<(f64, f64)> = (1..10).map(|i| (i as f64, 5.0)).collect();
        assert!(fit_power_law(&flat).unwrap().slope.abs() < 1e-12);
        assert!(matches!(
            fit_power_law(&[(1.0, 1.0), (2.0, 0.0), (3.0, 1.0)]),
            Err(Error::NonPositiveData { .. })
        ));
        assert!(matches!(
            fit_power_law(&[(1.0, 1.0), (2.0, 1.0)]),
            Err(Error::TooFewPoints { .. })
        ));
    }

    #[test]
    fn csv_rows() {
        let f = real_field(&[4.0, 2.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let d = weak_lp_quasinorm(&f, 1.0).unwrap();
        let mut buf = Vec::new();
        write_distribution_csv(&mut buf, &[("spikes", &d)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.lines().next().unwrap(),
            "label,p,weak_quasinorm,l1,l2,linf"
        );
        assert!(text.lines().nth(1).unwrap().starts_with("spikes,1,4,7,"));
        let fit = fit_line(&[0.0, 1.0, 2.0], &[1.0, 3.0, 5.0]).unwrap();
        let mut buf = Vec::new();
        write_fit_csv(&mut buf, &[("line", &fit)]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "label,slope,intercept,r2,npoints\nline,2,1,1,3\n"
        );
    }

    #[test]
    fn complex_magnitudes_are_used() {
        let g = Grid::<f64>::new(1, 8, 8.0).unwrap();
        let f = Field::from_fn(&g, |i| {
            if i[0] == 0 {
                Complex::new(3.0, 4.0)
            } else {
                Complex::default()
            }
        });
        assert_eq!(lp_norm(&f, 1.0).unwrap(), 5.0);
    }
}
