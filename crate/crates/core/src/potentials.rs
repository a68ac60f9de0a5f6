//! Named generators and CSV loaders for potentials `V` and domain masks.

use std::io::Read;
use std::path::Path;

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::field::{Field, Mask};
use crate::grid::Grid;
use crate::scalar::Real;
use crate::symbols::parse_label;

fn parse_err(spec: &str, reason: impl Into<String>) -> Error {
    Error::Parse {
        input: spec.to_string(),
        reason: reason.into(),
    }
}

/// Single positional argument of a generator spec such as `harmonic:0.5`.
fn positional(spec: &str) -> Result<(String, Option<f64>)> {
    match spec.split_once(':') {
        None => Ok((spec.trim().to_string(), None)),
        Some((name, arg)) if !arg.contains('=') => {
            let v = arg
                .trim()
                .parse()
                .map_err(|_| parse_err(spec, format!("`{arg}` is not a number")))?;
            Ok((name.trim().to_string(), Some(v)))
        }
        Some(_) => {
            let (name, params) = parse_label(spec)?;
            if params.len() != 1 {
                return Err(parse_err(spec, "expected a single parameter"));
            }
            Ok((name, params.into_values().next()))
        }
    }
}

fn center_index<T: Real>(grid: &Grid<T>) -> usize {
    let c = [grid.points_per_axis() / 2; 3];
    grid.linear_index(&c[..grid.dim()])
        .expect("centre is on the grid")
}

/// Potentials: `zero`, `harmonic:omega` (`omega^2 |x - c|^2` about the centre
/// of the box), `randnonneg:seed` (independent uniform values in `[0, 1)`),
/// or a path to a CSV file of `(index, value)` rows.
pub fn potential_from_spec<T: Real>(grid: &Grid<T>, spec: &str) -> Result<Field<T>> {
    if spec.ends_with(".csv") {
        return potential_from_csv(grid, std::fs::File::open(Path::new(spec))?);
    }
    let (name, arg) = positional(spec)?;
    let need = |arg: Option<f64>| {
        arg.ok_or_else(|| parse_err(spec, format!("`{name}` needs a parameter")))
    };
    match name.as_str() {
        "zero" => Ok(Field::zeros(grid)),
        "harmonic" => {
            let omega = T::lit(need(arg)?);
            let d = grid.distances_from(center_index(grid));
            Field::from_real(
                grid,
                &d.iter().map(|&r| omega * omega * r * r).collect::<Vec<_>>(),
            )
        }
        "randnonneg" => {
            let seed = need(arg)?;
            if seed < 0.0 || seed.fract() != 0.0 {
                return Err(parse_err(spec, "seed must be a non-negative integer"));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed as u64);
            let values: Vec<T> = (0..grid.len())
                .map(|_| T::lit(rng.random::<f64>()))
                .collect();
            Field::from_real(grid, &values)
        }
        _ => Err(parse_err(spec, format!("unknown potential `{name}`"))),
    }
}

/// Masks: `full`, `disk:r` (open torus ball of radius `r` about the centre),
/// `lshape`, or a path to a CSV file of `(index, value)` rows (non-zero = inside).
///
/// `lshape` is the box `[1, N-2]^n` with the corner where the first two
/// axes are both at least `N/2` removed.
pub fn mask_from_spec<T: Real>(grid: &Grid<T>, spec: &str) -> Result<Mask> {
    if spec.ends_with(".csv") {
        return mask_from_csv(grid, std::fs::File::open(Path::new(spec))?);
    }
    let (name, arg) = positional(spec)?;
    let n = grid.points_per_axis();
    match name.as_str() {
        "full" => Mask::from_fn(grid, |_| true),
        "disk" => {
            let r = T::lit(arg.ok_or_else(|| parse_err(spec, "`disk` needs a radius"))?);
            let d = grid.distances_from(center_index(grid));
            Mask::new(grid, d.iter().map(|&x| x < r).collect())
        }
        "lshape" => Mask::from_fn(grid, |idx| {
            let in_box = idx.iter().all(|&i| i >= 1 && i + 2 <= n);
            let corner = idx.iter().take(2).all(|&i| i >= n / 2);
            in_box && !corner
        }),
        _ => Err(parse_err(spec, format!("unknown mask `{name}`"))),
    }
}

fn read_index_values<R: Read, T: Real>(grid: &Grid<T>, reader: R) -> Result<Vec<T>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut values = vec![T::zero(); grid.len()];
    for (row, record) in rdr.records().enumerate() {
        let record = record?;
        let (Some(i), Some(v)) = (record.get(0), record.get(1)) else {
            return Err(parse_err(&format!("row {row}"), "expected `index,value`"));
        };
        let Ok(index) = i.parse::<usize>() else {
            if row == 0 {
                continue; // header
            }
            return Err(parse_err(i, "index must be a non-negative integer"));
        };
        let value: f64 = v
            .parse()
            .map_err(|_| parse_err(v, "value must be a number"))?;
        if index >= grid.len() {
            return Err(Error::LengthMismatch {
                expected: grid.len(),
                got: index + 1,
            });
        }
        values[index] = T::lit(value);
    }
    Ok(values)
}

/// `(index, value)` rows keyed by linear grid index; unlisted points are zero.
pub fn potential_from_csv<R: Read, T: Real>(grid: &Grid<T>, reader: R) -> Result<Field<T>> {
    let values = read_index_values(grid, reader)?;
    Field::from_values(
        grid,
        values
            .into_iter()
            .map(|v| Complex::new(v, T::zero()))
            .collect(),
    )
}

pub fn mask_from_csv<R: Read, T: Real>(grid: &Grid<T>, reader: R) -> Result<Mask> {
    let values = read_index_values(grid, reader)?;
    Mask::new(grid, values.into_iter().map(|v| v != T::zero()).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn generators() {
        let g = Grid::<f64>::new(2, 8, 4.0).unwrap();
        assert!(potential_from_spec(&g, "zero")
            .unwrap()
            .values()
            .iter()
            .all(|v| v.norm() == 0.0));
        let h = potential_from_spec(&g, "harmonic:2").unwrap();
        assert_eq!(h.values()[g.linear_index(&[4, 4]).unwrap()].re, 0.0);
        assert!((h.values()[g.linear_index(&[5, 4]).unwrap()].re - 4.0 * 0.25).abs() < 1e-12);
        let a = potential_from_spec(&g, "randnonneg:3").unwrap();
        let b = potential_from_spec(&g, "randnonneg:seed=3").unwrap();
        assert_eq!(a.values(), b.values());
        assert!(a.real_parts().iter().all(|&v| (0.0..1.0).contains(&v)));
        assert_ne!(
            a.values(),
            potential_from_spec(&g, "randnonneg:4").unwrap().values()
        );
        assert!(potential_from_spec(&g, "harmonic").is_err());
        assert!(potential_from_spec(&g, "cubic:1").is_err());
    }

    #[test]
    fn masks() {
        let g = Grid::<f64>::new(2, 16, 16.0).unwrap();
        let l = mask_from_spec(&g, "lshape").unwrap();
        assert_eq!(l.count(), 14 * 14 - 7 * 7);
        assert!(l.contains(g.linear_index(&[1, 1]).unwrap()));
        assert!(!l.contains(g.linear_index(&[10, 10]).unwrap()));
        assert!(!l.contains(g.linear_index(&[0, 3]).unwrap()));
        let d = mask_from_spec(&g, "disk:2.5").unwrap();
        assert_eq!(d.count(), 21);
        assert_eq!(mask_from_spec(&g, "full").unwrap().count(), 256);
    }

    #[test]
    fn csv_loaders() {
        let g = Grid::<f64>::new(1, 8, 1.0).unwrap();
        let v = potential_from_csv(&g, "index,value\n2,0.5\n7, 3\n".as_bytes()).unwrap();
        assert_eq!(v.real_parts(), vec![0.0, 0.0, 0.5, 0.0, 0.0, 0.0, 0.0, 3.0]);
        let m = mask_from_csv(&g, "1,1\n3,1\n4,0\n".as_bytes()).unwrap();
        assert_eq!(m.indices(), &[1, 3]);
        assert!(potential_from_csv(&g, "9,1\n".as_bytes()).is_err());
        assert!(potential_from_csv(&g, "1,x\n".as_bytes()).is_err());
    }
}
