use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use schrolab_core::norms::lp_norm;
use schrolab_core::symbols::cutoff_pair;
use schrolab_core::{Complex, Field, Grid, OperatorModel, Support, SymbolFn};

use crate::config::ProbeSpec;
use crate::error::Result;

#[derive(Debug, Clone)]
pub struct Probe {
    pub id: usize,
    pub label: String,
    pub field: Field,
}

/// Linear index of the lattice point `N/2` on every axis.
pub fn center(grid: &Grid) -> usize {
    let c = [grid.points_per_axis() / 2; 3];
    grid.linear_index(&c[..grid.dim()])
        .expect("centre is on the grid")
}

/// The point the kernel experiments put their source at: the centre of the
/// box, or the domain point nearest to it.
pub fn source(model: &OperatorModel) -> usize {
    let grid = model.grid();
    let c = center(grid);
    match model.mask() {
        Some(mask) if !mask.contains(c) => *mask
            .indices()
            .iter()
            .min_by(|&&a, &&b| {
                grid.distance_linear(a, c)
                    .total_cmp(&grid.distance_linear(b, c))
            })
            .expect("masks are non-empty"),
        _ => c,
    }
}

fn attach_mask(model: &OperatorModel, f: Field) -> Result<Field> {
    Ok(match model.mask() {
        Some(mask) => f.with_mask(mask.clone())?,
        None => f,
    })
}

fn normalized(f: Field) -> Result<Field> {
    let l1 = lp_norm(&f, 1.0)?;
    Ok(if l1 > 0.0 { f.scale(l1.recip()) } else { f })
}

/// `phi1(|xi|) (1 + |xi|^2)^{-1}` written in the spectral variable
/// `lambda = |xi|^m`.
pub fn witness_symbol(m: u32) -> SymbolFn {
    let phi1 = cutoff_pair::<f64>().1;
    let inv = 1.0 / m as f64;
    SymbolFn::real(
        "witness",
        Support {
            lo: 0.5f64.powi(m as i32),
            hi: None,
        },
        move |lambda| {
            let xi = lambda.powf(inv);
            phi1.eval(xi).re / (1.0 + xi * xi)
        },
    )
}

/// Applies the witness multiplier to `f` and rescales to unit `L^1`; the
/// zero field comes back unchanged.
pub fn witness_filter(model: &OperatorModel, f: &Field) -> Result<Field> {
    normalized(model.apply(&witness_symbol(model.order()), f)?)
}

/// The witness probe centred at [`source`], with `||f||_1 = 1`.
pub fn witness_probe(model: &OperatorModel) -> Result<Field> {
    let grid = model.grid();
    let mi = grid.multi_index(source(model));
    let delta = attach_mask(model, Field::delta(grid, &mi[..grid.dim()])?)?;
    witness_filter(model, &delta)
}

/// Unit-mass deltas on the sublattice with `per_axis` points per axis,
/// skipping points outside the model's domain.
pub fn delta_probes(model: &OperatorModel, per_axis: usize) -> Result<Vec<Field>> {
    let grid = model.grid();
    let n = grid.points_per_axis();
    let per_axis = per_axis.clamp(1, n);
    let stride = n / per_axis;
    let count = per_axis.pow(grid.dim() as u32);
    let mut out = Vec::new();
    for mut c in 0..count {
        let mut idx = [0; 3];
        for slot in idx.iter_mut().take(grid.dim()) {
            *slot = (c % per_axis) * stride + stride / 2;
            c /= per_axis;
        }
        let lin = grid.linear_index(&idx[..grid.dim()])?;
        if model.mask().is_some_and(|m| !m.contains(lin)) {
            continue;
        }
        out.push(attach_mask(model, Field::delta(grid, &idx[..grid.dim()])?)?);
    }
    Ok(out)
}

/// `count` probes, each with `spikes` signed point masses at seeded random
/// domain points, normalized to unit `L^1`.
pub fn spike_probes(
    model: &OperatorModel,
    count: usize,
    spikes: usize,
    seed: u64,
) -> Result<Vec<Field>> {
    let grid = model.grid();
    let domain: Vec<usize> = match model.mask() {
        Some(mask) => mask.indices().to_vec(),
        None => (0..grid.len()).collect(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let mut values = vec![Complex::default(); grid.len()];
            for _ in 0..spikes.max(1) {
                let at = domain[rng.random_range(0..domain.len())];
                values[at] += Complex::new(rng.random_range(-1.0..1.0), 0.0);
            }
            normalized(attach_mask(model, Field::from_values(grid, values)?)?)
        })
        .collect()
}

/// The witness probe (id 0), the deltas, then the spike probes.
pub fn probe_family(model: &OperatorModel, spec: &ProbeSpec, seed: u64) -> Result<Vec<Probe>> {
    let mut out = vec![Probe {
        id: 0,
        label: "witness".into(),
        field: witness_probe(model)?,
    }];
    for f in delta_probes(model, spec.deltas_per_axis)? {
        out.push(Probe {
            id: out.len(),
            label: format!("delta{}", out.len()),
            field: f,
        });
    }
    for f in spike_probes(model, spec.random, spec.spikes, seed)? {
        out.push(Probe {
            id: out.len(),
            label: format!("spikes{}", out.len()),
            field: f,
        });
    }
    Ok(out)
}

/// A smooth non-negative input of unit `L^1`: a seeded sum of Gaussian bumps
/// placed in box coordinates, so refining the grid samples the same function.
pub fn bump_input(grid: &Grid, bumps: usize, seed: u64) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let len = grid.box_length();
    let dim = grid.dim();
    let specs: Vec<([f64; 3], f64, f64)> = (0..bumps)
        .map(|_| {
            let mut c = [0.0; 3];
            for x in c.iter_mut().take(dim) {
                *x = rng.random_range(0.0..len);
            }
            let width = len / 64.0 * rng.random_range(0.5..2.0);
            let amp = rng.random_range(0.2..1.0);
            (c, width, amp)
        })
        .collect();
    let h = grid.spacing();
    let f = Field::from_fn(grid, |idx| {
        let v: f64 = specs
            .iter()
            .map(|(c, w, a)| {
                let r2: f64 = idx
                    .iter()
                    .zip(c)
                    .map(|(&i, &ci)| {
                        let d = (i as f64 * h - ci).abs();
                        let d = d.min(len - d);
                        d * d
                    })
                    .sum();
                a * (-r2 / (2.0 * w * w)).exp()
            })
            .sum();
        Complex::new(v, 0.0)
    });
    normalized(f)
}

/// A rough signed input of unit `L^1`: heavy-tailed independent values.
pub fn rough_input(grid: &Grid, seed: u64) -> Result<Field> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let values: Vec<Complex> = (0..grid.len())
        .map(|_| {
            let u: f64 = rng.random_range(-1.0..1.0);
            Complex::new(u.powi(5) * 8.0 + 0.05 * u, 0.0)
        })
        .collect();
    normalized(Field::from_values(grid, values)?)
}
