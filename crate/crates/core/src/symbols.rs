//! Scalar spectral functions `lambda -> F(lambda)` on `[0, inf)`: smooth
//! cutoffs, the dyadic partition of unity and the composite multipliers
//! built from them.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex;

use crate::error::{invalid, Error, Result};
use crate::scalar::Real;

/// Closed interval `[lo, hi]` of the half-line; `hi = None` is unbounded.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Support<T> {
    pub lo: T,
    pub hi: Option<T>,
}

impl<T: Real> Support<T> {
    pub fn half_line() -> Self {
        Self {
            lo: T::zero(),
            hi: None,
        }
    }

    pub fn bounded(lo: T, hi: T) -> Self {
        Self { lo, hi: Some(hi) }
    }

    pub fn contains(&self, x: T) -> bool {
        x >= self.lo && self.hi.is_none_or(|hi| x <= hi)
    }

    pub fn intersect(&self, other: &Self) -> Self {
        let hi = match (self.hi, other.hi) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        Self {
            lo: self.lo.max(other.lo),
            hi,
        }
    }

    /// Support of `lambda -> F(c lambda)` for `c > 0`.
    pub fn dilate(&self, c: T) -> Self {
        Self {
            lo: self.lo / c,
            hi: self.hi.map(|h| h / c),
        }
    }
}

type Eval<T> = Arc<dyn Fn(T) -> Complex<T> + Send + Sync>;

/// A spectral function with a declared support and a label.
///
/// Evaluation returns exactly zero outside the declared support.
#[derive(Clone)]
pub struct SymbolFn<T: Real> {
    label: String,
    support: Support<T>,
    eval: Eval<T>,
}

impl<T: Real> fmt::Debug for SymbolFn<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SymbolFn")
            .field("label", &self.label)
            .field("support", &self.support)
            .finish()
    }
}

impl<T: Real> SymbolFn<T> {
    pub fn new(
        label: impl Into<String>,
        support: Support<T>,
        eval: impl Fn(T) -> Complex<T> + Send + Sync + 'static,
    ) -> Self {
        Self {
            label: label.into(),
            support,
            eval: Arc::new(eval),
        }
    }

    pub fn real(
        label: impl Into<String>,
        support: Support<T>,
        eval: impl Fn(T) -> T + Send + Sync + 'static,
    ) -> Self {
        Self::new(label, support, move |x| Complex::new(eval(x), T::zero()))
    }

    pub fn constant(c: Complex<T>) -> Self {
        Self::new(
            format!("const:re={},im={}", c.re, c.im),
            Support::half_line(),
            move |_| c,
        )
    }

    pub fn one() -> Self {
        Self::real("one", Support::half_line(), |_| T::one())
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn support(&self) -> Support<T> {
        self.support
    }

    #[inline]
    pub fn eval(&self, lambda: T) -> Complex<T> {
        if self.support.contains(lambda) {
            (self.eval)(lambda)
        } else {
            Complex::default()
        }
    }

    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// Pointwise product `F G`.
    pub fn mul(&self, other: &Self) -> Self {
        let (a, b) = (self.clone(), other.clone());
        Self::new(
            format!("({})*({})", self.label, other.label),
            self.support.intersect(&other.support),
            move |x| a.eval(x) * b.eval(x),
        )
    }

    /// `lambda -> F(c lambda)`.
    pub fn dilate(&self, c: T) -> Self {
        let a = self.clone();
        Self::new(
            format!("({})@{}", self.label, c),
            self.support.dilate(c),
            move |x| a.eval(c * x),
        )
    }

    pub fn conj(&self) -> Self {
        let a = self.clone();
        Self::new(format!("conj({})", self.label), self.support, move |x| {
            a.eval(x).conj()
        })
    }

    /// Pointwise product with a function that is not itself tracked as a symbol.
    pub fn times(&self, label: &str, g: impl Fn(T) -> Complex<T> + Send + Sync + 'static) -> Self {
        let a = self.clone();
        Self::new(
            format!("({})*{label}", self.label),
            self.support,
            move |x| a.eval(x) * g(x),
        )
    }

    /// Parses a label of the form `name[:key=val{,key=val}]`.
    pub fn from_label(label: &str) -> Result<Self> {
        let (name, params) = parse_label(label)?;
        let get = |key: &str| -> Result<f64> {
            params.get(key).copied().ok_or_else(|| Error::Parse {
                input: label.to_string(),
                reason: format!("missing parameter `{key}`"),
            })
        };
        let get_or = |key: &str, default: f64| params.get(key).copied().unwrap_or(default);
        let int = |key: &str| -> Result<i32> {
            let v = get(key)?;
            if v.fract() != 0.0 {
                return Err(Error::Parse {
                    input: label.to_string(),
                    reason: format!("parameter `{key}` must be an integer"),
                });
            }
            Ok(v as i32)
        };
        let symbol = match name.as_str() {
            "one" => Self::one(),
            "bump" => dyadic_bump(),
            "phi0" => cutoff_pair().0,
            "phi1" => cutoff_pair().1,
            "heat" => heat_symbol(T::lit(get("t")?)),
            "resolvent" => resolvent_power(T::lit(get_or("t", 1.0)), T::lit(get("s")?))?,
            "schrodinger" => schrodinger_symbol(T::lit(get("t")?), T::lit(get_or("s", 0.0)))?,
            "Fk" => build_fk(int("k")?, int("k0")?, int("m")?, int("n")?)?,
            "Gk" => build_gk(int("k")?, int("k0")?, int("m")?, int("n")?)?,
            _ => {
                return Err(Error::Parse {
                    input: label.to_string(),
                    reason: format!("unknown symbol `{name}`"),
                })
            }
        };
        Ok(symbol.with_label(label))
    }
}

/// Splits `name[:key=val{,key=val}]` into its name and numeric parameters.
pub fn parse_label(label: &str) -> Result<(String, BTreeMap<String, f64>)> {
    let err = |reason: String| Error::Parse {
        input: label.to_string(),
        reason,
    };
    let (name, rest) = match label.split_once(':') {
        Some((n, r)) => (n.trim(), Some(r)),
        None => (label.trim(), None),
    };
    if name.is_empty() {
        return Err(err("empty symbol name".into()));
    }
    let mut params = BTreeMap::new();
    if let Some(rest) = rest {
        for pair in rest.split(',') {
            let (k, v) = pair
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got `{pair}`")))?;
            let value: f64 = v
                .trim()
                .parse()
                .map_err(|_| err(format!("`{}` is not a number", v.trim())))?;
            if params.insert(k.trim().to_string(), value).is_some() {
                return Err(err(format!("duplicate key `{}`", k.trim())));
            }
        }
    }
    Ok((name.to_string(), params))
}

/// `psi(x) / (psi(x) + psi(1 - x))` with `psi(x) = exp(-1/x)` for `x > 0`:
/// a smooth monotone step from 0 at `x <= 0` to 1 at `x >= 1`.
pub fn smooth_step<T: Real>(x: T) -> T {
    let psi = |y: T| {
        if y > T::zero() {
            (-y.recip()).exp()
        } else {
            T::zero()
        }
    };
    if x <= T::zero() {
        return T::zero();
    }
    if x >= T::one() {
        return T::one();
    }
    let a = psi(x);
    a / (a + psi(T::one() - x))
}

/// `chi(lambda) = smooth_step(4 lambda - 1)`: 0 on `[0, 1/4]`, 1 on `[1/2, inf)`.
fn chi<T: Real>(lambda: T) -> T {
    smooth_step(T::lit(4.0) * lambda - T::one())
}

/// `phi(lambda) = chi(lambda) - chi(lambda / 2)`, supported in `[1/4, 1]`,
/// with `sum_l phi(2^-l lambda) = 1` for every `lambda > 0`.
pub fn dyadic_bump<T: Real>() -> SymbolFn<T> {
    SymbolFn::real("bump", Support::bounded(T::lit(0.25), T::one()), |x| {
        chi(x) - chi(x / T::lit(2.0))
    })
}

/// `(phi0, phi1)` with `phi1(lambda) = smooth_step(2 lambda - 1)` and `phi0 = 1 - phi1`.
pub fn cutoff_pair<T: Real>() -> (SymbolFn<T>, SymbolFn<T>) {
    let phi1 = |x: T| smooth_step(T::lit(2.0) * x - T::one());
    (
        SymbolFn::real("phi0", Support::bounded(T::zero(), T::one()), move |x| {
            T::one() - phi1(x)
        }),
        SymbolFn::real(
            "phi1",
            Support {
                lo: T::lit(0.5),
                hi: None,
            },
            phi1,
        ),
    )
}

/// `e^{-t lambda}`.
pub fn heat_symbol<T: Real>(t: T) -> SymbolFn<T> {
    SymbolFn::real(format!("heat:t={t}"), Support::half_line(), move |x| {
        (-t * x).exp()
    })
}

/// `(1 + t lambda)^{-s}`.
pub fn resolvent_power<T: Real>(t: T, s: T) -> Result<SymbolFn<T>> {
    if s < T::zero() || t < T::zero() {
        return Err(invalid("s", "resolvent powers need t >= 0 and s >= 0"));
    }
    Ok(SymbolFn::real(
        format!("resolvent:t={t},s={s}"),
        Support::half_line(),
        move |x| (T::one() + t * x).powf(-s),
    ))
}

/// `e^{i t lambda} (1 + lambda)^{-s}`.
pub fn schrodinger_symbol<T: Real>(t: T, s: T) -> Result<SymbolFn<T>> {
    if s < T::zero() {
        return Err(invalid("s", "smoothing order must be non-negative"));
    }
    Ok(SymbolFn::new(
        format!("schrodinger:t={t},s={s}"),
        Support::half_line(),
        move |x| Complex::from_polar((T::one() + x).powf(-s), t * x),
    ))
}

/// `e^{-z lambda}` for a complex time `z` with non-negative real part.
pub fn complex_heat_symbol<T: Real>(z: Complex<T>) -> SymbolFn<T> {
    SymbolFn::new(
        format!("complex_heat:re={},im={}", z.re, z.im),
        Support::half_line(),
        move |x| (-z * x).exp(),
    )
}

fn dyadic_split<T: Real>(k: i32, k0: i32, m: i32, n: i32) -> Result<(T, T, T)> {
    if k <= k0 {
        return Err(invalid("k", format!("need k > k0 (got k={k}, k0={k0})")));
    }
    if m < 2 {
        return Err(invalid("m", "operator order must be at least 2"));
    }
    if n < 1 {
        return Err(invalid("n", "dimension must be at least 1"));
    }
    let heat_rate = T::exp2i(m * k);
    let scale = T::lit(2.0).powf(-T::lit((m * (k - k0)) as f64 / (m - 1) as f64));
    Ok((heat_rate, scale, T::lit(n as f64 / 2.0)))
}

/// `F_k(lambda) = (1+lambda)^{-n/2} (1 - e^{-2^{mk} lambda}) phi0(2^{-m(k-k0)/(m-1)} lambda)`.
pub fn build_fk<T: Real>(k: i32, k0: i32, m: i32, n: i32) -> Result<SymbolFn<T>> {
    let (rate, scale, half_n) = dyadic_split::<T>(k, k0, m, n)?;
    let phi0 = cutoff_pair::<T>().0;
    Ok(SymbolFn::real(
        format!("Fk:m={m},k={k},k0={k0},n={n}"),
        Support::bounded(T::zero(), scale.recip()),
        move |x| (T::one() + x).powf(-half_n) * -(-rate * x).exp_m1() * phi0.eval(scale * x).re,
    ))
}

/// `G_k(lambda) = (1+lambda)^{-n/2} (1 - e^{-2^{mk} lambda}) phi1(2^{-m(k-k0)/(m-1)} lambda)`.
pub fn build_gk<T: Real>(k: i32, k0: i32, m: i32, n: i32) -> Result<SymbolFn<T>> {
    let (rate, scale, half_n) = dyadic_split::<T>(k, k0, m, n)?;
    let phi1 = cutoff_pair::<T>().1;
    Ok(SymbolFn::real(
        format!("Gk:m={m},k={k},k0={k0},n={n}"),
        Support {
            lo: T::lit(0.5) / scale,
            hi: None,
        },
        move |x| (T::one() + x).powf(-half_n) * -(-rate * x).exp_m1() * phi1.eval(scale * x).re,
    ))
}

/// The integer `k0` with `2^{k0} <= sqrt(1 + |t|) < 2^{k0 + 1}`.
pub fn k0_of_t(t: f64) -> i32 {
    let v = 1.0 + t.abs();
    let mut k = (0.5 * v.log2()).floor() as i32;
    // Guard the floor against rounding at exact powers of four.
    while 4f64.powi(k + 1) <= v {
        k += 1;
    }
    while 4f64.powi(k) > v {
        k -= 1;
    }
    k
}

/// `min(1, 2^{l+mk}) min(1, 2^{-ln/2}) max(1, (2^l (1+|t|))^{s/2})`.
pub fn dyadic_piece_envelope(l: i32, k: i32, m: i32, n: i32, s: f64, t: f64) -> f64 {
    let a = 2f64.powi(l + m * k).min(1.0);
    let b = 2f64.powf(-(l as f64) * n as f64 / 2.0).min(1.0);
    let c = (2f64.powi(l) * (1.0 + t.abs())).powf(s / 2.0).max(1.0);
    a * b * c
}
