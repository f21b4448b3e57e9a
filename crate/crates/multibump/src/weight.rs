//! Sign-changing weight functions `a(x)` on `[0, L]`.
//!
//! A valid weight is positive on `n` open intervals `(sigma_i, tau_i)`
//! (the humps) separated by intervals where it is negative, following the
//! chain `0 = tau_0 <= sigma_1 < tau_1 < .. < sigma_n < tau_n <= sigma_{n+1} = L`,
//! and vanishes near each hump edge like `dist(x, edge)^gamma_i`. The sign
//! pattern is detected numerically by root isolation, and the growth
//! exponents by a log-log fit of `|a|` against the distance to the edge.

use crate::error::{Error, Result};
use crate::Real;
use serde::{Deserialize, Serialize};

/// Points in the detection scan over `[0, L]`.
const SCAN_POINTS: usize = 10_000;
/// Absolute `x` tolerance for refined sign-change locations.
const ROOT_TOL: f64 = 1e-12;
/// Distance window for the growth-exponent fit, relative to `L = 1` scales.
const FIT_DIST_LO: f64 = 1e-4;
const FIT_DIST_HI: f64 = 1e-2;

/// Serializable description of a weight.
///
/// JSON forms:
/// `{"kind":"sin_multibump","m":3,"L":1.0}`,
/// `{"kind":"piecewise_power","L":1.0,"sigma":[..],"tau":[..],"gamma":[..],"c":[..],"d":[..]}`,
/// `{"kind":"tabulated","L":1.0,"x":[..],"a":[..]}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum WeightSpec {
    /// `a(x) = sin(m pi x / L)` with `m` odd, giving `n = (m + 1) / 2` humps.
    SinMultibump {
        m: u32,
        #[serde(rename = "L")]
        length: f64,
    },
    /// Power humps `c_i dist(x, edge)^{gamma_i}` on `(sigma_i, tau_i)`, sine
    /// troughs of depth `d_i` between them, clamped quarter-wave troughs on
    /// boundary negativity intervals. `d` has length `n + 1`; `d[0]`/`d[n]`
    /// are ignored when the corresponding boundary interval is empty.
    PiecewisePower {
        #[serde(rename = "L")]
        length: f64,
        sigma: Vec<f64>,
        tau: Vec<f64>,
        gamma: Vec<f64>,
        c: Vec<f64>,
        d: Vec<f64>,
    },
    /// Piecewise-linear interpolation through `(x_k, a_k)` samples.
    Tabulated {
        #[serde(rename = "L")]
        length: f64,
        x: Vec<f64>,
        a: Vec<f64>,
    },
}

impl WeightSpec {
    pub fn length(&self) -> f64 {
        match self {
            WeightSpec::SinMultibump { length, .. } => *length,
            WeightSpec::PiecewisePower { length, .. } => *length,
            WeightSpec::Tabulated { length, .. } => *length,
        }
    }

    /// Short identifier used in reports.
    pub fn id(&self) -> String {
        match self {
            WeightSpec::SinMultibump { m, length } => format!("sin_multibump(m={m},L={length})"),
            WeightSpec::PiecewisePower { sigma, .. } => {
                format!("piecewise_power(n={})", sigma.len())
            }
            WeightSpec::Tabulated { x, .. } => format!("tabulated({} samples)", x.len()),
        }
    }
}

/// Detected sign geometry: `n` humps `(sigma_i, tau_i)` with fitted edge
/// growth exponents `gamma_i`.
#[derive(Clone, Debug)]
pub struct SignPattern<T> {
    sigma: Vec<T>,
    tau: Vec<T>,
    gamma: Vec<T>,
    length: T,
}

impl<T: Real> SignPattern<T> {
    pub fn n(&self) -> usize {
        self.sigma.len()
    }

    pub fn sigma(&self) -> &[T] {
        &self.sigma
    }

    pub fn tau(&self) -> &[T] {
        &self.tau
    }

    pub fn gamma(&self) -> &[T] {
        &self.gamma
    }

    pub fn length(&self) -> T {
        self.length
    }

    /// Positivity interval `(sigma_i, tau_i)`, `i` zero-based.
    pub fn positivity_interval(&self, i: usize) -> (T, T) {
        (self.sigma[i], self.tau[i])
    }

    /// Nonempty negativity intervals `(tau_i, sigma_{i+1})`, including the
    /// boundary ones when present.
    pub fn negativity_intervals(&self) -> Vec<(T, T)> {
        let n = self.n();
        let mut out = Vec::new();
        let tiny = self.length * T::of(1e-12);
        if self.sigma[0] > tiny {
            out.push((T::zero(), self.sigma[0]));
        }
        for i in 0..n - 1 {
            out.push((self.tau[i], self.sigma[i + 1]));
        }
        if self.length - self.tau[n - 1] > tiny {
            out.push((self.tau[n - 1], self.length));
        }
        out
    }

    fn validate_chain(&self) -> Result<()> {
        let n = self.n();
        if n == 0 {
            return Err(Error::InvalidSpec("weight has no positivity interval".into()));
        }
        let mut prev = T::zero();
        for i in 0..n {
            if self.sigma[i] < prev || self.tau[i] <= self.sigma[i] {
                return Err(Error::InvalidSpec(
                    "sign-change points violate the interval chain ordering".into(),
                ));
            }
            prev = self.tau[i];
        }
        if prev > self.length {
            return Err(Error::InvalidSpec("last sign change beyond the domain".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Form<T> {
    Sin { freq: T },
    Piecewise { sigma: Vec<T>, tau: Vec<T>, gamma: Vec<T>, c: Vec<T>, d: Vec<T>, length: T },
    Tabulated { x: Vec<T>, a: Vec<T> },
}

/// A validated weight: the spec, its detected sign pattern, and `||a||_inf`.
#[derive(Clone, Debug)]
pub struct Weight<T> {
    spec: WeightSpec,
    form: Form<T>,
    pattern: SignPattern<T>,
    sup_norm: T,
    length: T,
}

impl<T: Real> Weight<T> {
    /// Validates the spec, detects the sign pattern by root isolation on a
    /// scan grid (refined by bisection), fits the edge growth exponents, and
    /// computes the sup norm.
    pub fn build(spec: &WeightSpec) -> Result<Self> {
        let form = validate_and_convert::<T>(spec)?;
        let length = T::of(spec.length());
        let pattern = detect_pattern(&form, length)?;
        pattern.validate_chain()?;
        let gamma = fit_gammas(&form, &pattern);
        let pattern = SignPattern { gamma, ..pattern };
        if let Form::Piecewise { gamma: given, .. } = &form {
            for (i, (&fit, &g)) in pattern.gamma.iter().zip(given).enumerate() {
                if (fit - g).abs() > T::of(0.05) {
                    return Err(Error::InvalidSpec(format!(
                        "fitted edge exponent {} on interval {} disagrees with gamma = {}",
                        fit.as_f64(),
                        i + 1,
                        g.as_f64()
                    )));
                }
            }
        }
        let sup_norm = analytic_sup(&form, &pattern);
        let w = Self { spec: spec.clone(), form, pattern, sup_norm, length };
        w.check_sign_consistency()?;
        Ok(w)
    }

    /// Pointwise value; `x` is clamped to `[0, L]` (adaptive integrators may
    /// overshoot the endpoint by rounding).
    pub fn eval(&self, x: T) -> T {
        let x = x.max(T::zero()).min(self.length);
        eval_form(&self.form, x)
    }

    /// Pointwise value with a strict domain check.
    pub fn eval_checked(&self, x: T) -> Result<T> {
        if x < T::zero() || x > self.length {
            return Err(Error::OutOfDomain { x: x.as_f64(), length: self.length.as_f64() });
        }
        Ok(eval_form(&self.form, x))
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    pub fn pattern(&self) -> &SignPattern<T> {
        &self.pattern
    }

    pub fn sup_norm(&self) -> T {
        self.sup_norm
    }

    pub fn length(&self) -> T {
        self.length
    }

    pub fn n_humps(&self) -> usize {
        self.pattern.n()
    }

    /// Rejects patterns whose detected intervals do not carry the claimed
    /// signs strictly (a touching zero inside an interval, for instance).
    fn check_sign_consistency(&self) -> Result<()> {
        let floor = self.sup_norm * T::of(1e-12);
        let margin = self.length * T::of(2e-4);
        for i in 0..self.pattern.n() {
            let (lo, hi) = self.pattern.positivity_interval(i);
            self.check_interval_sign(lo, hi, true, floor, margin)?;
        }
        for (lo, hi) in self.pattern.negativity_intervals() {
            self.check_interval_sign(lo, hi, false, floor, margin)?;
        }
        Ok(())
    }

    fn check_interval_sign(&self, lo: T, hi: T, positive: bool, floor: T, margin: T) -> Result<()> {
        let m = 256;
        for k in 1..m {
            let x = lo + (hi - lo) * T::from_usize(k).unwrap() / T::from_usize(m).unwrap();
            // skip the refinement bands around the interval edges
            if x - lo < margin || hi - x < margin {
                continue;
            }
            let v = eval_form(&self.form, x);
            let ok = if positive { v > floor } else { v < -floor };
            if !ok {
                return Err(Error::InvalidSpec(format!(
                    "weight is not strictly {} at x = {} (value {:e}); pattern violated",
                    if positive { "positive" } else { "negative" },
                    x.as_f64(),
                    v.as_f64(),
                )));
            }
        }
        Ok(())
    }
}

fn validate_and_convert<T: Real>(spec: &WeightSpec) -> Result<Form<T>> {
    if !(spec.length() > 0.0) || !spec.length().is_finite() {
        return Err(Error::InvalidSpec("domain length must be positive".into()));
    }
    match spec {
        WeightSpec::SinMultibump { m, length } => {
            if *m == 0 || m % 2 == 0 {
                return Err(Error::InvalidSpec(format!(
                    "sin_multibump needs odd m >= 1, got {m}"
                )));
            }
            let freq = T::of(*m as f64) * T::PI() / T::of(*length);
            Ok(Form::Sin { freq })
        }
        WeightSpec::PiecewisePower { length, sigma, tau, gamma, c, d } => {
            let n = sigma.len();
            if n == 0 || tau.len() != n || gamma.len() != n || c.len() != n {
                return Err(Error::InvalidSpec(
                    "piecewise_power needs sigma, tau, gamma, c of equal nonzero length".into(),
                ));
            }
            if d.len() != n + 1 {
                return Err(Error::InvalidSpec(format!(
                    "piecewise_power needs n + 1 = {} trough depths, got {}",
                    n + 1,
                    d.len()
                )));
            }
            let mut prev = 0.0f64;
            for i in 0..n {
                if sigma[i] < prev || tau[i] <= sigma[i] {
                    return Err(Error::InvalidSpec(
                        "piecewise_power breakpoints must be strictly increasing in [0, L]".into(),
                    ));
                }
                prev = tau[i];
            }
            if prev > *length {
                return Err(Error::InvalidSpec("breakpoints exceed the domain".into()));
            }
            if gamma.iter().any(|&g| !(g > 0.0))
                || c.iter().any(|&v| !(v > 0.0))
                || d.iter().any(|&v| !(v > 0.0))
            {
                return Err(Error::InvalidSpec(
                    "piecewise_power needs gamma, c, d strictly positive".into(),
                ));
            }
            Ok(Form::Piecewise {
                sigma: sigma.iter().map(|&v| T::of(v)).collect(),
                tau: tau.iter().map(|&v| T::of(v)).collect(),
                gamma: gamma.iter().map(|&v| T::of(v)).collect(),
                c: c.iter().map(|&v| T::of(v)).collect(),
                d: d.iter().map(|&v| T::of(v)).collect(),
                length: T::of(*length),
            })
        }
        WeightSpec::Tabulated { length, x, a } => {
            if x.len() < 64 {
                return Err(Error::InvalidSpec(format!(
                    "tabulated weight needs at least 64 samples, got {}",
                    x.len()
                )));
            }
            if x.len() != a.len() {
                return Err(Error::InvalidSpec("tabulated x and a lengths differ".into()));
            }
            if x.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidSpec("tabulated x samples must increase".into()));
            }
            if (x[0] - 0.0).abs() > 1e-12 || (x[x.len() - 1] - length).abs() > 1e-12 {
                return Err(Error::InvalidSpec("tabulated samples must span [0, L]".into()));
            }
            Ok(Form::Tabulated {
                x: x.iter().map(|&v| T::of(v)).collect(),
                a: a.iter().map(|&v| T::of(v)).collect(),
            })
        }
    }
}

fn eval_form<T: Real>(form: &Form<T>, x: T) -> T {
    match form {
        Form::Sin { freq } => (*freq * x).sin(),
        Form::Piecewise { sigma, tau, gamma, c, d, length } => {
            let n = sigma.len();
            // hump containing x?
            for i in 0..n {
                if x >= sigma[i] && x <= tau[i] {
                    let dist = (x - sigma[i]).min(tau[i] - x);
                    return c[i] * dist.powf(gamma[i]);
                }
            }
            // left boundary trough [0, sigma_1): quarter wave, deepest at 0
            if x < sigma[0] {
                let half = sigma[0];
                return -d[0] * (T::PI() * (half - x) / (half + half)).sin();
            }
            // interior troughs (tau_i, sigma_{i+1}): full sine arch
            for i in 0..n - 1 {
                if x > tau[i] && x < sigma[i + 1] {
                    let w = sigma[i + 1] - tau[i];
                    return -d[i + 1] * (T::PI() * (x - tau[i]) / w).sin();
                }
            }
            // right boundary trough (tau_n, L]: quarter wave, deepest at L
            let w = *length - tau[n - 1];
            -d[n] * (T::PI() * (x - tau[n - 1]) / (w + w)).sin()
        }
        Form::Tabulated { x: xs, a } => {
            // binary search for the containing segment
            match xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
                Ok(k) => a[k],
                Err(k) => {
                    if k == 0 {
                        a[0]
                    } else if k >= xs.len() {
                        a[xs.len() - 1]
                    } else {
                        let t = (x - xs[k - 1]) / (xs[k] - xs[k - 1]);
                        a[k - 1] + t * (a[k] - a[k - 1])
                    }
                }
            }
        }
    }
}

fn detect_pattern<T: Real>(form: &Form<T>, length: T) -> Result<SignPattern<T>> {
    let m = SCAN_POINTS;
    let xs: Vec<T> = (0..=m)
        .map(|k| length * T::from_usize(k).unwrap() / T::from_usize(m).unwrap())
        .collect();
    let vals: Vec<T> = xs.iter().map(|&x| eval_form(form, x)).collect();
    let sup_est = vals.iter().fold(T::zero(), |s, v| s.max(v.abs()));
    if sup_est == T::zero() {
        return Err(Error::InvalidSpec("weight vanishes identically on the scan grid".into()));
    }

    // roots by sign change + bisection refinement
    let mut roots: Vec<T> = Vec::new();
    for k in 0..m {
        let (va, vb) = (vals[k], vals[k + 1]);
        if va == T::zero() && k > 0 {
            // the scan landed exactly on a root
            roots.push(xs[k]);
            continue;
        }
        if va * vb < T::zero() {
            let mut lo = xs[k];
            let mut hi = xs[k + 1];
            let mut flo = va;
            let tol = T::of(ROOT_TOL);
            while hi - lo > tol {
                let mid = (lo + hi) / T::of(2.0);
                let fm = eval_form(form, mid);
                if fm == T::zero() {
                    lo = mid;
                    hi = mid;
                    break;
                }
                if (fm > T::zero()) == (flo > T::zero()) {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
            roots.push((lo + hi) / T::of(2.0));
        }
    }

    // region signs between consecutive roots
    let mut bounds = vec![T::zero()];
    bounds.extend(roots.iter().copied());
    bounds.push(length);
    let mut sigma = Vec::new();
    let mut tau = Vec::new();
    let mut prev_sign: Option<bool> = None;
    for w in bounds.windows(2) {
        let (lo, hi) = (w[0], w[1]);
        if hi - lo <= length * T::of(1e-9) {
            continue; // degenerate sliver from a root at the boundary
        }
        let mid = (lo + hi) / T::of(2.0);
        let v = eval_form(form, mid);
        if v.abs() <= sup_est * T::of(1e-12) {
            return Err(Error::InvalidSpec(format!(
                "weight is numerically zero on a whole region around x = {}",
                mid.as_f64()
            )));
        }
        let pos = v > T::zero();
        if prev_sign == Some(pos) {
            return Err(Error::InvalidSpec(
                "adjacent regions share a sign: the weight touches zero without crossing".into(),
            ));
        }
        prev_sign = Some(pos);
        if pos {
            sigma.push(lo);
            tau.push(hi);
        }
    }
    if sigma.is_empty() {
        return Err(Error::InvalidSpec("weight has no positivity interval".into()));
    }
    Ok(SignPattern { gamma: vec![T::one(); sigma.len()], sigma, tau, length })
}

/// Least-squares slope of `ln |a|` against `ln dist` near both edges of each
/// hump, probing distances in `[1e-4, 1e-2]` (clamped inside narrow humps).
fn fit_gammas<T: Real>(form: &Form<T>, pattern: &SignPattern<T>) -> Vec<T> {
    let mut gammas = Vec::with_capacity(pattern.n());
    for i in 0..pattern.n() {
        let (lo, hi) = pattern.positivity_interval(i);
        let width = hi - lo;
        let d_hi = T::of(FIT_DIST_HI).min(width * T::of(0.45));
        let d_lo = T::of(FIT_DIST_LO).min(d_hi / T::of(100.0));
        let samples = 24usize;
        let mut ts = Vec::with_capacity(2 * samples);
        let mut ys = Vec::with_capacity(2 * samples);
        for k in 0..samples {
            let f = T::from_usize(k).unwrap() / T::from_usize(samples - 1).unwrap();
            let dist = d_lo * (d_hi / d_lo).powf(f);
            for &x in &[lo + dist, hi - dist] {
                let v = eval_form(form, x).abs();
                if v > T::zero() {
                    ts.push(dist.ln());
                    ys.push(v.ln());
                }
            }
        }
        gammas.push(lsq_slope(&ts, &ys));
    }
    gammas
}

fn lsq_slope<T: Real>(t: &[T], y: &[T]) -> T {
    let n = T::from_usize(t.len()).unwrap();
    let tm = t.iter().copied().sum::<T>() / n;
    let ym = y.iter().copied().sum::<T>() / n;
    let mut num = T::zero();
    let mut den = T::zero();
    for (&ti, &yi) in t.iter().zip(y) {
        num = num + (ti - tm) * (yi - ym);
        den = den + (ti - tm) * (ti - tm);
    }
    num / den
}

fn analytic_sup<T: Real>(form: &Form<T>, pattern: &SignPattern<T>) -> T {
    match form {
        Form::Sin { .. } => T::one(),
        Form::Piecewise { sigma, tau, gamma, c, d, .. } => {
            let n = sigma.len();
            let mut sup = T::zero();
            for i in 0..n {
                let half = (tau[i] - sigma[i]) / T::of(2.0);
                sup = sup.max(c[i] * half.powf(gamma[i]));
            }
            let tiny = pattern.length * T::of(1e-12);
            if sigma[0] > tiny {
                sup = sup.max(d[0]);
            }
            for i in 1..n {
                sup = sup.max(d[i]);
            }
            if pattern.length - tau[n - 1] > tiny {
                sup = sup.max(d[n]);
            }
            sup
        }
        Form::Tabulated { a, .. } => a.iter().fold(T::zero(), |s, v| s.max(v.abs())),
    }
}
