//! Adaptive Dormand-Prince 5(4) integration for the planar systems used by
//! the shooting engine, with cap events and cubic Hermite interrogation of
//! accepted steps.

use crate::error::{Error, Result};
use crate::Real;

/// One accepted step: endpoint states and field evaluations, enough for
/// cubic Hermite interpolation of either component.
#[derive(Clone, Copy, Debug)]
pub struct IvpStep<T> {
    pub x0: T,
    pub x1: T,
    pub y0: [T; 2],
    pub y1: [T; 2],
    pub f0: [T; 2],
    pub f1: [T; 2],
}

impl<T: Real> IvpStep<T> {
    fn h(&self) -> T {
        self.x1 - self.x0
    }

    /// Hermite value of component `c` at `x` inside the step.
    pub fn eval(&self, x: T, c: usize) -> T {
        let h = self.h();
        let th = (x - self.x0) / h;
        let (u0, u1) = (self.y0[c], self.y1[c]);
        let (m0, m1) = (h * self.f0[c], h * self.f1[c]);
        let t2 = th * th;
        let t3 = t2 * th;
        let two = T::of(2.0);
        let three = T::of(3.0);
        (two * t3 - three * t2 + T::one()) * u0
            + (t3 - two * t2 + th) * m0
            + (three * t2 - two * t3) * u1
            + (t3 - t2) * m1
    }

    /// Max of component `c` over the step restricted to `[lo, hi]`.
    pub fn max_on(&self, lo: T, hi: T, c: usize) -> Option<T> {
        let a = self.x0.max(lo);
        let b = self.x1.min(hi);
        if b < a {
            return None;
        }
        let mut best = self.eval(a, c).max(self.eval(b, c));
        // interior critical points of the cubic: H'(theta) quadratic
        let h = self.h();
        let (u0, u1) = (self.y0[c], self.y1[c]);
        let (m0, m1) = (h * self.f0[c], h * self.f1[c]);
        let two = T::of(2.0);
        let three = T::of(3.0);
        let c1 = m0;
        let c2 = -three * u0 - two * m0 + three * u1 - m1;
        let c3 = two * u0 + m0 - two * u1 + m1;
        // derivative: c1 + 2 c2 th + 3 c3 th^2 = 0
        let aa = three * c3;
        let bb = two * c2;
        let cc = c1;
        let disc = bb * bb - T::of(4.0) * aa * cc;
        if disc >= T::zero() {
            let sq = disc.sqrt();
            for sign in [T::one(), -T::one()] {
                let th = if aa.abs() > T::zero() {
                    (-bb + sign * sq) / (two * aa)
                } else if bb.abs() > T::zero() {
                    -cc / bb
                } else {
                    continue;
                };
                if th > T::zero() && th < T::one() {
                    let x = self.x0 + th * h;
                    if x >= a && x <= b {
                        best = best.max(self.eval(x, c));
                    }
                }
            }
        }
        Some(best)
    }

    /// First `x` in the step where component 0 crosses `level`, refined by
    /// bisection on the Hermite interpolant.
    pub fn crossing(&self, level: T) -> Option<T> {
        let g = |x: T| self.eval(x, 0) - level;
        let mut lo = self.x0;
        let mut hi = self.x1;
        let (mut glo, ghi) = (g(lo), g(hi));
        if glo == T::zero() {
            return Some(lo);
        }
        if glo * ghi > T::zero() {
            // endpoints on the same side: look for an interior excursion
            let m = 16;
            let mut found = None;
            for k in 1..=m {
                let x = lo + (hi - lo) * T::from_usize(k).unwrap() / T::from_usize(m).unwrap();
                if g(x) * glo < T::zero() {
                    found = Some(x);
                    break;
                }
            }
            hi = found?;
        }
        for _ in 0..200 {
            let mid = (lo + hi) / T::of(2.0);
            if mid == lo || mid == hi {
                break;
            }
            if g(mid) * glo <= T::zero() {
                hi = mid;
            } else {
                lo = mid;
                glo = g(lo);
            }
        }
        Some((lo + hi) / T::of(2.0))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum IvpEnd {
    /// Integrated through to `x_end`.
    Reached,
    /// Component 0 reached the high cap.
    CapHigh,
    /// Component 0 reached the low cap.
    CapLow,
}

#[derive(Clone, Debug)]
pub struct IvpResult<T> {
    pub steps: Vec<IvpStep<T>>,
    pub end: IvpEnd,
    pub x_final: T,
    pub y_final: [T; 2],
    pub n_rejected: usize,
}

impl<T: Real> IvpResult<T> {
    /// Hermite value of component `c` at `x`; `None` beyond the final step.
    pub fn sample(&self, x: T, c: usize) -> Option<T> {
        if self.steps.is_empty() {
            return None;
        }
        let idx = self.steps.partition_point(|s| s.x1 < x);
        let step = self.steps.get(idx)?;
        if x < step.x0 || x > step.x1 {
            return None;
        }
        Some(step.eval(x, c))
    }

    /// Max of component 0 over `[lo, hi]` along the trajectory.
    pub fn max_on(&self, lo: T, hi: T) -> T {
        let mut best = T::neg_infinity();
        let mut seen = false;
        for s in &self.steps {
            if let Some(v) = s.max_on(lo, hi, 0) {
                best = best.max(v);
                seen = true;
            }
        }
        if seen {
            best
        } else {
            T::zero()
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub struct IvpOptions<T> {
    pub rtol: T,
    pub atol: T,
    pub max_step: Option<T>,
    pub cap_high: Option<T>,
    pub cap_low: Option<T>,
}

impl<T: Real> Default for IvpOptions<T> {
    fn default() -> Self {
        Self {
            rtol: T::of(1e-10),
            atol: T::of(1e-12),
            max_step: None,
            cap_high: None,
            cap_low: None,
        }
    }
}

// Dormand-Prince 5(4) tableau.
const A: [[f64; 6]; 6] = [
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
// b5 - b4: error estimate weights (7 stages, FSAL)
const E: [f64; 7] = [
    35.0 / 384.0 - 5179.0 / 57600.0,
    0.0,
    500.0 / 1113.0 - 7571.0 / 16695.0,
    125.0 / 192.0 - 393.0 / 640.0,
    -2187.0 / 6784.0 + 92097.0 / 339200.0,
    11.0 / 84.0 - 187.0 / 2100.0,
    -1.0 / 40.0,
];

/// Integrates `y' = f(x, y)` from `x0` to `x_end > x0`. Stops early when
/// component 0 crosses a cap (first crossing located on the Hermite
/// interpolant and the final step truncated there).
pub fn integrate<T: Real, F: Fn(T, [T; 2]) -> [T; 2]>(
    f: F,
    x0: T,
    x_end: T,
    y0: [T; 2],
    opts: &IvpOptions<T>,
) -> Result<IvpResult<T>> {
    assert!(x_end > x0, "forward integration only");
    let span = x_end - x0;
    let hmax = opts.max_step.unwrap_or(span).min(span);
    let mut h = (span * T::of(1e-3)).min(hmax);
    let mut x = x0;
    let mut y = y0;
    let mut fy = f(x, y);
    let mut steps: Vec<IvpStep<T>> = Vec::new();
    let mut n_rejected = 0usize;

    let a: Vec<Vec<T>> =
        A.iter().map(|row| row.iter().map(|&v| T::of(v)).collect()).collect();
    let c: Vec<T> = C.iter().map(|&v| T::of(v)).collect();
    let e: Vec<T> = E.iter().map(|&v| T::of(v)).collect();

    let done_tol = T::epsilon() * span * T::of(4.0);
    while x_end - x > done_tol {
        let remaining = x_end - x;
        h = h.min(hmax);
        // stretch the final step onto the endpoint instead of leaving a
        // sliver that would underflow
        if h > remaining * T::of(0.9) {
            h = remaining;
        }
        if h < T::epsilon() * T::of(16.0) * x.abs().max(T::one()) {
            return Err(Error::IntegrationFault {
                x: x.as_f64(),
                reason: "step size underflow".into(),
            });
        }

        // stages
        let mut k = [[T::zero(); 2]; 7];
        k[0] = fy;
        let mut bad = false;
        for s in 0..6 {
            let mut ys = y;
            for comp in 0..2 {
                let mut acc = T::zero();
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    acc = acc + a[s][j] * kj[comp];
                }
                ys[comp] = y[comp] + h * acc;
            }
            if ys.iter().any(|v| !v.is_finite()) {
                bad = true;
                break;
            }
            k[s + 1] = f(x + c[s] * h, ys);
            if k[s + 1].iter().any(|v| !v.is_finite()) {
                bad = true;
                break;
            }
        }

        let (y1, err) = if bad {
            ([T::nan(); 2], T::infinity())
        } else {
            // 5th-order solution is stage 7's state (FSAL)
            let mut y1 = y;
            for comp in 0..2 {
                let mut acc = T::zero();
                for j in 0..6 {
                    acc = acc + a[5][j] * k[j][comp];
                }
                y1[comp] = y[comp] + h * acc;
            }
            let mut err = T::zero();
            for comp in 0..2 {
                let mut de = T::zero();
                for (j, kj) in k.iter().enumerate() {
                    de = de + e[j] * kj[comp];
                }
                de = de * h;
                let sc = opts.atol + opts.rtol * y[comp].abs().max(y1[comp].abs());
                err = err + (de / sc) * (de / sc);
            }
            (y1, (err / T::of(2.0)).sqrt())
        };

        if !(err <= T::one()) || y1.iter().any(|v| !v.is_finite()) {
            n_rejected += 1;
            let fac = if err.is_finite() {
                (T::of(0.9) * err.powf(T::of(-0.2))).max(T::of(0.2))
            } else {
                T::of(0.2)
            };
            h = h * fac;
            continue;
        }

        let x1 = x + h;
        let f1 = k[6]; // FSAL: field at (x1, y1)
        let step = IvpStep { x0: x, x1, y0: y, y1, f0: fy, f1 };

        // cap events on component 0
        let mut capped: Option<(IvpEnd, T)> = None;
        if let Some(cap) = opts.cap_high {
            let peak = step.max_on(x, x1, 0).unwrap_or(y1[0]);
            if peak >= cap {
                if let Some(xc) = step.crossing(cap) {
                    capped = Some((IvpEnd::CapHigh, xc));
                }
            }
        }
        if capped.is_none() {
            if let Some(cap) = opts.cap_low {
                // min via max of the negated component is overkill here: the
                // trajectories we cap from below are monotone through the
                // crossing, so endpoint checks plus Hermite refinement do
                if y1[0] <= cap || step.eval((x + x1) / T::of(2.0), 0) <= cap {
                    if let Some(xc) = step.crossing(cap) {
                        capped = Some((IvpEnd::CapLow, xc));
                    }
                }
            }
        }

        if let Some((end, xc)) = capped {
            let yc = [step.eval(xc, 0), step.eval(xc, 1)];
            let fc = f(xc, yc);
            steps.push(IvpStep { x0: x, x1: xc, y0: y, y1: yc, f0: fy, f1: fc });
            return Ok(IvpResult { steps, end, x_final: xc, y_final: yc, n_rejected });
        }

        steps.push(step);
        x = x1;
        y = y1;
        fy = f1;
        let fac = (T::of(0.9) * err.max(T::of(1e-10)).powf(T::of(-0.2)))
            .max(T::of(0.2))
            .min(T::of(5.0));
        h = h * fac;
    }

    Ok(IvpResult { steps, end: IvpEnd::Reached, x_final: x, y_final: y, n_rejected })
}
