//! Numerical evaluation of the limit functions zeta, phi, phi^{-1} and
//! eta = zeta o phi^{-1}, plus the normalization identities they satisfy.
//!
//! zeta(u) is 0 for u <= 1/2 and otherwise the root in (0,1) of
//! 1 - z = exp(-2uz); phi(v) = integral_0^v (1 - zeta^2), which equals v for
//! v <= 1/2 and tends to 1 as v -> infinity.

use crate::error::{Error, Result};

const ROOT_TOL: f64 = 1e-15;
const QUAD_TOL: f64 = 1e-11;

/// Giant-component fraction of the Erdős–Rényi graph with un edges.
pub fn zeta(u: f64) -> Result<f64> {
    if u < 0.0 || !u.is_finite() {
        return Err(Error::Domain(format!("zeta argument {u} outside [0,inf)")));
    }
    if u <= 0.5 {
        return Ok(0.0);
    }
    let g = |z: f64| 1.0 - z - (-2.0 * u * z).exp();
    let dg = |z: f64| -1.0 + 2.0 * u * (-2.0 * u * z).exp();
    // g > 0 just right of 0 (slope 2u-1 > 0), g(1) = -exp(-2u) < 0.
    let mut lo = f64::MIN_POSITIVE;
    let mut hi = 1.0;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if g(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    // Newton polish inside the bracket.
    let mut z = 0.5 * (lo + hi);
    for _ in 0..8 {
        let gz = g(z);
        if gz.abs() < ROOT_TOL {
            break;
        }
        let step = gz / dg(z);
        let next = z - step;
        z = if next > lo && next < hi { next } else { 0.5 * (lo + hi) };
    }
    Ok(z)
}

fn simpson(f: &impl Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64, f64) {
    let m = 0.5 * (a + b);
    let fm = f(m);
    ((b - a) / 6.0 * (fa + 4.0 * fm + fb), m, fm)
}

fn adaptive_simpson_rec(
    f: &impl Fn(f64) -> f64,
    a: f64,
    fa: f64,
    b: f64,
    fb: f64,
    whole: f64,
    m: f64,
    fm: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let (left, lm, flm) = simpson(f, a, fa, m, fm);
    let (right, rm, frm) = simpson(f, m, fm, b, fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        left + right + delta / 15.0
    } else {
        adaptive_simpson_rec(f, a, fa, m, fm, left, lm, flm, 0.5 * tol, depth - 1)
            + adaptive_simpson_rec(f, m, fm, b, fb, right, rm, frm, 0.5 * tol, depth - 1)
    }
}

fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    if b <= a {
        return 0.0;
    }
    let (fa, fb) = (f(a), f(b));
    let (whole, m, fm) = simpson(&f, a, fa, b, fb);
    adaptive_simpson_rec(&f, a, fa, b, fb, whole, m, fm, tol, 40)
}

/// Effective-time map: integral of 1 - zeta^2 from 0 to v.
pub fn phi(v: f64) -> Result<f64> {
    if v < 0.0 || !v.is_finite() {
        return Err(Error::Domain(format!("phi argument {v} outside [0,inf)")));
    }
    if v <= 0.5 {
        return Ok(v);
    }
    // phi(v) = v - integral_{1/2}^{v} zeta^2; the integrand vanishes below
    // 1/2, so the panel boundary sits exactly at the kink.
    let correction = adaptive_simpson(
        |u| {
            let z = zeta(u).expect("u in range");
            z * z
        },
        0.5,
        v,
        QUAD_TOL,
    );
    Ok(v - correction)
}

/// Inverse of phi on [0, 1).
pub fn phi_inverse(w: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&w) {
        return Err(Error::Domain(format!("phi_inverse argument {w} outside [0,1)")));
    }
    if w <= 0.5 {
        return Ok(w);
    }
    let mut hi = 1.0;
    while phi(hi)? < w {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(Error::Domain(format!("phi_inverse({w}) out of reach")));
        }
    }
    let mut lo = 0.5;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if phi(mid)? < w {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Cycle-free giant fraction: eta(w) = zeta(phi^{-1}(w)).
pub fn eta(w: f64) -> Result<f64> {
    zeta(phi_inverse(w)?)
}

#[derive(Debug, Clone, Copy)]
pub struct NormalizationCheck {
    pub integral_residual: f64,
    pub series_residual: f64,
    pub c0: f64,
    pub c1: f64,
}

/// Verify the two normalization identities: the integral of 1 - zeta^2 over
/// (1/2, inf) equals 1/2, and the series expansion of the same quantity
/// telescopes to 1/2 (coefficients c0 = 1/2, c1 = 2/3, c_l = 1/l - 1/(l+2)).
pub fn check_normalization() -> NormalizationCheck {
    let u_max = 40.0;
    let quad = adaptive_simpson(
        |u| {
            let z = zeta(u).expect("u in range");
            1.0 - z * z
        },
        0.5,
        u_max,
        1e-12,
    );
    // Tail bound: 1 - zeta^2 <= 2(1 - zeta) = 2 exp(-2 u zeta(u)) and zeta is
    // increasing, so the tail is below exp(-2 u_max zeta(u_max))/zeta(u_max).
    let z_max = zeta(u_max).expect("u_max in range");
    let tail = (-2.0 * u_max * z_max).exp() / z_max;
    let integral_residual = (quad + tail - 0.5).abs();

    let c0 = 0.5;
    let c1 = 2.0 / 3.0;
    let l_max = 1_000_000u64;
    // Sum c_l/(l+1) for l = 2..=l_max ascending in magnitude (descending l).
    let mut sum = 0.0;
    for l in (2..=l_max).rev() {
        let l = l as f64;
        sum += (1.0 / l - 1.0 / (l + 2.0)) / (l + 1.0);
    }
    // Exact telescoping tail of the series beyond l_max.
    let lf = l_max as f64;
    let series_tail = 1.0 / ((lf + 1.0) * (lf + 2.0));
    let series = 0.5 * (c0 + c1 / 2.0 + sum + series_tail);
    NormalizationCheck {
        integral_residual,
        series_residual: (series - 0.5).abs(),
        c0,
        c1,
    }
}

/// Grid-tabulated limit functions with monotone cubic interpolation; built
/// once, then cheap to evaluate in bulk.
#[derive(Debug, Clone)]
pub struct LimitTables {
    pub u_max: f64,
    pub step: f64,
    us: Vec<f64>,
    zetas: Vec<f64>,
    zeta_slopes: Vec<f64>,
    phis: Vec<f64>,
    phi_slopes: Vec<f64>,
}

/// Monotone (harmonic-mean) slopes for cubic Hermite interpolation.
fn monotone_slopes(h: f64, ys: &[f64]) -> Vec<f64> {
    let n = ys.len();
    let secants: Vec<f64> = ys.windows(2).map(|w| (w[1] - w[0]) / h).collect();
    let mut d = vec![0.0; n];
    d[0] = secants[0];
    d[n - 1] = secants[n - 2];
    for i in 1..n - 1 {
        let (s0, s1) = (secants[i - 1], secants[i]);
        if s0 * s1 > 0.0 {
            d[i] = 2.0 * s0 * s1 / (s0 + s1);
        }
    }
    d
}

fn hermite(x0: f64, h: f64, y0: f64, y1: f64, d0: f64, d1: f64, x: f64) -> f64 {
    let t = (x - x0) / h;
    let t2 = t * t;
    let t3 = t2 * t;
    y0 * (2.0 * t3 - 3.0 * t2 + 1.0)
        + d0 * h * (t3 - 2.0 * t2 + t)
        + y1 * (-2.0 * t3 + 3.0 * t2)
        + d1 * h * (t3 - t2)
}

impl LimitTables {
    pub fn build(u_max: f64, step: f64) -> Result<Self> {
        if !(u_max > 0.5) || !(step > 0.0) || step > 0.5 {
            return Err(Error::Domain(format!(
                "invalid table parameters u_max={u_max}, step={step}"
            )));
        }
        let half_steps = 0.5 / step;
        if (half_steps - half_steps.round()).abs() > 1e-9 {
            return Err(Error::Domain(format!(
                "step {step} must divide 1/2 so a node sits at the kink"
            )));
        }
        let count = (u_max / step).ceil() as usize + 1;
        let us: Vec<f64> = (0..count).map(|i| i as f64 * step).collect();
        let zetas: Vec<f64> = us.iter().map(|&u| zeta(u).expect("u >= 0")).collect();
        // Cumulative Simpson of 1 - zeta^2 per interval (midpoint evaluated
        // directly); exact below the kink where the integrand is 1.
        let mut phis = vec![0.0; count];
        for i in 1..count {
            let (a, b) = (us[i - 1], us[i]);
            if b <= 0.5 + 1e-12 {
                phis[i] = b;
                continue;
            }
            let f = |u: f64| {
                let z = zeta(u).expect("u >= 0");
                1.0 - z * z
            };
            let fm = f(0.5 * (a + b));
            let fa = 1.0 - zetas[i - 1] * zetas[i - 1];
            let fb = 1.0 - zetas[i] * zetas[i];
            phis[i] = phis[i - 1] + (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        }
        let zeta_slopes = monotone_slopes(step, &zetas);
        let phi_slopes = monotone_slopes(step, &phis);
        Ok(Self { u_max: us[count - 1], step, us, zetas, zeta_slopes, phis, phi_slopes })
    }

    fn cell(&self, u: f64) -> usize {
        ((u / self.step) as usize).min(self.us.len() - 2)
    }

    pub fn zeta(&self, u: f64) -> Result<f64> {
        if u < 0.0 || !u.is_finite() {
            return Err(Error::Domain(format!("zeta argument {u} outside [0,inf)")));
        }
        if u <= 0.5 {
            return Ok(0.0);
        }
        if u >= self.u_max {
            return zeta(u);
        }
        let i = self.cell(u);
        Ok(hermite(
            self.us[i],
            self.step,
            self.zetas[i],
            self.zetas[i + 1],
            self.zeta_slopes[i],
            self.zeta_slopes[i + 1],
            u,
        ))
    }

    pub fn phi(&self, v: f64) -> Result<f64> {
        if v < 0.0 || !v.is_finite() {
            return Err(Error::Domain(format!("phi argument {v} outside [0,inf)")));
        }
        if v <= 0.5 {
            return Ok(v);
        }
        if v >= self.u_max {
            // Beyond the table phi has essentially saturated; extend linearly
            // with the boundary integrand.
            let z = self.zetas[self.zetas.len() - 1];
            return Ok(self.phis[self.phis.len() - 1] + (v - self.u_max) * (1.0 - z * z));
        }
        let i = self.cell(v);
        Ok(hermite(
            self.us[i],
            self.step,
            self.phis[i],
            self.phis[i + 1],
            self.phi_slopes[i],
            self.phi_slopes[i + 1],
            v,
        ))
    }

    pub fn phi_inverse(&self, w: f64) -> Result<f64> {
        if !(0.0..1.0).contains(&w) {
            return Err(Error::Domain(format!(
                "phi_inverse argument {w} outside [0,1)"
            )));
        }
        if w <= 0.5 {
            return Ok(w);
        }
        let last = self.phis[self.phis.len() - 1];
        if w >= last {
            return phi_inverse(w);
        }
        let i = match self
            .phis
            .binary_search_by(|p| p.partial_cmp(&w).expect("finite"))
        {
            Ok(i) => return Ok(self.us[i]),
            Err(i) => i - 1,
        };
        let mut lo = self.us[i];
        let mut hi = self.us[i + 1];
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.phi(mid)? < w {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    pub fn eta(&self, w: f64) -> Result<f64> {
        self.zeta(self.phi_inverse(w)?)
    }
}
