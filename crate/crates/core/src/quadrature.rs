//! One-dimensional quadrature.
//!
//! Adaptive Simpson with the Richardson correction `S₂ + (S₂ − S₁)/15` for
//! closed-form integrands, plus fixed-grid rules (composite Simpson and a
//! Hermite-corrected trapezoid) for sampled functions.

use crate::error::{Error, Result};

const MAX_DEPTH: u32 = 50;

/// Result of an adaptive integration: value and accumulated error estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature {
    pub value: f64,
    pub error: f64,
}

struct Panel {
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
}

fn simpson(a: f64, b: f64, fa: f64, fm: f64, fb: f64) -> f64 {
    (b - a) / 6.0 * (fa + 4.0 * fm + fb)
}

/// Adaptive Simpson on `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F>(f: F, a: f64, b: f64, tol: f64) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!("quadrature tolerance {tol} must be > 0")));
    }
    if a == b {
        return Ok(Quadrature { value: 0.0, error: 0.0 });
    }
    if !(a < b) || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain(format!("quadrature interval [{a}, {b}]")));
    }
    let (fa, fb) = (f(a), f(b));
    let m = 0.5 * (a + b);
    let fm = f(m);
    let mut stack = vec![Panel { a, b, fa, fm, fb, whole: simpson(a, b, fa, fm, fb), tol, depth: 0 }];
    let mut value = 0.0;
    let mut error = 0.0;
    let mut unresolved = false;

    while let Some(p) = stack.pop() {
        let m = 0.5 * (p.a + p.b);
        let lm = 0.5 * (p.a + m);
        let rm = 0.5 * (m + p.b);
        let (flm, frm) = (f(lm), f(rm));
        let left = simpson(p.a, m, p.fa, flm, p.fm);
        let right = simpson(m, p.b, p.fm, frm, p.fb);
        let refined = left + right;
        let delta = refined - p.whole;
        if !refined.is_finite() {
            return Err(Error::Domain(format!("non-finite integrand on [{}, {}]", p.a, p.b)));
        }
        let roundoff = 64.0 * f64::EPSILON * (left.abs() + right.abs());
        if delta.abs() <= 15.0 * p.tol || delta.abs() <= roundoff || p.depth >= MAX_DEPTH {
            if p.depth >= MAX_DEPTH && delta.abs() > 15.0 * p.tol && delta.abs() > roundoff {
                unresolved = true;
            }
            value += refined + delta / 15.0;
            error += delta.abs() / 15.0;
        } else {
            let tol = 0.5 * p.tol;
            let depth = p.depth + 1;
            stack.push(Panel { a: p.a, b: m, fa: p.fa, fm: flm, fb: p.fm, whole: left, tol, depth });
            stack.push(Panel { a: m, b: p.b, fa: p.fm, fm: frm, fb: p.fb, whole: right, tol, depth });
        }
    }
    if unresolved && error > tol {
        return Err(Error::Quadrature { a, b, estimate: error, tol });
    }
    Ok(Quadrature { value, error })
}

/// Integrates over `[0, end]` using geometrically growing panels
/// `[0,1], [1,2], [2,4], …` so long horizons stay cheap; `tol` is shared
/// evenly between panels.
pub fn integrate_from_zero<F>(f: F, end: f64, tol: f64) -> Result<Quadrature>
where
    F: Fn(f64) -> f64,
{
    if end <= 1.0 {
        return adaptive_simpson(&f, 0.0, end.max(0.0), tol);
    }
    let panels = end.log2().ceil() as usize + 1;
    let share = tol / panels as f64;
    let mut total = adaptive_simpson(&f, 0.0, 1.0, share)?;
    let mut lo = 1.0;
    while lo < end {
        let hi = (2.0 * lo).min(end);
        let q = adaptive_simpson(&f, lo, hi, share)?;
        total.value += q.value;
        total.error += q.error;
        lo = hi;
    }
    Ok(total)
}

/// Composite Simpson over equally spaced samples. An odd interval count
/// closes the last three intervals with the 3/8 rule.
pub fn composite_simpson(samples: &[f64], step: f64) -> f64 {
    match samples.len() {
        0 | 1 => 0.0,
        2 => 0.5 * step * (samples[0] + samples[1]),
        len => {
            let intervals = len - 1;
            let even = if intervals % 2 == 0 { intervals } else { intervals - 3 };
            let mut acc = samples[0] + samples[even];
            for (i, v) in samples.iter().enumerate().take(even).skip(1) {
                acc += if i % 2 == 1 { 4.0 * v } else { 2.0 * v };
            }
            let mut total = if even > 0 { acc * step / 3.0 } else { 0.0 };
            if even < intervals {
                total += three_eighths(&samples[even..], step);
            }
            total
        }
    }
}

fn three_eighths(f: &[f64], step: f64) -> f64 {
    3.0 * step / 8.0 * (f[0] + 3.0 * f[1] + 3.0 * f[2] + f[3])
}

/// Running integral `∫₀^{t_i}` at every node of an equally spaced sample.
///
/// Even nodes carry composite Simpson sums; odd nodes add a three-point
/// partial panel, except the last node of an odd count, which uses the
/// 3/8 rule so that it agrees with [`composite_simpson`].
pub fn cumulative_simpson(samples: &[f64], step: f64) -> Vec<f64> {
    let len = samples.len();
    let mut out = vec![0.0; len];
    if len < 2 {
        return out;
    }
    if len == 2 {
        out[1] = 0.5 * step * (samples[0] + samples[1]);
        return out;
    }
    let mut i = 0;
    while i + 2 < len {
        let (f0, f1, f2) = (samples[i], samples[i + 1], samples[i + 2]);
        out[i + 1] = out[i] + step / 12.0 * (5.0 * f0 + 8.0 * f1 - f2);
        out[i + 2] = out[i] + step / 3.0 * (f0 + 4.0 * f1 + f2);
        i += 2;
    }
    if i + 1 < len {
        out[i + 1] = out[i - 2] + three_eighths(&samples[i - 2..], step);
    }
    out
}

/// Running integral using values and derivatives (Hermite-corrected
/// trapezoid, fourth order): `h/2 (g₀+g₁) + h²/12 (g₀′−g₁′)` per interval.
pub fn cumulative_hermite(values: &[f64], derivs: &[f64], step: f64) -> Vec<f64> {
    debug_assert_eq!(values.len(), derivs.len());
    let mut out = Vec::with_capacity(values.len());
    let mut acc = 0.0;
    out.push(0.0);
    for i in 1..values.len() {
        acc += 0.5 * step * (values[i - 1] + values[i])
            + step * step / 12.0 * (derivs[i - 1] - derivs[i]);
        out.push(acc);
    }
    out
}

const GAUSS3_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS3_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

fn gauss3_cell<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> f64 {
    let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
    half * GAUSS3_NODES.iter().zip(GAUSS3_WEIGHTS).map(|(x, w)| w * f(mid + half * x)).sum::<f64>()
}

/// Three-point Gauss–Legendre on each of `cells` equal cells of `[a, b]`;
/// exact for polynomials of degree 5 on every cell.
pub fn gauss_legendre<F>(f: F, a: f64, b: f64, cells: usize) -> f64
where
    F: Fn(f64) -> f64,
{
    let step = (b - a) / cells.max(1) as f64;
    (0..cells.max(1)).map(|i| gauss3_cell(&f, a + i as f64 * step, a + (i + 1) as f64 * step)).sum()
}

/// Running Gauss–Legendre integral `∫₀^{i·step} f` for `i = 0..=cells`.
pub fn cumulative_gauss<F>(f: F, step: f64, cells: usize) -> Vec<f64>
where
    F: Fn(f64) -> f64,
{
    let mut out = Vec::with_capacity(cells + 1);
    let mut acc = 0.0;
    out.push(0.0);
    for i in 0..cells {
        acc += gauss3_cell(&f, i as f64 * step, (i + 1) as f64 * step);
        out.push(acc);
    }
    out
}
