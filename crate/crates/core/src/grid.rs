//! Sampled scalar functions on a uniform grid starting at `t = 0`.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::quadrature::cumulative_hermite;

/// Values and first derivatives on the nodes `tᵢ = i·Δt`, `i = 0..=N`,
/// interpolated by cubic Hermite polynomials between nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    step: f64,
    values: Vec<f64>,
    derivs: Vec<f64>,
}

impl GridFunction {
    pub fn new(step: f64, values: Vec<f64>, derivs: Vec<f64>) -> Result<Self> {
        if !(step > 0.0 && step.is_finite()) {
            return Err(Error::InvalidParameter(format!("grid step {step} must be positive")));
        }
        if values.len() != derivs.len() {
            return Err(Error::InvalidParameter(format!(
                "values ({}) and derivs ({}) differ in length",
                values.len(),
                derivs.len()
            )));
        }
        if values.len() < 2 {
            return Err(Error::InvalidParameter("grid needs at least two nodes".into()));
        }
        Ok(Self { step, values, derivs })
    }

    /// Samples `f` and `df` on `N + 1` nodes covering `[0, end]`.
    pub fn sample<F, D>(end: f64, intervals: usize, f: F, df: D) -> Result<Self>
    where
        F: Fn(f64) -> f64,
        D: Fn(f64) -> f64,
    {
        if intervals == 0 || !(end > 0.0) {
            return Err(Error::InvalidParameter(format!("cannot sample [0, {end}] with {intervals} intervals")));
        }
        let step = end / intervals as f64;
        let nodes = (0..=intervals).map(|i| i as f64 * step);
        let (values, derivs) = nodes.map(|t| (f(t), df(t))).unzip();
        Self::new(step, values, derivs)
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn node(&self, i: usize) -> f64 {
        i as f64 * self.step
    }

    pub fn end(&self) -> f64 {
        self.node(self.len() - 1)
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn derivs(&self) -> &[f64] {
        &self.derivs
    }

    pub fn last_value(&self) -> f64 {
        self.values[self.len() - 1]
    }

    pub fn last_deriv(&self) -> f64 {
        self.derivs[self.len() - 1]
    }

    pub fn nodes(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }

    fn locate(&self, t: f64) -> Result<(usize, f64)> {
        let end = self.end();
        let slack = 1e-12 * end.max(1.0);
        if !(t >= -slack && t <= end + slack) {
            return Err(Error::Domain(format!("t = {t} outside grid [0, {end}]")));
        }
        let t = t.clamp(0.0, end);
        let i = ((t / self.step).floor() as usize).min(self.len() - 2);
        Ok((i, (t - self.node(i)) / self.step))
    }

    /// Cubic Hermite interpolant.
    pub fn value_at(&self, t: f64) -> Result<f64> {
        let (i, s) = self.locate(t)?;
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i], self.derivs[i + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        Ok((2.0 * s3 - 3.0 * s2 + 1.0) * y0
            + (s3 - 2.0 * s2 + s) * h * d0
            + (-2.0 * s3 + 3.0 * s2) * y1
            + (s3 - s2) * h * d1)
    }

    /// Derivative of the Hermite interpolant.
    pub fn deriv_at(&self, t: f64) -> Result<f64> {
        let (i, s) = self.locate(t)?;
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i], self.derivs[i + 1]);
        let s2 = s * s;
        Ok((6.0 * s2 - 6.0 * s) * (y0 - y1) / h + (3.0 * s2 - 4.0 * s + 1.0) * d0 + (3.0 * s2 - 2.0 * s) * d1)
    }

    /// Second derivative of the Hermite interpolant (piecewise linear).
    pub fn second_deriv_at(&self, t: f64) -> Result<f64> {
        let (i, s) = self.locate(t)?;
        let h = self.step;
        let (y0, y1) = (self.values[i], self.values[i + 1]);
        let (d0, d1) = (self.derivs[i], self.derivs[i + 1]);
        Ok((12.0 * s - 6.0) * (y0 - y1) / (h * h) + ((6.0 * s - 4.0) * d0 + (6.0 * s - 2.0) * d1) / h)
    }

    /// Running integral of `g(v, v′)` with derivative `dg(v, v′)` along the grid.
    pub fn cumulative_integral_of<G, D>(&self, g: G, dg: D) -> Vec<f64>
    where
        G: Fn(f64, f64) -> f64,
        D: Fn(f64, f64) -> f64,
    {
        let pairs = self.values.iter().zip(&self.derivs);
        let gv: Vec<f64> = pairs.clone().map(|(&v, &d)| g(v, d)).collect();
        let gd: Vec<f64> = pairs.map(|(&v, &d)| dg(v, d)).collect();
        cumulative_hermite(&gv, &gd, self.step)
    }

    /// Running integral of `vᵏ`, using `(vᵏ)′ = k vᵏ⁻¹ v′`.
    pub fn cumulative_power_integral(&self, k: u32) -> Vec<f64> {
        let k_f = k as f64;
        self.cumulative_integral_of(
            |v, _| v.powi(k as i32),
            |v, d| if k == 0 { 0.0 } else { k_f * v.powi(k as i32 - 1) * d },
        )
    }

    /// CSV with header `t,value,deriv`, 17 significant digits per field.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,value,deriv\n");
        for (i, (v, d)) in self.values.iter().zip(&self.derivs).enumerate() {
            let _ = writeln!(out, "{:.16e},{:.16e},{:.16e}", self.node(i), v, d);
        }
        out
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
        match lines.next() {
            Some((_, header)) if header.trim() == "t,value,deriv" => {}
            Some((n, other)) => {
                return Err(Error::Parse(format!("line {}: expected header t,value,deriv, got {other:?}", n + 1)))
            }
            None => return Err(Error::Parse("empty grid CSV".into())),
        }
        let mut ts = Vec::new();
        let mut values = Vec::new();
        let mut derivs = Vec::new();
        for (n, line) in lines {
            let fields: Vec<&str> = line.split(',').map(str::trim).collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!("line {}: expected 3 fields, got {}", n + 1, fields.len())));
            }
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("line {}: {s:?}: {e}", n + 1)))
            };
            ts.push(parse(fields[0])?);
            values.push(parse(fields[1])?);
            derivs.push(parse(fields[2])?);
        }
        if ts.len() < 2 || ts[0] != 0.0 {
            return Err(Error::Parse("grid must start at t = 0 and have at least two nodes".into()));
        }
        let step = ts[1];
        for (i, &t) in ts.iter().enumerate() {
            let expected = i as f64 * step;
            if (t - expected).abs() > 1e-14 * expected.abs().max(step) {
                return Err(Error::Parse(format!("node {i}: t = {t} breaks uniform step {step}")));
            }
        }
        Self::new(step, values, derivs)
    }
}
