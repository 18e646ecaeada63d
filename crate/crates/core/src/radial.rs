//! Radial functions: a sampled grid on `[0, T]` continued affinely past `T`.

use crate::error::{Error, Result};
use crate::grid::GridFunction;

/// `v(t)` from the grid on `[0, T]`, and `v(T) + slope·(t − T)` beyond.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialFunction {
    grid: GridFunction,
    slope: f64,
}

/// Running integral of `vᵏ`, ready for evaluation at any radius.
#[derive(Debug, Clone)]
pub struct PowerIntegral {
    func: RadialFunction,
    k: u32,
    cumulative: Vec<f64>,
}

impl RadialFunction {
    pub fn new(grid: GridFunction, slope: f64) -> Self {
        Self { grid, slope }
    }

    pub fn grid(&self) -> &GridFunction {
        &self.grid
    }

    /// Slope of the affine continuation.
    pub fn slope(&self) -> f64 {
        self.slope
    }

    /// End of the sampled part.
    pub fn horizon(&self) -> f64 {
        self.grid.end()
    }

    pub fn value(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("radial function at t = {t}")));
        }
        let end = self.grid.end();
        if t <= end {
            self.grid.value_at(t)
        } else {
            Ok(self.grid.last_value() + self.slope * (t - end))
        }
    }

    pub fn deriv(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0) {
            return Err(Error::Domain(format!("radial function at t = {t}")));
        }
        if t <= self.grid.end() {
            self.grid.deriv_at(t)
        } else {
            Ok(self.slope)
        }
    }

    pub fn power_integral(&self, k: u32) -> PowerIntegral {
        PowerIntegral { func: self.clone(), k, cumulative: self.grid.cumulative_power_integral(k) }
    }
}

impl PowerIntegral {
    /// `∫₀^r vᵏ`.
    pub fn at(&self, r: f64) -> Result<f64> {
        if !(r >= 0.0) {
            return Err(Error::Domain(format!("power integral up to r = {r}")));
        }
        let grid = &self.func.grid;
        let end = grid.end();
        let k = self.k as i32;
        if r <= end {
            let i = ((r / grid.step()).floor() as usize).min(grid.len() - 1);
            let t0 = grid.node(i);
            let base = self.cumulative[i];
            if r - t0 <= 0.0 {
                return Ok(base);
            }
            let mid = 0.5 * (t0 + r);
            let (f0, fm, f1) = (grid.values()[i].powi(k), grid.value_at(mid)?.powi(k), grid.value_at(r)?.powi(k));
            return Ok(base + (r - t0) / 6.0 * (f0 + 4.0 * fm + f1));
        }
        let total = *self.cumulative.last().unwrap();
        let v = grid.last_value();
        let a = self.func.slope;
        let tail = if a == 0.0 {
            v.powi(k) * (r - end)
        } else {
            ((v + a * (r - end)).powi(k + 1) - v.powi(k + 1)) / (a * (k + 1) as f64)
        };
        Ok(total + tail)
    }
}
