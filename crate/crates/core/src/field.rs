use ndarray::Array2;

use crate::error::{FlowError, Result};
use crate::grid::CylGrid;

/// Values of `w = log v` on a [`CylGrid`], indexed `(ζ, θ)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LogField {
    values: Array2<f64>,
}

impl LogField {
    pub fn new(values: Array2<f64>) -> Result<Self> {
        if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
            return Err(FlowError::Domain(format!("non-finite field value {bad}")));
        }
        Ok(LogField { values })
    }

    /// Samples `f(ζ, θ)` on every node of `grid`.
    pub fn from_fn(grid: &CylGrid, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let z = grid.zeta();
        let values = Array2::from_shape_fn(grid.shape(), |(i, j)| f(z[i], grid.theta(j)));
        Self::new(values)
    }

    pub fn constant(grid: &CylGrid, c: f64) -> Result<Self> {
        Self::new(Array2::from_elem(grid.shape(), c))
    }

    pub(crate) fn from_raw(values: Array2<f64>) -> Self {
        LogField { values }
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<f64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<f64> {
        self.values
    }

    pub fn shape(&self) -> (usize, usize) {
        self.values.dim()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[[i, j]]
    }

    pub fn check_grid(&self, grid: &CylGrid) -> Result<()> {
        if self.shape() != grid.shape() {
            return Err(FlowError::Config(format!(
                "field shape {:?} does not match grid {:?}",
                self.shape(),
                grid.shape()
            )));
        }
        Ok(())
    }

    pub fn max_abs_diff(&self, other: &LogField) -> f64 {
        self.values
            .iter()
            .zip(other.values.iter())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

/// A solution snapshot: `w = log(r² u)` at physical time `t`.
///
/// `prev_w` holds the field one step earlier when the state was produced by
/// the implicit stepper; it feeds the time-difference form of the curvature.
#[derive(Debug, Clone, PartialEq)]
pub struct FlowState {
    pub grid: CylGrid,
    pub w: LogField,
    pub t: f64,
    pub step_index: u64,
    pub last_dt: f64,
    pub prev_w: Option<LogField>,
}

impl FlowState {
    pub fn new(grid: CylGrid, w: LogField, t: f64) -> Result<Self> {
        w.check_grid(&grid)?;
        if !(t > 0.0) || !t.is_finite() {
            return Err(FlowError::Domain(format!("state time t = {t} must be positive")));
        }
        Ok(FlowState {
            grid,
            w,
            t,
            step_index: 0,
            last_dt: 0.0,
            prev_w: None,
        })
    }

    /// Physical density `u = e^{w - 2ζ}` at node `(i, j)`.
    pub fn u(&self, i: usize, j: usize) -> f64 {
        (self.w.get(i, j) - 2.0 * self.grid.zeta()[i]).exp()
    }

    pub fn v(&self, i: usize, j: usize) -> f64 {
        self.w.get(i, j).exp()
    }
}
