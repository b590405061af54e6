//! Uniform space-time grid on [0, 1] × [0, t⋆_max].

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::wall::DimensionlessProblem;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    /// Number of nodes, Δx⋆ = 1/(nx − 1).
    pub nx: usize,
    /// Number of time steps.
    pub nt: usize,
    pub dt: f64,
}

impl Grid {
    /// Grid from step sizes; 1/dx and t_max/dt must be (close to) integers.
    pub fn new(dx: f64, dt: f64, t_max: f64) -> Result<Self> {
        if !(dx > 0.0 && dx <= 0.5) {
            return invalid(format!("Δx⋆ = {dx} must lie in (0, 0.5]"));
        }
        if !(dt > 0.0) || !(t_max > 0.0) {
            return invalid("Δt⋆ and the horizon must be positive");
        }
        let cells = (1.0 / dx).round();
        if ((1.0 / cells) - dx).abs() > 1e-9 * dx {
            return invalid(format!("1/Δx⋆ = {} is not an integer", 1.0 / dx));
        }
        let steps = (t_max / dt).round();
        if (steps * dt - t_max).abs() > 1e-9 * t_max {
            return invalid(format!("horizon {t_max} is not a multiple of Δt⋆ = {dt}"));
        }
        Self::from_counts(cells as usize + 1, dt, steps as usize)
    }

    pub fn from_counts(nx: usize, dt: f64, nt: usize) -> Result<Self> {
        if nx < 3 {
            return invalid("grid needs at least three nodes");
        }
        if nt < 1 || !(dt > 0.0) || !dt.is_finite() {
            return invalid("grid needs at least one positive time step");
        }
        Ok(Self { nx, nt, dt })
    }

    pub fn dx(&self) -> f64 {
        1.0 / (self.nx - 1) as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        j as f64 / (self.nx - 1) as f64
    }

    pub fn t(&self, n: usize) -> f64 {
        n as f64 * self.dt
    }

    pub fn t_max(&self) -> f64 {
        self.t(self.nt)
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.nx).map(|j| self.x(j)).collect()
    }

    /// Same spacing with a different horizon.
    pub fn with_horizon(&self, t_max: f64) -> Result<Self> {
        Grid::new(self.dx(), self.dt, t_max)
    }

    /// Every layer must own at least two nodes.
    pub fn check_layers(&self, problem: &DimensionlessProblem) -> Result<()> {
        let mut counts = vec![0usize; problem.layers.len()];
        for j in 0..self.nx {
            counts[problem.layer_at(self.x(j))?] += 1;
        }
        if let Some(i) = counts.iter().position(|&c| c < 2) {
            return invalid(format!(
                "grid resolves layer {} with {} node(s), need 2",
                i + 1,
                counts[i]
            ));
        }
        Ok(())
    }
}
