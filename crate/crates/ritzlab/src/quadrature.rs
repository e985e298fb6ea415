//! Uniform-grid integration on [0, 1] and the discrete delta stencil.
//!
//! Everything downstream (energy quadrature, delta placement, error norms)
//! shares one immutable [`Grid`] so that the sifting identity
//! `Δx Σ δ_i f(x_i) = f(x_hit)` holds exactly on the same abscissae used
//! for integration.

use crate::error::{Error, Result};

/// Midpoint-rule grid: `x_i = (i - 1/2) / M` with uniform weight `Δx = 1/M`.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    points: Vec<f64>,
    weight: f64,
}

impl Grid {
    /// Builds the M-point midpoint rule on [0, 1]. Needs `count >= 2`.
    pub fn midpoint(count: usize) -> Result<Grid> {
        if count < 2 {
            return Err(Error::GridTooSmall(count));
        }
        let m = count as f64;
        let points = (1..=count).map(|i| (i as f64 - 0.5) / m).collect();
        Ok(Grid {
            points,
            weight: 1.0 / m,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    /// Uniform integration weight Δx.
    pub fn weight(&self) -> f64 {
        self.weight
    }

    /// Samples a function at every grid point.
    pub fn sample(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.points.iter().map(|&x| f(x)).collect()
    }

    /// `Δx Σ_i v_i` over values sampled at the grid points.
    pub fn integrate(&self, values: &[f64]) -> Result<f64> {
        if values.len() != self.points.len() {
            return Err(Error::LengthMismatch {
                expected: self.points.len(),
                got: values.len(),
            });
        }
        Ok(self.weight * values.iter().sum::<f64>())
    }

    /// Convenience: integrate `f` sampled on this grid.
    pub fn integrate_fn(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.weight * self.points.iter().map(|&x| f(x)).sum::<f64>()
    }

    /// Single-point impulse of amplitude `1/Δx` at the grid point nearest
    /// `center`, so that integrating it against any grid function sifts out
    /// that function's value. Centers outside [0, 1] yield an empty stencil.
    /// Argmin ties break toward the lower index.
    pub fn delta_stencil(&self, center: f64) -> DeltaStencil {
        if !(0.0..=1.0).contains(&center) {
            return DeltaStencil {
                center,
                hit: None,
                amplitude: 0.0,
            };
        }
        let mut best = 0usize;
        let mut best_dist = (self.points[0] - center).abs();
        for (i, &x) in self.points.iter().enumerate().skip(1) {
            let d = (x - center).abs();
            if d < best_dist {
                best = i;
                best_dist = d;
            }
        }
        DeltaStencil {
            center,
            hit: Some(best),
            amplitude: 1.0 / self.weight,
        }
    }
}

/// Discretized Dirac delta under a fixed grid rule: value `1/Δx` at one grid
/// index, zero elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaStencil {
    center: f64,
    hit: Option<usize>,
    amplitude: f64,
}

impl DeltaStencil {
    pub fn center(&self) -> f64 {
        self.center
    }

    /// Index of the grid point the impulse sits on, `None` if the center lies
    /// outside [0, 1].
    pub fn hit_index(&self) -> Option<usize> {
        self.hit
    }

    /// `1/Δx` for in-domain centers, zero otherwise.
    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    pub fn in_domain(&self) -> bool {
        self.hit.is_some()
    }

    /// The stencil as a dense grid function (mostly zeros).
    pub fn dense(&self, grid_len: usize) -> Vec<f64> {
        let mut v = vec![0.0; grid_len];
        if let Some(i) = self.hit {
            v[i] = self.amplitude;
        }
        v
    }

    /// `Δx Σ_i δ_i f(x_i)`, i.e. `f(x_hit)` for in-domain centers, 0 otherwise.
    pub fn sift(&self, grid: &Grid, values: &[f64]) -> f64 {
        match self.hit {
            Some(i) => grid.weight() * self.amplitude * values[i],
            None => 0.0,
        }
    }
}
