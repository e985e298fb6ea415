//! The variational energy, its parameter gradient under three interchangeable
//! engines, and the mean-squared-error regression objective.
//!
//! The three engines exist to be compared:
//!
//! * [`GradientEngine::AdConvention`] integrates the classical mixed
//!   derivative only, dropping every impulse a kinked activation contributes —
//!   the behavior of reverse-mode autodiff frameworks.
//! * [`GradientEngine::ExactDistributional`] adds those impulses back, sifted
//!   through the grid's delta stencil.
//! * [`GradientEngine::FiniteDifference`] central-differences the discretized
//!   energy itself and serves as the model-free referee.
//!
//! For smooth activations all three agree; for ReLU the first is wrong, which
//! is the phenomenon this crate exists to demonstrate.

use std::sync::Arc;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::network::{Params, RitzNet};
use crate::quadrature::Grid;

/// A scalar field on [0, 1] carried as a shareable function handle.
pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// The 1D elliptic problem data: coefficient κ(x) > 0, source b(x), and an
/// optional known solution for error reporting.
#[derive(Clone)]
pub struct Problem {
    pub kappa: ScalarFn,
    pub source: ScalarFn,
    pub exact: Option<ScalarFn>,
}

impl Problem {
    /// κ = 1, b(x) = 100 sin(kπx). The solution is A sin(kπx) with
    /// A = 100/(k²π²), found by substituting into the strong form.
    pub fn sine_source(freq: u32) -> Problem {
        let k = freq as f64;
        let pi = std::f64::consts::PI;
        let amp = 100.0 / (k * k * pi * pi);
        Problem {
            kappa: Arc::new(|_| 1.0),
            source: Arc::new(move |x| 100.0 * (k * pi * x).sin()),
            exact: Some(Arc::new(move |x| amp * (k * pi * x).sin())),
        }
    }

    /// Analytic energy of the exact solution of [`Problem::sine_source`]:
    /// `Π[A sin(kπx)] = ¼A²k²π² − 50A = −2500/(k²π²)`.
    pub fn sine_oracle_energy(freq: u32) -> f64 {
        let k = freq as f64;
        -2500.0 / (k * k * std::f64::consts::PI * std::f64::consts::PI)
    }
}

/// Problem data sampled once on a fixed grid. Gradient engines evaluate the
/// energy thousands of times; κ and b are never re-evaluated.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemOnGrid {
    pub kappa: Vec<f64>,
    pub source: Vec<f64>,
    pub exact: Option<Vec<f64>>,
}

impl ProblemOnGrid {
    pub fn sample(problem: &Problem, grid: &Grid) -> ProblemOnGrid {
        ProblemOnGrid {
            kappa: grid.sample(|x| (problem.kappa)(x)),
            source: grid.sample(|x| (problem.source)(x)),
            exact: problem.exact.as_ref().map(|f| grid.sample(|x| f(x))),
        }
    }
}

/// Strategy for computing the energy's parameter gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GradientEngine {
    /// Quadrature of the gradient integrand with impulse terms dropped.
    AdConvention,
    /// AdConvention plus the sifted impulse contributions.
    ExactDistributional,
    /// Central differences of the discretized energy, step `h`.
    FiniteDifference { step: f64 },
}

/// `Π(θ) = Δx Σ_i [ ½ κ(x_i) (∂u/∂x)² − b(x_i) u ]`.
pub fn energy(pg: &ProblemOnGrid, net: &RitzNet, p: &Params, grid: &Grid) -> f64 {
    let mut acc = 0.0;
    for (m, &x) in grid.points().iter().enumerate() {
        let u = net.forward(p, x);
        let ux = net.spatial_grad(p, x);
        acc += 0.5 * pg.kappa[m] * ux * ux - pg.source[m] * u;
    }
    acc * grid.weight()
}

/// Energy of an arbitrary field given its values and slopes on the grid.
/// Used to evaluate the analytic solution without any network in the loop.
pub fn energy_of_field(pg: &ProblemOnGrid, grid: &Grid, u: &[f64], ux: &[f64]) -> Result<f64> {
    if u.len() != grid.len() || ux.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: u.len().min(ux.len()),
        });
    }
    let mut acc = 0.0;
    for m in 0..grid.len() {
        acc += 0.5 * pg.kappa[m] * ux[m] * ux[m] - pg.source[m] * u[m];
    }
    Ok(acc * grid.weight())
}

/// `∂Π/∂θ = Δx Σ_i [ κ ∂u/∂x · ∂²u/∂x∂θ − b · ∂u/∂θ ]` under the chosen engine.
pub fn energy_grad(
    pg: &ProblemOnGrid,
    net: &RitzNet,
    p: &Params,
    grid: &Grid,
    engine: GradientEngine,
) -> Result<Vec<f64>> {
    match engine {
        GradientEngine::AdConvention => Ok(ad_convention_grad(pg, net, p, grid).0),
        GradientEngine::ExactDistributional => {
            let (mut g, kappa_ux) = ad_convention_grad(pg, net, p, grid);
            let n = p.width();
            for event in net.delta_events(p) {
                let stencil = grid.delta_stencil(event.location);
                if !stencil.in_domain() {
                    continue;
                }
                // κ(x)·∂u/∂x is the impulse's cofactor; the stencil picks it
                // up one-sidedly at the nearest grid point.
                let sifted = stencil.sift(grid, &kappa_ux);
                g[event.neuron] += event.coeff_theta1 * event.jacobian_scale * sifted;
                g[n + event.neuron] += event.coeff_theta2 * event.jacobian_scale * sifted;
            }
            Ok(g)
        }
        GradientEngine::FiniteDifference { step } => {
            if step <= 0.0 {
                return Err(Error::InvalidFdStep(step));
            }
            fd_energy_grad(pg, net, p, grid, step)
        }
    }
}

/// Shared smooth part: the gradient with impulses dropped, plus the sampled
/// cofactor κ·∂u/∂x that the exact engine needs for sifting.
fn ad_convention_grad(
    pg: &ProblemOnGrid,
    net: &RitzNet,
    p: &Params,
    grid: &Grid,
) -> (Vec<f64>, Vec<f64>) {
    let dim = p.dim();
    let mut g = vec![0.0; dim];
    let mut pbuf = vec![0.0; dim];
    let mut mbuf = vec![0.0; dim];
    let mut kappa_ux = vec![0.0; grid.len()];
    for (m, &x) in grid.points().iter().enumerate() {
        let ux = net.spatial_grad(p, x);
        net.param_grad_into(p, x, &mut pbuf);
        net.mixed_grad_smooth_into(p, x, &mut mbuf);
        let wk = pg.kappa[m] * ux;
        kappa_ux[m] = wk;
        let wb = pg.source[m];
        for j in 0..dim {
            g[j] += wk * mbuf[j] - wb * pbuf[j];
        }
    }
    let w = grid.weight();
    for v in &mut g {
        *v *= w;
    }
    (g, kappa_ux)
}

/// `∂Π/∂θ_i ≈ (Π(θ + h 1_i) − Π(θ − h 1_i)) / 2h`, probes run in parallel.
fn fd_energy_grad(
    pg: &ProblemOnGrid,
    net: &RitzNet,
    p: &Params,
    grid: &Grid,
    h: f64,
) -> Result<Vec<f64>> {
    let flat = p.flatten();
    let g: Vec<f64> = (0..flat.len())
        .into_par_iter()
        .map_init(
            || p.clone(),
            |probe, i| {
                *probe.flat_mut(i) = flat[i] + h;
                let plus = energy(pg, net, probe, grid);
                *probe.flat_mut(i) = flat[i] - h;
                let minus = energy(pg, net, probe, grid);
                *probe.flat_mut(i) = flat[i];
                (plus - minus) / (2.0 * h)
            },
        )
        .collect();
    Ok(g)
}

/// `½ Δx Σ_i (u*(x_i) − u(x_i))²` against a target sampled on the grid.
pub fn mse_loss(net: &RitzNet, p: &Params, grid: &Grid, target: &[f64]) -> Result<f64> {
    if target.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: target.len(),
        });
    }
    let mut acc = 0.0;
    for (m, &x) in grid.points().iter().enumerate() {
        let r = target[m] - net.forward(p, x);
        acc += 0.5 * r * r;
    }
    Ok(acc * grid.weight())
}

/// Gradient of [`mse_loss`]: `−Δx Σ_i (u* − u) ∂u/∂θ`. Only first derivatives
/// of the activation appear, so this is exact for every activation, ReLU
/// included.
pub fn mse_grad(net: &RitzNet, p: &Params, grid: &Grid, target: &[f64]) -> Result<Vec<f64>> {
    if target.len() != grid.len() {
        return Err(Error::LengthMismatch {
            expected: grid.len(),
            got: target.len(),
        });
    }
    let dim = p.dim();
    let mut g = vec![0.0; dim];
    let mut pbuf = vec![0.0; dim];
    for (m, &x) in grid.points().iter().enumerate() {
        let r = target[m] - net.forward(p, x);
        net.param_grad_into(p, x, &mut pbuf);
        for j in 0..dim {
            g[j] -= r * pbuf[j];
        }
    }
    let w = grid.weight();
    for v in &mut g {
        *v *= w;
    }
    Ok(g)
}

/// Relative L2 error `‖u − r‖ / ‖r‖` on the grid (absolute L2 if `r ≡ 0`).
pub fn relative_l2(u: &[f64], reference: &[f64]) -> f64 {
    let num: f64 = u
        .iter()
        .zip(reference)
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    let den: f64 = reference.iter().map(|b| b * b).sum();
    if den == 0.0 {
        num.sqrt()
    } else {
        (num / den).sqrt()
    }
}

/// Max-norm error on the grid.
pub fn linf_error(u: &[f64], reference: &[f64]) -> f64 {
    u.iter()
        .zip(reference)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max)
}

pub fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}
