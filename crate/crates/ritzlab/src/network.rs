//! Single-hidden-layer discretization `u(x) = Σ θ³_i sin(πx) R(θ¹_i x + θ²_i)`
//! and its analytic derivatives.
//!
//! The fixed `sin(πx)` distance factor pins the homogeneous Dirichlet values
//! exactly, so no boundary penalty appears anywhere in the energy. All
//! derivative formulas are closed-form; the only non-classical piece — the
//! Dirac impulse a kinked activation contributes to the mixed
//! parameter/spatial derivative — is reported as structured [`DeltaEvent`]s
//! instead of being folded into pointwise values, because a delta only means
//! something under an integral.

use crate::activation::Activation;
use crate::error::{Error, Result};
use rand::Rng;

/// Evaluates the distance function `D(x) = sin(πx)`.
///
/// Reflected around 1/2 so that both endpoints map through `sin(0)` and the
/// boundary values are exact zeros rather than `sin(π) ≈ 1.2e-16`.
pub fn distance(x: f64) -> f64 {
    if x > 0.5 {
        (std::f64::consts::PI * (1.0 - x)).sin()
    } else {
        (std::f64::consts::PI * x).sin()
    }
}

/// `D'(x) = π cos(πx)`.
pub fn distance_deriv(x: f64) -> f64 {
    std::f64::consts::PI * (std::f64::consts::PI * x).cos()
}

/// Trainable parameters of a width-N single-hidden-layer network: inner
/// weights θ¹, inner biases θ², outer weights θ³. Flattening order is fixed
/// as `[θ¹; θ²; θ³]`, total dimension 3N.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    theta1: Vec<f64>,
    theta2: Vec<f64>,
    theta3: Vec<f64>,
}

impl Params {
    pub fn new(theta1: Vec<f64>, theta2: Vec<f64>, theta3: Vec<f64>) -> Result<Params> {
        let n = theta1.len();
        if n == 0 || theta2.len() != n || theta3.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n.max(1),
                got: theta2.len().min(theta3.len()),
            });
        }
        Ok(Params {
            theta1,
            theta2,
            theta3,
        })
    }

    pub fn zeros(width: usize) -> Params {
        Params {
            theta1: vec![0.0; width],
            theta2: vec![0.0; width],
            theta3: vec![0.0; width],
        }
    }

    /// Seeded random initialization. Inner weights and biases are drawn from
    /// U[-1, 1] (the input dimension is 1), outer weights from
    /// U[-1/√N, 1/√N]: the usual fan-in scaling per layer.
    pub fn random<R: Rng + ?Sized>(width: usize, rng: &mut R) -> Params {
        let outer = 1.0 / (width as f64).sqrt();
        let mut draw = |scale: f64| -> Vec<f64> {
            (0..width)
                .map(|_| (2.0 * rng.random::<f64>() - 1.0) * scale)
                .collect()
        };
        let theta1 = draw(1.0);
        let theta2 = draw(1.0);
        let theta3 = draw(outer);
        Params {
            theta1,
            theta2,
            theta3,
        }
    }

    pub fn width(&self) -> usize {
        self.theta1.len()
    }

    /// Total number of trainable scalars, 3N.
    pub fn dim(&self) -> usize {
        3 * self.theta1.len()
    }

    pub fn theta1(&self) -> &[f64] {
        &self.theta1
    }

    pub fn theta2(&self) -> &[f64] {
        &self.theta2
    }

    pub fn theta3(&self) -> &[f64] {
        &self.theta3
    }

    /// Flat view in `[θ¹; θ²; θ³]` order.
    pub fn flatten(&self) -> Vec<f64> {
        let mut v = Vec::with_capacity(self.dim());
        v.extend_from_slice(&self.theta1);
        v.extend_from_slice(&self.theta2);
        v.extend_from_slice(&self.theta3);
        v
    }

    pub fn from_flat(flat: &[f64]) -> Result<Params> {
        if flat.is_empty() || flat.len() % 3 != 0 {
            return Err(Error::DimensionMismatch {
                expected: 3,
                got: flat.len(),
            });
        }
        let n = flat.len() / 3;
        Ok(Params {
            theta1: flat[..n].to_vec(),
            theta2: flat[n..2 * n].to_vec(),
            theta3: flat[2 * n..].to_vec(),
        })
    }

    pub fn copy_from_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: flat.len(),
            });
        }
        let n = self.width();
        self.theta1.copy_from_slice(&flat[..n]);
        self.theta2.copy_from_slice(&flat[n..2 * n]);
        self.theta3.copy_from_slice(&flat[2 * n..]);
        Ok(())
    }
}

/// One Dirac impulse contributed to the mixed derivative by a kinked neuron.
///
/// The impulse lives at `location` with the change-of-variables weight
/// `jacobian_scale = 1/|θ¹_i|` from `δ(θ¹x + θ²) = δ(x - x̂)/|θ¹|`, and the
/// smooth prefactors of the θ¹ and θ² gradient rows evaluated at `x̂`. The θ³
/// row never carries an impulse.
#[derive(Debug, Clone, PartialEq)]
pub struct DeltaEvent {
    pub neuron: usize,
    pub location: f64,
    pub jacobian_scale: f64,
    pub coeff_theta1: f64,
    pub coeff_theta2: f64,
}

/// Width-N Ritz network with a fixed `sin(πx)` distance factor.
#[derive(Debug, Clone, Copy)]
pub struct RitzNet {
    pub width: usize,
    pub activation: Activation,
}

impl RitzNet {
    pub fn new(width: usize, activation: Activation) -> RitzNet {
        RitzNet { width, activation }
    }

    /// `u(x) = Σ_i θ³_i D(x) R(θ¹_i x + θ²_i)`; exactly zero at x ∈ {0, 1}.
    pub fn forward(&self, p: &Params, x: f64) -> f64 {
        let d = distance(x);
        if d == 0.0 {
            return 0.0;
        }
        let act = self.activation;
        let mut sum = 0.0;
        for i in 0..p.width() {
            sum += p.theta3[i] * act.value(p.theta1[i] * x + p.theta2[i]);
        }
        d * sum
    }

    /// `∂u/∂x = Σ_i θ³_i ( D'(x) R(z_i) + D(x) R'(z_i) θ¹_i )`.
    pub fn spatial_grad(&self, p: &Params, x: f64) -> f64 {
        let d = distance(x);
        let dp = distance_deriv(x);
        let act = self.activation;
        let mut sum = 0.0;
        for i in 0..p.width() {
            let z = p.theta1[i] * x + p.theta2[i];
            sum += p.theta3[i] * (dp * act.value(z) + d * act.d1(z) * p.theta1[i]);
        }
        sum
    }

    /// `∂u/∂θ` as the 3N-vector `[∂u/∂θ¹; ∂u/∂θ²; ∂u/∂θ³]`.
    pub fn param_grad(&self, p: &Params, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; p.dim()];
        self.param_grad_into(p, x, &mut out);
        out
    }

    pub fn param_grad_into(&self, p: &Params, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), p.dim());
        let n = p.width();
        let d = distance(x);
        let act = self.activation;
        for i in 0..n {
            let z = p.theta1[i] * x + p.theta2[i];
            let r = act.value(z);
            let r1 = act.d1(z);
            out[i] = p.theta3[i] * d * r1 * x;
            out[n + i] = p.theta3[i] * d * r1;
            out[2 * n + i] = d * r;
        }
    }

    /// Classical part of `∂²u/∂x∂θ`, using the pointwise second derivative of
    /// the activation. For ReLU this is exactly what autodiff frameworks
    /// compute: the impulse terms are absent. For smooth activations it is
    /// the complete mixed derivative.
    pub fn mixed_grad_smooth(&self, p: &Params, x: f64) -> Vec<f64> {
        let mut out = vec![0.0; p.dim()];
        self.mixed_grad_smooth_into(p, x, &mut out);
        out
    }

    pub fn mixed_grad_smooth_into(&self, p: &Params, x: f64, out: &mut [f64]) {
        debug_assert_eq!(out.len(), p.dim());
        let n = p.width();
        let d = distance(x);
        let dp = distance_deriv(x);
        let act = self.activation;
        for i in 0..n {
            let t1 = p.theta1[i];
            let t3 = p.theta3[i];
            let z = t1 * x + p.theta2[i];
            let r = act.value(z);
            let r1 = act.d1(z);
            let r2 = act.d2_smooth(z);
            out[i] = t3 * (dp * r1 * x + d * t1 * r2 * x + d * r1);
            out[n + i] = t3 * (dp * r1 + d * t1 * r2);
            out[2 * n + i] = dp * r + d * t1 * r1;
        }
    }

    /// The impulses missing from [`Self::mixed_grad_smooth`]: one per kinked
    /// neuron whose kink lies inside [0, 1].
    pub fn delta_events(&self, p: &Params) -> Vec<DeltaEvent> {
        let act = self.activation;
        if !act.kink_at_zero() {
            return Vec::new();
        }
        let mut events = Vec::new();
        for i in 0..p.width() {
            let t1 = p.theta1[i];
            let Some(xhat) = act.kink_location(t1, p.theta2[i]) else {
                continue;
            };
            if !(0.0..=1.0).contains(&xhat) {
                continue;
            }
            let d = distance(xhat);
            events.push(DeltaEvent {
                neuron: i,
                location: xhat,
                jacobian_scale: 1.0 / t1.abs(),
                coeff_theta1: p.theta3[i] * d * t1 * xhat,
                coeff_theta2: p.theta3[i] * d * t1,
            });
        }
        events
    }

    /// The field sampled at every grid point.
    pub fn field_on(&self, p: &Params, grid: &crate::quadrature::Grid) -> Vec<f64> {
        grid.points().iter().map(|&x| self.forward(p, x)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::Grid;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn single(theta: (f64, f64, f64)) -> Params {
        Params::new(vec![theta.0], vec![theta.1], vec![theta.2]).unwrap()
    }

    #[test]
    fn forward_closed_form_single_neuron() {
        let net = RitzNet::new(1, Activation::Relu);
        let p = single((1.0, -0.5, 1.0));
        let got = net.forward(&p, 0.75);
        let want = (0.75 * std::f64::consts::PI).sin() * 0.25;
        assert!((got - want).abs() < 1e-15, "got {got}, want {want}");
        assert!((got - 0.176777).abs() < 1e-6);
    }

    #[test]
    fn zero_outer_weights_zero_field() {
        let net = RitzNet::new(3, Activation::Tanh);
        let p = Params::new(vec![1.0, -2.0, 0.3], vec![0.1, 0.2, 0.3], vec![0.0; 3]).unwrap();
        for x in [0.0, 0.31, 0.77, 1.0] {
            assert_eq!(net.forward(&p, x), 0.0);
            assert_eq!(net.spatial_grad(&p, x), 0.0);
        }
    }

    #[test]
    fn boundary_values_exactly_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = Params::random(13, &mut rng);
            let net = RitzNet::new(13, Activation::Relu);
            assert_eq!(net.forward(&p, 0.0), 0.0);
            assert_eq!(net.forward(&p, 1.0), 0.0);
        }
    }

    #[test]
    fn spatial_grad_vanishes_left_of_relu_kink() {
        let net = RitzNet::new(1, Activation::Relu);
        let p = single((1.0, -0.5, 1.0));
        assert_eq!(net.spatial_grad(&p, 0.25), 0.0);
    }

    #[test]
    fn spatial_grad_closed_form_right_of_kink() {
        let net = RitzNet::new(1, Activation::Relu);
        let p = single((1.0, -0.5, 1.0));
        let x = 0.75f64;
        let pi = std::f64::consts::PI;
        let want = pi * (pi * x).cos() * 0.25 + (pi * x).sin();
        let got = net.spatial_grad(&p, x);
        assert!((got - want).abs() < 1e-14);
        assert!((got - 0.15166).abs() < 1e-5);
    }

    #[test]
    fn param_grad_theta3_block_is_basis_value() {
        let net = RitzNet::new(1, Activation::Relu);
        let p = single((1.0, -0.5, 42.0)); // θ³ must not enter its own row
        let g = net.param_grad(&p, 0.75);
        let want = (0.75 * std::f64::consts::PI).sin() * 0.25;
        assert!((g[2] - want).abs() < 1e-15);
    }

    #[test]
    fn param_grad_inner_blocks_vanish_when_inactive() {
        let net = RitzNet::new(1, Activation::Relu);
        let p = single((1.0, -0.5, 1.0));
        let g = net.param_grad(&p, 0.25);
        assert_eq!(g[0], 0.0);
        assert_eq!(g[1], 0.0);
    }

    fn central_param_fd(
        net: &RitzNet,
        p: &Params,
        x: f64,
        h: f64,
        f: impl Fn(&Params, f64) -> f64,
    ) -> Vec<f64> {
        let flat = p.flatten();
        (0..flat.len())
            .map(|i| {
                let mut plus = flat.clone();
                plus[i] += h;
                let mut minus = flat.clone();
                minus[i] -= h;
                let pp = Params::from_flat(&plus).unwrap();
                let pm = Params::from_flat(&minus).unwrap();
                (f(&pp, x) - f(&pm, x)) / (2.0 * h)
            })
            .collect()
    }

    #[test]
    fn param_grad_matches_fd_for_smooth_activation() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let net = RitzNet::new(4, Activation::Tanh);
        let p = Params::random(4, &mut rng);
        for x in [0.13, 0.5, 0.86] {
            let g = net.param_grad(&p, x);
            let fd = central_param_fd(&net, &p, x, 1e-5, |q, t| net.forward(q, t));
            for (a, b) in g.iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn mixed_grad_theta3_block_closed_form() {
        let net = RitzNet::new(1, Activation::Relu);
        let p = single((1.0, -0.5, 1.0));
        let x = 0.75f64;
        let pi = std::f64::consts::PI;
        let m = net.mixed_grad_smooth(&p, x);
        let want = pi * (pi * x).cos() * 0.25 + (pi * x).sin();
        assert!((m[2] - want).abs() < 1e-14);
    }

    #[test]
    fn mixed_grad_matches_fd_of_spatial_grad_for_tanh() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let net = RitzNet::new(5, Activation::Tanh);
        let p = Params::random(5, &mut rng);
        for x in [0.21, 0.64, 0.9] {
            let m = net.mixed_grad_smooth(&p, x);
            let fd = central_param_fd(&net, &p, x, 1e-5, |q, t| net.spatial_grad(q, t));
            for (a, b) in m.iter().zip(&fd) {
                assert!((a - b).abs() <= 1e-6 * (1.0 + a.abs()), "{a} vs {b}");
            }
        }
    }

    #[test]
    fn mixed_grad_inner_rows_carry_theta3_factor() {
        let net = RitzNet::new(2, Activation::Tanh);
        let p = Params::new(vec![0.3, -1.2], vec![0.4, 0.9], vec![0.0, 0.0]).unwrap();
        let m = net.mixed_grad_smooth(&p, 0.4);
        assert_eq!(&m[..4], &[0.0; 4]);
    }

    #[test]
    fn delta_event_for_centered_kink() {
        let net = RitzNet::new(1, Activation::Relu);
        let p = single((1.0, -0.5, 1.0));
        let events = net.delta_events(&p);
        assert_eq!(events.len(), 1);
        let e = &events[0];
        assert_eq!(e.neuron, 0);
        assert!((e.location - 0.5).abs() < 1e-15);
        assert!((e.jacobian_scale - 1.0).abs() < 1e-15);
        assert!((e.coeff_theta2 - 1.0).abs() < 1e-12); // sin(π/2)·1·1
        assert!((e.coeff_theta1 - 0.5).abs() < 1e-12); // extra factor x̂
    }

    #[test]
    fn no_events_for_smooth_activation_or_outside_kink() {
        let tanh_net = RitzNet::new(1, Activation::Tanh);
        assert!(tanh_net.delta_events(&single((1.0, -0.5, 1.0))).is_empty());
        let relu_net = RitzNet::new(1, Activation::Relu);
        assert!(relu_net.delta_events(&single((1.0, -2.0, 1.0))).is_empty());
        assert!(relu_net.delta_events(&single((0.0, -1.0, 1.0))).is_empty());
    }

    #[test]
    fn raw_neuron_slope_constant_between_kinks() {
        // d/dx R(θ¹x + θ²) = θ¹·R'(z) must be flat on each side of the kink
        let act = Activation::Relu;
        let (t1, t2) = (1.7, -0.85);
        let slope = |x: f64| t1 * act.d1(t1 * x + t2);
        let kink = 0.5;
        for x in [0.05, 0.2, 0.4] {
            assert_eq!(slope(x * kink), 0.0);
        }
        let right: Vec<f64> = [0.55, 0.7, 0.95].iter().map(|&x| slope(x)).collect();
        assert!(right.iter().all(|&s| s == right[0]));
    }

    #[test]
    fn delta_bookkeeping_reproduces_distributional_integral() {
        // Integrating (smooth mixed + discretized impulses) against a test
        // function must match the analytic sifting answer to grid accuracy.
        let grid = Grid::midpoint(250).unwrap();
        let net = RitzNet::new(1, Activation::Relu);
        let p = single((1.0, -0.5, 1.0));
        let test_fn = |x: f64| (1.3 * x).cos() + 0.2 * x;

        let events = net.delta_events(&p);
        assert_eq!(events.len(), 1);
        let e = &events[0];

        // θ² row: quadrature of smooth part + sifted impulse
        let n = p.width();
        let smooth: Vec<f64> = grid
            .points()
            .iter()
            .map(|&x| net.mixed_grad_smooth(&p, x)[n] * test_fn(x))
            .collect();
        let mut total = grid.integrate(&smooth).unwrap();
        let stencil = grid.delta_stencil(e.location);
        let f = grid.sample(test_fn);
        total += e.coeff_theta2 * e.jacobian_scale * stencil.sift(&grid, &f);

        // analytic: ∫ θ³(D'R' + D θ¹ δ(z)) f = ∫_{x>1/2} D'(x) f(x) dx + D(x̂) f(x̂)
        let pi = std::f64::consts::PI;
        let analytic_smooth = {
            // fine trapezoid on [1/2, 1] as an independent route
            let m = 20_000;
            let h = 0.5 / m as f64;
            let g = |x: f64| pi * (pi * x).cos() * test_fn(x);
            let mut s = 0.5 * (g(0.5) + g(1.0));
            for k in 1..m {
                s += g(0.5 + k as f64 * h);
            }
            s * h
        };
        let analytic = analytic_smooth + 1.0 * test_fn(0.5);
        assert!(
            (total - analytic).abs() < 1e-2,
            "quadrature {total} vs analytic {analytic}"
        );
    }

    #[test]
    fn flatten_round_trip() {
        let p = Params::new(vec![1.0, 2.0], vec![3.0, 4.0], vec![5.0, 6.0]).unwrap();
        let flat = p.flatten();
        assert_eq!(flat, vec![1.0, 2.0, 3.0, 4.0, 5.0, 6.0]);
        assert_eq!(Params::from_flat(&flat).unwrap(), p);
    }

    #[test]
    fn params_reject_mismatched_blocks() {
        assert!(Params::new(vec![1.0], vec![1.0, 2.0], vec![1.0]).is_err());
        assert!(Params::new(vec![], vec![], vec![]).is_err());
        assert!(Params::from_flat(&[1.0, 2.0]).is_err());
    }

    proptest! {
        #[test]
        fn forward_zero_on_boundary_for_random_params(seed in 0u64..1000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let p = Params::random(8, &mut rng);
            let net = RitzNet::new(8, Activation::Relu);
            prop_assert_eq!(net.forward(&p, 0.0), 0.0);
            prop_assert_eq!(net.forward(&p, 1.0), 0.0);
        }
    }
}
