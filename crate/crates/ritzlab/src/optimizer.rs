//! ADAM and the full-batch training loop for both objectives.
//!
//! Training is deliberately plain: one gradient over the whole fixed grid per
//! epoch, no minibatching, no schedules, no early stopping. Anything fancier
//! would blur the comparison between gradient engines, which is the point of
//! the experiments.

use crate::energy::{
    self, energy_grad, linf_error, max_abs, mse_grad, mse_loss, relative_l2, GradientEngine,
    ProblemOnGrid,
};
use crate::error::{Error, Result};
use crate::network::{Params, RitzNet};
use crate::quadrature::Grid;

/// ADAM state over a flat 3N parameter vector.
#[derive(Debug, Clone)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    first_moment: Vec<f64>,
    second_moment: Vec<f64>,
    step_count: u64,
}

impl Adam {
    /// β₁ = 0.9, β₂ = 0.999, ε = 1e-8.
    pub fn new(lr: f64, dim: usize) -> Adam {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            first_moment: vec![0.0; dim],
            second_moment: vec![0.0; dim],
            step_count: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step_count
    }

    pub fn first_moment(&self) -> &[f64] {
        &self.first_moment
    }

    pub fn second_moment(&self) -> &[f64] {
        &self.second_moment
    }

    /// One bias-corrected update: `θ ← θ − lr·m̂/(√v̂ + ε)`.
    pub fn step(&mut self, theta: &mut [f64], grad: &[f64]) -> Result<()> {
        if theta.len() != self.first_moment.len() || grad.len() != self.first_moment.len() {
            return Err(Error::DimensionMismatch {
                expected: self.first_moment.len(),
                got: theta.len().min(grad.len()),
            });
        }
        self.step_count += 1;
        let bc1 = 1.0 - self.beta1.powi(self.step_count as i32);
        let bc2 = 1.0 - self.beta2.powi(self.step_count as i32);
        for i in 0..theta.len() {
            let g = grad[i];
            self.first_moment[i] = self.beta1 * self.first_moment[i] + (1.0 - self.beta1) * g;
            self.second_moment[i] =
                self.beta2 * self.second_moment[i] + (1.0 - self.beta2) * g * g;
            let m_hat = self.first_moment[i] / bc1;
            let v_hat = self.second_moment[i] / bc2;
            theta[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
        Ok(())
    }
}

/// What the training loop minimizes.
#[derive(Debug, Clone)]
pub enum Objective {
    /// The variational energy under a chosen gradient engine.
    DeepRitz {
        problem: ProblemOnGrid,
        engine: GradientEngine,
    },
    /// Mean squared error against a target sampled on the grid.
    Regression { target: Vec<f64> },
}

impl Objective {
    pub fn value(&self, net: &RitzNet, p: &Params, grid: &Grid) -> Result<f64> {
        match self {
            Objective::DeepRitz { problem, .. } => Ok(energy::energy(problem, net, p, grid)),
            Objective::Regression { target } => mse_loss(net, p, grid, target),
        }
    }

    pub fn gradient(&self, net: &RitzNet, p: &Params, grid: &Grid) -> Result<Vec<f64>> {
        match self {
            Objective::DeepRitz { problem, engine } => energy_grad(problem, net, p, grid, *engine),
            Objective::Regression { target } => mse_grad(net, p, grid, target),
        }
    }

    /// Field the trace measures errors against: the exact solution when the
    /// problem has one, or the regression target.
    pub fn reference(&self) -> Option<&[f64]> {
        match self {
            Objective::DeepRitz { problem, .. } => problem.exact.as_deref(),
            Objective::Regression { target } => Some(target),
        }
    }
}

/// One trace entry. `epoch` 0 is the untrained state.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochRecord {
    pub epoch: usize,
    pub objective: f64,
    /// Relative L2 error against the reference field, when one exists.
    pub rel_l2: Option<f64>,
    /// Max-norm error against the reference field.
    pub linf: Option<f64>,
}

/// Per-epoch history of a training run plus optional parameter snapshots.
#[derive(Debug, Clone)]
pub struct TrainingTrace {
    /// State before the first update (conceptually epoch 0).
    pub initial: EpochRecord,
    /// Exactly one record per epoch, indices contiguous from 1.
    pub records: Vec<EpochRecord>,
    pub snapshots: Vec<(usize, Params)>,
}

impl TrainingTrace {
    pub fn final_objective(&self) -> f64 {
        self.records
            .last()
            .map(|r| r.objective)
            .unwrap_or(self.initial.objective)
    }

    pub fn final_rel_l2(&self) -> Option<f64> {
        self.records.last().and_then(|r| r.rel_l2)
    }

    /// Mean objective over the last `k` epochs (all of them if fewer).
    pub fn trailing_mean(&self, k: usize) -> f64 {
        let n = self.records.len();
        if n == 0 {
            return self.initial.objective;
        }
        let tail = &self.records[n.saturating_sub(k)..];
        tail.iter().map(|r| r.objective).sum::<f64>() / tail.len() as f64
    }

    pub fn objective_at(&self, epoch: usize) -> Option<f64> {
        if epoch == 0 {
            return Some(self.initial.objective);
        }
        self.records.get(epoch - 1).map(|r| r.objective)
    }

    /// Appends a continuation run, re-indexing its epochs to follow this one.
    pub fn extend_with(&mut self, next: TrainingTrace) {
        let offset = self.records.len();
        self.records.extend(next.records.into_iter().map(|mut r| {
            r.epoch += offset;
            r
        }));
        self.snapshots
            .extend(next.snapshots.into_iter().map(|(e, p)| (e + offset, p)));
    }
}

#[derive(Debug, Clone)]
pub struct TrainOptions {
    pub epochs: usize,
    pub lr: f64,
    /// Record a parameter snapshot every `k` epochs when set.
    pub snapshot_every: Option<usize>,
}

impl TrainOptions {
    pub fn new(epochs: usize, lr: f64) -> TrainOptions {
        TrainOptions {
            epochs,
            lr,
            snapshot_every: None,
        }
    }
}

fn record(
    objective: &Objective,
    net: &RitzNet,
    p: &Params,
    grid: &Grid,
    epoch: usize,
) -> Result<EpochRecord> {
    let value = objective.value(net, p, grid)?;
    if !value.is_finite() {
        return Err(Error::NonFinite {
            quantity: "objective",
            epoch,
            coordinate: None,
        });
    }
    let (rel_l2, linf) = match objective.reference() {
        Some(reference) => {
            let field = net.field_on(p, grid);
            (
                Some(relative_l2(&field, reference)),
                Some(linf_error(&field, reference)),
            )
        }
        None => (None, None),
    };
    Ok(EpochRecord {
        epoch,
        objective: value,
        rel_l2,
        linf,
    })
}

/// Full-batch ADAM training. Returns the final parameters and the complete
/// trace; aborts with a diagnostic if the objective or any gradient
/// coordinate goes non-finite.
pub fn train(
    objective: &Objective,
    net: &RitzNet,
    p0: &Params,
    grid: &Grid,
    opts: &TrainOptions,
) -> Result<(Params, TrainingTrace)> {
    let mut params = p0.clone();
    let mut flat = p0.flatten();
    let mut adam = Adam::new(opts.lr, flat.len());

    let initial = record(objective, net, &params, grid, 0)?;
    let mut records = Vec::with_capacity(opts.epochs);
    let mut snapshots = Vec::new();

    for epoch in 1..=opts.epochs {
        let grad = objective.gradient(net, &params, grid)?;
        if let Some(bad) = grad.iter().position(|g| !g.is_finite()) {
            return Err(Error::NonFinite {
                quantity: "gradient",
                epoch,
                coordinate: Some(bad),
            });
        }
        adam.step(&mut flat, &grad)?;
        params.copy_from_flat(&flat)?;
        records.push(record(objective, net, &params, grid, epoch)?);
        if let Some(every) = opts.snapshot_every {
            if every > 0 && epoch % every == 0 {
                snapshots.push((epoch, params.clone()));
            }
        }
    }

    Ok((
        params,
        TrainingTrace {
            initial,
            records,
            snapshots,
        },
    ))
}

/// Max-norm of a gradient, re-exported next to the trainer for callers
/// assembling convergence diagnostics.
pub fn grad_max_norm(g: &[f64]) -> f64 {
    max_abs(g)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::activation::Activation;
    use crate::energy::Problem;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn first_step_is_signed_learning_rate() {
        let mut adam = Adam::new(1e-3, 3);
        let mut theta = vec![1.0, 2.0, -3.0];
        let grad = vec![0.7, -1.3, 2.0];
        adam.step(&mut theta, &grad).unwrap();
        for (i, (t, g)) in theta.iter().zip(&grad).enumerate() {
            let expected = [1.0, 2.0, -3.0][i] - 1e-3 * g.signum();
            assert!((t - expected).abs() < 1e-9, "coord {i}");
        }
    }

    #[test]
    fn zero_gradient_is_a_fixed_point() {
        let mut adam = Adam::new(1e-2, 2);
        let mut theta = vec![0.5, -0.5];
        adam.step(&mut theta, &[0.0, 0.0]).unwrap();
        assert_eq!(theta, vec![0.5, -0.5]);
        assert_eq!(adam.first_moment(), &[0.0, 0.0]);
        assert_eq!(adam.second_moment(), &[0.0, 0.0]);
    }

    #[test]
    fn opposing_gradients_cancel_momentum_not_variance() {
        let mut adam = Adam::new(1e-3, 1);
        let mut theta = vec![0.0];
        adam.step(&mut theta, &[2.0]).unwrap();
        let m_after_first = adam.first_moment()[0];
        adam.step(&mut theta, &[-2.0]).unwrap();
        assert!(adam.first_moment()[0].abs() < m_after_first.abs());
        assert!(adam.second_moment()[0] > 0.0);
        assert_eq!(adam.step_count(), 2);
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let mut adam = Adam::new(1e-3, 2);
        let mut theta = vec![0.0, 0.0];
        assert!(matches!(
            adam.step(&mut theta, &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    fn quick_setup() -> (Grid, ProblemOnGrid) {
        let grid = Grid::midpoint(250).unwrap();
        let pg = ProblemOnGrid::sample(&Problem::sine_source(3), &grid);
        (grid, pg)
    }

    #[test]
    fn zero_net_zero_target_stays_put() {
        let grid = Grid::midpoint(100).unwrap();
        let net = RitzNet::new(4, Activation::Relu);
        let p0 = Params::new(
            vec![1.0, -0.4, 0.2, 0.9],
            vec![0.1, 0.2, -0.3, 0.0],
            vec![0.0; 4],
        )
        .unwrap();
        let objective = Objective::Regression {
            target: vec![0.0; 100],
        };
        let (p, trace) = train(&objective, &net, &p0, &grid, &TrainOptions::new(1, 1e-3)).unwrap();
        assert_eq!(p, p0);
        assert_eq!(trace.records.len(), 1);
        assert_eq!(trace.records[0].objective, 0.0);
    }

    #[test]
    fn trace_shape_and_indices() {
        let (grid, pg) = quick_setup();
        let net = RitzNet::new(5, Activation::Tanh);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p0 = Params::random(5, &mut rng);
        let objective = Objective::DeepRitz {
            problem: pg,
            engine: GradientEngine::AdConvention,
        };
        let mut opts = TrainOptions::new(7, 1e-3);
        opts.snapshot_every = Some(3);
        let (_, trace) = train(&objective, &net, &p0, &grid, &opts).unwrap();
        assert_eq!(trace.initial.epoch, 0);
        let epochs: Vec<usize> = trace.records.iter().map(|r| r.epoch).collect();
        assert_eq!(epochs, vec![1, 2, 3, 4, 5, 6, 7]);
        let snap_epochs: Vec<usize> = trace.snapshots.iter().map(|(e, _)| *e).collect();
        assert_eq!(snap_epochs, vec![3, 6]);
        assert!(trace.records.iter().all(|r| r.rel_l2.is_some()));
    }

    #[test]
    fn identical_seeds_identical_traces() {
        let (grid, pg) = quick_setup();
        let net = RitzNet::new(6, Activation::Relu);
        let run = || {
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            let p0 = Params::random(6, &mut rng);
            let objective = Objective::DeepRitz {
                problem: pg.clone(),
                engine: GradientEngine::ExactDistributional,
            };
            train(&objective, &net, &p0, &grid, &TrainOptions::new(50, 1e-3)).unwrap()
        };
        let (pa, ta) = run();
        let (pb, tb) = run();
        assert_eq!(pa, pb);
        assert_eq!(ta.records, tb.records);
    }

    #[test]
    fn regression_does_not_worsen_the_loss() {
        let (grid, _) = quick_setup();
        let net = RitzNet::new(8, Activation::Relu);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p0 = Params::random(8, &mut rng);
        let amp = 100.0 / (9.0 * std::f64::consts::PI.powi(2));
        let target = grid.sample(|x| amp * (3.0 * std::f64::consts::PI * x).sin());
        let objective = Objective::Regression {
            target: target.clone(),
        };
        let before = objective.value(&net, &p0, &grid).unwrap();
        let (_, trace) = train(&objective, &net, &p0, &grid, &TrainOptions::new(200, 1e-3)).unwrap();
        assert!(trace.final_objective() <= before);
    }

    #[test]
    fn non_finite_objective_reports_epoch() {
        let grid = Grid::midpoint(50).unwrap();
        let net = RitzNet::new(2, Activation::Relu);
        let p0 = Params::new(vec![1.0, 0.5], vec![-0.2, 0.1], vec![0.3, -0.1]).unwrap();
        let mut target = vec![0.0; 50];
        target[10] = f64::NAN;
        let objective = Objective::Regression { target };
        let err = train(&objective, &net, &p0, &grid, &TrainOptions::new(3, 1e-3)).unwrap_err();
        match err {
            Error::NonFinite {
                quantity, epoch, ..
            } => {
                assert_eq!(quantity, "objective");
                assert_eq!(epoch, 0);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn trailing_mean_and_extension() {
        let rec = |epoch, objective| EpochRecord {
            epoch,
            objective,
            rel_l2: None,
            linf: None,
        };
        let mut trace = TrainingTrace {
            initial: rec(0, 10.0),
            records: vec![rec(1, 4.0), rec(2, 2.0)],
            snapshots: vec![],
        };
        assert!((trace.trailing_mean(1) - 2.0).abs() < 1e-15);
        assert!((trace.trailing_mean(5) - 3.0).abs() < 1e-15);
        let next = TrainingTrace {
            initial: rec(0, 2.0),
            records: vec![rec(1, 1.0)],
            snapshots: vec![],
        };
        trace.extend_with(next);
        let epochs: Vec<usize> = trace.records.iter().map(|r| r.epoch).collect();
        assert_eq!(epochs, vec![1, 2, 3]);
        assert_eq!(trace.final_objective(), 1.0);
        assert_eq!(trace.objective_at(0), Some(10.0));
        assert_eq!(trace.objective_at(3), Some(1.0));
    }
}
