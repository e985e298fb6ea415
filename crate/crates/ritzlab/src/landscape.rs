//! Hessian-eigenvector slicing of the energy landscape and a scalar
//! roughness metric.
//!
//! The Hessian is always built by central finite differences of the objective
//! value: that keeps it independent of every gradient engine and of the very
//! impulse-dropping pathology the slices are meant to expose. The network is
//! small (3N = 150), so a dense cyclic Jacobi eigendecomposition is plenty.

use rayon::prelude::*;

use crate::energy::{energy, ProblemOnGrid};
use crate::error::{Error, Result};
use crate::network::{Params, RitzNet};
use crate::quadrature::Grid;

/// Dense symmetric matrix with its full eigendecomposition, eigenvalues in
/// descending order paired with orthonormal eigenvectors.
#[derive(Debug, Clone)]
pub struct HessianSpectrum {
    pub dim: usize,
    /// Row-major n×n symmetric matrix.
    pub matrix: Vec<f64>,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Vec<Vec<f64>>,
}

impl HessianSpectrum {
    /// Frobenius norm of the stored matrix.
    pub fn matrix_norm(&self) -> f64 {
        self.matrix.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// `max_k ‖J v_k − λ_k v_k‖₂` over all returned pairs.
    pub fn max_residual(&self) -> f64 {
        let n = self.dim;
        let mut worst = 0.0f64;
        for (lambda, v) in self.eigenvalues.iter().zip(&self.eigenvectors) {
            let mut res = 0.0;
            for r in 0..n {
                let mut jv = 0.0;
                for c in 0..n {
                    jv += self.matrix[r * n + c] * v[c];
                }
                let d = jv - lambda * v[r];
                res += d * d;
            }
            worst = worst.max(res.sqrt());
        }
        worst
    }

    /// Largest deviation of `v_i · v_j` from the Kronecker delta.
    pub fn max_orthonormality_defect(&self) -> f64 {
        let mut worst = 0.0f64;
        for (i, vi) in self.eigenvectors.iter().enumerate() {
            for (j, vj) in self.eigenvectors.iter().enumerate().skip(i) {
                let dot: f64 = vi.iter().zip(vj).map(|(a, b)| a * b).sum();
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((dot - target).abs());
            }
        }
        worst
    }
}

/// Central-difference Hessian of an arbitrary objective:
/// `J_ab ≈ [f(+h_a+h_b) − f(+h_a−h_b) − f(−h_a+h_b) + f(−h_a−h_b)] / 4h²`.
/// Entries are filled for a ≤ b and mirrored, so the result is symmetric by
/// construction. Runs the probes in parallel.
pub fn hessian_fd<F>(f: &F, theta: &[f64], h: f64) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if h <= 0.0 {
        return Err(Error::InvalidFdStep(h));
    }
    let n = theta.len();
    let pairs: Vec<(usize, usize)> = (0..n)
        .flat_map(|a| (a..n).map(move |b| (a, b)))
        .collect();
    let entries: Vec<f64> = pairs
        .par_iter()
        .map_init(
            || theta.to_vec(),
            |probe, &(a, b)| {
                let mut eval = |sa: f64, sb: f64| {
                    probe[a] += sa * h;
                    probe[b] += sb * h;
                    let v = f(probe);
                    probe[a] = theta[a];
                    probe[b] = theta[b];
                    v
                };
                (eval(1.0, 1.0) - eval(1.0, -1.0) - eval(-1.0, 1.0) + eval(-1.0, -1.0))
                    / (4.0 * h * h)
            },
        )
        .collect();
    let mut matrix = vec![0.0; n * n];
    for (&(a, b), &v) in pairs.iter().zip(&entries) {
        if !v.is_finite() {
            return Err(Error::NonFiniteProbe { coordinate: a * n + b });
        }
        matrix[a * n + b] = v;
        matrix[b * n + a] = v;
    }
    Ok(matrix)
}

/// Hessian of `f` followed by a dense symmetric eigendecomposition.
pub fn hessian_spectrum<F>(f: &F, theta: &[f64], h: f64) -> Result<HessianSpectrum>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let matrix = hessian_fd(f, theta, h)?;
    let n = theta.len();
    let (eigenvalues, eigenvectors) = jacobi_eigen(&matrix, n);
    Ok(HessianSpectrum {
        dim: n,
        matrix,
        eigenvalues,
        eigenvectors,
    })
}

/// The energy as a closure over flat parameter vectors, for Hessian and
/// slice evaluation.
pub fn energy_objective<'a>(
    pg: &'a ProblemOnGrid,
    net: &'a RitzNet,
    grid: &'a Grid,
) -> impl Fn(&[f64]) -> f64 + Sync + 'a {
    move |flat: &[f64]| {
        let p = Params::from_flat(flat).expect("flat parameter vector of dimension 3N");
        energy(pg, net, &p, grid)
    }
}

/// Cyclic Jacobi eigendecomposition of a symmetric matrix (row-major, n×n).
/// Returns eigenvalues descending with matching unit-norm eigenvectors.
fn jacobi_eigen(matrix: &[f64], n: usize) -> (Vec<f64>, Vec<Vec<f64>>) {
    const MAX_SWEEPS: usize = 50;
    let mut a = matrix.to_vec();
    // eigenvector accumulator, starts as identity
    let mut v = vec![0.0; n * n];
    for i in 0..n {
        v[i * n + i] = 1.0;
    }

    let off = |a: &[f64]| -> f64 {
        let mut s = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                s += a[p * n + q].abs();
            }
        }
        s
    };
    let scale: f64 = matrix.iter().map(|x| x.abs()).fold(0.0, f64::max).max(1.0);
    let tol = 1e-14 * scale * (n * n) as f64;

    for _ in 0..MAX_SWEEPS {
        if off(&a) <= tol {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() <= 1e-300 {
                    continue;
                }
                // rotation angle annihilating a[p][q]
                let theta = 0.5 * (a[q * n + q] - a[p * n + p]) / apq;
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
                for k in 0..n {
                    let vkp = v[k * n + p];
                    let vkq = v[k * n + q];
                    v[k * n + p] = c * vkp - s * vkq;
                    v[k * n + q] = s * vkp + c * vkq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| {
        a[j * n + j]
            .partial_cmp(&a[i * n + i])
            .expect("finite eigenvalues")
    });
    let eigenvalues: Vec<f64> = order.iter().map(|&i| a[i * n + i]).collect();
    let eigenvectors: Vec<Vec<f64>> = order
        .iter()
        .map(|&col| (0..n).map(|row| v[row * n + col]).collect())
        .collect();
    (eigenvalues, eigenvectors)
}

/// A 2D cross-section of an objective through `center`, spanned by two
/// direction vectors, with its roughness score.
#[derive(Debug, Clone)]
pub struct SliceSurface {
    /// Which eigenvector pair spans the slice (1-based), when applicable.
    pub pair: Option<(usize, usize)>,
    /// Perturbation magnitudes along each axis.
    pub eps: Vec<f64>,
    /// `values[r][c] = f(center + eps[r]·v_i + eps[c]·v_j)`.
    pub values: Vec<Vec<f64>>,
    pub center_value: f64,
    pub roughness: f64,
}

/// Evaluates the objective on a `resolution × resolution` grid of
/// perturbations with magnitudes in `[-half_width, half_width]`.
pub fn slice_surface<F>(
    f: &F,
    center: &[f64],
    vi: &[f64],
    vj: &[f64],
    resolution: usize,
    half_width: f64,
) -> Result<SliceSurface>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    if resolution < 3 {
        return Err(Error::Experiment(format!(
            "slice resolution must be at least 3, got {resolution}"
        )));
    }
    if vi.len() != center.len() || vj.len() != center.len() {
        return Err(Error::DimensionMismatch {
            expected: center.len(),
            got: vi.len().min(vj.len()),
        });
    }
    // For odd resolutions build the axis around an exact 0 so the middle cell
    // evaluates f at the unperturbed center.
    let eps: Vec<f64> = if resolution % 2 == 1 {
        let mid = (resolution / 2) as isize;
        let step = half_width / mid as f64;
        (0..resolution)
            .map(|k| (k as isize - mid) as f64 * step)
            .collect()
    } else {
        let step = 2.0 * half_width / (resolution - 1) as f64;
        (0..resolution)
            .map(|k| -half_width + k as f64 * step)
            .collect()
    };

    let values: Vec<Vec<f64>> = eps
        .par_iter()
        .map_init(
            || vec![0.0; center.len()],
            |probe, &e1| {
                eps.iter()
                    .map(|&e2| {
                        for k in 0..center.len() {
                            probe[k] = center[k] + e1 * vi[k] + e2 * vj[k];
                        }
                        f(probe)
                    })
                    .collect()
            },
        )
        .collect();

    let center_value = f(center);
    let roughness = roughness(&values);
    Ok(SliceSurface {
        pair: None,
        eps,
        values,
        center_value,
        roughness,
    })
}

/// Mean squared five-point-stencil Laplacian over interior nodes, normalized
/// by the squared value range. Zero for affine surfaces; depends only on the
/// values and the grid topology, not on the ε labels.
pub fn roughness(values: &[Vec<f64>]) -> f64 {
    let rows = values.len();
    if rows < 3 {
        return 0.0;
    }
    let cols = values[0].len();
    if cols < 3 {
        return 0.0;
    }
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for row in values {
        for &v in row {
            lo = lo.min(v);
            hi = hi.max(v);
        }
    }
    let range = hi - lo;
    if range <= 0.0 {
        return 0.0;
    }
    let mut sum = 0.0;
    let mut count = 0usize;
    for r in 1..rows - 1 {
        for c in 1..cols - 1 {
            let lap = values[r + 1][c] + values[r - 1][c] + values[r][c + 1] + values[r][c - 1]
                - 4.0 * values[r][c];
            sum += lap * lap;
            count += 1;
        }
    }
    sum / count as f64 / (range * range)
}
