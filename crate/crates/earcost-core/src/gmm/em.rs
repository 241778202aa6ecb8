//! Mixture estimation: k-means++ seeding and expectation maximization.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::Real;

use super::{logsum, GmmParams, VARIANCE_FLOOR};

/// Stopping and flooring knobs for [`em_fit`].
#[derive(Debug, Clone, Copy)]
pub struct EmOptions {
    pub max_iters: usize,
    /// Stop when the relative log-likelihood improvement drops below this.
    pub tol: f64,
    pub variance_floor: f64,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_iters: 200,
            tol: 1e-6,
            variance_floor: VARIANCE_FLOOR,
        }
    }
}

/// A fitted mixture plus its per-iteration total log-likelihood trace.
#[derive(Debug, Clone)]
pub struct EmFit<R> {
    pub params: GmmParams<R>,
    pub log_likelihood_trace: Vec<f64>,
    pub iterations: usize,
}

/// k-means++ seeding: first center uniform, every further center drawn
/// with probability proportional to its squared distance to the nearest
/// center already chosen.
pub fn kmeanspp_init<R: Real>(data: &[Vec<R>], m: usize, rng_seed: u64) -> Result<Vec<Vec<R>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    kmeanspp_with_rng(data, m, &mut rng)
}

pub(crate) fn kmeanspp_with_rng<R: Real>(
    data: &[Vec<R>],
    m: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<Vec<R>>> {
    if m == 0 {
        return Err(Error::InvalidParameter("need at least one center".into()));
    }
    if data.len() < m {
        return Err(Error::NotEnoughData {
            needed: m,
            available: data.len(),
        });
    }
    let mut chosen: Vec<usize> = Vec::with_capacity(m);
    chosen.push(rng.gen_range(0..data.len()));
    let mut nearest_sq: Vec<f64> = data
        .iter()
        .map(|p| squared_distance(p, &data[chosen[0]]))
        .collect();
    while chosen.len() < m {
        let total: f64 = nearest_sq.iter().sum();
        let next = if total > 0.0 {
            let mut draw = rng.gen::<f64>() * total;
            let mut pick = data.len() - 1;
            for (i, &w) in nearest_sq.iter().enumerate() {
                if draw < w {
                    pick = i;
                    break;
                }
                draw -= w;
            }
            pick
        } else {
            // all remaining points coincide with a chosen center
            (0..data.len())
                .find(|i| !chosen.contains(i))
                .expect("data.len() >= m")
        };
        chosen.push(next);
        for (i, p) in data.iter().enumerate() {
            let d = squared_distance(p, &data[next]);
            if d < nearest_sq[i] {
                nearest_sq[i] = d;
            }
        }
    }
    Ok(chosen.into_iter().map(|i| data[i].clone()).collect())
}

fn squared_distance<R: Real>(a: &[R], b: &[R]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| {
            let d = (x - y).as_f64();
            d * d
        })
        .sum()
}

/// Fit an M-component diagonal mixture by expectation maximization.
///
/// Initialization is k-means++ for the means, the global diagonal
/// variance for every component, and uniform weights. Components whose
/// responsibility mass collapses are re-seeded with a distance-weighted
/// draw against the surviving means.
pub fn em_fit<R: Real>(
    data: &[Vec<R>],
    m: usize,
    rng_seed: u64,
    opts: EmOptions,
) -> Result<EmFit<R>> {
    if data.is_empty() {
        return Err(Error::NotEnoughData {
            needed: m.max(1),
            available: 0,
        });
    }
    let dim = data[0].len();
    if data.iter().any(|p| p.len() != dim) {
        return Err(Error::InvalidParameter("ragged training data".into()));
    }
    if data.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("training data".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let n = data.len();
    let floor = opts.variance_floor;

    let global_var = global_variance(data, floor);
    let mut means: Vec<Vec<f64>> = kmeanspp_with_rng(data, m, &mut rng)?
        .into_iter()
        .map(|c| c.iter().map(|v| v.as_f64()).collect())
        .collect();
    let mut variances: Vec<Vec<f64>> = vec![global_var.clone(); m];
    let mut weights: Vec<f64> = vec![1.0 / m as f64; m];

    let mut trace = Vec::new();
    let mut iterations = 0;
    // responsibilities: resp[i][k] in probability domain
    let mut resp = vec![vec![0.0f64; m]; n];

    for _iter in 0..opts.max_iters {
        // E-step in the log domain
        let mut total_ll = 0.0;
        let log_norm: Vec<f64> = (0..m)
            .map(|k| {
                let log_det: f64 = variances[k].iter().map(|v| v.ln()).sum();
                weights[k].ln()
                    - dim as f64 / 2.0 * (2.0 * std::f64::consts::PI).ln()
                    - 0.5 * log_det
            })
            .collect();
        for (i, point) in data.iter().enumerate() {
            let mut z = vec![0.0f64; m];
            for k in 0..m {
                let mut quad = 0.0;
                for d in 0..dim {
                    let diff = point[d].as_f64() - means[k][d];
                    quad += diff * diff / variances[k][d];
                }
                z[k] = log_norm[k] - 0.5 * quad;
            }
            let ll = z.iter().copied().fold(f64::NEG_INFINITY, logsum);
            total_ll += ll;
            for k in 0..m {
                resp[i][k] = (z[k] - ll).exp();
            }
        }
        trace.push(total_ll);
        iterations += 1;

        // convergence on relative improvement
        if trace.len() >= 2 {
            let prev = trace[trace.len() - 2];
            let improvement = total_ll - prev;
            if improvement < opts.tol * prev.abs().max(1e-12) {
                break;
            }
        }

        // M-step
        let mut reseed = Vec::new();
        for k in 0..m {
            let mass: f64 = (0..n).map(|i| resp[i][k]).sum();
            if mass < 1e-10 {
                reseed.push(k);
                continue;
            }
            for d in 0..dim {
                let mut mu = 0.0;
                for i in 0..n {
                    mu += resp[i][k] * data[i][d].as_f64();
                }
                mu /= mass;
                let mut var = 0.0;
                for i in 0..n {
                    let diff = data[i][d].as_f64() - mu;
                    var += resp[i][k] * diff * diff;
                }
                var /= mass;
                means[k][d] = mu;
                variances[k][d] = var.max(floor);
            }
            weights[k] = mass / n as f64;
        }
        if !reseed.is_empty() {
            reseed_components(
                &reseed,
                data,
                &mut means,
                &mut variances,
                &mut weights,
                &global_var,
                &mut rng,
            );
        }
        // keep weights exactly on the simplex
        let total_weight: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total_weight;
        }
        let correction: f64 = 1.0 - weights.iter().sum::<f64>();
        weights[0] += correction;
    }

    let params = GmmParams::new(
        weights.into_iter().map(R::of).collect(),
        means
            .into_iter()
            .map(|row| row.into_iter().map(R::of).collect())
            .collect(),
        variances
            .into_iter()
            .map(|row| row.into_iter().map(R::of).collect())
            .collect(),
    )?;
    Ok(EmFit {
        params,
        log_likelihood_trace: trace,
        iterations,
    })
}

/// Replace collapsed components: draw a fresh mean with probability
/// proportional to the squared distance from the surviving means, reset
/// the variance to the global diagonal, and give the component a uniform
/// share of weight.
fn reseed_components<R: Real>(
    reseed: &[usize],
    data: &[Vec<R>],
    means: &mut [Vec<f64>],
    variances: &mut [Vec<f64>],
    weights: &mut [f64],
    global_var: &[f64],
    rng: &mut ChaCha8Rng,
) {
    let m = means.len();
    for &k in reseed {
        let weights_sq: Vec<f64> = data
            .iter()
            .map(|p| {
                means
                    .iter()
                    .enumerate()
                    .filter(|(j, _)| !reseed.contains(j))
                    .map(|(_, c)| {
                        p.iter()
                            .zip(c)
                            .map(|(&x, &mu)| {
                                let d = x.as_f64() - mu;
                                d * d
                            })
                            .sum::<f64>()
                    })
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let total: f64 = weights_sq.iter().filter(|w| w.is_finite()).sum();
        let pick = if total > 0.0 {
            let mut draw = rng.gen::<f64>() * total;
            let mut pick = data.len() - 1;
            for (i, &w) in weights_sq.iter().enumerate() {
                if !w.is_finite() {
                    continue;
                }
                if draw < w {
                    pick = i;
                    break;
                }
                draw -= w;
            }
            pick
        } else {
            rng.gen_range(0..data.len())
        };
        means[k] = data[pick].iter().map(|v| v.as_f64()).collect();
        variances[k].copy_from_slice(global_var);
        weights[k] = 1.0 / m as f64;
    }
}

fn global_variance<R: Real>(data: &[Vec<R>], floor: f64) -> Vec<f64> {
    let dim = data[0].len();
    let n = data.len() as f64;
    let mut mean = vec![0.0f64; dim];
    for p in data {
        for d in 0..dim {
            mean[d] += p[d].as_f64();
        }
    }
    for v in &mut mean {
        *v /= n;
    }
    let mut var = vec![0.0f64; dim];
    for p in data {
        for d in 0..dim {
            let diff = p[d].as_f64() - mean[d];
            var[d] += diff * diff;
        }
    }
    var.into_iter().map(|v| (v / n).max(floor)).collect()
}
