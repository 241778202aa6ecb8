//! Grid search over kernels, penalty and training-set size.

use crate::error::{Error, Result};
use crate::eval::{eer_from_scores, ScoredFrames};
use crate::real::Real;

use super::{downsample_training, smo_train, svm_score, KernelSpec, SmoConfig, SvmModel};

/// Kernel candidates: linear, low-degree polynomials, narrow RBFs, sigmoid.
pub fn default_kernel_grid<R: Real>() -> Vec<KernelSpec<R>> {
    vec![
        KernelSpec::Linear,
        KernelSpec::Polynomial { degree: 2 },
        KernelSpec::Polynomial { degree: 3 },
        KernelSpec::Rbf { gamma: R::of(0.005) },
        KernelSpec::Rbf { gamma: R::of(0.01) },
        KernelSpec::Rbf { gamma: R::of(0.05) },
        KernelSpec::Sigmoid,
    ]
}

/// Penalty candidates.
pub fn default_c_grid() -> Vec<f64> {
    vec![0.1, 1.0, 10.0]
}

/// Per-class training-set sizes.
pub fn default_t_grid() -> Vec<usize> {
    vec![500, 2000]
}

/// One evaluated grid cell.
#[derive(Debug, Clone)]
pub struct SvmGridPoint<R> {
    pub kernel: KernelSpec<R>,
    pub c: f64,
    pub examples_per_class: usize,
    pub support_vectors: usize,
    pub validation_eer: f64,
    pub converged: bool,
}

/// Winning model plus the grid it beat.
#[derive(Debug, Clone)]
pub struct SvmSelection<R> {
    pub model: SvmModel<R>,
    pub c: f64,
    pub examples_per_class: usize,
    pub validation_eer: f64,
    pub grid: Vec<SvmGridPoint<R>>,
}

/// Train one model per (kernel, C, T) cell on a downsampled balanced set
/// and keep the best validation EER. Cells whose T exceeds a pool are
/// skipped; an entirely infeasible grid is an error.
#[allow(clippy::too_many_arguments)]
pub fn select_svm<R: Real>(
    train_target: &[Vec<R>],
    train_world: &[Vec<R>],
    validation_target: &[Vec<R>],
    validation_world: &[Vec<R>],
    kernel_grid: &[KernelSpec<R>],
    c_grid: &[f64],
    t_grid: &[usize],
    rng_seed: u64,
) -> Result<SvmSelection<R>> {
    if kernel_grid.is_empty() || c_grid.is_empty() || t_grid.is_empty() {
        return Err(Error::InvalidParameter("empty svm grid".into()));
    }
    let mut best: Option<(SvmModel<R>, f64, usize, f64)> = None;
    let mut grid = Vec::new();
    let mut cell = 0u64;
    for &t in t_grid {
        if t > train_target.len() || t > train_world.len() {
            continue;
        }
        for &kernel in kernel_grid {
            for &c in c_grid {
                cell += 1;
                let (examples, labels) =
                    downsample_training(train_target, train_world, t, rng_seed.wrapping_add(cell))?;
                let trained = smo_train(
                    &examples,
                    &labels,
                    SmoConfig {
                        c,
                        ..SmoConfig::default()
                    },
                    kernel,
                )?;
                let score_all = |frames: &[Vec<R>]| {
                    frames
                        .iter()
                        .map(|x| svm_score(x, &trained.model))
                        .collect::<Result<Vec<R>>>()
                };
                let sf = ScoredFrames::from_pools(
                    &score_all(validation_target)?,
                    &score_all(validation_world)?,
                )?;
                let eer = eer_from_scores(&sf)?.eer_percent;
                grid.push(SvmGridPoint {
                    kernel,
                    c,
                    examples_per_class: t,
                    support_vectors: trained.model.num_support_vectors(),
                    validation_eer: eer,
                    converged: trained.converged,
                });
                if best.as_ref().map_or(true, |(_, _, _, e)| eer < *e) {
                    best = Some((trained.model, c, t, eer));
                }
            }
        }
    }
    let (model, c, examples_per_class, validation_eer) =
        best.ok_or_else(|| Error::InvalidParameter("no feasible svm grid cell".into()))?;
    Ok(SvmSelection {
        model,
        c,
        examples_per_class,
        validation_eer,
        grid,
    })
}
