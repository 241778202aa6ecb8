//! Architecture grid search for both network families.

use crate::error::{Error, Result};
use crate::eval::{eer_from_scores, ScoredFrames};
use crate::real::Real;

use super::{
    dnn_forward, rnn_forward, train_dnn, train_rnn, Activation, DnnArch, NetworkParams, RnnArch,
    TrainSpecDnn, TrainSpecRnn,
};

/// Feed-forward grid: depth, width and hidden activation.
pub fn default_dnn_grid() -> Vec<DnnArch> {
    let mut grid = Vec::new();
    for &layers in &[1usize, 2, 3, 4] {
        for &hidden in &[10usize, 25, 50, 100, 150] {
            for &activation in &[Activation::Sigmoid, Activation::Relu] {
                grid.push(DnnArch {
                    layers,
                    hidden,
                    activation,
                });
            }
        }
    }
    grid
}

/// Recurrent grid: depth and width.
pub fn default_rnn_grid() -> Vec<RnnArch> {
    let mut grid = Vec::new();
    for &layers in &[1usize, 2, 3] {
        for &hidden in &[10usize, 25, 50, 100, 150] {
            grid.push(RnnArch { layers, hidden });
        }
    }
    grid
}

/// One evaluated architecture.
#[derive(Debug, Clone)]
pub struct NetworkGridPoint {
    pub layers: usize,
    pub hidden: usize,
    pub activation: Activation,
    pub validation_eer: f64,
}

/// Winning network plus the grid it beat.
#[derive(Debug, Clone)]
pub struct NetworkSelection<R> {
    pub params: NetworkParams<R>,
    pub validation_eer: f64,
    pub grid: Vec<NetworkGridPoint>,
}

/// Train one feed-forward net per architecture and keep the best
/// validation EER (scores are the output probabilities).
#[allow(clippy::too_many_arguments)]
pub fn select_dnn<R: Real>(
    train_x: &[Vec<R>],
    train_y: &[bool],
    validation_target: &[Vec<R>],
    validation_world: &[Vec<R>],
    grid: &[DnnArch],
    spec: &TrainSpecDnn,
    rng_seed: u64,
) -> Result<NetworkSelection<R>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty architecture grid".into()));
    }
    let mut val_x: Vec<Vec<R>> = validation_target.to_vec();
    let mut val_y = vec![true; validation_target.len()];
    val_x.extend(validation_world.iter().cloned());
    val_y.extend(vec![false; validation_world.len()]);

    let mut best: Option<(NetworkParams<R>, f64)> = None;
    let mut points = Vec::new();
    for (index, arch) in grid.iter().enumerate() {
        let trained = train_dnn(
            train_x,
            train_y,
            &val_x,
            &val_y,
            *arch,
            spec,
            rng_seed.wrapping_add(index as u64),
        )?;
        let score_all = |frames: &[Vec<R>]| {
            frames
                .iter()
                .map(|x| dnn_forward(x, &trained.params))
                .collect::<Result<Vec<R>>>()
        };
        let sf = ScoredFrames::from_pools(
            &score_all(validation_target)?,
            &score_all(validation_world)?,
        )?;
        let eer = eer_from_scores(&sf)?.eer_percent;
        points.push(NetworkGridPoint {
            layers: arch.layers,
            hidden: arch.hidden,
            activation: arch.activation,
            validation_eer: eer,
        });
        if best.as_ref().map_or(true, |(_, e)| eer < *e) {
            best = Some((trained.params, eer));
        }
    }
    let (params, validation_eer) = best.unwrap();
    Ok(NetworkSelection {
        params,
        validation_eer,
        grid: points,
    })
}

/// Train one recurrent net per architecture and keep the best validation
/// EER over per-frame scores.
pub fn select_rnn<R: Real>(
    train: &[(Vec<Vec<R>>, Vec<bool>)],
    validation: &[(Vec<Vec<R>>, Vec<bool>)],
    grid: &[RnnArch],
    spec: &TrainSpecRnn,
    rng_seed: u64,
) -> Result<NetworkSelection<R>> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty architecture grid".into()));
    }
    let mut best: Option<(NetworkParams<R>, f64)> = None;
    let mut points = Vec::new();
    for (index, arch) in grid.iter().enumerate() {
        let trained = train_rnn(train, validation, *arch, spec, rng_seed.wrapping_add(index as u64))?;
        let mut target_scores = Vec::new();
        let mut world_scores = Vec::new();
        for (seq, labels) in validation {
            let outputs = rnn_forward(seq, &trained.params)?;
            for (p, &y) in outputs.iter().zip(labels) {
                if y {
                    target_scores.push(*p);
                } else {
                    world_scores.push(*p);
                }
            }
        }
        let sf = ScoredFrames::from_pools(&target_scores, &world_scores)?;
        let eer = eer_from_scores(&sf)?.eer_percent;
        points.push(NetworkGridPoint {
            layers: arch.layers,
            hidden: arch.hidden,
            activation: Activation::Tanh,
            validation_eer: eer,
        });
        if best.as_ref().map_or(true, |(_, e)| eer < *e) {
            best = Some((trained.params, eer));
        }
    }
    let (params, validation_eer) = best.unwrap();
    Ok(NetworkSelection {
        params,
        validation_eer,
        grid: points,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn blobs(rng: &mut ChaCha8Rng, n: usize, offset: f64) -> Vec<Vec<f64>> {
        (0..n)
            .map(|_| {
                vec![
                    offset + rng.gen_range(-0.6..0.6),
                    offset + rng.gen_range(-0.6..0.6),
                ]
            })
            .collect()
    }

    #[test]
    fn default_grids_have_documented_shapes() {
        assert_eq!(default_dnn_grid().len(), 4 * 5 * 2);
        assert_eq!(default_rnn_grid().len(), 3 * 5);
    }

    #[test]
    fn singleton_grid_returns_that_architecture() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let target = blobs(&mut rng, 60, 1.0);
        let world = blobs(&mut rng, 60, -1.0);
        let mut train_x = target.clone();
        train_x.extend(world.iter().cloned());
        let mut train_y = vec![true; 60];
        train_y.extend(vec![false; 60]);
        let spec = TrainSpecDnn {
            max_epochs: 30,
            ..TrainSpecDnn::default()
        };
        let sel = select_dnn(
            &train_x,
            &train_y,
            &target[..20].to_vec(),
            &world[..20].to_vec(),
            &[DnnArch {
                layers: 1,
                hidden: 6,
                activation: Activation::Sigmoid,
            }],
            &spec,
            3,
        )
        .unwrap();
        assert_eq!(sel.grid.len(), 1);
        assert_eq!(sel.params.layers(), 1);
        assert_eq!(sel.params.hidden_width(), 6);
        assert!(sel.validation_eer < 10.0, "eer {}", sel.validation_eer);
    }

    #[test]
    fn winner_beats_grid_on_validation() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let target = blobs(&mut rng, 80, 1.0);
        let world = blobs(&mut rng, 80, -1.0);
        let mut train_x = target.clone();
        train_x.extend(world.iter().cloned());
        let mut train_y = vec![true; 80];
        train_y.extend(vec![false; 80]);
        let spec = TrainSpecDnn {
            max_epochs: 20,
            ..TrainSpecDnn::default()
        };
        let grid = [
            DnnArch {
                layers: 1,
                hidden: 4,
                activation: Activation::Sigmoid,
            },
            DnnArch {
                layers: 2,
                hidden: 8,
                activation: Activation::Relu,
            },
        ];
        let sel = select_dnn(
            &train_x,
            &train_y,
            &blobs(&mut rng, 30, 1.0),
            &blobs(&mut rng, 30, -1.0),
            &grid,
            &spec,
            9,
        )
        .unwrap();
        assert_eq!(sel.grid.len(), 2);
        for point in &sel.grid {
            assert!(sel.validation_eer <= point.validation_eer + 1e-12);
        }
    }
}
