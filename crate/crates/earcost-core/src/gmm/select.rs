//! Component-count selection against a validation split.

use crate::error::{Error, Result};
use crate::eval::{eer_from_scores, ScoredFrames};
use crate::real::Real;

use super::{em_fit, EmFit, EmOptions, GmmParams, GmmScorerPair};

/// Powers of two from 1 to 1024.
pub fn default_m_grid() -> Vec<usize> {
    (0..=10).map(|k| 1usize << k).collect()
}

/// One evaluated grid cell.
#[derive(Debug, Clone)]
pub struct GmmGridPoint {
    pub components: usize,
    pub validation_eer: f64,
}

/// Winning mixture plus the whole grid it beat.
#[derive(Debug, Clone)]
pub struct GmmSelection<R> {
    pub params: GmmParams<R>,
    pub validation_eer: f64,
    pub grid: Vec<GmmGridPoint>,
}

/// Fit one target mixture per feasible grid size and keep the one whose
/// likelihood-ratio scores against `ubm` give the lowest validation EER.
/// Grid sizes larger than the training set are skipped.
pub fn select_gmm<R: Real>(
    target_train: &[Vec<R>],
    ubm: &GmmParams<R>,
    validation_target: &[Vec<R>],
    validation_world: &[Vec<R>],
    m_grid: &[usize],
    rng_seed: u64,
    opts: EmOptions,
) -> Result<GmmSelection<R>> {
    if m_grid.is_empty() {
        return Err(Error::InvalidParameter("empty component grid".into()));
    }
    let mut best: Option<(GmmParams<R>, f64)> = None;
    let mut grid = Vec::new();
    for (index, &m) in m_grid.iter().enumerate() {
        if m == 0 || m > target_train.len() {
            continue;
        }
        let EmFit { params, .. } = em_fit(
            target_train,
            m,
            rng_seed.wrapping_add(index as u64),
            opts,
        )?;
        let pair = GmmScorerPair::new(params.clone(), ubm.clone())?;
        let prepared = pair.prepared();
        let score_all =
            |frames: &[Vec<R>]| frames.iter().map(|x| prepared.score(x)).collect::<Vec<R>>();
        let sf = ScoredFrames::from_pools(
            &score_all(validation_target),
            &score_all(validation_world),
        )?;
        let eer = eer_from_scores(&sf)?.eer_percent;
        grid.push(GmmGridPoint {
            components: m,
            validation_eer: eer,
        });
        if best.as_ref().map_or(true, |(_, e)| eer < *e) {
            best = Some((params, eer));
        }
    }
    let (params, validation_eer) = best.ok_or(Error::NotEnoughData {
        needed: m_grid.iter().copied().min().unwrap_or(1),
        available: target_train.len(),
    })?;
    Ok(GmmSelection {
        params,
        validation_eer,
        grid,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cluster_data(rng: &mut ChaCha8Rng, centers: &[[f64; 2]], per_center: usize) -> Vec<Vec<f64>> {
        let mut out = Vec::new();
        for c in centers {
            for _ in 0..per_center {
                out.push(vec![
                    c[0] + rng.gen_range(-0.3..0.3),
                    c[1] + rng.gen_range(-0.3..0.3),
                ]);
            }
        }
        out
    }

    #[test]
    fn default_grid_is_powers_of_two() {
        let grid = default_m_grid();
        assert_eq!(grid.first(), Some(&1));
        assert_eq!(grid.last(), Some(&1024));
        assert_eq!(grid.len(), 11);
    }

    #[test]
    fn singleton_grid_returns_that_model() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let train = cluster_data(&mut rng, &[[0.0, 0.0]], 30);
        let world = cluster_data(&mut rng, &[[4.0, 4.0]], 30);
        let ubm = em_fit(&world, 1, 0, EmOptions::default()).unwrap().params;
        let sel = select_gmm(
            &train,
            &ubm,
            &train[..10].to_vec(),
            &world[..10].to_vec(),
            &[2],
            7,
            EmOptions::default(),
        )
        .unwrap();
        assert_eq!(sel.params.components(), 2);
        assert_eq!(sel.grid.len(), 1);
    }

    #[test]
    fn selection_beats_every_other_grid_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let centers = [[-3.0, 0.0], [0.0, 3.0], [3.0, 0.0], [0.0, -3.0]];
        let train = cluster_data(&mut rng, &centers, 40);
        let val_target = cluster_data(&mut rng, &centers, 10);
        let world = cluster_data(&mut rng, &[[8.0, 8.0], [-8.0, 8.0]], 40);
        let val_world = cluster_data(&mut rng, &[[8.0, 8.0], [-8.0, 8.0]], 20);
        let ubm = em_fit(&world, 2, 3, EmOptions::default()).unwrap().params;
        let sel = select_gmm(
            &train,
            &ubm,
            &val_target,
            &val_world,
            &[1, 2, 4, 8],
            11,
            EmOptions::default(),
        )
        .unwrap();
        for point in &sel.grid {
            assert!(
                sel.validation_eer <= point.validation_eer + 1e-12,
                "M={} beat the winner",
                point.components
            );
        }
    }

    #[test]
    fn infeasible_sizes_are_skipped() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let train = cluster_data(&mut rng, &[[0.0, 0.0]], 3); // only 3 points
        let world = cluster_data(&mut rng, &[[5.0, 5.0]], 20);
        let ubm = em_fit(&world, 1, 0, EmOptions::default()).unwrap().params;
        let sel = select_gmm(
            &train,
            &ubm,
            &train.clone(),
            &world[..5].to_vec(),
            &[1, 64, 1024],
            0,
            EmOptions::default(),
        )
        .unwrap();
        assert_eq!(sel.params.components(), 1);
        assert_eq!(sel.grid.len(), 1);
    }
}
