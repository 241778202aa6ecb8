//! Pairwise (SMO-style) dual solver and training-set downsampling.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::real::Real;

use super::{kernel_eval, KernelSpec, SvmModel};

/// Solver knobs. The KKT tolerance doubles as the convergence criterion.
#[derive(Debug, Clone, Copy)]
pub struct SmoConfig {
    pub c: f64,
    pub tol: f64,
    pub max_passes: usize,
}

impl Default for SmoConfig {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-3,
            max_passes: 10_000,
        }
    }
}

impl SmoConfig {
    pub fn with_c(c: f64) -> Self {
        Self {
            c,
            ..Self::default()
        }
    }
}

/// Solver output: the scoring model plus the raw multipliers.
#[derive(Debug, Clone)]
pub struct TrainedSvm<R> {
    pub model: SvmModel<R>,
    /// One multiplier per training example (most are zero).
    pub alphas: Vec<f64>,
    pub bias: f64,
    /// False when the pass budget ran out with updates still pending.
    pub converged: bool,
    pub passes: usize,
}

/// Alphas above this are support vectors.
const SV_THRESHOLD: f64 = 1e-8;

/// Draw a balanced training set: exactly `t` target and `t` world frames,
/// sampled without replacement with a seeded generator. Labels are +1 for
/// target, -1 for world.
pub fn downsample_training<R: Real>(
    target_frames: &[Vec<R>],
    world_frames: &[Vec<R>],
    t: usize,
    rng_seed: u64,
) -> Result<(Vec<Vec<R>>, Vec<i8>)> {
    if t < 1 {
        return Err(Error::InvalidParameter("need at least one example per class".into()));
    }
    if target_frames.len() < t {
        return Err(Error::NotEnoughData {
            needed: t,
            available: target_frames.len(),
        });
    }
    if world_frames.len() < t {
        return Err(Error::NotEnoughData {
            needed: t,
            available: world_frames.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut pick = |pool: &[Vec<R>]| {
        let mut idx: Vec<usize> = (0..pool.len()).collect();
        idx.shuffle(&mut rng);
        idx.truncate(t);
        idx.into_iter().map(|i| pool[i].clone()).collect::<Vec<_>>()
    };
    let mut examples = pick(target_frames);
    examples.extend(pick(world_frames));
    let mut labels = vec![1i8; t];
    labels.extend(vec![-1i8; t]);
    Ok((examples, labels))
}

/// Train a soft-margin SVM with sequential minimal optimization.
///
/// Runs Platt-style pair updates with an error cache until no multiplier
/// moves, or the pass budget runs out (in which case the best-so-far model
/// is returned with `converged == false`).
pub fn smo_train<R: Real>(
    examples: &[Vec<R>],
    labels: &[i8],
    config: SmoConfig,
    kernel: KernelSpec<R>,
) -> Result<TrainedSvm<R>> {
    kernel.validate()?;
    let n = examples.len();
    if n == 0 || labels.len() != n {
        return Err(Error::InvalidParameter(
            "examples and labels must be non-empty and aligned".into(),
        ));
    }
    if labels.iter().any(|&y| y != 1 && y != -1) {
        return Err(Error::InvalidParameter("labels must be +1 or -1".into()));
    }
    if labels.iter().all(|&y| y == 1) || labels.iter().all(|&y| y == -1) {
        return Err(Error::SingleClass);
    }
    if config.c <= 0.0 {
        return Err(Error::InvalidParameter("penalty C must be positive".into()));
    }

    let mut solver = Solver::new(examples, labels, config, kernel);
    let converged = solver.run();
    solver.into_trained(converged)
}

struct Solver<'a, R: Real> {
    examples: &'a [Vec<R>],
    labels: Vec<f64>,
    config: SmoConfig,
    kernel: KernelSpec<R>,
    alphas: Vec<f64>,
    bias: f64,
    errors: Vec<f64>,
    cache: Option<Vec<f64>>, // dense kernel matrix for small problems
    passes: usize,
    rotation: usize,
}

/// Cache the kernel matrix up to this many examples (n^2 f64 entries).
const CACHE_LIMIT: usize = 1500;

impl<'a, R: Real> Solver<'a, R> {
    fn new(examples: &'a [Vec<R>], labels: &[i8], config: SmoConfig, kernel: KernelSpec<R>) -> Self {
        let n = examples.len();
        let cache = (n <= CACHE_LIMIT).then(|| {
            let mut k = vec![0.0f64; n * n];
            for i in 0..n {
                for j in i..n {
                    let v = kernel_eval(&kernel, &examples[i], &examples[j]).as_f64();
                    k[i * n + j] = v;
                    k[j * n + i] = v;
                }
            }
            k
        });
        Self {
            examples,
            labels: labels.iter().map(|&y| y as f64).collect(),
            config,
            kernel,
            alphas: vec![0.0; n],
            bias: 0.0,
            // f(x) starts at 0 for every point, so E_i = -y_i
            errors: labels.iter().map(|&y| -(y as f64)).collect(),
            cache: None,
            passes: 0,
            rotation: 0,
        }
        .with_cache(cache)
    }

    fn with_cache(mut self, cache: Option<Vec<f64>>) -> Self {
        self.cache = cache;
        self
    }

    fn k(&self, i: usize, j: usize) -> f64 {
        match &self.cache {
            Some(k) => k[i * self.examples.len() + j],
            None => kernel_eval(&self.kernel, &self.examples[i], &self.examples[j]).as_f64(),
        }
    }

    /// Returns true when the solver reached a KKT-stationary point within
    /// the pass budget: the loop only exits after a full sweep changes
    /// nothing.
    fn run(&mut self) -> bool {
        let n = self.examples.len();
        let mut examine_all = true;
        let mut changed = 1usize;
        while changed > 0 || examine_all {
            if self.passes >= self.config.max_passes {
                return false;
            }
            self.passes += 1;
            changed = 0;
            if examine_all {
                for i in 0..n {
                    changed += self.examine(i) as usize;
                }
            } else {
                for i in 0..n {
                    if self.is_unbound(i) {
                        changed += self.examine(i) as usize;
                    }
                }
            }
            if examine_all {
                examine_all = false;
            } else if changed == 0 {
                examine_all = true;
            }
        }
        true
    }

    fn is_unbound(&self, i: usize) -> bool {
        self.alphas[i] > SV_THRESHOLD && self.alphas[i] < self.config.c - SV_THRESHOLD
    }

    fn examine(&mut self, i2: usize) -> bool {
        let y2 = self.labels[i2];
        let alpha2 = self.alphas[i2];
        let e2 = self.errors[i2];
        let r2 = e2 * y2;
        let tol = self.config.tol;
        let c = self.config.c;
        let violates = (r2 < -tol && alpha2 < c) || (r2 > tol && alpha2 > 0.0);
        if !violates {
            return false;
        }
        let n = self.examples.len();

        // heuristic 1: maximize |E1 - E2| over unbound points
        let mut best: Option<(usize, f64)> = None;
        for i in 0..n {
            if i != i2 && self.is_unbound(i) {
                let gap = (self.errors[i] - e2).abs();
                if best.map_or(true, |(_, g)| gap > g) {
                    best = Some((i, gap));
                }
            }
        }
        if let Some((i1, _)) = best {
            if self.take_step(i1, i2) {
                return true;
            }
        }
        // heuristic 2: all unbound points, rotating start
        self.rotation = self.rotation.wrapping_add(1);
        let start = self.rotation % n;
        for off in 0..n {
            let i1 = (start + off) % n;
            if i1 != i2 && self.is_unbound(i1) && self.take_step(i1, i2) {
                return true;
            }
        }
        // heuristic 3: everything
        for off in 0..n {
            let i1 = (start + off) % n;
            if i1 != i2 && self.take_step(i1, i2) {
                return true;
            }
        }
        false
    }

    fn take_step(&mut self, i1: usize, i2: usize) -> bool {
        if i1 == i2 {
            return false;
        }
        let (y1, y2) = (self.labels[i1], self.labels[i2]);
        let (alpha1, alpha2) = (self.alphas[i1], self.alphas[i2]);
        let (e1, e2) = (self.errors[i1], self.errors[i2]);
        let s = y1 * y2;
        let c = self.config.c;

        let (low, high) = if s > 0.0 {
            let sum = alpha1 + alpha2;
            ((sum - c).max(0.0), sum.min(c))
        } else {
            let diff = alpha2 - alpha1;
            (diff.max(0.0), (c + diff).min(c))
        };
        if (high - low).abs() < 1e-12 {
            return false;
        }

        let k11 = self.k(i1, i1);
        let k12 = self.k(i1, i2);
        let k22 = self.k(i2, i2);
        let eta = k11 + k22 - 2.0 * k12;

        let mut a2 = if eta > 1e-12 {
            (alpha2 + y2 * (e1 - e2) / eta).clamp(low, high)
        } else {
            // flat direction: test both ends of the feasible segment
            // (the bias enters with a minus under the f = sum + b convention)
            let f1 = y1 * (e1 - self.bias) - alpha1 * k11 - s * alpha2 * k12;
            let f2 = y2 * (e2 - self.bias) - s * alpha1 * k12 - alpha2 * k22;
            let l1 = alpha1 + s * (alpha2 - low);
            let h1 = alpha1 + s * (alpha2 - high);
            let obj_low =
                l1 * f1 + low * f2 + 0.5 * l1 * l1 * k11 + 0.5 * low * low * k22 + s * low * l1 * k12;
            let obj_high = h1 * f1
                + high * f2
                + 0.5 * h1 * h1 * k11
                + 0.5 * high * high * k22
                + s * high * h1 * k12;
            if obj_low < obj_high - 1e-12 {
                low
            } else if obj_high < obj_low - 1e-12 {
                high
            } else {
                return false;
            }
        };
        if a2 < SV_THRESHOLD {
            a2 = 0.0;
        } else if a2 > c - SV_THRESHOLD {
            a2 = c;
        }
        if (a2 - alpha2).abs() < 1e-12 * (a2 + alpha2 + 1e-12) {
            return false;
        }
        let a1 = alpha1 + s * (alpha2 - a2);

        let d1 = y1 * (a1 - alpha1);
        let d2 = y2 * (a2 - alpha2);
        let b1 = self.bias - e1 - d1 * k11 - d2 * k12;
        let b2 = self.bias - e2 - d1 * k12 - d2 * k22;
        let unbound1 = a1 > SV_THRESHOLD && a1 < c - SV_THRESHOLD;
        let unbound2 = a2 > SV_THRESHOLD && a2 < c - SV_THRESHOLD;
        let new_bias = if unbound1 {
            b1
        } else if unbound2 {
            b2
        } else {
            (b1 + b2) / 2.0
        };
        let delta_bias = new_bias - self.bias;

        self.alphas[i1] = a1;
        self.alphas[i2] = a2;
        self.bias = new_bias;
        for i in 0..self.examples.len() {
            self.errors[i] += d1 * self.k(i1, i) + d2 * self.k(i2, i) + delta_bias;
        }
        true
    }

    fn into_trained(mut self, converged: bool) -> Result<TrainedSvm<R>> {
        self.recenter_bias();
        let mut support_vectors = Vec::new();
        let mut coeffs = Vec::new();
        for (i, &alpha) in self.alphas.iter().enumerate() {
            if alpha > SV_THRESHOLD {
                support_vectors.push(self.examples[i].clone());
                // float dust can leave alpha a hair outside the box; the
                // stored multiplier respects |coeff| <= C
                coeffs.push(R::of(self.labels[i] * alpha.clamp(0.0, self.config.c)));
            }
        }
        if support_vectors.is_empty() {
            // a degenerate but valid stationary point; keep the contract of
            // at least one support vector by storing a zero-coefficient one
            support_vectors.push(self.examples[0].clone());
            coeffs.push(R::zero());
        }
        let model = SvmModel::new(support_vectors, coeffs, R::of(self.bias), self.kernel)?;
        Ok(TrainedSvm {
            model,
            alphas: self.alphas,
            bias: self.bias,
            converged,
            passes: self.passes,
        })
    }
}

impl<'a, R: Real> Solver<'a, R> {
    /// Pair updates fix the bias for the pair at hand, which can leave it
    /// anywhere in the interval the full constraint set allows (wide on
    /// degenerate data). Center it: every point bounds the bias through
    /// its margin requirement, using `g = E + y - b` from the error cache.
    fn recenter_bias(&mut self) {
        let c = self.config.c;
        let mut lower = f64::NEG_INFINITY;
        let mut upper = f64::INFINITY;
        for i in 0..self.examples.len() {
            let y = self.labels[i];
            let g = self.errors[i] + y - self.bias;
            let exact = y - g; // bias putting this point exactly on the margin
            let alpha = self.alphas[i];
            let at_zero = alpha <= SV_THRESHOLD;
            let at_c = alpha >= c - SV_THRESHOLD;
            if at_zero {
                if y > 0.0 {
                    lower = lower.max(exact);
                } else {
                    upper = upper.min(exact);
                }
            } else if at_c {
                if y > 0.0 {
                    upper = upper.min(exact);
                } else {
                    lower = lower.max(exact);
                }
            } else {
                lower = lower.max(exact);
                upper = upper.min(exact);
            }
        }
        self.bias = match (lower.is_finite(), upper.is_finite()) {
            (true, true) => (lower + upper) / 2.0,
            (true, false) => lower,
            (false, true) => upper,
            (false, false) => self.bias,
        };
    }
}

/// Largest KKT violation of a multiplier assignment, for verification.
///
/// For each example with decision value `f`: alpha at zero requires
/// `y f >= 1`, an unbound alpha requires `y f == 1`, and alpha at C
/// requires `y f <= 1`; the violation is how far the requirement is
/// missed.
pub fn kkt_max_violation<R: Real>(
    examples: &[Vec<R>],
    labels: &[i8],
    trained: &TrainedSvm<R>,
    c: f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    for (i, x) in examples.iter().enumerate() {
        let f = super::svm_score(x, &trained.model).unwrap().as_f64();
        let margin = labels[i] as f64 * f;
        let alpha = trained.alphas[i];
        let violation = if alpha <= SV_THRESHOLD {
            (1.0 - margin).max(0.0)
        } else if alpha >= c - SV_THRESHOLD {
            (margin - 1.0).max(0.0)
        } else {
            (margin - 1.0).abs()
        };
        worst = worst.max(violation);
    }
    worst
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::svm::svm_score;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn two_point_problem() -> (Vec<Vec<f64>>, Vec<i8>) {
        (vec![vec![-1.0], vec![1.0]], vec![-1, 1])
    }

    #[test]
    fn two_point_analytic_solution() {
        let (x, y) = two_point_problem();
        let trained = smo_train(&x, &y, SmoConfig::with_c(1000.0), KernelSpec::Linear).unwrap();
        assert!(trained.converged);
        // max margin solution: w = 1, b = 0, both alphas 0.5
        assert!((trained.bias).abs() < 1e-3);
        assert!((trained.alphas[0] - 0.5).abs() < 1e-3);
        assert!((trained.alphas[1] - 0.5).abs() < 1e-3);
        for probe in [-2.0, -0.5, 0.25, 1.5] {
            let s = svm_score(&[probe], &trained.model).unwrap();
            assert!((s - probe).abs() < 1e-3, "score({probe}) = {s}");
        }
    }

    #[test]
    fn flipped_labels_negate_scores() {
        let (x, y) = two_point_problem();
        let flipped: Vec<i8> = y.iter().map(|l| -l).collect();
        let a = smo_train(&x, &y, SmoConfig::with_c(1000.0), KernelSpec::Linear).unwrap();
        let b = smo_train(&x, &flipped, SmoConfig::with_c(1000.0), KernelSpec::Linear).unwrap();
        for probe in [-1.5, 0.3, 0.9] {
            let sa = svm_score(&[probe], &a.model).unwrap();
            let sb = svm_score(&[probe], &b.model).unwrap();
            assert!((sa + sb).abs() < 1e-6);
        }
    }

    fn random_separable(
        rng: &mut ChaCha8Rng,
        n_per_class: usize,
        gap: f64,
    ) -> (Vec<Vec<f64>>, Vec<i8>) {
        let mut x = Vec::new();
        let mut y = Vec::new();
        for _ in 0..n_per_class {
            x.push(vec![
                rng.gen_range(-1.0..1.0) + gap,
                rng.gen_range(-1.0..1.0) + gap,
            ]);
            y.push(1);
            x.push(vec![
                rng.gen_range(-1.0..1.0) - gap,
                rng.gen_range(-1.0..1.0) - gap,
            ]);
            y.push(-1);
        }
        (x, y)
    }

    /// Geometric margin of the trained linear model.
    fn geometric_margin(x: &[Vec<f64>], y: &[i8], trained: &TrainedSvm<f64>) -> f64 {
        // w from the support expansion
        let dim = x[0].len();
        let mut w = vec![0.0; dim];
        for (sv, c) in trained
            .model
            .support_vectors()
            .iter()
            .zip(trained.model.coeffs())
        {
            for d in 0..dim {
                w[d] += c * sv[d];
            }
        }
        let norm = w.iter().map(|v| v * v).sum::<f64>().sqrt();
        x.iter()
            .zip(y)
            .map(|(p, &l)| l as f64 * svm_score(p, &trained.model).unwrap() / norm)
            .fold(f64::INFINITY, f64::min)
    }

    /// Best margin over a dense grid of hyperplane directions.
    fn grid_oracle_margin(x: &[Vec<f64>], y: &[i8]) -> f64 {
        let mut best = f64::NEG_INFINITY;
        for step in 0..720 {
            let theta = step as f64 * std::f64::consts::PI / 720.0;
            let (c, s) = (theta.cos(), theta.sin());
            let mut min_pos = f64::INFINITY;
            let mut max_pos = f64::NEG_INFINITY;
            let mut min_neg = f64::INFINITY;
            let mut max_neg = f64::NEG_INFINITY;
            for (p, &l) in x.iter().zip(y) {
                let proj = c * p[0] + s * p[1];
                if l == 1 {
                    min_pos = min_pos.min(proj);
                    max_pos = max_pos.max(proj);
                } else {
                    min_neg = min_neg.min(proj);
                    max_neg = max_neg.max(proj);
                }
            }
            // both orientations of the normal
            best = best.max((min_pos - max_neg) / 2.0);
            best = best.max((min_neg - max_pos) / 2.0);
        }
        best
    }

    #[test]
    fn separable_data_trains_clean_with_max_margin() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let (x, y) = random_separable(&mut rng, 8, 2.0);
        let trained = smo_train(&x, &y, SmoConfig::with_c(1e4), KernelSpec::Linear).unwrap();
        // zero training errors
        for (p, &l) in x.iter().zip(&y) {
            let s = svm_score(p, &trained.model).unwrap();
            assert!(s * l as f64 > 0.0, "misclassified {p:?}");
        }
        let margin = geometric_margin(&x, &y, &trained);
        let oracle = grid_oracle_margin(&x, &y);
        assert!(
            margin >= oracle - 5e-3,
            "margin {margin} below grid oracle {oracle}"
        );
    }

    #[test]
    fn kkt_satisfied_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for round in 0..10 {
            let n = rng.gen_range(6usize..25);
            let dim = rng.gen_range(1usize..4);
            let x: Vec<Vec<f64>> = (0..n)
                .map(|_| (0..dim).map(|_| rng.gen_range(-2.0..2.0)).collect())
                .collect();
            let y: Vec<i8> = (0..n)
                .map(|i| if i == 0 { 1 } else if i == 1 { -1 } else if rng.gen_bool(0.5) { 1 } else { -1 })
                .collect();
            let c = [0.1, 1.0, 10.0][round % 3];
            let trained = smo_train(&x, &y, SmoConfig::with_c(c), KernelSpec::Linear).unwrap();
            let violation = kkt_max_violation(&x, &y, &trained, c);
            assert!(violation <= 2e-3, "round {round}: violation {violation}");
            // dual constraint: sum alpha_i y_i = 0
            let balance: f64 = trained
                .alphas
                .iter()
                .zip(&y)
                .map(|(a, &l)| a * l as f64)
                .sum();
            assert!(balance.abs() < 1e-6);
            // multipliers stay in the box (raw values keep the exact
            // dual balance, so allow float dust at the edges)
            assert!(trained.alphas.iter().all(|&a| (-1e-7..=c + 1e-7).contains(&a)));
            for coeff in trained.model.coeffs() {
                assert!(coeff.abs() <= c + 1e-12);
            }
        }
    }

    #[test]
    fn duplicated_training_set_keeps_decision_function() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (x, y) = random_separable(&mut rng, 6, 1.2);
        let a = smo_train(&x, &y, SmoConfig::with_c(1.0), KernelSpec::Linear).unwrap();
        let mut x2 = x.clone();
        x2.extend(x.iter().cloned());
        let mut y2 = y.clone();
        y2.extend(y.iter().copied());
        let b = smo_train(&x2, &y2, SmoConfig::with_c(1.0), KernelSpec::Linear).unwrap();
        for _ in 0..30 {
            let p: Vec<f64> = (0..2).map(|_| rng.gen_range(-3.0..3.0)).collect();
            let sa = svm_score(&p, &a.model).unwrap();
            let sb = svm_score(&p, &b.model).unwrap();
            assert!((sa - sb).abs() < 5e-3, "{sa} vs {sb}");
        }
    }

    #[test]
    fn support_vector_count_bounded_by_training_size() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let (x, y) = random_separable(&mut rng, 10, 0.2);
        let trained = smo_train(&x, &y, SmoConfig::with_c(1.0), KernelSpec::Rbf { gamma: 0.05 })
            .unwrap();
        assert!(trained.model.num_support_vectors() <= x.len());
    }

    #[test]
    fn exhausted_pass_budget_returns_best_so_far_with_flag() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (x, y) = random_separable(&mut rng, 10, 0.3);
        let trained = smo_train(
            &x,
            &y,
            SmoConfig {
                c: 1.0,
                tol: 1e-3,
                max_passes: 1,
            },
            KernelSpec::Linear,
        )
        .unwrap();
        assert!(!trained.converged);
        assert_eq!(trained.passes, 1);
        // the partial model still scores
        assert!(svm_score(&x[0], &trained.model).unwrap().is_finite());
    }

    #[test]
    fn single_class_is_rejected() {
        let x = vec![vec![0.0], vec![1.0]];
        assert!(matches!(
            smo_train(&x, &[1, 1], SmoConfig::default(), KernelSpec::Linear),
            Err(Error::SingleClass)
        ));
    }

    #[test]
    fn downsample_is_balanced_and_seeded() {
        let target: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        let world: Vec<Vec<f64>> = (0..80).map(|i| vec![-(i as f64)]).collect();
        let (ex, labels) = downsample_training(&target, &world, 20, 99).unwrap();
        assert_eq!(ex.len(), 40);
        assert_eq!(labels.iter().filter(|&&l| l == 1).count(), 20);
        assert_eq!(labels.iter().filter(|&&l| l == -1).count(), 20);
        // no replacement
        let mut firsts: Vec<f64> = ex.iter().map(|e| e[0]).collect();
        firsts.sort_by(|a, b| a.partial_cmp(b).unwrap());
        firsts.dedup();
        assert_eq!(firsts.len(), 40);
        // determinism
        let again = downsample_training(&target, &world, 20, 99).unwrap();
        assert_eq!(ex, again.0);
        // whole pools when t matches the pool size
        let (all, _) = downsample_training(&target, &world, 50, 1).unwrap();
        let mut got: Vec<f64> = all[..50].iter().map(|e| e[0]).collect();
        got.sort_by(|a, b| a.partial_cmp(b).unwrap());
        assert_eq!(got, (0..50).map(|i| i as f64).collect::<Vec<_>>());
        // too small pools error
        assert!(downsample_training(&target, &world, 51, 1).is_err());
    }
}

