//! Diagonal-covariance Gaussian mixture models.
//!
//! Scoring follows the likelihood-ratio scheme: a target mixture and a
//! universal background mixture are evaluated in the log domain and the
//! score is their difference. The full normalization constant is kept in
//! absolute log-likelihoods; it cancels in the ratio.

pub mod em;
pub mod select;

use serde::{Deserialize, Serialize};

use crate::costmodel::ops::{NullSink, OpSink};
use crate::error::{Error, Result};
use crate::real::Real;

pub use em::{em_fit, kmeanspp_init, EmFit, EmOptions};
pub use select::{default_m_grid, select_gmm, GmmGridPoint, GmmSelection};

/// Variances are floored here during training and validated against it
/// at construction.
pub const VARIANCE_FLOOR: f64 = 1e-6;

/// Weights, means and diagonal variances of an M-component mixture.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmParams<R> {
    weights: Vec<R>,
    means: Vec<Vec<R>>,
    variances: Vec<Vec<R>>,
}

impl<R: Real> GmmParams<R> {
    pub fn new(weights: Vec<R>, means: Vec<Vec<R>>, variances: Vec<Vec<R>>) -> Result<Self> {
        let m = weights.len();
        if m == 0 || means.len() != m || variances.len() != m {
            return Err(Error::InvalidParameter(
                "component counts of weights/means/variances disagree".into(),
            ));
        }
        let d = means[0].len();
        if d == 0 || means.iter().any(|v| v.len() != d) || variances.iter().any(|v| v.len() != d) {
            return Err(Error::InvalidParameter(
                "component dimensions disagree".into(),
            ));
        }
        let weight_sum: R = weights.iter().copied().sum();
        if (weight_sum - R::one()).abs() >= R::of(1e-9) {
            return Err(Error::InvalidParameter(format!(
                "weights must sum to 1, got {weight_sum}"
            )));
        }
        if weights.iter().any(|&w| w <= R::zero()) {
            return Err(Error::InvalidParameter("weights must be positive".into()));
        }
        let floor = R::of(VARIANCE_FLOOR) * R::of(0.999_999);
        if variances.iter().flatten().any(|&v| v < floor) {
            return Err(Error::InvalidParameter(format!(
                "variances must stay at or above the floor {VARIANCE_FLOOR}"
            )));
        }
        if means.iter().flatten().any(|v| !v.is_finite())
            || variances.iter().flatten().any(|v| !v.is_finite())
        {
            return Err(Error::NonFinite("mixture parameters".into()));
        }
        Ok(Self {
            weights,
            means,
            variances,
        })
    }

    pub fn components(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn weights(&self) -> &[R] {
        &self.weights
    }

    pub fn means(&self) -> &[Vec<R>] {
        &self.means
    }

    pub fn variances(&self) -> &[Vec<R>] {
        &self.variances
    }

    /// Precompute the log-domain scoring form.
    pub fn prepared(&self) -> PreparedGmm<R> {
        let d = self.dim();
        let half = R::of(0.5);
        let log_two_pi_term = R::of_usize(d).neg() * half * (R::of(2.0) * R::PI()).ln();
        let log_norm = self
            .weights
            .iter()
            .zip(&self.variances)
            .map(|(&w, var)| {
                let log_det: R = var.iter().map(|&v| v.ln()).sum();
                w.ln() + log_two_pi_term - half * log_det
            })
            .collect();
        let neg_half_inv_var = self
            .variances
            .iter()
            .map(|var| var.iter().map(|&v| -half / v).collect())
            .collect();
        PreparedGmm {
            means: self.means.clone(),
            neg_half_inv_var,
            log_norm,
        }
    }
}

/// Scoring form of a mixture: per-component log normalizers (weight and
/// determinant folded together) plus pre-inverted, half-scaled variances.
#[derive(Debug, Clone)]
pub struct PreparedGmm<R> {
    means: Vec<Vec<R>>,
    neg_half_inv_var: Vec<Vec<R>>,
    log_norm: Vec<R>,
}

impl<R: Real> PreparedGmm<R> {
    pub fn components(&self) -> usize {
        self.log_norm.len()
    }

    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn log_likelihood(&self, x: &[R]) -> R {
        self.log_likelihood_sunk(x, &mut NullSink)
    }

    /// Log-likelihood with operation events reported to `sink`.
    ///
    /// Booking per component: one addition per dimension for the mean
    /// subtraction, two multiplications per dimension for the squared and
    /// variance-scaled term (the accumulation rides the second multiply),
    /// and one addition folding in the log normalizer. The log-domain
    /// cumulation books one addition per component; its max-selections go
    /// to the comparison channel.
    pub fn log_likelihood_sunk<S: OpSink>(&self, x: &[R], sink: &mut S) -> R {
        debug_assert_eq!(x.len(), self.dim());
        let m = self.components();
        let mut acc = R::nan();
        for i in 0..m {
            let mean = &self.means[i];
            let scale = &self.neg_half_inv_var[i];
            let mut quad = R::zero();
            for d in 0..x.len() {
                let diff = x[d] - mean[d];
                sink.addition(1);
                let sq = diff * diff;
                sink.multiplication(1);
                quad = quad + sq * scale[d];
                sink.multiplication(1);
            }
            let z = quad + self.log_norm[i];
            sink.addition(1);
            acc = if i == 0 {
                z
            } else {
                sink.comparison(1);
                logsum(acc, z)
            };
        }
        sink.addition(m as u64);
        acc
    }
}

/// Target and background mixtures scored as a likelihood ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct GmmScorerPair<R> {
    pub target: GmmParams<R>,
    pub ubm: GmmParams<R>,
}

impl<R: Real> GmmScorerPair<R> {
    pub fn new(target: GmmParams<R>, ubm: GmmParams<R>) -> Result<Self> {
        if target.dim() != ubm.dim() {
            return Err(Error::DimensionMismatch {
                expected: target.dim(),
                actual: ubm.dim(),
            });
        }
        Ok(Self { target, ubm })
    }

    pub fn prepared(&self) -> PreparedPair<R> {
        PreparedPair {
            target: self.target.prepared(),
            ubm: self.ubm.prepared(),
        }
    }
}

/// Prepared form of the pair; what batch scoring uses.
#[derive(Debug, Clone)]
pub struct PreparedPair<R> {
    pub target: PreparedGmm<R>,
    pub ubm: PreparedGmm<R>,
}

impl<R: Real> PreparedPair<R> {
    pub fn dim(&self) -> usize {
        self.target.dim()
    }

    pub fn score(&self, x: &[R]) -> R {
        self.score_sunk(x, &mut NullSink)
    }

    /// Likelihood-ratio score with operation events reported to `sink`.
    ///
    /// The log-domain cumulation's table lookups are booked once per
    /// target component for the whole pair, matching the cost table's
    /// single-column convention; the final subtraction is not booked.
    pub fn score_sunk<S: OpSink>(&self, x: &[R], sink: &mut S) -> R {
        let t = self.target.log_likelihood_sunk(x, sink);
        let u = self.ubm.log_likelihood_sunk(x, sink);
        sink.lut(self.target.components() as u64);
        t - u
    }
}

/// Log-density of a diagonal Gaussian at `x`.
pub fn log_gaussian<R: Real>(x: &[R], mean: &[R], variance: &[R]) -> Result<R> {
    if x.len() != mean.len() || x.len() != variance.len() {
        return Err(Error::DimensionMismatch {
            expected: mean.len(),
            actual: x.len(),
        });
    }
    if variance.iter().any(|&v| v <= R::zero()) {
        return Err(Error::InvalidParameter(
            "variance must be positive".into(),
        ));
    }
    let half = R::of(0.5);
    let d = R::of_usize(x.len());
    let mut log_det = R::zero();
    let mut quad = R::zero();
    for i in 0..x.len() {
        log_det += variance[i].ln();
        let diff = x[i] - mean[i];
        quad += diff * diff / variance[i];
    }
    Ok(-d * half * (R::of(2.0) * R::PI()).ln() - half * log_det - half * quad)
}

/// Numerically stable log(e^a + e^b): max + log1p(exp(min - max)).
pub fn logsum<R: Real>(a: R, b: R) -> R {
    if a == R::neg_infinity() {
        return b;
    }
    if b == R::neg_infinity() {
        return a;
    }
    let (hi, lo) = if a >= b { (a, b) } else { (b, a) };
    hi + (lo - hi).exp().ln_1p()
}

/// Left-to-right fold of [`logsum`] over a list.
pub fn logsum_all<R: Real>(values: &[R]) -> R {
    values
        .iter()
        .copied()
        .fold(R::neg_infinity(), |acc, v| logsum(acc, v))
}

/// Mixture log-likelihood of one frame (full constant retained).
pub fn gmm_log_likelihood<R: Real>(x: &[R], params: &GmmParams<R>) -> Result<R> {
    if x.len() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            actual: x.len(),
        });
    }
    Ok(params.prepared().log_likelihood(x))
}

/// Log-likelihood ratio of target over background.
pub fn llr_score<R: Real>(x: &[R], pair: &GmmScorerPair<R>) -> Result<R> {
    if x.len() != pair.target.dim() {
        return Err(Error::DimensionMismatch {
            expected: pair.target.dim(),
            actual: x.len(),
        });
    }
    Ok(pair.prepared().score(x))
}

/// Serialized form of [`GmmParams`]; numbers are stored as f64.
#[derive(Debug, Serialize, Deserialize)]
pub struct GmmParamsFile {
    pub format_version: u32,
    pub kind: String,
    pub components: usize,
    pub dim: usize,
    pub weights: Vec<f64>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
}

/// Current mixture file format version.
pub const GMM_FORMAT_VERSION: u32 = 1;

impl<R: Real> GmmParams<R> {
    pub fn to_file(&self) -> GmmParamsFile {
        GmmParamsFile {
            format_version: GMM_FORMAT_VERSION,
            kind: "gmm".into(),
            components: self.components(),
            dim: self.dim(),
            weights: self.weights.iter().map(|w| w.as_f64()).collect(),
            means: self
                .means
                .iter()
                .map(|row| row.iter().map(|v| v.as_f64()).collect())
                .collect(),
            variances: self
                .variances
                .iter()
                .map(|row| row.iter().map(|v| v.as_f64()).collect())
                .collect(),
        }
    }

    pub fn from_file(file: &GmmParamsFile) -> Result<Self> {
        if file.format_version != GMM_FORMAT_VERSION {
            return Err(Error::Format(format!(
                "unsupported gmm format version {}",
                file.format_version
            )));
        }
        if file.kind != "gmm" {
            return Err(Error::Format(format!("expected kind \"gmm\", got {:?}", file.kind)));
        }
        let lift = |rows: &[Vec<f64>]| {
            rows.iter()
                .map(|row| row.iter().map(|&v| R::of(v)).collect())
                .collect()
        };
        let params = Self::new(
            file.weights.iter().map(|&w| R::of(w)).collect(),
            lift(&file.means),
            lift(&file.variances),
        )?;
        if params.components() != file.components || params.dim() != file.dim {
            return Err(Error::Format("gmm header does not match payload".into()));
        }
        Ok(params)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.to_file())?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Self::from_file(&serde_json::from_str(text)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_gmm(rng: &mut ChaCha8Rng, m: usize, d: usize) -> GmmParams<f64> {
        let mut weights: Vec<f64> = (0..m).map(|_| rng.gen_range(0.2..1.0)).collect();
        let total: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= total;
        }
        // renormalize exactly enough for the constructor's 1e-9 gate
        let correction: f64 = 1.0 - weights.iter().sum::<f64>();
        weights[0] += correction;
        let means = (0..m)
            .map(|_| (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let variances = (0..m)
            .map(|_| (0..d).map(|_| rng.gen_range(0.2..2.0)).collect())
            .collect();
        GmmParams::new(weights, means, variances).unwrap()
    }

    #[test]
    fn log_gaussian_standard_normal() {
        let v = log_gaussian(&[0.0f64], &[0.0], &[1.0]).unwrap();
        assert!((v + 0.9189385332046727).abs() < 1e-12);
        let v1 = log_gaussian(&[1.0f64], &[0.0], &[1.0]).unwrap();
        assert!((v1 + 1.4189385332046727).abs() < 1e-12);
    }

    #[test]
    fn log_gaussian_matches_probability_domain() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let d = 3;
            let x: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.5..1.5)).collect();
            let mean: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let var: Vec<f64> = (0..d).map(|_| rng.gen_range(0.3..2.0)).collect();
            // exponent-domain oracle at safe magnitudes
            let mut density = 1.0;
            for i in 0..d {
                let diff: f64 = x[i] - mean[i];
                density *= (-(diff * diff) / (2.0 * var[i])).exp()
                    / (2.0 * std::f64::consts::PI * var[i]).sqrt();
            }
            let got = log_gaussian(&x, &mean, &var).unwrap();
            assert!((got - density.ln()).abs() < 1e-10);
        }
    }

    #[test]
    fn log_gaussian_rejects_bad_variance() {
        assert!(log_gaussian(&[0.0], &[0.0], &[0.0]).is_err());
        assert!(log_gaussian(&[0.0], &[0.0], &[-1.0]).is_err());
    }

    #[test]
    fn logsum_basics() {
        assert!((logsum(0.0, 0.0) - 2.0f64.ln()).abs() < 1e-12);
        assert_eq!(logsum(3.5, f64::NEG_INFINITY), 3.5);
        assert_eq!(logsum(f64::NEG_INFINITY, -1.0), -1.0);
        assert_eq!(
            logsum(f64::NEG_INFINITY, f64::NEG_INFINITY),
            f64::NEG_INFINITY
        );
        let vals: Vec<f64> = (1..=5).map(|k| (k as f64).ln()).collect();
        assert!((logsum_all(&vals) - 15.0f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn logsum_properties() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        for _ in 0..200 {
            let a: f64 = rng.gen_range(-30.0..30.0);
            let b: f64 = rng.gen_range(-30.0..30.0);
            let c: f64 = rng.gen_range(-30.0..30.0);
            assert!(logsum(a, b) >= a.max(b));
            assert!((logsum(a, b) - logsum(b, a)).abs() < 1e-9);
            assert!((logsum(logsum(a, b), c) - logsum(a, logsum(b, c))).abs() < 1e-9);
        }
    }

    #[test]
    fn single_component_equals_log_gaussian() {
        let params = GmmParams::new(vec![1.0], vec![vec![0.3, -0.2]], vec![vec![1.2, 0.7]]).unwrap();
        let x = [0.1f64, 0.4];
        let ll = gmm_log_likelihood(&x, &params).unwrap();
        let lg = log_gaussian(&x, &params.means()[0], &params.variances()[0]).unwrap();
        assert!((ll - lg).abs() < 1e-12);
    }

    #[test]
    fn identical_components_collapse() {
        let mean = vec![0.5, -1.0];
        let var = vec![0.8, 1.1];
        let params = GmmParams::new(
            vec![0.5, 0.5],
            vec![mean.clone(), mean.clone()],
            vec![var.clone(), var.clone()],
        )
        .unwrap();
        let x = [0.2f64, 0.2];
        let ll = gmm_log_likelihood(&x, &params).unwrap();
        let lg = log_gaussian(&x, &mean, &var).unwrap();
        assert!((ll - lg).abs() < 1e-12);
    }

    #[test]
    fn mixture_matches_probability_domain_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let params = random_gmm(&mut rng, 4, 2);
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let mut p = 0.0;
            for i in 0..4 {
                let mut density = params.weights()[i];
                for d in 0..2 {
                    let diff: f64 = x[d] - params.means()[i][d];
                    let var = params.variances()[i][d];
                    density *= (-(diff * diff) / (2.0 * var)).exp()
                        / (2.0 * std::f64::consts::PI * var).sqrt();
                }
                p += density;
            }
            let got = gmm_log_likelihood(&x, &params).unwrap();
            assert!((got - p.ln()).abs() < 1e-9, "{got} vs {}", p.ln());
        }
    }

    #[test]
    fn likelihood_invariant_under_component_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let params = random_gmm(&mut rng, 5, 3);
        let permuted = GmmParams::new(
            vec![
                params.weights()[2],
                params.weights()[0],
                params.weights()[4],
                params.weights()[1],
                params.weights()[3],
            ],
            vec![
                params.means()[2].clone(),
                params.means()[0].clone(),
                params.means()[4].clone(),
                params.means()[1].clone(),
                params.means()[3].clone(),
            ],
            vec![
                params.variances()[2].clone(),
                params.variances()[0].clone(),
                params.variances()[4].clone(),
                params.variances()[1].clone(),
                params.variances()[3].clone(),
            ],
        )
        .unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let a = gmm_log_likelihood(&x, &params).unwrap();
            let b = gmm_log_likelihood(&x, &permuted).unwrap();
            assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn llr_zero_for_identical_pair_and_antisymmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_gmm(&mut rng, 3, 2);
        let b = random_gmm(&mut rng, 2, 2);
        let same = GmmScorerPair::new(a.clone(), a.clone()).unwrap();
        let fwd = GmmScorerPair::new(a.clone(), b.clone()).unwrap();
        let rev = GmmScorerPair::new(b.clone(), a.clone()).unwrap();
        for _ in 0..20 {
            let x: Vec<f64> = (0..2).map(|_| rng.gen_range(-2.0..2.0)).collect();
            assert_eq!(llr_score(&x, &same).unwrap(), 0.0);
            let f = llr_score(&x, &fwd).unwrap();
            let r = llr_score(&x, &rev).unwrap();
            assert!((f + r).abs() < 1e-12);
            // compositional oracle
            let direct = gmm_log_likelihood(&x, &a).unwrap() - gmm_log_likelihood(&x, &b).unwrap();
            assert!((f - direct).abs() < 1e-12);
        }
    }

    #[test]
    fn llr_positive_at_target_mean() {
        let target =
            GmmParams::new(vec![1.0], vec![vec![3.0, 3.0]], vec![vec![0.5, 0.5]]).unwrap();
        let ubm =
            GmmParams::new(vec![1.0], vec![vec![-3.0, -3.0]], vec![vec![0.5, 0.5]]).unwrap();
        let pair = GmmScorerPair::new(target, ubm).unwrap();
        assert!(llr_score(&[3.0, 3.0], &pair).unwrap() > 0.0);
    }

    #[test]
    fn constant_cancels_in_score_ordering() {
        // scoring with the constant retained vs dropped gives the same order
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let pair = GmmScorerPair::new(random_gmm(&mut rng, 3, 4), random_gmm(&mut rng, 2, 4)).unwrap();
        let prepared = pair.prepared();
        let frames: Vec<Vec<f64>> = (0..40)
            .map(|_| (0..4).map(|_| rng.gen_range(-3.0..3.0)).collect())
            .collect();
        let with_k: Vec<f64> = frames.iter().map(|x| prepared.score(x)).collect();
        let constant = 4.0 / 2.0 * (2.0 * std::f64::consts::PI).ln();
        let without_k: Vec<f64> = frames
            .iter()
            .map(|x| {
                // drop the constant from both sides; the ratio is unchanged
                (prepared.target.log_likelihood(x) + constant)
                    - (prepared.ubm.log_likelihood(x) + constant)
            })
            .collect();
        let mut order_a: Vec<usize> = (0..frames.len()).collect();
        let mut order_b = order_a.clone();
        order_a.sort_by(|&i, &j| with_k[i].partial_cmp(&with_k[j]).unwrap());
        order_b.sort_by(|&i, &j| without_k[i].partial_cmp(&without_k[j]).unwrap());
        assert_eq!(order_a, order_b);
    }

    #[test]
    fn rejects_invalid_construction() {
        assert!(GmmParams::new(vec![0.6, 0.6], vec![vec![0.0]; 2], vec![vec![1.0]; 2]).is_err());
        assert!(GmmParams::new(vec![1.0], vec![vec![0.0]], vec![vec![1e-9]]).is_err());
        assert!(GmmParams::<f64>::new(vec![], vec![], vec![]).is_err());
        let pair = GmmScorerPair::new(
            GmmParams::new(vec![1.0], vec![vec![0.0]], vec![vec![1.0]]).unwrap(),
            GmmParams::new(vec![1.0], vec![vec![0.0, 0.0]], vec![vec![1.0, 1.0]]).unwrap(),
        );
        assert!(pair.is_err());
    }

    #[test]
    fn json_round_trip() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let params = random_gmm(&mut rng, 3, 2);
        let text = params.to_json().unwrap();
        assert!(text.contains("\"format_version\""));
        assert!(text.contains("\"kind\""));
        let back = GmmParams::<f64>::from_json(&text).unwrap();
        assert_eq!(params, back);
        // f32 can read the same document
        let narrow = GmmParams::<f32>::from_json(&text).unwrap();
        assert_eq!(narrow.components(), 3);
    }

    #[test]
    fn scoring_works_in_f32() {
        let params =
            GmmParams::<f32>::new(vec![1.0], vec![vec![0.0]], vec![vec![1.0]]).unwrap();
        let ll = gmm_log_likelihood(&[0.0f32], &params).unwrap();
        assert!((ll + 0.918_938_5f32).abs() < 1e-5);
    }
}
