//! Per-block PCA and discretization of principal components and effects.

use nalgebra::{SMatrix, SVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::shape::FEATURE_COUNT;

pub type FeatureVector = [f64; FEATURE_COUNT];

/// Principal components kept per block.
pub const PCA_COMPONENTS: usize = 2;

/// Number of effect bins per axis.
pub const EFFECT_BINS: usize = 5;

/// Relative eigenvalue floor below which a direction counts as having no
/// variance.
const RANK_TOLERANCE: f64 = 1e-12;

/// A fitted two-component PCA projection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaBlock {
    pub mean: FeatureVector,
    /// Orthonormal rows, each with its largest-magnitude entry positive.
    pub components: [FeatureVector; PCA_COMPONENTS],
    /// Sample-covariance eigenvalues of the kept components, non-increasing.
    pub explained_variance: [f64; PCA_COMPONENTS],
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is
/// positive.
pub fn normalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for i in 1..v.len() {
        if v[i].abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        for x in v.iter_mut() {
            *x = -*x;
        }
    }
}

/// Sample covariance with denominator `n - 1`.
pub fn covariance(samples: &[FeatureVector]) -> (FeatureVector, [[f64; FEATURE_COUNT]; FEATURE_COUNT]) {
    let n = samples.len() as f64;
    let mut mean = [0.0; FEATURE_COUNT];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x;
        }
    }
    for m in &mut mean {
        *m /= n;
    }
    let mut cov = [[0.0; FEATURE_COUNT]; FEATURE_COUNT];
    for s in samples {
        let d: Vec<f64> = s.iter().zip(&mean).map(|(x, m)| x - m).collect();
        for i in 0..FEATURE_COUNT {
            for j in i..FEATURE_COUNT {
                cov[i][j] += d[i] * d[j];
            }
        }
    }
    for i in 0..FEATURE_COUNT {
        for j in i..FEATURE_COUNT {
            cov[i][j] /= n - 1.0;
            cov[j][i] = cov[i][j];
        }
    }
    (mean, cov)
}

/// Fits the top-2 principal components of the sample covariance.
pub fn fit_pca(samples: &[FeatureVector]) -> Result<PcaBlock> {
    if samples.len() < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            got: samples.len(),
        });
    }
    if let Some(i) = samples.iter().position(|s| s.iter().any(|x| !x.is_finite())) {
        return Err(Error::NonFinite(format!("PCA sample {i}")));
    }
    let (mean, cov) = covariance(samples);
    let m = SMatrix::<f64, FEATURE_COUNT, FEATURE_COUNT>::from_fn(|i, j| cov[i][j]);
    let eig = m.symmetric_eigen();

    let mut order: Vec<usize> = (0..FEATURE_COUNT).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));

    let top = eig.eigenvalues[order[0]];
    let second = eig.eigenvalues[order[1]];
    if !(top > 0.0) || second <= RANK_TOLERANCE * top {
        return Err(Error::InsufficientVariance {
            required: PCA_COMPONENTS,
        });
    }

    let mut components = [[0.0; FEATURE_COUNT]; PCA_COMPONENTS];
    for (row, &k) in components.iter_mut().zip(&order) {
        let v: SVector<f64, FEATURE_COUNT> = eig.eigenvectors.column(k).into();
        let norm = v.norm();
        for (dst, x) in row.iter_mut().zip(v.iter()) {
            *dst = x / norm;
        }
        normalize_sign(row);
    }
    Ok(PcaBlock {
        mean,
        components,
        explained_variance: [top, second],
    })
}

impl PcaBlock {
    /// `components . (x - mean)`.
    pub fn project(&self, x: &FeatureVector) -> [f64; PCA_COMPONENTS] {
        let mut out = [0.0; PCA_COMPONENTS];
        for (o, row) in out.iter_mut().zip(&self.components) {
            *o = row
                .iter()
                .zip(x.iter().zip(&self.mean))
                .map(|(c, (xi, mi))| c * (xi - mi))
                .sum();
        }
        out
    }

    pub(crate) fn validate(&self) -> std::result::Result<(), String> {
        let finite = self.mean.iter().all(|x| x.is_finite())
            && self.components.iter().flatten().all(|x| x.is_finite())
            && self.explained_variance.iter().all(|x| x.is_finite());
        if !finite {
            return Err("non-finite PCA parameter".into());
        }
        for (i, row) in self.components.iter().enumerate() {
            let norm: f64 = row.iter().map(|x| x * x).sum::<f64>().sqrt();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(format!("PCA component {i} has norm {norm}"));
            }
        }
        let dot: f64 = self.components[0]
            .iter()
            .zip(&self.components[1])
            .map(|(a, b)| a * b)
            .sum();
        if dot.abs() > 1e-9 {
            return Err("PCA components are not orthogonal".into());
        }
        let [v0, v1] = self.explained_variance;
        if !(v0 >= v1 && v1 >= 0.0) {
            return Err("explained variance must be non-increasing and nonnegative".into());
        }
        Ok(())
    }
}

pub fn project(block: &PcaBlock, x: &FeatureVector) -> [f64; PCA_COMPONENTS] {
    block.project(x)
}

/// Binary split of each principal component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcDiscretizer {
    pub thresholds: [f64; PCA_COMPONENTS],
}

fn median(sorted: &[f64]) -> f64 {
    let n = sorted.len();
    if n % 2 == 1 {
        sorted[n / 2]
    } else {
        0.5 * (sorted[n / 2 - 1] + sorted[n / 2])
    }
}

/// Median threshold, nudged down when ties at the top would leave the upper
/// bin empty.
fn split_threshold(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let t = median(values);
    let max = values[values.len() - 1];
    if t < max {
        return t;
    }
    // Everything is <= t. Split between the largest value below the maximum
    // and the maximum itself, if such a value exists.
    match values.iter().rev().find(|&&v| v < max) {
        Some(&below) => 0.5 * (below + max),
        None => t,
    }
}

/// Fits per-component median thresholds on training projections.
pub fn fit_pc_discretizer(projections: &[[f64; PCA_COMPONENTS]]) -> Result<PcDiscretizer> {
    if projections.len() < 2 {
        return Err(Error::InsufficientSamples {
            required: 2,
            got: projections.len(),
        });
    }
    if projections.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("PC projection".into()));
    }
    let mut thresholds = [0.0; PCA_COMPONENTS];
    for (k, t) in thresholds.iter_mut().enumerate() {
        let mut col: Vec<f64> = projections.iter().map(|p| p[k]).collect();
        *t = split_threshold(&mut col);
    }
    Ok(PcDiscretizer { thresholds })
}

impl PcDiscretizer {
    /// Bin 0 iff `value <= threshold`.
    pub fn bin(&self, component: usize, value: f64) -> u8 {
        u8::from(value > self.thresholds[component])
    }

    pub fn discretize(&self, p: &[f64; PCA_COMPONENTS]) -> [u8; PCA_COMPONENTS] {
        [self.bin(0, p[0]), self.bin(1, p[1])]
    }
}

/// Fixed effect-displacement bins, in meters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EffectBinning {
    pub edges: [f64; EFFECT_BINS - 1],
}

impl Default for EffectBinning {
    fn default() -> Self {
        EffectBinning {
            edges: [-0.06, -0.025, 0.025, 0.06],
        }
    }
}

impl EffectBinning {
    pub fn new(edges: [f64; EFFECT_BINS - 1]) -> Result<Self> {
        let b = EffectBinning { edges };
        b.validate().map_err(Error::InvalidParameter)?;
        Ok(b)
    }

    pub(crate) fn validate(&self) -> std::result::Result<(), String> {
        if self.edges.iter().any(|e| !e.is_finite()) {
            return Err("non-finite bin edge".into());
        }
        if self.edges.windows(2).any(|w| w[0] >= w[1]) {
            return Err("bin edges must be strictly ascending".into());
        }
        Ok(())
    }

    /// Bin index over left-open intervals: `(-inf, e0], (e0, e1], ..., (e3, inf)`.
    pub fn bin(&self, displacement_m: f64) -> Result<usize> {
        if !displacement_m.is_finite() {
            return Err(Error::NonFinite(format!("effect {displacement_m}")));
        }
        Ok(self.edges.iter().filter(|&&e| displacement_m > e).count())
    }
}

/// Bins a displacement with the default edges.
pub fn effect_bin(displacement_m: f64) -> Result<usize> {
    EffectBinning::default().bin(displacement_m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn unit(k: usize) -> FeatureVector {
        let mut v = [0.0; FEATURE_COUNT];
        v[k] = 1.0;
        v
    }

    #[test]
    fn axis_aligned_data() {
        // full factorial design: zero sample correlation between the axes
        let mut samples = Vec::new();
        for a in [-0.3, -0.1, 0.1, 0.3] {
            for b in [-0.05, 0.05] {
                let mut v = [0.3; FEATURE_COUNT];
                v[1] += a;
                v[2] += b;
                samples.push(v);
            }
        }
        let b = fit_pca(&samples).unwrap();
        for (got, want) in b.components.iter().zip([unit(1), unit(2)]) {
            for (g, w) in got.iter().zip(&want) {
                assert!((g - w).abs() < 1e-12, "{got:?}");
            }
        }
    }

    #[test]
    fn identical_samples_have_no_variance() {
        let s = vec![[0.5; FEATURE_COUNT]; 10];
        assert!(matches!(
            fit_pca(&s),
            Err(Error::InsufficientVariance { .. })
        ));
    }

    #[test]
    fn rank_one_data_is_rejected() {
        let s: Vec<FeatureVector> = (0..10)
            .map(|i| {
                let mut v = [0.0; FEATURE_COUNT];
                v[0] = i as f64 * 0.1;
                v[4] = i as f64 * 0.05;
                v
            })
            .collect();
        assert!(matches!(
            fit_pca(&s),
            Err(Error::InsufficientVariance { .. })
        ));
    }

    #[test]
    fn single_sample_rejected() {
        assert!(matches!(
            fit_pca(&[[0.1; FEATURE_COUNT]]),
            Err(Error::InsufficientSamples { .. })
        ));
    }

    #[test]
    fn projection_of_mean_and_unit_steps() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s: Vec<FeatureVector> = (0..30)
            .map(|_| std::array::from_fn(|_| rng.random::<f64>()))
            .collect();
        let b = fit_pca(&s).unwrap();
        assert_eq!(b.project(&b.mean), [0.0, 0.0]);
        let mut x = b.mean;
        for (xi, c) in x.iter_mut().zip(&b.components[0]) {
            *xi += c;
        }
        let p = b.project(&x);
        assert!((p[0] - 1.0).abs() < 1e-9 && p[1].abs() < 1e-9);
    }

    #[test]
    fn median_split() {
        let d = fit_pc_discretizer(&[[0.1, 0.0], [0.2, 0.0], [0.8, 1.0], [0.9, 1.0]]).unwrap();
        assert!((d.thresholds[0] - 0.5).abs() < 1e-15);
        let bins: Vec<u8> = [0.1, 0.2, 0.8, 0.9].iter().map(|&v| d.bin(0, v)).collect();
        assert_eq!(bins, vec![0, 0, 1, 1]);
        assert_eq!(d.bin(0, d.thresholds[0]), 0);
    }

    #[test]
    fn tied_maximum_keeps_upper_bin_nonempty() {
        let d = fit_pc_discretizer(&[[0.0, 0.0], [1.0, 1.0], [1.0, 2.0]]).unwrap();
        assert_eq!(d.bin(0, 0.0), 0);
        assert_eq!(d.bin(0, 1.0), 1);
    }

    #[test]
    fn effect_bins_follow_table() {
        assert_eq!(effect_bin(0.0).unwrap(), 2);
        assert_eq!(effect_bin(-0.07).unwrap(), 0);
        assert_eq!(effect_bin(0.03).unwrap(), 3);
        assert_eq!(effect_bin(-0.06).unwrap(), 0);
        assert_eq!(effect_bin(-0.025).unwrap(), 1);
        assert_eq!(effect_bin(0.025).unwrap(), 2);
        assert_eq!(effect_bin(0.06).unwrap(), 3);
        assert_eq!(effect_bin(0.0600001).unwrap(), 4);
        assert!(matches!(effect_bin(f64::NAN), Err(Error::NonFinite(_))));
        assert!(matches!(effect_bin(f64::INFINITY), Err(Error::NonFinite(_))));
    }

    #[test]
    fn binning_rejects_unsorted_edges() {
        assert!(EffectBinning::new([0.0, -1.0, 1.0, 2.0]).is_err());
    }
}
