//! The discrete affordance network.
//!
//! Structure: the two manipulator PC bins, the two object PC bins and the
//! action index are parents of both `EffectX` and `EffectY`; the effect nodes
//! are siblings with no arc between them. Every non-effect node is always
//! observed, which severs its incoming arcs, so
//! `p(EffectX, EffectY | M, O, A)` is the outer product of the two CPT rows
//! selected by the parent configuration.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::{
    fit_pc_discretizer, fit_pca, EffectBinning, FeatureVector, PcDiscretizer, PcaBlock,
    EFFECT_BINS, PCA_COMPONENTS,
};
use crate::tasks::DirectionMap;

pub const ACTION_COUNT: usize = 4;

/// 2 * 2 manipulator bins, 2 * 2 object bins, 4 actions.
pub const CONFIG_COUNT: usize = 64;

pub const DEFAULT_ALPHA: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ActionId {
    #[serde(rename = "tapFromRight")]
    TapFromRight = 0,
    #[serde(rename = "tapFromLeft")]
    TapFromLeft = 1,
    #[serde(rename = "draw")]
    Draw = 2,
    #[serde(rename = "push")]
    Push = 3,
}

impl ActionId {
    pub const ALL: [ActionId; ACTION_COUNT] = [
        ActionId::TapFromRight,
        ActionId::TapFromLeft,
        ActionId::Draw,
        ActionId::Push,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(i: usize) -> Option<ActionId> {
        Self::ALL.get(i).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ActionId::TapFromRight => "tapFromRight",
            ActionId::TapFromLeft => "tapFromLeft",
            ActionId::Draw => "draw",
            ActionId::Push => "push",
        }
    }
}

impl fmt::Display for ActionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ActionId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ActionId::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Schema(format!("unknown action {s:?}")))
    }
}

/// Values of all parents of the effect nodes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParentConfig {
    pub manip: [u8; PCA_COMPONENTS],
    pub object: [u8; PCA_COMPONENTS],
    pub action: ActionId,
}

impl ParentConfig {
    pub fn index(&self) -> usize {
        let bits = ((self.manip[0] as usize * 2 + self.manip[1] as usize) * 2
            + self.object[0] as usize)
            * 2
            + self.object[1] as usize;
        bits * ACTION_COUNT + self.action.index()
    }

    pub fn from_index(i: usize) -> Option<ParentConfig> {
        if i >= CONFIG_COUNT {
            return None;
        }
        let action = ActionId::from_index(i % ACTION_COUNT)?;
        let bits = i / ACTION_COUNT;
        let bit = |k: usize| ((bits >> k) & 1) as u8;
        Some(ParentConfig {
            manip: [bit(3), bit(2)],
            object: [bit(1), bit(0)],
            action,
        })
    }

    pub fn all() -> impl Iterator<Item = ParentConfig> {
        (0..CONFIG_COUNT).filter_map(ParentConfig::from_index)
    }
}

impl fmt::Display for ParentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "m=({},{}) o=({},{}) a={}",
            self.manip[0], self.manip[1], self.object[0], self.object[1], self.action
        )
    }
}

/// One discretized trial.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscreteSample {
    pub config: ParentConfig,
    pub bin_x: usize,
    pub bin_y: usize,
}

/// A continuous training observation: features of manipulator and object,
/// the action, and the measured displacement in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observation {
    pub manip: FeatureVector,
    pub object: FeatureVector,
    pub action: ActionId,
    pub effect_x_m: f64,
    pub effect_y_m: f64,
}

/// Conditional probability table for one effect node. A row is `None` when
/// its configuration was never observed and no smoothing prior was used.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Cpt {
    pub rows: Vec<Option<[f64; EFFECT_BINS]>>,
}

impl Cpt {
    pub fn row(&self, config: ParentConfig) -> Option<&[f64; EFFECT_BINS]> {
        self.rows[config.index()].as_ref()
    }

    /// Checks shape and row-stochasticity; returns the first bad row index.
    pub(crate) fn validate(&self) -> std::result::Result<(), (usize, String)> {
        if self.rows.len() != CONFIG_COUNT {
            return Err((
                self.rows.len(),
                format!("expected {CONFIG_COUNT} rows, found {}", self.rows.len()),
            ));
        }
        for (i, row) in self.rows.iter().enumerate() {
            let Some(row) = row else { continue };
            if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                return Err((i, "negative or non-finite probability".into()));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > 1e-9 {
                return Err((i, format!("row sums to {s}")));
            }
        }
        Ok(())
    }
}

/// Exact per-configuration effect-bin tallies.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EffectCounts {
    pub x: Vec<[u64; EFFECT_BINS]>,
    pub y: Vec<[u64; EFFECT_BINS]>,
}

impl EffectCounts {
    pub fn tally(samples: &[DiscreteSample]) -> Result<Self> {
        let mut x = vec![[0u64; EFFECT_BINS]; CONFIG_COUNT];
        let mut y = vec![[0u64; EFFECT_BINS]; CONFIG_COUNT];
        for s in samples {
            if s.bin_x >= EFFECT_BINS || s.bin_y >= EFFECT_BINS {
                return Err(Error::InvalidParameter(format!(
                    "effect bin ({}, {}) out of range",
                    s.bin_x, s.bin_y
                )));
            }
            let c = s.config.index();
            x[c][s.bin_x] += 1;
            y[c][s.bin_y] += 1;
        }
        Ok(EffectCounts { x, y })
    }

    pub fn total(&self, config: usize) -> u64 {
        self.x[config].iter().sum()
    }

    /// Configurations without any sample.
    pub fn empty_configs(&self) -> Vec<ParentConfig> {
        (0..CONFIG_COUNT)
            .filter(|&c| self.total(c) == 0)
            .filter_map(ParentConfig::from_index)
            .collect()
    }
}

fn smoothed_rows(counts: &[[u64; EFFECT_BINS]], alpha: f64) -> Cpt {
    let rows = counts
        .iter()
        .map(|row| {
            let total = row.iter().sum::<u64>() as f64 + EFFECT_BINS as f64 * alpha;
            (total > 0.0).then(|| row.map(|c| (c as f64 + alpha) / total))
        })
        .collect();
    Cpt { rows }
}

/// Maximum-likelihood CPTs with additive (Dirichlet) smoothing `alpha`:
/// `(count(cfg, b) + alpha) / (count(cfg) + 5 alpha)`.
pub fn learn(samples: &[DiscreteSample], alpha: f64) -> Result<(Cpt, Cpt, EffectCounts)> {
    if !alpha.is_finite() || alpha < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "smoothing alpha must be finite and >= 0, got {alpha}"
        )));
    }
    let counts = EffectCounts::tally(samples)?;
    let cpt_x = smoothed_rows(&counts.x, alpha);
    let cpt_y = smoothed_rows(&counts.y, alpha);
    Ok((cpt_x, cpt_y, counts))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
}

/// Joint distribution over (EffectX bin, EffectY bin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectDistribution {
    pub p: [[f64; EFFECT_BINS]; EFFECT_BINS],
}

impl EffectDistribution {
    pub fn outer(px: &[f64; EFFECT_BINS], py: &[f64; EFFECT_BINS]) -> Self {
        let mut p = [[0.0; EFFECT_BINS]; EFFECT_BINS];
        for (i, row) in p.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = px[i] * py[j];
            }
        }
        EffectDistribution { p }
    }

    pub fn uniform() -> Self {
        let u = [1.0 / EFFECT_BINS as f64; EFFECT_BINS];
        Self::outer(&u, &u)
    }

    pub fn total(&self) -> f64 {
        self.p.iter().flatten().sum()
    }

    /// Row sums (axis X) or column sums (axis Y).
    pub fn marginal(&self, axis: Axis) -> [f64; EFFECT_BINS] {
        let mut out = [0.0; EFFECT_BINS];
        for (i, row) in self.p.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                match axis {
                    Axis::X => out[i] += v,
                    Axis::Y => out[j] += v,
                }
            }
        }
        out
    }

    /// Cell with the highest probability; ties go to the lowest `(bx, by)`.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = (0, 0);
        for i in 0..EFFECT_BINS {
            for j in 0..EFFECT_BINS {
                if self.p[i][j] > self.p[best.0][best.1] {
                    best = (i, j);
                }
            }
        }
        best
    }
}

pub fn marginal(d: &EffectDistribution, axis: Axis) -> [f64; EFFECT_BINS] {
    d.marginal(axis)
}

/// Fitted PCA blocks, discretizers and CPTs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffordanceModel {
    pub pca_manip: PcaBlock,
    pub pca_obj: PcaBlock,
    pub disc_manip: PcDiscretizer,
    pub disc_obj: PcDiscretizer,
    pub cpt_x: Cpt,
    pub cpt_y: Cpt,
    pub smoothing_alpha: f64,
    pub effect_binning: EffectBinning,
    pub direction_map: DirectionMap,
}

/// Diagnostics from fitting a model.
#[derive(Debug, Clone)]
pub struct TrainReport {
    pub samples: usize,
    pub counts: EffectCounts,
    pub manip_explained_variance: [f64; PCA_COMPONENTS],
    pub object_explained_variance: [f64; PCA_COMPONENTS],
}

impl TrainReport {
    pub fn empty_configs(&self) -> Vec<ParentConfig> {
        self.counts.empty_configs()
    }
}

fn check_features(v: &FeatureVector, what: &str) -> Result<()> {
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite(format!("{what} features")));
    }
    Ok(())
}

impl AffordanceModel {
    /// Fits PCA blocks and median discretizers on the training observations,
    /// then learns the effect CPTs.
    pub fn fit(
        observations: &[Observation],
        alpha: f64,
        direction_map: DirectionMap,
    ) -> Result<(AffordanceModel, TrainReport)> {
        if observations.is_empty() {
            return Err(Error::InsufficientSamples {
                required: 2,
                got: 0,
            });
        }
        let manip: Vec<FeatureVector> = observations.iter().map(|o| o.manip).collect();
        let object: Vec<FeatureVector> = observations.iter().map(|o| o.object).collect();
        let pca_manip = fit_pca(&manip)?;
        let pca_obj = fit_pca(&object)?;
        let pm: Vec<_> = manip.iter().map(|x| pca_manip.project(x)).collect();
        let po: Vec<_> = object.iter().map(|x| pca_obj.project(x)).collect();
        let disc_manip = fit_pc_discretizer(&pm)?;
        let disc_obj = fit_pc_discretizer(&po)?;

        let effect_binning = EffectBinning::default();
        let mut discrete = Vec::with_capacity(observations.len());
        for (k, o) in observations.iter().enumerate() {
            discrete.push(DiscreteSample {
                config: ParentConfig {
                    manip: disc_manip.discretize(&pm[k]),
                    object: disc_obj.discretize(&po[k]),
                    action: o.action,
                },
                bin_x: effect_binning.bin(o.effect_x_m)?,
                bin_y: effect_binning.bin(o.effect_y_m)?,
            });
        }
        let (cpt_x, cpt_y, counts) = learn(&discrete, alpha)?;
        let report = TrainReport {
            samples: observations.len(),
            counts,
            manip_explained_variance: pca_manip.explained_variance,
            object_explained_variance: pca_obj.explained_variance,
        };
        let model = AffordanceModel {
            pca_manip,
            pca_obj,
            disc_manip,
            disc_obj,
            cpt_x,
            cpt_y,
            smoothing_alpha: alpha,
            effect_binning,
            direction_map,
        };
        Ok((model, report))
    }

    pub fn config_for(
        &self,
        manip: &FeatureVector,
        object: &FeatureVector,
        action: ActionId,
    ) -> Result<ParentConfig> {
        check_features(manip, "manipulator")?;
        check_features(object, "object")?;
        Ok(ParentConfig {
            manip: self.disc_manip.discretize(&self.pca_manip.project(manip)),
            object: self.disc_obj.discretize(&self.pca_obj.project(object)),
            action,
        })
    }

    /// Discretizes an observation with the fitted blocks and effect bins.
    pub fn discretize(&self, o: &Observation) -> Result<DiscreteSample> {
        Ok(DiscreteSample {
            config: self.config_for(&o.manip, &o.object, o.action)?,
            bin_x: self.effect_binning.bin(o.effect_x_m)?,
            bin_y: self.effect_binning.bin(o.effect_y_m)?,
        })
    }

    /// Joint effect distribution for a parent configuration.
    pub fn distribution_for(&self, config: ParentConfig) -> Result<EffectDistribution> {
        match (self.cpt_x.row(config), self.cpt_y.row(config)) {
            (Some(px), Some(py)) => Ok(EffectDistribution::outer(px, py)),
            _ => Err(Error::UnknownRow {
                config: config.index(),
            }),
        }
    }

    /// `p(EffectX, EffectY | M, O, A)`.
    pub fn infer(
        &self,
        manip: &FeatureVector,
        object: &FeatureVector,
        action: ActionId,
    ) -> Result<EffectDistribution> {
        self.distribution_for(self.config_for(manip, object, action)?)
    }

    /// Model with both CPTs uniform in every row.
    pub fn with_uniform_cpts(mut self) -> Self {
        let u = [1.0 / EFFECT_BINS as f64; EFFECT_BINS];
        self.cpt_x = Cpt {
            rows: vec![Some(u); CONFIG_COUNT],
        };
        self.cpt_y = self.cpt_x.clone();
        self
    }
}

pub fn infer(
    model: &AffordanceModel,
    manip: &FeatureVector,
    object: &FeatureVector,
    action: ActionId,
) -> Result<EffectDistribution> {
    model.infer(manip, object, action)
}
