//! Dataset schemas, CSV ingestion, viewpoint augmentation, train/test splits
//! and model files.
//!
//! Canonical files:
//!
//! * `entities.csv`: `entity_id, kind, view_id, f01..f13` or
//!   `entity_id, kind, view_id, contour_path`
//! * `trials.csv`: `trial_id, manipulator_id, object_id, action,
//!   effect_x_m, effect_y_m`
//!
//! Other layouts can be mapped onto these with an [`Adapter`].

use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::affordance::{ActionId, AffordanceModel, Observation};
use crate::error::{Error, Result};
use crate::shape::{extract_features, read_contours, ShapeFeatures, FEATURE_COUNT};
use crate::tasks::{SelectionRow, ViewSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EntityKind {
    Hand,
    Tool,
    Object,
}

impl EntityKind {
    pub fn name(self) -> &'static str {
        match self {
            EntityKind::Hand => "hand",
            EntityKind::Tool => "tool",
            EntityKind::Object => "object",
        }
    }

    pub fn is_manipulator(self) -> bool {
        self != EntityKind::Object
    }
}

impl fmt::Display for EntityKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EntityKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "hand" => Ok(EntityKind::Hand),
            "tool" => Ok(EntityKind::Tool),
            "object" => Ok(EntityKind::Object),
            _ => Err(Error::Schema(format!("unknown entity kind {s:?}"))),
        }
    }
}

/// Features of one view of one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct EntityRecord {
    pub entity_id: String,
    pub kind: EntityKind,
    pub view_id: String,
    pub features: ShapeFeatures,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial_id: String,
    pub manipulator_id: String,
    pub object_id: String,
    pub action: ActionId,
    pub effect_x_m: f64,
    pub effect_y_m: f64,
}

/// Column names for `f01..f13`.
pub fn feature_columns() -> Vec<String> {
    (1..=FEATURE_COUNT).map(|i| format!("f{i:02}")).collect()
}

pub const ENTITY_KEY_COLUMNS: [&str; 3] = ["entity_id", "kind", "view_id"];
pub const CONTOUR_COLUMN: &str = "contour_path";
pub const TRIAL_COLUMNS: [&str; 6] = [
    "trial_id",
    "manipulator_id",
    "object_id",
    "action",
    "effect_x_m",
    "effect_y_m",
];

/// A validated, immutable set of entities and trials.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    entities: Vec<EntityRecord>,
    trials: Vec<TrialRecord>,
}

/// Checks key uniqueness and kind consistency of entity records.
pub fn validate_entities(entities: &[EntityRecord]) -> Result<()> {
    let mut kinds: HashMap<&str, EntityKind> = HashMap::new();
    let mut seen: HashMap<(&str, &str), ()> = HashMap::new();
    for e in entities {
        if seen.insert((&e.entity_id, &e.view_id), ()).is_some() {
            return Err(Error::DuplicateKey(format!(
                "entity {} view {}",
                e.entity_id, e.view_id
            )));
        }
        match kinds.get(e.entity_id.as_str()) {
            Some(&k) if k != e.kind => {
                return Err(Error::Schema(format!(
                    "entity {} is both {k} and {}",
                    e.entity_id, e.kind
                )))
            }
            _ => {
                kinds.insert(&e.entity_id, e.kind);
            }
        }
    }
    Ok(())
}

impl Dataset {
    /// Validates the records as a whole; nothing is kept on failure.
    pub fn new(entities: Vec<EntityRecord>, trials: Vec<TrialRecord>) -> Result<Self> {
        validate_entities(&entities)?;
        let kinds: HashMap<&str, EntityKind> = entities
            .iter()
            .map(|e| (e.entity_id.as_str(), e.kind))
            .collect();
        let mut ids: HashMap<&str, ()> = HashMap::new();
        for t in &trials {
            if ids.insert(&t.trial_id, ()).is_some() {
                return Err(Error::DuplicateKey(format!("trial {}", t.trial_id)));
            }
            match kinds.get(t.manipulator_id.as_str()) {
                Some(k) if k.is_manipulator() => {}
                Some(k) => {
                    return Err(Error::Schema(format!(
                        "trial {}: manipulator {} is a {k}",
                        t.trial_id, t.manipulator_id
                    )))
                }
                None => {
                    return Err(Error::UnknownEntity(format!(
                        "trial {} references manipulator {}",
                        t.trial_id, t.manipulator_id
                    )))
                }
            }
            match kinds.get(t.object_id.as_str()) {
                Some(EntityKind::Object) => {}
                Some(k) => {
                    return Err(Error::Schema(format!(
                        "trial {}: object {} is a {k}",
                        t.trial_id, t.object_id
                    )))
                }
                None => {
                    return Err(Error::UnknownEntity(format!(
                        "trial {} references object {}",
                        t.trial_id, t.object_id
                    )))
                }
            }
            if !t.effect_x_m.is_finite() || !t.effect_y_m.is_finite() {
                return Err(Error::NonFinite(format!("trial {} effect", t.trial_id)));
            }
        }
        Ok(Dataset { entities, trials })
    }

    pub fn load(entities: impl AsRef<Path>, trials: impl AsRef<Path>) -> Result<Self> {
        Dataset::new(load_entities(entities)?, load_trials(trials)?)
    }

    pub fn entities(&self) -> &[EntityRecord] {
        &self.entities
    }

    pub fn trials(&self) -> &[TrialRecord] {
        &self.trials
    }

    pub fn into_parts(self) -> (Vec<EntityRecord>, Vec<TrialRecord>) {
        (self.entities, self.trials)
    }

    /// View sets of every entity of the given kind, in first-appearance order.
    pub fn view_sets(&self, kind: EntityKind) -> Vec<ViewSet> {
        view_sets(self.entities.iter().filter(|e| e.kind == kind))
    }

    pub fn augment(&self) -> Result<Vec<AugmentedSample>> {
        augment(&self.trials, &self.entities)
    }
}

/// Groups records into per-entity view sets, in first-appearance order.
pub fn view_sets<'a>(records: impl IntoIterator<Item = &'a EntityRecord>) -> Vec<ViewSet> {
    let mut out: Vec<ViewSet> = Vec::new();
    let mut index: HashMap<&str, usize> = HashMap::new();
    for e in records {
        let k = *index.entry(&e.entity_id).or_insert_with(|| {
            out.push(ViewSet {
                id: e.entity_id.clone(),
                views: Vec::new(),
            });
            out.len() - 1
        });
        out[k].views.push(e.features.to_array());
    }
    out
}

// ---------------------------------------------------------------------------
// CSV ingestion

/// Maps a foreign CSV layout onto the canonical schema.
///
/// ```toml
/// effect_scale = 0.01          # source effects in centimeters
/// [entities]
/// entity_id = "name"           # canonical = "source column"
/// [trials]
/// manipulator_id = "tool"
/// [actions]
/// tap_right = "tapFromRight"   # source label = canonical action
/// ```
///
/// With an adapter, source columns that are not mapped or canonical are
/// ignored instead of rejected.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Adapter {
    #[serde(default)]
    pub entities: BTreeMap<String, String>,
    #[serde(default)]
    pub trials: BTreeMap<String, String>,
    #[serde(default)]
    pub actions: BTreeMap<String, String>,
    /// Multiplier converting source effects to meters.
    #[serde(default = "unit_scale")]
    pub effect_scale: f64,
}

fn unit_scale() -> f64 {
    1.0
}

impl Default for Adapter {
    fn default() -> Self {
        Adapter {
            entities: BTreeMap::new(),
            trials: BTreeMap::new(),
            actions: BTreeMap::new(),
            effect_scale: 1.0,
        }
    }
}

impl Adapter {
    pub fn parse(text: &str) -> Result<Self> {
        let a: Adapter =
            toml::from_str(text).map_err(|e| Error::Schema(format!("adapter config: {e}")))?;
        if !a.effect_scale.is_finite() || a.effect_scale <= 0.0 {
            return Err(Error::Schema(format!(
                "adapter effect_scale must be positive, got {}",
                a.effect_scale
            )));
        }
        for canonical in a.actions.values() {
            canonical.parse::<ActionId>()?;
        }
        Ok(a)
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
        Adapter::parse(&text).map_err(|e| e.in_file(path))
    }

    fn action(&self, label: &str) -> Result<ActionId> {
        match self.actions.get(label) {
            Some(canonical) => canonical.parse(),
            None => label.parse(),
        }
    }
}

struct Table {
    rows: Vec<(usize, csv::StringRecord)>,
    /// Canonical column name to field index.
    columns: HashMap<String, usize>,
    /// Source columns not claimed by any canonical name.
    unclaimed: Vec<String>,
}

impl Table {
    fn read(path: &Path, mapping: Option<&BTreeMap<String, String>>) -> Result<Table> {
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
        let headers = reader.headers()?.clone();
        let mut source: HashMap<&str, usize> = HashMap::new();
        for (i, h) in headers.iter().enumerate() {
            if source.insert(h, i).is_some() {
                return Err(Error::Schema(format!("duplicate column {h:?}")));
            }
        }
        let mut columns = HashMap::new();
        let mut claimed = vec![false; headers.len()];
        if let Some(map) = mapping {
            for (canonical, src) in map {
                let Some(&i) = source.get(src.as_str()) else {
                    return Err(Error::Schema(format!(
                        "adapter maps {canonical} to missing column {src:?}"
                    )));
                };
                columns.insert(canonical.clone(), i);
                claimed[i] = true;
            }
        }
        let mut unclaimed = Vec::new();
        for (i, h) in headers.iter().enumerate() {
            if claimed[i] {
                continue;
            }
            if columns.contains_key(h) {
                // shadowed by an adapter mapping
                unclaimed.push(h.to_string());
            } else {
                columns.insert(h.to_string(), i);
            }
        }
        let mut rows = Vec::new();
        for rec in reader.records() {
            let rec = rec?;
            let line = rec.position().map_or(0, |p| p.line() as usize);
            rows.push((line, rec));
        }
        Ok(Table {
            rows,
            columns,
            unclaimed,
        })
    }

    fn has(&self, name: &str) -> bool {
        self.columns.contains_key(name)
    }

    /// Rejects missing required columns and, unless `lenient`, any column
    /// outside `allowed`.
    fn check(&self, required: &[String], allowed: &[String], lenient: bool) -> Result<()> {
        let missing: Vec<&str> = required
            .iter()
            .filter(|c| !self.has(c))
            .map(String::as_str)
            .collect();
        if !missing.is_empty() {
            return Err(Error::Schema(format!("missing columns: {}", missing.join(", "))));
        }
        if lenient {
            return Ok(());
        }
        let mut extra: Vec<&str> = self
            .columns
            .keys()
            .filter(|c| !allowed.contains(c))
            .map(String::as_str)
            .collect();
        extra.extend(self.unclaimed.iter().map(String::as_str));
        extra.sort_unstable();
        if !extra.is_empty() {
            return Err(Error::Schema(format!("unexpected columns: {}", extra.join(", "))));
        }
        Ok(())
    }

    fn get<'r>(&self, rec: &'r csv::StringRecord, name: &str) -> &'r str {
        rec.get(self.columns[name]).unwrap_or("")
    }
}

fn parse_number(s: &str, row: usize, column: &str) -> Result<f64> {
    s.parse::<f64>()
        .map_err(|_| Error::Schema(format!("row {row}, column {column}: not a number: {s:?}")))
}

fn nonempty(s: &str, row: usize, column: &str) -> Result<String> {
    if s.is_empty() {
        return Err(Error::Schema(format!("row {row}, column {column}: empty")));
    }
    Ok(s.to_string())
}

/// Loads canonical `entities.csv`. Rows are numbered by file line (the
/// header is line 1).
pub fn load_entities(path: impl AsRef<Path>) -> Result<Vec<EntityRecord>> {
    load_entities_with(path, None)
}

pub fn load_entities_with(
    path: impl AsRef<Path>,
    adapter: Option<&Adapter>,
) -> Result<Vec<EntityRecord>> {
    let path = path.as_ref();
    read_entities(path, adapter).map_err(|e| e.in_file(path))
}

fn read_entities(path: &Path, adapter: Option<&Adapter>) -> Result<Vec<EntityRecord>> {
    let table = Table::read(path, adapter.map(|a| &a.entities))?;
    let keys: Vec<String> = ENTITY_KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    let fcols = feature_columns();
    let raw = table.has(CONTOUR_COLUMN);
    if raw && fcols.iter().any(|c| table.has(c)) {
        return Err(Error::Schema(format!(
            "both {CONTOUR_COLUMN} and feature columns present"
        )));
    }
    let value_cols = if raw {
        vec![CONTOUR_COLUMN.to_string()]
    } else {
        fcols.clone()
    };
    let all: Vec<String> = keys.iter().chain(&value_cols).cloned().collect();
    table.check(&all, &all, adapter.is_some())?;

    let base = path.parent().unwrap_or(Path::new(""));
    let mut out = Vec::with_capacity(table.rows.len());
    for (row, rec) in &table.rows {
        let row = *row;
        let entity_id = nonempty(table.get(rec, "entity_id"), row, "entity_id")?;
        let kind: EntityKind = table
            .get(rec, "kind")
            .parse()
            .map_err(|e| Error::Schema(format!("row {row}: {e}")))?;
        let view_id = nonempty(table.get(rec, "view_id"), row, "view_id")?;
        let features = if raw {
            let rel = nonempty(table.get(rec, CONTOUR_COLUMN), row, CONTOUR_COLUMN)?;
            features_from_contour_file(&base.join(rel))?
        } else {
            let mut v = [0.0; FEATURE_COUNT];
            for (x, col) in v.iter_mut().zip(&fcols) {
                *x = parse_number(table.get(rec, col), row, col)?;
                if !(0.0..=1.0).contains(x) {
                    return Err(Error::Range {
                        row,
                        column: col.clone(),
                        value: *x,
                    });
                }
            }
            ShapeFeatures::from_array(v)?
        };
        out.push(EntityRecord {
            entity_id,
            kind,
            view_id,
            features,
        });
    }
    validate_entities(&out)?;
    Ok(out)
}

fn features_from_contour_file(path: &Path) -> Result<ShapeFeatures> {
    let contours = read_contours(path)?;
    if contours.len() != 1 {
        return Err(Error::InvalidContour(format!(
            "expected one contour, found {}",
            contours.len()
        ))
        .in_file(path));
    }
    extract_features(&contours[0]).map_err(|e| e.in_file(path))
}

pub fn load_trials(path: impl AsRef<Path>) -> Result<Vec<TrialRecord>> {
    load_trials_with(path, None)
}

pub fn load_trials_with(path: impl AsRef<Path>, adapter: Option<&Adapter>) -> Result<Vec<TrialRecord>> {
    let path = path.as_ref();
    read_trials(path, adapter).map_err(|e| e.in_file(path))
}

fn read_trials(path: &Path, adapter: Option<&Adapter>) -> Result<Vec<TrialRecord>> {
    let table = Table::read(path, adapter.map(|a| &a.trials))?;
    let cols: Vec<String> = TRIAL_COLUMNS.iter().map(|s| s.to_string()).collect();
    table.check(&cols, &cols, adapter.is_some())?;
    let scale = adapter.map_or(1.0, |a| a.effect_scale);
    let mut out = Vec::with_capacity(table.rows.len());
    let mut ids: HashMap<String, ()> = HashMap::new();
    for (row, rec) in &table.rows {
        let row = *row;
        let trial_id = nonempty(table.get(rec, "trial_id"), row, "trial_id")?;
        if ids.insert(trial_id.clone(), ()).is_some() {
            return Err(Error::DuplicateKey(format!("trial {trial_id} (row {row})")));
        }
        let label = table.get(rec, "action");
        let action = match adapter {
            Some(a) => a.action(label),
            None => label.parse(),
        }
        .map_err(|e| Error::Schema(format!("row {row}: {e}")))?;
        let effect = |col: &str| -> Result<f64> {
            let v = parse_number(table.get(rec, col), row, col)? * scale;
            if !v.is_finite() {
                return Err(Error::NonFinite(format!("row {row}, column {col}")));
            }
            Ok(v)
        };
        let effect_x_m = effect("effect_x_m")?;
        let effect_y_m = effect("effect_y_m")?;
        out.push(TrialRecord {
            trial_id,
            manipulator_id: nonempty(table.get(rec, "manipulator_id"), row, "manipulator_id")?,
            object_id: nonempty(table.get(rec, "object_id"), row, "object_id")?,
            action,
            effect_x_m,
            effect_y_m,
        });
    }
    Ok(out)
}

pub fn write_entities(path: impl AsRef<Path>, entities: &[EntityRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::from(e).in_file(path))?;
    let mut header: Vec<String> = ENTITY_KEY_COLUMNS.iter().map(|s| s.to_string()).collect();
    header.extend(feature_columns());
    w.write_record(&header)?;
    for e in entities {
        let mut rec = vec![e.entity_id.clone(), e.kind.to_string(), e.view_id.clone()];
        rec.extend(e.features.to_array().iter().map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::from(e).in_file(path))?;
    Ok(())
}

pub fn write_trials(path: impl AsRef<Path>, trials: &[TrialRecord]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::from(e).in_file(path))?;
    w.write_record(TRIAL_COLUMNS)?;
    for t in trials {
        w.write_record([
            t.trial_id.as_str(),
            &t.manipulator_id,
            &t.object_id,
            t.action.name(),
            &t.effect_x_m.to_string(),
            &t.effect_y_m.to_string(),
        ])?;
    }
    w.flush().map_err(|e| Error::from(e).in_file(path))?;
    Ok(())
}

// ---------------------------------------------------------------------------
// Augmentation and splits

/// One trial paired with one manipulator view and one object view.
#[derive(Debug, Clone, PartialEq)]
pub struct AugmentedSample {
    pub trial_id: String,
    pub manipulator_view: String,
    pub object_view: String,
    pub observation: Observation,
}

fn views_by_entity(entities: &[EntityRecord]) -> HashMap<&str, Vec<&EntityRecord>> {
    let mut map: HashMap<&str, Vec<&EntityRecord>> = HashMap::new();
    for e in entities {
        map.entry(e.entity_id.as_str()).or_default().push(e);
    }
    map
}

/// Replicates every trial over all (manipulator view, object view) pairs.
/// Output order: trials in input order, then manipulator views, then object
/// views, each in input order.
pub fn augment(trials: &[TrialRecord], entities: &[EntityRecord]) -> Result<Vec<AugmentedSample>> {
    let views = views_by_entity(entities);
    let lookup = |id: &str| {
        views
            .get(id)
            .filter(|v| !v.is_empty())
            .ok_or_else(|| Error::MissingViews(id.to_string()))
    };
    let mut total = 0usize;
    for t in trials {
        total += lookup(&t.manipulator_id)?.len() * lookup(&t.object_id)?.len();
    }
    let mut out = Vec::with_capacity(total);
    for t in trials {
        let mv = lookup(&t.manipulator_id)?;
        let ov = lookup(&t.object_id)?;
        for m in mv {
            let manip = m.features.to_array();
            for o in ov {
                out.push(AugmentedSample {
                    trial_id: t.trial_id.clone(),
                    manipulator_view: m.view_id.clone(),
                    object_view: o.view_id.clone(),
                    observation: Observation {
                        manip,
                        object: o.features.to_array(),
                        action: t.action,
                        effect_x_m: t.effect_x_m,
                        effect_y_m: t.effect_y_m,
                    },
                });
            }
        }
    }
    Ok(out)
}

pub fn observations(samples: &[AugmentedSample]) -> Vec<Observation> {
    samples.iter().map(|s| s.observation).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitMode {
    /// Trials are partitioned, stratified by (manipulator, object, action);
    /// every trial keeps all its views.
    ByTrial,
    /// Views of every entity are partitioned; test samples pair only views
    /// never seen in training.
    ByView,
}

impl SplitMode {
    pub fn name(self) -> &'static str {
        match self {
            SplitMode::ByTrial => "by-trial",
            SplitMode::ByView => "by-view",
        }
    }
}

impl fmt::Display for SplitMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "by-trial" => Ok(SplitMode::ByTrial),
            "by-view" => Ok(SplitMode::ByView),
            _ => Err(Error::InvalidParameter(format!(
                "split mode must be by-trial or by-view, got {s:?}"
            ))),
        }
    }
}

/// Train/test partition of `n` items: a seeded shuffle, the first
/// `round(fraction * n)` (clamped to `1..n`) go to training.
pub fn split_indices(n: usize, fraction: f64, seed: u64) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction must be in (0, 1), got {fraction}"
        )));
    }
    if n < 2 {
        return Err(Error::InsufficientSamples { required: 2, got: n });
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let k = ((fraction * n as f64).round() as usize).clamp(1, n - 1);
    let mut test = idx.split_off(k);
    idx.sort_unstable();
    test.sort_unstable();
    Ok((idx, test))
}

/// Splits trials within every (manipulator, object, action) cell, so each
/// cell keeps its share of the training set. Each cell sends
/// `round(fraction * n)` trials to training.
pub fn stratified_trial_split(
    trials: &[TrialRecord],
    fraction: f64,
    seed: u64,
) -> Result<(Vec<usize>, Vec<usize>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "split fraction must be in (0, 1), got {fraction}"
        )));
    }
    let mut cells: BTreeMap<(&str, &str, ActionId), Vec<usize>> = BTreeMap::new();
    for (i, t) in trials.iter().enumerate() {
        cells
            .entry((&t.manipulator_id, &t.object_id, t.action))
            .or_default()
            .push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for mut idx in cells.into_values() {
        idx.shuffle(&mut rng);
        let k = (fraction * idx.len() as f64).round() as usize;
        test.extend_from_slice(&idx[k..]);
        idx.truncate(k);
        train.extend(idx);
    }
    if train.is_empty() || test.is_empty() {
        return Err(Error::InsufficientSamples {
            required: 2,
            got: trials.len(),
        });
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

/// Augmented train and test samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub mode: SplitMode,
    pub fraction: f64,
    pub seed: u64,
    pub train: Vec<AugmentedSample>,
    pub test: Vec<AugmentedSample>,
}

pub fn split(dataset: &Dataset, mode: SplitMode, fraction: f64, seed: u64) -> Result<Split> {
    let (train, test) = match mode {
        SplitMode::ByTrial => {
            let (tr, te) = stratified_trial_split(&dataset.trials, fraction, seed)?;
            let pick = |ix: &[usize]| -> Vec<TrialRecord> {
                ix.iter().map(|&i| dataset.trials[i].clone()).collect()
            };
            (
                augment(&pick(&tr), &dataset.entities)?,
                augment(&pick(&te), &dataset.entities)?,
            )
        }
        SplitMode::ByView => {
            let mut train_views = Vec::new();
            let mut test_views = Vec::new();
            let groups = view_sets_records(&dataset.entities);
            for (k, views) in groups.iter().enumerate() {
                let (tr, te) = split_indices(views.len(), fraction, seed.wrapping_add(k as u64))
                    .map_err(|e| match e {
                        Error::InsufficientSamples { .. } => Error::InvalidParameter(format!(
                            "by-view split needs at least 2 views of {}",
                            views[0].entity_id
                        )),
                        other => other,
                    })?;
                train_views.extend(tr.iter().map(|&i| views[i].clone()));
                test_views.extend(te.iter().map(|&i| views[i].clone()));
            }
            (
                augment(&dataset.trials, &train_views)?,
                augment(&dataset.trials, &test_views)?,
            )
        }
    };
    Ok(Split {
        mode,
        fraction,
        seed,
        train,
        test,
    })
}

fn view_sets_records(entities: &[EntityRecord]) -> Vec<Vec<&EntityRecord>> {
    let mut order: Vec<&str> = Vec::new();
    let mut map = views_by_entity(entities);
    for e in entities {
        if !order.contains(&e.entity_id.as_str()) {
            order.push(&e.entity_id);
        }
    }
    order.iter().map(|id| map.remove(id).unwrap_or_default()).collect()
}

/// Writes augmented samples with their full feature vectors (`m01..m13`,
/// `o01..o13`).
pub fn write_augmented(path: impl AsRef<Path>, samples: &[AugmentedSample]) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path).map_err(|e| Error::from(e).in_file(path))?;
    let mut header: Vec<String> = [
        "trial_id",
        "manipulator_view",
        "object_view",
        "action",
        "effect_x_m",
        "effect_y_m",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    header.extend((1..=FEATURE_COUNT).map(|i| format!("m{i:02}")));
    header.extend((1..=FEATURE_COUNT).map(|i| format!("o{i:02}")));
    w.write_record(&header)?;
    for s in samples {
        let o = &s.observation;
        let mut rec = vec![
            s.trial_id.clone(),
            s.manipulator_view.clone(),
            s.object_view.clone(),
            o.action.name().to_string(),
            o.effect_x_m.to_string(),
            o.effect_y_m.to_string(),
        ];
        rec.extend(o.manip.iter().chain(&o.object).map(|x| x.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::from(e).in_file(path))?;
    Ok(())
}

/// Selection table as CSV text with columns `action, tool, selection_rate`.
pub fn selection_table_csv(rows: &[SelectionRow]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["action", "tool", "selection_rate"])?;
    for r in rows {
        w.write_record([r.action.name(), &r.tool, &r.selection_rate().to_string()])?;
    }
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("CSV of UTF-8 fields is UTF-8"))
}

// ---------------------------------------------------------------------------
// Model files

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    format_version: u32,
    checksum: String,
    model: &'a AffordanceModel,
}

/// SHA-256 (hex) of the compact JSON serialization of a model.
pub fn model_checksum(model: &AffordanceModel) -> Result<String> {
    let bytes = serde_json::to_vec(model)?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Serializes a model into its file form. Identical models give identical
/// bytes.
pub fn model_to_string(model: &AffordanceModel) -> Result<String> {
    let env = EnvelopeOut {
        format_version: MODEL_FORMAT_VERSION,
        checksum: model_checksum(model)?,
        model,
    };
    let mut s = serde_json::to_string_pretty(&env)?;
    s.push('\n');
    Ok(s)
}

pub fn save_model(model: &AffordanceModel, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = model_to_string(model)?;
    fs::write(path, text).map_err(|e| Error::from(e).in_file(path))
}

fn validate_model(m: &AffordanceModel) -> std::result::Result<(), String> {
    m.pca_manip.validate().map_err(|e| format!("pca_manip: {e}"))?;
    m.pca_obj.validate().map_err(|e| format!("pca_obj: {e}"))?;
    for (name, d) in [("disc_manip", &m.disc_manip), ("disc_obj", &m.disc_obj)] {
        if d.thresholds.iter().any(|t| !t.is_finite()) {
            return Err(format!("{name}: non-finite threshold"));
        }
    }
    for (name, cpt) in [("cpt_x", &m.cpt_x), ("cpt_y", &m.cpt_y)] {
        cpt.validate().map_err(|(row, e)| format!("{name} row {row}: {e}"))?;
    }
    if !m.smoothing_alpha.is_finite() || m.smoothing_alpha < 0.0 {
        return Err(format!("smoothing_alpha {}", m.smoothing_alpha));
    }
    m.effect_binning.validate().map_err(|e| format!("effect_binning: {e}"))?;
    Ok(())
}

/// Parses a model file: format version first, then structure and
/// probability tables, then the checksum.
pub fn model_from_str(text: &str) -> Result<AffordanceModel> {
    let corrupt = |msg: String| Error::CorruptModel(msg);
    let mut doc: serde_json::Value =
        serde_json::from_str(text).map_err(|e| corrupt(format!("not a JSON document: {e}")))?;
    let version = doc
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("missing format_version".into()))?;
    if version != u64::from(MODEL_FORMAT_VERSION) {
        return Err(Error::VersionMismatch {
            found: u32::try_from(version).unwrap_or(u32::MAX),
            expected: MODEL_FORMAT_VERSION,
        });
    }
    let checksum = doc
        .get("checksum")
        .and_then(serde_json::Value::as_str)
        .ok_or_else(|| corrupt("missing checksum".into()))?
        .to_string();
    let body = doc
        .get_mut("model")
        .map(serde_json::Value::take)
        .ok_or_else(|| corrupt("missing model".into()))?;
    let model: AffordanceModel =
        serde_json::from_value(body).map_err(|e| corrupt(format!("model: {e}")))?;
    validate_model(&model).map_err(corrupt)?;
    if model_checksum(&model)? != checksum {
        return Err(corrupt("checksum mismatch".into()));
    }
    Ok(model)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<AffordanceModel> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::from(e).in_file(path))?;
    model_from_str(&text).map_err(|e| e.in_file(path))
}
