//! Evaluation protocols: effect-prediction accuracy and tool selection.

use serde::{Deserialize, Serialize};

use crate::affordance::{ActionId, AffordanceModel, Axis, Observation};
use crate::error::{Error, Result};
use crate::reduce::{FeatureVector, EFFECT_BINS};

/// Chance level of guessing both effect bins: 1/25.
pub const RANDOM_BASELINE: f64 = 1.0 / (EFFECT_BINS * EFFECT_BINS) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Sign {
    Negative,
    Positive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DesiredDirection {
    pub axis: Axis,
    pub sign: Sign,
}

impl DesiredDirection {
    pub const fn new(axis: Axis, sign: Sign) -> Self {
        DesiredDirection { axis, sign }
    }

    /// The two bins on the desired side of zero; never the centre bin.
    pub fn desired_bins(&self) -> [usize; 2] {
        match self.sign {
            Sign::Negative => [0, 1],
            Sign::Positive => [3, 4],
        }
    }
}

/// Desired displacement direction per action.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DirectionMap {
    #[serde(rename = "tapFromRight")]
    pub tap_from_right: DesiredDirection,
    #[serde(rename = "tapFromLeft")]
    pub tap_from_left: DesiredDirection,
    pub draw: DesiredDirection,
    pub push: DesiredDirection,
}

impl Default for DirectionMap {
    /// Tapping from the right moves the object left (negative X), tapping from
    /// the left moves it right, drawing pulls it toward the robot (negative Y)
    /// and pushing moves it away.
    fn default() -> Self {
        DirectionMap {
            tap_from_right: DesiredDirection::new(Axis::X, Sign::Negative),
            tap_from_left: DesiredDirection::new(Axis::X, Sign::Positive),
            draw: DesiredDirection::new(Axis::Y, Sign::Negative),
            push: DesiredDirection::new(Axis::Y, Sign::Positive),
        }
    }
}

impl DirectionMap {
    pub fn get(&self, action: ActionId) -> DesiredDirection {
        match action {
            ActionId::TapFromRight => self.tap_from_right,
            ActionId::TapFromLeft => self.tap_from_left,
            ActionId::Draw => self.draw,
            ActionId::Push => self.push,
        }
    }

    /// Parses a TOML or JSON override table keyed by action name.
    pub fn parse(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('{') {
            return Ok(serde_json::from_str(text)?);
        }
        toml::from_str(text).map_err(|e| Error::Schema(format!("direction map: {e}")))
    }
}

/// Most probable (EffectX bin, EffectY bin); ties go to the lowest indices.
pub fn predict_bin_pair(
    model: &AffordanceModel,
    manip: &FeatureVector,
    object: &FeatureVector,
    action: ActionId,
) -> Result<(usize, usize)> {
    Ok(model.infer(manip, object, action)?.argmax())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Accuracy {
    pub correct: usize,
    pub total: usize,
}

impl Accuracy {
    pub fn fraction(&self) -> f64 {
        self.correct as f64 / self.total as f64
    }
}

/// Fraction of observations whose predicted bin pair matches the binned
/// ground truth on both axes.
pub fn evaluate_accuracy(model: &AffordanceModel, test: &[Observation]) -> Result<Accuracy> {
    if test.is_empty() {
        return Err(Error::EmptyTestSet);
    }
    let mut correct = 0;
    for o in test {
        let truth = (
            model.effect_binning.bin(o.effect_x_m)?,
            model.effect_binning.bin(o.effect_y_m)?,
        );
        if predict_bin_pair(model, &o.manip, &o.object, o.action)? == truth {
            correct += 1;
        }
    }
    Ok(Accuracy {
        correct,
        total: test.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Selected,
    Rejected,
}

/// Selects iff the mass in the two desired bins strictly exceeds the mass in
/// the remaining three.
pub fn decide(marginal: &[f64; EFFECT_BINS], dir: DesiredDirection) -> Decision {
    let bins = dir.desired_bins();
    let desired: f64 = bins.iter().map(|&b| marginal[b]).sum();
    let rest: f64 = (0..EFFECT_BINS)
        .filter(|b| !bins.contains(b))
        .map(|b| marginal[b])
        .sum();
    if desired > rest {
        Decision::Selected
    } else {
        Decision::Rejected
    }
}

pub fn select_tool(
    model: &AffordanceModel,
    tool: &FeatureVector,
    object: &FeatureVector,
    action: ActionId,
    dir: DesiredDirection,
) -> Result<Decision> {
    let d = model.infer(tool, object, action)?;
    Ok(decide(&d.marginal(dir.axis), dir))
}

/// All views of one entity.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewSet {
    pub id: String,
    pub views: Vec<FeatureVector>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SelectionRow {
    pub action: ActionId,
    pub tool: String,
    pub selected: usize,
    pub total: usize,
}

impl SelectionRow {
    pub fn selection_rate(&self) -> f64 {
        self.selected as f64 / self.total as f64
    }
}

/// Selection rate of every tool for every action, over the cross product of
/// tool views and object views. Desired directions come from the model's
/// direction map.
pub fn tool_selection_table(
    model: &AffordanceModel,
    tools: &[ViewSet],
    objects: &[ViewSet],
    actions: &[ActionId],
) -> Result<Vec<SelectionRow>> {
    if objects.is_empty() {
        return Err(Error::MissingViews("<objects>".into()));
    }
    for vs in tools.iter().chain(objects) {
        if vs.views.is_empty() {
            return Err(Error::MissingViews(vs.id.clone()));
        }
    }
    let mut rows = Vec::with_capacity(actions.len() * tools.len());
    for &action in actions {
        let dir = model.direction_map.get(action);
        for tool in tools {
            let mut selected = 0;
            let mut total = 0;
            for tv in &tool.views {
                for obj in objects {
                    for ov in &obj.views {
                        if select_tool(model, tv, ov, action, dir)? == Decision::Selected {
                            selected += 1;
                        }
                        total += 1;
                    }
                }
            }
            rows.push(SelectionRow {
                action,
                tool: tool.id.clone(),
                selected,
                total,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decision_rule() {
        let neg = DesiredDirection::new(Axis::X, Sign::Negative);
        assert_eq!(decide(&[0.5, 0.4, 0.1, 0.0, 0.0], neg), Decision::Selected);
        assert_eq!(decide(&[0.2; 5], neg), Decision::Rejected);
        assert_eq!(decide(&[0.25, 0.25, 0.5, 0.0, 0.0], neg), Decision::Rejected);
        let pos = DesiredDirection::new(Axis::Y, Sign::Positive);
        assert_eq!(decide(&[0.0, 0.0, 0.1, 0.5, 0.4], pos), Decision::Selected);
        assert_eq!(decide(&[0.5, 0.4, 0.1, 0.0, 0.0], pos), Decision::Rejected);
    }

    #[test]
    fn desired_bins_skip_centre() {
        for sign in [Sign::Negative, Sign::Positive] {
            let d = DesiredDirection::new(Axis::X, sign);
            assert!(!d.desired_bins().contains(&2));
        }
    }

    #[test]
    fn taps_map_to_opposite_signs_of_one_axis() {
        let m = DirectionMap::default();
        let r = m.get(ActionId::TapFromRight);
        let l = m.get(ActionId::TapFromLeft);
        assert_eq!(r.axis, l.axis);
        assert_ne!(r.sign, l.sign);
        assert_eq!(m.get(ActionId::Draw), DesiredDirection::new(Axis::Y, Sign::Negative));
    }

    #[test]
    fn direction_map_overrides() {
        let text = r#"
            tapFromRight = { axis = "X", sign = "positive" }
            tapFromLeft = { axis = "X", sign = "negative" }
            draw = { axis = "Y", sign = "positive" }
            push = { axis = "Y", sign = "negative" }
        "#;
        let m = DirectionMap::parse(text).unwrap();
        assert_eq!(m.draw.sign, Sign::Positive);
        let json = serde_json::to_string(&m).unwrap();
        assert_eq!(DirectionMap::parse(&json).unwrap(), m);
        assert!(DirectionMap::parse("draw = 3").is_err());
    }
}
