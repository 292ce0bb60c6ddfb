//! Seeded desk-scale stand-in for the robot.
//!
//! Silhouettes are 2D polygon approximations of the three hand postures, the
//! three tools and the two target objects, seen from above. Views differ by
//! rotation, scale, foreshortening and a little vertex noise. Effects come
//! from a fixed per-(family, action) mean displacement plus bounded Gaussian
//! noise.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::affordance::ActionId;
use crate::data::{Dataset, EntityKind, EntityRecord, TrialRecord};
use crate::error::{Error, Result};
use crate::shape::{extract_features, Contour, Point};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ManipFamily {
    StraightHand,
    BentHand,
    ArchedHand,
    Stick,
    Rake,
    Hook,
}

impl ManipFamily {
    pub const HANDS: [ManipFamily; 3] = [
        ManipFamily::StraightHand,
        ManipFamily::BentHand,
        ManipFamily::ArchedHand,
    ];
    pub const TOOLS: [ManipFamily; 3] = [ManipFamily::Stick, ManipFamily::Hook, ManipFamily::Rake];

    pub fn name(self) -> &'static str {
        match self {
            ManipFamily::StraightHand => "straight_hand",
            ManipFamily::BentHand => "bent_hand",
            ManipFamily::ArchedHand => "arched_hand",
            ManipFamily::Stick => "stick",
            ManipFamily::Rake => "rake",
            ManipFamily::Hook => "hook",
        }
    }

    pub fn is_hand(self) -> bool {
        Self::HANDS.contains(&self)
    }
}

impl fmt::Display for ManipFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ManipFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::HANDS
            .into_iter()
            .chain(Self::TOOLS)
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidSpec(format!("unknown manipulator family {s:?}")))
    }
}

/// Parameters of a manipulator silhouette, in pixels.
///
/// Ranges: `length` in [60, 400]; `width` in [8, 0.9 * length]; `count`
/// (fingers or rake teeth) in [2, 8]; `curvature` in [0, 1] (finger curl
/// for the arched hand, relative tip length for the hook).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ManipSpec {
    pub family: ManipFamily,
    pub length: f64,
    pub width: f64,
    pub count: usize,
    pub curvature: f64,
    pub seed: u64,
}

impl ManipSpec {
    /// Default proportions for a family.
    pub fn new(family: ManipFamily, seed: u64) -> Self {
        let (length, width, count, curvature) = match family {
            ManipFamily::StraightHand => (130.0, 56.0, 4, 0.0),
            ManipFamily::BentHand => (80.0, 58.0, 4, 0.0),
            ManipFamily::ArchedHand => (100.0, 60.0, 4, 0.6),
            ManipFamily::Stick => (150.0, 14.0, 0, 0.0),
            ManipFamily::Rake => (150.0, 84.0, 4, 0.0),
            ManipFamily::Hook => (150.0, 14.0, 0, 0.3),
        };
        ManipSpec {
            family,
            length,
            width,
            count,
            curvature,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(format!("{}: {msg}", self.family)));
        if !(60.0..=400.0).contains(&self.length) {
            return bad(format!("length {} outside [60, 400]", self.length));
        }
        if !(self.width >= 8.0 && self.width <= 0.9 * self.length) {
            return bad(format!("width {} outside [8, 0.9 * length]", self.width));
        }
        if !(0.0..=1.0).contains(&self.curvature) {
            return bad(format!("curvature {} outside [0, 1]", self.curvature));
        }
        let needs_count = matches!(
            self.family,
            ManipFamily::BentHand | ManipFamily::ArchedHand | ManipFamily::Rake
        );
        if needs_count && !(2..=8).contains(&self.count) {
            return bad(format!("count {} outside [2, 8]", self.count));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ObjectKind {
    LegoPiece,
    Pear,
}

impl ObjectKind {
    pub const ALL: [ObjectKind; 2] = [ObjectKind::LegoPiece, ObjectKind::Pear];

    pub fn name(self) -> &'static str {
        match self {
            ObjectKind::LegoPiece => "lego_piece",
            ObjectKind::Pear => "pear",
        }
    }
}

/// Random viewpoint change applied to a canonical silhouette.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewJitter {
    pub rotation: f64,
    pub scale: f64,
    /// Direction along which the view is foreshortened.
    pub tilt_direction: f64,
    /// Foreshortening factor in (0, 1].
    pub tilt_factor: f64,
    /// Standard deviation of per-vertex noise, relative to the shape size.
    pub vertex_noise: f64,
    pub seed: u64,
}

impl ViewJitter {
    pub fn identity() -> Self {
        ViewJitter {
            rotation: 0.0,
            scale: 1.0,
            tilt_direction: 0.0,
            tilt_factor: 1.0,
            vertex_noise: 0.0,
            seed: 0,
        }
    }

    pub fn sample(seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ViewJitter {
            rotation: rng.random_range(0.0..TAU),
            scale: rng.random_range(0.8..1.25),
            tilt_direction: rng.random_range(0.0..PI),
            tilt_factor: rng.random_range(0.85..=1.0),
            vertex_noise: 0.002,
            seed: rng.random(),
        }
    }

    pub fn apply(&self, points: &[Point]) -> Result<Contour> {
        let size = bbox_size(points);
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let noise = Normal::new(0.0, (self.vertex_noise * size).max(f64::MIN_POSITIVE))
            .expect("positive standard deviation");
        let (sd, cd) = self.tilt_direction.sin_cos();
        let (sr, cr) = self.rotation.sin_cos();
        let out: Vec<Point> = points
            .iter()
            .map(|p| {
                let (mut x, mut y) = (p.x, p.y);
                if self.vertex_noise > 0.0 {
                    x += noise.sample(&mut rng);
                    y += noise.sample(&mut rng);
                }
                // foreshorten along the tilt direction
                let along = x * cd + y * sd;
                let shrink = (self.tilt_factor - 1.0) * along;
                x += shrink * cd;
                y += shrink * sd;
                Point::new(
                    self.scale * (cr * x - sr * y),
                    self.scale * (sr * x + cr * y),
                )
            })
            .collect();
        Contour::new(out).map_err(|e| Error::InvalidSpec(format!("jittered view: {e}")))
    }
}

fn bbox_size(points: &[Point]) -> f64 {
    let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
    for p in points {
        x0 = x0.min(p.x);
        y0 = y0.min(p.y);
        x1 = x1.max(p.x);
        y1 = y1.max(p.y);
    }
    (x1 - x0).max(y1 - y0)
}

/// Appends points of an elliptical arc, excluding the start point.
#[allow(clippy::too_many_arguments)]
fn arc(out: &mut Vec<Point>, cx: f64, cy: f64, rx: f64, ry: f64, a0: f64, a1: f64, n: usize) {
    for k in 1..=n {
        let t = a0 + (a1 - a0) * k as f64 / n as f64;
        out.push(Point::new(cx + rx * t.cos(), cy + ry * t.sin()));
    }
}

/// Thumb resting against the left side of the palm, from `top` down to
/// `bottom`, protruding by `depth`.
fn thumb(out: &mut Vec<Point>, top: f64, bottom: f64, depth: f64) {
    out.push(Point::new(-0.5 * depth, top - 0.1 * (top - bottom)));
    out.push(Point::new(-depth, top - 0.35 * (top - bottom)));
    out.push(Point::new(-depth, bottom + 0.25 * (top - bottom)));
    out.push(Point::new(-0.4 * depth, bottom));
}

/// Palm spanning x in [0, w], y in [0, palm], with the fingers (or any other
/// top profile) given by `top` from right to left.
fn hand_outline(w: f64, palm: f64, top: Vec<Point>, thumb_depth: f64) -> Vec<Point> {
    let mut pts = vec![Point::new(0.0, 0.0), Point::new(w, 0.0), Point::new(w, palm)];
    pts.extend(top);
    pts.push(Point::new(0.0, palm));
    thumb(&mut pts, palm * 0.9, palm * 0.2, thumb_depth);
    pts
}

fn straight_hand(s: &ManipSpec) -> Vec<Point> {
    let w = s.width;
    let palm = 0.45 * s.length;
    let top = s.length;
    // fingers held together: a mitten with a rounded top
    let mut fingers = vec![Point::new(w, top - 0.12 * s.length)];
    arc(
        &mut fingers,
        0.5 * w,
        top - 0.12 * s.length,
        0.5 * w,
        0.12 * s.length,
        0.0,
        PI,
        16,
    );
    hand_outline(w, palm, fingers, 0.2 * w)
}

/// `count` fingers of the given lengths separated by gaps of `gap` pixels,
/// rising from the top of the palm. Finger `k` is tilted by `splay[k]`.
fn finger_row(w: f64, palm: f64, count: usize, gap: f64, lengths: &[f64], splay: &[f64]) -> Vec<Point> {
    let fw = (w - gap * (count - 1) as f64) / count as f64;
    let mut pts = Vec::new();
    for f in (0..count).rev() {
        let x0 = f as f64 * (fw + gap);
        let x1 = x0 + fw;
        let len = lengths[f];
        let dx = len * splay[f].sin();
        let dy = len * splay[f].cos();
        if f + 1 < count {
            // floor of the gap to the right of this finger
            pts.push(Point::new(x1, palm));
        }
        pts.push(Point::new(x1 + dx, palm + dy));
        let mut tip = Vec::new();
        arc(
            &mut tip,
            0.5 * (x0 + x1) + dx,
            palm + dy,
            0.5 * fw,
            0.25 * fw,
            0.0,
            PI,
            6,
        );
        pts.extend(tip);
        if f > 0 {
            pts.push(Point::new(x0, palm));
        }
    }
    pts
}

fn bent_hand(s: &ManipSpec) -> Vec<Point> {
    let w = s.width;
    let palm = 0.6 * s.length;
    let knuckle = 0.4 * s.length - 0.1 * w;
    let n = s.count;
    let lengths: Vec<f64> = (0..n)
        .map(|k| knuckle * (1.0 - 0.08 * (k as f64 - 1.0).abs()))
        .collect();
    let splay = vec![0.0; n];
    let top = finger_row(w, palm, n, 0.06 * w, &lengths, &splay);
    hand_outline(w, palm, top, 0.2 * w)
}

fn arched_hand(s: &ManipSpec) -> Vec<Point> {
    let w = s.width;
    let palm = 0.5 * s.length;
    let n = s.count;
    let reach = 0.5 * s.length;
    let lengths: Vec<f64> = (0..n)
        .map(|k| reach * (1.0 - 0.1 * (k as f64 - 1.0).abs()))
        .collect();
    // fingers fan out; curl bends them sideways
    let splay: Vec<f64> = (0..n)
        .map(|k| {
            let centred = k as f64 - 0.5 * (n - 1) as f64;
            0.18 * centred - 0.35 * s.curvature
        })
        .collect();
    let top = finger_row(w, palm, n, 0.08 * w, &lengths, &splay);
    hand_outline(w, palm, top, 0.25 * w)
}

fn stick(s: &ManipSpec) -> Vec<Point> {
    let (l, w) = (s.length, s.width);
    vec![
        Point::new(0.0, 0.0),
        Point::new(w, 0.0),
        Point::new(w, l),
        Point::new(0.0, l),
    ]
}

/// Straight shaft with a perpendicular tip of `curvature * length` at the top.
fn hook(s: &ManipSpec) -> Vec<Point> {
    let (l, w) = (s.length, s.width);
    let tip = (s.curvature * l).max(1.5 * w);
    vec![
        Point::new(0.0, 0.0),
        Point::new(w, 0.0),
        Point::new(w, l - w),
        Point::new(tip, l - w),
        Point::new(tip, l),
        Point::new(0.0, l),
    ]
}

/// Fan-shaped head widening from the handle to a bar carrying `count` teeth.
fn rake(s: &ManipSpec) -> Vec<Point> {
    let (l, w) = (s.length, s.width);
    let n = s.count;
    let handle = 0.2 * w;
    let head = 0.72 * l;
    let teeth = l - head;
    let gap = 0.12 * w;
    let tw = (w - gap * (n - 1) as f64) / n as f64;
    let mut pts = vec![
        Point::new(0.5 * (w - handle), 0.0),
        Point::new(0.5 * (w + handle), 0.0),
        Point::new(w, head),
    ];
    for k in (0..n).rev() {
        let x0 = k as f64 * (tw + gap);
        let x1 = x0 + tw;
        if k + 1 < n {
            pts.push(Point::new(x1, head));
        }
        pts.push(Point::new(x1, head + teeth));
        pts.push(Point::new(x0, head + teeth));
        pts.push(Point::new(x0, head));
    }
    pts
}

/// Canonical (unjittered) outline of a manipulator, tip pointing up.
pub fn canonical_outline(spec: &ManipSpec) -> Result<Vec<Point>> {
    spec.validate()?;
    Ok(match spec.family {
        ManipFamily::StraightHand => straight_hand(spec),
        ManipFamily::BentHand => bent_hand(spec),
        ManipFamily::ArchedHand => arched_hand(spec),
        ManipFamily::Stick => stick(spec),
        ManipFamily::Rake => rake(spec),
        ManipFamily::Hook => hook(spec),
    })
}

/// Silhouette of a manipulator seen from the viewpoint drawn from
/// `spec.seed`.
pub fn generate_contour(spec: &ManipSpec) -> Result<Contour> {
    let outline = canonical_outline(spec)?;
    ViewJitter::sample(spec.seed).apply(&outline)
}

fn view_seed(base: u64, view: usize) -> u64 {
    base.wrapping_mul(0x9e37_79b9_7f4a_7c15)
        .wrapping_add(view as u64)
        .rotate_left(17)
}

/// `n` distinct views of a manipulator.
pub fn manip_views(spec: &ManipSpec, n: usize) -> Result<Vec<Contour>> {
    let outline = canonical_outline(spec)?;
    (0..n)
        .map(|v| ViewJitter::sample(view_seed(spec.seed, v)).apply(&outline))
        .collect()
}

pub fn object_outline(kind: ObjectKind, size: f64) -> Vec<Point> {
    match kind {
        ObjectKind::LegoPiece => {
            // 2x4 brick seen from above: a rectangle
            let (w, l) = (0.5 * size, size);
            vec![
                Point::new(0.0, 0.0),
                Point::new(w, 0.0),
                Point::new(w, l),
                Point::new(0.0, l),
            ]
        }
        ObjectKind::Pear => {
            // round body open at the top, closed by a tapering neck
            let r = 0.32 * size;
            let half_gap = 0.5;
            let n = 40;
            let mut pts: Vec<Point> = (0..n)
                .map(|k| {
                    let t = FRAC_PI_2 + half_gap + (TAU - 2.0 * half_gap) * k as f64 / n as f64;
                    Point::new(r * t.cos(), r * t.sin())
                })
                .collect();
            pts.push(Point::new(0.0, 1.75 * r));
            pts
        }
    }
}

pub fn object_views(kind: ObjectKind, seed: u64, n: usize) -> Result<Vec<Contour>> {
    let outline = object_outline(kind, 60.0);
    (0..n)
        .map(|v| ViewJitter::sample(view_seed(seed ^ 0xb1ec7, v)).apply(&outline))
        .collect()
}

/// Mean displacement per (family, action) plus bounded Gaussian noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EffectRule {
    /// Noise standard deviation in meters, per axis.
    pub noise_sigma: f64,
    /// Noise is clamped to this many standard deviations.
    pub noise_bound: f64,
}

impl Default for EffectRule {
    fn default() -> Self {
        EffectRule {
            noise_sigma: 0.01,
            noise_bound: 2.0,
        }
    }
}

impl EffectRule {
    pub fn noiseless() -> Self {
        EffectRule {
            noise_sigma: 0.0,
            ..Self::default()
        }
    }

    /// Mean (x, y) displacement in meters. The robot sits at negative y.
    pub fn mean(&self, family: ManipFamily, action: ActionId) -> (f64, f64) {
        use ManipFamily::*;
        // (tap magnitude, push magnitude, draw displacement)
        let (tap, push, draw) = match family {
            StraightHand | Stick => (0.09, 0.09, 0.0),
            BentHand | ArchedHand | Rake => (0.04, 0.04, -0.09),
            Hook => (0.09, 0.09, -0.04),
        };
        match action {
            ActionId::TapFromRight => (-tap, 0.0),
            ActionId::TapFromLeft => (tap, 0.0),
            ActionId::Draw => (0.0, draw),
            ActionId::Push => (0.0, push),
        }
    }

    pub fn simulate<R: Rng>(&self, family: ManipFamily, action: ActionId, rng: &mut R) -> (f64, f64) {
        let (mx, my) = self.mean(family, action);
        if self.noise_sigma <= 0.0 {
            return (mx, my);
        }
        let normal = Normal::new(0.0, 1.0).expect("unit normal");
        let mut draw = || {
            let z: f64 = normal.sample(rng);
            self.noise_sigma * z.clamp(-self.noise_bound, self.noise_bound)
        };
        let nx = draw();
        let ny = draw();
        (mx + nx, my + ny)
    }
}

/// Displacement of the target object for one trial with the default rule.
pub fn simulate_trial(spec: &ManipSpec, action: ActionId, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    EffectRule::default().simulate(spec.family, action, &mut rng)
}

/// Parameters of a generated dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub seed: u64,
    pub views: usize,
    pub rule: EffectRule,
    /// Manipulators with their trial count per (object, action).
    pub manipulators: Vec<(ManipFamily, usize)>,
}

impl SynthConfig {
    /// The three hand postures. The straight hand gets as many trials as the
    /// two curled postures together, so the median split of the first
    /// manipulator component falls between straight and curled shapes.
    pub fn hands(seed: u64) -> Self {
        SynthConfig {
            seed,
            views: 10,
            rule: EffectRule::default(),
            manipulators: vec![
                (ManipFamily::StraightHand, 10),
                (ManipFamily::BentHand, 5),
                (ManipFamily::ArchedHand, 5),
            ],
        }
    }

    pub fn tools(seed: u64) -> Self {
        SynthConfig {
            manipulators: ManipFamily::TOOLS.iter().map(|&f| (f, 5)).collect(),
            ..Self::hands(seed)
        }
    }
}

fn entity_views(
    id: &str,
    kind: EntityKind,
    contours: Vec<Contour>,
    out: &mut Vec<EntityRecord>,
) -> Result<()> {
    for (v, c) in contours.iter().enumerate() {
        out.push(EntityRecord {
            entity_id: id.to_string(),
            kind,
            view_id: format!("v{v:02}"),
            features: extract_features(c)?,
        });
    }
    Ok(())
}

/// Generates entities (manipulator and object views) and trials.
pub fn generate_dataset(cfg: &SynthConfig) -> Result<Dataset> {
    let mut entities = Vec::new();
    for &(family, _) in &cfg.manipulators {
        let spec = ManipSpec::new(family, cfg.seed ^ ((family as u64 + 1) * 0x51ed));
        let kind = if family.is_hand() {
            EntityKind::Hand
        } else {
            EntityKind::Tool
        };
        entity_views(family.name(), kind, manip_views(&spec, cfg.views)?, &mut entities)?;
    }
    for kind in ObjectKind::ALL {
        let seed = cfg.seed ^ ((kind as u64 + 11) * 0x0bec);
        entity_views(
            kind.name(),
            EntityKind::Object,
            object_views(kind, seed, cfg.views)?,
            &mut entities,
        )?;
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut trials = Vec::new();
    for &(family, repetitions) in &cfg.manipulators {
        for object in ObjectKind::ALL {
            for action in ActionId::ALL {
                for _ in 0..repetitions {
                    let (x, y) = cfg.rule.simulate(family, action, &mut rng);
                    trials.push(TrialRecord {
                        trial_id: format!("t{:04}", trials.len() + 1),
                        manipulator_id: family.name().to_string(),
                        object_id: object.name().to_string(),
                        action,
                        effect_x_m: x,
                        effect_y_m: y,
                    });
                }
            }
        }
    }
    Dataset::new(entities, trials)
}
