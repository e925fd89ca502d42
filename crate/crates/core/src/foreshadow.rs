//! Visual foreshadowing: effects shown ahead of a key event in the race.
//!
//! A [`ForeshadowSpec`] is a (visual effects, timing, duration) triple bound
//! to target items and to the period of the event it anticipates. Timing and
//! duration are authored in period units and must end at or before the
//! event. Four effects are provided:
//!
//! | effect       | class    | rendering                                     |
//! |--------------|----------|-----------------------------------------------|
//! | Prologue     | explicit | caption line under the title                  |
//! | Pre-scene    | explicit | ghost bar at the target's event-time geometry |
//! | Contour      | implicit | outline around each target bar                |
//! | De-emphasis  | implicit | non-target bars drop to a low opacity (0.2)   |
//!
//! [`StyleResolver`] turns a set of validated specs into one [`StyleOverlay`]
//! per frame. Overlapping specs compose with commutative rules (min opacity,
//! contour and ghost union, banners in spec-id order) so the result never
//! depends on the order specs were listed in.

use std::cmp::Ordering;
use std::collections::HashSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::color::Rgb;
use crate::compile::{max_visible_value, AnimationSettings, FrameState, KeyframeTimeline};
use crate::data::{ItemRecord, RankingDataset};

pub const DEFAULT_OFF_TARGET_OPACITY: f64 = 0.2;
pub const DEFAULT_CONTOUR_WIDTH: f64 = 3.0;
pub const DEFAULT_CONTOUR_COLOR: Rgb = Rgb(40, 40, 40);
/// Separator between concatenated Prologue captions.
pub const BANNER_SEPARATOR: &str = " \u{2014} ";

fn default_opacity() -> f64 {
    DEFAULT_OFF_TARGET_OPACITY
}

fn default_stroke_width() -> f64 {
    DEFAULT_CONTOUR_WIDTH
}

fn default_contour_color() -> Rgb {
    DEFAULT_CONTOUR_COLOR
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Effect {
    Prologue {
        text: String,
    },
    PreScene,
    Contour {
        #[serde(default = "default_stroke_width")]
        stroke_width: f64,
        #[serde(default = "default_contour_color")]
        color: Rgb,
    },
    DeEmphasis {
        #[serde(default = "default_opacity")]
        off_target_opacity: f64,
    },
}

impl Effect {
    pub fn contour() -> Self {
        Effect::Contour {
            stroke_width: DEFAULT_CONTOUR_WIDTH,
            color: DEFAULT_CONTOUR_COLOR,
        }
    }

    pub fn de_emphasis() -> Self {
        Effect::DeEmphasis {
            off_target_opacity: DEFAULT_OFF_TARGET_OPACITY,
        }
    }

    pub fn class(&self) -> ForeshadowClass {
        classify(self)
    }

    pub fn name(&self) -> &'static str {
        match self {
            Effect::Prologue { .. } => "prologue",
            Effect::PreScene => "pre_scene",
            Effect::Contour { .. } => "contour",
            Effect::DeEmphasis { .. } => "de_emphasis",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForeshadowClass {
    /// Openly indicates the outcome.
    Explicit,
    /// Only hints at the items involved.
    Implicit,
}

pub fn classify(effect: &Effect) -> ForeshadowClass {
    match effect {
        Effect::Prologue { .. } | Effect::PreScene => ForeshadowClass::Explicit,
        Effect::Contour { .. } | Effect::DeEmphasis { .. } => ForeshadowClass::Implicit,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForeshadowSpec {
    pub id: String,
    pub effects: Vec<Effect>,
    pub target_items: Vec<String>,
    /// Start, in period units.
    pub timing: f64,
    /// Length, in period units.
    pub duration: f64,
    /// Period coordinate of the event being foreshadowed.
    pub target_period: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    EmptyId,
    DuplicateSpecId,
    NoEffects,
    NoTargets,
    DuplicateTarget,
    UnknownTarget,
    NonFiniteTiming,
    NegativeTiming,
    NonPositiveDuration,
    EndsAfterEvent,
    EventOutOfRange,
    EmptyPrologueText,
    OpacityOutOfRange,
    NonPositiveStrokeWidth,
}

impl ViolationCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ViolationCode::EmptyId => "EmptyId",
            ViolationCode::DuplicateSpecId => "DuplicateSpecId",
            ViolationCode::NoEffects => "NoEffects",
            ViolationCode::NoTargets => "NoTargets",
            ViolationCode::DuplicateTarget => "DuplicateTarget",
            ViolationCode::UnknownTarget => "UnknownTarget",
            ViolationCode::NonFiniteTiming => "NonFiniteTiming",
            ViolationCode::NegativeTiming => "NegativeTiming",
            ViolationCode::NonPositiveDuration => "NonPositiveDuration",
            ViolationCode::EndsAfterEvent => "EndsAfterEvent",
            ViolationCode::EventOutOfRange => "EventOutOfRange",
            ViolationCode::EmptyPrologueText => "EmptyPrologueText",
            ViolationCode::OpacityOutOfRange => "OpacityOutOfRange",
            ViolationCode::NonPositiveStrokeWidth => "NonPositiveStrokeWidth",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub spec_id: String,
    pub message: String,
}

impl Violation {
    fn new(code: ViolationCode, spec_id: &str, message: impl Into<String>) -> Self {
        Self {
            code,
            spec_id: spec_id.to_string(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} spec={} {}", self.code.as_str(), self.spec_id, self.message)
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ForeshadowError {
    #[error("spec `{id}` does not validate against the timeline")]
    UnvalidatedSpec { id: String, violations: Vec<Violation> },
}

/// Checks one spec against a dataset. Returns every violated rule.
pub fn validate_spec(spec: &ForeshadowSpec, dataset: &RankingDataset) -> Result<(), Vec<Violation>> {
    check_spec(spec, dataset.items(), dataset.period_count())
}

/// Validates a whole spec list: each spec individually, plus unique ids.
pub fn validate_specs(specs: &[ForeshadowSpec], dataset: &RankingDataset) -> Result<(), Vec<Violation>> {
    check_all(specs, dataset.items(), dataset.period_count())
}

fn check_all(specs: &[ForeshadowSpec], items: &[ItemRecord], periods: usize) -> Result<(), Vec<Violation>> {
    let mut out = Vec::new();
    let mut ids = HashSet::new();
    for spec in specs {
        if !spec.id.is_empty() && !ids.insert(spec.id.as_str()) {
            out.push(Violation::new(ViolationCode::DuplicateSpecId, &spec.id, "spec id already used"));
        }
        if let Err(v) = check_spec(spec, items, periods) {
            out.extend(v);
        }
    }
    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

fn check_spec(spec: &ForeshadowSpec, items: &[ItemRecord], periods: usize) -> Result<(), Vec<Violation>> {
    use ViolationCode::*;
    let id = spec.id.as_str();
    let mut out = Vec::new();

    if id.is_empty() {
        out.push(Violation::new(EmptyId, id, "spec id is empty"));
    }
    if spec.effects.is_empty() {
        out.push(Violation::new(NoEffects, id, "at least one effect is required"));
    }
    for effect in &spec.effects {
        match effect {
            Effect::Prologue { text } if text.trim().is_empty() => {
                out.push(Violation::new(EmptyPrologueText, id, "prologue text is empty"));
            }
            Effect::Contour { stroke_width, .. } if !(stroke_width.is_finite() && *stroke_width > 0.0) => {
                out.push(Violation::new(
                    NonPositiveStrokeWidth,
                    id,
                    format!("contour stroke_width {stroke_width} must be positive"),
                ));
            }
            Effect::DeEmphasis { off_target_opacity: o } if !(*o > 0.0 && *o <= 1.0) => {
                out.push(Violation::new(
                    OpacityOutOfRange,
                    id,
                    format!("off_target_opacity {o} must be in (0, 1]"),
                ));
            }
            _ => {}
        }
    }

    if spec.target_items.is_empty() {
        out.push(Violation::new(NoTargets, id, "at least one target item is required"));
    }
    let mut seen = HashSet::new();
    for target in &spec.target_items {
        if !seen.insert(target.as_str()) {
            out.push(Violation::new(DuplicateTarget, id, format!("target `{target}` listed twice")));
        } else if !items.iter().any(|it| &it.id == target) {
            out.push(Violation::new(UnknownTarget, id, format!("unknown item `{target}`")));
        }
    }

    let (timing, duration, event) = (spec.timing, spec.duration, spec.target_period);
    if !(timing.is_finite() && duration.is_finite() && event.is_finite()) {
        out.push(Violation::new(NonFiniteTiming, id, "timing, duration and target_period must be finite"));
    } else {
        if timing < 0.0 {
            out.push(Violation::new(NegativeTiming, id, format!("timing {timing} is negative")));
        }
        if duration <= 0.0 {
            out.push(Violation::new(NonPositiveDuration, id, format!("duration {duration} must be positive")));
        }
        if timing + duration > event {
            out.push(Violation::new(
                EndsAfterEvent,
                id,
                format!("effect ends at {} after the event at {event}", timing + duration),
            ));
        }
        let last = periods.saturating_sub(1) as f64;
        if event < 0.0 || event > last {
            out.push(Violation::new(
                EventOutOfRange,
                id,
                format!("target_period {event} outside [0, {last}]"),
            ));
        }
    }

    if out.is_empty() {
        Ok(())
    } else {
        Err(out)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContourStyle {
    pub stroke_width: f64,
    pub color: Rgb,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemStyle {
    pub opacity: f64,
    /// Sorted, without duplicates.
    pub contours: Vec<ContourStyle>,
}

impl Default for ItemStyle {
    fn default() -> Self {
        Self {
            opacity: 1.0,
            contours: Vec::new(),
        }
    }
}

/// Event-time geometry of a Pre-scene target.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ghost {
    pub item: usize,
    pub item_id: String,
    pub target_period: f64,
    pub slot_position: f64,
    pub value: f64,
    /// Largest visible value at the event frame; the ghost's bar width is
    /// `value / reference_max` of the chart width, as it will be then.
    pub reference_max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleOverlay {
    /// Parallel to the timeline's item order.
    pub items: Vec<ItemStyle>,
    pub banner_text: Option<String>,
    /// Sorted by (item, target_period), without duplicates.
    pub ghosts: Vec<Ghost>,
}

impl StyleOverlay {
    pub fn identity(item_count: usize) -> Self {
        Self {
            items: vec![ItemStyle::default(); item_count],
            banner_text: None,
            ghosts: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ActiveInterval {
    pub spec_id: String,
    pub start_s: f64,
    pub end_s: f64,
    pub target_period_s: f64,
}

/// Display intervals in seconds, sorted by start then spec id.
pub fn active_intervals(specs: &[ForeshadowSpec], settings: &AnimationSettings) -> Vec<ActiveInterval> {
    let spp = settings.seconds_per_period;
    let mut out: Vec<ActiveInterval> = specs
        .iter()
        .map(|s| ActiveInterval {
            spec_id: s.id.clone(),
            start_s: s.timing * spp,
            end_s: (s.timing + s.duration) * spp,
            target_period_s: s.target_period * spp,
        })
        .collect();
    out.sort_by(|a, b| a.start_s.total_cmp(&b.start_s).then_with(|| a.spec_id.cmp(&b.spec_id)));
    out
}

struct PreparedSpec<'a> {
    spec: &'a ForeshadowSpec,
    start_s: f64,
    end_s: f64,
    targets: Vec<usize>,
    ghosts: Vec<Ghost>,
}

/// Resolves validated specs into per-frame overlays for one timeline.
pub struct StyleResolver<'a> {
    item_count: usize,
    specs: Vec<PreparedSpec<'a>>,
}

impl<'a> StyleResolver<'a> {
    pub fn new(specs: &'a [ForeshadowSpec], timeline: &KeyframeTimeline) -> Result<Self, ForeshadowError> {
        let periods = timeline.period_count();
        for spec in specs {
            check_spec(spec, &timeline.items, periods).map_err(|violations| {
                ForeshadowError::UnvalidatedSpec {
                    id: spec.id.clone(),
                    violations,
                }
            })?;
        }
        let spp = timeline.settings.seconds_per_period;
        let prepared = specs
            .iter()
            .map(|spec| {
                let targets: Vec<usize> = spec
                    .target_items
                    .iter()
                    .filter_map(|id| timeline.item_index(id))
                    .collect();
                let ghosts = if spec.effects.iter().any(|e| matches!(e, Effect::PreScene)) {
                    let event_state = timeline.state_at(spec.target_period);
                    let reference_max = max_visible_value(&event_state);
                    targets
                        .iter()
                        .map(|&item| Ghost {
                            item,
                            item_id: timeline.items[item].id.clone(),
                            target_period: spec.target_period,
                            slot_position: event_state[item].slot_position,
                            value: event_state[item].value,
                            reference_max,
                        })
                        .collect()
                } else {
                    Vec::new()
                };
                PreparedSpec {
                    spec,
                    start_s: spec.timing * spp,
                    end_s: (spec.timing + spec.duration) * spp,
                    targets,
                    ghosts,
                }
            })
            .collect();
        Ok(Self {
            item_count: timeline.items.len(),
            specs: prepared,
        })
    }

    pub fn is_active(&self, spec_index: usize, frame: &FrameState) -> bool {
        let p = &self.specs[spec_index];
        p.start_s <= frame.time_s && frame.time_s < p.end_s
    }

    pub fn resolve(&self, frame: &FrameState) -> StyleOverlay {
        let mut overlay = StyleOverlay::identity(self.item_count);
        let mut banners: Vec<(&str, usize, &str)> = Vec::new();

        for (i, prepared) in self.specs.iter().enumerate() {
            if !self.is_active(i, frame) {
                continue;
            }
            for (k, effect) in prepared.spec.effects.iter().enumerate() {
                match effect {
                    Effect::Prologue { text } => banners.push((&prepared.spec.id, k, text)),
                    Effect::PreScene => overlay.ghosts.extend(prepared.ghosts.iter().cloned()),
                    Effect::Contour { stroke_width, color } => {
                        for &t in &prepared.targets {
                            overlay.items[t].contours.push(ContourStyle {
                                stroke_width: *stroke_width,
                                color: *color,
                            });
                        }
                    }
                    Effect::DeEmphasis { off_target_opacity } => {
                        for (item, style) in overlay.items.iter_mut().enumerate() {
                            if !prepared.targets.contains(&item) {
                                style.opacity = style.opacity.min(*off_target_opacity);
                            }
                        }
                    }
                }
            }
        }

        for style in &mut overlay.items {
            style.contours.sort_by(cmp_contour);
            style.contours.dedup();
        }
        overlay
            .ghosts
            .sort_by(|a, b| a.item.cmp(&b.item).then_with(|| a.target_period.total_cmp(&b.target_period)));
        overlay.ghosts.dedup();
        if !banners.is_empty() {
            banners.sort();
            let parts: Vec<&str> = banners.iter().map(|(_, _, text)| *text).collect();
            overlay.banner_text = Some(parts.join(BANNER_SEPARATOR));
        }
        overlay
    }
}

fn cmp_contour(a: &ContourStyle, b: &ContourStyle) -> Ordering {
    a.stroke_width
        .total_cmp(&b.stroke_width)
        .then_with(|| a.color.cmp(&b.color))
}

/// Overlay for a single frame. Prefer [`StyleResolver`] when resolving many
/// frames of the same timeline.
pub fn resolve_styles(
    specs: &[ForeshadowSpec],
    frame: &FrameState,
    timeline: &KeyframeTimeline,
) -> Result<StyleOverlay, ForeshadowError> {
    Ok(StyleResolver::new(specs, timeline)?.resolve(frame))
}
