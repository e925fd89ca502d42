//! Compiles a dataset into a per-frame keyframe timeline.
//!
//! Every period boundary lands on a frame. Between two boundaries, values and
//! slot positions move from one period's state to the next along the chosen
//! easing curve; there is no hold phase.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::data::{ItemRecord, RankingDataset};

/// Products `p * seconds_per_period * fps` this close to an integer are
/// treated as that integer when placing boundary frames.
const FRAME_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CompileError {
    #[error("at least two periods are required")]
    TooFewPeriods,
    #[error("invalid animation settings: {0}")]
    InvalidSettings(&'static str),
    #[error("period index {index} outside [0, {max}]")]
    OutOfRange { index: f64, max: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Easing {
    #[default]
    Linear,
    CubicInOut,
}

impl Easing {
    /// Maps progress `t` in `[0, 1]` to eased progress in `[0, 1]`.
    /// Both curves are monotone non-decreasing with fixed endpoints.
    pub fn apply(self, t: f64) -> f64 {
        let t = t.clamp(0.0, 1.0);
        match self {
            Easing::Linear => t,
            Easing::CubicInOut => {
                if t < 0.5 {
                    4.0 * t * t * t
                } else {
                    let f = 2.0 * t - 2.0;
                    0.5 * f * f * f + 1.0
                }
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AnimationSettings {
    pub seconds_per_period: f64,
    pub fps: u32,
    pub top_n: usize,
    pub easing: Easing,
}

impl Default for AnimationSettings {
    fn default() -> Self {
        Self {
            seconds_per_period: 2.0,
            fps: 30,
            top_n: 10,
            easing: Easing::Linear,
        }
    }
}

impl AnimationSettings {
    pub fn validate(&self) -> Result<(), CompileError> {
        if !(self.seconds_per_period.is_finite() && self.seconds_per_period > 0.0) {
            return Err(CompileError::InvalidSettings("seconds_per_period must be positive"));
        }
        if self.fps == 0 {
            return Err(CompileError::InvalidSettings("fps must be at least 1"));
        }
        if self.top_n == 0 {
            return Err(CompileError::InvalidSettings("top_n must be at least 1"));
        }
        // Each period span needs at least one frame so boundaries stay distinct.
        if self.frames_per_period() < 1.0 - FRAME_SNAP {
            return Err(CompileError::InvalidSettings(
                "seconds_per_period * fps must be at least 1",
            ));
        }
        Ok(())
    }

    pub fn frames_per_period(&self) -> f64 {
        self.seconds_per_period * f64::from(self.fps)
    }

    /// `ceil((periods - 1) * seconds_per_period * fps) + 1`.
    pub fn frame_count(&self, periods: usize) -> usize {
        boundary_frame(periods.saturating_sub(1), self) + 1
    }
}

/// Frame index of period boundary `p`.
fn boundary_frame(p: usize, settings: &AnimationSettings) -> usize {
    let exact = p as f64 * settings.frames_per_period();
    let nearest = exact.round();
    if (exact - nearest).abs() <= FRAME_SNAP * exact.max(1.0) {
        nearest as usize
    } else {
        exact.ceil() as usize
    }
}

/// Converts a (possibly fractional) period coordinate to seconds.
pub fn period_to_time(
    period_index: f64,
    periods: usize,
    settings: &AnimationSettings,
) -> Result<f64, CompileError> {
    let max = periods.saturating_sub(1) as f64;
    if !(0.0..=max).contains(&period_index) {
        return Err(CompileError::OutOfRange {
            index: period_index,
            max,
        });
    }
    Ok(period_index * settings.seconds_per_period)
}

/// Descending-value ranks (1 = largest). Ties go to the lexicographically
/// smaller id. `values` and `ids` are parallel slices.
pub fn compute_ranks<S: AsRef<str>>(values: &[f64], ids: &[S]) -> Vec<usize> {
    assert_eq!(values.len(), ids.len(), "one id per value");
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_unstable_by(|&a, &b| {
        values[b]
            .partial_cmp(&values[a])
            .unwrap_or(Ordering::Equal)
            .then_with(|| ids[a].as_ref().cmp(ids[b].as_ref()))
    });
    let mut ranks = vec![0; values.len()];
    for (pos, &idx) in order.iter().enumerate() {
        ranks[idx] = pos + 1;
    }
    ranks
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ItemState {
    pub value: f64,
    /// Integer rank at the nearest period.
    pub rank: usize,
    /// Continuous, 1-based vertical slot.
    pub slot_position: f64,
    pub visible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameState {
    pub index: usize,
    pub time_s: f64,
    /// Position on the period axis (`2.5` is halfway between periods 2 and 3).
    pub period_coord: f64,
    pub nearest_period: usize,
    /// Parallel to the dataset's item order.
    pub items: Vec<ItemState>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KeyframeTimeline {
    pub settings: AnimationSettings,
    pub items: Vec<ItemRecord>,
    pub period_labels: Vec<String>,
    pub period_boundaries: Vec<usize>,
    pub frames: Vec<FrameState>,
}

impl KeyframeTimeline {
    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn period_count(&self) -> usize {
        self.period_labels.len()
    }

    pub fn duration_s(&self) -> f64 {
        (self.period_count() - 1) as f64 * self.settings.seconds_per_period
    }

    pub fn period_to_time(&self, period_index: f64) -> Result<f64, CompileError> {
        period_to_time(period_index, self.period_count(), &self.settings)
    }

    pub fn boundary_frame(&self, period: usize) -> &FrameState {
        &self.frames[self.period_boundaries[period]]
    }

    pub fn item_index(&self, id: &str) -> Option<usize> {
        self.items.iter().position(|it| it.id == id)
    }

    /// Item geometry at an arbitrary period coordinate, using the same
    /// interpolation as the compiled frames. Integer coordinates reproduce the
    /// boundary frame exactly.
    pub fn state_at(&self, period_coord: f64) -> Vec<ItemState> {
        let last = self.period_count() - 1;
        let coord = period_coord.clamp(0.0, last as f64);
        let seg = (coord.floor() as usize).min(last);
        if seg == last || coord == seg as f64 {
            return self.boundary_frame(seg).items.clone();
        }
        let t = coord - seg as f64;
        interpolate(
            &self.boundary_frame(seg).items,
            &self.boundary_frame(seg + 1).items,
            t,
            &self.settings,
        )
    }
}

/// Largest value among visible items, the bar-width normalizer for a frame.
/// Zero when nothing visible has a positive value.
pub fn max_visible_value(items: &[ItemState]) -> f64 {
    items
        .iter()
        .filter(|s| s.visible)
        .map(|s| s.value)
        .fold(0.0, f64::max)
}

fn lerp_clamped(a: f64, b: f64, e: f64) -> f64 {
    let v = a + (b - a) * e;
    v.clamp(a.min(b), a.max(b))
}

fn interpolate(
    from: &[ItemState],
    to: &[ItemState],
    t: f64,
    settings: &AnimationSettings,
) -> Vec<ItemState> {
    let e = settings.easing.apply(t);
    let visible_limit = (settings.top_n + 1) as f64;
    from.iter()
        .zip(to)
        .map(|(a, b)| {
            let slot_position = lerp_clamped(a.slot_position, b.slot_position, e);
            ItemState {
                value: lerp_clamped(a.value, b.value, e),
                rank: if t < 0.5 { a.rank } else { b.rank },
                slot_position,
                visible: slot_position <= visible_limit,
            }
        })
        .collect()
}

pub fn compile_timeline(
    dataset: &RankingDataset,
    settings: &AnimationSettings,
) -> Result<KeyframeTimeline, CompileError> {
    settings.validate()?;
    let periods = dataset.period_count();
    if periods < 2 {
        return Err(CompileError::TooFewPeriods);
    }
    let ids: Vec<&str> = dataset.items().iter().map(|it| it.id.as_str()).collect();
    let visible_limit = (settings.top_n + 1) as f64;

    let anchors: Vec<Vec<ItemState>> = (0..periods)
        .map(|p| {
            let column = dataset.column(p);
            let ranks = compute_ranks(&column, &ids);
            column
                .iter()
                .zip(ranks)
                .map(|(&value, rank)| ItemState {
                    value,
                    rank,
                    slot_position: rank as f64,
                    visible: rank as f64 <= visible_limit,
                })
                .collect()
        })
        .collect();

    let boundaries: Vec<usize> = (0..periods).map(|p| boundary_frame(p, settings)).collect();
    let frame_count = boundaries[periods - 1] + 1;

    let mut frames = Vec::with_capacity(frame_count);
    let mut seg = 0;
    for index in 0..frame_count {
        while seg + 1 < periods && index >= boundaries[seg + 1] {
            seg += 1;
        }
        let (period_coord, items) = if index == boundaries[seg] {
            (seg as f64, anchors[seg].clone())
        } else {
            let span = (boundaries[seg + 1] - boundaries[seg]) as f64;
            let t = (index - boundaries[seg]) as f64 / span;
            (
                seg as f64 + t,
                interpolate(&anchors[seg], &anchors[seg + 1], t, settings),
            )
        };
        frames.push(FrameState {
            index,
            time_s: period_coord * settings.seconds_per_period,
            period_coord,
            nearest_period: (period_coord.round() as usize).min(periods - 1),
            items,
        });
    }

    Ok(KeyframeTimeline {
        settings: *settings,
        items: dataset.items().to_vec(),
        period_labels: dataset.periods().to_vec(),
        period_boundaries: boundaries,
        frames,
    })
}
