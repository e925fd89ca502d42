//! Bar chart race compiler with visual foreshadowing.
//!
//! The pipeline runs CSV → [`RankingDataset`] → [`KeyframeTimeline`] →
//! per-frame [`StyleOverlay`] → SVG. Foreshadow specs attach cues (a caption,
//! a ghost of the final bar, an outline, or dimming of other bars) to target
//! items for a window that ends at or before the event they anticipate.
//! [`SceneStore`] persists scenes for the authoring service.

pub mod color;
pub mod compile;
pub mod data;
pub mod events;
pub mod foreshadow;
pub mod render;
pub mod scene;

pub use color::Rgb;
pub use compile::{
    compile_timeline, compute_ranks, period_to_time, AnimationSettings, CompileError, Easing, FrameState,
    ItemState, KeyframeTimeline,
};
pub use data::{parse_dataset, serialize_dataset, DataError, ItemRecord, RankingDataset};
pub use events::{detect_events, suggest_foreshadow, EventKind, KeyEvent};
pub use foreshadow::{
    active_intervals, classify, resolve_styles, validate_spec, validate_specs, ActiveInterval, Effect,
    ForeshadowClass, ForeshadowError, ForeshadowSpec, StyleOverlay, StyleResolver, Violation, ViolationCode,
};
pub use render::{export_animation, layout_frame, render_frame, CanvasSpec, FrameLayout, Manifest, RenderError};
pub use scene::{Scene, SceneDocument, SceneError, SceneStore};
