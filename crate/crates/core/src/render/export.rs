use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{render_frame, CanvasSpec, RenderError};
use crate::compile::KeyframeTimeline;
use crate::foreshadow::{active_intervals, ActiveInterval, ForeshadowSpec, StyleResolver};

pub const MANIFEST_FILE: &str = "animation.json";
pub const MANIFEST_FORMAT: &str = "barrace-animation/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMark {
    pub label: String,
    pub frame: usize,
    pub time_s: f64,
}

/// Contents of `animation.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub fps: u32,
    pub frame_count: usize,
    pub seconds_per_period: f64,
    pub duration_s: f64,
    pub width: u32,
    pub height: u32,
    pub frames: Vec<String>,
    pub period_boundaries: Vec<BoundaryMark>,
    pub foreshadow_intervals: Vec<ActiveInterval>,
}

pub fn frame_file_name(index: usize) -> String {
    format!("frame_{index:05}.svg")
}

fn is_frame_file(name: &str) -> bool {
    name.strip_prefix("frame_")
        .and_then(|rest| rest.strip_suffix(".svg"))
        .is_some_and(|digits| digits.len() >= 5 && digits.bytes().all(|b| b.is_ascii_digit()))
}

fn io_err(path: &Path, err: std::io::Error) -> RenderError {
    RenderError::IoFailure {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}

/// Renders every frame into `out_dir` as `frame_NNNNN.svg` and then writes
/// `animation.json`.
///
/// Specs are checked before anything is written. Frame files left over from a
/// longer earlier export are removed so the directory always describes one
/// animation. The manifest is written last, only after every frame succeeded.
pub fn export_animation(
    timeline: &KeyframeTimeline,
    specs: &[ForeshadowSpec],
    canvas: &CanvasSpec,
    out_dir: &Path,
) -> Result<Manifest, RenderError> {
    let resolver = StyleResolver::new(specs, timeline)?;
    canvas.validate()?;

    fs::create_dir_all(out_dir).map_err(|e| io_err(out_dir, e))?;
    let manifest_path = out_dir.join(MANIFEST_FILE);
    if manifest_path.exists() {
        fs::remove_file(&manifest_path).map_err(|e| io_err(&manifest_path, e))?;
    }

    let frames: Vec<String> = (0..timeline.frame_count()).map(frame_file_name).collect();
    let results: Vec<Result<(), RenderError>> = timeline
        .frames
        .par_iter()
        .zip(frames.par_iter())
        .map(|(frame, name)| {
            let overlay = resolver.resolve(frame);
            let svg = render_frame(timeline, frame, &overlay, canvas)?;
            let path = out_dir.join(name);
            fs::write(&path, svg).map_err(|e| io_err(&path, e))
        })
        .collect();
    // First failure in frame order, so errors are reproducible.
    results.into_iter().collect::<Result<(), _>>()?;

    let entries = fs::read_dir(out_dir).map_err(|e| io_err(out_dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| io_err(out_dir, e))?;
        let name = entry.file_name();
        let Some(name) = name.to_str() else { continue };
        if is_frame_file(name) && !frames.iter().any(|f| f == name) {
            fs::remove_file(entry.path()).map_err(|e| io_err(&entry.path(), e))?;
        }
    }

    let settings = &timeline.settings;
    let manifest = Manifest {
        format: MANIFEST_FORMAT.to_string(),
        fps: settings.fps,
        frame_count: frames.len(),
        seconds_per_period: settings.seconds_per_period,
        duration_s: timeline.duration_s(),
        width: canvas.width,
        height: canvas.height,
        frames,
        period_boundaries: timeline
            .period_boundaries
            .iter()
            .zip(&timeline.period_labels)
            .map(|(&frame, label)| BoundaryMark {
                label: label.clone(),
                frame,
                time_s: timeline.frames[frame].time_s,
            })
            .collect(),
        foreshadow_intervals: active_intervals(specs, settings),
    };
    let mut json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    json.push('\n');
    fs::write(&manifest_path, json).map_err(|e| io_err(&manifest_path, e))?;
    Ok(manifest)
}
