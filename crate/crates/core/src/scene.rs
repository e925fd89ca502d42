//! Scenes: a dataset plus animation settings, canvas and foreshadow specs.
//!
//! A [`SceneStore`] keeps one self-contained JSON document per scene under a
//! root directory. Every mutation carries the revision the caller last saw;
//! a stale revision is rejected with [`SceneError::RevisionConflict`] and the
//! stored scene is left alone. Mutations on one scene are serialized by a
//! per-scene lock, reads go straight to the file (writes land by rename, so a
//! reader never sees a partial document).

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::{Arc, Mutex};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compile::{compile_timeline, AnimationSettings, CompileError, KeyframeTimeline};
use crate::data::{DataError, RankingDataset};
use crate::events::{detect_events, KeyEvent};
use crate::foreshadow::{validate_specs, ForeshadowSpec, StyleResolver, Violation};
use crate::render::{export_animation, render_frame, CanvasSpec, Manifest, RenderError};

pub const SCENE_FORMAT: &str = "barrace-scene/1";
const SCENE_SUFFIX: &str = ".scene.json";

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SceneError {
    #[error("unknown scene `{0}`")]
    UnknownScene(String),
    #[error("unknown spec `{0}`")]
    UnknownSpec(String),
    #[error("revision conflict: expected {expected}, scene is at {actual}")]
    RevisionConflict { expected: u64, actual: u64 },
    #[error("validation failed with {} violation(s)", .0.len())]
    ValidationFailed(Vec<Violation>),
    #[error("frame {index} out of range (scene has {count} frames)")]
    FrameOutOfRange { index: usize, count: usize },
    #[error("scene has no dataset")]
    MissingDataset,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Compile(#[from] CompileError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("i/o failure at {path}: {message}")]
    Io { path: String, message: String },
    #[error("malformed scene document {path}: {message}")]
    Malformed { path: String, message: String },
}

impl SceneError {
    /// Stable machine-readable code for API and CLI output.
    pub fn code(&self) -> &'static str {
        match self {
            SceneError::UnknownScene(_) => "UnknownScene",
            SceneError::UnknownSpec(_) => "UnknownSpec",
            SceneError::RevisionConflict { .. } => "RevisionConflict",
            SceneError::ValidationFailed(_) => "ValidationFailed",
            SceneError::FrameOutOfRange { .. } => "FrameOutOfRange",
            SceneError::MissingDataset => "MissingDataset",
            SceneError::Data(_) => "InvalidData",
            SceneError::Compile(_) => "InvalidSettings",
            SceneError::Render(RenderError::InvalidCanvas(_)) => "InvalidCanvas",
            SceneError::Render(_) => "RenderFailure",
            SceneError::Io { .. } => "IoFailure",
            SceneError::Malformed { .. } => "MalformedScene",
        }
    }

    pub fn violations(&self) -> &[Violation] {
        match self {
            SceneError::ValidationFailed(v) => v,
            _ => &[],
        }
    }
}

fn io_err(path: &Path, err: impl std::fmt::Display) -> SceneError {
    SceneError::Io {
        path: path.display().to_string(),
        message: err.to_string(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub format: String,
    pub id: String,
    pub revision: u64,
    pub settings: AnimationSettings,
    pub canvas: CanvasSpec,
    pub specs: Vec<ForeshadowSpec>,
    pub dataset: RankingDataset,
}

impl Scene {
    /// Builds a revision-0 scene. The canvas palette is extended with any
    /// dataset categories it lacks.
    pub fn new(
        id: impl Into<String>,
        dataset: RankingDataset,
        settings: AnimationSettings,
        canvas: Option<CanvasSpec>,
        specs: Vec<ForeshadowSpec>,
    ) -> Result<Self, SceneError> {
        let mut canvas = canvas.unwrap_or_default();
        canvas.extend_palette(&dataset);
        let scene = Scene {
            format: SCENE_FORMAT.to_string(),
            id: id.into(),
            revision: 0,
            settings,
            canvas,
            specs,
            dataset,
        };
        scene.check()?;
        Ok(scene)
    }

    /// Every scene invariant: settings compile, canvas is drawable, every
    /// spec validates against the dataset.
    pub fn check(&self) -> Result<(), SceneError> {
        self.settings.validate()?;
        self.canvas.validate()?;
        validate_specs(&self.specs, &self.dataset).map_err(SceneError::ValidationFailed)
    }

    pub fn timeline(&self) -> Result<KeyframeTimeline, SceneError> {
        Ok(compile_timeline(&self.dataset, &self.settings)?)
    }

    pub fn frame_count(&self) -> usize {
        self.settings.frame_count(self.dataset.period_count())
    }

    /// SVG for one frame, through the same path as [`Scene::export`].
    pub fn render_frame(&self, index: usize) -> Result<String, SceneError> {
        self.check()?;
        let timeline = self.timeline()?;
        let frame = timeline.frames.get(index).ok_or(SceneError::FrameOutOfRange {
            index,
            count: timeline.frame_count(),
        })?;
        let resolver = StyleResolver::new(&self.specs, &timeline).map_err(RenderError::from)?;
        Ok(render_frame(&timeline, frame, &resolver.resolve(frame), &self.canvas)?)
    }

    pub fn export(&self, out_dir: &Path) -> Result<Manifest, SceneError> {
        self.check()?;
        let timeline = self.timeline()?;
        Ok(export_animation(&timeline, &self.specs, &self.canvas, out_dir)?)
    }

    pub fn events(&self, top_n: usize, jump_threshold: usize) -> Vec<KeyEvent> {
        detect_events(&self.dataset, top_n, jump_threshold)
    }

    pub fn to_json(&self) -> String {
        let mut json = serde_json::to_string_pretty(self).expect("scene serializes");
        json.push('\n');
        json
    }
}

/// Loosely-typed scene file as written by hand or by the CLI: everything but
/// the dataset is optional, and the dataset may come from a separate CSV.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default)]
pub struct SceneDocument {
    pub format: Option<String>,
    pub id: Option<String>,
    pub revision: u64,
    pub settings: AnimationSettings,
    pub canvas: Option<CanvasSpec>,
    pub specs: Vec<ForeshadowSpec>,
    pub dataset: Option<RankingDataset>,
}

impl SceneDocument {
    pub fn parse(json: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(json)
    }

    /// Resolves into a checked scene. `dataset` replaces any embedded one.
    pub fn into_scene(self, dataset: Option<RankingDataset>) -> Result<Scene, SceneError> {
        let dataset = dataset.or(self.dataset).ok_or(SceneError::MissingDataset)?;
        let mut scene = Scene::new(
            self.id.unwrap_or_else(|| "scene".to_string()),
            dataset,
            self.settings,
            self.canvas,
            self.specs,
        )?;
        scene.revision = self.revision;
        Ok(scene)
    }
}

/// Scene ids double as file names, so they are restricted to a safe alphabet.
fn valid_scene_id(id: &str) -> bool {
    !id.is_empty()
        && id.len() <= 128
        && id
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || b == b'-' || b == b'_')
}

pub struct SceneStore {
    root: PathBuf,
    locks: Mutex<HashMap<String, Arc<Mutex<()>>>>,
}

impl SceneStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, SceneError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|e| io_err(&root, e))?;
        Ok(Self {
            root,
            locks: Mutex::new(HashMap::new()),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn scene_path(&self, id: &str) -> PathBuf {
        self.root.join(format!("{id}{SCENE_SUFFIX}"))
    }

    fn lock_for(&self, id: &str) -> Arc<Mutex<()>> {
        let mut locks = self.locks.lock().unwrap_or_else(|e| e.into_inner());
        locks.entry(id.to_string()).or_default().clone()
    }

    fn write(&self, scene: &Scene) -> Result<(), SceneError> {
        let path = self.scene_path(&scene.id);
        let tmp = self
            .root
            .join(format!(".{}.{}.tmp", scene.id, uuid::Uuid::new_v4().simple()));
        fs::write(&tmp, scene.to_json()).map_err(|e| io_err(&tmp, e))?;
        fs::rename(&tmp, &path).map_err(|e| {
            let _ = fs::remove_file(&tmp);
            io_err(&path, e)
        })
    }

    pub fn create(
        &self,
        dataset: RankingDataset,
        settings: AnimationSettings,
        canvas: Option<CanvasSpec>,
    ) -> Result<Scene, SceneError> {
        let id = uuid::Uuid::new_v4().simple().to_string();
        let scene = Scene::new(id, dataset, settings, canvas, Vec::new())?;
        self.write(&scene)?;
        Ok(scene)
    }

    pub fn get(&self, id: &str) -> Result<Scene, SceneError> {
        if !valid_scene_id(id) {
            return Err(SceneError::UnknownScene(id.to_string()));
        }
        let path = self.scene_path(id);
        let text = match fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(SceneError::UnknownScene(id.to_string()))
            }
            Err(e) => return Err(io_err(&path, e)),
        };
        let scene: Scene = serde_json::from_str(&text).map_err(|e| SceneError::Malformed {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        Ok(scene)
    }

    pub fn list(&self) -> Result<Vec<String>, SceneError> {
        let mut ids = Vec::new();
        for entry in fs::read_dir(&self.root).map_err(|e| io_err(&self.root, e))? {
            let entry = entry.map_err(|e| io_err(&self.root, e))?;
            if let Some(id) = entry.file_name().to_str().and_then(|n| n.strip_suffix(SCENE_SUFFIX)) {
                ids.push(id.to_string());
            }
        }
        ids.sort();
        Ok(ids)
    }

    /// Applies `change` to a copy of the scene under the scene's lock. The
    /// result is checked in full before it replaces the stored document.
    pub fn mutate<F>(&self, id: &str, expected_revision: u64, change: F) -> Result<Scene, SceneError>
    where
        F: FnOnce(&mut Scene) -> Result<(), SceneError>,
    {
        if !valid_scene_id(id) {
            return Err(SceneError::UnknownScene(id.to_string()));
        }
        let lock = self.lock_for(id);
        let _guard = lock.lock().unwrap_or_else(|e| e.into_inner());
        let current = self.get(id)?;
        if current.revision != expected_revision {
            return Err(SceneError::RevisionConflict {
                expected: expected_revision,
                actual: current.revision,
            });
        }
        let mut next = current.clone();
        change(&mut next)?;
        next.id = current.id;
        next.format = SCENE_FORMAT.to_string();
        next.check()?;
        next.revision = current.revision + 1;
        self.write(&next)?;
        Ok(next)
    }

    pub fn update_settings(
        &self,
        id: &str,
        expected_revision: u64,
        settings: Option<AnimationSettings>,
        canvas: Option<CanvasSpec>,
    ) -> Result<Scene, SceneError> {
        self.mutate(id, expected_revision, |scene| {
            if let Some(settings) = settings {
                scene.settings = settings;
            }
            if let Some(mut canvas) = canvas {
                canvas.extend_palette(&scene.dataset);
                scene.canvas = canvas;
            }
            Ok(())
        })
    }

    pub fn edit_cell(
        &self,
        id: &str,
        expected_revision: u64,
        item_id: &str,
        period_label: &str,
        value: f64,
    ) -> Result<Scene, SceneError> {
        self.mutate(id, expected_revision, |scene| {
            scene.dataset = scene.dataset.edit_cell(item_id, period_label, value)?;
            Ok(())
        })
    }

    pub fn add_spec(&self, id: &str, expected_revision: u64, spec: ForeshadowSpec) -> Result<Scene, SceneError> {
        self.mutate(id, expected_revision, |scene| {
            scene.specs.push(spec);
            Ok(())
        })
    }

    /// Replaces the spec currently stored as `spec_id` (the replacement may
    /// carry a new id).
    pub fn update_spec(
        &self,
        id: &str,
        expected_revision: u64,
        spec_id: &str,
        spec: ForeshadowSpec,
    ) -> Result<Scene, SceneError> {
        self.mutate(id, expected_revision, |scene| {
            let slot = scene
                .specs
                .iter_mut()
                .find(|s| s.id == spec_id)
                .ok_or_else(|| SceneError::UnknownSpec(spec_id.to_string()))?;
            *slot = spec;
            Ok(())
        })
    }

    pub fn delete_spec(&self, id: &str, expected_revision: u64, spec_id: &str) -> Result<Scene, SceneError> {
        self.mutate(id, expected_revision, |scene| {
            let before = scene.specs.len();
            scene.specs.retain(|s| s.id != spec_id);
            if scene.specs.len() == before {
                return Err(SceneError::UnknownSpec(spec_id.to_string()));
            }
            Ok(())
        })
    }

    pub fn preview(&self, id: &str, frame_index: usize) -> Result<String, SceneError> {
        self.get(id)?.render_frame(frame_index)
    }

    pub fn events(&self, id: &str, top_n: usize, jump_threshold: usize) -> Result<Vec<KeyEvent>, SceneError> {
        Ok(self.get(id)?.events(top_n, jump_threshold))
    }

    /// Exports into `out_dir`, or `<root>/<id>.export/` when none is given.
    pub fn export(&self, id: &str, out_dir: Option<&Path>) -> Result<(PathBuf, Manifest), SceneError> {
        let scene = self.get(id)?;
        let dir = out_dir
            .map(Path::to_path_buf)
            .unwrap_or_else(|| self.root.join(format!("{id}.export")));
        let manifest = scene.export(&dir)?;
        Ok((dir, manifest))
    }
}
