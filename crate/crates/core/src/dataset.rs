//! A set of scenes with their side information and evaluation images.

use crate::baselines::CategoryActivityMap;
use crate::error::{Error, Result};
use crate::evaluation::ImagePose;
use crate::scene::{ActivityVocabulary, SceneGrid};
use crate::side_info::{FeatureTable, LocationFeatures};

/// One scene: grid (explored mask, labels, demonstrations), per-cell
/// features and the camera poses used as evaluation images.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneData {
    pub grid: SceneGrid,
    pub features: FeatureTable,
    pub poses: Vec<ImagePose>,
}

impl SceneData {
    pub fn new(grid: SceneGrid, features: FeatureTable, poses: Vec<ImagePose>) -> Result<Self> {
        features.validate()?;
        if features.num_cells() != grid.num_cells() {
            return Err(Error::LengthMismatch {
                expected: grid.num_cells(),
                found: features.num_cells(),
            });
        }
        Ok(SceneData { grid, features, poses })
    }

    pub fn id(&self) -> &str {
        self.grid.scene_id()
    }
}

/// Scenes sharing one activity vocabulary and one set of scene-class and
/// object-category names.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub scene_classes: Vec<String>,
    pub object_categories: Vec<String>,
    pub category_map: CategoryActivityMap,
    pub scenes: Vec<SceneData>,
}

impl Dataset {
    pub fn new(
        scene_classes: Vec<String>,
        object_categories: Vec<String>,
        category_map: CategoryActivityMap,
        scenes: Vec<SceneData>,
    ) -> Result<Self> {
        let Some(first) = scenes.first() else {
            return Err(Error::Empty("dataset has no scenes"));
        };
        let vocab = first.grid.vocabulary().clone();
        for s in &scenes {
            if s.grid.vocabulary() != &vocab {
                return Err(Error::VocabularyMismatch {
                    first: vocab.names().join(","),
                    other: s.grid.vocabulary().names().join(","),
                });
            }
            if s.features.num_scene_classes() != scene_classes.len()
                || s.features.num_object_categories() != object_categories.len()
            {
                return Err(Error::ShapeMismatch(format!(
                    "scene {} features are {}+{} wide, dataset declares {}+{}",
                    s.id(),
                    s.features.num_scene_classes(),
                    s.features.num_object_categories(),
                    scene_classes.len(),
                    object_categories.len()
                )));
            }
        }
        for (i, s) in scenes.iter().enumerate() {
            if scenes[..i].iter().any(|t| t.id() == s.id()) {
                return Err(Error::InvalidParameter(format!("duplicate scene id {}", s.id())));
            }
        }
        if category_map.num_categories() != object_categories.len() || category_map.num_activities() != vocab.len() {
            return Err(Error::ShapeMismatch(format!(
                "category map is {}x{}, dataset has {} categories and {} activities",
                category_map.num_categories(),
                category_map.num_activities(),
                object_categories.len(),
                vocab.len()
            )));
        }
        Ok(Dataset {
            scene_classes,
            object_categories,
            category_map,
            scenes,
        })
    }

    pub fn vocabulary(&self) -> &ActivityVocabulary {
        self.scenes[0].grid.vocabulary()
    }

    pub fn scene_index(&self, id: &str) -> Option<usize> {
        self.scenes.iter().position(|s| s.id() == id)
    }

    /// Resolves scene ids to positions; an empty list selects every scene.
    pub fn select(&self, ids: &[String]) -> Result<Vec<usize>> {
        if ids.is_empty() {
            return Ok((0..self.scenes.len()).collect());
        }
        ids.iter()
            .map(|id| {
                self.scene_index(id)
                    .ok_or_else(|| Error::InvalidParameter(format!("unknown scene {id}")))
            })
            .collect()
    }

    /// Location features of the selected scenes stacked in selection order;
    /// `scene` in each entry is the position within `selection`.
    pub fn stacked_locations(&self, selection: &[usize]) -> Vec<LocationFeatures> {
        selection
            .iter()
            .enumerate()
            .flat_map(|(k, &s)| {
                let scene = &self.scenes[s];
                scene.features.locations(k, scene.grid.width())
            })
            .collect()
    }
}
