//! The five predefined vision modules, answered from scene annotations.
//!
//! The oracle backend reads ground truth directly. The perturbed backend adds
//! seeded pixel noise to `loc` points and multiplicative noise to `depth`;
//! noise is a pure function of the noise seed and the call arguments, so
//! results do not depend on call order.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use sha2::{Digest, Sha256};

use crate::scene::{Pixel, PixelBox, Scene, Shape};

pub const DEFAULT_RESOLVE_RADIUS_PX: f64 = 10.0;
pub const DEFAULT_IOU_THRESHOLD: f64 = 0.92;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SpecialistError {
    #[error("no object at ({x}, {y})")]
    NoObjectAtPoint { x: f64, y: f64 },
    #[error("unsupported question '{0}'")]
    UnsupportedQuestion(String),
    #[error("object prompt must not be empty")]
    EmptyPrompt,
    #[error("invalid specialist configuration: {0}")]
    InvalidConfig(String),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Oracle,
    Perturbed {
        noise_seed: u64,
        /// Standard deviation of the Gaussian offset added to `loc` points.
        pixel_sigma: f64,
        /// Standard deviation of the relative error applied to `depth`.
        depth_sigma: f64,
    },
}

impl Backend {
    pub fn perturbed(noise_seed: u64) -> Backend {
        Backend::Perturbed {
            noise_seed,
            pixel_sigma: 4.0,
            depth_sigma: 0.15,
        }
    }
}

/// Attribute kinds `vqa` can answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AttributeKind {
    Color,
    Material,
    Size,
    Shape,
}

impl AttributeKind {
    /// Keyword routing for free-form attribute questions.
    pub fn from_question(question: &str) -> Option<AttributeKind> {
        let q = question.to_ascii_lowercase();
        let has = |words: &[&str]| words.iter().any(|w| q.contains(w));
        if has(&["color", "colour"]) {
            Some(AttributeKind::Color)
        } else if has(&["material", "made of", "matte", "shiny", "metallic"]) {
            Some(AttributeKind::Material)
        } else if has(&["size", "how big", "large", "small"]) {
            Some(AttributeKind::Size)
        } else if has(&["shape", "what is this", "what is the object", "what object"]) {
            Some(AttributeKind::Shape)
        } else {
            None
        }
    }
}

/// Category selected by a `loc` prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocCategory {
    All,
    Shape(Shape),
}

impl LocCategory {
    pub fn from_prompt(prompt: &str) -> Option<LocCategory> {
        let word = prompt.trim().to_ascii_lowercase();
        let word = word.trim_end_matches(['.', '!', '?']);
        match word {
            "object" | "objects" | "thing" | "things" => Some(LocCategory::All),
            "cube" | "cubes" | "square" | "squares" | "block" | "blocks" => {
                Some(LocCategory::Shape(Shape::Cube))
            }
            "sphere" | "spheres" | "ball" | "balls" => Some(LocCategory::Shape(Shape::Sphere)),
            "cylinder" | "cylinders" => Some(LocCategory::Shape(Shape::Cylinder)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct SpecialistSuite {
    scene: Arc<Scene>,
    backend: Backend,
    resolve_radius_px: f64,
    iou_threshold: f64,
}

impl SpecialistSuite {
    pub fn oracle(scene: Arc<Scene>) -> Self {
        SpecialistSuite {
            scene,
            backend: Backend::Oracle,
            resolve_radius_px: DEFAULT_RESOLVE_RADIUS_PX,
            iou_threshold: DEFAULT_IOU_THRESHOLD,
        }
    }

    pub fn new(
        scene: Arc<Scene>,
        backend: Backend,
        resolve_radius_px: f64,
        iou_threshold: f64,
    ) -> Result<Self, SpecialistError> {
        if !(resolve_radius_px > 0.0) {
            return Err(SpecialistError::InvalidConfig(format!(
                "resolve radius must be positive, got {resolve_radius_px}"
            )));
        }
        if !(iou_threshold > 0.0 && iou_threshold < 1.0) {
            return Err(SpecialistError::InvalidConfig(format!(
                "IoU threshold must lie in (0, 1), got {iou_threshold}"
            )));
        }
        if let Backend::Perturbed {
            pixel_sigma,
            depth_sigma,
            ..
        } = backend
        {
            if !(pixel_sigma >= 0.0 && depth_sigma >= 0.0) {
                return Err(SpecialistError::InvalidConfig("noise amplitudes must be >= 0".into()));
            }
        }
        Ok(SpecialistSuite {
            scene,
            backend,
            resolve_radius_px,
            iou_threshold,
        })
    }

    pub fn with_backend(scene: Arc<Scene>, backend: Backend) -> Result<Self, SpecialistError> {
        Self::new(scene, backend, DEFAULT_RESOLVE_RADIUS_PX, DEFAULT_IOU_THRESHOLD)
    }

    pub fn scene(&self) -> &Scene {
        &self.scene
    }

    pub fn backend(&self) -> Backend {
        self.backend
    }

    /// Projected centers of every object matching the prompt, sorted by
    /// (u, v). An empty list means nothing matched.
    pub fn loc(&self, object_prompt: &str) -> Result<Vec<Pixel>, SpecialistError> {
        if object_prompt.trim().is_empty() {
            return Err(SpecialistError::EmptyPrompt);
        }
        let Some(category) = LocCategory::from_prompt(object_prompt) else {
            return Ok(Vec::new());
        };
        let mut points: Vec<Pixel> = self
            .scene
            .objects
            .iter()
            .filter(|o| match category {
                LocCategory::All => true,
                LocCategory::Shape(s) => o.shape == s,
            })
            .map(|o| {
                let p = self.scene.camera.project(o.center);
                self.jitter_point(object_prompt, o.id, p)
            })
            .collect();
        points.sort_by(|a, b| a.u.total_cmp(&b.u).then(a.v.total_cmp(&b.v)));
        Ok(points)
    }

    /// Object whose projected center is nearest to (x, y), within the radius.
    /// Ties go to the lower id.
    pub fn resolve_point(&self, x: f64, y: f64) -> Result<usize, SpecialistError> {
        let query = Pixel { u: x, v: y };
        let mut best: Option<(usize, f64)> = None;
        for o in &self.scene.objects {
            let d = self.scene.camera.project(o.center).distance(query);
            if d <= self.resolve_radius_px && best.is_none_or(|(_, bd)| d < bd) {
                best = Some((o.id, d));
            }
        }
        best.map(|(id, _)| id)
            .ok_or(SpecialistError::NoObjectAtPoint { x, y })
    }

    pub fn vqa(&self, question: &str, x: f64, y: f64) -> Result<String, SpecialistError> {
        let kind = AttributeKind::from_question(question)
            .ok_or_else(|| SpecialistError::UnsupportedQuestion(question.to_string()))?;
        let id = self.resolve_point(x, y)?;
        let o = &self.scene.objects[id];
        let word = match kind {
            AttributeKind::Color => o.color.as_str(),
            AttributeKind::Material => o.material.as_str(),
            AttributeKind::Size => o.size_class.as_str(),
            AttributeKind::Shape => o.shape.as_str(),
        };
        Ok(word.to_string())
    }

    pub fn depth(&self, x: f64, y: f64) -> Result<f64, SpecialistError> {
        let id = self.resolve_point(x, y)?;
        let z = self.scene.objects[id].center[2];
        Ok(match self.backend {
            Backend::Oracle => z,
            Backend::Perturbed {
                noise_seed,
                depth_sigma,
                ..
            } => {
                if depth_sigma == 0.0 {
                    z
                } else {
                    let n = gaussian(noise_seed, &["depth", &bits(x), &bits(y)]);
                    z * (1.0 + depth_sigma * n).max(0.05)
                }
            }
        })
    }

    pub fn same_object(&self, x1: f64, y1: f64, x2: f64, y2: f64) -> Result<bool, SpecialistError> {
        let a = self.resolve_point(x1, y1)?;
        let b = self.resolve_point(x2, y2)?;
        let ba = self.bbox(a);
        let bb = self.bbox(b);
        Ok(ba.iou(&bb) > self.iou_threshold)
    }

    /// (width, height) in pixels of the object's projected box.
    pub fn get_2d_object_size(&self, x: f64, y: f64) -> Result<(f64, f64), SpecialistError> {
        let id = self.resolve_point(x, y)?;
        let b = self.bbox(id);
        Ok((b.width(), b.height()))
    }

    fn bbox(&self, id: usize) -> PixelBox {
        self.scene.project_bbox(id).expect("resolved id exists")
    }

    fn jitter_point(&self, prompt: &str, id: usize, p: Pixel) -> Pixel {
        match self.backend {
            Backend::Oracle => p,
            Backend::Perturbed {
                noise_seed,
                pixel_sigma,
                ..
            } => {
                if pixel_sigma == 0.0 {
                    return p;
                }
                let key = prompt.trim().to_ascii_lowercase();
                let id = id.to_string();
                Pixel {
                    u: p.u + pixel_sigma * gaussian(noise_seed, &["loc-u", &key, &id]),
                    v: p.v + pixel_sigma * gaussian(noise_seed, &["loc-v", &key, &id]),
                }
            }
        }
    }
}

fn bits(x: f64) -> String {
    format!("{:016x}", x.to_bits())
}

/// Standard normal draw keyed by the seed and a list of call arguments.
fn gaussian(seed: u64, parts: &[&str]) -> f64 {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    for part in parts {
        hasher.update((part.len() as u64).to_le_bytes());
        hasher.update(part.as_bytes());
    }
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    let mut rng = ChaCha8Rng::from_seed(key);
    StandardNormal.sample(&mut rng)
}
