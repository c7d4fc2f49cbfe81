//! Synthetic 3D scenes with a pinhole camera.
//!
//! Scenes stand in for images: every perceptual question the specialists
//! answer is derived from the annotations held here. Coordinates are in the
//! camera frame (x right, y down, z forward), in meters.

use std::fmt;
use std::ops::RangeInclusive;
use std::path::Path;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Minimum distance, in pixels, between any two projected object centers.
pub const CENTER_MARGIN_PX: f64 = 12.0;
/// Objects whose largest extent is below this cut are `small`.
pub const DEFAULT_SIZE_CUT_M: f64 = 0.5;
pub const MIN_OBJECTS: usize = 2;
pub const MAX_OBJECTS: usize = 10;
pub const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

#[derive(Debug, thiserror::Error)]
pub enum SceneError {
    #[error("unknown object id {0}")]
    UnknownObject(usize),
    #[error("object count {0} outside [{MIN_OBJECTS}, {MAX_OBJECTS}]")]
    OutOfRange(usize),
    #[error("could not place objects with a {CENTER_MARGIN_PX} px margin after {0} attempts")]
    PlacementFailure(usize),
    #[error("invalid camera: {0}")]
    InvalidCamera(String),
    #[error("invalid scene: {0}")]
    InvalidScene(String),
    #[error("unknown {kind} '{value}'")]
    UnknownAttribute { kind: &'static str, value: String },
    #[error("scene file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scene file {path}: {source}")]
    Json {
        path: String,
        #[source]
        source: serde_json::Error,
    },
}

macro_rules! attribute_enum {
    ($name:ident, $kind:literal, { $($variant:ident => $word:literal $(| $alias:literal)*),+ $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
        #[serde(rename_all = "lowercase")]
        pub enum $name {
            $(
                $(#[serde(alias = $alias)])*
                $variant,
            )+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn as_str(self) -> &'static str {
                match self {
                    $($name::$variant => $word),+
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.as_str())
            }
        }

        impl FromStr for $name {
            type Err = SceneError;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s.trim().to_ascii_lowercase().as_str() {
                    $($word $(| $alias)* => Ok($name::$variant),)+
                    _ => Err(SceneError::UnknownAttribute { kind: $kind, value: s.to_string() }),
                }
            }
        }
    };
}

attribute_enum!(Shape, "shape", {
    Cube => "cube" | "square",
    Sphere => "sphere",
    Cylinder => "cylinder",
});

attribute_enum!(Color, "color", {
    Gray => "gray",
    Blue => "blue",
    Brown => "brown",
    Yellow => "yellow",
    Red => "red",
    Green => "green",
    Purple => "purple",
    Cyan => "cyan",
});

attribute_enum!(Material, "material", {
    Rubber => "rubber",
    Metal => "metal",
});

attribute_enum!(SizeClass, "size", {
    Small => "small",
    Large => "large",
});

/// Pixel-space point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub fn distance(self, other: Pixel) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

/// Axis-aligned pixel box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PixelBox {
    pub x_min: f64,
    pub y_min: f64,
    pub x_max: f64,
    pub y_max: f64,
}

impl PixelBox {
    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    pub fn height(&self) -> f64 {
        self.y_max - self.y_min
    }

    pub fn area(&self) -> f64 {
        self.width().max(0.0) * self.height().max(0.0)
    }

    pub fn contains(&self, p: Pixel) -> bool {
        p.u > self.x_min && p.u < self.x_max && p.v > self.y_min && p.v < self.y_max
    }

    /// Intersection over union; 0 for disjoint boxes.
    pub fn iou(&self, other: &PixelBox) -> f64 {
        let ix = (self.x_max.min(other.x_max) - self.x_min.max(other.x_min)).max(0.0);
        let iy = (self.y_max.min(other.y_max) - self.y_min.max(other.y_min)).max(0.0);
        let inter = ix * iy;
        let union = self.area() + other.area() - inter;
        if union <= 0.0 {
            0.0
        } else {
            inter / union
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Camera {
    pub focal_px: f64,
    pub principal: [f64; 2],
    pub image_size: [u32; 2],
}

impl Camera {
    pub fn new(focal_px: f64, principal: [f64; 2], image_size: [u32; 2]) -> Result<Self, SceneError> {
        let camera = Camera {
            focal_px,
            principal,
            image_size,
        };
        camera.validate()?;
        Ok(camera)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        if !(self.focal_px.is_finite() && self.focal_px > 0.0) {
            return Err(SceneError::InvalidCamera(format!(
                "focal length must be positive, got {}",
                self.focal_px
            )));
        }
        let [w, h] = self.image_size;
        if w == 0 || h == 0 {
            return Err(SceneError::InvalidCamera("image size must be nonzero".into()));
        }
        let [pu, pv] = self.principal;
        if !(pu >= 0.0 && pu <= f64::from(w) && pv >= 0.0 && pv <= f64::from(h)) {
            return Err(SceneError::InvalidCamera(format!(
                "principal point ({pu}, {pv}) outside {w}x{h} image"
            )));
        }
        Ok(())
    }

    pub fn width(&self) -> f64 {
        f64::from(self.image_size[0])
    }

    pub fn height(&self) -> f64 {
        f64::from(self.image_size[1])
    }

    pub fn project(&self, p: [f64; 3]) -> Pixel {
        Pixel {
            u: self.focal_px * p[0] / p[2] + self.principal[0],
            v: self.focal_px * p[1] / p[2] + self.principal[1],
        }
    }

    fn unproject(&self, px: Pixel, z: f64) -> [f64; 3] {
        [
            (px.u - self.principal[0]) * z / self.focal_px,
            (px.v - self.principal[1]) * z / self.focal_px,
            z,
        ]
    }

    fn inside(&self, p: Pixel) -> bool {
        p.u > 0.0 && p.u < self.width() && p.v > 0.0 && p.v < self.height()
    }
}

impl Default for Camera {
    /// CLEVR-like intrinsics. These are configuration, not measured values.
    fn default() -> Self {
        Camera {
            focal_px: 350.0,
            principal: [240.0, 160.0],
            image_size: [480, 320],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Object3D {
    pub id: usize,
    pub shape: Shape,
    pub color: Color,
    pub material: Material,
    pub size_class: SizeClass,
    pub center: [f64; 3],
    pub extents: [f64; 3],
}

impl Object3D {
    /// An object with equal extents on all axes, classified against the
    /// default size cut.
    pub fn new(id: usize, shape: Shape, color: Color, material: Material, center: [f64; 3], side: f64) -> Self {
        Object3D {
            id,
            shape,
            color,
            material,
            size_class: if side < DEFAULT_SIZE_CUT_M { SizeClass::Small } else { SizeClass::Large },
            center,
            extents: [side; 3],
        }
    }

    pub fn max_extent(&self) -> f64 {
        self.extents.iter().copied().fold(f64::MIN, f64::max)
    }

    fn corners(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        (0..8).map(move |i| {
            let mut c = self.center;
            for (axis, item) in c.iter_mut().enumerate() {
                let sign = if i >> axis & 1 == 1 { 0.5 } else { -0.5 };
                *item += sign * self.extents[axis];
            }
            c
        })
    }
}

fn default_size_cut() -> f64 {
    DEFAULT_SIZE_CUT_M
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scene {
    pub seed: u64,
    #[serde(default = "default_size_cut")]
    pub size_cut: f64,
    pub camera: Camera,
    pub objects: Vec<Object3D>,
}

impl Scene {
    /// Builds a scene from parts and checks every invariant.
    pub fn new(seed: u64, camera: Camera, objects: Vec<Object3D>) -> Result<Self, SceneError> {
        let scene = Scene {
            seed,
            size_cut: DEFAULT_SIZE_CUT_M,
            camera,
            objects,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<(), SceneError> {
        self.camera.validate()?;
        let n = self.objects.len();
        if !(MIN_OBJECTS..=MAX_OBJECTS).contains(&n) {
            return Err(SceneError::OutOfRange(n));
        }
        for (i, o) in self.objects.iter().enumerate() {
            if o.id != i {
                return Err(SceneError::InvalidScene(format!(
                    "object ids must be dense from 0; position {i} has id {}",
                    o.id
                )));
            }
            if !(o.center.iter().all(|c| c.is_finite()) && o.center[2] > 0.0) {
                return Err(SceneError::InvalidScene(format!("object {i} has center.z <= 0")));
            }
            if !o.extents.iter().all(|e| e.is_finite() && *e > 0.0) {
                return Err(SceneError::InvalidScene(format!("object {i} has a nonpositive extent")));
            }
            if o.center[2] - o.extents[2] / 2.0 <= 0.0 {
                return Err(SceneError::InvalidScene(format!("object {i} crosses the camera plane")));
            }
            let expected = if o.max_extent() < self.size_cut {
                SizeClass::Small
            } else {
                SizeClass::Large
            };
            if o.size_class != expected {
                return Err(SceneError::InvalidScene(format!(
                    "object {i} is labelled {} but its extents make it {}",
                    o.size_class, expected
                )));
            }
            if !self.camera.inside(self.camera.project(o.center)) {
                return Err(SceneError::InvalidScene(format!(
                    "object {i} projects outside the image"
                )));
            }
        }
        for a in 0..n {
            for b in a + 1..n {
                let d = self
                    .camera
                    .project(self.objects[a].center)
                    .distance(self.camera.project(self.objects[b].center));
                if d < CENTER_MARGIN_PX {
                    return Err(SceneError::InvalidScene(format!(
                        "objects {a} and {b} project {d:.3} px apart (< {CENTER_MARGIN_PX})"
                    )));
                }
            }
        }
        Ok(())
    }

    pub fn object(&self, id: usize) -> Result<&Object3D, SceneError> {
        self.objects.get(id).ok_or(SceneError::UnknownObject(id))
    }

    pub fn project_center(&self, id: usize) -> Result<Pixel, SceneError> {
        Ok(self.camera.project(self.object(id)?.center))
    }

    /// Pixel hull of the eight projected corners of the object's bounding
    /// volume, clipped to the image.
    pub fn project_bbox(&self, id: usize) -> Result<PixelBox, SceneError> {
        let object = self.object(id)?;
        let mut b = PixelBox {
            x_min: f64::INFINITY,
            y_min: f64::INFINITY,
            x_max: f64::NEG_INFINITY,
            y_max: f64::NEG_INFINITY,
        };
        for corner in object.corners() {
            let p = self.camera.project(corner);
            b.x_min = b.x_min.min(p.u);
            b.y_min = b.y_min.min(p.v);
            b.x_max = b.x_max.max(p.u);
            b.y_max = b.y_max.max(p.v);
        }
        b.x_min = b.x_min.max(0.0);
        b.y_min = b.y_min.max(0.0);
        b.x_max = b.x_max.min(self.camera.width());
        b.y_max = b.y_max.min(self.camera.height());
        Ok(b)
    }

    /// Camera-frame z of the object center.
    pub fn ground_truth_depth(&self, id: usize) -> Result<f64, SceneError> {
        Ok(self.object(id)?.center[2])
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Scene, SceneError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Scene::from_json(&text).map_err(|e| match e {
            SceneError::Json { source, .. } => SceneError::Json {
                path: path.display().to_string(),
                source,
            },
            other => other,
        })
    }

    pub fn from_json(text: &str) -> Result<Scene, SceneError> {
        let scene: Scene = serde_json::from_str(text).map_err(|source| SceneError::Json {
            path: "<inline>".into(),
            source,
        })?;
        scene.validate()?;
        Ok(scene)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("scene serializes");
        s.push('\n');
        s
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<(), SceneError> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()).map_err(|source| SceneError::Io {
            path: path.display().to_string(),
            source,
        })
    }
}

/// Draws a random CLEVR-style scene. Identical arguments give identical scenes.
pub fn generate_scene(seed: u64, n_objects: usize, camera: &Camera) -> Result<Scene, SceneError> {
    if !(MIN_OBJECTS..=MAX_OBJECTS).contains(&n_objects) {
        return Err(SceneError::OutOfRange(n_objects));
    }
    camera.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ ((n_objects as u64) << 56));
    let edge = 16.0_f64.min(camera.width() / 4.0).min(camera.height() / 4.0);
    let mut objects: Vec<Object3D> = Vec::with_capacity(n_objects);
    let mut attempts = 0;

    while objects.len() < n_objects {
        if attempts >= MAX_PLACEMENT_ATTEMPTS {
            return Err(SceneError::PlacementFailure(attempts));
        }
        attempts += 1;

        let shape = *Shape::ALL.choose(&mut rng).expect("nonempty");
        let color = *Color::ALL.choose(&mut rng).expect("nonempty");
        let material = *Material::ALL.choose(&mut rng).expect("nonempty");
        let size_class = *SizeClass::ALL.choose(&mut rng).expect("nonempty");
        let side = match size_class {
            SizeClass::Small => rng.random_range(0.30..0.45),
            SizeClass::Large => rng.random_range(0.60..0.90),
        };
        let extents = match shape {
            Shape::Cube | Shape::Sphere => [side, side, side],
            Shape::Cylinder => [side, side * rng.random_range(0.8..1.0), side],
        };
        let px = Pixel {
            u: rng.random_range(edge..camera.width() - edge),
            v: rng.random_range(edge..camera.height() - edge),
        };
        let z = rng.random_range(4.0..12.0);
        let center = camera.unproject(px, z);

        let clear = objects.iter().all(|o| {
            let margin_ok = camera.project(o.center).distance(px) >= CENTER_MARGIN_PX;
            let gap = (0..3).map(|k| (o.center[k] - center[k]).powi(2)).sum::<f64>().sqrt();
            margin_ok && gap >= (o.max_extent() + side) / 2.0
        });
        if !clear {
            continue;
        }
        objects.push(Object3D {
            id: objects.len(),
            shape,
            color,
            material,
            size_class,
            center,
            extents,
        });
    }

    Scene::new(seed, camera.clone(), objects)
}

/// Draws `count` scenes. Scene `i` has seed `seed + i` and an object count
/// drawn uniformly from `objects`.
pub fn generate_scenes(
    seed: u64,
    count: usize,
    objects: RangeInclusive<usize>,
    camera: &Camera,
) -> Result<Vec<Scene>, SceneError> {
    for n in [*objects.start(), *objects.end()] {
        if !(MIN_OBJECTS..=MAX_OBJECTS).contains(&n) {
            return Err(SceneError::OutOfRange(n));
        }
    }
    if objects.is_empty() {
        return Err(SceneError::OutOfRange(*objects.start()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count as u64)
        .map(|i| {
            let n = rng.random_range(objects.clone());
            generate_scene(seed.wrapping_add(i), n, camera)
        })
        .collect()
}
