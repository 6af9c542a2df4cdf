//! 2.5D procedural street renderer.
//!
//! A scene is a straight road seen from the driver's seat: the road and its
//! sidewalks are trapezoids converging on a vanishing point at the horizon,
//! with building blocks, fences, trees and poles on the sides. Dynamic
//! objects are drawn on top of the finished static frame, so the static and
//! dynamic frames agree everywhere outside the object silhouettes.

use rand::Rng;
use seminpaint_core::seed::rng_from_seed;
use seminpaint_core::{extract_dynamic_mask, ClassId, ClassTaxonomy, LabelMap, PairedSample};

use crate::error::{Error, Result};

pub const MAX_CARS: u32 = 8;
pub const MAX_PERSONS: u32 = 12;

/// Everything needed to render one scene pair.
#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    /// Horizon row as a fraction of the height.
    pub horizon: f64,
    /// Vanishing point column as a fraction of the width.
    pub vanishing_x: f64,
    /// Road center at the bottom row, as a fraction of the width.
    pub road_bottom_x: f64,
    /// Road width at the bottom row, as a fraction of the width.
    pub road_width: f64,
    /// Width of each sidewalk relative to half the road width.
    pub sidewalk_width: f64,
    pub building_blocks: u32,
    pub pole_density: f64,
    pub vegetation_density: f64,
    pub fence_density: f64,
    pub cars: u32,
    pub persons: u32,
}

impl SceneSpec {
    /// Draws a random layout for a `width x height` frame. At least one
    /// dynamic object is always present.
    pub fn sample(seed: u64, width: usize, height: usize) -> Self {
        let mut rng = rng_from_seed(seed);
        let mut cars = rng.gen_range(0..=MAX_CARS);
        let persons = rng.gen_range(0..=MAX_PERSONS);
        if cars + persons == 0 {
            cars = 1;
        }
        Self {
            seed,
            width,
            height,
            horizon: rng.gen_range(0.3..0.5),
            vanishing_x: rng.gen_range(0.3..0.7),
            road_bottom_x: rng.gen_range(0.35..0.65),
            road_width: rng.gen_range(0.5..0.9),
            sidewalk_width: rng.gen_range(0.15..0.5),
            building_blocks: rng.gen_range(2..=8),
            pole_density: rng.gen_range(0.05..0.95),
            vegetation_density: rng.gen_range(0.05..0.95),
            fence_density: rng.gen_range(0.05..0.95),
            cars,
            persons,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fractions = [
            ("horizon", self.horizon),
            ("vanishing_x", self.vanishing_x),
            ("road_bottom_x", self.road_bottom_x),
            ("road_width", self.road_width),
            ("sidewalk_width", self.sidewalk_width),
            ("pole_density", self.pole_density),
            ("vegetation_density", self.vegetation_density),
            ("fence_density", self.fence_density),
        ];
        for (name, v) in fractions {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidSpec(format!("{name} = {v} is not in (0, 1)")));
            }
        }
        if self.width < 8 || self.height < 8 {
            return Err(Error::InvalidSpec(format!(
                "frame {}x{} is too small",
                self.width, self.height
            )));
        }
        if self.cars > MAX_CARS || self.persons > MAX_PERSONS {
            return Err(Error::InvalidSpec("too many dynamic objects".into()));
        }
        Ok(())
    }
}

/// Class ids the renderer paints with.
#[derive(Clone, Copy, Debug)]
pub struct SceneClasses {
    pub sky: ClassId,
    pub road: ClassId,
    pub sidewalk: ClassId,
    pub building: ClassId,
    pub fence: ClassId,
    pub pole: ClassId,
    pub vegetation: ClassId,
    pub person: ClassId,
    pub car: ClassId,
}

impl SceneClasses {
    /// Looks the classes up by name. Sky is painted as `Sky` when the
    /// taxonomy has it and as `Unlabeled` otherwise.
    pub fn from_taxonomy(tax: &ClassTaxonomy) -> Result<Self> {
        let get = |name: &str| {
            tax.id_of(name)
                .ok_or_else(|| Error::MissingClass(name.to_string(), tax.name().to_string()))
        };
        Ok(Self {
            sky: tax.id_of("Sky").unwrap_or(tax.unlabeled()),
            road: get("Road")?,
            sidewalk: get("Sidewalk")?,
            building: get("Building")?,
            fence: get("Fence")?,
            pole: get("Pole")?,
            vegetation: get("Vegetation")?,
            person: get("Person")?,
            car: get("Car")?,
        })
    }

    pub fn carla9() -> Self {
        let tax = ClassTaxonomy::builtin("carla9").expect("built-in taxonomy");
        Self::from_taxonomy(&tax).expect("carla9 has every scene class")
    }
}

struct Street {
    width: f64,
    height: f64,
    horizon: f64,
    vanishing_x: f64,
    bottom_x: f64,
    road_half: f64,
    side_half: f64,
}

impl Street {
    fn new(spec: &SceneSpec) -> Self {
        let (w, h) = (spec.width as f64, spec.height as f64);
        let road_half = spec.road_width * w / 2.0;
        Self {
            width: w,
            height: h,
            horizon: spec.horizon * h,
            vanishing_x: spec.vanishing_x * w,
            bottom_x: spec.road_bottom_x * w,
            road_half,
            side_half: road_half * (1.0 + spec.sidewalk_width),
        }
    }

    /// Perspective depth factor: 0 at the horizon, 1 at the bottom row.
    fn depth(&self, y: f64) -> f64 {
        (y - self.horizon) / (self.height - self.horizon)
    }

    fn row_at(&self, t: f64) -> f64 {
        self.horizon + t * (self.height - self.horizon)
    }

    fn center(&self, t: f64) -> f64 {
        self.vanishing_x + t * (self.bottom_x - self.vanishing_x)
    }
}

/// Paints every pixel whose center satisfies `inside`, within a bounding box.
fn paint(
    map: &mut LabelMap,
    (x0, y0, x1, y1): (f64, f64, f64, f64),
    label: ClassId,
    inside: impl Fn(f64, f64) -> bool,
) {
    let (w, h) = (map.width() as f64, map.height() as f64);
    let xa = x0.max(0.0).floor() as usize;
    let ya = y0.max(0.0).floor() as usize;
    let xb = x1.min(w).ceil().max(0.0) as usize;
    let yb = y1.min(h).ceil().max(0.0) as usize;
    for y in ya..yb {
        for x in xa..xb {
            let (px, py) = (x as f64 + 0.5, y as f64 + 0.5);
            if inside(px, py) {
                map.set(x, y, label);
            }
        }
    }
}

fn fill_rect(map: &mut LabelMap, x0: f64, y0: f64, x1: f64, y1: f64, label: ClassId) {
    paint(map, (x0, y0, x1, y1), label, |x, y| {
        x >= x0 && x < x1 && y >= y0 && y < y1
    });
}

fn fill_circle(map: &mut LabelMap, cx: f64, cy: f64, r: f64, label: ClassId) {
    paint(map, (cx - r, cy - r, cx + r, cy + r), label, |x, y| {
        (x - cx).powi(2) + (y - cy).powi(2) <= r * r
    });
}

fn fill_rounded_rect(map: &mut LabelMap, x0: f64, y0: f64, x1: f64, y1: f64, r: f64, label: ClassId) {
    let r = r.min((x1 - x0) / 2.0).min((y1 - y0) / 2.0).max(0.0);
    paint(map, (x0, y0, x1, y1), label, |x, y| {
        if x < x0 || x >= x1 || y < y0 || y >= y1 {
            return false;
        }
        let cx = x.clamp(x0 + r, x1 - r);
        let cy = y.clamp(y0 + r, y1 - r);
        (x - cx).powi(2) + (y - cy).powi(2) <= r * r
    });
}

/// Vertical capsule: a rectangle with semicircular caps.
fn fill_capsule(map: &mut LabelMap, cx: f64, top: f64, bottom: f64, half_w: f64, label: ClassId) {
    paint(map, (cx - half_w, top, cx + half_w, bottom), label, |x, y| {
        let cy = y.clamp(top + half_w, (bottom - half_w).max(top + half_w));
        (x - cx).powi(2) + (y - cy).powi(2) <= half_w * half_w
    });
}

/// Renders the object-free frame, back to front.
pub fn render_static(spec: &SceneSpec, classes: &SceneClasses) -> LabelMap {
    let mut rng = rng_from_seed(seed_for(spec.seed, 1));
    let st = Street::new(spec);
    let (w, h) = (st.width, st.height);
    let mut map = LabelMap::filled(spec.width, spec.height, classes.sky);

    // building blocks partition the columns; some blocks are gaps showing sky
    let blocks = spec.building_blocks.max(1) as usize;
    let mut cuts: Vec<f64> = (0..blocks - 1).map(|_| rng.gen_range(0.0..w)).collect();
    cuts.push(0.0);
    cuts.push(w);
    cuts.sort_by(f64::total_cmp);
    for pair in cuts.windows(2) {
        if rng.gen_bool(0.15) {
            continue;
        }
        let top = st.horizon * (1.0 - rng.gen_range(0.15..0.95));
        fill_rect(&mut map, pair[0], top, pair[1], h, classes.building);
    }

    // fence wedges hugging the outer sidewalk edge
    for side in [-1.0, 1.0] {
        if !rng.gen_bool(spec.fence_density) {
            continue;
        }
        let thickness = rng.gen_range(0.03..0.08) * w;
        paint(&mut map, (0.0, st.horizon, w, h), classes.fence, |x, y| {
            let t = st.depth(y);
            if t <= 0.0 {
                return false;
            }
            let edge = st.center(t) + side * st.side_half * t;
            let d = (x - edge) * side;
            d >= 0.0 && d < thickness * t
        });
    }

    // trees standing just outside the sidewalks
    let trees = (spec.vegetation_density * 8.0).round() as usize;
    for _ in 0..trees {
        let side = if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        let t = rng.gen_range(0.08..1.0);
        let base = st.row_at(t);
        let x = st.center(t) + side * st.side_half * t * rng.gen_range(1.02..1.3);
        let r = (rng.gen_range(0.05..0.12) * h * t).max(1.0);
        fill_rect(
            &mut map,
            x - r * 0.15,
            base - 2.0 * r,
            x + r * 0.15,
            base,
            classes.vegetation,
        );
        fill_circle(&mut map, x, base - 2.2 * r, r, classes.vegetation);
    }

    paint(&mut map, (0.0, st.horizon, w, h), classes.sidewalk, |x, y| {
        let t = st.depth(y);
        t > 0.0 && (x - st.center(t)).abs() < st.side_half * t
    });
    paint(&mut map, (0.0, st.horizon, w, h), classes.road, |x, y| {
        let t = st.depth(y);
        t > 0.0 && (x - st.center(t)).abs() < st.road_half * t
    });

    let poles = (spec.pole_density * 6.0).round() as usize;
    for _ in 0..poles {
        let side = if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        let t = rng.gen_range(0.1..1.0);
        let base = st.row_at(t);
        let x = st.center(t) + side * t * (st.road_half + 0.6 * (st.side_half - st.road_half));
        let half_w = (0.006 * w * t).max(0.5);
        let height = 0.55 * h * t;
        fill_rect(&mut map, x - half_w, base - height, x + half_w, base, classes.pole);
    }
    map
}

enum Object {
    Car { x: f64, base: f64, width: f64, height: f64 },
    Person { x: f64, base: f64, width: f64, height: f64 },
}

impl Object {
    fn base(&self) -> f64 {
        match self {
            Object::Car { base, .. } | Object::Person { base, .. } => *base,
        }
    }
}

fn place_objects(spec: &SceneSpec, st: &Street) -> Vec<Object> {
    let mut rng = rng_from_seed(seed_for(spec.seed, 2));
    let mut objects = Vec::new();
    for _ in 0..spec.cars {
        let t = rng.gen_range(0.15..1.05);
        let width = (t * 2.0 * st.road_half * rng.gen_range(0.28..0.42)).max(3.0);
        let height = (width * rng.gen_range(0.45..0.6)).max(2.0);
        let slack = (st.road_half * t - width / 2.0).max(0.0);
        let x = st.center(t) + rng.gen_range(-1.0..=1.0) * slack;
        objects.push(Object::Car {
            x,
            base: st.row_at(t),
            width,
            height,
        });
    }
    for _ in 0..spec.persons {
        let t = rng.gen_range(0.15..1.0);
        let width = (0.025 * st.width * t).max(2.0);
        let height = width * rng.gen_range(3.0..4.0);
        let on_road = rng.gen_bool(0.2);
        let side = if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
        let lateral = if on_road {
            rng.gen_range(0.0..1.0) * st.road_half
        } else {
            st.road_half + rng.gen_range(0.1..0.9) * (st.side_half - st.road_half)
        };
        objects.push(Object::Person {
            x: st.center(t) + side * t * lateral,
            base: st.row_at(t),
            width,
            height,
        });
    }
    // painter's order: far objects first
    objects.sort_by(|a, b| a.base().total_cmp(&b.base()));
    objects
}

fn draw_object(map: &mut LabelMap, object: &Object, classes: &SceneClasses) {
    match *object {
        Object::Car { x, base, width, height } => {
            let wheel_h = (0.14 * height).max(1.0);
            let body_bottom = base - wheel_h;
            let (x0, x1) = (x - width / 2.0, x + width / 2.0);
            fill_rounded_rect(
                map,
                x0,
                body_bottom - height,
                x1,
                body_bottom,
                0.2 * height,
                classes.car,
            );
            let wheel_w = (0.18 * width).max(1.0);
            fill_rect(
                map,
                x0 + 0.08 * width,
                body_bottom - 1.0,
                x0 + 0.08 * width + wheel_w,
                base,
                classes.car,
            );
            fill_rect(
                map,
                x1 - 0.08 * width - wheel_w,
                body_bottom - 1.0,
                x1 - 0.08 * width,
                base,
                classes.car,
            );
        }
        Object::Person { x, base, width, height } => {
            fill_capsule(map, x, base - height, base, width / 2.0, classes.person)
        }
    }
}

/// Renders the static frame, overlays the dynamic objects, and derives the mask.
pub fn render_pair(spec: &SceneSpec, classes: &SceneClasses, tax: &ClassTaxonomy) -> Result<PairedSample> {
    spec.validate()?;
    let static_frame = render_static(spec, classes);
    let st = Street::new(spec);
    let mut dynamic_frame = static_frame.clone();
    for object in place_objects(spec, &st) {
        draw_object(&mut dynamic_frame, &object, classes);
    }
    let mask = extract_dynamic_mask(&dynamic_frame, tax, 0);
    Ok(PairedSample::new(
        format!("scene-{:016x}", spec.seed),
        dynamic_frame,
        static_frame,
        mask,
    )?)
}

/// Renders a pair with the `carla9` classes.
pub fn generate_scene_pair(spec: &SceneSpec) -> Result<PairedSample> {
    let tax = ClassTaxonomy::builtin("carla9").expect("built-in taxonomy");
    render_pair(spec, &SceneClasses::from_taxonomy(&tax)?, &tax)
}

fn seed_for(seed: u64, stream: u64) -> u64 {
    seminpaint_core::seed::derive_seed(seed, stream)
}
