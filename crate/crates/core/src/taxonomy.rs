//! Class universes split into static and dynamic categories.
//!
//! Two taxonomies are embedded: `carla9` (7 static + Person, Car) for the
//! simulator-style paired dataset and `cityscapes12` (8 static + 4 dynamic)
//! for real street scenes. Others are loaded from JSON files of the form
//!
//! ```json
//! { "name": "...",
//!   "classes": [ { "id": 0, "name": "Unlabeled", "kind": "static", "color": [0, 0, 0] } ],
//!   "remap": { "26": 9 } }
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::labelmap::{ClassId, LabelMap};

/// Environment variable naming a directory searched for `<name>.json` taxonomy files.
pub const TAXONOMY_DIR_ENV: &str = "SEMINPAINT_TAXONOMY_DIR";

/// Name of the mandatory static catch-all class.
pub const UNLABELED: &str = "Unlabeled";

const BUILTINS: &[(&str, &str)] = &[
    ("carla9", include_str!("../taxonomies/carla9.json")),
    ("cityscapes12", include_str!("../taxonomies/cityscapes12.json")),
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassKind {
    Static,
    Dynamic,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassInfo {
    pub id: ClassId,
    pub name: String,
    pub kind: ClassKind,
    pub color: [u8; 3],
}

#[derive(Debug, Serialize, Deserialize)]
struct TaxonomyFile {
    name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    notes: Option<String>,
    classes: Vec<ClassInfo>,
    #[serde(default)]
    remap: BTreeMap<u8, ClassId>,
}

/// A validated class universe `C = S ∪ D`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassTaxonomy {
    name: String,
    notes: Option<String>,
    classes: Vec<ClassInfo>,
    remap: BTreeMap<u8, ClassId>,
    static_ids: Vec<ClassId>,
    dynamic_ids: Vec<ClassId>,
    // static channel index of each class id, `None` for dynamic classes
    static_channel: Vec<Option<usize>>,
    unlabeled: ClassId,
}

impl ClassTaxonomy {
    /// Validates and builds a taxonomy. Classes may be given in any order.
    pub fn new(name: impl Into<String>, mut classes: Vec<ClassInfo>, remap: BTreeMap<u8, ClassId>) -> Result<Self> {
        let name = name.into();
        if classes.is_empty() {
            return Err(Error::Taxonomy("no classes".into()));
        }
        classes.sort_by_key(|c| c.id);
        for pair in classes.windows(2) {
            if pair[0].id == pair[1].id {
                return Err(Error::Taxonomy(format!("duplicate id {}", pair[0].id)));
            }
        }
        for (i, c) in classes.iter().enumerate() {
            if usize::from(c.id) != i {
                return Err(Error::Taxonomy(format!(
                    "ids must be contiguous from 0, missing id {i}"
                )));
            }
        }
        let static_ids: Vec<ClassId> = classes
            .iter()
            .filter(|c| c.kind == ClassKind::Static)
            .map(|c| c.id)
            .collect();
        let dynamic_ids: Vec<ClassId> = classes
            .iter()
            .filter(|c| c.kind == ClassKind::Dynamic)
            .map(|c| c.id)
            .collect();
        if static_ids.is_empty() {
            return Err(Error::Taxonomy("empty static set".into()));
        }
        if dynamic_ids.is_empty() {
            return Err(Error::Taxonomy("empty dynamic set".into()));
        }
        let unlabeled = classes
            .iter()
            .find(|c| c.name == UNLABELED)
            .ok_or_else(|| Error::Taxonomy("missing Unlabeled class".into()))?;
        if unlabeled.kind != ClassKind::Static {
            return Err(Error::Taxonomy("Unlabeled class must be static".into()));
        }
        let unlabeled = unlabeled.id;
        if let Some((raw, id)) = remap.iter().find(|(_, &id)| usize::from(id) >= classes.len()) {
            return Err(Error::Taxonomy(format!(
                "remap sends raw id {raw} to unknown class {id}"
            )));
        }
        let mut static_channel = vec![None; classes.len()];
        for (channel, &id) in static_ids.iter().enumerate() {
            static_channel[usize::from(id)] = Some(channel);
        }
        Ok(Self {
            name,
            notes: None,
            classes,
            remap,
            static_ids,
            dynamic_ids,
            static_channel,
            unlabeled,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: TaxonomyFile = serde_json::from_str(text)?;
        let mut tax = Self::new(file.name, file.classes, file.remap)?;
        tax.notes = file.notes;
        Ok(tax)
    }

    pub fn to_json(&self) -> String {
        let file = TaxonomyFile {
            name: self.name.clone(),
            notes: self.notes.clone(),
            classes: self.classes.clone(),
            remap: self.remap.clone(),
        };
        serde_json::to_string_pretty(&file).expect("taxonomy serializes")
    }

    /// One of the embedded taxonomies (`carla9`, `cityscapes12`).
    pub fn builtin(name: &str) -> Option<Self> {
        BUILTINS
            .iter()
            .find(|(n, _)| *n == name)
            .map(|(_, text)| Self::from_json(text).expect("embedded taxonomy is valid"))
    }

    pub fn builtin_names() -> impl Iterator<Item = &'static str> {
        BUILTINS.iter().map(|(n, _)| *n)
    }

    /// Resolves a taxonomy by built-in name, then `<name>.json` in the
    /// directory named by [`TAXONOMY_DIR_ENV`], then as a file path.
    pub fn resolve(name_or_path: &str) -> Result<Self> {
        if let Some(tax) = Self::builtin(name_or_path) {
            return Ok(tax);
        }
        if let Some(dir) = std::env::var_os(TAXONOMY_DIR_ENV) {
            let candidate = PathBuf::from(dir).join(format!("{name_or_path}.json"));
            if candidate.is_file() {
                return load_taxonomy(candidate);
            }
        }
        let path = Path::new(name_or_path);
        if path.is_file() {
            return load_taxonomy(path);
        }
        Err(Error::UnknownTaxonomy(name_or_path.to_string()))
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn notes(&self) -> Option<&str> {
        self.notes.as_deref()
    }

    pub fn classes(&self) -> &[ClassInfo] {
        &self.classes
    }

    pub fn class(&self, id: ClassId) -> Option<&ClassInfo> {
        self.classes.get(usize::from(id))
    }

    pub fn id_of(&self, name: &str) -> Option<ClassId> {
        self.classes.iter().find(|c| c.name == name).map(|c| c.id)
    }

    pub fn num_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn num_static(&self) -> usize {
        self.static_ids.len()
    }

    /// Static class ids in increasing order; position = static channel index.
    pub fn static_ids(&self) -> &[ClassId] {
        &self.static_ids
    }

    pub fn dynamic_ids(&self) -> &[ClassId] {
        &self.dynamic_ids
    }

    pub fn unlabeled(&self) -> ClassId {
        self.unlabeled
    }

    pub fn is_static(&self, id: ClassId) -> bool {
        matches!(self.static_channel.get(usize::from(id)), Some(Some(_)))
    }

    pub fn is_dynamic(&self, id: ClassId) -> bool {
        self.class(id).is_some_and(|c| c.kind == ClassKind::Dynamic)
    }

    /// Channel index of a static class in the `|S|`-channel space.
    pub fn static_channel(&self, id: ClassId) -> Option<usize> {
        self.static_channel.get(usize::from(id)).copied().flatten()
    }

    pub fn color(&self, id: ClassId) -> [u8; 3] {
        self.class(id).map_or([0, 0, 0], |c| c.color)
    }

    pub fn remap(&self) -> &BTreeMap<u8, ClassId> {
        &self.remap
    }

    /// Maps a raw source-dataset id; undeclared ids become Unlabeled.
    pub fn remap_id(&self, raw: u8) -> ClassId {
        self.remap.get(&raw).copied().unwrap_or(self.unlabeled)
    }

    /// A copy of this taxonomy whose remap is the identity on its own ids.
    pub fn with_identity_remap(&self) -> Self {
        let mut tax = self.clone();
        tax.remap = self.classes.iter().map(|c| (c.id, c.id)).collect();
        tax
    }
}

/// Reads and validates a taxonomy JSON file.
pub fn load_taxonomy(path: impl AsRef<Path>) -> Result<ClassTaxonomy> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    ClassTaxonomy::from_json(&text)
}

/// Replaces each raw id by its taxonomy id.
pub fn remap_labels(raw: &LabelMap, tax: &ClassTaxonomy) -> LabelMap {
    let mut lut = [tax.unlabeled(); 256];
    for (&from, &to) in tax.remap() {
        lut[usize::from(from)] = to;
    }
    let data = raw.data().iter().map(|&l| lut[usize::from(l)]).collect();
    LabelMap::new(raw.width(), raw.height(), data).expect("same dimensions")
}
