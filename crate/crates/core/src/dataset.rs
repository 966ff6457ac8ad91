//! Labeled datasets, binary PPM decoding, and directory-structured loading.
//!
//! A dataset root holds one subdirectory per class; every file inside a
//! class directory is decoded as an image. Files that fail to decode are
//! skipped and reported in the [`DatasetManifest`].

use std::collections::HashSet;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::descriptors::RasterImage;
use crate::error::{DecodeError, Error, Result};

/// An image with its identifier and class index.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledImage {
    pub id: String,
    pub image: RasterImage,
    pub class: usize,
}

/// Images with class labels; at least two items, unique ids.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset {
    items: Vec<LabeledImage>,
    classes: Vec<String>,
}

impl LabeledDataset {
    /// Builds a dataset from `(id, image, class name)` triples. Class indices
    /// follow order of first appearance.
    pub fn new(items: impl IntoIterator<Item = (String, RasterImage, String)>) -> Result<Self> {
        let mut classes: Vec<String> = Vec::new();
        let mut ids = HashSet::new();
        let mut out = Vec::new();
        for (id, image, class_name) in items {
            if !ids.insert(id.clone()) {
                return Err(Error::InvalidInput(format!("duplicate image id {id:?}")));
            }
            let class = match classes.iter().position(|c| *c == class_name) {
                Some(i) => i,
                None => {
                    classes.push(class_name);
                    classes.len() - 1
                }
            };
            out.push(LabeledImage { id, image, class });
        }
        if out.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a dataset needs at least 2 items, got {}",
                out.len()
            )));
        }
        Ok(LabeledDataset {
            items: out,
            classes,
        })
    }

    pub fn items(&self) -> &[LabeledImage] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Class index of every item, in item order.
    pub fn labels(&self) -> Vec<usize> {
        self.items.iter().map(|i| i.class).collect()
    }

    pub fn class_name(&self, item: usize) -> &str {
        &self.classes[self.items[item].class]
    }

    /// The items at `indices`, in that order. Class indices are preserved.
    pub fn subset(&self, indices: &[usize]) -> Result<Self> {
        if indices.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "a dataset needs at least 2 items, got {}",
                indices.len()
            )));
        }
        let items = indices
            .iter()
            .map(|&i| {
                self.items.get(i).cloned().ok_or_else(|| {
                    Error::InvalidArgument(format!("item {i} out of range"))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(LabeledDataset {
            items,
            classes: self.classes.clone(),
        })
    }
}

fn skip_whitespace_and_comments(bytes: &[u8], pos: &mut usize) {
    while *pos < bytes.len() {
        match bytes[*pos] {
            b'#' => {
                while *pos < bytes.len() && bytes[*pos] != b'\n' {
                    *pos += 1;
                }
            }
            b if b.is_ascii_whitespace() => *pos += 1,
            _ => break,
        }
    }
}

fn header_number(bytes: &[u8], pos: &mut usize, what: &str) -> Result<u32, DecodeError> {
    skip_whitespace_and_comments(bytes, pos);
    let start = *pos;
    while *pos < bytes.len() && bytes[*pos].is_ascii_digit() {
        *pos += 1;
    }
    if start == *pos {
        return Err(DecodeError::MalformedHeader(format!("missing {what}")));
    }
    std::str::from_utf8(&bytes[start..*pos])
        .expect("ascii digits")
        .parse()
        .map_err(|_| DecodeError::MalformedHeader(format!("{what} out of range")))
}

/// Decodes a binary (P6) PPM with maxval 255.
pub fn decode_ppm(bytes: &[u8]) -> Result<RasterImage, DecodeError> {
    if bytes.len() < 2 || bytes[0] != b'P' {
        return Err(DecodeError::MalformedHeader("missing P magic number".into()));
    }
    if bytes[1] != b'6' {
        return Err(DecodeError::UnsupportedVariant(
            String::from_utf8_lossy(&bytes[..2]).into_owned(),
        ));
    }
    let mut pos = 2;
    if bytes.get(pos).is_some_and(|b| !b.is_ascii_whitespace() && *b != b'#') {
        return Err(DecodeError::MalformedHeader("no whitespace after magic".into()));
    }
    let width = header_number(bytes, &mut pos, "width")?;
    let height = header_number(bytes, &mut pos, "height")?;
    let maxval = header_number(bytes, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(DecodeError::MalformedHeader(format!(
            "zero dimension {width}x{height}"
        )));
    }
    if maxval != 255 {
        return Err(DecodeError::UnsupportedMaxval(maxval));
    }
    // exactly one whitespace byte separates the header from the raster
    match bytes.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => {
            return Err(DecodeError::MalformedHeader(
                "no whitespace after maxval".into(),
            ))
        }
    }
    let (w, h) = (width as usize, height as usize);
    let expected = w
        .checked_mul(h)
        .and_then(|p| p.checked_mul(3))
        .ok_or_else(|| DecodeError::MalformedHeader("image too large".into()))?;
    let data = &bytes[pos..];
    if data.len() < expected {
        return Err(DecodeError::TruncatedData {
            expected,
            found: data.len(),
        });
    }
    let pixels = data[..expected]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    Ok(RasterImage::new(w, h, pixels).expect("dimensions checked above"))
}

pub fn encode_ppm(image: &RasterImage) -> Vec<u8> {
    let mut out = format!("P6\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.reserve(image.pixels().len() * 3);
    for px in image.pixels() {
        out.extend_from_slice(px);
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DecodeStatus {
    Ok,
    Skipped { reason: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Path relative to the dataset root, `/`-separated.
    pub path: String,
    pub class: String,
    pub status: DecodeStatus,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub root: PathBuf,
    pub classes: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn skipped(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries
            .iter()
            .filter(|e| matches!(e.status, DecodeStatus::Skipped { .. }))
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

fn sorted_entries(dir: &Path) -> Result<Vec<fs::DirEntry>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .collect::<std::io::Result<Vec<_>>>()
        .map_err(|e| Error::io(dir, e))?;
    entries.sort_by(|a, b| {
        a.file_name()
            .as_encoded_bytes()
            .cmp(b.file_name().as_encoded_bytes())
    });
    Ok(entries)
}

/// Loads `root/<class>/<image>`; items are ordered by class name then file name.
pub fn load_dataset(root: impl AsRef<Path>) -> Result<(LabeledDataset, DatasetManifest)> {
    let root = root.as_ref();
    let mut manifest = DatasetManifest {
        root: root.to_path_buf(),
        classes: Vec::new(),
        entries: Vec::new(),
    };
    let mut items = Vec::new();
    for class_entry in sorted_entries(root)? {
        let class_path = class_entry.path();
        if !class_path.is_dir() {
            continue;
        }
        let class = class_entry.file_name().to_string_lossy().into_owned();
        manifest.classes.push(class.clone());
        for file in sorted_entries(&class_path)? {
            let path = file.path();
            if !path.is_file() {
                continue;
            }
            let name = file.file_name().to_string_lossy().into_owned();
            let rel = format!("{class}/{name}");
            let status = match fs::read(&path) {
                Err(e) => DecodeStatus::Skipped {
                    reason: e.to_string(),
                },
                Ok(bytes) => match decode_ppm(&bytes) {
                    Ok(image) => {
                        items.push((rel.clone(), image, class.clone()));
                        DecodeStatus::Ok
                    }
                    Err(e) => DecodeStatus::Skipped {
                        reason: e.to_string(),
                    },
                },
            };
            manifest.entries.push(ManifestEntry {
                path: rel,
                class: class.clone(),
                status,
            });
        }
    }
    if items.is_empty() {
        return Err(Error::EmptyDataset(root.to_path_buf()));
    }
    let dataset = LabeledDataset::new(items)?;
    Ok((dataset, manifest))
}

/// Writes a dataset as `root/<class>/<id file name>.ppm`, the layout [`load_dataset`] reads.
pub fn write_dataset(dataset: &LabeledDataset, root: impl AsRef<Path>) -> Result<()> {
    let root = root.as_ref();
    for (i, item) in dataset.items().iter().enumerate() {
        let dir = root.join(dataset.class_name(i));
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        let stem = item.id.rsplit('/').next().unwrap_or(&item.id);
        let name = if stem.ends_with(".ppm") {
            stem.to_string()
        } else {
            format!("{stem}.ppm")
        };
        let path = dir.join(name);
        fs::write(&path, encode_ppm(&item.image)).map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}
