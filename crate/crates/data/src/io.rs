//! File formats: JSON-lines triplets, images and audit logs; CSV ratings
//! and communities.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{DataError, Result};
use crate::records::{Community, ImageRecord, QATriplet, RatingRecord};
use crate::registry::DimensionRegistry;
use crate::validate::{parse_triplet, Mode, Parsed};

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| DataError::io(path, e))?;
    Ok(sha256_bytes(&bytes))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        if !parent.is_dir() {
            return Err(DataError::io(path, std::io::Error::new(std::io::ErrorKind::NotFound, "parent directory missing")));
        }
    }
    File::create(path).map(BufWriter::new).map_err(|e| DataError::io(path, e))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| DataError::io(path, e))
}

pub fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> Result<()> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item)?;
        w.write_all(b"\n").map_err(|e| DataError::io(path, e))?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let item = serde_json::from_str(&line).map_err(|e| DataError::Line {
            path: path.display().to_string(),
            line: i + 1,
            source: Box::new(DataError::Json(e)),
        })?;
        out.push(item);
    }
    Ok(out)
}

pub fn write_triplets(path: &Path, triplets: &[QATriplet]) -> Result<()> {
    write_jsonl(path, triplets)
}

/// Every line parsed and validated; failures carry their 1-based line number.
pub struct TripletFile {
    pub parsed: Vec<(usize, Parsed)>,
    pub errors: Vec<DataError>,
}

pub fn read_triplets(path: &Path, registry: &DimensionRegistry, mode: Mode) -> Result<TripletFile> {
    let mut parsed = Vec::new();
    let mut errors = Vec::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line = line.map_err(|e| DataError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        match parse_triplet(&line, registry, mode) {
            Ok(p) => parsed.push((i + 1, p)),
            Err(e) => errors.push(DataError::Line { path: path.display().to_string(), line: i + 1, source: Box::new(e) }),
        }
    }
    Ok(TripletFile { parsed, errors })
}

pub fn write_csv<T: Serialize>(path: &Path, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| DataError::io(path, e))
}

pub fn read_csv<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_reader(open(path)?);
    r.deserialize().collect::<std::result::Result<Vec<T>, _>>().map_err(DataError::from)
}

pub fn write_ratings(path: &Path, ratings: &[RatingRecord]) -> Result<()> {
    write_csv(path, ratings)
}

pub fn read_ratings(path: &Path) -> Result<Vec<RatingRecord>> {
    let rows: Vec<RatingRecord> = read_csv(path)?;
    for (i, r) in rows.iter().enumerate() {
        let bad = match (r.skipped, r.score) {
            (false, None) => Some("missing score on a non-skipped rating".to_string()),
            (false, Some(s)) if !(1..=5).contains(&s) => Some(format!("score {s} outside 1..=5")),
            _ => None,
        };
        if let Some(reason) = bad {
            return Err(DataError::Line {
                path: path.display().to_string(),
                line: i + 2,
                source: Box::new(DataError::Invalid { field: "score".into(), reason }),
            });
        }
    }
    Ok(rows)
}

pub fn write_communities(path: &Path, communities: &[Community]) -> Result<()> {
    write_csv(path, communities)
}

pub fn read_communities(path: &Path) -> Result<Vec<Community>> {
    read_csv(path)
}

pub fn write_images(path: &Path, images: &[ImageRecord]) -> Result<()> {
    write_jsonl(path, images)
}

pub fn read_images(path: &Path) -> Result<Vec<ImageRecord>> {
    let images: Vec<ImageRecord> = read_jsonl(path)?;
    for (i, im) in images.iter().enumerate() {
        let reason = if im.image_id.is_empty() {
            Some("empty image_id".to_string())
        } else if im.pixels.len() != im.height * im.width || im.pixels.is_empty() {
            Some(format!("{}x{} raster with {} pixels", im.height, im.width, im.pixels.len()))
        } else if !im.coordinates_valid() {
            Some(format!("invalid coordinates ({}, {})", im.lat, im.lon))
        } else {
            None
        };
        if let Some(reason) = reason {
            return Err(DataError::Line {
                path: path.display().to_string(),
                line: i + 1,
                source: Box::new(DataError::Invalid { field: "image".into(), reason }),
            });
        }
    }
    Ok(images)
}
