use msef_core::{rng, GrayImage};
use rand::Rng;

use super::effects::SceneSpec;
use crate::error::Result;
use crate::records::{quantize, FEATURE_HI, FEATURE_LO};

pub const SIZE: usize = 32;
pub const CELL: usize = 4;
const GRID: usize = SIZE / CELL;
const BACKGROUND: f64 = 0.05;

/// Attribute slots in the order their cell blocks appear. Slots `0..9` are
/// the features, slot 9 is openness.
pub const LAYOUT: [(&str, usize); 10] = [
    ("greenery", 1),
    ("openness", 9),
    ("visual_richness", 3),
    ("public_amenities", 2),
    ("commercial_intensity", 7),
    ("perceived_safety", 4),
    ("pedestrian_width", 0),
    ("connectivity", 8),
    ("motorization", 5),
    ("vehicle_lane_width", 6),
];

/// Cell indices (row-major on the 8×8 cell grid) owned by each layout slot.
/// Greenery sits in the top band and vehicle lane width in the bottom band.
pub fn cells(attribute: &str) -> Option<Vec<usize>> {
    let slot = LAYOUT.iter().position(|(name, _)| *name == attribute)?;
    Some(match slot {
        0 => (0..6).collect(),
        9 => (58..64).collect(),
        s => {
            let start = GRID + (s - 1) * 6;
            (start..start + 6).collect()
        }
    })
}

fn level(v: f64) -> f64 {
    (v - FEATURE_LO) / (FEATURE_HI - FEATURE_LO)
}

/// Renders a 32×32 raster whose cell blocks encode the scene attributes.
///
/// Inside a block every pixel has a base intensity rising with the
/// attribute (at a per-cell rate drawn from the seed) and is lit with
/// probability proportional to it. All uniforms come from the spec seed, so
/// the block mean is strictly increasing in its attribute when everything
/// else is held fixed.
pub fn render_scene(spec: &SceneSpec) -> Result<GrayImage> {
    spec.check()?;
    let mut img = GrayImage::filled(SIZE, SIZE, BACKGROUND);
    let mut r = rng::stream(spec.seed, rng::key_stream("render"));
    let uniforms: Vec<f64> = (0..SIZE * SIZE).map(|_| r.random::<f64>()).collect();
    let texture: Vec<f64> = (0..GRID * GRID).map(|_| r.random::<f64>()).collect();
    for (name, slot) in LAYOUT {
        let value = if slot == 9 { spec.openness } else { spec.features[slot] };
        let l = level(value);
        for cell in cells(name).expect("layout names are known") {
            let base = BACKGROUND + (0.1 + 0.7 * texture[cell]) * l;
            let (cr, cc) = (cell / GRID, cell % GRID);
            for dr in 0..CELL {
                for dc in 0..CELL {
                    let (row, col) = (cr * CELL + dr, cc * CELL + dc);
                    let lit = uniforms[row * SIZE + col] < 0.8 * l;
                    img.set(row, col, if lit { base + 0.1 } else { base });
                }
            }
        }
    }
    for p in &mut img.pixels {
        *p = f64::from(quantize(*p)) / 255.0;
    }
    Ok(img)
}

/// Mean intensity over an attribute's cell blocks.
pub fn band_mean(image: &GrayImage, attribute: &str) -> Option<f64> {
    let cells = cells(attribute)?;
    let mut sum = 0.0;
    for cell in &cells {
        let (cr, cc) = (cell / GRID, cell % GRID);
        for dr in 0..CELL {
            for dc in 0..CELL {
                sum += image.get(cr * CELL + dr, cc * CELL + dc);
            }
        }
    }
    Some(sum / (cells.len() * CELL * CELL) as f64)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn layout_tiles_sixty_cells() {
        let mut all: Vec<usize> = LAYOUT.iter().flat_map(|(n, _)| cells(n).unwrap()).collect();
        all.sort_unstable();
        all.dedup();
        assert_eq!(all.len(), 60);
    }

    #[test]
    fn minimal_scene_is_flat() {
        let img = render_scene(&SceneSpec::uniform(1.0, 9)).unwrap();
        let first = img.pixels[0];
        assert!(img.pixels.iter().all(|p| *p == first));
        assert!(first < 0.1);
    }

    #[test]
    fn rendering_is_deterministic() {
        let s = SceneSpec::uniform(4.3, 17);
        assert_eq!(render_scene(&s).unwrap(), render_scene(&s).unwrap());
    }

    #[test]
    fn greenery_raises_top_band() {
        let mut s = SceneSpec::uniform(4.0, 5);
        s.features[1] = 1.0;
        let low = band_mean(&render_scene(&s).unwrap(), "greenery").unwrap();
        s.features[1] = 7.0;
        let high = band_mean(&render_scene(&s).unwrap(), "greenery").unwrap();
        assert!(high > low);
    }
}
