use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ImageError {
    #[error("empty image")]
    Empty,
    #[error("{height}x{width} image needs {expected} pixels, got {got}")]
    Size { height: usize, width: usize, expected: usize, got: usize },
}

/// Row-major grayscale raster with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GrayImage {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<f64>,
}

impl GrayImage {
    pub fn new(height: usize, width: usize, pixels: Vec<f64>) -> Result<Self, ImageError> {
        if height == 0 || width == 0 {
            return Err(ImageError::Empty);
        }
        if pixels.len() != height * width {
            return Err(ImageError::Size { height, width, expected: height * width, got: pixels.len() });
        }
        Ok(Self { height, width, pixels })
    }

    pub fn filled(height: usize, width: usize, value: f64) -> Self {
        Self { height, width, pixels: vec![value; height * width] }
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.pixels[row * self.width + col] = v;
    }

    pub fn mean(&self) -> f64 {
        self.pixels.iter().sum::<f64>() / self.pixels.len() as f64
    }
}
