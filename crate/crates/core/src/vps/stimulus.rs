use serde::{Deserialize, Serialize};

use super::VpsError;
use crate::cph::MAX_RATE;

/// Axis-aligned grid rectangle, half-open on the right and bottom.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub fn contains_point(&self, x: usize, y: usize) -> bool {
        x >= self.x && y >= self.y && x < self.x + self.w && y < self.y + self.h
    }

    pub fn contains(&self, other: &Rect) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.x + other.w <= self.x + self.w
            && other.y + other.h <= self.y + self.h
    }

    pub fn strictly_contains(&self, other: &Rect) -> bool {
        self.contains(other) && self != other
    }
}

/// A feature label active at some rate in one grid cell.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureCell {
    pub feature: String,
    pub rate: u8,
}

/// Retinotopic grid of feature activations.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeatureStimulus {
    width: usize,
    height: usize,
    cells: Vec<Option<FeatureCell>>,
}

impl FeatureStimulus {
    pub fn blank(width: usize, height: usize) -> Self {
        Self { width, height, cells: vec![None; width * height] }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn set(&mut self, x: i64, y: i64, feature: &str, rate: u8) -> Result<(), VpsError> {
        if rate > MAX_RATE {
            return Err(crate::cph::CphError::RateOutOfRange(rate).into());
        }
        if x < 0 || y < 0 || x as usize >= self.width || y as usize >= self.height {
            return Err(VpsError::OutOfBounds { x, y });
        }
        let i = y as usize * self.width + x as usize;
        self.cells[i] = (rate > 0).then(|| FeatureCell { feature: feature.to_owned(), rate });
        Ok(())
    }

    pub fn get(&self, x: usize, y: usize) -> Option<&FeatureCell> {
        self.cells.get(y * self.width + x).and_then(Option::as_ref)
    }

    /// Nonsilent cells as `(x, y, cell)` in row-major order.
    pub fn active_cells(&self) -> impl Iterator<Item = (usize, usize, &FeatureCell)> {
        self.cells
            .iter()
            .enumerate()
            .filter_map(move |(i, c)| c.as_ref().map(|c| (i % self.width, i / self.width, c)))
    }

    pub fn is_blank(&self) -> bool {
        self.cells.iter().all(Option::is_none)
    }
}

/// One cell of a shape, relative to the shape's anchor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShapeCell {
    pub dx: i64,
    pub dy: i64,
    pub feature: String,
    pub rate: u8,
}

/// A movable object: a set of feature cells around an anchor.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ShapeTemplate {
    pub cells: Vec<ShapeCell>,
}

impl ShapeTemplate {
    pub fn place(&self, stim: &mut FeatureStimulus, x: i64, y: i64) -> Result<(), VpsError> {
        for c in &self.cells {
            stim.set(x + c.dx, y + c.dy, &c.feature, c.rate)?;
        }
        Ok(())
    }

    pub fn render(&self, width: usize, height: usize, x: i64, y: i64) -> Result<FeatureStimulus, VpsError> {
        let mut s = FeatureStimulus::blank(width, height);
        self.place(&mut s, x, y)?;
        Ok(s)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rect_containment() {
        let big = Rect { x: 0, y: 0, w: 4, h: 4 };
        let small = Rect { x: 1, y: 1, w: 2, h: 2 };
        assert!(big.strictly_contains(&small));
        assert!(!small.contains(&big));
        assert!(big.contains(&big) && !big.strictly_contains(&big));
    }

    #[test]
    fn out_of_bounds_rejected() {
        let mut s = FeatureStimulus::blank(2, 2);
        assert!(s.set(2, 0, "bar", 5).is_err());
        assert!(s.set(0, 0, "bar", 10).is_err());
        s.set(1, 1, "bar", 5).unwrap();
        assert_eq!(s.active_cells().count(), 1);
    }
}
