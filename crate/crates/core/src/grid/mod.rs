//! Grid geometry, wave regions and spatial treatment assignment.
//!
//! Parcels live on a square integer grid (408 × 408 by default). New land is
//! released in waves; waves announced on the same day form an
//! [`AnnouncementGroup`]. Treatment is assigned from the Euclidean distance
//! between a transacted bundle and the group's newly announced regions.

mod distance;
mod wave_file;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use distance::{
    assign_near, contiguity_check, distance_to_announcement, distance_to_region,
    euclidean_distance, nearest_to_announcement, nearest_to_region, squared_distance, Nearest,
};
pub use wave_file::{load_waves, read_waves, write_waves, RegionSpec, WaveRecord};

/// Edge length of the default map.
pub const DEFAULT_MAP_SIZE: u32 = 408;

/// Largest Chebyshev spread a bundle may have and still count as one
/// location (the XL estate edge).
pub const DEFAULT_CONTIGUITY_THRESHOLD: u32 = 24;

#[derive(Debug, Error)]
pub enum GridError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("coordinate ({x}, {y}) outside the {map_size}x{map_size} map")]
    OutOfBounds { x: i64, y: i64, map_size: u32 },
    #[error("duplicate coordinate ({x}, {y}) in region")]
    DuplicateCoord { x: u32, y: u32 },
    #[error("degenerate group: need at least 2 samples, got {0}")]
    DegenerateGroup(usize),
    #[error("group {group_id} mixes announcement dates {first} and {second}")]
    MixedAnnouncementDates {
        group_id: u32,
        first: NaiveDate,
        second: NaiveDate,
    },
    #[error("wave {wave_id}: announce date {announce} is after sale date {sale}")]
    SaleBeforeAnnouncement {
        wave_id: u32,
        announce: NaiveDate,
        sale: NaiveDate,
    },
    #[error("wave file: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A parcel position in grid units.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Coord {
    pub x: u32,
    pub y: u32,
}

impl Coord {
    pub const fn new(x: u32, y: u32) -> Self {
        Self { x, y }
    }

    /// Builds a coordinate, rejecting anything outside `[0, map_size)²`.
    pub fn checked(x: i64, y: i64, map_size: u32) -> Result<Self, GridError> {
        let limit = i64::from(map_size);
        if x < 0 || y < 0 || x >= limit || y >= limit {
            return Err(GridError::OutOfBounds { x, y, map_size });
        }
        Ok(Self::new(x as u32, y as u32))
    }

    pub fn within(&self, map_size: u32) -> bool {
        self.x < map_size && self.y < map_size
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

/// Inclusive axis-aligned rectangle `[x0, x1] × [y0, y1]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl Rect {
    pub fn new(x0: u32, y0: u32, x1: u32, y1: u32) -> Self {
        Self {
            x0: x0.min(x1),
            y0: y0.min(y1),
            x1: x0.max(x1),
            y1: y0.max(y1),
        }
    }

    pub fn area(&self) -> u64 {
        u64::from(self.x1 - self.x0 + 1) * u64::from(self.y1 - self.y0 + 1)
    }

    pub fn coords(&self) -> impl Iterator<Item = Coord> + '_ {
        (self.y0..=self.y1).flat_map(move |y| (self.x0..=self.x1).map(move |x| Coord::new(x, y)))
    }

    pub fn contains(&self, c: Coord) -> bool {
        (self.x0..=self.x1).contains(&c.x) && (self.y0..=self.y1).contains(&c.y)
    }
}

/// Non-empty set of distinct parcels inside the map.
///
/// Parcels are kept sorted by `(y, x)` and indexed by row so nearest-parcel
/// queries scan rows outward from the query point.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    parcels: Vec<Coord>,
    rows: BTreeMap<u32, Vec<u32>>,
}

impl Region {
    /// Explicit coordinate list; duplicates are an error.
    pub fn new(parcels: Vec<Coord>, map_size: u32) -> Result<Self, GridError> {
        let mut seen = BTreeSet::new();
        for c in &parcels {
            if !c.within(map_size) {
                return Err(GridError::OutOfBounds {
                    x: i64::from(c.x),
                    y: i64::from(c.y),
                    map_size,
                });
            }
            if !seen.insert((c.y, c.x)) {
                return Err(GridError::DuplicateCoord { x: c.x, y: c.y });
            }
        }
        Self::from_sorted_set(seen)
    }

    /// Union of inclusive rectangles. Overlapping rectangles are merged.
    pub fn from_rects(rects: &[Rect], map_size: u32) -> Result<Self, GridError> {
        let mut seen = BTreeSet::new();
        for r in rects {
            if r.x1 >= map_size || r.y1 >= map_size {
                return Err(GridError::OutOfBounds {
                    x: i64::from(r.x1),
                    y: i64::from(r.y1),
                    map_size,
                });
            }
            seen.extend(r.coords().map(|c| (c.y, c.x)));
        }
        Self::from_sorted_set(seen)
    }

    fn from_sorted_set(set: BTreeSet<(u32, u32)>) -> Result<Self, GridError> {
        if set.is_empty() {
            return Err(GridError::InvalidInput("region has no parcels".into()));
        }
        let mut rows: BTreeMap<u32, Vec<u32>> = BTreeMap::new();
        let parcels = set
            .into_iter()
            .map(|(y, x)| {
                rows.entry(y).or_default().push(x);
                Coord::new(x, y)
            })
            .collect();
        Ok(Self { parcels, rows })
    }

    pub fn parcels(&self) -> &[Coord] {
        &self.parcels
    }

    pub fn len(&self) -> usize {
        self.parcels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parcels.is_empty()
    }

    pub fn contains(&self, c: Coord) -> bool {
        self.rows
            .get(&c.y)
            .is_some_and(|xs| xs.binary_search(&c.x).is_ok())
    }

    /// Squared distance from `p` to the nearest parcel of the region.
    pub fn nearest_squared(&self, p: Coord) -> u64 {
        let mut best = u64::MAX;
        let mut below = self.rows.range(..=p.y).rev().peekable();
        let mut above = self.rows.range(p.y + 1..).peekable();
        loop {
            let dy_below = below.peek().map(|(y, _)| u64::from(p.y - **y));
            let dy_above = above.peek().map(|(y, _)| u64::from(**y - p.y));
            let (dy, xs) = match (dy_below, dy_above) {
                (None, None) => break,
                (Some(a), Some(b)) if a <= b => (a, below.next().unwrap().1),
                (Some(a), None) => (a, below.next().unwrap().1),
                (_, Some(b)) => (b, above.next().unwrap().1),
            };
            if dy * dy >= best {
                break;
            }
            let dx = nearest_gap(xs, p.x);
            best = best.min(dy * dy + dx * dx);
        }
        best
    }
}

/// Smallest |x - target| over a sorted, non-empty row.
fn nearest_gap(xs: &[u32], target: u32) -> u64 {
    match xs.binary_search(&target) {
        Ok(_) => 0,
        Err(i) => {
            let right = xs.get(i).map(|x| u64::from(x - target));
            let left = i.checked_sub(1).map(|j| u64::from(target - xs[j]));
            match (left, right) {
                (Some(l), Some(r)) => l.min(r),
                (Some(l), None) => l,
                (None, Some(r)) => r,
                (None, None) => u64::MAX,
            }
        }
    }
}

/// One release of new parcels.
#[derive(Debug, Clone, PartialEq)]
pub struct Wave {
    pub wave_id: u32,
    pub group_id: u32,
    pub name: String,
    pub announce_date: NaiveDate,
    pub sale_date: NaiveDate,
    pub region: Region,
    pub land_offered: usize,
}

impl Wave {
    pub fn validate(&self) -> Result<(), GridError> {
        if self.announce_date > self.sale_date {
            return Err(GridError::SaleBeforeAnnouncement {
                wave_id: self.wave_id,
                announce: self.announce_date,
                sale: self.sale_date,
            });
        }
        if self.land_offered != self.region.len() {
            log::debug!(
                "wave {}: land_offered {} differs from {} enumerated parcels",
                self.wave_id,
                self.land_offered,
                self.region.len()
            );
        }
        Ok(())
    }
}

/// Waves sharing one announcement date.
#[derive(Debug, Clone, PartialEq)]
pub struct AnnouncementGroup {
    pub group_id: u32,
    pub announce_date: NaiveDate,
    pub waves: Vec<Wave>,
    /// True iff the announcement released more than one wave.
    pub multi: bool,
}

impl AnnouncementGroup {
    /// Groups waves by `group_id`, ordered by id.
    pub fn from_waves(waves: &[Wave]) -> Result<Vec<Self>, GridError> {
        let mut by_group: BTreeMap<u32, Vec<Wave>> = BTreeMap::new();
        for w in waves {
            w.validate()?;
            by_group.entry(w.group_id).or_default().push(w.clone());
        }
        by_group
            .into_iter()
            .map(|(group_id, waves)| {
                let announce_date = waves[0].announce_date;
                if let Some(other) = waves.iter().find(|w| w.announce_date != announce_date) {
                    return Err(GridError::MixedAnnouncementDates {
                        group_id,
                        first: announce_date,
                        second: other.announce_date,
                    });
                }
                Ok(Self {
                    group_id,
                    announce_date,
                    multi: waves.len() > 1,
                    waves,
                })
            })
            .collect()
    }

    pub fn regions(&self) -> impl Iterator<Item = &Region> {
        self.waves.iter().map(|w| &w.region)
    }
}
