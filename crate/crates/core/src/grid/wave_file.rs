use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use super::{Coord, GridError, Rect, Region, Wave};

/// Region geometry as stored on disk: inclusive rectangles `[x0, y0, x1, y1]`
/// or an explicit coordinate list.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum RegionSpec {
    Rects { rects: Vec<[u32; 4]> },
    Coords { coords: Vec<[u32; 2]> },
}

impl RegionSpec {
    pub fn expand(&self, map_size: u32) -> Result<Region, GridError> {
        match self {
            Self::Rects { rects } => {
                let rects: Vec<Rect> = rects
                    .iter()
                    .map(|r| Rect::new(r[0], r[1], r[2], r[3]))
                    .collect();
                Region::from_rects(&rects, map_size)
            }
            Self::Coords { coords } => Region::new(
                coords.iter().map(|c| Coord::new(c[0], c[1])).collect(),
                map_size,
            ),
        }
    }
}

/// One entry of the wave file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WaveRecord {
    pub wave_id: u32,
    pub group_id: u32,
    pub name: String,
    pub announce_date: NaiveDate,
    pub sale_date: NaiveDate,
    pub region: RegionSpec,
    /// Defaults to the number of enumerated parcels.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub land_offered: Option<usize>,
}

impl WaveRecord {
    pub fn into_wave(self, map_size: u32) -> Result<Wave, GridError> {
        let region = self.region.expand(map_size)?;
        let wave = Wave {
            wave_id: self.wave_id,
            group_id: self.group_id,
            name: self.name,
            announce_date: self.announce_date,
            sale_date: self.sale_date,
            land_offered: self.land_offered.unwrap_or(region.len()),
            region,
        };
        wave.validate()?;
        Ok(wave)
    }
}

/// Parses a JSON array of wave records.
pub fn read_waves<R: Read>(reader: R, map_size: u32) -> Result<Vec<Wave>, GridError> {
    let records: Vec<WaveRecord> = serde_json::from_reader(reader)?;
    records.into_iter().map(|r| r.into_wave(map_size)).collect()
}

pub fn load_waves(path: &Path, map_size: u32) -> Result<Vec<Wave>, GridError> {
    read_waves(BufReader::new(File::open(path)?), map_size)
}

pub fn write_waves<W: Write>(writer: W, records: &[WaveRecord]) -> Result<(), GridError> {
    serde_json::to_writer_pretty(writer, records)?;
    Ok(())
}
