//! Yellow-taxi trip CSV ingestion and source/destination box filtering.

use std::fs::File;
use std::io::Read;
use std::path::Path;

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Dataset;

const TIMESTAMP_FORMAT: &str = "%Y-%m-%d %H:%M:%S";

#[derive(Debug, Clone, PartialEq)]
pub struct TripRecord {
    pub pickup_lon: f64,
    pub pickup_lat: f64,
    pub dropoff_lon: f64,
    pub dropoff_lat: f64,
    /// Miles.
    pub trip_distance: f64,
    /// US dollars.
    pub fare_amount: f64,
    pub passenger_count: Option<u32>,
    pub pickup_time: Option<NaiveDateTime>,
    pub dropoff_time: Option<NaiveDateTime>,
}

/// Header names of the mapped columns. Defaults follow the 2016 TLC schema.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ColumnMapping {
    pub pickup_lon: String,
    pub pickup_lat: String,
    pub dropoff_lon: String,
    pub dropoff_lat: String,
    pub trip_distance: String,
    pub fare_amount: String,
    pub passenger_count: Option<String>,
    pub pickup_time: Option<String>,
    pub dropoff_time: Option<String>,
}

impl Default for ColumnMapping {
    fn default() -> Self {
        ColumnMapping {
            pickup_lon: "pickup_longitude".into(),
            pickup_lat: "pickup_latitude".into(),
            dropoff_lon: "dropoff_longitude".into(),
            dropoff_lat: "dropoff_latitude".into(),
            trip_distance: "trip_distance".into(),
            fare_amount: "fare_amount".into(),
            passenger_count: Some("passenger_count".into()),
            pickup_time: Some("tpep_pickup_datetime".into()),
            dropoff_time: Some("tpep_dropoff_datetime".into()),
        }
    }
}

struct ColumnIndex {
    numeric: [usize; 6],
    passengers: Option<usize>,
    pickup_time: Option<usize>,
    dropoff_time: Option<usize>,
}

impl ColumnIndex {
    fn resolve(headers: &csv::StringRecord, map: &ColumnMapping) -> Result<Self> {
        let find = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Schema(format!("missing column `{name}`")))
        };
        let opt = |name: &Option<String>| name.as_deref().map(find).transpose();
        Ok(ColumnIndex {
            numeric: [
                find(&map.pickup_lon)?,
                find(&map.pickup_lat)?,
                find(&map.dropoff_lon)?,
                find(&map.dropoff_lat)?,
                find(&map.trip_distance)?,
                find(&map.fare_amount)?,
            ],
            passengers: opt(&map.passenger_count)?,
            pickup_time: opt(&map.pickup_time)?,
            dropoff_time: opt(&map.dropoff_time)?,
        })
    }

    fn parse(&self, row: &csv::StringRecord) -> Option<TripRecord> {
        let mut v = [0.0; 6];
        for (slot, &col) in v.iter_mut().zip(&self.numeric) {
            *slot = row.get(col)?.trim().parse::<f64>().ok()?;
            if !slot.is_finite() {
                return None;
            }
        }
        let passenger_count = match self.passengers {
            Some(c) => Some(row.get(c)?.trim().parse().ok()?),
            None => None,
        };
        let time = |col: Option<usize>| -> Option<Option<NaiveDateTime>> {
            match col {
                Some(c) => NaiveDateTime::parse_from_str(row.get(c)?.trim(), TIMESTAMP_FORMAT)
                    .ok()
                    .map(Some),
                None => Some(None),
            }
        };
        Some(TripRecord {
            pickup_lon: v[0],
            pickup_lat: v[1],
            dropoff_lon: v[2],
            dropoff_lat: v[3],
            trip_distance: v[4],
            fare_amount: v[5],
            passenger_count,
            pickup_time: time(self.pickup_time)?,
            dropoff_time: time(self.dropoff_time)?,
        })
    }
}

/// Streams trip records in file order, counting rows that fail to parse.
pub struct TripReader<R: Read> {
    reader: csv::Reader<R>,
    columns: ColumnIndex,
    row: csv::StringRecord,
    dropped: usize,
}

impl TripReader<File> {
    pub fn open(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<Self> {
        let path = path.as_ref();
        let file = File::open(path).map_err(|e| Error::io(path, e))?;
        TripReader::new(file, mapping)
    }
}

impl<R: Read> TripReader<R> {
    pub fn new(input: R, mapping: &ColumnMapping) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
        let columns = ColumnIndex::resolve(reader.headers()?, mapping)?;
        Ok(TripReader {
            reader,
            columns,
            row: csv::StringRecord::new(),
            dropped: 0,
        })
    }

    /// Rows dropped so far because a mapped field was missing, unparsable or non-finite.
    pub fn dropped(&self) -> usize {
        self.dropped
    }

    /// Next well-formed record; `Ok(None)` at end of input.
    pub fn next_record(&mut self) -> Result<Option<TripRecord>> {
        loop {
            if !self.reader.read_record(&mut self.row)? {
                return Ok(None);
            }
            match self.columns.parse(&self.row) {
                Some(r) => return Ok(Some(r)),
                None => self.dropped += 1,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LoadedTrips {
    pub records: Vec<TripRecord>,
    pub dropped: usize,
}

pub fn load_csv(path: impl AsRef<Path>, mapping: &ColumnMapping) -> Result<LoadedTrips> {
    read_trips(TripReader::open(path, mapping)?)
}

pub fn read_trips<R: Read>(mut reader: TripReader<R>) -> Result<LoadedTrips> {
    let mut records = Vec::new();
    while let Some(r) = reader.next_record()? {
        records.push(r);
    }
    Ok(LoadedTrips {
        records,
        dropped: reader.dropped(),
    })
}

/// Axis-aligned longitude/latitude box, inclusive on all edges.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeoBox {
    pub min_lon: f64,
    pub max_lon: f64,
    pub min_lat: f64,
    pub max_lat: f64,
}

impl GeoBox {
    /// Approximate SoHo, Manhattan.
    pub const SOHO: GeoBox = GeoBox {
        min_lon: -74.0070,
        max_lon: -73.9950,
        min_lat: 40.7190,
        max_lat: 40.7290,
    };

    /// Approximate JFK airport terminals.
    pub const JFK: GeoBox = GeoBox {
        min_lon: -73.8250,
        max_lon: -73.7650,
        min_lat: 40.6350,
        max_lat: 40.6650,
    };

    pub fn validate(&self) -> Result<()> {
        let ok = |lo: f64, hi: f64| lo.is_finite() && hi.is_finite() && lo < hi;
        if !ok(self.min_lon, self.max_lon) || !ok(self.min_lat, self.max_lat) {
            return Err(Error::invalid(
                "geo box",
                format!("{self:?} needs min < max on both axes"),
            ));
        }
        Ok(())
    }

    pub fn contains(&self, lon: f64, lat: f64) -> bool {
        (self.min_lon..=self.max_lon).contains(&lon) && (self.min_lat..=self.max_lat).contains(&lat)
    }
}

/// Source and destination boxes, as read from a TOML file with `[source]`
/// and `[dest]` tables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairBoxes {
    pub source: GeoBox,
    pub dest: GeoBox,
}

const SHIPPED_BOXES: &str = include_str!("../../../../config/boxes.toml");

impl PairBoxes {
    /// The shipped SoHo → JFK boxes.
    pub fn shipped() -> PairBoxes {
        PairBoxes::from_toml_str(SHIPPED_BOXES).expect("shipped boxes parse")
    }

    pub fn from_toml_str(text: &str) -> Result<PairBoxes> {
        let boxes: PairBoxes = toml::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        boxes.source.validate()?;
        boxes.dest.validate()?;
        Ok(boxes)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<PairBoxes> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        PairBoxes::from_toml_str(&text)
    }
}

/// Trips between two boxes as a univariate fare dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct PairExtraction {
    /// Fares, indexed `0..n` in record order.
    pub dataset: Dataset,
    /// Position of each kept trip in the input record sequence.
    pub source_rows: Vec<usize>,
    /// Trip distance of each kept trip, for plotting.
    pub distances: Vec<f64>,
}

pub fn pair_matches(r: &TripRecord, source: &GeoBox, dest: &GeoBox) -> bool {
    source.contains(r.pickup_lon, r.pickup_lat) && dest.contains(r.dropoff_lon, r.dropoff_lat)
}

/// Keeps trips picked up inside `source` and dropped off inside `dest`.
pub fn filter_pair(
    records: &[TripRecord],
    source: &GeoBox,
    dest: &GeoBox,
) -> Result<PairExtraction> {
    source.validate()?;
    dest.validate()?;
    let mut fares = Vec::new();
    let mut source_rows = Vec::new();
    let mut distances = Vec::new();
    for (row, r) in records.iter().enumerate() {
        if pair_matches(r, source, dest) {
            fares.push(r.fare_amount);
            source_rows.push(row);
            distances.push(r.trip_distance);
        }
    }
    Ok(PairExtraction {
        dataset: Dataset::univariate(fares)?,
        source_rows,
        distances,
    })
}
