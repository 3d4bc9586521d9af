//! Data acquisition: taxi CSV ingestion, pair filtering, the interchange
//! format and the synthetic generator.

mod interchange;
mod synth;
mod taxi;

pub use interchange::{
    label_str, load_interchange, read_interchange, save_interchange, write_interchange,
};
pub use synth::{generate, PerDim, SynthSpec};
pub use taxi::{
    filter_pair, load_csv, pair_matches, read_trips, ColumnMapping, GeoBox, LoadedTrips, PairBoxes,
    PairExtraction, TripReader, TripRecord,
};
