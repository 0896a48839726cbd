//! Tag channel ingestion: CSV parsing, alignment onto the master timeline,
//! smoothing, and geographic boundary handling.

mod format;
mod geo;
mod signal;
mod tag;

pub use format::fmt_sig;
pub use geo::{latlon_to_local, linestring_geojson, local_to_latlon, LagoonBoundary, EARTH_RADIUS_M};
pub use signal::{moving_average, resample_linear, unwrap_angles, Channel, MasterTimeline};
pub use tag::{
    parse_tag_csv, read_tag_csv, write_tag_csv, AuxSample, ColumnMap, FlagReason, ImuSample,
    RowFlag, TagSeries,
};
