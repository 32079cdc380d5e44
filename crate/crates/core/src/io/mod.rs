//! File formats: `DUQ1` rasters, ASCII PLY clouds, `DUQM` checkpoints and
//! JSON metric reports.

mod checkpoint;
mod ply;
mod raster;
mod report;

pub use checkpoint::{
    read_checkpoint, write_checkpoint, Checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use ply::{format_ply, parse_ply, read_ply, write_ply, PlyFile};
pub use raster::{
    depth_from_bundle, depth_to_bundle, prediction_from_bundle, prediction_to_bundle, read_raster,
    samples_from_bundle, samples_to_bundle, write_raster, Plane, PlaneKind, RasterBundle,
    RASTER_MAGIC,
};
pub use report::{
    config_hash, format_g9, to_canonical_json, write_report, MetricsReport, Provenance,
    REPORT_SCHEMA_VERSION,
};
