//! The register feature dictionary and a synthetic stand-in for the
//! private register data.

mod csv_io;
mod generate;
mod schema;
mod table;

pub use csv_io::{from_csv_str, read_csv, to_csv_string, write_csv, ID_COLUMN};
pub use generate::{apply_missingness, generate, GenConfig, GroundTruth, TargetSelection};
pub use schema::{
    register_schema, Distribution, Factor, FeatureDef, FeatureGroup, FeatureKind, FeatureSchema,
    AGE, AGE_SQUARED, CHILDREN_BLOCK, PENSION_BLOCK,
};
pub use table::{Column, ColumnValues, DataTable, TargetKind};
