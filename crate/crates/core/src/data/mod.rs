//! Dataset acquisition: delimited-file loading, caching, splitting,
//! standardization and synthetic task generation.

mod csv_io;
mod split;
mod standardize;
mod synth;

pub use csv_io::{expand_paths, load_csv, read_cache, write_cache, CacheSidecar, CsvSchema, GAS_TURBINE_ROWS};
pub use split::{make_split, SplitSpec};
pub use standardize::{apply_standardizer, fit_standardizer, Standardizer};
pub use synth::{generate_synthetic, GeneratorKind, GeneratorParams, SynthSpec, SyntheticTask};
