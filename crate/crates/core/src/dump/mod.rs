//! Dump files, feature files and the synthetic dump generator.

mod features;
mod format;
mod synth;

pub use features::{append_features, read_features, write_features, FeatureRecord};
pub use format::{
    open_dump, read_dump, write_dump, DumpExample, DumpMetadata, DumpReader, DumpWriter, ReadOptions,
    WordClass, MAGIC, SCHEMA_VERSION,
};
pub use synth::{generate_synthetic, SyntheticSpec};
