//! Loading, validating, encoding, splitting and synthesizing tabular data.

mod dataset;
mod encode;
mod schema;
mod split;
mod synth;

pub use dataset::{load_dataset, read_dataset, Cell, Dataset};
pub use encode::{encode, EncodeOptions, EncodedDataset, SensitiveColumn};
pub use schema::{preset, ColumnKind, ColumnSpec, PrivilegedRule, Schema, SensitiveSpec, PRESET_NAMES};
pub use split::{split, train_size, SplitPair};
pub use synth::{synth_biased, SynthSpec};
