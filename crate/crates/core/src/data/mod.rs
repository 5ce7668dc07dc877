//! Synthetic data, splits, pairs and file formats.

mod model_io;
mod pairs;
mod split;
mod synthetic;
mod text_io;

pub use model_io::{load_model, model_from_str, model_to_string, save_model, Model, MODEL_FORMAT_VERSION};
pub use pairs::{make_pairs, samples, PairOptions};
pub use split::{split_by_identity, Split, SplitSpec, MIN_IDENTITIES_PER_COHORT};
pub use synthetic::{generate_synthetic_cohorts, InformativeLayout, SyntheticConfig};
pub use text_io::{
    load_embeddings, load_pairs, read_embeddings, read_pairs, save_embeddings, save_pairs, write_embeddings,
    write_pairs,
};
