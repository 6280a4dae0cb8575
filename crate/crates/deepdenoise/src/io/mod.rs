//! File formats: images, patch corpora and model files.

mod corpus;
mod image_file;
mod model_file;
pub mod pnm;

pub use corpus::{list_images, manifest_path, sample_patch_corpus, Anchor, CorpusManifest, PatchCorpus, IMAGE_EXTENSIONS};
pub use image_file::{decode_image, load_image, save_image};
pub use model_file::{ModelFile, Substitutions, TrainingMeta, FORMAT_VERSION, MAGIC};
