//! Image IO, model files, benchmarks and the `deepdenoise` command-line
//! tool, built on `deepdenoise-core`.

pub mod arch;
pub mod bench;
pub mod cli;
pub mod denoise;
pub mod error;
pub mod io;

pub use arch::{train_architecture, Architecture, ARCHITECTURES};
pub use bench::{run_bench, BenchConfig, BenchImage, BenchModel, BenchReport, BenchRow};
pub use denoise::denoise_image_parallel;
pub use error::{Error, Result};
pub use io::{load_image, save_image, ModelFile, PatchCorpus};
