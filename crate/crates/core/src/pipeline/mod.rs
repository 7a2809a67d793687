//! Orchestration of generation, splitting, evaluation, previews and prior fitting.

pub mod config;
pub mod demo;
pub mod eval;
pub mod fit;
pub mod generate;
pub mod preview;

pub use config::{Ablations, Config};
pub use demo::{write_demo_assets, DemoOptions};
pub use eval::{evaluate, load_predictions, EvalReport, Prediction};
pub use fit::fit_priors_from_dir;
pub use generate::{partition, GenerateReport, Generator, Partition};
pub use preview::{preview_panel, preview_png};
