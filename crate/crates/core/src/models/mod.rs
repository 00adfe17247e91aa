//! The four classifiers, their training loop and on-disk bundles.

pub mod bundle;
pub mod io;
pub mod network;

pub use bundle::{build_model, Hyperparams, ModelBundle, Provenance, TrainHistory};
pub use io::{load_model, save_model};
pub use network::{Architecture, LayerGeometry, Network};
