//! Dataset generation, ingestion, standardization, probe sampling, augmentation
//! and perturbation.

mod augment;
mod csv_source;
mod probe;
mod table;
mod toy;

pub use augment::{augment, perturb, perturb_with_noise, AugmentationKind, AugmentationSpec, PerturbationSweep};
pub use csv_source::{load_csv, resolve_data_path, DatasetManifest, SplitFractions};
pub use probe::{make_probe, Probe, ProbeConfig, ProbeManifest};
pub use table::{DatasetTable, GroundTruth, Split, Standardizer};
pub use toy::{gen_toy, MeanFn, NoiseFn, ToySpec};
