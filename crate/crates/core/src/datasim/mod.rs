//! Synthetic fusion datasets: scenes, reduced-resolution degradation,
//! spectral projection and on-disk datasets.

mod dataset;
mod degrade;
mod scene;
mod srf;

pub use dataset::{
    generate_sample, make_dataset, Dataset, DatasetEntry, DatasetSpec, Generated, Split, SplitFractions, MANIFEST,
};
pub use degrade::{blur_replicate, decimate, gaussian_kernel, wald_degrade, DegradeSpec};
pub use scene::{gen_scene, SceneSpec};
pub use srf::{default_srf, read_srf, srf_project, write_srf};
