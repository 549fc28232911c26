//! Numerical laboratory on round spheres: neighbourhood volumes, the
//! `>=nbd` order, the decomposition identity and codimension-one coverage.

pub mod kdtree;
pub mod mc;
pub mod quad;
pub mod region;
pub mod suites;

pub use mc::{
    check_codim1, check_decomposition, geqnbd_compare, nbhd_volume_grid, nbhd_volume_mc,
    Codim1Options, Codim1Report, CompareReport, DecompositionReport, LabError,
    NeighborhoodEstimate,
};
pub use quad::{cap_radius_for_volume, cap_volume, equator_tube_volume};
pub use region::{LevelKind, RegionOracle, ScalarMap};
