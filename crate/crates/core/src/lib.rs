//! Maps from the sphere to Euclidean space with mostly small fibers.
//!
//! The crate builds the recursive tree maps `t_{n,r,delta}` on the cube, glues
//! them over the faces of the boundary of `I^{n+1}`, composes with a
//! transverse linear projection and a thickened tree embedding, and measures
//! the resulting fibers exactly by slicing boxes with hyperplanes. A
//! Monte-Carlo laboratory checks neighbourhood-volume inequalities on spheres.

pub mod geom;
pub mod rng;
pub mod tree;
pub mod tree_map;
pub mod slicer;
pub mod sphere_map;
pub mod sphere_lab;
pub mod audit;
pub mod render;
