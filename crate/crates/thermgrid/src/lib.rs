//! Voxel-based 3-D electro-thermal simulator for transistor-level 3-D ICs.
//!
//! The crate rasterizes axis-aligned material stacks onto a uniform voxel
//! grid, solves steady and transient heat conduction (finite-volume 7-point
//! stencil, Jacobi-preconditioned CG) with prescribed or Joule heat
//! sources, and post-processes hotspot reports. Built-in presets model
//! three 3-D NAND fabrics and their heat-extraction features.

pub mod analysis;
pub mod cli;
pub mod assembly;
pub mod calibrate;
pub mod electrical;
pub mod field;
pub mod geometry;
pub mod grid;
pub mod io;
pub mod materials;
pub mod sparse;
pub mod thermal;
pub mod verify;
