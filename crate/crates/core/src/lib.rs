//! Geometric core for two-panorama room layout reconstruction.
//!
//! The crate works on 1D horizon maps sampled uniformly in the panorama
//! `u` coordinate: ceiling/floor boundary `v` coordinates, horizon depths,
//! a pano-1 to pano-2 correspondence map and a covisibility map. From those
//! it recovers the 3-DoF relative camera pose with a RANSAC rigid fit,
//! fuses the two partial layouts by polygon union and scores the result.
//!
//! A synthetic scene oracle ([`scene`]) produces ground-truth maps for
//! simple polygonal rooms, so every stage can be checked end to end
//! without images.
//!
//! The crate is `no_std` and only needs `alloc`.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod error;
pub mod fusion;
pub mod geometry;
pub mod loss;
pub mod math;
pub mod metrics;
pub mod pipeline;
pub mod polygon;
pub mod pose;
pub mod registration;
pub mod scene;

pub use error::{Error, Result};

pub use geometry::{BoundaryKind, BoundaryMap, HorizonDepthMap, PlanePointSet, SampleGrid, UvCoord};
pub use fusion::{FusionWarning, LayoutSolid};
pub use metrics::{MetricsReport, PairErrors};
pub use scene::{HorizonMaps, NoiseSpec, RoomPolygon, RoomScene};
pub use registration::{RansacConfig, RegistrationConfig, RegistrationResult};
pub use math::Vec2;

pub use polygon::{Footprint, Ring};
pub use pose::PlanarPose;


