//! Unbounded voxel occupancy mapping on a spatial hash.
//!
//! A [`MapState`] keeps one record per voxel key, fuses sensor frames with
//! log-odds updates, inflates occupied voxels for planning, retains the most
//! recently updated voxels under a count budget, and exports per-cycle
//! deltas of newly occupied keys that peers can merge.
//!
//! ```
//! use voxhash::{MapConfig, MapState, SensorFrame};
//!
//! let mut map = MapState::new(MapConfig::default()).unwrap();
//! let frame = SensorFrame::new(0.0, [0.0, 0.0, 0.0], vec![[2.0, 0.0, 0.0]]);
//! map.update(&frame).unwrap();
//! assert_eq!(map.occupied_count(), 1);
//! assert!(map.query_inflated_occupied([2.15, 0.0, 0.0]));
//! ```

// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod error;
pub mod history;
pub mod inflate;
pub mod integrate;
pub mod io;
pub mod key;
pub mod logodds;
mod occupancy;
pub mod raycast;
pub mod retain;
pub mod share;
pub mod sim;
pub mod store;

pub use config::{MapConfig, ParamUpdate};
pub use error::{ConfigError, DecodeError, DecodeErrorKind, IngestError, LogError, SceneError};
pub use history::{HistSlot, HistoryList};
pub use inflate::InflationNeighborhood;
pub use integrate::{SensorFrame, UpdateStats};
pub use key::{key_to_center, pos_to_key, Point3, VoxelKey};
pub use logodds::{logit_of, prob_of, state_of, OccState};
pub use raycast::GridRay;
pub use retain::RetentionOutcome;
pub use share::{decode_frame, encode_frame, FrameRing, ShareFrame};
pub use store::{Container, MapState, VoxelId, VoxelRecord};
