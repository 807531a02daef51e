//! Synthetic scenes, a simulated range sensor, a lossy link and a dense
//! reference map, used to exercise the mapper without recorded data.

pub mod channel;
pub mod oracle;
pub mod relay;
pub mod scene;
pub mod sensor;
pub mod spec;
pub mod trajectory;

pub use channel::{ChannelSpec, GapEpisode, LossyChannel};
pub use oracle::{dense_reference_map, DenseReferenceMap};
pub use relay::{run_relay, Relay, RelayError, RelayReport, RelaySpec, RAW_POINT_BYTES};
pub use scene::{gen_scene, Aabb, Obstacle, Scene, SceneSpec};
pub use sensor::{simulate_scan, Pose, SensorSpec};
pub use spec::{SimSpec, Simulation};
pub use trajectory::{plan_trajectory, TrajectorySpec};
