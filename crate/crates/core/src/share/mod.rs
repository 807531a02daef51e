//! Map sharing: per-cycle deltas of newly occupied voxels, a fixed-capacity
//! outbox that survives link outages, and the wire format.

mod codec;
mod frame;
pub(crate) mod log;
mod ring;

pub use codec::{decode_frame, encode_frame, encoded_len, FRAME_MAGIC, HEADER_LEN};
pub use frame::ShareFrame;
pub use log::{read_share_log, write_share_log, ShareLogReader, ShareLogWriter, SHARE_LOG_MAGIC};
pub use ring::{FrameRing, RingError};
