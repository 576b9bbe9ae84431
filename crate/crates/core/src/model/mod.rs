//! Problem instances and the randomness contract shared by every module.

mod channel;
mod scenario;
mod spreading;
mod stream;
pub mod units;

pub use channel::{channel_from_fading, sample_channel, sample_fading, ChannelMatrix};
pub use scenario::{make_drop, Scenario, UserEquipment, DROP_NOISE_DBW, DROP_PATHLOSS_DB, DROP_POWER_W};
pub use spreading::SpreadingMatrix;
pub use stream::RandomStream;
