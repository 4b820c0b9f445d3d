//! Small-scale fading: per-path delays, powers, angles and phases over
//! stationary segments, assembled into MIMO channel impulse responses.

pub mod channel;
pub mod export;
pub mod kernels;
pub mod segment;

pub use channel::{
    at_sample, ChannelModel, ChannelSetup, CirFrame, LargeScaleModel, LargeScaleSample, LinkState, PairPaths,
    PairResponse, Realization, Tap, Terminal,
};
pub use segment::{SegmentSchedule, SmallScaleParams, StationarySegment};
