//! Scenario description: configuration, kinematics, posture and antenna arrays.

pub mod antenna;
pub mod config;
pub mod posture;
pub mod rotation;
pub mod trajectory;

pub use antenna::{AntennaArray, AntennaPattern, PatternTable};
pub use config::{FuselageConfig, LargeScaleConfig, OutputConfig, ScenarioConfig, TerminalConfig};

pub use posture::{AngleProfile, Posture, PostureTrack};
pub use rotation::{angle_unit_vector, posture_matrix, vector_angles, velocity_rotation_matrix, Mat3, Vec3};
pub use trajectory::{integrate_position, TrajectoryTrack, VelocityKnot, VelocityProfile};
