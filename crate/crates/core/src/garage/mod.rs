//! Garage map, patrol simulation and the serial drive-command codec.

mod codec;
mod map;
mod sim;

pub use codec::{decode_drive_command, encode_drive_command, DriveCommand, FrameError, Motion, FRAME_LEN};
pub use map::{
    stall_for_position, GarageMap, MapError, Stall, DEFAULT_STALL_THRESHOLD, DEFAULT_STALL_WIDTH,
    LANE_WIDTH,
};
pub use sim::{
    corrupt_plate, ocr_confidence, parse_scenario, simulate_patrol, simulate_rssi, Detection,
    NoiseConfig, PatrolEvent, Scenario, ScenarioError, DEFAULT_CAMERA_RANGE, DEFAULT_CONFUSIONS,
    DEFAULT_STEP,
};
