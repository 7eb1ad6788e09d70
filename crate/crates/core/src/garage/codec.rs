use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Letter, three angle digits, linefeed.
pub const FRAME_LEN: usize = 5;
const MAX_ANGLE: u16 = 180;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Motion {
    Forward,
    Stop,
    Rewind,
}

impl Motion {
    pub const ALL: [Motion; 3] = [Motion::Forward, Motion::Stop, Motion::Rewind];

    fn letter(self) -> u8 {
        match self {
            Motion::Forward => b'F',
            Motion::Stop => b'S',
            Motion::Rewind => b'R',
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FrameError {
    #[error("frame must be {FRAME_LEN} bytes, got {0}")]
    Length(usize),
    #[error("unknown motion letter {0:?}")]
    Motion(char),
    #[error("angle field {0:?} is not three digits")]
    Digits(String),
    #[error("angle {0} exceeds 180 degrees")]
    Angle(u16),
    #[error("frame must end with a linefeed")]
    Terminator,
}

/// Steering angle in degrees, always within `[0, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DriveCommand {
    motion: Motion,
    angle: u8,
}

impl DriveCommand {
    pub fn new(motion: Motion, angle: u16) -> Result<Self, FrameError> {
        if angle > MAX_ANGLE {
            return Err(FrameError::Angle(angle));
        }
        Ok(Self { motion, angle: angle as u8 })
    }

    pub fn motion(&self) -> Motion {
        self.motion
    }

    pub fn angle(&self) -> u16 {
        self.angle as u16
    }
}

impl fmt::Display for DriveCommand {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}{:03}", self.motion.letter() as char, self.angle)
    }
}

/// Parses the frame body without its linefeed, e.g. `F090`.
impl FromStr for DriveCommand {
    type Err = FrameError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut frame = s.as_bytes().to_vec();
        frame.push(b'\n');
        decode_drive_command(&frame)
    }
}

pub fn encode_drive_command(cmd: DriveCommand) -> [u8; FRAME_LEN] {
    let a = cmd.angle;
    [cmd.motion.letter(), b'0' + a / 100, b'0' + a / 10 % 10, b'0' + a % 10, b'\n']
}

pub fn decode_drive_command(frame: &[u8]) -> Result<DriveCommand, FrameError> {
    if frame.len() != FRAME_LEN {
        return Err(FrameError::Length(frame.len()));
    }
    if frame[4] != b'\n' {
        return Err(FrameError::Terminator);
    }
    let motion = match frame[0] {
        b'F' => Motion::Forward,
        b'S' => Motion::Stop,
        b'R' => Motion::Rewind,
        other => return Err(FrameError::Motion(other as char)),
    };
    let digits = &frame[1..4];
    if !digits.iter().all(u8::is_ascii_digit) {
        return Err(FrameError::Digits(String::from_utf8_lossy(digits).into_owned()));
    }
    let angle = digits.iter().fold(0u16, |acc, d| acc * 10 + u16::from(d - b'0'));
    DriveCommand::new(motion, angle)
}
