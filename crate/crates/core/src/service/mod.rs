//! Session service: live simulations behind a command queue, binary frame
//! streams and interactive-evolution operations, plus an HTTP front end.

pub mod frame;
pub mod http;
pub mod iec;
pub mod session;

pub use frame::{color_map, decode_frame, encode_frame, DecodedFrame, FrameError};
pub use iec::{Candidate, IecConfig, IecError, IecPopulation, Thumbnail};
pub use session::{
    Command, FrameBytes, ProposedCandidate, Response, ServiceError, SessionEvent, SessionHandle, SessionId,
    SessionInfo, SessionRegistry, SessionSpec, Status,
};
