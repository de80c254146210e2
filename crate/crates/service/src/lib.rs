//! Live steering of a layout run over WebSocket.

pub mod protocol;
pub mod server;
pub mod session;

pub use server::{serve, ServiceOptions};
pub use session::{Cadence, Session, SessionError};
