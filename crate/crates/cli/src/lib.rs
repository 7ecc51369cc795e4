//! Front end for the proof kernel: batch checking, formatting and the
//! session protocol spoken to interactive clients.

pub mod commands;
pub mod frame;
pub mod report;
pub mod server;

pub use server::{serve, Server, PROTOCOL_VERSION};

/// Stack size for threads that run the kernel; deeply nested terms recurse.
pub const KERNEL_STACK: usize = 64 * 1024 * 1024;
