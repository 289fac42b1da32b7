pub mod channel;
pub mod fastdec;
pub mod linalg;
pub mod metrics;
pub mod param;
pub mod search;
mod quad;
pub mod stats;
pub mod structures;
pub mod tol;
pub mod ucon;
