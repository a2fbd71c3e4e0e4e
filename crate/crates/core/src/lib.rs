//! Renewal processes and aging continuous-time random walks with
//! exponentially tempered power-law waiting times.

pub mod actrw;
pub mod ensemble;
pub mod error;
pub mod fpe;
pub mod laplace;
pub mod mlf;
pub mod quad;
pub mod renewal;
pub mod sampling;

pub use error::{Error, Result};
