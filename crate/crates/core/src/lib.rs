pub mod error;
pub mod hilbert;
pub mod models;
pub mod openquantum;
pub mod oracle;
pub mod protocols;
pub mod qfi;
pub mod runner;
pub mod truncation;

pub use error::{Error, Result};
