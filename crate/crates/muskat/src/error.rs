use std::io;

use muskat_core::ErrorKind;

use crate::config::ConfigError;

pub const EXIT_OK: i32 = 0;
/// The run finished but at least one acceptance check failed.
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_GEOMETRY: i32 = 3;
pub const EXIT_CONVERGENCE: i32 = 4;
pub const EXIT_STIFFNESS: i32 = 5;
pub const EXIT_IO: i32 = 6;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error("config error: {0}")]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Core(#[from] muskat_core::Error),
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) => EXIT_CONFIG,
            RunError::Core(e) => match e.kind() {
                ErrorKind::Input => EXIT_CONFIG,
                ErrorKind::Geometry => EXIT_GEOMETRY,
                ErrorKind::Convergence => EXIT_CONVERGENCE,
                ErrorKind::Stiffness => EXIT_STIFFNESS,
            },
            RunError::Io(_) => EXIT_IO,
        }
    }
}
