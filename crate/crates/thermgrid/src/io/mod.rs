//! File formats: scenario JSON, legacy VTK volumes, CSV traces.

pub mod csv;
pub mod scenario;
pub mod vtk;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("i/o failure on '{path}': {source}")]
    File {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("scenario file '{path}' is malformed: {message}")]
    MalformedScenario { path: String, message: String },
    #[error("VTK file is malformed: {0}")]
    MalformedVtk(String),
    #[error("trace has no samples")]
    EmptyTrace,
}

impl IoError {
    pub(crate) fn file(path: &std::path::Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.display().to_string(),
            source,
        }
    }
}
