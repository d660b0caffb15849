//! Scenario JSON serialization.

use std::path::Path;

use crate::geometry::Scenario;

use super::IoError;

pub fn load_scenario(path: &Path) -> Result<Scenario, IoError> {
    let raw = std::fs::read_to_string(path).map_err(|e| IoError::file(path, e))?;
    serde_json::from_str(&raw).map_err(|e| IoError::MalformedScenario {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

pub fn save_scenario(path: &Path, scenario: &Scenario) -> Result<(), IoError> {
    let json = serde_json::to_string_pretty(scenario).expect("scenario serializes");
    std::fs::write(path, json + "\n").map_err(|e| IoError::file(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Block, FaceDir, Scenario, SinkPatch, SourceSchedule};

    #[test]
    fn round_trip() {
        let s = Scenario {
            spacing_nm: 2,
            boxes: vec![Block::new([0, 0, 0], [8, 8, 8], "W", "cube")],
            sinks: vec![SinkPatch {
                min: [0, 0, 0],
                size: [8, 8, 8],
                face: Some(FaceDir::ZMin),
                temperature: 300.0,
            }],
            sources: vec![],
            schedule: SourceSchedule::default(),
            electrical: None,
            material_overrides: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("s.json");
        save_scenario(&path, &s).unwrap();
        let back = load_scenario(&path).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn unknown_field_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.json");
        std::fs::write(
            &path,
            r#"{"spacing_nm":2,"boxes":[],"sinks":[],"bogus":1}"#,
        )
        .unwrap();
        assert!(matches!(
            load_scenario(&path),
            Err(IoError::MalformedScenario { .. })
        ));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(
            load_scenario(Path::new("/nonexistent/s.json")),
            Err(IoError::File { .. })
        ));
    }
}
