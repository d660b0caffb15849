//! CSV export of transient probe traces.

use std::io::Write as _;
use std::path::Path;

use crate::thermal::TransientTrace;

use super::IoError;

/// Header `t_ns,<probe>,...` followed by one row per time sample.
pub fn write_trace_csv(path: &Path, trace: &TransientTrace) -> Result<(), IoError> {
    if trace.times_ns.is_empty() {
        return Err(IoError::EmptyTrace);
    }
    let f = std::fs::File::create(path).map_err(|e| IoError::file(path, e))?;
    let mut w = std::io::BufWriter::new(f);
    let err = |e| IoError::file(path, e);

    write!(w, "t_ns").map_err(err)?;
    for name in &trace.probe_names {
        write!(w, ",{name}").map_err(err)?;
    }
    writeln!(w).map_err(err)?;
    for (i, t) in trace.times_ns.iter().enumerate() {
        write!(w, "{t}").map_err(err)?;
        for series in &trace.series {
            write!(w, ",{}", series[i]).map_err(err)?;
        }
        writeln!(w).map_err(err)?;
    }
    w.flush().map_err(err)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_header_and_rows() {
        let trace = TransientTrace {
            probe_names: vec!["a".into(), "b".into()],
            times_ns: vec![0.0, 0.5, 1.0],
            series: vec![vec![300.0, 301.0, 302.0], vec![300.0, 300.5, 300.75]],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trace_csv(&path, &trace).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "t_ns,a,b");
        assert_eq!(lines.len(), 4);
        assert_eq!(lines[2], "0.5,301,300.5");
    }

    #[test]
    fn empty_trace_rejected() {
        let trace = TransientTrace {
            probe_names: vec![],
            times_ns: vec![],
            series: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        assert!(matches!(
            write_trace_csv(&dir.path().join("x.csv"), &trace),
            Err(IoError::EmptyTrace)
        ));
    }
}
