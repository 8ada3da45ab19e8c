//! Plain-text measurement files.
//!
//! ```text
//! # time=1.2566370614359172 shots=3 nqubits=8
//! 11001100
//! 10101100
//! 11000110
//! ```
//!
//! Character `k` of a bitstring is qubit `k`: the alpha block, then the beta
//! block.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use qsci_core::evolution::{parse_shot, shot_to_bitstring};
use qsci_core::MeasurementSet;

use crate::{io_error, HarnessError, Result};

pub fn format_measurements(ms: &MeasurementSet) -> String {
    let n = ms.n_qubits();
    let mut out = String::with_capacity((n + 1) * ms.len() + 64);
    writeln!(out, "# time={} shots={} nqubits={}", ms.time, ms.len(), n).unwrap();
    for &s in ms.shots() {
        out.push_str(&shot_to_bitstring(s, n));
        out.push('\n');
    }
    out
}

pub fn parse_measurements(text: &str, path: &Path) -> Result<MeasurementSet> {
    let err = |line, message: String| HarnessError::Parse { path: path.to_path_buf(), line, message };
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim_end_matches('\r')));
    let (_, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let body = header
        .strip_prefix('#')
        .ok_or_else(|| err(1, "expected header `# time=<float> shots=<int> nqubits=<int>`".into()))?;
    let (mut time, mut shots, mut nqubits) = (None, None, None);
    for token in body.split_whitespace() {
        let (k, v) = token.split_once('=').ok_or_else(|| err(1, format!("bad header token {token:?}")))?;
        let bad = || err(1, format!("bad value for {k}: {v:?}"));
        match k {
            "time" => time = Some(v.parse::<f64>().map_err(|_| bad())?),
            "shots" => shots = Some(v.parse::<usize>().map_err(|_| bad())?),
            "nqubits" => nqubits = Some(v.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(err(1, format!("unknown header key {k:?}"))),
        }
    }
    let (time, expected, n) = match (time, shots, nqubits) {
        (Some(t), Some(s), Some(n)) => (t, s, n),
        _ => return Err(err(1, "header needs time, shots and nqubits".into())),
    };
    let mut values = Vec::with_capacity(expected);
    let mut last = 1;
    for (no, line) in lines {
        last = no;
        if line.trim().is_empty() {
            continue;
        }
        let shot = parse_shot(line.trim(), n).map_err(|e| err(no, e.to_string()))?;
        values.push(shot);
    }
    if values.len() != expected {
        return Err(err(last, format!("header announces {expected} shots, found {}", values.len())));
    }
    MeasurementSet::new(time, n, values).map_err(|e| err(1, e.to_string()))
}

pub fn write_measurements(path: &Path, ms: &MeasurementSet) -> Result<()> {
    std::fs::write(path, format_measurements(ms)).map_err(io_error(path))
}

pub fn read_measurements(path: &Path) -> Result<MeasurementSet> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    parse_measurements(&text, path)
}

/// File name for time step `step` (numbered from 1).
pub fn step_file_name(step: usize) -> String {
    format!("step_{step:03}.txt")
}

/// Write one file per set into `dir`, returning the paths in step order.
pub fn write_measurement_dir(dir: &Path, sets: &[MeasurementSet]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir).map_err(io_error(dir))?;
    let mut paths = Vec::with_capacity(sets.len());
    for (i, ms) in sets.iter().enumerate() {
        let path = dir.join(step_file_name(i + 1));
        write_measurements(&path, ms)?;
        paths.push(path);
    }
    Ok(paths)
}

/// Every `*.txt` file in `dir`, in file-name order.
pub fn read_measurement_dir(dir: &Path) -> Result<Vec<MeasurementSet>> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(io_error(dir))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::Config(format!("no measurement files in {}", dir.display())));
    }
    paths.iter().map(|p| read_measurements(p)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_written_file_keeps_order() {
        let text = "# time=0.5 shots=3 nqubits=4\n1010\n0110\n1010\n";
        let ms = parse_measurements(text, Path::new("m.txt")).unwrap();
        assert_eq!(ms.time, 0.5);
        let strings: Vec<_> = (0..3).map(|i| ms.bitstring(i)).collect();
        assert_eq!(strings, ["1010", "0110", "1010"]);
    }

    #[test]
    fn short_line_names_its_line() {
        let mut text = String::from("# time=1 shots=2 nqubits=42\n");
        text.push_str(&"0".repeat(42));
        text.push('\n');
        text.push_str(&"1".repeat(41));
        text.push('\n');
        match parse_measurements(&text, Path::new("m.txt")) {
            Err(HarnessError::Parse { line, message, .. }) => {
                assert_eq!(line, 3);
                assert!(message.contains("41"), "{message}");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn malformed_headers_and_counts_fail() {
        for text in [
            "",
            "time=1 shots=1 nqubits=2\n10\n",
            "# time=1 shots=1\n10\n",
            "# time=x shots=1 nqubits=2\n10\n",
            "# time=1 shots=2 nqubits=2\n10\n",
            "# time=1 shots=1 nqubits=2\n1a\n",
        ] {
            assert!(matches!(parse_measurements(text, Path::new("m")), Err(HarnessError::Parse { .. })), "{text:?}");
        }
    }

    #[test]
    fn round_trip_is_lossless() {
        let ms = MeasurementSet::new(1.2566370614359172, 70, vec![0, 1, (1u128 << 69) | 5, 12345]).unwrap();
        let back = parse_measurements(&format_measurements(&ms), Path::new("m")).unwrap();
        assert_eq!(back, ms);
    }
}
