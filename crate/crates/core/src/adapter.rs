//! Line protocol for external detectors.
//!
//! The detector runs as `CMD <image-path>` and prints one `x y w h score`
//! line per detection; exit status 0 means success.

use std::io::Read;
use std::path::Path;
use std::process::{Command, Stdio};
use std::thread;
use std::time::{Duration, Instant};

use crate::error::{Error, Result};
use crate::raster::Box;

pub const DEFAULT_TIMEOUT: Duration = Duration::from_secs(5);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Detection {
    pub bbox: Box,
    pub score: f64,
}

/// Parses detector stdout. Blank lines are skipped; anything else must be
/// exactly four integers and a score in [0, 1].
pub fn parse_detections(stdout: &str) -> Result<Vec<Detection>> {
    let bad = |line: &str, why: &str| Error::Adapter {
        message: format!("malformed line {line:?}: {why}"),
        stderr: String::new(),
    };
    let mut out = Vec::new();
    for line in stdout.lines() {
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        if tokens.len() != 5 {
            return Err(bad(line, "expected `x y w h score`"));
        }
        let int = |t: &str| {
            t.parse::<i64>()
                .map_err(|_| bad(line, "non-integer coordinate"))
        };
        let (x, y, w, h) = (
            int(tokens[0])?,
            int(tokens[1])?,
            int(tokens[2])?,
            int(tokens[3])?,
        );
        if w < 0 || h < 0 {
            return Err(bad(line, "negative size"));
        }
        let score: f64 = tokens[4]
            .parse()
            .map_err(|_| bad(line, "score is not a number"))?;
        if !(0.0..=1.0).contains(&score) {
            return Err(bad(line, "score outside [0, 1]"));
        }
        let fits = |v: i64| i32::try_from(v).map_err(|_| bad(line, "coordinate out of range"));
        out.push(Detection {
            bbox: Box::new(fits(x)?, fits(y)?, fits(w)? as u32, fits(h)? as u32),
            score,
        });
    }
    Ok(out)
}

/// Runs `cmd` on `image` and parses its detections in emitted order.
///
/// `cmd` is split on whitespace; the image path is appended as the last
/// argument.
pub fn run_detector(cmd: &str, image: &Path, timeout: Duration) -> Result<Vec<Detection>> {
    let mut parts = cmd.split_whitespace();
    let program = parts.next().ok_or_else(|| Error::Adapter {
        message: "empty detector command".into(),
        stderr: String::new(),
    })?;
    let mut child = Command::new(program)
        .args(parts)
        .arg(image)
        .stdin(Stdio::null())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .map_err(|e| Error::Adapter {
            message: format!("cannot start {program:?}: {e}"),
            stderr: String::new(),
        })?;

    let out = drain(child.stdout.take().expect("piped stdout"));
    let err = drain(child.stderr.take().expect("piped stderr"));

    let start = Instant::now();
    let status = loop {
        match child.try_wait().map_err(|e| Error::io(program, e))? {
            Some(status) => break status,
            None if start.elapsed() >= timeout => {
                let _ = child.kill();
                let _ = child.wait();
                return Err(Error::Timeout(timeout));
            }
            None => thread::sleep(Duration::from_millis(5)),
        }
    };
    let stdout = out.join().unwrap_or_default();
    let stderr = err.join().unwrap_or_default();
    if !status.success() {
        return Err(Error::Adapter {
            message: format!("{program:?} exited with {status}"),
            stderr,
        });
    }
    parse_detections(&stdout).map_err(|e| match e {
        Error::Adapter { message, .. } => Error::Adapter { message, stderr },
        other => other,
    })
}

fn drain(mut r: impl Read + Send + 'static) -> thread::JoinHandle<String> {
    thread::spawn(move || {
        let mut buf = Vec::new();
        let _ = r.read_to_end(&mut buf);
        String::from_utf8_lossy(&buf).into_owned()
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_protocol_lines() {
        let d = parse_detections("10 20 80 80 0.99\n\n  1   2 3 4   0.5  \n").unwrap();
        assert_eq!(d.len(), 2);
        assert_eq!(d[0].bbox, crate::raster::Box::new(10, 20, 80, 80));
        assert_eq!(d[0].score, 0.99);
        assert_eq!(d[1].bbox, crate::raster::Box::new(1, 2, 3, 4));
        assert!(parse_detections("").unwrap().is_empty());
    }

    #[test]
    fn rejects_malformed_lines() {
        for bad in [
            "1 2 3 4",
            "1 2 3 4 0.5 6",
            "1 2 3.5 4 0.5",
            "a 2 3 4 0.5",
            "1 2 3 4 1.5",
            "1 2 -3 4 0.5",
        ] {
            assert!(
                matches!(parse_detections(bad), Err(Error::Adapter { .. })),
                "{bad}"
            );
        }
    }
}
