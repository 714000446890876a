//! Line-oriented text log: `<seconds.micros> <KIND> <fields...>`.
//!
//! Kinds and field order:
//!
//! ```text
//! TICKS fl fr rl rr
//! SCAN  angle_min angle_increment n r1 .. rn     (-1 marks no return)
//! CMD   vx vy omega
//! GT    x y theta
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so every record parses
//! back bit-identically.

use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::geometry::{Pose2D, Twist2D, WheelTicks};
use crate::scan::LaserScan;

/// Timestamp in whole microseconds.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Micros(pub u64);

impl Micros {
    /// Nearest microsecond; negative or non-finite seconds map to 0.
    pub fn from_secs(t: f64) -> Self {
        if t.is_finite() && t > 0.0 {
            Micros((t * 1e6).round() as u64)
        } else {
            Micros(0)
        }
    }

    pub fn as_secs(self) -> f64 {
        self.0 as f64 / 1e6
    }
}

impl fmt::Display for Micros {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}.{:06}", self.0 / 1_000_000, self.0 % 1_000_000)
    }
}

impl FromStr for Micros {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let (whole, frac) = s
            .split_once('.')
            .ok_or_else(|| format!("timestamp {s:?} lacks a fraction"))?;
        if frac.len() != 6 || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(format!(
                "timestamp {s:?} needs exactly six fractional digits"
            ));
        }
        let whole: u64 = whole.parse().map_err(|_| format!("bad timestamp {s:?}"))?;
        let frac: u64 = frac.parse().map_err(|_| format!("bad timestamp {s:?}"))?;
        whole
            .checked_mul(1_000_000)
            .and_then(|w| w.checked_add(frac))
            .map(Micros)
            .ok_or_else(|| format!("timestamp {s:?} overflows"))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Payload {
    Ticks(WheelTicks),
    Scan {
        angle_min: f64,
        angle_increment: f64,
        ranges: Vec<Option<f64>>,
    },
    Cmd(Twist2D),
    Gt(Pose2D),
}

impl Payload {
    pub fn kind(&self) -> &'static str {
        match self {
            Payload::Ticks(_) => "TICKS",
            Payload::Scan { .. } => "SCAN",
            Payload::Cmd(_) => "CMD",
            Payload::Gt(_) => "GT",
        }
    }

    pub fn from_scan(scan: &LaserScan) -> Self {
        Payload::Scan {
            angle_min: scan.angle_min,
            angle_increment: scan.angle_increment,
            ranges: scan.ranges.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogRecord {
    pub time: Micros,
    pub payload: Payload,
}

impl LogRecord {
    pub fn new(t: f64, payload: Payload) -> Self {
        LogRecord {
            time: Micros::from_secs(t),
            payload,
        }
    }

    /// Rebuilds a scan record as a [`LaserScan`] with the given range limits.
    /// Readings outside the limits become "no return".
    pub fn to_scan(&self, range_min: f64, range_max: f64) -> Option<Result<LaserScan>> {
        let Payload::Scan {
            angle_min,
            angle_increment,
            ranges,
        } = &self.payload
        else {
            return None;
        };
        let ranges = ranges
            .iter()
            .map(|r| r.filter(|&r| r >= range_min && r <= range_max))
            .collect();
        Some(LaserScan::new(
            *angle_min,
            *angle_increment,
            range_min,
            range_max,
            ranges,
        ))
    }
}

impl fmt::Display for LogRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.time, self.payload.kind())?;
        match &self.payload {
            Payload::Ticks(t) => write!(f, " {} {} {} {}", t.fl, t.fr, t.rl, t.rr),
            Payload::Scan {
                angle_min,
                angle_increment,
                ranges,
            } => {
                write!(f, " {angle_min} {angle_increment} {}", ranges.len())?;
                for r in ranges {
                    match r {
                        Some(r) => write!(f, " {r}")?,
                        None => f.write_str(" -1")?,
                    }
                }
                Ok(())
            }
            Payload::Cmd(c) => write!(f, " {} {} {}", c.vx, c.vy, c.omega),
            Payload::Gt(p) => write!(f, " {} {} {}", p.x, p.y, p.theta),
        }
    }
}

fn field<T: FromStr>(it: &mut std::str::SplitAsciiWhitespace<'_>, what: &str) -> Result<T, String> {
    let s = it.next().ok_or_else(|| format!("missing {what}"))?;
    s.parse().map_err(|_| format!("invalid {what} {s:?}"))
}

fn finite(v: f64, what: &str) -> Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("{what} must be finite"))
    }
}

impl FromStr for LogRecord {
    type Err = String;

    fn from_str(line: &str) -> Result<Self, String> {
        let mut it = line.split_ascii_whitespace();
        let time: Micros = it.next().ok_or("empty record")?.parse()?;
        let kind = it.next().ok_or("missing record kind")?;
        let payload = match kind {
            "TICKS" => Payload::Ticks(WheelTicks {
                fl: field(&mut it, "fl")?,
                fr: field(&mut it, "fr")?,
                rl: field(&mut it, "rl")?,
                rr: field(&mut it, "rr")?,
            }),
            "SCAN" => {
                let angle_min = finite(field(&mut it, "angle_min")?, "angle_min")?;
                let angle_increment =
                    finite(field(&mut it, "angle_increment")?, "angle_increment")?;
                let n: usize = field(&mut it, "beam count")?;
                let mut ranges = Vec::with_capacity(n.min(1 << 16));
                for i in 0..n {
                    let r: f64 = field(&mut it, &format!("range {i}"))?;
                    ranges.push(if r == -1.0 {
                        None
                    } else if r.is_finite() && r >= 0.0 {
                        Some(r)
                    } else {
                        return Err(format!("range {i} must be -1 or a non-negative number"));
                    });
                }
                Payload::Scan {
                    angle_min,
                    angle_increment,
                    ranges,
                }
            }
            "CMD" => Payload::Cmd(Twist2D {
                vx: finite(field(&mut it, "vx")?, "vx")?,
                vy: finite(field(&mut it, "vy")?, "vy")?,
                omega: finite(field(&mut it, "omega")?, "omega")?,
            }),
            "GT" => Payload::Gt(Pose2D {
                x: finite(field(&mut it, "x")?, "x")?,
                y: finite(field(&mut it, "y")?, "y")?,
                theta: finite(field(&mut it, "theta")?, "theta")?,
            }),
            other => return Err(format!("unknown record kind {other:?}")),
        };
        if let Some(extra) = it.next() {
            return Err(format!("unexpected trailing field {extra:?}"));
        }
        Ok(LogRecord { time, payload })
    }
}

/// Parses a whole log. Blank lines and lines starting with `#` are skipped;
/// timestamps must not decrease.
pub fn parse_log(text: &str, path: &Path) -> Result<Vec<LogRecord>> {
    let mut out = Vec::new();
    let mut last = Micros(0);
    for (n, line) in text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        let rec: LogRecord = trimmed
            .parse()
            .map_err(|m: String| Error::parse(path, n + 1, m))?;
        if rec.time < last {
            return Err(Error::parse(path, n + 1, "timestamp goes backwards"));
        }
        last = rec.time;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_log(path: &Path) -> Result<Vec<LogRecord>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_log(&text, path)
}

pub fn write_log(path: &Path, records: &[LogRecord]) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    for r in records {
        writeln!(w, "{r}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
