//! Tract polylines: text and binary files, subsampling, endpoints.
//!
//! Text files hold one block per tract, a `TRACT <n>` line followed by `n`
//! lines of `x y z`, with blank lines between blocks. The binary variant is
//! the magic `NGTR1`, a u64 tract count, one u64 point count per tract, then
//! all coordinates as f64; everything little-endian.

use std::fmt::Write as _;
use std::io::Cursor;
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use super::DtiError;

pub const TRACT_MAGIC: &[u8; 5] = b"NGTR1";

/// An ordered polyline of at least two points, consecutive points distinct.
#[derive(Debug, Clone, PartialEq)]
pub struct Tract {
    points: Vec<[f64; 3]>,
}

impl Tract {
    pub fn new(points: Vec<[f64; 3]>) -> Result<Self, DtiError> {
        if points.len() < 2 {
            return Err(DtiError::InvalidTract(format!(
                "a tract needs at least 2 points, got {}",
                points.len()
            )));
        }
        if let Some(i) = points.windows(2).position(|w| w[0] == w[1]) {
            return Err(DtiError::InvalidTract(format!(
                "points {i} and {} coincide",
                i + 1
            )));
        }
        Ok(Self { points })
    }

    pub fn points(&self) -> &[[f64; 3]] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn head(&self) -> [f64; 3] {
        self.points[0]
    }

    pub fn tail(&self) -> [f64; 3] {
        self.points[self.points.len() - 1]
    }
}

fn parse_text(text: &str) -> Result<Vec<Tract>, DtiError> {
    let mut tracts = Vec::new();
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    while let Some((line, l)) = lines.next() {
        if l.is_empty() {
            continue;
        }
        let record = tracts.len();
        let err = |line: usize, msg: String| DtiError::Parse { record, line, msg };
        let n: usize = l
            .strip_prefix("TRACT")
            .map(str::trim)
            .ok_or_else(|| err(line, format!("expected 'TRACT <n>', found '{l}'")))?
            .parse()
            .map_err(|e| err(line, format!("bad point count: {e}")))?;
        let mut points = Vec::with_capacity(n);
        for _ in 0..n {
            let (pl, p) = lines
                .next()
                .ok_or_else(|| err(line, format!("file ends before {n} points")))?;
            let xyz = p
                .split_whitespace()
                .map(str::parse::<f64>)
                .collect::<Result<Vec<_>, _>>()
                .map_err(|e| err(pl, e.to_string()))?;
            match xyz[..] {
                [x, y, z] => points.push([x, y, z]),
                _ => return Err(err(pl, format!("expected 3 coordinates, found {}", xyz.len()))),
            }
        }
        tracts.push(Tract::new(points).map_err(|e| err(line, e.to_string()))?);
    }
    Ok(tracts)
}

fn parse_binary(bytes: &[u8]) -> Result<Vec<Tract>, DtiError> {
    let truncated = |record: usize| DtiError::Parse {
        record,
        line: 0,
        msg: "truncated binary tract file".into(),
    };
    let mut r = Cursor::new(&bytes[TRACT_MAGIC.len()..]);
    let count = r.read_u64::<LittleEndian>().map_err(|_| truncated(0))? as usize;
    let remaining = bytes.len() - TRACT_MAGIC.len() - 8;
    if count > remaining / 8 {
        return Err(truncated(0));
    }
    let mut counts = vec![0u64; count];
    r.read_u64_into::<LittleEndian>(&mut counts).map_err(|_| truncated(0))?;
    let mut tracts = Vec::with_capacity(count);
    for (record, &n) in counts.iter().enumerate() {
        let n = n as usize;
        if n > remaining / 24 {
            return Err(truncated(record));
        }
        let mut flat = vec![0f64; 3 * n];
        r.read_f64_into::<LittleEndian>(&mut flat).map_err(|_| truncated(record))?;
        let points = flat.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
        tracts.push(Tract::new(points).map_err(|e| DtiError::Parse {
            record,
            line: 0,
            msg: e.to_string(),
        })?);
    }
    Ok(tracts)
}

/// Parses either format, chosen by the leading magic.
pub fn parse_tracts(bytes: &[u8]) -> Result<Vec<Tract>, DtiError> {
    if bytes.starts_with(TRACT_MAGIC) {
        parse_binary(bytes)
    } else {
        let text = std::str::from_utf8(bytes).map_err(|e| DtiError::Parse {
            record: 0,
            line: 0,
            msg: e.to_string(),
        })?;
        parse_text(text)
    }
}

pub fn load_tracts(path: &Path) -> Result<Vec<Tract>, DtiError> {
    let bytes = std::fs::read(path).map_err(|source| DtiError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_tracts(&bytes)
}

/// Text format; coordinates printed in shortest round-trip form.
pub fn tracts_to_text(tracts: &[Tract]) -> String {
    let mut out = String::new();
    for (i, t) in tracts.iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        let _ = writeln!(out, "TRACT {}", t.len());
        for p in &t.points {
            let _ = writeln!(out, "{:?} {:?} {:?}", p[0], p[1], p[2]);
        }
    }
    out
}

pub fn tracts_to_binary(tracts: &[Tract]) -> Vec<u8> {
    let total: usize = tracts.iter().map(Tract::len).sum();
    let mut out = Vec::with_capacity(13 + 8 * tracts.len() + 24 * total);
    out.extend_from_slice(TRACT_MAGIC);
    out.write_u64::<LittleEndian>(tracts.len() as u64).unwrap();
    for t in tracts {
        out.write_u64::<LittleEndian>(t.len() as u64).unwrap();
    }
    for t in tracts {
        for p in &t.points {
            for &x in p {
                out.write_f64::<LittleEndian>(x).unwrap();
            }
        }
    }
    out
}

/// Keeps tracts at indices 0, stride, 2·stride, … that have more than
/// `min_points` points.
///
/// # Panics
/// If `stride` is 0.
pub fn subsample_tracts(tracts: &[Tract], stride: usize, min_points: usize) -> Vec<Tract> {
    assert!(stride >= 1, "stride must be positive");
    tracts
        .iter()
        .step_by(stride)
        .filter(|t| t.len() > min_points)
        .cloned()
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum End {
    Head,
    Tail,
}

impl End {
    pub fn name(self) -> &'static str {
        match self {
            End::Head => "head",
            End::Tail => "tail",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Endpoint {
    pub tract: usize,
    pub end: End,
    pub point: [f64; 3],
}

/// First and last point of every tract, in tract order.
pub fn tract_endpoints(tracts: &[Tract]) -> Vec<Endpoint> {
    tracts
        .iter()
        .enumerate()
        .flat_map(|(tract, t)| {
            [
                Endpoint {
                    tract,
                    end: End::Head,
                    point: t.head(),
                },
                Endpoint {
                    tract,
                    end: End::Tail,
                    point: t.tail(),
                },
            ]
        })
        .collect()
}
