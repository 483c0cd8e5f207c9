//! Binary field snapshots and their CSV export.
//!
//! Layout (all little-endian):
//!
//! | bytes | content |
//! |-------|---------|
//! | 4     | magic `PLAP` |
//! | 4     | version (`u32`, currently 1) |
//! | 4     | dimension `n` (`u32`) |
//! | 4     | `m_per_axis` (`u32`, boundary nodes included) |
//! | 8     | `R` (`f64`) |
//! | 8     | `t` (`f64`) |
//! | 8·N   | interior values, row-major, `N = (m - 2)^n` |

use std::io::{Read, Write};
use std::path::Path;

use plap_core::{Grid, State};

pub const MAGIC: [u8; 4] = *b"PLAP";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 32;

#[derive(Debug, thiserror::Error)]
pub enum SnapshotError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("not a snapshot file (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("snapshot is truncated or has trailing bytes: expected {expected} values, found {found} bytes")]
    Length { expected: usize, found: usize },
    #[error("snapshot header is inconsistent: {0}")]
    Header(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub n: u32,
    pub m_per_axis: u32,
    pub radius: f64,
    pub t: f64,
    pub values: Vec<f64>,
}

impl Snapshot {
    pub fn of(grid: &Grid, state: &State) -> Self {
        Snapshot {
            n: grid.dim() as u32,
            m_per_axis: grid.m_per_axis() as u32,
            radius: grid.radius(),
            t: state.t,
            values: state.u.clone(),
        }
    }

    pub fn state(&self) -> State {
        State::new(self.values.clone(), self.t)
    }

    /// Whether the snapshot was taken on a grid of the same geometry.
    pub fn matches(&self, grid: &Grid) -> bool {
        self.n as usize == grid.dim()
            && self.m_per_axis as usize == grid.m_per_axis()
            && self.radius.to_bits() == grid.radius().to_bits()
    }

    fn interior_len(n: u32, m: u32) -> Result<usize, SnapshotError> {
        if !(1..=2).contains(&n) || m < 3 {
            return Err(SnapshotError::Header(format!("n = {n}, m_per_axis = {m}")));
        }
        Ok((m as usize - 2).pow(n))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(HEADER_LEN + 8 * self.values.len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&self.n.to_le_bytes());
        out.extend_from_slice(&self.m_per_axis.to_le_bytes());
        out.extend_from_slice(&self.radius.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        for v in &self.values {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, SnapshotError> {
        if bytes.len() < HEADER_LEN {
            return Err(SnapshotError::Length {
                expected: 0,
                found: bytes.len(),
            });
        }
        if bytes[0..4] != MAGIC {
            return Err(SnapshotError::BadMagic);
        }
        let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
        let f64_at = |i: usize| f64::from_le_bytes(bytes[i..i + 8].try_into().unwrap());
        let version = u32_at(4);
        if version != VERSION {
            return Err(SnapshotError::Version(version));
        }
        let n = u32_at(8);
        let m_per_axis = u32_at(12);
        let expected = Self::interior_len(n, m_per_axis)?;
        let body = &bytes[HEADER_LEN..];
        if body.len() != 8 * expected {
            return Err(SnapshotError::Length {
                expected,
                found: body.len(),
            });
        }
        Ok(Snapshot {
            n,
            m_per_axis,
            radius: f64_at(16),
            t: f64_at(24),
            values: body
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect(),
        })
    }

    pub fn write_to(&self, mut w: impl Write) -> std::io::Result<()> {
        w.write_all(&self.to_bytes())
    }

    pub fn read_from(mut r: impl Read) -> Result<Self, SnapshotError> {
        let mut bytes = Vec::new();
        r.read_to_end(&mut bytes)?;
        Self::from_bytes(&bytes)
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_bytes())
    }

    pub fn load(path: &Path) -> Result<Self, SnapshotError> {
        Self::from_bytes(&std::fs::read(path)?)
    }

    /// CSV with one row per interior node: coordinates then value.
    /// Shortest round-trip formatting, so the export is lossless.
    pub fn to_csv(&self) -> String {
        let m = self.m_per_axis as usize;
        let h = 2.0 * self.radius / (m - 1) as f64;
        let mi = m - 2;
        let x = |i: usize| -self.radius + (i + 1) as f64 * h;
        let mut out = String::new();
        match self.n {
            1 => {
                out.push_str("x,u\n");
                for (i, v) in self.values.iter().enumerate() {
                    out.push_str(&format!("{},{}\n", x(i), v));
                }
            }
            _ => {
                out.push_str("x,y,u\n");
                for (idx, v) in self.values.iter().enumerate() {
                    out.push_str(&format!("{},{},{}\n", x(idx / mi), x(idx % mi), v));
                }
            }
        }
        out
    }
}
