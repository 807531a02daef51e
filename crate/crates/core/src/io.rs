//! Sensor frame logs and PLY export.
//!
//! Point log layout: `b"VXPCLOG1"`, then per frame the stamp (`f64` LE),
//! origin (3 x `f64` LE), point count (`u32` LE) and the points
//! (3 x `f32` LE each). Points are stored at sensor precision, origins at
//! pose precision.

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::LogError;
use crate::integrate::SensorFrame;
use crate::key::{key_to_center, Point3};
use crate::share::log::read_full;
use crate::store::MapState;

pub const POINT_LOG_MAGIC: [u8; 8] = *b"VXPCLOG1";

const FRAME_HEADER: usize = 8 + 24 + 4;

pub struct PointLogWriter<W: Write> {
    out: W,
    frames: usize,
}

impl<W: Write> PointLogWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        out.write_all(&POINT_LOG_MAGIC)?;
        Ok(Self { out, frames: 0 })
    }

    pub fn write(&mut self, frame: &SensorFrame) -> Result<(), LogError> {
        let count = u32::try_from(frame.points.len()).map_err(|_| LogError::TooManyPoints {
            frame: self.frames,
            count: frame.points.len(),
        })?;
        let mut buf = Vec::with_capacity(FRAME_HEADER + frame.points.len() * 12);
        buf.extend_from_slice(&frame.stamp.to_le_bytes());
        for c in frame.origin {
            buf.extend_from_slice(&c.to_le_bytes());
        }
        buf.extend_from_slice(&count.to_le_bytes());
        for p in &frame.points {
            for c in p {
                buf.extend_from_slice(&(*c as f32).to_le_bytes());
            }
        }
        self.out.write_all(&buf)?;
        self.frames += 1;
        Ok(())
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

/// Streams frames in stored order. Points with a NaN or infinite component
/// are dropped and counted.
pub struct PointLogReader<R: Read> {
    input: R,
    offset: u64,
    index: usize,
    dropped: usize,
    failed: bool,
}

impl<R: Read> PointLogReader<R> {
    pub fn new(mut input: R) -> Result<Self, LogError> {
        let mut magic = [0u8; 8];
        if read_full(&mut input, &mut magic)? != 8 || magic != POINT_LOG_MAGIC {
            return Err(LogError::BadMagic);
        }
        Ok(Self { input, offset: 8, index: 0, dropped: 0, failed: false })
    }

    /// Non-finite points dropped so far.
    pub fn dropped_nonfinite(&self) -> usize {
        self.dropped
    }

    fn read_frame(&mut self) -> Result<Option<SensorFrame>, LogError> {
        let mut head = [0u8; FRAME_HEADER];
        let n = read_full(&mut self.input, &mut head)?;
        if n == 0 {
            return Ok(None);
        }
        if n != FRAME_HEADER {
            return Err(LogError::Truncated { frame: self.index, offset: self.offset + n as u64 });
        }
        self.offset += n as u64;
        let f64_at = |i: usize| f64::from_le_bytes(head[i..i + 8].try_into().unwrap());
        let stamp = f64_at(0);
        let origin = [f64_at(8), f64_at(16), f64_at(24)];
        let count = u32::from_le_bytes(head[32..36].try_into().unwrap()) as usize;

        let mut points = Vec::with_capacity(count.min(1 << 20));
        let mut chunk = vec![0u8; 12 * 4096];
        let mut left = count;
        while left > 0 {
            let take = left.min(4096);
            let bytes = &mut chunk[..take * 12];
            let n = read_full(&mut self.input, bytes)?;
            if n != bytes.len() {
                return Err(LogError::Truncated { frame: self.index, offset: self.offset + n as u64 });
            }
            self.offset += n as u64;
            for p in bytes.chunks_exact(12) {
                let c = |i: usize| f64::from(f32::from_le_bytes(p[i..i + 4].try_into().unwrap()));
                let pt: Point3 = [c(0), c(4), c(8)];
                if pt.iter().all(|v| v.is_finite()) {
                    points.push(pt);
                } else {
                    self.dropped += 1;
                }
            }
            left -= take;
        }
        self.index += 1;
        Ok(Some(SensorFrame { stamp, origin, points }))
    }
}

impl<R: Read> Iterator for PointLogReader<R> {
    type Item = Result<SensorFrame, LogError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.failed {
            return None;
        }
        let r = self.read_frame().transpose();
        if matches!(r, Some(Err(_))) {
            self.failed = true;
        }
        r
    }
}

pub fn open_point_log(path: &Path) -> Result<PointLogReader<BufReader<File>>, LogError> {
    PointLogReader::new(BufReader::new(File::open(path)?))
}

pub fn write_point_log(path: &Path, frames: &[SensorFrame]) -> Result<(), LogError> {
    let mut w = PointLogWriter::new(BufWriter::new(File::create(path)?))?;
    for f in frames {
        w.write(f)?;
    }
    w.finish()?;
    Ok(())
}

/// Which records to export.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyMode {
    /// Records in state `Occ`.
    Occupied,
    /// Records with a positive inflation count.
    Inflated,
}

/// Writes voxel centers as an ASCII PLY point cloud, sorted by key.
/// Returns the vertex count.
pub fn write_ply<W: Write>(map: &MapState, mode: PlyMode, mut out: W) -> io::Result<usize> {
    let keys = match mode {
        PlyMode::Occupied => map.occupied_keys(),
        PlyMode::Inflated => map.inflated_keys(),
    };
    writeln!(out, "ply")?;
    writeln!(out, "format ascii 1.0")?;
    writeln!(out, "comment voxhash res {}", map.config().res)?;
    writeln!(out, "element vertex {}", keys.len())?;
    writeln!(out, "property float x")?;
    writeln!(out, "property float y")?;
    writeln!(out, "property float z")?;
    writeln!(out, "end_header")?;
    for &k in &keys {
        let c = key_to_center(k, map.config());
        writeln!(out, "{} {} {}", c[0], c[1], c[2])?;
    }
    out.flush()?;
    Ok(keys.len())
}

pub fn export_ply(map: &MapState, path: &Path, mode: PlyMode) -> io::Result<usize> {
    write_ply(map, mode, BufWriter::new(File::create(path)?))
}
