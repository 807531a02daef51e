//! Frame log container: `b"VXMLOG1\0"`, then per frame a `u32` LE byte
//! length followed by the encoded frame.

use std::io::{self, Read, Write};

use crate::error::LogError;

use super::{decode_frame, encode_frame, ShareFrame};

pub const SHARE_LOG_MAGIC: [u8; 8] = *b"VXMLOG1\0";

pub struct ShareLogWriter<W: Write> {
    out: W,
}

impl<W: Write> ShareLogWriter<W> {
    pub fn new(mut out: W) -> io::Result<Self> {
        out.write_all(&SHARE_LOG_MAGIC)?;
        Ok(Self { out })
    }

    pub fn write_encoded(&mut self, bytes: &[u8]) -> io::Result<()> {
        let len = u32::try_from(bytes.len()).map_err(|_| io::Error::other("frame larger than 4 GiB"))?;
        self.out.write_all(&len.to_le_bytes())?;
        self.out.write_all(bytes)
    }

    pub fn write(&mut self, frame: &ShareFrame) -> io::Result<()> {
        self.write_encoded(&encode_frame(frame))
    }

    pub fn finish(mut self) -> io::Result<W> {
        self.out.flush()?;
        Ok(self.out)
    }
}

pub struct ShareLogReader<R: Read> {
    input: R,
    offset: u64,
    index: usize,
    failed: bool,
}

impl<R: Read> ShareLogReader<R> {
    pub fn new(mut input: R) -> Result<Self, LogError> {
        let mut magic = [0u8; 8];
        input.read_exact(&mut magic).map_err(|e| match e.kind() {
            io::ErrorKind::UnexpectedEof => LogError::BadMagic,
            _ => LogError::Io(e),
        })?;
        if magic != SHARE_LOG_MAGIC {
            return Err(LogError::BadMagic);
        }
        Ok(Self { input, offset: 8, index: 0, failed: false })
    }

    fn read_frame(&mut self) -> Result<Option<ShareFrame>, LogError> {
        let mut len = [0u8; 4];
        match read_full(&mut self.input, &mut len)? {
            0 => return Ok(None),
            4 => {}
            _ => return Err(LogError::Truncated { frame: self.index, offset: self.offset }),
        }
        self.offset += 4;
        let len = u32::from_le_bytes(len) as usize;
        let mut buf = vec![0u8; len];
        if read_full(&mut self.input, &mut buf)? != len {
            return Err(LogError::Truncated { frame: self.index, offset: self.offset });
        }
        let frame = decode_frame(&buf).map_err(|source| LogError::Frame { frame: self.index, source })?;
        self.offset += len as u64;
        self.index += 1;
        Ok(Some(frame))
    }
}

/// Reads until `buf` is full or EOF; returns bytes read.
pub(crate) fn read_full<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut n = 0;
    while n < buf.len() {
        match r.read(&mut buf[n..]) {
            Ok(0) => break,
            Ok(k) => n += k,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(n)
}

impl<R: Read> Iterator for ShareLogReader<R> {
    type Item = Result<ShareFrame, LogError>;

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

pub fn write_share_log(path: &std::path::Path, frames: &[ShareFrame]) -> Result<(), LogError> {
    let file = std::fs::File::create(path)?;
    let mut w = ShareLogWriter::new(io::BufWriter::new(file))?;
    for f in frames {
        w.write(f)?;
    }
    w.finish()?;
    Ok(())
}

pub fn read_share_log(path: &std::path::Path) -> Result<Vec<ShareFrame>, LogError> {
    let file = std::fs::File::open(path)?;
    ShareLogReader::new(io::BufReader::new(file))?.collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::key::VoxelKey;

    fn frames() -> Vec<ShareFrame> {
        (0..3)
            .map(|s| ShareFrame::new(2, s, u64::from(s) * 100_000, 0.1, vec![VoxelKey::new(s as i32, 1, 2)]))
            .collect()
    }

    #[test]
    fn round_trip_in_memory() {
        let mut w = ShareLogWriter::new(Vec::new()).unwrap();
        for f in frames() {
            w.write(&f).unwrap();
        }
        let bytes = w.finish().unwrap();
        assert_eq!(&bytes[..8], b"VXMLOG1\0");
        let back: Vec<_> = ShareLogReader::new(&bytes[..]).unwrap().collect::<Result<_, _>>().unwrap();
        assert_eq!(back, frames());
    }

    #[test]
    fn truncation_and_magic() {
        let mut w = ShareLogWriter::new(Vec::new()).unwrap();
        for f in frames() {
            w.write(&f).unwrap();
        }
        let bytes = w.finish().unwrap();
        let cut = &bytes[..bytes.len() - 2];
        let res: Result<Vec<_>, _> = ShareLogReader::new(cut).unwrap().collect();
        assert!(matches!(res, Err(LogError::Truncated { frame: 2, .. })));
        assert!(matches!(ShareLogReader::new(&b"VXPCLOG1"[..]), Err(LogError::BadMagic)));
        assert_eq!(ShareLogReader::new(&SHARE_LOG_MAGIC[..]).unwrap().count(), 0);
    }
}
