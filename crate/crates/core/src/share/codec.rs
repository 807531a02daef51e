//! Wire layout, little-endian:
//!
//! ```text
//! magic     4  b"VXM1"
//! sender_id 4  u32
//! seq       4  u32
//! stamp     8  u64, microseconds
//! res       4  f32, meters
//! key_count 4  u32
//! keys         first key as 3 x i32, then per key the three component
//!              deltas from the previous key as zig-zag LEB128 varints
//! ```

use crate::error::{DecodeError, DecodeErrorKind};
use crate::key::VoxelKey;

use super::ShareFrame;

pub const FRAME_MAGIC: [u8; 4] = *b"VXM1";
pub const HEADER_LEN: usize = 28;

#[inline]
fn zigzag(v: i64) -> u64 {
    ((v << 1) ^ (v >> 63)) as u64
}

#[inline]
fn unzigzag(v: u64) -> i64 {
    ((v >> 1) as i64) ^ -((v & 1) as i64)
}

fn put_varint(out: &mut Vec<u8>, mut v: u64) {
    while v >= 0x80 {
        out.push((v as u8) | 0x80);
        v >>= 7;
    }
    out.push(v as u8);
}

fn varint_len(mut v: u64) -> usize {
    let mut n = 1;
    while v >= 0x80 {
        v >>= 7;
        n += 1;
    }
    n
}

fn deltas(prev: VoxelKey, k: VoxelKey) -> [u64; 3] {
    [
        zigzag(i64::from(k.ix) - i64::from(prev.ix)),
        zigzag(i64::from(k.iy) - i64::from(prev.iy)),
        zigzag(i64::from(k.iz) - i64::from(prev.iz)),
    ]
}

/// Exact size of [`encode_frame`]'s output.
pub fn encoded_len(frame: &ShareFrame) -> usize {
    let mut n = HEADER_LEN;
    let mut prev = None;
    for &k in &frame.keys {
        n += match prev {
            None => 12,
            Some(p) => deltas(p, k).iter().map(|&d| varint_len(d)).sum(),
        };
        prev = Some(k);
    }
    n
}

pub fn encode_frame(frame: &ShareFrame) -> Vec<u8> {
    let mut out = Vec::with_capacity(encoded_len(frame));
    out.extend_from_slice(&FRAME_MAGIC);
    out.extend_from_slice(&frame.sender_id.to_le_bytes());
    out.extend_from_slice(&frame.seq.to_le_bytes());
    out.extend_from_slice(&frame.stamp.to_le_bytes());
    out.extend_from_slice(&frame.res.to_le_bytes());
    out.extend_from_slice(&(frame.keys.len() as u32).to_le_bytes());
    let mut prev = None;
    for &k in &frame.keys {
        match prev {
            None => {
                for c in k.as_array() {
                    out.extend_from_slice(&c.to_le_bytes());
                }
            }
            Some(p) => {
                for d in deltas(p, k) {
                    put_varint(&mut out, d);
                }
            }
        }
        prev = Some(k);
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], DecodeError> {
        let end = self.pos + N;
        let bytes = self
            .buf
            .get(self.pos..end)
            .ok_or(DecodeError::at(self.buf.len(), DecodeErrorKind::Truncated))?;
        self.pos = end;
        Ok(bytes.try_into().expect("slice length"))
    }

    fn varint(&mut self) -> Result<u64, DecodeError> {
        let start = self.pos;
        let mut v = 0u64;
        for shift in (0..64).step_by(7) {
            let &b = self
                .buf
                .get(self.pos)
                .ok_or(DecodeError::at(self.buf.len(), DecodeErrorKind::Truncated))?;
            self.pos += 1;
            let chunk = u64::from(b & 0x7f);
            if shift == 63 && chunk > 1 {
                return Err(DecodeError::at(start, DecodeErrorKind::VarintOverflow));
            }
            v |= chunk << shift;
            if b & 0x80 == 0 {
                return Ok(v);
            }
        }
        Err(DecodeError::at(start, DecodeErrorKind::VarintOverflow))
    }
}

pub fn decode_frame(bytes: &[u8]) -> Result<ShareFrame, DecodeError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take::<4>()? != FRAME_MAGIC {
        return Err(DecodeError::at(0, DecodeErrorKind::BadMagic));
    }
    let sender_id = u32::from_le_bytes(r.take()?);
    let seq = u32::from_le_bytes(r.take()?);
    let stamp = u64::from_le_bytes(r.take()?);
    let res_at = r.pos;
    let res = f32::from_le_bytes(r.take()?);
    if !(res.is_finite() && res > 0.0) {
        return Err(DecodeError::at(res_at, DecodeErrorKind::BadResolution));
    }
    let count = u32::from_le_bytes(r.take()?) as usize;
    // Every key takes at least three bytes; reject impossible counts early.
    let min_body = if count == 0 { 0 } else { count.saturating_mul(3).saturating_add(9) };
    if min_body > bytes.len() - r.pos {
        return Err(DecodeError::at(bytes.len(), DecodeErrorKind::Truncated));
    }
    let mut keys = Vec::with_capacity(count);
    let mut prev: Option<VoxelKey> = None;
    for _ in 0..count {
        let at = r.pos;
        let k = match prev {
            None => VoxelKey::new(
                i32::from_le_bytes(r.take()?),
                i32::from_le_bytes(r.take()?),
                i32::from_le_bytes(r.take()?),
            ),
            Some(p) => {
                let mut c = [0i32; 3];
                for (a, base) in p.as_array().into_iter().enumerate() {
                    let d = unzigzag(r.varint()?);
                    c[a] = i32::try_from(i64::from(base).checked_add(d).unwrap_or(i64::MAX))
                        .map_err(|_| DecodeError::at(at, DecodeErrorKind::KeyOverflow))?;
                }
                let k = VoxelKey::from(c);
                if k <= p {
                    return Err(DecodeError::at(at, DecodeErrorKind::Unsorted));
                }
                k
            }
        };
        keys.push(k);
        prev = Some(k);
    }
    if r.pos != bytes.len() {
        return Err(DecodeError::at(r.pos, DecodeErrorKind::TrailingBytes(bytes.len() - r.pos)));
    }
    Ok(ShareFrame { sender_id, seq, stamp, res, keys })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_frame_is_header_only() {
        let f = ShareFrame::new(1, 2, 3, 0.1, vec![]);
        let b = encode_frame(&f);
        assert_eq!(b.len(), 28);
        assert_eq!(&b[..4], b"VXM1");
        assert_eq!(decode_frame(&b).unwrap(), f);
    }

    #[test]
    fn hand_encoded_two_keys() {
        let f = ShareFrame::new(0xAABBCCDD, 9, 1_700_000_000_000_000, 0.1, vec![VoxelKey::ZERO, VoxelKey::new(0, 0, 1)]);
        let b = encode_frame(&f);
        let mut want = Vec::new();
        want.extend_from_slice(b"VXM1");
        want.extend_from_slice(&[0xDD, 0xCC, 0xBB, 0xAA]);
        want.extend_from_slice(&[9, 0, 0, 0]);
        want.extend_from_slice(&1_700_000_000_000_000u64.to_le_bytes());
        want.extend_from_slice(&0.1f32.to_le_bytes());
        want.extend_from_slice(&[2, 0, 0, 0]);
        want.extend_from_slice(&[0; 12]);
        want.extend_from_slice(&[0x00, 0x00, 0x02]);
        assert_eq!(b, want);
        assert_eq!(b.len(), 28 + 12 + 3);
        assert_eq!(encoded_len(&f), b.len());
        assert_eq!(decode_frame(&b).unwrap(), f);
    }

    #[test]
    fn zigzag_values() {
        assert_eq!(zigzag(0), 0);
        assert_eq!(zigzag(-1), 1);
        assert_eq!(zigzag(1), 2);
        assert_eq!(zigzag(-2), 3);
        assert_eq!(unzigzag(zigzag(i64::MIN)), i64::MIN);
        assert_eq!(unzigzag(zigzag(i64::MAX)), i64::MAX);
    }

    #[test]
    fn decode_errors_name_offsets() {
        let f = ShareFrame::new(1, 1, 1, 0.1, vec![VoxelKey::ZERO, VoxelKey::new(1, 1, 1)]);
        let good = encode_frame(&f);

        let mut bad = good.clone();
        bad[0] = b'X';
        assert_eq!(decode_frame(&bad).unwrap_err().kind, DecodeErrorKind::BadMagic);

        let mut bad = good.clone();
        bad[20..24].copy_from_slice(&f32::NAN.to_le_bytes());
        assert_eq!(decode_frame(&bad).unwrap_err(), DecodeError::at(20, DecodeErrorKind::BadResolution));

        let mut bad = good.clone();
        bad[20..24].copy_from_slice(&(-0.1f32).to_le_bytes());
        assert_eq!(decode_frame(&bad).unwrap_err().kind, DecodeErrorKind::BadResolution);

        let mut bad = good.clone();
        bad.push(0);
        assert_eq!(decode_frame(&bad).unwrap_err(), DecodeError::at(good.len(), DecodeErrorKind::TrailingBytes(1)));

        // claims three keys, carries two
        let mut bad = good.clone();
        bad[24] = 3;
        assert_eq!(decode_frame(&bad).unwrap_err().kind, DecodeErrorKind::Truncated);

        // second key equal to the first
        let mut bad = good.clone();
        let n = bad.len();
        bad[n - 3..].copy_from_slice(&[0, 0, 0]);
        assert_eq!(decode_frame(&bad).unwrap_err(), DecodeError::at(40, DecodeErrorKind::Unsorted));
    }

    #[test]
    fn every_prefix_is_rejected() {
        let f = ShareFrame::new(3, 4, 5, 0.2, (0..40).map(|i| VoxelKey::new(i / 7, -i, i * i)).collect());
        let b = encode_frame(&f);
        for cut in 0..b.len() {
            assert!(decode_frame(&b[..cut]).is_err(), "prefix {cut} accepted");
        }
    }

    fn arb_key() -> impl Strategy<Value = VoxelKey> {
        prop_oneof![
            (any::<i32>(), any::<i32>(), any::<i32>()).prop_map(|(a, b, c)| VoxelKey::new(a, b, c)),
            (-50i32..50, -50i32..50, -10i32..10).prop_map(|(a, b, c)| VoxelKey::new(a, b, c)),
        ]
    }

    proptest! {
        #[test]
        fn round_trip(
            sender in any::<u32>(), seq in any::<u32>(), stamp in any::<u64>(),
            res in 0.001f32..10.0, keys in proptest::collection::vec(arb_key(), 0..200),
        ) {
            let f = ShareFrame::new(sender, seq, stamp, res, keys);
            let b = encode_frame(&f);
            prop_assert_eq!(b.len(), encoded_len(&f));
            prop_assert_eq!(decode_frame(&b).unwrap(), f);
        }
    }
}
