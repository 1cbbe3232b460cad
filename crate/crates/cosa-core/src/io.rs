//! On-disk formats: the tensor container and P6 PPM images.
//!
//! Tensor container layout (all integers little-endian):
//!
//! ```text
//! magic  "COSATNSR"   8 bytes
//! version u8          currently 1
//! rank    u32
//! dims    u32 * rank
//! data    f32 * prod(dims), little-endian, row-major
//! ```
//!
//! Values are always stored as `f32` on disk regardless of the in-memory
//! scalar type.

use crate::error::{CosaError, Result};
use crate::scalar::Scalar;
use crate::tensor::Tensor;
use std::io::{Read, Write};
use std::path::Path;

pub const TENSOR_MAGIC: &[u8; 8] = b"COSATNSR";
pub const TENSOR_VERSION: u8 = 1;

/// Guard against absurd headers before allocating.
const MAX_ELEMENTS: u64 = 1 << 31;

pub fn write_tensor_to<S: Scalar, W: Write>(w: &mut W, t: &Tensor<S>) -> Result<()> {
    w.write_all(TENSOR_MAGIC)?;
    w.write_all(&[TENSOR_VERSION])?;
    w.write_all(&(t.rank() as u32).to_le_bytes())?;
    for &d in t.shape() {
        w.write_all(&(d as u32).to_le_bytes())?;
    }
    // Buffer the payload: one small allocation beats per-element syscalls.
    let mut buf = Vec::with_capacity(t.numel() * 4);
    for &x in t.data() {
        buf.extend_from_slice(&x.as_f32().to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_tensor_from<S: Scalar, R: Read>(r: &mut R, origin: &str) -> Result<Tensor<S>> {
    let bad = |detail: &str| CosaError::Format { path: origin.to_string(), detail: detail.into() };
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated header"))?;
    if &magic != TENSOR_MAGIC {
        return Err(bad("bad magic"));
    }
    let mut ver = [0u8; 1];
    r.read_exact(&mut ver).map_err(|_| bad("truncated header"))?;
    if ver[0] != TENSOR_VERSION {
        return Err(bad(&format!("unsupported version {}", ver[0])));
    }
    let mut u32buf = [0u8; 4];
    r.read_exact(&mut u32buf).map_err(|_| bad("truncated header"))?;
    let rank = u32::from_le_bytes(u32buf) as usize;
    if rank > 8 {
        return Err(bad(&format!("rank {} out of range", rank)));
    }
    let mut shape = Vec::with_capacity(rank);
    let mut numel: u64 = 1;
    for _ in 0..rank {
        r.read_exact(&mut u32buf).map_err(|_| bad("truncated dims"))?;
        let d = u32::from_le_bytes(u32buf) as u64;
        numel = numel.saturating_mul(d.max(1)).min(u64::MAX);
        shape.push(d as usize);
    }
    let numel: u64 = shape.iter().map(|&d| d as u64).product();
    if numel > MAX_ELEMENTS {
        return Err(bad("element count out of range"));
    }
    let mut payload = vec![0u8; numel as usize * 4];
    r.read_exact(&mut payload).map_err(|_| bad("truncated payload"))?;
    let mut data = Vec::with_capacity(numel as usize);
    for chunk in payload.chunks_exact(4) {
        data.push(S::from_f32(f32::from_le_bytes([chunk[0], chunk[1], chunk[2], chunk[3]])));
    }
    Tensor::new(shape, data)
}

pub fn write_tensor<S: Scalar>(path: &Path, t: &Tensor<S>) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path)?);
    write_tensor_to(&mut f, t)?;
    f.flush()?;
    Ok(())
}

pub fn read_tensor<S: Scalar>(path: &Path) -> Result<Tensor<S>> {
    let mut f = std::io::BufReader::new(std::fs::File::open(path)?);
    let t = read_tensor_from(&mut f, &path.display().to_string())?;
    // Trailing garbage means the file is not what we think it is.
    let mut extra = [0u8; 1];
    if f.read(&mut extra)? != 0 {
        return Err(CosaError::Format {
            path: path.display().to_string(),
            detail: "trailing bytes after payload".into(),
        });
    }
    Ok(t)
}

/// Write an `h x w` RGB image (rows of `[r, g, b]` in `[0, 1]`) as binary P6 PPM.
pub fn write_ppm<S: Scalar>(path: &Path, h: usize, w: usize, rgb: &[S]) -> Result<()> {
    if rgb.len() != h * w * 3 {
        return Err(CosaError::Shape {
            op: "write_ppm",
            detail: format!("{}x{} image wants {} values, got {}", h, w, h * w * 3, rgb.len()),
        });
    }
    let mut out = Vec::with_capacity(32 + h * w * 3);
    out.extend_from_slice(format!("P6\n{} {}\n255\n", w, h).as_bytes());
    for &v in rgb {
        let byte = (v.as_f64().clamp(0.0, 1.0) * 255.0).round() as u8;
        out.push(byte);
    }
    std::fs::write(path, out)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tensor_round_trip_is_exact() {
        let dir = std::env::temp_dir().join(format!("cosa-io-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("t.bin");
        let t = Tensor::<f32>::new(
            vec![2, 3, 4],
            (0..24).map(|i| (i as f32) * 0.5 - 3.0).collect(),
        )
        .unwrap();
        write_tensor(&path, &t).unwrap();
        let back: Tensor<f32> = read_tensor(&path).unwrap();
        assert_eq!(t, back);
        std::fs::remove_dir_all(&dir).ok();
    }

    #[test]
    fn header_layout_is_frozen() {
        let mut buf = Vec::new();
        let t = Tensor::<f32>::new(vec![1, 2], vec![1.0, -1.0]).unwrap();
        write_tensor_to(&mut buf, &t).unwrap();
        assert_eq!(&buf[0..8], b"COSATNSR");
        assert_eq!(buf[8], 1); // version
        assert_eq!(&buf[9..13], &2u32.to_le_bytes()); // rank
        assert_eq!(&buf[13..17], &1u32.to_le_bytes()); // dim 0
        assert_eq!(&buf[17..21], &2u32.to_le_bytes()); // dim 1
        assert_eq!(&buf[21..25], &1.0f32.to_le_bytes());
        assert_eq!(&buf[25..29], &(-1.0f32).to_le_bytes());
        assert_eq!(buf.len(), 29);
    }

    #[test]
    fn bad_magic_is_rejected() {
        let mut buf = Vec::new();
        write_tensor_to(&mut buf, &Tensor::<f32>::zeros(&[2])).unwrap();
        buf[0] = b'X';
        let r = read_tensor_from::<f32, _>(&mut buf.as_slice(), "mem");
        assert!(matches!(r, Err(CosaError::Format { .. })));
    }

    #[test]
    fn truncation_is_rejected() {
        let mut buf = Vec::new();
        write_tensor_to(&mut buf, &Tensor::<f32>::zeros(&[4, 4])).unwrap();
        buf.truncate(buf.len() - 3);
        let r = read_tensor_from::<f32, _>(&mut buf.as_slice(), "mem");
        assert!(matches!(r, Err(CosaError::Format { .. })));
    }

    #[test]
    fn ppm_header_and_clamping() {
        let dir = std::env::temp_dir().join(format!("cosa-ppm-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("img.ppm");
        // 1x2 image; second pixel deliberately out of range.
        write_ppm(&path, 1, 2, &[0.0f32, 0.5, 1.0, -1.0, 2.0, 0.25]).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        assert!(bytes.starts_with(b"P6\n2 1\n255\n"));
        let px = &bytes[bytes.len() - 6..];
        assert_eq!(px, &[0, 128, 255, 0, 255, 64]);
        std::fs::remove_dir_all(&dir).ok();
    }
}
