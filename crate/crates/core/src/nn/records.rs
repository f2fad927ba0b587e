//! Little-endian named-tensor records: per tensor a `u16` name length,
//! the UTF-8 name, a `u8` rank, `u32` dims and `f32` data.

use super::Tensor;
use std::io::{self, Read, Write};

pub fn write_records<W: Write>(w: &mut W, tensors: &[(&str, &Tensor)]) -> io::Result<()> {
    for (name, t) in tensors {
        let name_len = u16::try_from(name.len()).map_err(|_| invalid("tensor name too long"))?;
        w.write_all(&name_len.to_le_bytes())?;
        w.write_all(name.as_bytes())?;
        let rank = u8::try_from(t.shape().len()).map_err(|_| invalid("rank exceeds 255"))?;
        w.write_all(&[rank])?;
        for &d in t.shape() {
            let d = u32::try_from(d).map_err(|_| invalid("dimension exceeds u32"))?;
            w.write_all(&d.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(t.numel() * 4);
        for &v in t.data() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
        w.write_all(&buf)?;
    }
    Ok(())
}

pub fn read_records<R: Read>(r: &mut R, count: usize) -> io::Result<Vec<(String, Tensor)>> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let name_len = read_u16(r)? as usize;
        let mut name = vec![0u8; name_len];
        r.read_exact(&mut name)?;
        let name = String::from_utf8(name).map_err(|_| invalid("tensor name is not UTF-8"))?;
        let mut rank = [0u8];
        r.read_exact(&mut rank)?;
        let shape = (0..rank[0]).map(|_| read_u32(r).map(|d| d as usize)).collect::<io::Result<Vec<_>>>()?;
        let numel = shape
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .filter(|&n| n <= 1 << 28)
            .ok_or_else(|| invalid("tensor too large"))?;
        let mut bytes = vec![0u8; numel * 4];
        r.read_exact(&mut bytes)?;
        let data = bytes
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
            .collect();
        let t = Tensor::new(shape, data).map_err(|e| invalid(&e.to_string()))?;
        out.push((name, t));
    }
    Ok(out)
}

pub fn read_u16<R: Read>(r: &mut R) -> io::Result<u16> {
    let mut b = [0u8; 2];
    r.read_exact(&mut b)?;
    Ok(u16::from_le_bytes(b))
}

pub fn read_u32<R: Read>(r: &mut R) -> io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

pub fn read_u64<R: Read>(r: &mut R) -> io::Result<u64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b)?;
    Ok(u64::from_le_bytes(b))
}

fn invalid(msg: &str) -> io::Error {
    io::Error::new(io::ErrorKind::InvalidData, msg.to_string())
}
