//! Binary grid-function files.
//!
//! Layout: `PLGF`, version byte, p, k, n as u32 little-endian, kind byte
//! (0 rational, 1 float, 2 complex), then p^{kn} values: i64 numerator and
//! denominator pairs, f64, or (re, im) f64 pairs, all little-endian.

use super::{GridFunction, GridShape, Rational, Values};
use crate::error::{Error, Result};
use crate::ffalg::PrimeField;
use num_complex::Complex64;
use std::io::{Read, Write};
use std::path::Path;

const MAGIC: &[u8; 4] = b"PLGF";
const VERSION: u8 = 1;
const HEADER: usize = 4 + 1 + 12 + 1;

pub fn write_to<W: Write>(f: &GridFunction, mut w: W) -> Result<()> {
    let s = f.shape();
    let mut buf = Vec::with_capacity(HEADER + f.len() * 16);
    buf.extend_from_slice(MAGIC);
    buf.push(VERSION);
    for v in [s.p(), s.k() as u32, s.n() as u32] {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    match f.values() {
        Values::Rational(v) => {
            buf.push(0);
            for q in v {
                buf.extend_from_slice(&q.numer().to_le_bytes());
                buf.extend_from_slice(&q.denom().to_le_bytes());
            }
        }
        Values::Float(v) => {
            buf.push(1);
            for x in v {
                buf.extend_from_slice(&x.to_le_bytes());
            }
        }
        Values::Complex(v) => {
            buf.push(2);
            for z in v {
                buf.extend_from_slice(&z.re.to_le_bytes());
                buf.extend_from_slice(&z.im.to_le_bytes());
            }
        }
    }
    w.write_all(&buf)?;
    Ok(())
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes(b[at..at + 4].try_into().unwrap())
}

fn u64_at(b: &[u8], at: usize) -> u64 {
    u64::from_le_bytes(b[at..at + 8].try_into().unwrap())
}

pub fn read_from<R: Read>(mut r: R) -> Result<GridFunction> {
    let mut b = Vec::new();
    r.read_to_end(&mut b)?;
    if b.len() < 5 {
        return Err(if b.len() >= 4 && &b[..4] != MAGIC {
            Error::BadMagic
        } else {
            Error::CorruptLength
        });
    }
    if &b[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    if b[4] != VERSION {
        return Err(Error::VersionMismatch(b[4]));
    }
    if b.len() < HEADER {
        return Err(Error::CorruptLength);
    }
    let field = PrimeField::new(u32_at(&b, 5) as u64)?;
    let shape = GridShape::new(field, u32_at(&b, 9) as usize, u32_at(&b, 13) as usize)?;
    let kind = b[17];
    let width = match kind {
        0 | 2 => 16,
        1 => 8,
        other => return Err(Error::Invalid(format!("unknown value kind {other}"))),
    };
    let body = &b[HEADER..];
    if body.len() != shape.len() * width {
        return Err(Error::CorruptLength);
    }
    let values = match kind {
        0 => {
            let mut v = Vec::with_capacity(shape.len());
            for c in body.chunks_exact(16) {
                let num = u64_at(c, 0) as i64;
                let den = u64_at(c, 8) as i64;
                if den <= 0 {
                    return Err(Error::Invalid("nonpositive denominator".into()));
                }
                v.push(Rational::new(num, den));
            }
            Values::Rational(v)
        }
        1 => Values::Float(
            body.chunks_exact(8)
                .map(|c| f64::from_bits(u64_at(c, 0)))
                .collect(),
        ),
        _ => Values::Complex(
            body.chunks_exact(16)
                .map(|c| Complex64::new(f64::from_bits(u64_at(c, 0)), f64::from_bits(u64_at(c, 8))))
                .collect(),
        ),
    };
    GridFunction::new(shape, values)
}

pub fn fn_write(f: &GridFunction, path: impl AsRef<Path>) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_to(f, std::io::BufWriter::new(file))
}

pub fn fn_read(path: impl AsRef<Path>) -> Result<GridFunction> {
    read_from(std::io::BufReader::new(std::fs::File::open(path)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn shape() -> GridShape {
        GridShape::new(PrimeField::new(5).unwrap(), 1, 2).unwrap()
    }

    #[test]
    fn round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = shape();
        let q = GridFunction::from_fn_rational(s, |d| Rational::new(d[0] as i64 - 2, 1 + d[1] as i64));
        let fl = GridFunction::float(s, (0..s.len()).map(|_| rng.gen::<f64>()).collect()).unwrap();
        let cx = GridFunction::complex(
            s,
            (0..s.len())
                .map(|_| Complex64::new(rng.gen(), -rng.gen::<f64>()))
                .collect(),
        )
        .unwrap();
        for f in [q, fl, cx] {
            let mut buf = Vec::new();
            write_to(&f, &mut buf).unwrap();
            let back = read_from(&buf[..]).unwrap();
            assert_eq!(back, f);
            let mut again = Vec::new();
            write_to(&back, &mut again).unwrap();
            assert_eq!(again, buf);
        }
    }

    #[test]
    fn corrupt_inputs() {
        let f = GridFunction::constant(shape(), Rational::new(1, 3));
        let mut buf = Vec::new();
        write_to(&f, &mut buf).unwrap();
        assert!(matches!(read_from(&buf[..buf.len() - 3]), Err(Error::CorruptLength)));
        let mut bad = buf.clone();
        bad[0] = b'X';
        assert!(matches!(read_from(&bad[..]), Err(Error::BadMagic)));
        let mut ver = buf.clone();
        ver[4] = 7;
        assert!(matches!(read_from(&ver[..]), Err(Error::VersionMismatch(7))));
    }
}
