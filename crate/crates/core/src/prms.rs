//! Compact binary mid-series files.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "PRMS"                 4 bytes magic
//! version                u16 (currently 1)
//! repeated until EOF:
//!   day                  u32, days since 1970-01-01
//!   count                u64
//!   mids                 count x f64
//! ```

use std::fs::File;
use std::io::{self, BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::series::MidSeries;

pub const MAGIC: &[u8; 4] = b"PRMS";
pub const VERSION: u16 = 1;

#[derive(Debug, thiserror::Error)]
pub enum PrmsError {
    #[error("i/o error: {0}")]
    Io(#[from] io::Error),
    #[error("bad magic, not a mid-series file")]
    BadMagic,
    #[error("unsupported version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated session block at session {0}")]
    Truncated(usize),
    #[error("invalid series: {0}")]
    Invalid(#[from] crate::series::SeriesError),
}

pub fn write_series<W: Write>(mut w: W, series: &MidSeries) -> io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    for s in &series.sessions {
        w.write_all(&s.day.to_le_bytes())?;
        w.write_all(&(s.len() as u64).to_le_bytes())?;
        for m in series.session_prices(s) {
            w.write_all(&m.to_le_bytes())?;
        }
    }
    w.flush()
}

pub fn read_series<R: Read>(mut r: R) -> Result<MidSeries, PrmsError> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|_| PrmsError::BadMagic)?;
    if &magic != MAGIC {
        return Err(PrmsError::BadMagic);
    }
    let mut v = [0u8; 2];
    r.read_exact(&mut v)?;
    let version = u16::from_le_bytes(v);
    if version != VERSION {
        return Err(PrmsError::UnsupportedVersion(version));
    }

    let mut series = MidSeries::new();
    let mut index = 0;
    loop {
        let mut day = [0u8; 4];
        match read_full_or_eof(&mut r, &mut day)? {
            0 => break,
            4 => {}
            _ => return Err(PrmsError::Truncated(index)),
        }
        let mut count = [0u8; 8];
        r.read_exact(&mut count).map_err(|_| PrmsError::Truncated(index))?;
        let count = u64::from_le_bytes(count) as usize;
        let mut buf = vec![0u8; count * 8];
        r.read_exact(&mut buf).map_err(|_| PrmsError::Truncated(index))?;
        let prices: Vec<f64> = buf
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
            .collect();
        series.push_session(u32::from_le_bytes(day), &prices);
        index += 1;
    }
    series.validate()?;
    Ok(series)
}

fn read_full_or_eof<R: Read>(r: &mut R, buf: &mut [u8]) -> io::Result<usize> {
    let mut filled = 0;
    while filled < buf.len() {
        match r.read(&mut buf[filled..]) {
            Ok(0) => break,
            Ok(n) => filled += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e),
        }
    }
    Ok(filled)
}

pub fn save(path: impl AsRef<Path>, series: &MidSeries) -> io::Result<()> {
    write_series(BufWriter::new(File::create(path)?), series)
}

pub fn load(path: impl AsRef<Path>) -> Result<MidSeries, PrmsError> {
    read_series(BufReader::new(File::open(path)?))
}
