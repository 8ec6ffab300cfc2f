//! Sparse triplet files shared by co-occurrence and matrix artifacts.
//!
//! Text layout: provenance block, one header line, then `row col value`
//! per line. The binary layout is little-endian:
//!
//! ```text
//! "CWB1" | u32 preamble_len | preamble (provenance + header, UTF-8)
//!        | u64 count | count x (u32 row, u32 col, f64 value)
//! ```

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};

use crate::config::{split_provenance, RunConfig};
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"CWB1";

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TripletFormat {
    #[default]
    Text,
    Binary,
}

impl TripletFormat {
    /// `.bin` selects the binary layout, anything else is text.
    pub fn for_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => TripletFormat::Binary,
            _ => TripletFormat::Text,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TripletFile {
    pub config: RunConfig,
    pub header: String,
    pub entries: Vec<(u32, u32, f64)>,
}

impl TripletFile {
    pub fn header_fields(&self) -> Vec<&str> {
        self.header.split_whitespace().collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = self.config.to_header();
        out.push_str(&self.header);
        out.push('\n');
        for &(r, c, v) in &self.entries {
            out.push_str(&format!("{r} {c} {v}\n"));
        }
        out
    }

    pub fn parse_text(text: &str, origin: &str) -> Result<Self> {
        let (config, lines) = split_provenance(text);
        let mut lines = lines.into_iter();
        let (_, header) = lines
            .next()
            .ok_or_else(|| Error::parse(origin, 1, "missing header line"))?;
        let mut entries = Vec::new();
        for (no, line) in lines {
            if line.trim().is_empty() {
                continue;
            }
            entries.push(
                parse_triplet(line)
                    .ok_or_else(|| Error::parse(origin, no, format!("expected `row col value`, got `{line}`")))?,
            );
        }
        Ok(TripletFile {
            config,
            header: header.trim().to_string(),
            entries,
        })
    }

    pub fn write_binary<W: Write>(&self, mut w: W) -> Result<()> {
        let mut preamble = self.config.to_header();
        preamble.push_str(&self.header);
        w.write_all(MAGIC)?;
        w.write_u32::<LittleEndian>(preamble.len() as u32)?;
        w.write_all(preamble.as_bytes())?;
        w.write_u64::<LittleEndian>(self.entries.len() as u64)?;
        for &(r, c, v) in &self.entries {
            w.write_u32::<LittleEndian>(r)?;
            w.write_u32::<LittleEndian>(c)?;
            w.write_f64::<LittleEndian>(v)?;
        }
        Ok(())
    }

    pub fn read_binary<R: Read>(mut r: R, origin: &str) -> Result<Self> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != MAGIC {
            return Err(Error::parse(origin, 0, "bad magic"));
        }
        let len = r.read_u32::<LittleEndian>()? as usize;
        let mut preamble = vec![0u8; len];
        r.read_exact(&mut preamble)?;
        let preamble = String::from_utf8(preamble).map_err(|_| Error::parse(origin, 0, "preamble is not UTF-8"))?;
        let (config, lines) = split_provenance(&preamble);
        let header = lines
            .first()
            .map(|(_, h)| h.trim().to_string())
            .ok_or_else(|| Error::parse(origin, 0, "missing header"))?;
        let count = r.read_u64::<LittleEndian>()? as usize;
        let mut entries = Vec::with_capacity(count.min(1 << 24));
        for _ in 0..count {
            let row = r.read_u32::<LittleEndian>()?;
            let col = r.read_u32::<LittleEndian>()?;
            let v = r.read_f64::<LittleEndian>()?;
            entries.push((row, col, v));
        }
        Ok(TripletFile {
            config,
            header,
            entries,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = BufWriter::new(File::create(path)?);
        match TripletFormat::for_path(path) {
            TripletFormat::Binary => self.write_binary(file),
            TripletFormat::Text => {
                let mut file = file;
                file.write_all(self.to_text().as_bytes())?;
                file.flush()?;
                Ok(())
            }
        }
    }

    /// Load either layout; the binary one is recognized by its magic bytes.
    pub fn load(path: &Path) -> Result<Self> {
        let origin = path.display().to_string();
        let mut bytes = Vec::new();
        BufReader::new(File::open(path)?).read_to_end(&mut bytes)?;
        if bytes.starts_with(MAGIC) {
            Self::read_binary(bytes.as_slice(), &origin)
        } else {
            let text =
                String::from_utf8(bytes).map_err(|_| Error::parse(&origin, 0, "file is neither CWB1 nor UTF-8"))?;
            Self::parse_text(&text, &origin)
        }
    }
}

fn parse_triplet(line: &str) -> Option<(u32, u32, f64)> {
    let mut it = line.split_whitespace();
    let r = it.next()?.parse().ok()?;
    let c = it.next()?.parse().ok()?;
    let v = it.next()?.parse().ok()?;
    it.next().is_none().then_some((r, c, v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn sample() -> TripletFile {
        let mut config = RunConfig::new();
        config.set("command", "count");
        TripletFile {
            config,
            header: "3 6".into(),
            entries: vec![(0, 1, 3.0), (1, 0, 0.1 + 0.2)],
        }
    }

    #[test]
    fn text_layout() {
        assert_eq!(
            sample().to_text(),
            "# command=count\n3 6\n0 1 3\n1 0 0.30000000000000004\n"
        );
    }

    #[test]
    fn rejects_bad_lines() {
        let err = TripletFile::parse_text("2 2\n0 1\n", "m.txt").unwrap_err();
        assert!(err.to_string().starts_with("m.txt:2:"));
        assert!(TripletFile::parse_text("", "e").is_err());
    }

    #[test]
    fn binary_magic_checked() {
        let mut buf = Vec::new();
        sample().write_binary(&mut buf).unwrap();
        assert_eq!(&buf[..4], b"CWB1");
        buf[0] = b'X';
        assert!(TripletFile::read_binary(buf.as_slice(), "b").is_err());
    }

    proptest! {
        #[test]
        fn both_layouts_round_trip(entries in prop::collection::vec((0u32..50, 0u32..50, -1e6f64..1e6), 0..40)) {
            let file = TripletFile { entries, ..sample() };
            prop_assert_eq!(&TripletFile::parse_text(&file.to_text(), "t").unwrap(), &file);
            let mut buf = Vec::new();
            file.write_binary(&mut buf).unwrap();
            prop_assert_eq!(&TripletFile::read_binary(buf.as_slice(), "b").unwrap(), &file);
        }
    }
}
