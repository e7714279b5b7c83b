//! Map images: binary PGM and ASCII.
//!
//! Both formats start from one byte per cell, `round(p * 255)`, where `p` is
//! the occupancy probability or the classified object value. ASCII bins that
//! byte into five glyphs, `RAMP[byte * 5 / 256]`, so the two formats agree
//! cell for cell.
//!
//! The combined overlay marks cells with fixed glyph/byte pairs, listed in
//! [`OVERLAY`] in priority order.

use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use crate::explorer::{detect_frontiers, ExplorationResult};
use crate::mapping::Label;
use crate::world::GridGeometry;

pub const RAMP: [char; 5] = ['.', ',', '?', '+', '#'];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mark {
    Target,
    Object,
    Frontier,
    Occupied,
    Free,
    Unknown,
}

/// Overlay glyph and PGM byte per mark, highest priority first.
pub const OVERLAY: [(Mark, char, u8); 6] = [
    (Mark::Target, 'T', 32),
    (Mark::Object, 'O', 64),
    (Mark::Frontier, 'F', 192),
    (Mark::Occupied, '#', 0),
    (Mark::Free, '.', 255),
    (Mark::Unknown, '?', 128),
];

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RenderError {
    #[error("unsupported render format {0:?}; expected ascii or pgm")]
    Format(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Ascii,
    Pgm,
}

impl FromStr for Format {
    type Err = RenderError;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "ascii" => Ok(Format::Ascii),
            "pgm" => Ok(Format::Pgm),
            other => Err(RenderError::Format(other.to_string())),
        }
    }
}

impl Format {
    pub fn extension(&self) -> &'static str {
        match self {
            Format::Ascii => "txt",
            Format::Pgm => "pgm",
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Ascii => "ascii",
            Format::Pgm => "pgm",
        })
    }
}

pub fn probability_byte(p: f64) -> u8 {
    (p.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn ramp_glyph(byte: u8) -> char {
    RAMP[byte as usize * RAMP.len() / 256]
}

fn overlay_pair(mark: Mark) -> (char, u8) {
    OVERLAY
        .iter()
        .find(|(m, _, _)| *m == mark)
        .map(|&(_, g, b)| (g, b))
        .expect("every mark has an overlay entry")
}

pub fn overlay_byte_to_glyph(byte: u8) -> Option<char> {
    OVERLAY.iter().find(|(_, _, b)| *b == byte).map(|&(_, g, _)| g)
}

/// Per-cell overlay marks of a finished run.
pub fn overlay_marks(result: &ExplorationResult) -> Vec<Mark> {
    let occ = &result.occupancy;
    let obj = &result.object;
    let geom = *occ.geometry();
    let mut marks: Vec<Mark> = occ
        .labels()
        .into_iter()
        .map(|l| match l {
            Label::Free => Mark::Free,
            Label::Occupied => Mark::Occupied,
            Label::Unknown => Mark::Unknown,
        })
        .collect();
    for f in detect_frontiers(occ) {
        marks[geom.index(f)] = Mark::Frontier;
    }
    for c in geom.cells() {
        if obj.value(c) > obj.params.lambda2 {
            marks[geom.index(c)] = Mark::Object;
        }
    }
    if let Some(t) = result.target_estimate {
        marks[geom.index(t)] = Mark::Target;
    }
    marks
}

/// Rendered occupancy, object and combined images for one run.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RenderedMaps {
    pub format: Format,
    pub occupancy: Vec<u8>,
    pub object: Vec<u8>,
    pub combined: Vec<u8>,
}

impl RenderedMaps {
    /// `(name, bytes)` for each artifact, e.g. `("occupancy.pgm", ...)`.
    pub fn artifacts(&self) -> [(String, &[u8]); 3] {
        let ext = self.format.extension();
        [
            (format!("occupancy.{ext}"), &self.occupancy),
            (format!("object.{ext}"), &self.object),
            (format!("combined.{ext}"), &self.combined),
        ]
    }
}

pub fn pgm(geom: &GridGeometry, bytes: &[u8]) -> Vec<u8> {
    let mut out = format!("P5\n{} {}\n255\n", geom.width, geom.height).into_bytes();
    out.extend_from_slice(bytes);
    out
}

fn ascii(geom: &GridGeometry, glyphs: impl Iterator<Item = char>) -> Vec<u8> {
    let mut out = String::with_capacity(geom.len() + geom.height);
    for (i, g) in glyphs.enumerate() {
        out.push(g);
        if (i + 1) % geom.width == 0 {
            out.push('\n');
        }
    }
    out.into_bytes()
}

pub fn render_maps(result: &ExplorationResult, format: &str) -> Result<RenderedMaps, RenderError> {
    let format: Format = format.parse()?;
    let geom = *result.occupancy.geometry();
    let occ: Vec<u8> = result
        .occupancy
        .grid
        .probabilities()
        .into_iter()
        .map(probability_byte)
        .collect();
    let obj: Vec<u8> = result.object.values().into_iter().map(probability_byte).collect();
    let marks = overlay_marks(result);
    Ok(match format {
        Format::Pgm => RenderedMaps {
            format,
            occupancy: pgm(&geom, &occ),
            object: pgm(&geom, &obj),
            combined: pgm(
                &geom,
                &marks.iter().map(|&m| overlay_pair(m).1).collect::<Vec<_>>(),
            ),
        },
        Format::Ascii => RenderedMaps {
            format,
            occupancy: ascii(&geom, occ.iter().map(|&b| ramp_glyph(b))),
            object: ascii(&geom, obj.iter().map(|&b| ramp_glyph(b))),
            combined: ascii(&geom, marks.iter().map(|&m| overlay_pair(m).0)),
        },
    })
}

/// Splits a P5 image into its geometry and pixel bytes.
pub fn parse_pgm(bytes: &[u8]) -> Option<(usize, usize, &[u8])> {
    let mut fields = Vec::new();
    let mut i = 0;
    while fields.len() < 4 {
        while i < bytes.len() && bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        let start = i;
        while i < bytes.len() && !bytes[i].is_ascii_whitespace() {
            i += 1;
        }
        if start == i {
            return None;
        }
        fields.push(std::str::from_utf8(&bytes[start..i]).ok()?);
    }
    if fields[0] != "P5" || fields[3] != "255" {
        return None;
    }
    let w: usize = fields[1].parse().ok()?;
    let h: usize = fields[2].parse().ok()?;
    let data = bytes.get(i + 1..)?;
    (data.len() == w * h).then_some((w, h, data))
}
