//! Raw planar video readers and writers.
//!
//! Two containers are understood: headerless `.yuv` (geometry supplied by
//! the caller) and `.y4m` with its self-describing header. Only the luma
//! plane is kept; chroma is read past and discarded. 10-bit samples are
//! scaled by 1/4 into the 8-bit range so the fixed model constants apply
//! unchanged.

use std::fs;
use std::io::Write;
use std::path::Path;

use stevq_core::Plane;

use crate::error::{AppError, Result};

/// Pixel formats accepted for headerless input.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelFormat {
    /// Planar YUV 4:2:0, 8 bits per sample.
    Yuv420p8,
    /// Planar YUV 4:2:0, 10 bits in little-endian 16-bit words.
    Yuv420p10,
}

impl PixelFormat {
    pub fn id(self) -> &'static str {
        match self {
            PixelFormat::Yuv420p8 => "yuv420p8b",
            PixelFormat::Yuv420p10 => "yuv420p10b",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "yuv420p8b" => Some(PixelFormat::Yuv420p8),
            "yuv420p10b" => Some(PixelFormat::Yuv420p10),
            _ => None,
        }
    }

    fn bytes_per_sample(self) -> usize {
        match self {
            PixelFormat::Yuv420p8 => 1,
            PixelFormat::Yuv420p10 => 2,
        }
    }

    /// Byte footprint of one frame: luma plus two quarter-size chroma planes.
    pub fn frame_bytes(self, width: usize, height: usize) -> usize {
        let luma = width * height;
        let chroma = width.div_ceil(2) * height.div_ceil(2);
        (luma + 2 * chroma) * self.bytes_per_sample()
    }
}

/// All of one video's luma planes, in display order.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameSequence {
    pub frames: Vec<Plane>,
    pub frame_rate: f64,
    pub source_path: String,
}

impl FrameSequence {
    pub fn width(&self) -> usize {
        self.frames.first().map_or(0, Plane::width)
    }

    pub fn height(&self) -> usize {
        self.frames.first().map_or(0, Plane::height)
    }
}

fn check_geometry(path: &Path, width: usize, height: usize, fps: f64) -> Result<()> {
    if width < 64 || height < 64 {
        return Err(AppError::decode(
            path,
            format!("luma plane must be at least 64x64, got {width}x{height}"),
        ));
    }
    if !fps.is_finite() || fps <= 0.0 {
        return Err(AppError::decode(
            path,
            format!("frame rate must be positive, got {fps}"),
        ));
    }
    Ok(())
}

/// Decodes a headerless planar YUV file.
pub fn load_raw_video(
    path: &Path,
    format: PixelFormat,
    width: usize,
    height: usize,
    frame_rate: f64,
) -> Result<FrameSequence> {
    check_geometry(path, width, height, frame_rate)?;
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    let per_frame = format.frame_bytes(width, height);
    if bytes.is_empty() {
        return Err(AppError::decode(path, "file is empty"));
    }
    if bytes.len() % per_frame != 0 {
        return Err(AppError::decode(
            path,
            format!(
                "file size {} is not a multiple of the {per_frame}-byte frame footprint \
                 ({width}x{height} {})",
                bytes.len(),
                format.id()
            ),
        ));
    }
    let n_frames = bytes.len() / per_frame;
    let mut frames = Vec::with_capacity(n_frames);
    for f in 0..n_frames {
        let start = f * per_frame;
        frames.push(decode_luma(
            path,
            &bytes[start..start + per_frame],
            format,
            width,
            height,
        )?);
    }
    Ok(FrameSequence {
        frames,
        frame_rate,
        source_path: path.display().to_string(),
    })
}

fn decode_luma(
    path: &Path,
    frame: &[u8],
    format: PixelFormat,
    width: usize,
    height: usize,
) -> Result<Plane> {
    let n = width * height;
    let data: Vec<f64> = match format {
        PixelFormat::Yuv420p8 => frame[..n].iter().map(|&b| b as f64).collect(),
        PixelFormat::Yuv420p10 => {
            let mut out = Vec::with_capacity(n);
            for i in 0..n {
                let lo = frame[2 * i] as u16;
                let hi = frame[2 * i + 1] as u16;
                let code = lo | (hi << 8);
                if code > 1023 {
                    return Err(AppError::decode(
                        path,
                        format!("10-bit sample {code} out of range at index {i}"),
                    ));
                }
                out.push(code as f64 / 4.0);
            }
            out
        }
    };
    Plane::new(width, height, data).map_err(AppError::from)
}

/// Decodes a YUV4MPEG2 stream. `C420` and `C420mpeg2` color tags are
/// accepted (chroma siting does not affect the luma plane); anything else
/// is an unsupported format.
pub fn load_y4m(path: &Path) -> Result<FrameSequence> {
    let bytes = fs::read(path).map_err(|e| AppError::io(path, e))?;
    if bytes.is_empty() {
        return Err(AppError::decode(path, "file is empty"));
    }
    let header_end = bytes
        .iter()
        .position(|&b| b == b'\n')
        .ok_or_else(|| AppError::decode(path, "missing stream header terminator"))?;
    let header = std::str::from_utf8(&bytes[..header_end])
        .map_err(|_| AppError::decode(path, "stream header is not ASCII"))?;

    let mut parts = header.split(' ');
    if parts.next() != Some("YUV4MPEG2") {
        return Err(AppError::decode(path, "not a YUV4MPEG2 stream"));
    }
    let mut width = None;
    let mut height = None;
    let mut frame_rate = None;
    for token in parts {
        let (tag, value) = token.split_at(1);
        match tag {
            "W" => width = value.parse::<usize>().ok(),
            "H" => height = value.parse::<usize>().ok(),
            "F" => {
                let (num, den) = value
                    .split_once(':')
                    .ok_or_else(|| AppError::decode(path, format!("bad frame rate '{value}'")))?;
                let num: f64 = num
                    .parse()
                    .map_err(|_| AppError::decode(path, format!("bad frame rate '{value}'")))?;
                let den: f64 = den
                    .parse()
                    .map_err(|_| AppError::decode(path, format!("bad frame rate '{value}'")))?;
                if den <= 0.0 || num <= 0.0 {
                    return Err(AppError::decode(path, format!("bad frame rate '{value}'")));
                }
                frame_rate = Some(num / den);
            }
            "C" => {
                if value != "420" && value != "420mpeg2" {
                    return Err(AppError::Config(format!(
                        "unsupported y4m color space 'C{value}' in {} (C420/C420mpeg2 accepted)",
                        path.display()
                    )));
                }
            }
            "I" => {
                if value != "p" {
                    return Err(AppError::Config(format!(
                        "unsupported interlacing 'I{value}' in {}",
                        path.display()
                    )));
                }
            }
            // aspect ratio and extension parameters do not affect decoding
            "A" | "X" => {}
            _ => {
                return Err(AppError::decode(
                    path,
                    format!("unknown header token '{token}'"),
                ));
            }
        }
    }
    let width = width.ok_or_else(|| AppError::decode(path, "header missing width"))?;
    let height = height.ok_or_else(|| AppError::decode(path, "header missing height"))?;
    let frame_rate =
        frame_rate.ok_or_else(|| AppError::decode(path, "header missing frame rate"))?;
    check_geometry(path, width, height, frame_rate)?;

    let per_frame = PixelFormat::Yuv420p8.frame_bytes(width, height);
    let mut frames = Vec::new();
    let mut cursor = header_end + 1;
    while cursor < bytes.len() {
        let line_end = bytes[cursor..]
            .iter()
            .position(|&b| b == b'\n')
            .map(|p| cursor + p)
            .ok_or_else(|| {
                AppError::decode(path, format!("frame {} header unterminated", frames.len()))
            })?;
        let marker = &bytes[cursor..line_end];
        if !marker.starts_with(b"FRAME") {
            return Err(AppError::decode(
                path,
                format!("frame {} missing FRAME marker", frames.len()),
            ));
        }
        let payload_start = line_end + 1;
        let payload_end = payload_start + per_frame;
        if payload_end > bytes.len() {
            return Err(AppError::decode(
                path,
                format!(
                    "frame {} truncated: expected {per_frame} payload bytes, got {}",
                    frames.len(),
                    bytes.len() - payload_start
                ),
            ));
        }
        frames.push(decode_luma(
            path,
            &bytes[payload_start..payload_end],
            PixelFormat::Yuv420p8,
            width,
            height,
        )?);
        cursor = payload_end;
    }
    if frames.is_empty() {
        return Err(AppError::decode(path, "stream contains no frames"));
    }
    Ok(FrameSequence {
        frames,
        frame_rate,
        source_path: path.display().to_string(),
    })
}

/// Reads only the stream header and returns the frame rate; used by the
/// feature cache to avoid decoding any frame payload on a hit.
pub fn probe_y4m_frame_rate(path: &Path) -> Result<f64> {
    use std::io::{BufRead, BufReader, Read};
    let file = fs::File::open(path).map_err(|e| AppError::io(path, e))?;
    let mut header = Vec::new();
    BufReader::new(file)
        .take(4096)
        .read_until(b'\n', &mut header)
        .map_err(|e| AppError::io(path, e))?;
    if header.last() != Some(&b'\n') {
        return Err(AppError::decode(path, "missing stream header terminator"));
    }
    header.pop();
    let header = std::str::from_utf8(&header)
        .map_err(|_| AppError::decode(path, "stream header is not ASCII"))?;
    for token in header.split(' ').skip(1) {
        if let Some(value) = token.strip_prefix('F') {
            if let Some((num, den)) = value.split_once(':') {
                let num: f64 = num.parse().unwrap_or(0.0);
                let den: f64 = den.parse().unwrap_or(0.0);
                if num > 0.0 && den > 0.0 {
                    return Ok(num / den);
                }
            }
            return Err(AppError::decode(path, format!("bad frame rate '{value}'")));
        }
    }
    Err(AppError::decode(path, "header missing frame rate"))
}

/// Geometry for headerless input, from flags or a manifest row.
#[derive(Debug, Clone, Copy)]
pub struct RawGeometry {
    pub format: PixelFormat,
    pub width: usize,
    pub height: usize,
    pub frame_rate: f64,
}

/// Loads either container, dispatching on the `.y4m` extension.
pub fn load_video(path: &Path, raw: Option<RawGeometry>) -> Result<FrameSequence> {
    let is_y4m = path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("y4m"))
        .unwrap_or(false);
    if is_y4m {
        load_y4m(path)
    } else {
        let geometry = raw.ok_or_else(|| {
            AppError::Config(format!(
                "headerless input {} requires explicit pixel format, dimensions and frame rate",
                path.display()
            ))
        })?;
        load_raw_video(
            path,
            geometry.format,
            geometry.width,
            geometry.height,
            geometry.frame_rate,
        )
    }
}

fn luma_to_byte(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Writes frames as headerless 8-bit yuv420p with neutral chroma.
pub fn write_yuv420p8(path: &Path, frames: &[Plane]) -> Result<()> {
    let mut out = fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    for plane in frames {
        write_frame_payload(&mut out, plane).map_err(|e| AppError::io(path, e))?;
    }
    Ok(())
}

/// Writes frames as an 8-bit C420 y4m stream with neutral chroma.
pub fn write_y4m(path: &Path, frames: &[Plane], frame_rate: f64) -> Result<()> {
    let Some(first) = frames.first() else {
        return Err(AppError::Config(
            "cannot write an empty frame sequence".into(),
        ));
    };
    let (num, den) = if frame_rate.fract() == 0.0 {
        (frame_rate as u64, 1u64)
    } else {
        ((frame_rate * 1000.0).round() as u64, 1000u64)
    };
    let mut out = fs::File::create(path).map_err(|e| AppError::io(path, e))?;
    let header = format!(
        "YUV4MPEG2 W{} H{} F{}:{} Ip A1:1 C420\n",
        first.width(),
        first.height(),
        num,
        den
    );
    (|| -> std::io::Result<()> {
        out.write_all(header.as_bytes())?;
        for plane in frames {
            out.write_all(b"FRAME\n")?;
            write_frame_payload(&mut out, plane)?;
        }
        Ok(())
    })()
    .map_err(|e| AppError::io(path, e))
}

fn write_frame_payload(out: &mut impl Write, plane: &Plane) -> std::io::Result<()> {
    let luma: Vec<u8> = plane.data().iter().map(|&v| luma_to_byte(v)).collect();
    out.write_all(&luma)?;
    let chroma_len = plane.width().div_ceil(2) * plane.height().div_ceil(2);
    let gray = vec![128u8; chroma_len];
    out.write_all(&gray)?;
    out.write_all(&gray)
}
