//! Compact binary frames for streaming.
//!
//! Little-endian layout: `u32 step`, `u32 count`, then per particle `u16 x`,
//! `u16 y` (`u16 z` in 3D) and `u8 r, g, b`. Coordinates are quantized over
//! the world extent into 65536 bins and decode to bin centers, so the error
//! is at most half a bin.

use crate::engine::World;
use crate::geometry::Vector;
use crate::recipe::{KineticParams, ParamRanges};

/// Display color of a type: red, green and blue follow cohesion, alignment
/// and separation, each divided by its range maximum.
pub fn color_map(params: &KineticParams, ranges: &ParamRanges) -> [u8; 3] {
    let channel = |w: f64, max: f64| -> u8 {
        if max <= 0.0 {
            return 0;
        }
        ((w / max).clamp(0.0, 1.0) * 255.0).round() as u8
    };
    [
        channel(params.w_cohesion(), ranges.w_cohesion.max),
        channel(params.w_alignment(), ranges.w_alignment.max),
        channel(params.w_separation(), ranges.w_separation.max),
    ]
}

pub const QUANT_LEVELS: f64 = 65536.0;

pub fn quantize_axis(x: f64, extent: f64) -> u16 {
    ((x / extent * QUANT_LEVELS).floor().clamp(0.0, QUANT_LEVELS - 1.0)) as u16
}

pub fn dequantize_axis(q: u16, extent: f64) -> f64 {
    (q as f64 + 0.5) * extent / QUANT_LEVELS
}

pub fn frame_record_size(dim: usize, count: usize) -> usize {
    8 + count * (2 * dim + 3)
}

/// Encode the world's current state.
pub fn encode_frame(world: &World) -> Vec<u8> {
    let space = world.space();
    let dim = space.dim;
    let ranges = &world.config().ranges;
    let colors: Vec<[u8; 3]> = world.types().all().iter().map(|p| color_map(p, ranges)).collect();
    let mut out = Vec::with_capacity(frame_record_size(dim, world.len()));
    out.extend_from_slice(&(world.step_count() as u32).to_le_bytes());
    out.extend_from_slice(&(world.len() as u32).to_le_bytes());
    for p in world.particles() {
        for k in 0..dim {
            out.extend_from_slice(&quantize_axis(p.position[k], space.extent[k]).to_le_bytes());
        }
        out.extend_from_slice(&colors[p.type_id as usize]);
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedFrame {
    pub step: u32,
    pub positions: Vec<Vector>,
    pub colors: Vec<[u8; 3]>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("malformed frame: {0}")]
pub struct FrameError(pub String);

pub fn decode_frame(bytes: &[u8], dim: usize, extent: Vector) -> Result<DecodedFrame, FrameError> {
    if bytes.len() < 8 {
        return Err(FrameError(format!("{} bytes, header needs 8", bytes.len())));
    }
    let step = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
    let count = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    if bytes.len() != frame_record_size(dim, count) {
        return Err(FrameError(format!("{} bytes for {count} particles in {dim}D", bytes.len())));
    }
    let stride = 2 * dim + 3;
    let mut positions = Vec::with_capacity(count);
    let mut colors = Vec::with_capacity(count);
    for rec in bytes[8..].chunks_exact(stride) {
        let mut p = [0.0; 3];
        for k in 0..dim {
            p[k] = dequantize_axis(u16::from_le_bytes([rec[2 * k], rec[2 * k + 1]]), extent[k]);
        }
        positions.push(p);
        colors.push([rec[2 * dim], rec[2 * dim + 1], rec[2 * dim + 2]]);
    }
    Ok(DecodedFrame { step, positions, colors })
}
