//! Binary world snapshots.
//!
//! Layout (little-endian):
//!
//! ```text
//! magic "SWCHSNAP" | u32 version
//! u32 len | world config as JSON
//! u8 dim | 3 x f64 extent | u8 boundary (0 toroidal, 1 open)
//! u64 step_count | u64 spawn_count | u64 collisions | u64 transmissions | u64 differentiations
//! u32 n_types   | n_types x (8 x f64)
//! u32 n_recipes | n_recipes x (u32 len | recipe text)
//! u32 n         | n x (3 x f64 position | 3 x f64 velocity | u32 type_id | u32 recipe index)
//! ```

use std::collections::HashMap;
use std::sync::Arc;

use thiserror::Error;

use super::{Counters, Particle, TypeRegistry, World, WorldConfig};
use crate::geometry::{Boundary, Space};
use crate::recipe::{parse_recipe, serialize_recipe, KineticParams, Recipe};

pub const SNAPSHOT_VERSION: u32 = 1;
const MAGIC: &[u8; 8] = b"SWCHSNAP";

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {0}")]
    Version(u32),
    #[error("snapshot truncated at byte {0}")]
    Truncated(usize),
    #[error("corrupt snapshot: {0}")]
    Corrupt(String),
}

struct Writer(Vec<u8>);

impl Writer {
    fn u8(&mut self, x: u8) {
        self.0.push(x);
    }
    fn u32(&mut self, x: u32) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn u64(&mut self, x: u64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn f64(&mut self, x: f64) {
        self.0.extend_from_slice(&x.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.u32(b.len() as u32);
        self.0.extend_from_slice(b);
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], SnapshotError> {
        if self.pos + n > self.buf.len() {
            return Err(SnapshotError::Truncated(self.buf.len()));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u8(&mut self) -> Result<u8, SnapshotError> {
        Ok(self.take(1)?[0])
    }
    fn u32(&mut self) -> Result<u32, SnapshotError> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
    fn u64(&mut self) -> Result<u64, SnapshotError> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn f64(&mut self) -> Result<f64, SnapshotError> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
    fn bytes(&mut self) -> Result<&'a [u8], SnapshotError> {
        let n = self.u32()? as usize;
        self.take(n)
    }
}

pub fn save_snapshot(world: &World) -> Vec<u8> {
    let mut w = Writer(Vec::with_capacity(64 + world.len() * 56));
    w.0.extend_from_slice(MAGIC);
    w.u32(SNAPSHOT_VERSION);
    let config = serde_json::to_vec(world.config()).expect("config serializes");
    w.bytes(&config);
    let space = world.space();
    w.u8(space.dim as u8);
    for k in 0..3 {
        w.f64(space.extent[k]);
    }
    w.u8(match space.boundary {
        Boundary::Toroidal => 0,
        Boundary::Open => 1,
    });
    let c = world.counters();
    w.u64(world.step_count());
    w.u64(world.spawn_count());
    w.u64(c.collisions);
    w.u64(c.transmissions);
    w.u64(c.differentiations);
    w.u32(world.types().len() as u32);
    for p in world.types().all() {
        for x in p.to_array() {
            w.f64(x);
        }
    }
    let mut table: HashMap<&Recipe, u32> = HashMap::new();
    let mut order: Vec<&Recipe> = Vec::new();
    let mut refs = Vec::with_capacity(world.len());
    for p in world.particles() {
        let next = order.len() as u32;
        let id = *table.entry(&p.recipe).or_insert_with(|| {
            order.push(&p.recipe);
            next
        });
        refs.push(id);
    }
    w.u32(order.len() as u32);
    for r in &order {
        w.bytes(serialize_recipe(r).as_bytes());
    }
    w.u32(world.len() as u32);
    for (p, rid) in world.particles().iter().zip(refs) {
        for k in 0..3 {
            w.f64(p.position[k]);
        }
        for k in 0..3 {
            w.f64(p.velocity[k]);
        }
        w.u32(p.type_id);
        w.u32(rid);
    }
    w.0
}

pub fn load_snapshot(bytes: &[u8]) -> Result<World, SnapshotError> {
    let mut r = Reader { buf: bytes, pos: 0 };
    if r.take(8).map_err(|_| SnapshotError::BadMagic)? != MAGIC {
        return Err(SnapshotError::BadMagic);
    }
    let version = r.u32()?;
    if version != SNAPSHOT_VERSION {
        return Err(SnapshotError::Version(version));
    }
    let config: WorldConfig =
        serde_json::from_slice(r.bytes()?).map_err(|e| SnapshotError::Corrupt(format!("config: {e}")))?;
    let dim = r.u8()? as usize;
    let extent = [r.f64()?, r.f64()?, r.f64()?];
    let boundary = match r.u8()? {
        0 => Boundary::Toroidal,
        1 => Boundary::Open,
        b => return Err(SnapshotError::Corrupt(format!("boundary tag {b}"))),
    };
    let space = Space::new(dim, extent, boundary);
    let step_count = r.u64()?;
    let spawn_count = r.u64()?;
    let counters = Counters { collisions: r.u64()?, transmissions: r.u64()?, differentiations: r.u64()? };
    let n_types = r.u32()? as usize;
    let mut types = TypeRegistry::default();
    for _ in 0..n_types {
        let mut v = [0.0; 8];
        for x in v.iter_mut() {
            *x = r.f64()?;
        }
        let p = KineticParams::clamped(v, &config.ranges);
        if p.to_array() != v {
            return Err(SnapshotError::Corrupt("non-canonical type parameters".into()));
        }
        types.intern(p);
    }
    let n_recipes = r.u32()? as usize;
    let mut recipes = Vec::with_capacity(n_recipes);
    for _ in 0..n_recipes {
        let text = std::str::from_utf8(r.bytes()?).map_err(|e| SnapshotError::Corrupt(e.to_string()))?;
        let recipe = parse_recipe(text).map_err(|e| SnapshotError::Corrupt(e.to_string()))?;
        recipes.push(Arc::new(recipe));
    }
    let n = r.u32()? as usize;
    let mut particles = Vec::with_capacity(n);
    for _ in 0..n {
        let position = [r.f64()?, r.f64()?, r.f64()?];
        let velocity = [r.f64()?, r.f64()?, r.f64()?];
        let type_id = r.u32()?;
        let rid = r.u32()? as usize;
        if type_id as usize >= types.len() || rid >= recipes.len() {
            return Err(SnapshotError::Corrupt("dangling type or recipe reference".into()));
        }
        particles.push(Particle {
            position,
            velocity,
            active: *types.get(type_id),
            type_id,
            recipe: Arc::clone(&recipes[rid]),
        });
    }
    if r.pos != bytes.len() {
        return Err(SnapshotError::Corrupt(format!("{} trailing bytes", bytes.len() - r.pos)));
    }
    Ok(World::from_parts(config, space, particles, types, step_count, spawn_count, counters))
}

/// 64-bit FNV-1a hash of the canonical snapshot bytes.
pub fn state_hash(world: &World) -> u64 {
    fnv1a(&save_snapshot(world))
}

pub fn fnv1a(bytes: &[u8]) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        h ^= b as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    }
    h
}
