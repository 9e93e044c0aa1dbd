//! Binary graph cache.
//!
//! Layout (little-endian): magic `RFNG`, format version `u32`, node count and
//! edge count as `u64`, then for the out- and in-adjacency in turn:
//! `n + 1` offsets (`u64`), `m` neighbour ids (`u32`), `m` weights (`u64`).
//! Then the NPI table (`n` × `u64`) and state labels (`n` × 2 bytes, `00`
//! for unlabelled).

use super::{PhysicianRegistry, RefGraph};
use crate::ingest::Npi;
use crate::states::StateCode;
use std::io::{self, BufReader, BufWriter, Read, Write};

pub const CACHE_VERSION: u32 = 1;
const MAGIC: &[u8; 4] = b"RFNG";

#[derive(Debug, thiserror::Error)]
pub enum CacheError {
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("not a graph cache")]
    BadMagic,
    #[error("graph cache version {0} is not supported (expected {CACHE_VERSION})")]
    Version(u32),
    #[error("corrupt graph cache: {0}")]
    Corrupt(String),
}

pub fn write_graph_cache<W: Write>(graph: &RefGraph, registry: &PhysicianRegistry, out: W) -> io::Result<()> {
    let mut w = BufWriter::with_capacity(1 << 20, out);
    w.write_all(MAGIC)?;
    w.write_all(&CACHE_VERSION.to_le_bytes())?;
    w.write_all(&(graph.node_count() as u64).to_le_bytes())?;
    w.write_all(&(graph.edge_count() as u64).to_le_bytes())?;
    for (offsets, ids, weights) in graph.raw_parts() {
        for &o in offsets {
            w.write_all(&(o as u64).to_le_bytes())?;
        }
        for &i in ids {
            w.write_all(&i.to_le_bytes())?;
        }
        for &x in weights {
            w.write_all(&x.to_le_bytes())?;
        }
    }
    for npi in registry.npis() {
        w.write_all(&npi.value().to_le_bytes())?;
    }
    for s in registry.states() {
        w.write_all(&s.map(|s| s.bytes()).unwrap_or([0, 0]))?;
    }
    w.flush()
}

fn read_u64s<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<u64>> {
    let mut buf = vec![0u8; n * 8];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(8).map(|c| u64::from_le_bytes(c.try_into().unwrap())).collect())
}

fn read_u32s<R: Read>(r: &mut R, n: usize) -> io::Result<Vec<u32>> {
    let mut buf = vec![0u8; n * 4];
    r.read_exact(&mut buf)?;
    Ok(buf.chunks_exact(4).map(|c| u32::from_le_bytes(c.try_into().unwrap())).collect())
}

pub fn read_graph_cache<R: Read>(input: R) -> Result<(RefGraph, PhysicianRegistry), CacheError> {
    let mut r = BufReader::with_capacity(1 << 20, input);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(CacheError::BadMagic);
    }
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let version = u32::from_le_bytes(b4);
    if version != CACHE_VERSION {
        return Err(CacheError::Version(version));
    }
    let header = read_u64s(&mut r, 2)?;
    let (n, m) = (header[0] as usize, header[1] as usize);
    let mut halves = Vec::new();
    for _ in 0..2 {
        let offsets: Vec<usize> = read_u64s(&mut r, n + 1)?.into_iter().map(|o| o as usize).collect();
        let ids = read_u32s(&mut r, m)?;
        let weights = read_u64s(&mut r, m)?;
        if offsets.first() != Some(&0) || offsets.last() != Some(&m) || offsets.windows(2).any(|w| w[0] > w[1]) {
            return Err(CacheError::Corrupt("offsets".into()));
        }
        if ids.iter().any(|&i| i as usize >= n) {
            return Err(CacheError::Corrupt("neighbour id out of range".into()));
        }
        halves.push((offsets, ids, weights));
    }
    let npis = read_u64s(&mut r, n)?
        .into_iter()
        .map(|v| Npi::from_value(v).ok_or_else(|| CacheError::Corrupt(format!("npi {v}"))))
        .collect::<Result<Vec<_>, _>>()?;
    let mut states = Vec::with_capacity(n);
    let mut buf = vec![0u8; n * 2];
    r.read_exact(&mut buf)?;
    for c in buf.chunks_exact(2) {
        if c == [0, 0] {
            states.push(None);
        } else {
            let s = StateCode::from_bytes([c[0], c[1]]).map_err(|e| CacheError::Corrupt(e.to_string()))?;
            states.push(Some(s));
        }
    }
    let (i, o) = (halves.pop().unwrap(), halves.pop().unwrap());
    let graph = RefGraph::from_raw_parts(o.0, o.1, o.2, i.0, i.1, i.2);
    graph.check_invariants().map_err(CacheError::Corrupt)?;
    Ok((graph, PhysicianRegistry::with_states(npis, states)))
}
