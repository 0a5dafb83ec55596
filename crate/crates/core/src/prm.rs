//! Poisson random measures on (0,T] × Y × (0,Λ_y], generated from counters.
//!
//! A stream is one homogeneous Poisson process of total rate Σ_y ρ(y)Λ_y.
//! Each point carries a mark y chosen with probability ∝ ρ(y)Λ_y and a level
//! z uniform on (0, Λ_y]; restricted to one mark this is exactly a Poisson
//! process of rate ρ(y)Λ_y with i.i.d. uniform levels. Event k depends only on
//! (seed, id, k), so the same stream can be replayed by any number of coupled
//! systems.

use std::io::Write;

use crate::error::{Error, Result};
use crate::model::ModelSpec;
use crate::rng::{categorical, key, unit, word};

/// Which Poisson random measure a stream realizes. Indices are 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StreamId {
    Node(usize),
    /// Directed edge i → j.
    Edge(usize, usize),
}

impl StreamId {
    pub fn key(self, seed: u64) -> u64 {
        match self {
            StreamId::Node(i) => key(seed, &[1, i as u64]),
            StreamId::Edge(i, j) => key(seed, &[2, i as u64, j as u64]),
        }
    }
}

/// Reserved counters for initial-state draws; event counters never reach them.
const INIT_SLOT: u64 = u64::MAX;

/// Per-mark intensities and ceilings shared by every stream of one kind.
#[derive(Debug, Clone, PartialEq)]
pub struct StreamShape {
    rho: Vec<f64>,
    ceiling: Vec<f64>,
    cum: Vec<f64>,
    inv_rho: Vec<f64>,
    total: f64,
    inv_total: f64,
}

impl StreamShape {
    pub fn new(rho: Vec<f64>, ceiling: Vec<f64>) -> Result<Self> {
        if rho.len() != ceiling.len() {
            return Err(Error::InvalidArgument("rho and ceiling lengths differ".into()));
        }
        if ceiling.iter().any(|&c| !(c >= 0.0 && c.is_finite())) || rho.iter().any(|&r| !(r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument("ceilings must be finite and ≥ 0, rho > 0".into()));
        }
        let mut cum = Vec::with_capacity(rho.len());
        let mut total = 0.0;
        for (r, c) in rho.iter().zip(&ceiling) {
            total += r * c;
            cum.push(total);
        }
        let inv_rho = rho.iter().map(|r| 1.0 / r).collect();
        let inv_total = if total > 0.0 { 1.0 / total } else { f64::INFINITY };
        Ok(StreamShape { rho, ceiling, cum, inv_rho, total, inv_total })
    }

    /// Node streams: Λ_y is the per-mark maximum of γ.
    pub fn node(spec: &ModelSpec) -> Self {
        StreamShape::new(spec.rho().to_vec(), spec.node_ceiling()).expect("validated model")
    }

    /// Edge streams: Λ_y = β_max · max Γ̃(y, ·).
    pub fn edge(spec: &ModelSpec, beta_max: f64) -> Self {
        let ceiling = spec.edge_ceiling_unit().iter().map(|c| c * beta_max).collect();
        StreamShape::new(spec.rho().to_vec(), ceiling).expect("validated model")
    }

    pub fn ceiling(&self) -> &[f64] {
        &self.ceiling
    }

    pub fn rho(&self) -> &[f64] {
        &self.rho
    }

    /// Σ_y ρ(y) Λ_y.
    pub fn total_rate(&self) -> f64 {
        self.total
    }

    /// Gap and (mark index, level) of event `k` of the stream with key `key`.
    /// Returns `None` when the stream has zero intensity.
    #[inline]
    pub fn event(&self, key: u64, k: u64) -> Option<(f64, usize, f64)> {
        if self.total <= 0.0 {
            return None;
        }
        let (y, z) = self.mark_level(key, k);
        Some((self.gap(key, k), y, z))
    }

    /// Waiting time before event `k` (requires positive total rate).
    #[inline(always)]
    pub fn gap(&self, key: u64, k: u64) -> f64 {
        -unit(word(key, 2 * k)).ln() * self.inv_total
    }

    /// Mark index and level of event `k` (requires positive total rate).
    #[inline(always)]
    pub fn mark_level(&self, key: u64, k: u64) -> (usize, f64) {
        let v = unit(word(key, 2 * k + 1)) * self.total;
        // branch-free search: marks are few and the choice is unpredictable
        let cum = &self.cum[..];
        let mut y = 0;
        for &c in &cum[..cum.len() - 1] {
            y += (v > c) as usize;
        }
        let below = if y == 0 { 0.0 } else { cum[y - 1] };
        (y, ((v - below) * self.inv_rho[y]).min(self.ceiling[y]))
    }
}

/// Read position in a stream: the next ordinal and the time of the last event read.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Cursor {
    pub k: u64,
    pub t: f64,
}

impl Cursor {
    /// Advances to the next event and returns (s, mark index, z).
    #[inline]
    pub fn advance(&mut self, shape: &StreamShape, key: u64) -> Option<(f64, usize, f64)> {
        let (gap, y, z) = shape.event(key, self.k)?;
        self.k += 1;
        self.t += gap;
        Some((self.t, y, z))
    }
}

/// One candidate point (s, y, z); `mark` is the index into the jump marks.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PrmEvent {
    pub s: f64,
    pub mark: usize,
    pub z: f64,
}

/// A seeded stream bound to its id, horizon and shape.
#[derive(Debug, Clone, PartialEq)]
pub struct PrmStream {
    id: StreamId,
    seed: u64,
    key: u64,
    horizon: f64,
    shape: StreamShape,
}

impl PrmStream {
    pub fn new(id: StreamId, seed: u64, horizon: f64, shape: StreamShape) -> Self {
        PrmStream { id, seed, key: id.key(seed), horizon, shape }
    }

    pub fn id(&self) -> StreamId {
        self.id
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn key(&self) -> u64 {
        self.key
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn shape(&self) -> &StreamShape {
        &self.shape
    }

    /// All events with s ∈ (t0, t1], in time order.
    pub fn events_between(&self, t0: f64, t1: f64) -> Result<Vec<PrmEvent>> {
        if !(0.0 <= t0 && t0 <= t1 && t1 <= self.horizon) {
            return Err(Error::OutOfRange { t0, t1, horizon: self.horizon });
        }
        let mut out = Vec::new();
        let mut cur = Cursor::default();
        while let Some((s, mark, z)) = cur.advance(&self.shape, self.key) {
            if s > t1 {
                break;
            }
            if s > t0 {
                out.push(PrmEvent { s, mark, z });
            }
        }
        Ok(out)
    }

    /// Accept iff z ≤ rate; a rate above the stream ceiling is a kernel/ceiling mismatch.
    pub fn thin(&self, event: &PrmEvent, rate: f64, marks: &[i64]) -> Result<bool> {
        thin(&self.shape, event, rate).map_err(|e| match e {
            Error::CeilingExceeded { rate, ceiling, .. } => {
                Error::CeilingExceeded { rate, ceiling, mark: marks.get(event.mark).copied().unwrap_or(event.mark as i64) }
            }
            other => other,
        })
    }

    /// Initial state drawn from `law` on this stream's reserved counter.
    pub fn initial(&self, law: &[f64]) -> usize {
        initial_state(self.key, law)
    }

    /// Little-endian dump: `PRM1`, kind (u8), i, j (u64), seed (u64), T (f64),
    /// mark count (u32), ceilings (f64 each), event count (u64), then
    /// records of s (f64), y (i32), z (f64).
    pub fn write_binary<W: Write>(&self, marks: &[i64], mut w: W) -> Result<()> {
        let events = self.events_between(0.0, self.horizon)?;
        let (kind, i, j) = match self.id {
            StreamId::Node(i) => (0u8, i as u64, 0u64),
            StreamId::Edge(i, j) => (1u8, i as u64, j as u64),
        };
        w.write_all(b"PRM1")?;
        w.write_all(&[kind])?;
        w.write_all(&i.to_le_bytes())?;
        w.write_all(&j.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        w.write_all(&self.horizon.to_le_bytes())?;
        w.write_all(&(self.shape.ceiling.len() as u32).to_le_bytes())?;
        for c in &self.shape.ceiling {
            w.write_all(&c.to_le_bytes())?;
        }
        w.write_all(&(events.len() as u64).to_le_bytes())?;
        for e in &events {
            w.write_all(&e.s.to_le_bytes())?;
            w.write_all(&(marks[e.mark] as i32).to_le_bytes())?;
            w.write_all(&e.z.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Thinning test against a band of the given shape.
#[inline]
pub fn thin(shape: &StreamShape, event: &PrmEvent, rate: f64) -> Result<bool> {
    let ceiling = shape.ceiling[event.mark];
    if rate > ceiling * (1.0 + 1e-12) + 1e-300 {
        return Err(Error::CeilingExceeded { rate, ceiling, mark: event.mark as i64 });
    }
    Ok(event.z <= rate)
}

/// Initial-state draw on a stream key, shared by every system reading that stream.
#[inline]
pub fn initial_state(key: u64, law: &[f64]) -> usize {
    categorical(law, unit(word(key, INIT_SLOT)))
}
