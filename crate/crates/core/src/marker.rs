use crate::element::ElementId;
use crate::error::{Error, Result};
use crate::kb::KnowledgeBase;
use crate::scalar::Scalar;

pub const DEFAULT_MARKER_PAIRS: usize = 14;
/// Bit 0 is the context marker, so 63 pairs fill a `u128`.
pub const MAX_MARKER_PAIRS: usize = 63;

pub(crate) const CONTEXT_BIT: u32 = 0;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub(crate) struct MarkerBits(u128);

impl MarkerBits {
    pub(crate) fn has(self, bit: u32) -> bool {
        self.0 & (1u128 << bit) != 0
    }

    pub(crate) fn set(&mut self, bit: u32) {
        self.0 |= 1u128 << bit;
    }

    pub(crate) fn clear(&mut self, bit: u32) {
        self.0 &= !(1u128 << bit);
    }
}

/// An allocated marker: a primary bit plus its cancel companion.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Marker {
    pair: u8,
}

impl Marker {
    pub fn bit_index(self) -> u32 {
        1 + 2 * self.pair as u32
    }

    /// The paired cancel bit. Scans use it for the set of blocked superiors.
    pub fn cancel_index(self) -> u32 {
        2 + 2 * self.pair as u32
    }
}

/// Fixed pool of marker pairs. Lower pairs are handed out first.
#[derive(Clone, Debug)]
pub struct MarkerPool {
    capacity: usize,
    free: Vec<u8>,
    /// Elements that received each bit since it was last cleared, in marking
    /// order. May contain elements whose bit was later cleared.
    marked: Vec<Vec<ElementId>>,
}

impl MarkerPool {
    pub fn new(capacity: usize) -> Result<Self> {
        if capacity == 0 || capacity > MAX_MARKER_PAIRS {
            return Err(Error::InvalidMarkerPairs(capacity, MAX_MARKER_PAIRS));
        }
        Ok(MarkerPool {
            capacity,
            free: (0..capacity as u8).rev().collect(),
            marked: vec![Vec::new(); 1 + 2 * capacity],
        })
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn available(&self) -> usize {
        self.free.len()
    }

    fn alloc(&mut self) -> Result<Marker> {
        match self.free.pop() {
            Some(pair) => Ok(Marker { pair }),
            None => Err(Error::PoolExhausted(self.capacity)),
        }
    }

    fn release(&mut self, m: Marker) {
        debug_assert!(!self.free.contains(&m.pair), "double free of marker");
        self.free.push(m.pair);
        // keep lowest pair on top so allocation order is stable
        self.free.sort_unstable_by(|a, b| b.cmp(a));
    }
}

impl<N: Scalar> KnowledgeBase<N> {
    pub fn alloc_marker_pair(&mut self) -> Result<Marker> {
        let m = self.pool.alloc()?;
        self.stats.marker_allocations += 1;
        Ok(m)
    }

    /// Returns the pair to the pool after clearing both of its bits everywhere.
    pub fn free_marker(&mut self, m: Marker) {
        self.clear_bit(m.bit_index());
        self.clear_bit(m.cancel_index());
        self.pool.release(m);
    }

    pub fn marker_capacity(&self) -> usize {
        self.pool.capacity()
    }

    pub fn markers_available(&self) -> usize {
        self.pool.available()
    }

    pub fn is_marked(&self, e: ElementId, m: Marker) -> bool {
        self.elements[e.index()].markers.has(m.bit_index())
    }

    /// Elements carrying `m`, in the order they were marked.
    pub fn marked_elements(&self, m: Marker) -> Vec<ElementId> {
        self.bit_members(m.bit_index())
    }

    pub(crate) fn bit_members(&self, bit: u32) -> Vec<ElementId> {
        let mut out = Vec::new();
        for &e in &self.pool.marked[bit as usize] {
            let bits = &self.elements[e.index()].markers;
            if bits.has(bit) && !out.contains(&e) {
                out.push(e);
            }
        }
        out
    }

    pub(crate) fn has_bit(&self, e: ElementId, bit: u32) -> bool {
        self.elements[e.index()].markers.has(bit)
    }

    /// Sets `bit` on `e`; returns false if it was already set.
    pub(crate) fn set_bit(&mut self, e: ElementId, bit: u32) -> bool {
        let bits = &mut self.elements[e.index()].markers;
        if bits.has(bit) {
            return false;
        }
        bits.set(bit);
        self.pool.marked[bit as usize].push(e);
        true
    }

    pub(crate) fn unset_bit(&mut self, e: ElementId, bit: u32) {
        self.elements[e.index()].markers.clear(bit);
    }

    pub(crate) fn clear_bit(&mut self, bit: u32) {
        let list = std::mem::take(&mut self.pool.marked[bit as usize]);
        for e in list {
            self.elements[e.index()].markers.clear(bit);
        }
    }

    /// Runs `f` with a freshly allocated pair and frees it afterwards, on
    /// success and on error alike.
    pub(crate) fn with_marker<T>(
        &mut self,
        f: impl FnOnce(&mut Self, Marker) -> Result<T>,
    ) -> Result<T> {
        let m = self.alloc_marker_pair()?;
        let out = f(self, m);
        self.free_marker(m);
        out
    }
}
