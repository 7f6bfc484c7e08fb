//! Explicitly orchestrated buffers.
//!
//! [`Buffet`] is the queue-managed idiom with Fill/Read/Update/Shrink and
//! credit flow to the parent. [`Tailor`] extends it with an overwriting fill
//! that, once the buffer is full and the tile keeps coming, turns the last
//! `F` slots into a FIFO-managed streaming region while the head of the
//! buffer stays resident.
//!
//! Offsets in events are logical positions with a fixed head; the physical
//! storage is a rolling buffer.
//!
//! [`channel`] contains the drivers that connect a buffer to a parent store
//! holding a tile and count what crosses that boundary.

pub mod channel;

use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::fmt;

/// Operating mode of a buffer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Mode {
    Buffet,
    Overbooked,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Buffet => "buffet",
            Mode::Overbooked => "overbooked",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Op {
    Fill,
    OwFill,
    Read,
    Update,
    Shrink,
    ParentRefetch,
}

impl fmt::Display for Op {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Op::Fill => "Fill",
            Op::OwFill => "OWFill",
            Op::Read => "Read",
            Op::Update => "Update",
            Op::Shrink => "Shrink",
            Op::ParentRefetch => "ParentRefetch",
        })
    }
}

/// One entry of a buffer's append-only trace.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BufferEvent<T> {
    pub op: Op,
    pub element: Option<T>,
    pub tile: usize,
    /// Tile-relative index; for `Shrink`, the number of slots released.
    pub index: usize,
    /// Resolved logical buffer offset, when the operation touches a slot.
    pub offset: Option<usize>,
    pub mode: Mode,
    /// FIFO offset after the operation (always 0 in buffet mode).
    pub fifo_offset: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BufferError {
    /// The addressed element is not resident yet; the consumer waits for
    /// the parent to deliver it.
    Stall { index: usize },
    /// Fill attempted without a free credit.
    NoCredits,
    /// Overwriting fill on a buffer that still has credits.
    NotFull,
    ShrinkTooLarge { requested: usize, occupancy: usize },
    /// Capacity or FIFO region size out of range.
    InvalidConfig,
}

impl fmt::Display for BufferError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            BufferError::Stall { index } => write!(f, "read of index {index} stalls: not resident"),
            BufferError::NoCredits => write!(f, "fill without an available credit"),
            BufferError::NotFull => write!(f, "overwriting fill requires a full buffer"),
            BufferError::ShrinkTooLarge { requested, occupancy } => {
                write!(f, "shrink of {requested} exceeds occupancy {occupancy}")
            }
            BufferError::InvalidConfig => write!(f, "invalid buffer configuration"),
        }
    }
}

impl core::error::Error for BufferError {}

/// Queue-managed buffer with credit flow control.
#[derive(Debug, Clone)]
pub struct Buffet<T> {
    slots: Vec<Option<T>>,
    head: usize,
    occupancy: usize,
    tile: usize,
    trace: Option<Vec<BufferEvent<T>>>,
}

/// Equal when the same elements sit at the same buffet indices, wherever
/// the ring happens to start.
impl<T: PartialEq> PartialEq for Buffet<T> {
    fn eq(&self, other: &Self) -> bool {
        let cap = self.slots.len();
        cap == other.slots.len()
            && self.occupancy == other.occupancy
            && self.tile == other.tile
            && self.trace == other.trace
            && (0..self.occupancy)
                .all(|i| self.slots[(self.head + i) % cap] == other.slots[(other.head + i) % cap])
    }
}

impl<T: Clone> Buffet<T> {
    pub fn new(capacity: usize) -> Result<Self, BufferError> {
        if capacity == 0 {
            return Err(BufferError::InvalidConfig);
        }
        Ok(Self { slots: alloc::vec![None; capacity], head: 0, occupancy: 0, tile: 0, trace: None })
    }

    /// Like [`Buffet::new`] but recording every operation.
    pub fn with_trace(capacity: usize) -> Result<Self, BufferError> {
        let mut b = Self::new(capacity)?;
        b.trace = Some(Vec::new());
        Ok(b)
    }

    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn occupancy(&self) -> usize {
        self.occupancy
    }

    /// Free slots the parent may fill.
    pub fn credits(&self) -> usize {
        self.capacity() - self.occupancy
    }

    pub fn is_full(&self) -> bool {
        self.occupancy == self.capacity()
    }

    /// Tag subsequent events with tile ordinal `tile`.
    pub fn set_tile(&mut self, tile: usize) {
        self.tile = tile;
    }

    pub fn tile(&self) -> usize {
        self.tile
    }

    pub fn trace(&self) -> &[BufferEvent<T>] {
        self.trace.as_deref().unwrap_or(&[])
    }

    pub fn tracing(&self) -> bool {
        self.trace.is_some()
    }

    pub fn take_trace(&mut self) -> Vec<BufferEvent<T>> {
        self.trace.as_mut().map(core::mem::take).unwrap_or_default()
    }

    /// Place `element` at the tail, consuming one credit. Returns its offset.
    pub fn fill(&mut self, element: T) -> Result<usize, BufferError> {
        let offset = self.fill_raw(element.clone())?;
        self.record(Op::Fill, Some(element), offset, Some(offset), Mode::Buffet, 0);
        Ok(offset)
    }

    /// Element at `index` from the head.
    pub fn read(&mut self, index: usize) -> Result<T, BufferError> {
        let value = self.get(index).cloned().ok_or(BufferError::Stall { index })?;
        self.record(Op::Read, Some(value.clone()), index, Some(index), Mode::Buffet, 0);
        Ok(value)
    }

    pub fn update(&mut self, index: usize, element: T) -> Result<(), BufferError> {
        let slot = self.slot_mut(index).ok_or(BufferError::Stall { index })?;
        *slot = Some(element.clone());
        self.record(Op::Update, Some(element), index, Some(index), Mode::Buffet, 0);
        Ok(())
    }

    /// Release `num` elements from the head and return their credits.
    pub fn shrink(&mut self, num: usize) -> Result<(), BufferError> {
        self.shrink_raw(num)?;
        self.record(Op::Shrink, None, num, None, Mode::Buffet, 0);
        Ok(())
    }

    /// Resident element at `index`, without recording.
    pub fn get(&self, index: usize) -> Option<&T> {
        if index >= self.occupancy {
            return None;
        }
        self.slots[(self.head + index) % self.capacity()].as_ref()
    }

    fn slot_mut(&mut self, index: usize) -> Option<&mut Option<T>> {
        if index >= self.occupancy {
            return None;
        }
        let cap = self.capacity();
        Some(&mut self.slots[(self.head + index) % cap])
    }

    fn fill_raw(&mut self, element: T) -> Result<usize, BufferError> {
        if self.credits() == 0 {
            return Err(BufferError::NoCredits);
        }
        let offset = self.occupancy;
        let cap = self.capacity();
        self.slots[(self.head + offset) % cap] = Some(element);
        self.occupancy += 1;
        Ok(offset)
    }

    fn shrink_raw(&mut self, num: usize) -> Result<(), BufferError> {
        if num > self.occupancy {
            return Err(BufferError::ShrinkTooLarge { requested: num, occupancy: self.occupancy });
        }
        let cap = self.capacity();
        for i in 0..num {
            self.slots[(self.head + i) % cap] = None;
        }
        self.head = (self.head + num) % cap;
        self.occupancy -= num;
        Ok(())
    }

    /// Drop `num` elements from the tail without returning credits to the
    /// parent's view; used to carve out a FIFO region.
    fn truncate_tail(&mut self, num: usize) {
        let cap = self.capacity();
        let num = num.min(self.occupancy);
        for i in self.occupancy - num..self.occupancy {
            self.slots[(self.head + i) % cap] = None;
        }
        self.occupancy -= num;
    }

    fn record(
        &mut self,
        op: Op,
        element: Option<T>,
        index: usize,
        offset: Option<usize>,
        mode: Mode,
        fifo_offset: usize,
    ) {
        if let Some(trace) = self.trace.as_mut() {
            trace.push(BufferEvent { op, element, tile: self.tile, index, offset, mode, fifo_offset });
        }
    }
}

/// A buffet that tolerates tiles larger than its capacity.
///
/// While the current tile fits it behaves exactly like [`Buffet`]. An
/// overwriting fill on a full buffer splits it into a buffet-managed head
/// region `[0, capacity - F)` and a FIFO-managed tail of `F` slots; further
/// overwriting fills only touch the tail, evicting its oldest element.
#[derive(Debug, Clone, PartialEq)]
pub struct Tailor<T> {
    buffet: Buffet<T>,
    fifo_len: usize,
    mode: Mode,
    /// `(tile index, element)`, oldest first.
    fifo: VecDeque<(usize, T)>,
}

impl<T: Clone> Tailor<T> {
    /// `fifo_len` must lie in `1..=capacity`.
    pub fn new(capacity: usize, fifo_len: usize) -> Result<Self, BufferError> {
        Self::from_buffet(Buffet::new(capacity)?, fifo_len)
    }

    pub fn with_trace(capacity: usize, fifo_len: usize) -> Result<Self, BufferError> {
        Self::from_buffet(Buffet::with_trace(capacity)?, fifo_len)
    }

    fn from_buffet(buffet: Buffet<T>, fifo_len: usize) -> Result<Self, BufferError> {
        if fifo_len == 0 || fifo_len > buffet.capacity() {
            return Err(BufferError::InvalidConfig);
        }
        Ok(Self { buffet, fifo_len, mode: Mode::Buffet, fifo: VecDeque::with_capacity(fifo_len) })
    }

    pub fn capacity(&self) -> usize {
        self.buffet.capacity()
    }

    pub fn fifo_len(&self) -> usize {
        self.fifo_len
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    /// Start of the FIFO-managed region, equal to the size of the
    /// buffet-managed region.
    pub fn fifo_head(&self) -> usize {
        self.capacity() - self.fifo_len
    }

    /// Distance from the FIFO head to the tile index of the oldest streamed
    /// element; zero when the FIFO window is aligned or in buffet mode.
    pub fn fifo_offset(&self) -> usize {
        match (self.mode, self.fifo.front()) {
            (Mode::Overbooked, Some(&(oldest, _))) => oldest - self.fifo_head(),
            _ => 0,
        }
    }

    pub fn occupancy(&self) -> usize {
        match self.mode {
            Mode::Buffet => self.buffet.occupancy(),
            Mode::Overbooked => self.capacity(),
        }
    }

    pub fn credits(&self) -> usize {
        self.capacity() - self.occupancy()
    }

    pub fn set_tile(&mut self, tile: usize) {
        self.buffet.set_tile(tile);
    }

    pub fn trace(&self) -> &[BufferEvent<T>] {
        self.buffet.trace()
    }

    pub fn tracing(&self) -> bool {
        self.buffet.tracing()
    }

    pub fn take_trace(&mut self) -> Vec<BufferEvent<T>> {
        self.buffet.take_trace()
    }

    /// Tile indices currently held in the FIFO region, oldest first.
    pub fn fifo_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.fifo.iter().map(|(i, _)| *i)
    }

    /// Plain fill. Blocked while overbooked since the buffer is full.
    pub fn fill(&mut self, element: T) -> Result<usize, BufferError> {
        match self.mode {
            Mode::Buffet => self.buffet.fill(element),
            Mode::Overbooked => Err(BufferError::NoCredits),
        }
    }

    /// Overwriting fill of tile element `index`. Requires a full buffer.
    pub fn owfill(&mut self, index: usize, element: T) -> Result<usize, BufferError> {
        match self.mode {
            Mode::Buffet => {
                if !self.buffet.is_full() {
                    return Err(BufferError::NotFull);
                }
                self.buffet.truncate_tail(self.fifo_len);
                self.fifo.clear();
                self.mode = Mode::Overbooked;
            }
            Mode::Overbooked => {
                if self.fifo.len() == self.fifo_len {
                    self.fifo.pop_front();
                }
            }
        }
        // streamed data always lives above the buffet-managed region
        debug_assert!(index >= self.fifo_head(), "overwriting fill of index {index} below FIFO head");
        self.fifo.push_back((index, element.clone()));
        let offset = self.fifo_head() + self.fifo.len() - 1;
        let fifo_offset = self.fifo_offset();
        self.buffet.record(Op::OwFill, Some(element), index, Some(offset), self.mode, fifo_offset);
        Ok(offset)
    }

    /// Logical buffer offset holding tile element `index`.
    pub fn resolve_offset(&self, index: usize) -> Result<usize, BufferError> {
        match self.mode {
            Mode::Buffet if index < self.buffet.occupancy() => Ok(index),
            Mode::Buffet => Err(BufferError::Stall { index }),
            Mode::Overbooked if index < self.fifo_head() => Ok(index),
            Mode::Overbooked => self
                .fifo
                .iter()
                .position(|(i, _)| *i == index)
                .map(|pos| self.fifo_head() + pos)
                .ok_or(BufferError::Stall { index }),
        }
    }

    pub fn read(&mut self, index: usize) -> Result<T, BufferError> {
        if self.mode == Mode::Buffet {
            return self.buffet.read(index);
        }
        let offset = self.resolve_offset(index)?;
        let value = self.slot(offset).clone();
        let fifo_offset = self.fifo_offset();
        self.buffet.record(Op::Read, Some(value.clone()), index, Some(offset), self.mode, fifo_offset);
        Ok(value)
    }

    pub fn update(&mut self, index: usize, element: T) -> Result<(), BufferError> {
        if self.mode == Mode::Buffet {
            return self.buffet.update(index, element);
        }
        let offset = self.resolve_offset(index)?;
        *self.slot_mut(offset) = element.clone();
        let fifo_offset = self.fifo_offset();
        self.buffet.record(Op::Update, Some(element), index, Some(offset), self.mode, fifo_offset);
        Ok(())
    }

    /// Release `num` elements from the head. While overbooked this also
    /// drops the streaming region and returns to buffet mode; the resident
    /// prefix of the buffet-managed region is kept so the parent can
    /// backfill contiguously after it.
    pub fn shrink(&mut self, num: usize) -> Result<(), BufferError> {
        match self.mode {
            Mode::Buffet => self.buffet.shrink(num),
            Mode::Overbooked => {
                let occupancy = self.occupancy();
                if num > occupancy {
                    return Err(BufferError::ShrinkTooLarge { requested: num, occupancy });
                }
                let fifo_offset = self.fifo_offset();
                self.buffet.record(Op::Shrink, None, num, None, Mode::Overbooked, fifo_offset);
                let resident = self.buffet.occupancy();
                self.buffet.shrink_raw(num.min(resident))?;
                self.fifo.clear();
                self.mode = Mode::Buffet;
                Ok(())
            }
        }
    }

    /// Index the parent should backfill next: the end of the resident
    /// contiguous prefix.
    pub fn backfill_from(&self) -> usize {
        self.buffet.occupancy()
    }

    /// Record a parent refetch of tile element `index` in the trace.
    pub fn note_refetch(&mut self, index: usize, element: T) {
        let (mode, fifo_offset) = (self.mode, self.fifo_offset());
        self.buffet.record(Op::ParentRefetch, Some(element), index, None, mode, fifo_offset);
    }

    fn slot(&self, offset: usize) -> &T {
        let head = self.fifo_head();
        if offset < head {
            self.buffet.get(offset).expect("buffet-managed slot resident while overbooked")
        } else {
            &self.fifo[offset - head].1
        }
    }

    fn slot_mut(&mut self, offset: usize) -> &mut T {
        let head = self.fifo_head();
        if offset < head {
            self.buffet
                .slot_mut(offset)
                .and_then(Option::as_mut)
                .expect("buffet-managed slot resident while overbooked")
        } else {
            &mut self.fifo[offset - head].1
        }
    }
}

impl<T: Clone> Buffet<T> {
    pub(crate) fn note_refetch(&mut self, index: usize, element: T) {
        self.record(Op::ParentRefetch, Some(element), index, None, Mode::Buffet, 0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn fill_until_full() {
        let mut b = Buffet::new(4).unwrap();
        assert_eq!(b.fill('a'), Ok(0));
        assert_eq!(b.occupancy(), 1);
        for c in ['b', 'c', 'd'] {
            b.fill(c).unwrap();
        }
        assert!(b.is_full());
        assert_eq!(b.credits(), 0);
        assert_eq!(b.fill('e'), Err(BufferError::NoCredits));
    }

    #[test]
    fn shrink_returns_credits() {
        let mut b = Buffet::new(4).unwrap();
        for c in ['a', 'b', 'c', 'd'] {
            b.fill(c).unwrap();
        }
        b.shrink(0).unwrap();
        assert_eq!(b.occupancy(), 4);
        b.shrink(2).unwrap();
        assert_eq!(b.read(0), Ok('c'));
        assert_eq!(b.credits(), 2);
        b.fill('e').unwrap();
        assert_eq!(b.read(2), Ok('e'));
        b.shrink(3).unwrap();
        assert_eq!((b.occupancy(), b.credits()), (0, 4));
        assert_eq!(b.shrink(1), Err(BufferError::ShrinkTooLarge { requested: 1, occupancy: 0 }));
    }

    #[test]
    fn update_and_stall() {
        let mut b = Buffet::new(2).unwrap();
        assert_eq!(b.update(0, 'x'), Err(BufferError::Stall { index: 0 }));
        assert_eq!(b.read(0), Err(BufferError::Stall { index: 0 }));
        b.fill('a').unwrap();
        b.fill('b').unwrap();
        b.update(0, 'x').unwrap();
        assert_eq!(b.read(0), Ok('x'));
    }

    #[test]
    fn tailor_rejects_bad_regions() {
        assert!(Tailor::<u8>::new(4, 0).is_err());
        assert!(Tailor::<u8>::new(4, 5).is_err());
        assert!(Tailor::<u8>::new(0, 0).is_err());
        assert!(Tailor::<u8>::new(4, 4).is_ok());
    }

    #[test]
    fn owfill_needs_full_buffer() {
        let mut t = Tailor::new(4, 2).unwrap();
        t.fill('a').unwrap();
        assert_eq!(t.owfill(1, 'b'), Err(BufferError::NotFull));
    }

    // Fill(a..d), OWFill(e), OWFill(f), Read(5), Read(0), Read(1), OWFill(c),
    // Read(2), OWFill(d) with capacity 4 and a 2-slot FIFO region.
    #[test]
    fn worked_trace() {
        let mut t = Tailor::with_trace(4, 2).unwrap();
        for c in ['a', 'b', 'c', 'd'] {
            t.fill(c).unwrap();
        }
        t.owfill(4, 'e').unwrap();
        assert_eq!((t.fifo_offset(), t.fifo_head()), (2, 2));
        t.owfill(5, 'f').unwrap();
        assert_eq!(t.resolve_offset(5), Ok(3));
        assert_eq!(t.read(5), Ok('f'));
        assert_eq!(t.read(0), Ok('a'));
        assert_eq!(t.read(1), Ok('b'));
        assert_eq!(t.resolve_offset(2), Err(BufferError::Stall { index: 2 }));
        t.owfill(2, 'c').unwrap();
        assert_eq!(t.fifo_offset(), 3);
        assert_eq!(t.read(2), Ok('c'));
        assert_eq!(t.resolve_offset(2), Ok(3));
        t.owfill(3, 'd').unwrap();
        assert_eq!(t.fifo_offset(), 0);
        assert_eq!(t.resolve_offset(2), Ok(2));

        let offsets: Vec<_> = t.trace().iter().skip(4).map(|e| e.fifo_offset).collect();
        assert_eq!(offsets, vec![2, 2, 2, 2, 2, 3, 3, 0]);
        // region isolation: no overwriting fill below the FIFO head
        assert!(t.trace().iter().filter(|e| e.op == Op::OwFill).all(|e| e.offset.unwrap() >= 2));
    }

    #[test]
    fn overbooked_update_resolves_like_read() {
        let mut t = Tailor::new(4, 2).unwrap();
        for c in ['a', 'b', 'c', 'd'] {
            t.fill(c).unwrap();
        }
        t.owfill(4, 'e').unwrap();
        t.owfill(5, 'f').unwrap();
        t.update(5, 'F').unwrap();
        assert_eq!(t.read(5), Ok('F'));
        t.update(0, 'A').unwrap();
        assert_eq!(t.read(0), Ok('A'));
        assert_eq!(t.update(2, 'x'), Err(BufferError::Stall { index: 2 }));
    }

    #[test]
    fn overbooked_shrink_returns_to_buffet_mode() {
        let mut t = Tailor::new(4, 2).unwrap();
        for c in 0..4 {
            t.fill(c).unwrap();
        }
        t.owfill(4, 4).unwrap();
        assert_eq!(t.fill(9), Err(BufferError::NoCredits));
        t.shrink(1).unwrap();
        assert_eq!(t.mode(), Mode::Buffet);
        // element 1 survives as the new head
        assert_eq!(t.read(0), Ok(1));
        assert_eq!(t.backfill_from(), 1);
        assert_eq!(t.credits(), 3);
        assert_eq!(t.shrink(5), Err(BufferError::ShrinkTooLarge { requested: 5, occupancy: 1 }));
    }
}
