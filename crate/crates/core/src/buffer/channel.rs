//! Parent ↔ buffer drivers.
//!
//! A channel owns one buffer and plays the parent's address generator for
//! it: it loads a tile by filling the buffer in index order, serves reads
//! issued by the consumer, and on a stall pushes the missing data. Every
//! element crossing from the parent is counted as a first fetch (first time
//! this tile load needed it) or a refetch.
//!
//! Reads are classified as resident hits or streamed reads. A read is
//! streamed when the element had to be pushed on demand since its previous
//! read; everything loaded up front or kept resident counts as a hit.

use alloc::vec::Vec;

use super::{Buffet, BufferError, BufferEvent, Mode, Tailor};

/// Traffic and reuse counters for one buffer.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ChannelStats {
    pub first_fetches: u64,
    pub refetches: u64,
    pub reads: u64,
    pub hits: u64,
    pub streamed_reads: u64,
    /// Plain fills into the buffer.
    pub fills: u64,
    /// Overwriting fills into the buffer.
    pub owfills: u64,
    pub tile_loads: u64,
    /// Sum of tile occupancies over all loads.
    pub tile_elements: u64,
    /// Elements of loaded tiles that cannot stay resident.
    pub bumped_elements: u64,
    pub overbooked_loads: u64,
}

impl ChannelStats {
    pub fn parent_traffic(&self) -> u64 {
        self.first_fetches + self.refetches
    }

    /// Fraction of reads served from resident data; 1.0 when nothing was read.
    pub fn reuse_fraction(&self) -> f64 {
        if self.reads == 0 {
            1.0
        } else {
            self.hits as f64 / self.reads as f64
        }
    }

    /// Fraction of loaded tile elements that were bumped.
    pub fn bumped_fraction(&self) -> f64 {
        if self.tile_elements == 0 {
            0.0
        } else {
            self.bumped_elements as f64 / self.tile_elements as f64
        }
    }

    pub fn merge(&mut self, other: &ChannelStats) {
        self.first_fetches += other.first_fetches;
        self.refetches += other.refetches;
        self.reads += other.reads;
        self.hits += other.hits;
        self.streamed_reads += other.streamed_reads;
        self.fills += other.fills;
        self.owfills += other.owfills;
        self.tile_loads += other.tile_loads;
        self.tile_elements += other.tile_elements;
        self.bumped_elements += other.bumped_elements;
        self.overbooked_loads += other.overbooked_loads;
    }

    fn since(&self, earlier: &ChannelStats) -> ChannelStats {
        ChannelStats {
            first_fetches: self.first_fetches - earlier.first_fetches,
            refetches: self.refetches - earlier.refetches,
            reads: self.reads - earlier.reads,
            hits: self.hits - earlier.hits,
            streamed_reads: self.streamed_reads - earlier.streamed_reads,
            fills: self.fills - earlier.fills,
            owfills: self.owfills - earlier.owfills,
            tile_loads: self.tile_loads - earlier.tile_loads,
            tile_elements: self.tile_elements - earlier.tile_elements,
            bumped_elements: self.bumped_elements - earlier.bumped_elements,
            overbooked_loads: self.overbooked_loads - earlier.overbooked_loads,
        }
    }

    fn merge_times(&mut self, other: &ChannelStats, times: u64) {
        let scaled = ChannelStats {
            first_fetches: other.first_fetches * times,
            refetches: other.refetches * times,
            reads: other.reads * times,
            hits: other.hits * times,
            streamed_reads: other.streamed_reads * times,
            fills: other.fills * times,
            owfills: other.owfills * times,
            tile_loads: other.tile_loads * times,
            tile_elements: other.tile_elements * times,
            bumped_elements: other.bumped_elements * times,
            overbooked_loads: other.overbooked_loads * times,
        };
        self.merge(&scaled);
    }
}

/// Scan until a scan leaves the channel state unchanged; from then on every
/// scan repeats the same transfers, so the rest are added arithmetically.
fn repeat_scans<C: TileChannel, S: PartialEq>(
    ch: &mut C,
    times: usize,
    snapshot: fn(&C) -> S,
    stats: fn(&mut C) -> &mut ChannelStats,
) {
    let mut prev = snapshot(ch);
    for done in 1..=times {
        let before = *ch.stats();
        ch.scan();
        let now = snapshot(ch);
        if now == prev {
            let delta = ch.stats().since(&before);
            stats(ch).merge_times(&delta, (times - done) as u64);
            return;
        }
        prev = now;
    }
}

/// A buffer fed from a parent store, one tile at a time. Elements are named
/// by their index in the loaded tile.
pub trait TileChannel {
    /// Release whatever is resident and start serving a tile of `len`
    /// elements, filling the buffer as far as capacity allows.
    fn load_tile(&mut self, tile: usize, len: usize);

    /// Serve a read of tile element `index`, streaming from the parent as
    /// needed.
    fn access(&mut self, index: usize);

    /// Read every element of the current tile in index order.
    fn scan(&mut self) {
        for i in 0..self.tile_len() {
            self.access(i);
        }
    }

    /// Read the current tile `times` times over.
    fn scan_repeated(&mut self, times: usize) {
        for _ in 0..times {
            self.scan();
        }
    }

    fn loaded_tile(&self) -> Option<usize>;
    fn tile_len(&self) -> usize;
    fn stats(&self) -> &ChannelStats;
}

/// Per-load bookkeeping shared by both channel kinds.
#[derive(Debug, Clone, Default, PartialEq)]
struct LoadState {
    tile: Option<usize>,
    len: usize,
    /// Original index of the element currently at index 0.
    base: usize,
    /// Fetched at least once during this load, by original index.
    fetched: Vec<bool>,
    /// Delivered on demand and not yet read, by original index.
    demand: Vec<bool>,
    pending_demand: usize,
}

impl LoadState {
    fn start(&mut self, tile: usize, len: usize) {
        self.tile = Some(tile);
        self.len = len;
        self.base = 0;
        self.fetched.clear();
        self.fetched.resize(len, false);
        self.demand.clear();
        self.demand.resize(len, false);
        self.pending_demand = 0;
    }

    /// Account one transfer of current index `i`; true when it is a refetch.
    fn fetch(&mut self, stats: &mut ChannelStats, i: usize, on_demand: bool) -> bool {
        let orig = self.base + i;
        let refetch = self.fetched[orig];
        if refetch {
            stats.refetches += 1;
        } else {
            stats.first_fetches += 1;
            self.fetched[orig] = true;
        }
        if on_demand && !self.demand[orig] {
            self.demand[orig] = true;
            self.pending_demand += 1;
        } else if !on_demand && self.demand[orig] {
            self.demand[orig] = false;
            self.pending_demand -= 1;
        }
        refetch
    }

    fn classify_read(&mut self, stats: &mut ChannelStats, i: usize) {
        let orig = self.base + i;
        stats.reads += 1;
        if self.demand[orig] {
            self.demand[orig] = false;
            self.pending_demand -= 1;
            stats.streamed_reads += 1;
        } else {
            stats.hits += 1;
        }
    }
}

/// Drives a [`Tailor`]: overbooked tiles keep their head resident and
/// stream the remainder cyclically through the FIFO region.
#[derive(Debug, Clone)]
pub struct TailorChannel {
    tailor: Tailor<usize>,
    load: LoadState,
    /// Next current index to stream with an overwriting fill.
    stream_next: usize,
    stats: ChannelStats,
}

impl TailorChannel {
    pub fn new(capacity: usize, fifo_len: usize) -> Result<Self, BufferError> {
        Ok(Self::from_tailor(Tailor::new(capacity, fifo_len)?))
    }

    pub fn with_trace(capacity: usize, fifo_len: usize) -> Result<Self, BufferError> {
        Ok(Self::from_tailor(Tailor::with_trace(capacity, fifo_len)?))
    }

    fn from_tailor(tailor: Tailor<usize>) -> Self {
        Self { tailor, load: LoadState::default(), stream_next: 0, stats: ChannelStats::default() }
    }

    pub fn tailor(&self) -> &Tailor<usize> {
        &self.tailor
    }

    pub fn trace(&self) -> &[BufferEvent<usize>] {
        self.tailor.trace()
    }

    /// Shrink `num` elements from the head of the current tile and backfill
    /// the freed space with the elements that follow.
    pub fn shrink(&mut self, num: usize) -> Result<(), BufferError> {
        self.tailor.shrink(num)?;
        for i in 0..num.min(self.load.len) {
            let orig = self.load.base + i;
            if self.load.demand[orig] {
                self.load.demand[orig] = false;
                self.load.pending_demand -= 1;
            }
        }
        self.load.base += num;
        self.load.len -= num.min(self.load.len);
        self.backfill();
        Ok(())
    }

    fn backfill(&mut self) {
        let cap = self.tailor.capacity();
        let upto = self.load.len.min(cap);
        for i in self.tailor.backfill_from()..upto {
            self.transfer(i, false);
            self.tailor.fill(self.load.base + i).expect("backfill within credits");
            self.stats.fills += 1;
        }
        self.stream_next = cap;
    }

    fn transfer(&mut self, i: usize, on_demand: bool) {
        if self.load.fetch(&mut self.stats, i, on_demand) && self.tailor.tracing() {
            self.tailor.note_refetch(i, self.load.base + i);
        }
    }

    /// Push the next element of the streaming cycle.
    fn stream_one(&mut self) {
        let i = self.stream_next;
        self.transfer(i, true);
        self.tailor.owfill(i, self.load.base + i).expect("streaming into a full buffer");
        self.stats.owfills += 1;
        self.stream_next += 1;
        if self.stream_next >= self.load.len {
            self.stream_next = self.tailor.fifo_head();
        }
    }

    fn fully_resident(&self) -> bool {
        self.tailor.mode() == Mode::Buffet && self.tailor.occupancy() == self.load.len
    }
}

impl TileChannel for TailorChannel {
    fn load_tile(&mut self, tile: usize, len: usize) {
        let occupied = self.tailor.occupancy();
        self.tailor.shrink(occupied).expect("releasing previous tile");
        self.tailor.set_tile(tile);
        self.load.start(tile, len);
        let cap = self.tailor.capacity();
        self.stats.tile_loads += 1;
        self.stats.tile_elements += len as u64;
        if len > cap {
            self.stats.overbooked_loads += 1;
            self.stats.bumped_elements += (len - self.tailor.fifo_head()) as u64;
        }
        self.backfill();
    }

    fn access(&mut self, index: usize) {
        assert!(index < self.load.len, "access {index} past tile of {}", self.load.len);
        loop {
            match self.tailor.read(index) {
                Ok(v) => {
                    debug_assert_eq!(v, self.load.base + index);
                    self.load.classify_read(&mut self.stats, index);
                    return;
                }
                Err(BufferError::Stall { .. }) => self.stream_one(),
                Err(e) => panic!("tailor read failed: {e}"),
            }
        }
    }

    fn scan(&mut self) {
        if self.fully_resident() && !self.tailor.tracing() && self.load.pending_demand == 0 {
            self.stats.reads += self.load.len as u64;
            self.stats.hits += self.load.len as u64;
            return;
        }
        for i in 0..self.load.len {
            self.access(i);
        }
    }

    fn scan_repeated(&mut self, times: usize) {
        if self.tailor.tracing() {
            (0..times).for_each(|_| self.scan());
        } else {
            repeat_scans(self, times, |c| (c.tailor.clone(), c.load.clone(), c.stream_next), |c| &mut c.stats);
        }
    }

    fn loaded_tile(&self) -> Option<usize> {
        self.load.tile
    }

    fn tile_len(&self) -> usize {
        self.load.len
    }

    fn stats(&self) -> &ChannelStats {
        &self.stats
    }
}

/// Drives a plain [`Buffet`]. A tile that does not fit is handled as a
/// sliding window: moving forward shrinks the head one element at a time,
/// moving back drops everything and refills from the requested index.
#[derive(Debug, Clone)]
pub struct BuffetChannel {
    buffet: Buffet<usize>,
    load: LoadState,
    /// Current tile index held at buffet index 0.
    window_start: usize,
    stats: ChannelStats,
}

impl BuffetChannel {
    pub fn new(capacity: usize) -> Result<Self, BufferError> {
        Ok(Self::from_buffet(Buffet::new(capacity)?))
    }

    pub fn with_trace(capacity: usize) -> Result<Self, BufferError> {
        Ok(Self::from_buffet(Buffet::with_trace(capacity)?))
    }

    fn from_buffet(buffet: Buffet<usize>) -> Self {
        Self { buffet, load: LoadState::default(), window_start: 0, stats: ChannelStats::default() }
    }

    pub fn buffet(&self) -> &Buffet<usize> {
        &self.buffet
    }

    pub fn trace(&self) -> &[BufferEvent<usize>] {
        self.buffet.trace()
    }

    fn push(&mut self, i: usize, on_demand: bool) {
        if self.load.fetch(&mut self.stats, i, on_demand) && self.buffet.tracing() {
            self.buffet.note_refetch(i, i);
        }
        self.buffet.fill(i).expect("fill within credits");
        self.stats.fills += 1;
    }

    fn refill_from(&mut self, start: usize, on_demand: bool) {
        let occupied = self.buffet.occupancy();
        self.buffet.shrink(occupied).expect("drop resident window");
        self.window_start = start;
        let upto = self.load.len.min(start + self.buffet.capacity());
        for i in start..upto {
            self.push(i, on_demand);
        }
    }
}

impl TileChannel for BuffetChannel {
    fn load_tile(&mut self, tile: usize, len: usize) {
        self.buffet.set_tile(tile);
        self.load.start(tile, len);
        self.stats.tile_loads += 1;
        self.stats.tile_elements += len as u64;
        if len > self.buffet.capacity() {
            self.stats.overbooked_loads += 1;
            self.stats.bumped_elements += len as u64;
        }
        self.refill_from(0, false);
    }

    fn access(&mut self, index: usize) {
        assert!(index < self.load.len, "access {index} past tile of {}", self.load.len);
        if index < self.window_start {
            self.refill_from(index, true);
        }
        while index >= self.window_start + self.buffet.occupancy() {
            if self.buffet.is_full() {
                self.buffet.shrink(1).expect("slide window");
                self.window_start += 1;
            }
            let next = self.window_start + self.buffet.occupancy();
            self.push(next, true);
        }
        let v = self.buffet.read(index - self.window_start).expect("resident after refill");
        debug_assert_eq!(v, index);
        self.load.classify_read(&mut self.stats, index);
    }

    fn scan(&mut self) {
        let resident = self.window_start == 0 && self.buffet.occupancy() == self.load.len;
        if resident && !self.buffet.tracing() && self.load.pending_demand == 0 {
            self.stats.reads += self.load.len as u64;
            self.stats.hits += self.load.len as u64;
            return;
        }
        for i in 0..self.load.len {
            self.access(i);
        }
    }

    fn scan_repeated(&mut self, times: usize) {
        if self.buffet.tracing() {
            (0..times).for_each(|_| self.scan());
        } else {
            repeat_scans(self, times, |c| (c.buffet.clone(), c.load.clone(), c.window_start), |c| &mut c.stats);
        }
    }

    fn loaded_tile(&self) -> Option<usize> {
        self.load.tile
    }

    fn tile_len(&self) -> usize {
        self.load.len
    }

    fn stats(&self) -> &ChannelStats {
        &self.stats
    }
}

/// Either idiom behind one type, for drivers that pick at runtime.
#[derive(Debug, Clone)]
pub enum AnyChannel {
    Buffet(BuffetChannel),
    Tailor(TailorChannel),
}

impl TileChannel for AnyChannel {
    fn load_tile(&mut self, tile: usize, len: usize) {
        match self {
            AnyChannel::Buffet(c) => c.load_tile(tile, len),
            AnyChannel::Tailor(c) => c.load_tile(tile, len),
        }
    }

    fn access(&mut self, index: usize) {
        match self {
            AnyChannel::Buffet(c) => c.access(index),
            AnyChannel::Tailor(c) => c.access(index),
        }
    }

    fn scan(&mut self) {
        match self {
            AnyChannel::Buffet(c) => c.scan(),
            AnyChannel::Tailor(c) => c.scan(),
        }
    }

    fn scan_repeated(&mut self, times: usize) {
        match self {
            AnyChannel::Buffet(c) => c.scan_repeated(times),
            AnyChannel::Tailor(c) => c.scan_repeated(times),
        }
    }

    fn loaded_tile(&self) -> Option<usize> {
        match self {
            AnyChannel::Buffet(c) => c.loaded_tile(),
            AnyChannel::Tailor(c) => c.loaded_tile(),
        }
    }

    fn tile_len(&self) -> usize {
        match self {
            AnyChannel::Buffet(c) => c.tile_len(),
            AnyChannel::Tailor(c) => c.tile_len(),
        }
    }

    fn stats(&self) -> &ChannelStats {
        match self {
            AnyChannel::Buffet(c) => c.stats(),
            AnyChannel::Tailor(c) => c.stats(),
        }
    }
}

/// Parent transfers for one tile of `len` elements scanned `scans` times
/// through a Tailor, by direct replay.
pub fn tailor_scan_traffic(len: usize, capacity: usize, fifo_len: usize, scans: usize) -> ChannelStats {
    let mut ch = TailorChannel::new(capacity, fifo_len).expect("valid tailor");
    ch.load_tile(0, len);
    ch.scan_repeated(scans);
    ch.stats
}

/// Same as [`tailor_scan_traffic`] through a plain buffet.
pub fn buffet_scan_traffic(len: usize, capacity: usize, scans: usize) -> ChannelStats {
    let mut ch = BuffetChannel::new(capacity).expect("valid buffet");
    ch.load_tile(0, len);
    ch.scan_repeated(scans);
    ch.stats
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::buffer::Op;

    #[test]
    fn fitting_tile_is_all_hits() {
        let s = tailor_scan_traffic(4, 4, 2, 5);
        assert_eq!((s.first_fetches, s.refetches), (4, 0));
        assert_eq!((s.reads, s.hits), (20, 20));
        let s = buffet_scan_traffic(3, 4, 5);
        assert_eq!(s.parent_traffic(), 3);
        assert_eq!(s.reuse_fraction(), 1.0);
    }

    #[test]
    fn six_element_tile_twice() {
        let t = tailor_scan_traffic(6, 4, 2, 2);
        assert_eq!(t.parent_traffic(), 10);
        assert_eq!(t.first_fetches, 6);
        let b = buffet_scan_traffic(6, 4, 2);
        assert_eq!(b.parent_traffic(), 12);
    }

    #[test]
    fn shrink_backfills_remaining_tile() {
        // 10-element tile through capacity 4 / FIFO 2: after shrink(4) the
        // next four elements are resident and the last two still stream
        let mut ch = TailorChannel::new(4, 2).unwrap();
        ch.load_tile(0, 10);
        ch.scan();
        assert_eq!(ch.stats().parent_traffic(), 10);
        ch.shrink(4).unwrap();
        assert_eq!(ch.tile_len(), 6);
        assert_eq!(ch.tailor().occupancy(), 4);
        assert_eq!(ch.tailor().mode(), Mode::Buffet);
        assert_eq!(ch.stats().refetches, 4);
        ch.scan();
        assert_eq!(ch.tailor().mode(), Mode::Overbooked);
        assert_eq!(ch.stats().refetches, 6);

        // 6-element tile: after shrink(4) the remaining two fit
        let mut ch = TailorChannel::new(4, 2).unwrap();
        ch.load_tile(0, 6);
        ch.scan();
        ch.shrink(4).unwrap();
        assert_eq!(ch.tile_len(), 2);
        assert_eq!(ch.tailor().mode(), Mode::Buffet);
        assert_eq!(ch.tailor().occupancy(), 2);
        let before = ch.stats().parent_traffic();
        ch.scan_repeated(3);
        assert_eq!(ch.stats().parent_traffic(), before);
    }

    #[test]
    fn shrink_within_buffet_region_keeps_prefix() {
        let mut ch = TailorChannel::with_trace(4, 2).unwrap();
        ch.load_tile(0, 7);
        ch.scan();
        ch.shrink(1).unwrap();
        // old indices 1 stays resident, 2..5 are backfilled
        let refetched: Vec<_> =
            ch.trace().iter().rev().take_while(|e| e.op != Op::Shrink).filter(|e| e.op == Op::ParentRefetch).map(|e| e.element.unwrap()).collect();
        assert_eq!(refetched.len(), 3);
        assert!(refetched.iter().all(|&e| (2..5).contains(&e)));
        ch.access(0);
        assert_eq!(ch.tailor().occupancy(), 4);
    }

    #[test]
    fn reads_classified_once() {
        let s = tailor_scan_traffic(40, 16, 4, 7);
        assert_eq!(s.reads, s.hits + s.streamed_reads);
        assert_eq!(s.reads, 280);
        let s = buffet_scan_traffic(40, 16, 7);
        assert_eq!(s.reads, s.hits + s.streamed_reads);
    }

    #[test]
    fn random_access_streams_until_resident() {
        let mut ch = TailorChannel::new(4, 2).unwrap();
        ch.load_tile(0, 9);
        ch.access(8);
        ch.access(3 + 3);
        ch.access(0);
        ch.access(2);
        assert_eq!(ch.stats().reads, 4);
        let mut b = BuffetChannel::new(4).unwrap();
        b.load_tile(0, 9);
        b.access(8);
        b.access(1);
        assert_eq!(b.stats().reads, 2);
    }

    #[test]
    fn reload_same_length_resets_accounting() {
        let mut ch = TailorChannel::new(8, 2).unwrap();
        ch.load_tile(0, 20);
        ch.scan();
        ch.load_tile(1, 5);
        ch.scan();
        assert_eq!(ch.stats().first_fetches, 25);
        assert_eq!(ch.stats().tile_loads, 2);
        assert_eq!(ch.stats().overbooked_loads, 1);
        assert_eq!(ch.stats().bumped_elements, 14);
    }

    #[test]
    fn repeated_scans_match_plain_loop() {
        for len in 1..24 {
            for cap in 1..9 {
                for times in 0..6 {
                    let mut plain = BuffetChannel::new(cap).unwrap();
                    let mut fast = plain.clone();
                    plain.load_tile(0, len);
                    fast.load_tile(0, len);
                    (0..times).for_each(|_| plain.scan());
                    fast.scan_repeated(times);
                    assert_eq!(plain.stats, fast.stats, "buffet {len} {cap} {times}");
                    for f in 1..=cap {
                        let mut plain = TailorChannel::new(cap, f).unwrap();
                        let mut fast = plain.clone();
                        plain.load_tile(0, len);
                        fast.load_tile(0, len);
                        plain.access(len / 2);
                        fast.access(len / 2);
                        (0..times).for_each(|_| plain.scan());
                        fast.scan_repeated(times);
                        assert_eq!(plain.stats, fast.stats, "tailor {len} {cap} {f} {times}");
                        plain.scan();
                        fast.scan();
                        assert_eq!(plain.stats, fast.stats);
                    }
                }
            }
        }
    }
}
