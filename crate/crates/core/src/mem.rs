//! Input buffer matrix, planar tile fetch, weight feed and output ping-pong.
//!
//! A pixel `in[id][r][c]` lives in bank `(r mod H_b, c mod W_b)` at address
//! `concat(⌊r/H_b⌋, ⌊c/W_b⌋·ID + id)`. Banks in one row share the high field,
//! banks in one column share the low field. The low field is
//! `⌈log2(⌈IW/W_b⌉·ID)⌉` bits wide for the layer.
//!
//! A stored word packs `Q` channels of `B` images (lane `q·B + b`), so `ID`
//! in the address map counts channel groups.

use std::collections::BTreeMap;
use std::fmt;
use std::io::{self, Write};
use std::ops::Range;

use serde::Serialize;

use crate::engine::ceil_log2;
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::scalar::Scalar;
use crate::tensor::Tensor;

/// Bank coordinates and address fields of one pixel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct Location {
    pub h: usize,
    pub w: usize,
    pub high: usize,
    pub low: usize,
    pub addr: usize,
}

/// Bank and address fields without a fixed low-field width.
pub fn map_address(
    h_b: usize,
    w_b: usize,
    channels: usize,
    id: usize,
    r: usize,
    c: usize,
) -> (usize, usize, usize, usize) {
    debug_assert!(id < channels);
    (r % h_b, c % w_b, r / h_b, (c / w_b) * channels + id)
}

/// Address map of one layer.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AddressMap {
    pub h_b: usize,
    pub w_b: usize,
    pub channels: usize,
    pub iw: usize,
    pub low_bits: u32,
    pub depth: usize,
    /// Rows kept resident; stored rows wrap modulo this (a multiple of `H_b`).
    pub ring_rows: Option<usize>,
}

impl AddressMap {
    pub fn new(h_b: usize, w_b: usize, channels: usize, iw: usize, depth: usize) -> Self {
        let low_bits = ceil_log2(iw.div_ceil(w_b) * channels);
        AddressMap { h_b, w_b, channels, iw, low_bits, depth, ring_rows: None }
    }

    /// Keep as many rows as the depth allows, wrapping older rows.
    pub fn ring(mut self) -> Self {
        self.ring_rows = Some(self.ring_capacity());
        self
    }

    /// Rows that fit in the banks at once.
    pub fn ring_capacity(&self) -> usize {
        (self.depth >> self.low_bits) * self.h_b
    }

    pub fn locate(&self, id: usize, r: usize, c: usize) -> Result<Location> {
        if id >= self.channels || c >= self.iw {
            return Err(Error::Shape(format!(
                "pixel ({id}, {r}, {c}) outside layer with {} channel words and width {}",
                self.channels, self.iw
            )));
        }
        let r = match self.ring_rows {
            Some(n) if n > 0 => r % n,
            _ => r,
        };
        let (h, w, high, low) = map_address(self.h_b, self.w_b, self.channels, id, r, c);
        let addr = (high << self.low_bits) | low;
        if addr >= self.depth {
            return Err(Error::Capacity { addr, depth: self.depth });
        }
        Ok(Location { h, w, high, low, addr })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Op {
    R,
    W,
}

/// One bank access.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct TraceRecord {
    pub cycle: u64,
    pub h: usize,
    pub w: usize,
    pub addr: usize,
    pub op: Op,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let op = match self.op {
            Op::R => "R",
            Op::W => "W",
        };
        write!(f, "{}, bank({},{}), {}, {}", self.cycle, self.h, self.w, self.addr, op)
    }
}

pub fn write_trace(records: &[TraceRecord], out: &mut impl Write) -> io::Result<()> {
    for r in records {
        writeln!(out, "{r}")?;
    }
    Ok(())
}

/// `Q·B` lanes of one stored entry.
pub type Word = Vec<Scalar>;

/// The `H_b × W_b` grid of input banks.
#[derive(Clone, Debug)]
pub struct BramMatrix {
    map: AddressMap,
    lanes: usize,
    banks: Vec<Vec<Option<Word>>>,
    /// Rows with stored data; everything else reads as zero.
    rows: Range<isize>,
    ih: usize,
}

/// Channel group, row and column of one pixel.
type Pixel = (usize, isize, isize);

/// Request for `N` overlapping tiles starting at `(r, c)` of channel group `group`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct TileRequest {
    pub group: usize,
    pub r: isize,
    pub c: isize,
    pub n: usize,
    pub omega: usize,
    pub m: usize,
}

impl TileRequest {
    /// Rows and columns of the union block `T_U`.
    pub fn union(&self) -> (Range<isize>, Range<isize>) {
        let width = (self.n - 1) * self.m + self.omega;
        (self.r..self.r + self.omega as isize, self.c..self.c + width as isize)
    }
}

/// An `ω × ω` tile of words, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WordTile {
    pub omega: usize,
    pub words: Vec<Word>,
}

impl WordTile {
    /// One lane of the tile as a matrix.
    pub fn lane(&self, lane: usize) -> Matrix {
        Matrix::from_fn(self.omega, self.omega, |a, b| self.words[a * self.omega + b][lane].clone())
    }
}

impl BramMatrix {
    pub fn new(map: AddressMap, lanes: usize, ih: usize) -> Self {
        let banks = vec![vec![None; map.depth]; map.h_b * map.w_b];
        BramMatrix { map, lanes, banks, rows: 0..0, ih }
    }

    pub fn map(&self) -> &AddressMap {
        &self.map
    }

    pub fn lanes(&self) -> usize {
        self.lanes
    }

    /// Store one word, recording the write.
    pub fn write(
        &mut self,
        cycle: u64,
        group: usize,
        r: usize,
        c: usize,
        word: Word,
        trace: &mut Vec<TraceRecord>,
    ) -> Result<()> {
        assert_eq!(word.len(), self.lanes);
        let loc = self.map.locate(group, r, c)?;
        self.banks[loc.h * self.map.w_b + loc.w][loc.addr] = Some(word);
        trace.push(TraceRecord { cycle, h: loc.h, w: loc.w, addr: loc.addr, op: Op::W });
        Ok(())
    }

    /// Load image rows `rows` of a batch of feature maps, `Q` channels per word.
    ///
    /// Writes are stamped with `cycle`; a real controller spreads them over
    /// the DDR transfer, which is timed separately.
    pub fn load_rows(
        &mut self,
        cycle: u64,
        images: &[Tensor],
        q: usize,
        rows: Range<isize>,
        trace: &mut Vec<TraceRecord>,
    ) -> Result<()> {
        let [id, ih, iw] = <[usize; 3]>::try_from(images[0].dims()).expect("3-D feature map");
        let b = images.len();
        for r in rows.start.max(0)..rows.end.min(ih as isize) {
            for g in 0..id.div_ceil(q) {
                for c in 0..iw {
                    let word: Word = (0..q)
                        .flat_map(|lane| {
                            let ch = g * q + lane;
                            images.iter().map(move |img| {
                                if ch < id {
                                    img.get(&[ch, r as usize, c]).clone()
                                } else {
                                    Scalar::zero()
                                }
                            })
                        })
                        .collect();
                    debug_assert_eq!(word.len(), q * b);
                    self.write(cycle, g, r as usize, c, word, trace)?;
                }
            }
        }
        let lo = if self.rows.is_empty() { rows.start } else { self.rows.start };
        self.rows = lo..rows.end.max(self.rows.end);
        if let Some(n) = self.map.ring_rows {
            let keep = self.rows.end - n as isize;
            if self.rows.start < keep {
                self.rows.start = keep;
            }
        }
        Ok(())
    }

    fn resident(&self, r: isize) -> bool {
        r >= 0 && (r as usize) < self.ih && self.rows.contains(&r)
    }

    /// Fetch `N` overlapping tiles in one bank cycle through the three-stage
    /// plane pipeline. Every pixel of `T_U` is read once; reads outside the
    /// image return zero without touching a bank.
    pub fn fetch_tiles(&self, cycle: u64, req: &TileRequest, trace: &mut Vec<TraceRecord>) -> Result<Vec<WordTile>> {
        let (h_b, w_b) = (self.map.h_b, self.map.w_b);
        let (rows, cols) = req.union();

        // Bank requests for this cycle; a second distinct address on one bank is a conflict.
        let mut requests: BTreeMap<(usize, usize), (usize, Pixel)> = BTreeMap::new();
        for r in rows.clone() {
            for c in cols.clone() {
                if !self.resident(r) || c < 0 || c as usize >= self.map.iw {
                    if r >= 0 && (r as usize) < self.ih && c >= 0 && (c as usize) < self.map.iw {
                        return Err(Error::Shape(format!("row {r} is not resident in the input buffer")));
                    }
                    continue;
                }
                let loc = self.map.locate(req.group, r as usize, c as usize)?;
                let pixel = (req.group, r, c);
                match requests.get(&(loc.h, loc.w)) {
                    Some(&(addr, first)) if addr != loc.addr => {
                        return Err(Error::BankConflict {
                            h: loc.h,
                            w: loc.w,
                            first: addr,
                            second: loc.addr,
                            first_pixel: first,
                            second_pixel: pixel,
                        })
                    }
                    Some(_) => {}
                    None => {
                        requests.insert((loc.h, loc.w), (loc.addr, pixel));
                    }
                }
            }
        }

        // Stage 1: latch the plane.
        let zero: Word = vec![Scalar::zero(); self.lanes];
        let mut plane: Vec<Option<&Word>> = vec![None; h_b * w_b];
        for (&(h, w), &(addr, _)) in &requests {
            plane[h * w_b + w] = self.banks[h * w_b + w][addr].as_ref();
            trace.push(TraceRecord { cycle, h, w, addr, op: Op::R });
        }

        // Stage 2: restore row order; stage 3: cut the plane into tiles.
        let row_sel: Vec<usize> = rows.clone().map(|r| r.rem_euclid(h_b as isize) as usize).collect();
        let mut tiles = Vec::with_capacity(req.n);
        for t in 0..req.n {
            let mut words = Vec::with_capacity(req.omega * req.omega);
            for (a, &h) in row_sel.iter().enumerate() {
                let r = rows.start + a as isize;
                for b in 0..req.omega {
                    let c = req.c + (t * req.m + b) as isize;
                    let w = c.rem_euclid(w_b as isize) as usize;
                    let inside = self.resident(r) && c >= 0 && (c as usize) < self.map.iw;
                    let word = if inside { plane[h * w_b + w].unwrap_or(&zero) } else { &zero };
                    words.push(word.clone());
                }
            }
            tiles.push(WordTile { omega: req.omega, words });
        }
        Ok(tiles)
    }
}

/// Transformed weights consumed by one systolic row for one (od block,
/// piece, channel group).
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightEntry {
    pub od_block: usize,
    pub piece: usize,
    pub group: usize,
    /// Output channel of this row, or `None` past `OD` (masked row).
    pub od: Option<usize>,
    pub channels: Range<usize>,
    /// Words delivered per cycle, `ω²·Q`.
    pub words: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct WeightFeed {
    /// Per systolic row, in consumption order.
    pub rows: Vec<Vec<WeightEntry>>,
    /// Raw weight words fetched from DDR per row-step iteration.
    pub ddr_words: usize,
    /// Largest number of entries a row holds at once.
    pub resident_entries: usize,
}

/// Weight buffer entries per systolic row (one BRAM depth).
pub const WEIGHT_BUFFER_DEPTH: usize = 1024;

/// Stream of weight entries for each systolic row in `OD/M`, (piece, group)
/// order.
#[allow(clippy::too_many_arguments)]
pub fn weight_buffer_feed(
    omega: usize,
    k: usize,
    pieces: usize,
    id: usize,
    od: usize,
    q: usize,
    big_m: usize,
    capacity: usize,
) -> Result<WeightFeed> {
    let groups = id.div_ceil(q);
    let resident = pieces * groups;
    if resident > capacity {
        return Err(Error::WeightOverflow { needed: resident, capacity });
    }
    let mut rows = vec![Vec::new(); big_m];
    for ob in 0..od.div_ceil(big_m) {
        for p in 0..pieces {
            for g in 0..groups {
                for (i, row) in rows.iter_mut().enumerate() {
                    let o = ob * big_m + i;
                    row.push(WeightEntry {
                        od_block: ob,
                        piece: p,
                        group: g,
                        od: (o < od).then_some(o),
                        channels: g * q..((g + 1) * q).min(id),
                        words: omega * omega * q,
                    });
                }
            }
        }
    }
    Ok(WeightFeed { rows, ddr_words: pieces * k * k * id * od, resident_entries: resident })
}

/// A buffer busy interval, `[start, end)` in cycles.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct BufferWindow {
    pub iteration: usize,
    pub buffer: usize,
    pub start: u64,
    pub end: u64,
    pub words: u64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PingPongReport {
    pub writes: Vec<BufferWindow>,
    pub drains: Vec<BufferWindow>,
    pub drained_words: u64,
    /// Cycle at which the final flush completes.
    pub end: u64,
}

/// Schedule output drains against compute windows.
///
/// Iteration `i` writes buffer `i mod 2` during `compute[i]`; its drain starts
/// once the buffers swap and must finish before that buffer is written again.
/// The drain of the last iteration is the flush.
pub fn output_pingpong(compute: &[(u64, u64)], words: &[u64], words_per_cycle: f64) -> Result<PingPongReport> {
    assert_eq!(compute.len(), words.len());
    let n = compute.len();
    let mut writes = Vec::with_capacity(n);
    let mut drains = Vec::with_capacity(n);
    for (i, (&(s, e), &w)) in compute.iter().zip(words).enumerate() {
        writes.push(BufferWindow { iteration: i, buffer: i % 2, start: s, end: e, words: w });
        let start = match compute.get(i + 1) {
            Some(&(ns, _)) => ns.max(e),
            None => e,
        };
        let len = if words_per_cycle.is_finite() { (w as f64 / words_per_cycle).ceil() as u64 } else { 0 };
        drains.push(BufferWindow { iteration: i, buffer: i % 2, start, end: start + len, words: w });
    }
    for d in &drains {
        for wr in &writes {
            if wr.buffer == d.buffer && wr.iteration != d.iteration && wr.start < d.end && d.start < wr.end {
                return Err(Error::PingPong { cycle: wr.start.max(d.start), buffer: d.buffer });
            }
        }
        let own = &writes[d.iteration];
        if d.start < own.end {
            return Err(Error::PingPong { cycle: d.start, buffer: d.buffer });
        }
    }
    let end = drains.iter().map(|d| d.end).max().unwrap_or(0);
    Ok(PingPongReport { writes, drained_words: words.iter().sum(), drains, end })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn worked_example_fields() {
        assert_eq!(map_address(4, 8, 3, 2, 5, 11), (1, 3, 1, 5));
        assert_eq!(map_address(4, 8, 1, 0, 0, 0), (0, 0, 0, 0));
        let map = AddressMap::new(4, 8, 3, 16, 64);
        let loc = map.locate(2, 5, 11).unwrap();
        assert_eq!((loc.h, loc.w, loc.high, loc.low), (1, 3, 1, 5));
        assert_eq!(loc.addr, (1 << 3) | 5);
    }

    #[test]
    fn capacity_error() {
        let map = AddressMap::new(4, 8, 1, 8, 2);
        assert!(map.locate(0, 4, 0).is_ok());
        assert!(matches!(map.locate(0, 8, 0), Err(Error::Capacity { addr: 2, depth: 2 })));
    }

    #[test]
    fn four_regions_in_worked_example() {
        let map = AddressMap::new(4, 8, 1, 16, 64);
        let mut regions = std::collections::BTreeSet::new();
        let mut banks = std::collections::BTreeSet::new();
        for r in 1..=4 {
            for c in 3..=8 {
                let l = map.locate(0, r, c).unwrap();
                regions.insert((l.high, l.low));
                assert!(banks.insert((l.h, l.w)));
            }
        }
        assert_eq!(regions.len(), 4);
    }

    #[test]
    fn fetch_origin_single_tile() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let img = Tensor::random_int(&[1, 8, 8], -9, 9, &mut rng);
        let map = AddressMap::new(4, 8, 1, 8, 64);
        let mut bram = BramMatrix::new(map, 1, 8);
        let mut trace = Vec::new();
        bram.load_rows(0, std::slice::from_ref(&img), 1, 0..8, &mut trace).unwrap();
        trace.clear();
        let req = TileRequest { group: 0, r: 0, c: 0, n: 1, omega: 4, m: 2 };
        let tiles = bram.fetch_tiles(7, &req, &mut trace).unwrap();
        let want = Matrix::from_fn(4, 4, |a, b| img.get(&[0, a, b]).clone());
        assert_eq!(tiles[0].lane(0), want);
        assert_eq!(trace.len(), 16);
        assert_eq!(trace[0].to_string(), "7, bank(0,0), 0, R");
    }

    #[test]
    fn weight_feed_counts() {
        let f = weight_buffer_feed(4, 3, 1, 8, 6, 4, 2, WEIGHT_BUFFER_DEPTH).unwrap();
        assert_eq!(f.ddr_words, 9 * 8 * 6);
        assert_eq!(f.rows[0].len(), 3 * 2);
        assert_eq!(f.rows[0][0].od, Some(0));
        assert_eq!(f.rows[1][0].od, Some(1));
        assert_eq!(f.rows[0][0].words, 64);
        assert!(matches!(weight_buffer_feed(4, 3, 9, 512, 1, 1, 1, 1024), Err(Error::WeightOverflow { .. })));
    }

    #[test]
    fn pingpong_overlap_and_flush() {
        let r = output_pingpong(&[(0, 10), (10, 20)], &[8, 8], 2.0).unwrap();
        assert_eq!((r.drains[0].start, r.drains[0].end), (10, 14));
        assert_eq!((r.drains[1].start, r.drains[1].end), (20, 24));
        assert_eq!(r.drained_words, 16);
        let r = output_pingpong(&[(0, 10)], &[8], 1.0).unwrap();
        assert_eq!((r.drains[0].start, r.end), (10, 18));
        // Drain of iteration 0 still running when iteration 2 reuses its buffer.
        assert!(matches!(
            output_pingpong(&[(0, 10), (10, 12), (12, 20)], &[100, 1, 1], 1.0),
            Err(Error::PingPong { buffer: 0, .. })
        ));
    }
}
