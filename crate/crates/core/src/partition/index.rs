//! Prefix-sum index over occupied block sizes.

use rustc_hash::FxHashMap;

/// Sizes below this are mapped through a flat array.
const DENSE_SIZES: usize = 1024;
const NO_SLOT: u32 = u32::MAX;

/// Counts `K_r` for every occupied size `r`, with two Fenwick trees over
/// `r·K_r` and `K_r` so the join weight `Σ (r−α) K_r` of any prefix is exact
/// integer arithmetic followed by one multiply.
///
/// Each occupied size owns a slot; freed slots are recycled, so memory is
/// proportional to the number of distinct sizes rather than the largest block.
#[derive(Debug, Clone)]
pub struct SizeClassIndex {
    cap: usize,
    fen_rk: Vec<u64>,
    fen_k: Vec<u64>,
    slot_size: Vec<u64>,
    slot_count: Vec<u64>,
    free: Vec<u32>,
    dense: Vec<u32>,
    sparse: FxHashMap<u64, u32>,
    total_rk: u64,
    total_k: u64,
}

impl Default for SizeClassIndex {
    fn default() -> Self {
        Self::new()
    }
}

impl SizeClassIndex {
    pub fn new() -> Self {
        let cap = 16;
        Self {
            cap,
            fen_rk: vec![0; cap + 1],
            fen_k: vec![0; cap + 1],
            slot_size: vec![0; cap],
            slot_count: vec![0; cap],
            free: (0..cap as u32).rev().collect(),
            dense: vec![NO_SLOT; DENSE_SIZES],
            sparse: FxHashMap::default(),
            total_rk: 0,
            total_k: 0,
        }
    }

    /// `Σ_r r·K_r`, i.e. `n`.
    #[inline]
    pub fn total_elements(&self) -> u64 {
        self.total_rk
    }

    /// `Σ_r K_r`, i.e. `K_n`.
    #[inline]
    pub fn total_blocks(&self) -> u64 {
        self.total_k
    }

    /// `Σ_r (r−α) K_r = n − αK_n`.
    #[inline]
    pub fn total_weight(&self, alpha: f64) -> f64 {
        self.total_rk as f64 - alpha * self.total_k as f64
    }

    fn slot_of(&self, r: u64) -> Option<usize> {
        let s = if (r as usize) < DENSE_SIZES {
            self.dense[r as usize]
        } else {
            *self.sparse.get(&r)?
        };
        (s != NO_SLOT).then_some(s as usize)
    }

    /// `K_r`.
    #[inline]
    pub fn count(&self, r: u64) -> u64 {
        self.slot_of(r).map_or(0, |s| self.slot_count[s])
    }

    /// Occupied `(r, K_r)` pairs in no particular order.
    pub fn occupied(&self) -> impl Iterator<Item = (u64, u64)> + '_ {
        self.slot_size
            .iter()
            .zip(&self.slot_count)
            .filter(|(_, &c)| c > 0)
            .map(|(&r, &c)| (r, c))
    }

    pub fn distinct_sizes(&self) -> usize {
        self.cap - self.free.len()
    }

    fn fen_add(&mut self, slot: usize, d_rk: i64, d_k: i64) {
        let mut i = slot + 1;
        while i <= self.cap {
            self.fen_rk[i] = self.fen_rk[i].wrapping_add_signed(d_rk);
            self.fen_k[i] = self.fen_k[i].wrapping_add_signed(d_k);
            i += i & i.wrapping_neg();
        }
    }

    fn grow(&mut self) {
        let old = self.cap;
        self.cap *= 2;
        self.slot_size.resize(self.cap, 0);
        self.slot_count.resize(self.cap, 0);
        self.free.extend((old as u32..self.cap as u32).rev());
        self.fen_rk = vec![0; self.cap + 1];
        self.fen_k = vec![0; self.cap + 1];
        // linear-time Fenwick build
        for s in 0..self.cap {
            let i = s + 1;
            self.fen_rk[i] += self.slot_size[s] * self.slot_count[s];
            self.fen_k[i] += self.slot_count[s];
            let j = i + (i & i.wrapping_neg());
            if j <= self.cap {
                self.fen_rk[j] += self.fen_rk[i];
                self.fen_k[j] += self.fen_k[i];
            }
        }
    }

    fn map_set(&mut self, r: u64, slot: u32) {
        if (r as usize) < DENSE_SIZES {
            self.dense[r as usize] = slot;
        } else if slot == NO_SLOT {
            self.sparse.remove(&r);
        } else {
            self.sparse.insert(r, slot);
        }
    }

    /// Adds one block of size `r`.
    pub fn insert(&mut self, r: u64) {
        debug_assert!(r >= 1);
        let slot = match self.slot_of(r) {
            Some(s) => s,
            None => {
                if self.free.is_empty() {
                    self.grow();
                }
                let s = self.free.pop().expect("free slot after growth");
                self.slot_size[s as usize] = r;
                self.map_set(r, s);
                s as usize
            }
        };
        self.slot_count[slot] += 1;
        self.fen_add(slot, r as i64, 1);
        self.total_rk += r;
        self.total_k += 1;
    }

    /// Removes one block of size `r`; panics if none exists.
    pub fn remove(&mut self, r: u64) {
        let slot = self.slot_of(r).unwrap_or_else(|| panic!("no block of size {r}"));
        self.slot_count[slot] -= 1;
        self.fen_add(slot, -(r as i64), -1);
        self.total_rk -= r;
        self.total_k -= 1;
        if self.slot_count[slot] == 0 {
            self.map_set(r, NO_SLOT);
            self.slot_size[slot] = 0;
            self.free.push(slot as u32);
        }
    }

    /// Size class `r` selected with probability proportional to `(r−α)K_r`,
    /// given `target ∈ [0, n − αK_n)`.
    pub fn find(&self, target: f64, alpha: f64) -> u64 {
        let mut pos = 0usize;
        let (mut acc_rk, mut acc_k) = (0u64, 0u64);
        let mut step = self.cap.next_power_of_two();
        while step > 0 {
            let next = pos + step;
            if next <= self.cap {
                let rk = acc_rk + self.fen_rk[next];
                let k = acc_k + self.fen_k[next];
                if rk as f64 - alpha * k as f64 <= target {
                    pos = next;
                    acc_rk = rk;
                    acc_k = k;
                }
            }
            step >>= 1;
        }
        // `pos` is the 0-based slot whose prefix first exceeds the target;
        // rounding at the upper edge can overshoot onto trailing empty slots.
        if pos < self.cap && self.slot_count[pos] > 0 {
            return self.slot_size[pos];
        }
        (0..self.cap.min(pos + 1))
            .rev()
            .find(|&s| self.slot_count[s] > 0)
            .map(|s| self.slot_size[s])
            .expect("find on an empty index")
    }
}
