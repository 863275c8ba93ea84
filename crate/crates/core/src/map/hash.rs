//! Spatial hash and the region table built on it.

use super::index::RegionIndex;

const EMPTY: u32 = u32::MAX;
const MAX_LOAD: f64 = 0.75;

/// `((x * n_x) xor (y * n_y) xor (z * n_z)) mod N`.
///
/// Signed coordinates are reinterpreted as `u32` (two's complement) and
/// multiplied in `u64`; with primes below `2^32` the products cannot overflow.
pub fn hash_index(key: [i32; 3], primes: &[u64; 3], buckets: usize) -> usize {
    debug_assert!(buckets > 0);
    let h = (key[0] as u32 as u64 * primes[0])
        ^ (key[1] as u32 as u64 * primes[1])
        ^ (key[2] as u32 as u64 * primes[2]);
    (h % buckets as u64) as usize
}

struct Slot<V> {
    key: RegionIndex,
    next: u32,
    value: V,
}

/// Separate-chaining hash table keyed by region index.
///
/// Buckets hold the head of an intrusive chain through a dense slot vector,
/// so lookups compare full keys and colliding regions stay distinct.
/// Region indices are hashed in region units (`I_r >> shift`) because their
/// low `shift` bits are always zero.
pub struct RegionTable<V> {
    heads: Vec<u32>,
    slots: Vec<Slot<V>>,
    primes: [u64; 3],
    shift: u32,
}

impl<V> RegionTable<V> {
    pub fn new(buckets: usize, primes: [u64; 3], shift: u32) -> Self {
        let buckets = buckets.max(1);
        Self {
            heads: vec![EMPTY; buckets],
            slots: Vec::new(),
            primes,
            shift,
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn bucket_count(&self) -> usize {
        self.heads.len()
    }

    pub fn bucket_of(&self, key: &RegionIndex) -> usize {
        let coarse = [
            key.x >> self.shift,
            key.y >> self.shift,
            key.z >> self.shift,
        ];
        hash_index(coarse, &self.primes, self.heads.len())
    }

    fn find(&self, key: &RegionIndex) -> Option<usize> {
        let mut cur = self.heads[self.bucket_of(key)];
        while cur != EMPTY {
            let slot = &self.slots[cur as usize];
            if slot.key == *key {
                return Some(cur as usize);
            }
            cur = slot.next;
        }
        None
    }

    pub fn contains_key(&self, key: &RegionIndex) -> bool {
        self.find(key).is_some()
    }

    pub fn get(&self, key: &RegionIndex) -> Option<&V> {
        self.find(key).map(|i| &self.slots[i].value)
    }

    pub fn get_mut(&mut self, key: &RegionIndex) -> Option<&mut V> {
        self.find(key).map(move |i| &mut self.slots[i].value)
    }

    /// Returns the value for `key`, inserting `make()` first if absent.
    /// The flag is true when a new entry was created.
    pub fn get_or_insert_with(&mut self, key: RegionIndex, make: impl FnOnce() -> V) -> (&mut V, bool) {
        if let Some(i) = self.find(&key) {
            return (&mut self.slots[i].value, false);
        }
        if (self.slots.len() + 1) as f64 > MAX_LOAD * self.heads.len() as f64 {
            self.grow();
        }
        let b = self.bucket_of(&key);
        let idx = self.slots.len() as u32;
        self.slots.push(Slot {
            key,
            next: self.heads[b],
            value: make(),
        });
        self.heads[b] = idx;
        (&mut self.slots[idx as usize].value, true)
    }

    pub fn remove(&mut self, key: &RegionIndex) -> Option<V> {
        let b = self.bucket_of(key);
        let mut prev = EMPTY;
        let mut cur = self.heads[b];
        while cur != EMPTY && self.slots[cur as usize].key != *key {
            prev = cur;
            cur = self.slots[cur as usize].next;
        }
        if cur == EMPTY {
            return None;
        }
        let next = self.slots[cur as usize].next;
        if prev == EMPTY {
            self.heads[b] = next;
        } else {
            self.slots[prev as usize].next = next;
        }

        // Move the last slot into the hole and repoint whatever linked to it.
        let last = (self.slots.len() - 1) as u32;
        if cur != last {
            let moved_bucket = self.bucket_of(&self.slots[last as usize].key);
            if self.heads[moved_bucket] == last {
                self.heads[moved_bucket] = cur;
            } else {
                let mut p = self.heads[moved_bucket];
                while self.slots[p as usize].next != last {
                    p = self.slots[p as usize].next;
                }
                self.slots[p as usize].next = cur;
            }
        }
        Some(self.slots.swap_remove(cur as usize).value)
    }

    fn grow(&mut self) {
        let buckets = self.heads.len() * 2;
        self.heads = vec![EMPTY; buckets];
        for i in 0..self.slots.len() {
            let b = self.bucket_of(&self.slots[i].key);
            self.slots[i].next = self.heads[b];
            self.heads[b] = i as u32;
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (&RegionIndex, &V)> {
        self.slots.iter().map(|s| (&s.key, &s.value))
    }

    pub fn keys(&self) -> impl Iterator<Item = &RegionIndex> {
        self.slots.iter().map(|s| &s.key)
    }

    /// Length of the longest bucket chain.
    pub fn max_chain(&self) -> usize {
        self.heads
            .iter()
            .map(|&h| {
                let mut n = 0;
                let mut cur = h;
                while cur != EMPTY {
                    n += 1;
                    cur = self.slots[cur as usize].next;
                }
                n
            })
            .max()
            .unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::map::config::DEFAULT_PRIMES;

    #[test]
    fn zero_hashes_to_zero() {
        assert_eq!(hash_index([0, 0, 0], &DEFAULT_PRIMES, 1 << 20), 0);
    }

    #[test]
    fn unit_x_is_prime_mod_n() {
        // 73856093 = 70 * 2^20 + 455773
        assert_eq!(70 * (1u64 << 20) + 455_773, 73_856_093);
        assert_eq!(hash_index([1, 0, 0], &DEFAULT_PRIMES, 1 << 20), 455_773);
    }

    #[test]
    fn remove_keeps_chains_consistent() {
        // A tiny table forces long chains and swap-removal across buckets.
        let mut t: RegionTable<i32> = RegionTable::new(4, DEFAULT_PRIMES, 0);
        let keys: Vec<RegionIndex> = (0..40).map(|i| RegionIndex::new(i, -i, i * 3)).collect();
        for (i, k) in keys.iter().enumerate() {
            t.get_or_insert_with(*k, || i as i32);
        }
        for k in keys.iter().step_by(3) {
            assert!(t.remove(k).is_some());
            assert!(t.remove(k).is_none());
        }
        for (i, k) in keys.iter().enumerate() {
            if i % 3 == 0 {
                assert!(t.get(k).is_none());
            } else {
                assert_eq!(t.get(k), Some(&(i as i32)));
            }
        }
        assert_eq!(t.len(), keys.len() - keys.len().div_ceil(3));
    }

    #[test]
    fn grows_past_load_factor() {
        let mut t: RegionTable<()> = RegionTable::new(8, DEFAULT_PRIMES, 0);
        for i in 0..100 {
            t.get_or_insert_with(RegionIndex::new(i, 0, 0), || ());
        }
        assert!(t.len() as f64 <= 0.75 * t.bucket_count() as f64);
        assert_eq!(t.bucket_count(), 256);
    }
}
