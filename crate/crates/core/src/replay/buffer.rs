use rand::Rng;

use super::transition::MiniBatch;
use crate::error::{Error, Result};

/// Experience replay capacity.
pub const DEFAULT_CAPACITY: usize = 1_000_000;

/// Fixed-capacity ring that overwrites its oldest entry once full.
///
/// Slots are physical positions; chronological index 0 is always the oldest
/// surviving entry.
#[derive(Debug, Clone)]
pub struct ReplayBuffer<T> {
    items: Vec<T>,
    capacity: usize,
    next: usize,
    inserted: u64,
}

impl<T> ReplayBuffer<T> {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "replay capacity must be positive");
        Self {
            items: Vec::with_capacity(capacity.min(1 << 16)),
            capacity,
            next: 0,
            inserted: 0,
        }
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_full(&self) -> bool {
        self.items.len() == self.capacity
    }

    /// Total insertions since creation, including overwritten ones.
    pub fn inserted(&self) -> u64 {
        self.inserted
    }

    /// Stores `item` and returns the slot it landed in.
    pub fn push(&mut self, item: T) -> usize {
        let slot = self.next;
        if self.items.len() < self.capacity {
            self.items.push(item);
        } else {
            self.items[slot] = item;
        }
        self.next = (self.next + 1) % self.capacity;
        self.inserted += 1;
        slot
    }

    pub fn slot(&self, slot: usize) -> &T {
        &self.items[slot]
    }

    /// Physical slot of chronological index `i` (0 = oldest).
    pub fn slot_of(&self, i: usize) -> usize {
        debug_assert!(i < self.len());
        if self.is_full() {
            (self.next + i) % self.capacity
        } else {
            i
        }
    }

    /// Entry at chronological index `i` (0 = oldest).
    pub fn get(&self, i: usize) -> &T {
        &self.items[self.slot_of(i)]
    }

    /// Iterates from oldest to newest.
    pub fn iter(&self) -> impl Iterator<Item = &T> + '_ {
        (0..self.len()).map(move |i| self.get(i))
    }

    /// Physical slots holding the `count` most recent entries, as at most two
    /// contiguous half-open ranges.
    pub fn recent_slot_ranges(&self, count: usize) -> Vec<(usize, usize)> {
        let count = count.min(self.len());
        if count == 0 {
            return Vec::new();
        }
        if !self.is_full() {
            return vec![(self.len() - count, self.len())];
        }
        // `next` is one past the newest slot.
        if count <= self.next {
            vec![(self.next - count, self.next)]
        } else {
            let wrap = count - self.next;
            let mut ranges = vec![(self.capacity - wrap, self.capacity)];
            if self.next > 0 {
                ranges.push((0, self.next));
            }
            ranges
        }
    }

    /// `k` slot indices drawn uniformly with replacement.
    pub fn sample_slots<R: Rng + ?Sized>(&self, k: usize, rng: &mut R) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        Ok((0..k).map(|_| rng.random_range(0..self.len())).collect())
    }

    /// `k` slots drawn uniformly from the `count` most recent entries.
    pub fn sample_recent_slots<R: Rng + ?Sized>(
        &self,
        k: usize,
        count: usize,
        rng: &mut R,
    ) -> Result<Vec<usize>> {
        if self.is_empty() {
            return Err(Error::EmptyBuffer);
        }
        let count = count.clamp(1, self.len());
        Ok((0..k)
            .map(|_| {
                let offset = rng.random_range(0..count);
                self.slot_of(self.len() - count + offset)
            })
            .collect())
    }
}

impl<T: Clone> ReplayBuffer<T> {
    pub fn gather(&self, slots: &[usize]) -> MiniBatch<T> {
        slots.iter().map(|&s| self.items[s].clone()).collect()
    }
}

/// `k` independent uniform draws with replacement.
pub fn sample_uniform<T: Clone, R: Rng + ?Sized>(
    buffer: &ReplayBuffer<T>,
    k: usize,
    rng: &mut R,
) -> Result<MiniBatch<T>> {
    let slots = buffer.sample_slots(k, rng)?;
    Ok(buffer.gather(&slots))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn single_element_is_repeated() {
        let mut b = ReplayBuffer::new(10);
        b.push(7u32);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_uniform(&b, 3, &mut rng).unwrap(), vec![7, 7, 7]);
    }

    #[test]
    fn empty_buffer_is_unavailable() {
        let b: ReplayBuffer<u32> = ReplayBuffer::new(4);
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert_eq!(sample_uniform(&b, 1, &mut rng), Err(Error::EmptyBuffer));
    }

    #[test]
    fn batch_has_requested_size() {
        let mut b = ReplayBuffer::new(1000);
        (0..800).for_each(|i| {
            b.push(i);
        });
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert_eq!(sample_uniform(&b, 50, &mut rng).unwrap().len(), 50);
    }

    #[test]
    fn uniform_frequencies() {
        let mut b = ReplayBuffer::new(10);
        (0..10).for_each(|i| {
            b.push(i as usize);
        });
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut counts = [0usize; 10];
        let draws = 1_000_000;
        for _ in 0..draws / 50 {
            for v in sample_uniform(&b, 50, &mut rng).unwrap() {
                counts[v] += 1;
            }
        }
        for c in counts {
            assert!((c as f64 / draws as f64 - 0.1).abs() < 0.01);
        }
    }

    #[test]
    fn recent_ranges_cover_newest_entries() {
        let mut b = ReplayBuffer::new(5);
        (0..7).for_each(|i| {
            b.push(i);
        });
        // Holds 2..=6; newest three are 4, 5, 6.
        let mut seen: Vec<i32> = b
            .recent_slot_ranges(3)
            .into_iter()
            .flat_map(|(lo, hi)| lo..hi)
            .map(|s| *b.slot(s))
            .collect();
        seen.sort();
        assert_eq!(seen, vec![4, 5, 6]);
        assert_eq!(
            b.recent_slot_ranges(5)
                .iter()
                .map(|(l, h)| h - l)
                .sum::<usize>(),
            5
        );
    }

    proptest! {
        #[test]
        fn iteration_is_chronological(cap in 1usize..20, n in 0usize..60) {
            let mut b = ReplayBuffer::new(cap);
            for i in 0..n { b.push(i); }
            let kept: Vec<usize> = b.iter().copied().collect();
            let expected: Vec<usize> = (n.saturating_sub(cap)..n).collect();
            prop_assert_eq!(kept, expected);
            prop_assert!(b.len() <= cap);
        }

        #[test]
        fn recent_samples_stay_in_window(cap in 1usize..30, n in 1usize..80, count in 1usize..30, seed in 0u64..1000) {
            let mut b = ReplayBuffer::new(cap);
            for i in 0..n { b.push(i); }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let c = count.min(b.len());
            for s in b.sample_recent_slots(20, count, &mut rng).unwrap() {
                prop_assert!(*b.slot(s) >= n - c);
            }
        }
    }
}
