//! Binary sum tree over buffer slots for proportional sampling.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct SumTree {
    capacity: usize,
    leaves: usize,
    // nodes[1] is the root; leaf for slot i lives at nodes[leaves + i].
    nodes: Vec<f64>,
}

impl SumTree {
    pub fn new(capacity: usize) -> Self {
        assert!(capacity > 0, "sum tree capacity must be positive");
        let leaves = capacity.next_power_of_two();
        Self {
            capacity,
            leaves,
            nodes: vec![0.0; 2 * leaves],
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn total(&self) -> f64 {
        self.nodes[1]
    }

    pub fn get(&self, slot: usize) -> f64 {
        self.nodes[self.leaves + slot]
    }

    /// Sets a leaf and recomputes every ancestor from its children.
    pub fn set(&mut self, slot: usize, value: f64) {
        assert!(slot < self.capacity, "slot {slot} out of range");
        assert!(
            value >= 0.0 && value.is_finite(),
            "invalid priority {value}"
        );
        let mut i = self.leaves + slot;
        self.nodes[i] = value;
        while i > 1 {
            i /= 2;
            self.nodes[i] = self.nodes[2 * i] + self.nodes[2 * i + 1];
        }
    }

    /// Sum of leaves in `0..slot`.
    pub fn prefix_sum(&self, slot: usize) -> f64 {
        if slot >= self.leaves {
            return self.total();
        }
        let mut sum = 0.0;
        let mut i = self.leaves + slot;
        while i > 1 {
            if i % 2 == 1 {
                sum += self.nodes[i - 1];
            }
            i /= 2;
        }
        sum
    }

    pub fn range_sum(&self, lo: usize, hi: usize) -> f64 {
        (self.prefix_sum(hi) - self.prefix_sum(lo)).max(0.0)
    }

    /// Slot whose cumulative interval contains `mass`, skipping empty
    /// subtrees so that a positive-priority leaf is always returned.
    pub fn find(&self, mass: f64) -> Result<usize> {
        if self.total() <= 0.0 {
            return Err(Error::Internal("sum tree has no mass".into()));
        }
        let mut u = mass.max(0.0);
        let mut i = 1;
        while i < self.leaves {
            let left = self.nodes[2 * i];
            let right = self.nodes[2 * i + 1];
            if (u < left && left > 0.0) || right <= 0.0 {
                i *= 2;
            } else {
                u -= left;
                i = 2 * i + 1;
            }
        }
        let slot = i - self.leaves;
        if slot >= self.capacity {
            return Err(Error::Internal(format!(
                "sum tree descended to slot {slot}"
            )));
        }
        Ok(slot)
    }

    /// Checks that every internal node equals the sum of its children.
    pub fn is_consistent(&self, tolerance: f64) -> bool {
        (1..self.leaves)
            .all(|i| (self.nodes[i] - self.nodes[2 * i] - self.nodes[2 * i + 1]).abs() <= tolerance)
    }

    pub fn leaf_sum(&self) -> f64 {
        self.nodes[self.leaves..].iter().sum()
    }
}
