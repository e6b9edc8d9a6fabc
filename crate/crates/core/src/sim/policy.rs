use std::collections::VecDeque;

use rand::Rng;

use crate::che::CachePolicy;

const NIL: usize = usize::MAX;

/// A fixed-size cache of integer file ids.
pub trait EvictionPolicy {
    /// Serves one request: returns whether it hit and, on a miss, inserts
    /// the file (evicting one if full).
    fn access<R: Rng + ?Sized>(&mut self, file: usize, rng: &mut R) -> bool;

    fn len(&self) -> usize;

    fn capacity(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Recency list threaded through per-file `prev`/`next` arrays.
#[derive(Debug, Clone)]
pub struct Lru {
    capacity: usize,
    prev: Vec<usize>,
    next: Vec<usize>,
    cached: Vec<bool>,
    head: usize,
    tail: usize,
    len: usize,
}

impl Lru {
    pub fn new(capacity: usize, catalog: usize) -> Self {
        Self {
            capacity,
            prev: vec![NIL; catalog],
            next: vec![NIL; catalog],
            cached: vec![false; catalog],
            head: NIL,
            tail: NIL,
            len: 0,
        }
    }

    fn unlink(&mut self, f: usize) {
        let (p, n) = (self.prev[f], self.next[f]);
        if p == NIL {
            self.head = n;
        } else {
            self.next[p] = n;
        }
        if n == NIL {
            self.tail = p;
        } else {
            self.prev[n] = p;
        }
        self.prev[f] = NIL;
        self.next[f] = NIL;
    }

    fn push_front(&mut self, f: usize) {
        self.next[f] = self.head;
        self.prev[f] = NIL;
        if self.head != NIL {
            self.prev[self.head] = f;
        }
        self.head = f;
        if self.tail == NIL {
            self.tail = f;
        }
    }

    /// Files from most to least recently used.
    pub fn order(&self) -> Vec<usize> {
        let mut out = Vec::with_capacity(self.len);
        let mut cur = self.head;
        while cur != NIL {
            out.push(cur);
            cur = self.next[cur];
        }
        out
    }
}

impl EvictionPolicy for Lru {
    fn access<R: Rng + ?Sized>(&mut self, file: usize, _rng: &mut R) -> bool {
        if self.capacity == 0 {
            return false;
        }
        if self.cached[file] {
            if self.head != file {
                self.unlink(file);
                self.push_front(file);
            }
            return true;
        }
        if self.len == self.capacity {
            let victim = self.tail;
            self.unlink(victim);
            self.cached[victim] = false;
            self.len -= 1;
        }
        self.push_front(file);
        self.cached[file] = true;
        self.len += 1;
        false
    }

    fn len(&self) -> usize {
        self.len
    }

    fn capacity(&self) -> usize {
        self.capacity
    }
}

#[derive(Debug, Clone)]
pub struct Fifo {
    capacity: usize,
    queue: VecDeque<usize>,
    cached: Vec<bool>,
}

impl Fifo {
    pub fn new(capacity: usize, catalog: usize) -> Self {
        Self {
            capacity,
            queue: VecDeque::with_capacity(capacity),
            cached: vec![false; catalog],
        }
    }
}

impl EvictionPolicy for Fifo {
    fn access<R: Rng + ?Sized>(&mut self, file: usize, _rng: &mut R) -> bool {
        if self.capacity == 0 {
            return false;
        }
        if self.cached[file] {
            return true;
        }
        if self.queue.len() == self.capacity {
            let victim = self.queue.pop_front().expect("full queue");
            self.cached[victim] = false;
        }
        self.queue.push_back(file);
        self.cached[file] = true;
        false
    }

    fn len(&self) -> usize {
        self.queue.len()
    }

    fn capacity(&self) -> usize {
        self.capacity
    }
}

/// Slot array with a uniformly chosen victim.
#[derive(Debug, Clone)]
pub struct Random {
    capacity: usize,
    slots: Vec<usize>,
    position: Vec<usize>,
}

impl Random {
    pub fn new(capacity: usize, catalog: usize) -> Self {
        Self {
            capacity,
            slots: Vec::with_capacity(capacity),
            position: vec![NIL; catalog],
        }
    }
}

impl EvictionPolicy for Random {
    fn access<R: Rng + ?Sized>(&mut self, file: usize, rng: &mut R) -> bool {
        if self.capacity == 0 {
            return false;
        }
        if self.position[file] != NIL {
            return true;
        }
        if self.slots.len() == self.capacity {
            let slot = rng.random_range(0..self.capacity);
            let victim = self.slots[slot];
            self.position[victim] = NIL;
            self.slots[slot] = file;
            self.position[file] = slot;
        } else {
            self.position[file] = self.slots.len();
            self.slots.push(file);
        }
        false
    }

    fn len(&self) -> usize {
        self.slots.len()
    }

    fn capacity(&self) -> usize {
        self.capacity
    }
}

/// Any of the three policies behind one type.
#[derive(Debug, Clone)]
pub enum AnyPolicy {
    Lru(Lru),
    Fifo(Fifo),
    Random(Random),
}

impl AnyPolicy {
    pub fn new(policy: CachePolicy, capacity: usize, catalog: usize) -> Self {
        match policy {
            CachePolicy::Lru => Self::Lru(Lru::new(capacity, catalog)),
            CachePolicy::Fifo => Self::Fifo(Fifo::new(capacity, catalog)),
            CachePolicy::Random => Self::Random(Random::new(capacity, catalog)),
        }
    }
}

impl EvictionPolicy for AnyPolicy {
    fn access<R: Rng + ?Sized>(&mut self, file: usize, rng: &mut R) -> bool {
        match self {
            Self::Lru(c) => c.access(file, rng),
            Self::Fifo(c) => c.access(file, rng),
            Self::Random(c) => c.access(file, rng),
        }
    }

    fn len(&self) -> usize {
        match self {
            Self::Lru(c) => c.len(),
            Self::Fifo(c) => c.len(),
            Self::Random(c) => c.len(),
        }
    }

    fn capacity(&self) -> usize {
        match self {
            Self::Lru(c) => c.capacity(),
            Self::Fifo(c) => c.capacity(),
            Self::Random(c) => c.capacity(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lru_evicts_least_recent() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = Lru::new(2, 5);
        assert!(!c.access(0, &mut rng));
        assert!(!c.access(1, &mut rng));
        assert!(c.access(0, &mut rng));
        assert!(!c.access(2, &mut rng));
        assert_eq!(c.order(), vec![2, 0]);
        assert!(!c.access(1, &mut rng));
        assert_eq!(c.order(), vec![1, 2]);
    }

    #[test]
    fn fifo_ignores_hits_when_evicting() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut c = Fifo::new(2, 5);
        c.access(0, &mut rng);
        c.access(1, &mut rng);
        assert!(c.access(0, &mut rng));
        c.access(2, &mut rng);
        assert!(!c.access(0, &mut rng));
        assert!(c.access(2, &mut rng));
    }

    #[test]
    fn random_keeps_size_and_index_consistent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut c = Random::new(3, 10);
        for i in 0..1000 {
            c.access(i * 7 % 10, &mut rng);
            assert!(c.len() <= 3);
            for (slot, &f) in c.slots.iter().enumerate() {
                assert_eq!(c.position[f], slot);
            }
        }
        assert_eq!(c.position.iter().filter(|&&p| p != NIL).count(), 3);
    }

    #[test]
    fn zero_capacity_never_hits() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for policy in CachePolicy::ALL {
            let mut c = AnyPolicy::new(policy, 0, 4);
            assert!(!c.access(1, &mut rng));
            assert!(!c.access(1, &mut rng));
            assert!(c.is_empty());
        }
    }
}
