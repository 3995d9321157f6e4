use std::collections::HashMap;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Mutex;

use super::CiBackend;
use crate::graph::{CiTriple, VertexSet};

/// Memoizes another backend on the canonical `(min(j,k), max(j,k), S)` key.
pub struct CachedBackend<B> {
    inner: B,
    memo: Mutex<HashMap<CiTriple, bool>>,
    hits: AtomicU64,
    misses: AtomicU64,
}

impl<B: CiBackend> CachedBackend<B> {
    pub fn new(inner: B) -> Self {
        CachedBackend {
            inner,
            memo: Mutex::new(HashMap::new()),
            hits: AtomicU64::new(0),
            misses: AtomicU64::new(0),
        }
    }

    pub fn inner(&self) -> &B {
        &self.inner
    }

    /// `(hits, misses)` so far.
    pub fn stats(&self) -> (u64, u64) {
        (self.hits.load(Ordering::Relaxed), self.misses.load(Ordering::Relaxed))
    }
}

impl<B: CiBackend> CiBackend for CachedBackend<B> {
    fn p(&self) -> usize {
        self.inner.p()
    }

    fn is_independent(&self, j: usize, k: usize, s: VertexSet) -> bool {
        let key = CiTriple::new(j, k, s);
        if let Some(&v) = self.memo.lock().unwrap().get(&key) {
            self.hits.fetch_add(1, Ordering::Relaxed);
            return v;
        }
        // evaluated outside the lock; a racing duplicate computes the same answer
        let v = self.inner.is_independent(key.j, key.k, key.s);
        self.misses.fetch_add(1, Ordering::Relaxed);
        self.memo.lock().unwrap().insert(key, v);
        v
    }
}
