//! Sample-level parallelism with order-preserving collection.

/// Number of worker threads; `0` means the available parallelism.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct Workers(pub usize);

impl Workers {
    pub fn serial() -> Self {
        Workers(1)
    }

    pub fn resolved(&self) -> usize {
        if self.0 > 0 {
            self.0
        } else {
            std::thread::available_parallelism().map_or(1, |n| n.get())
        }
    }

    /// Applies `f` to every item; the output order matches `items` no matter
    /// how the work was scheduled.
    pub fn map<T, R, F>(&self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        #[cfg(feature = "parallel")]
        {
            let threads = self.resolved();
            if threads > 1 && items.len() > 1 {
                use rayon::prelude::*;
                if let Ok(pool) = rayon::ThreadPoolBuilder::new().num_threads(threads).build() {
                    return pool.install(|| items.par_iter().map(&f).collect());
                }
            }
        }
        items.iter().map(f).collect()
    }
}
