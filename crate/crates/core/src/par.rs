//! Switch between rayon and plain iterators with the `parallel` feature.

#[cfg(feature = "parallel")]
pub use rayon::prelude::*;

#[cfg(feature = "parallel")]
pub trait MaybeParIter: IntoParallelIterator {
    fn maybe_par_iter(self) -> Self::Iter;
}

#[cfg(feature = "parallel")]
impl<T: IntoParallelIterator> MaybeParIter for T {
    fn maybe_par_iter(self) -> Self::Iter {
        self.into_par_iter()
    }
}

#[cfg(not(feature = "parallel"))]
pub trait MaybeParIter: IntoIterator {
    fn maybe_par_iter(self) -> Self::IntoIter;
}

#[cfg(not(feature = "parallel"))]
impl<T: IntoIterator> MaybeParIter for T {
    fn maybe_par_iter(self) -> Self::IntoIter {
        self.into_iter()
    }
}

/// Map `f` over `items`, in parallel when the feature is enabled. Output order
/// always matches input order.
pub fn map_ordered<T, U, F>(items: &[T], f: F) -> Vec<U>
where
    T: Sync,
    U: Send,
    F: Fn(&T) -> U + Sync + Send,
{
    items.maybe_par_iter().map(f).collect()
}

/// Number of worker threads in use.
pub fn threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
