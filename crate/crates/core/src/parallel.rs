//! Data-parallel map over sample indices.
//!
//! With the `parallel` feature, [`Execution::Parallel`] fans work out over
//! the rayon pool; without it every mode runs sequentially. Results are
//! always returned in index order, so both modes are bit-identical.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether this build can actually run `Parallel` concurrently.
    pub const fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

pub fn map_indexed<R, F>(n: usize, exec: Execution, f: F) -> Vec<R>
where
    R: Send,
    F: Fn(usize) -> R + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            (0..n).into_par_iter().map(f).collect()
        }
        _ => (0..n).map(f).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn modes_agree_and_preserve_order() {
        let f = |i: usize| (i as f64).sqrt().sin();
        let a = map_indexed(1000, Execution::Sequential, f);
        let b = map_indexed(1000, Execution::Parallel, f);
        assert_eq!(a, b);
        assert_eq!(a[7], f(7));
    }
}
