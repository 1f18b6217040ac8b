//! Ordered map over independent sweep points.
//!
//! With the `parallel` feature the points are distributed over the rayon
//! pool; without it every request runs sequentially. Results are returned
//! in input order either way.

/// How sweep points are scheduled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Execution {
    Sequential,
    #[default]
    Parallel,
}

impl Execution {
    /// Whether `Parallel` actually runs on a thread pool in this build.
    pub fn parallel_available() -> bool {
        cfg!(feature = "parallel")
    }
}

pub fn map_indexed<I, T, F>(items: &[I], exec: Execution, f: F) -> Vec<T>
where
    I: Sync,
    T: Send,
    F: Fn(usize, &I) -> T + Sync + Send,
{
    match exec {
        #[cfg(feature = "parallel")]
        Execution::Parallel => {
            use rayon::prelude::*;
            items.par_iter().enumerate().map(|(i, x)| f(i, x)).collect()
        }
        _ => items.iter().enumerate().map(|(i, x)| f(i, x)).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_is_preserved() {
        let xs: Vec<u64> = (0..1000).collect();
        let seq = map_indexed(&xs, Execution::Sequential, |i, x| i as u64 * 3 + x);
        let par = map_indexed(&xs, Execution::Parallel, |i, x| i as u64 * 3 + x);
        assert_eq!(seq, par);
        assert_eq!(seq[10], 40);
    }
}
