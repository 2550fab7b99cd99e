//! Data-parallel helpers. With the `parallel` feature (default) work is
//! spread over the rayon pool; without it everything runs on the calling
//! thread. Output order never depends on the execution strategy.

use crate::linalg::ComplexMatrix;

/// How grid evaluations and step products are executed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Execution {
    Sequential,
    #[cfg(feature = "parallel")]
    Parallel,
}

impl Default for Execution {
    fn default() -> Self {
        #[cfg(feature = "parallel")]
        {
            Execution::Parallel
        }
        #[cfg(not(feature = "parallel"))]
        {
            Execution::Sequential
        }
    }
}

impl Execution {
    /// `items.iter().map(f).collect()`, in input order.
    pub fn map<T, R, F>(self, items: &[T], f: F) -> Vec<R>
    where
        T: Sync,
        R: Send,
        F: Fn(&T) -> R + Sync + Send,
    {
        match self {
            Execution::Sequential => items.iter().map(f).collect(),
            #[cfg(feature = "parallel")]
            Execution::Parallel => {
                use rayon::prelude::*;
                items.par_iter().map(f).collect()
            }
        }
    }

    /// Like [`map`](Self::map) but stops at the first error (lowest index wins).
    pub fn try_map<T, R, E, F>(self, items: &[T], f: F) -> Result<Vec<R>, E>
    where
        T: Sync,
        R: Send,
        E: Send,
        F: Fn(&T) -> Result<R, E> + Sync + Send,
    {
        self.map(items, f).into_iter().collect()
    }

    /// `factor(n-1) · … · factor(1) · factor(0)`: the latest factor ends up
    /// left-most. `n = 0` yields the `dim x dim` identity.
    ///
    /// The index range is cut into contiguous chunks whose partial products
    /// are formed independently and then multiplied in order.
    pub fn try_ordered_product<E, F>(self, n: usize, dim: usize, factor: F) -> Result<ComplexMatrix, E>
    where
        E: Send,
        F: Fn(usize) -> Result<ComplexMatrix, E> + Sync + Send,
    {
        let chunks = self.chunk_count(n);
        let bounds: Vec<(usize, usize)> = (0..chunks)
            .map(|c| (c * n / chunks, (c + 1) * n / chunks))
            .filter(|(a, b)| a < b)
            .collect();
        let partials = self.try_map(&bounds, |&(a, b)| {
            let mut acc = factor(a)?;
            for k in a + 1..b {
                acc = &factor(k)? * &acc;
            }
            Ok(acc)
        })?;
        Ok(partials
            .into_iter()
            .reduce(|earlier, later| &later * &earlier)
            .unwrap_or_else(|| ComplexMatrix::identity(dim)))
    }

    /// Infallible form of [`try_ordered_product`](Self::try_ordered_product).
    pub fn ordered_product<F>(self, n: usize, dim: usize, factor: F) -> ComplexMatrix
    where
        F: Fn(usize) -> ComplexMatrix + Sync + Send,
    {
        self.try_ordered_product(n, dim, |k| Ok::<_, std::convert::Infallible>(factor(k)))
            .unwrap_or_else(|e| match e {})
    }

    #[cfg_attr(not(feature = "parallel"), allow(unused_variables))]
    fn chunk_count(self, n: usize) -> usize {
        match self {
            Execution::Sequential => 1,
            #[cfg(feature = "parallel")]
            Execution::Parallel => (4 * rayon::current_num_threads()).clamp(1, n.max(1)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testing::*;

    #[test]
    fn product_order_is_latest_left() {
        let mut r = rng(29);
        let factors: Vec<ComplexMatrix> = (0..37).map(|_| random_unitary(&mut r, 4)).collect();
        let manual = factors
            .iter()
            .fold(ComplexMatrix::identity(4), |acc, f| f * &acc);
        let seq = Execution::Sequential.ordered_product(factors.len(), 4, |k| factors[k].clone());
        assert!(seq.max_abs_diff(&manual) < 1e-13);
        let default = Execution::default().ordered_product(factors.len(), 4, |k| factors[k].clone());
        assert!(default.max_abs_diff(&manual) < 1e-12);
        let empty = Execution::default().ordered_product(0, 3, |_| unreachable!());
        assert_eq!(empty, ComplexMatrix::identity(3));
    }

    #[test]
    fn map_preserves_order() {
        let xs: Vec<u32> = (0..1000).collect();
        let ys = Execution::default().map(&xs, |x| x * 2);
        assert!(ys.iter().enumerate().all(|(i, &y)| y == 2 * i as u32));
        let err: Result<Vec<u32>, u32> = Execution::default().try_map(&xs, |&x| if x % 300 == 299 { Err(x) } else { Ok(x) });
        assert_eq!(err, Err(299));
    }
}
