//! Deterministic pairwise reduction.
//!
//! The input is cut into fixed blocks of [`BLOCK`] elements that are summed
//! left to right; block sums are then combined by recursive halving. The
//! association order depends only on the input length, so results are
//! reproducible bit for bit, and the rounding error grows like `O(log n)`.

use std::ops::Add;

use num_traits::Zero;

pub const BLOCK: usize = 256;

/// Pairwise sum of `f(x)` over `xs`.
pub fn pairwise_sum_map<X, A, F>(xs: &[X], f: F) -> A
where
    A: Copy + Add<Output = A> + Zero,
    F: Fn(&X) -> A,
{
    sum_range(xs, &f)
}

pub fn pairwise_sum<A>(xs: &[A]) -> A
where
    A: Copy + Add<Output = A> + Zero,
{
    sum_range(xs, &|x: &A| *x)
}

fn sum_range<X, A, F>(xs: &[X], f: &F) -> A
where
    A: Copy + Add<Output = A> + Zero,
    F: Fn(&X) -> A,
{
    let n = xs.len();
    if n <= BLOCK {
        return xs.iter().fold(A::zero(), |acc, x| acc + f(x));
    }
    // split on a block boundary so leaves are always whole blocks
    let blocks = n.div_ceil(BLOCK);
    let mid = (blocks / 2) * BLOCK;
    let (lo, hi) = xs.split_at(mid);
    sum_range(lo, f) + sum_range(hi, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn small_and_empty() {
        assert_eq!(pairwise_sum::<f64>(&[]), 0.0);
        assert_eq!(pairwise_sum(&[1.0, 2.0, 3.0]), 6.0);
    }

    #[test]
    fn beats_naive_on_long_constant_input() {
        let xs = vec![0.1f32; 1 << 20];
        let naive: f32 = xs.iter().sum();
        let pw = pairwise_sum(&xs);
        let exact = 0.1f64 * (1 << 20) as f64;
        assert!((pw as f64 - exact).abs() < (naive as f64 - exact).abs());
        assert!((pw as f64 - exact).abs() / exact < 1e-5);
    }

    proptest! {
        #[test]
        fn integer_valued_sums_are_exact(xs in prop::collection::vec(-1000i32..1000, 0..5000)) {
            let fs: Vec<f64> = xs.iter().map(|&v| v as f64).collect();
            let exact: i64 = xs.iter().map(|&v| v as i64).sum();
            prop_assert_eq!(pairwise_sum(&fs), exact as f64);
        }

        #[test]
        fn map_matches_materialized(xs in prop::collection::vec(-10.0f64..10.0, 0..3000)) {
            let sq: Vec<f64> = xs.iter().map(|v| v * v).collect();
            prop_assert_eq!(pairwise_sum_map(&xs, |v| v * v).to_bits(), pairwise_sum(&sq).to_bits());
        }
    }
}
