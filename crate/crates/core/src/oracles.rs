//! Independent combinatorial oracles used by the test suites and by the
//! `self-check` command. None of these go through the dimension recursion.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::graph::{GridPoint, WeightedPascalGraph};
use crate::scalar::Scalar;

/// Largest `n` for which permutations of `[n+1]` are enumerated.
pub const MAX_PERMUTATION_ORACLE: usize = 9;

/// Calls `f` on every permutation of `0..len` (Heap's algorithm).
pub fn for_each_permutation(len: usize, mut f: impl FnMut(&[usize])) {
    let mut perm: Vec<usize> = (0..len).collect();
    let mut c = vec![0usize; len];
    f(&perm);
    let mut i = 1;
    while i < len {
        if c[i] < i {
            if i % 2 == 0 {
                perm.swap(0, i);
            } else {
                perm.swap(c[i], i);
            }
            f(&perm);
            c[i] += 1;
            i = 1;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Number of lower records: entries smaller than everything to their left.
pub fn lower_records(perm: &[usize]) -> usize {
    let mut min = usize::MAX;
    let mut count = 0;
    for &x in perm {
        if x < min {
            min = x;
            count += 1;
        }
    }
    count
}

pub fn descents(perm: &[usize]) -> usize {
    perm.windows(2).filter(|w| w[0] > w[1]).count()
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_PERMUTATION_ORACLE {
        Err(Error::TooLarge {
            n,
            max: MAX_PERMUTATION_ORACLE,
        })
    } else {
        Ok(())
    }
}

/// `counts[h]` = number of permutations of `[n+1]` with `h+1` records.
pub fn record_count_oracle(n: usize) -> Result<Vec<u64>> {
    check_size(n)?;
    let mut counts = vec![0u64; n + 1];
    for_each_permutation(n + 1, |p| counts[lower_records(p) - 1] += 1);
    Ok(counts)
}

/// `counts[h]` = number of permutations of `[n+1]` with `h` descents.
pub fn descent_count_oracle(n: usize) -> Result<Vec<u64>> {
    check_size(n)?;
    let mut counts = vec![0u64; n + 1];
    for_each_permutation(n + 1, |p| counts[descents(p)] += 1);
    Ok(counts)
}

pub fn binomial(n: u64, k: u64) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    let mut acc = BigInt::one();
    for i in 0..k {
        acc = acc * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    acc
}

/// Gaussian binomial `[n choose k]_q` from the product
/// `∏_{i=1..k} (1 - q^{n-k+i}) / (1 - q^i)`. Requires `q ≠ 1`.
pub fn q_binomial(n: usize, k: usize, q: &BigRational) -> BigRational {
    if k > n {
        return BigRational::zero();
    }
    assert!(!q.is_one(), "the product formula needs q != 1");
    let one = BigRational::one();
    let pow = |e: usize| num_traits::pow(q.clone(), e);
    let mut num = one.clone();
    let mut den = one.clone();
    for i in 1..=k {
        num *= &one - pow(n - k + i);
        den *= &one - pow(i);
    }
    num / den
}

/// Sum over all `binomial(h+t, h)` explicit paths of their weight products.
pub fn brute_force_dimension(g: &WeightedPascalGraph, to: GridPoint) -> Result<Scalar> {
    let mut total = Scalar::zero(g.mode());
    for steps in all_paths(to.h, to.t) {
        total += g.path_weight(GridPoint::ORIGIN, &steps)?;
    }
    Ok(total)
}

/// Every increment sequence with `h` heads (true) and `t` tails.
pub fn all_paths(h: usize, t: usize) -> Vec<Vec<bool>> {
    let n = h + t;
    assert!(n < 63, "path enumeration limited to fewer than 63 steps");
    (0u64..(1u64 << n))
        .filter(|mask| mask.count_ones() as usize == h)
        .map(|mask| (0..n).map(|i| mask >> i & 1 == 1).collect())
        .collect()
}

/// Lattice point reached after the increments.
pub fn endpoint(steps: &[bool]) -> GridPoint {
    let h = steps.iter().filter(|&&x| x).count();
    GridPoint::new(h, steps.len() - h)
}

/// Law of `Z = #heads at L-times - #tails at M-times` by enumerating all
/// `2^n` outcomes of independent trials with head probabilities `ps`.
/// A time is in `M` when heads is strictly more likely. Returns the weights
/// keyed by `z`, ascending.
pub fn z_brute_force(ps: &[f64]) -> Result<Vec<(i64, f64)>> {
    if ps.len() > 20 {
        return Err(Error::TooLarge {
            n: ps.len(),
            max: 20,
        });
    }
    let mut law = std::collections::BTreeMap::new();
    for mask in 0u32..(1u32 << ps.len()) {
        let mut prob = 1.0;
        let mut z = 0i64;
        for (i, &p) in ps.iter().enumerate() {
            let head = mask >> i & 1 == 1;
            prob *= if head { p } else { 1.0 - p };
            let in_m = p > 1.0 - p;
            match (head, in_m) {
                (true, false) => z += 1,
                (false, true) => z -= 1,
                _ => {}
            }
        }
        *law.entry(z).or_insert(0.0) += prob;
    }
    Ok(law.into_iter().collect())
}
