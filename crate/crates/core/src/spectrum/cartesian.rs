//! Error spectrum of the uncoded Cartesian lattice (`f = 1`).
//!
//! With `f = 1` an event is any sequence of even symbols, and its weight is
//! the sum of the symbol weights. Counting in units of 4, `a(k)` events of
//! weight `4k` (counting every rotation and every zero pattern up to the
//! one-zero limit) satisfy `a(k) = b(k) + Σ_{i<k} a(i)·b(k−i)`, where `b(k)`
//! is the number of single even symbols of squared magnitude `4k`.

/// Number of even Gaussian integers with squared magnitude `4k`, i.e. the
/// number of integer pairs with `x² + y² = k`.
pub fn cartesian_b(k: u64) -> u64 {
    let mut count = 0;
    let r = (k as f64).sqrt() as i64 + 1;
    for x in -r..=r {
        for y in -r..=r {
            if (x * x + y * y) as u64 == k {
                count += 1;
            }
        }
    }
    count
}

/// `(a(1..=k_max), b(1..=k_max))`.
pub fn cartesian_spectrum(k_max: usize) -> (Vec<u64>, Vec<u64>) {
    let b: Vec<u64> = (1..=k_max as u64).map(cartesian_b).collect();
    let mut a: Vec<u64> = Vec::with_capacity(k_max);
    for k in 0..k_max {
        let mut v = b[k];
        for i in 0..k {
            v += a[i] * b[k - 1 - i];
        }
        a.push(v);
    }
    (a, b)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gauss::GaussInt;

    #[test]
    fn published_values() {
        let (a, b) = cartesian_spectrum(13);
        assert_eq!(b, vec![4, 4, 0, 4, 8, 0, 0, 4, 4, 8, 0, 0, 8]);
        assert_eq!(
            a[..10],
            [4, 20, 96, 468, 2280, 11104, 54080, 263380, 1282724, 6247176]
        );
    }

    #[test]
    fn recursion_matches_direct_count() {
        // Direct count of nonzero even sequences without zero symbols and
        // total weight 4k: compositions of k into parts with b-weights.
        fn count(k: i64) -> u64 {
            if k == 0 {
                return 1;
            }
            let mut total = 0;
            for first in 1..=k {
                let mut n = 0;
                for re in -first..=first {
                    for im in -first..=first {
                        if GaussInt::new(re, im).norm_sqr() == first {
                            n += 1;
                        }
                    }
                }
                total += n * count(k - first);
            }
            total
        }
        let (a, _) = cartesian_spectrum(7);
        for k in 1..=7 {
            assert_eq!(a[k - 1], count(k as i64));
        }
    }
}
