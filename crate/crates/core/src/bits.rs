//! Fixed-popcount bit strings.

/// Binomial coefficient `C(n, k)` (0 when `k > n`).
pub fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc * (n - i) as u128 / (i + 1) as u128;
    }
    acc as usize
}

/// All `n`-bit masks with `k` bits set, in ascending numeric order.
pub fn combinations(n: usize, k: usize) -> Vec<u64> {
    assert!(n <= 63, "at most 63 orbitals");
    if k > n {
        return Vec::new();
    }
    if k == 0 {
        return vec![0];
    }
    let mut out = Vec::with_capacity(binomial(n, k));
    let mut mask: u64 = (1u64 << k) - 1;
    let limit = 1u64 << n;
    while mask < limit {
        out.push(mask);
        // Gosper's hack
        let c = mask & mask.wrapping_neg();
        let r = mask + c;
        mask = (((r ^ mask) >> 2) / c) | r;
    }
    out
}

/// Position of `mask` within [`combinations`] for its popcount (colex rank).
pub fn rank(mask: u64) -> usize {
    let mut r = 0;
    let mut m = mask;
    let mut j = 1;
    while m != 0 {
        let pos = m.trailing_zeros() as usize;
        r += binomial(pos, j);
        j += 1;
        m &= m - 1;
    }
    r
}

/// Indices of set bits, ascending.
pub fn ones(mask: u64) -> impl Iterator<Item = usize> {
    let mut m = mask;
    std::iter::from_fn(move || {
        if m == 0 {
            None
        } else {
            let p = m.trailing_zeros() as usize;
            m &= m - 1;
            Some(p)
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranks_follow_enumeration_order() {
        for n in 0..9 {
            for k in 0..=n {
                let list = combinations(n, k);
                assert_eq!(list.len(), binomial(n, k));
                for (i, &m) in list.iter().enumerate() {
                    assert_eq!(rank(m), i);
                    assert_eq!(m.count_ones() as usize, k);
                }
            }
        }
    }

    #[test]
    fn ones_lists_bits() {
        assert_eq!(ones(0b1011_0000).collect::<Vec<_>>(), vec![4, 5, 7]);
    }
}
