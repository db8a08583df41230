/// `n choose k`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Number of supports of size at most `k` drawn from `n` coordinates, saturating.
pub fn supports_up_to(n: usize, k: usize) -> u128 {
    (0..=k.min(n)).fold(0u128, |acc, j| acc.saturating_add(binomial(n, j)))
}
