use std::ops::ControlFlow;

/// `C(n, k)`, saturating at `u128::MAX`.
pub fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = match acc.checked_mul((n - i) as u128) {
            Some(v) => v / (i as u128 + 1),
            None => return u128::MAX,
        };
    }
    acc
}

/// Visits every `k`-subset of `items` in lexicographic position order.
pub fn for_each_combination<B>(
    items: &[usize],
    k: usize,
    mut visit: impl FnMut(&[usize]) -> ControlFlow<B>,
) -> ControlFlow<B> {
    let n = items.len();
    if k > n {
        return ControlFlow::Continue(());
    }
    let mut idx: Vec<usize> = (0..k).collect();
    let mut chosen: Vec<usize> = idx.iter().map(|&i| items[i]).collect();
    loop {
        visit(&chosen)?;
        // advance to the next index vector
        let mut pos = k;
        loop {
            if pos == 0 {
                return ControlFlow::Continue(());
            }
            pos -= 1;
            if idx[pos] < n - k + pos {
                break;
            }
        }
        idx[pos] += 1;
        for later in pos + 1..k {
            idx[later] = idx[later - 1] + 1;
        }
        for p in pos..k {
            chosen[p] = items[idx[p]];
        }
    }
}
