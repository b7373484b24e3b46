use super::{canonical_window, CphError, FiringPattern, Pattern, PatternKey, DEFAULT_HARD_LIMIT};

/// Every nonempty subset of a canonical window, ordered by size and then
/// lexicographically by position.
///
/// With `cap = Some(k)` only subsets of size at most `k` are produced, plus the
/// whole window when it is larger than `k`.
pub fn enumerate_subsets<P: Pattern>(window: &[P], cap: Option<usize>) -> Vec<PatternKey<P>> {
    let n = window.len();
    let top = cap.map_or(n, |k| k.min(n));
    let mut out = Vec::with_capacity(subset_count(n, cap));
    let mut idx: Vec<usize> = Vec::with_capacity(top);
    for size in 1..=top {
        idx.clear();
        idx.extend(0..size);
        loop {
            out.push(PatternKey::new(idx.iter().map(|&i| window[i])));
            // advance to the next combination in lexicographic order
            let mut i = size;
            while i > 0 && idx[i - 1] == n - size + (i - 1) {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    if top < n {
        out.push(PatternKey::new(window.iter().copied()));
    }
    out
}

/// Number of keys [`enumerate_subsets`] yields for a window of `n` patterns.
pub fn subset_count(n: usize, cap: Option<usize>) -> usize {
    let top = cap.map_or(n, |k| k.min(n));
    let mut total = 0usize;
    let mut c = 1usize;
    for k in 1..=top {
        c = c * (n - k + 1) / k;
        total += c;
    }
    if top < n {
        total += 1;
    }
    total
}

/// Enumerates the complementary inputs of a rate-coded window.
///
/// Silent patterns are dropped first. Without an order cap the window may hold
/// at most [`DEFAULT_HARD_LIMIT`] patterns.
pub fn enumerate_complementary_inputs(
    window: &[FiringPattern],
    order_cap: Option<usize>,
) -> Result<Vec<PatternKey<FiringPattern>>, CphError> {
    let w = canonical_window(window);
    if w.is_empty() {
        return Err(CphError::EmptyWindow);
    }
    for pair in w.windows(2) {
        if pair[0].unit() == pair[1].unit() {
            return Err(CphError::DuplicateUnit(pair[0].unit()));
        }
    }
    if order_cap.is_none() && w.len() > DEFAULT_HARD_LIMIT {
        return Err(CphError::EnumerationBlowup { size: w.len(), limit: DEFAULT_HARD_LIMIT });
    }
    Ok(enumerate_subsets(&w, order_cap))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::UnitId;

    fn fp(u: u32, r: u8) -> FiringPattern {
        FiringPattern::new(UnitId(u), r).unwrap()
    }

    #[test]
    fn counts() {
        assert_eq!(subset_count(4, None), 15);
        assert_eq!(subset_count(7, None), 127);
        assert_eq!(subset_count(10, Some(2)), 10 + 45 + 1);
        assert_eq!(subset_count(2, Some(2)), 3);
    }

    #[test]
    fn ordering_by_size_then_position() {
        let keys = enumerate_complementary_inputs(&[fp(2, 1), fp(1, 1), fp(3, 1)], None).unwrap();
        let s: Vec<String> = keys.iter().map(|k| k.to_string()).collect();
        assert_eq!(s, ["1:1", "2:1", "3:1", "1:1,2:1", "1:1,3:1", "2:1,3:1", "1:1,2:1,3:1"]);
    }

    #[test]
    fn errors() {
        assert_eq!(enumerate_complementary_inputs(&[], None), Err(CphError::EmptyWindow));
        assert_eq!(enumerate_complementary_inputs(&[fp(1, 0)], None), Err(CphError::EmptyWindow));
        assert_eq!(
            enumerate_complementary_inputs(&[fp(1, 2), fp(1, 3)], None),
            Err(CphError::DuplicateUnit(UnitId(1)))
        );
        let big: Vec<_> = (0..17).map(|u| fp(u, 1)).collect();
        assert!(matches!(
            enumerate_complementary_inputs(&big, None),
            Err(CphError::EnumerationBlowup { size: 17, .. })
        ));
        assert_eq!(enumerate_complementary_inputs(&big, Some(2)).unwrap().len(), 17 + 136 + 1);
    }
}
