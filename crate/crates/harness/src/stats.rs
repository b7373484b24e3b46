//! Small numeric helpers for probe summaries.

/// Pearson correlation of two binary series; 0 when either is constant.
pub fn pearson(x: &[bool], y: &[bool]) -> f64 {
    assert_eq!(x.len(), y.len(), "series lengths differ");
    if x.is_empty() {
        return 0.0;
    }
    let n = x.len() as f64;
    let f = |b: &bool| if *b { 1.0 } else { 0.0 };
    let mx = x.iter().map(f).sum::<f64>() / n;
    let my = y.iter().map(f).sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (f(a) - mx, f(b) - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        0.0
    } else {
        sxy / (sxx * syy).sqrt()
    }
}

pub fn mean(v: &[f64]) -> f64 {
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        let a = [true, false, true, false];
        let b = [false, true, false, true];
        assert_eq!(pearson(&a, &a), 1.0);
        assert_eq!(pearson(&a, &b), -1.0);
        assert_eq!(pearson(&a, &[true; 4]), 0.0);
    }

    proptest! {
        #[test]
        fn bounded_and_symmetric(v in proptest::collection::vec(any::<(bool, bool)>(), 1..60)) {
            let (x, y): (Vec<bool>, Vec<bool>) = v.into_iter().unzip();
            let r = pearson(&x, &y);
            prop_assert!((-1.0 - 1e-12..=1.0 + 1e-12).contains(&r));
            prop_assert!((r - pearson(&y, &x)).abs() < 1e-12);
        }
    }
}
