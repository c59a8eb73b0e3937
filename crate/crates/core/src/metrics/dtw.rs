use crate::error::{Error, Result};

/// Classic dynamic time warping with `|a_i - b_j|` local cost over the full
/// cost table (no window constraint).
pub fn dtw_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::EmptyInput("dtw sequence"));
    }
    // Two rolling rows over b; row index walks a.
    let m = b.len();
    let mut prev = vec![f64::INFINITY; m + 1];
    let mut curr = vec![f64::INFINITY; m + 1];
    prev[0] = 0.0;
    for &ai in a {
        curr[0] = f64::INFINITY;
        for j in 1..=m {
            let cost = (ai - b[j - 1]).abs();
            curr[j] = cost + prev[j].min(curr[j - 1]).min(prev[j - 1]);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[m])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_is_zero() {
        let x = [0.3, -1.0, 2.5, 2.5, 0.0];
        assert_eq!(dtw_distance(&x, &x).unwrap(), 0.0);
    }

    #[test]
    fn two_by_two_table() {
        assert_eq!(dtw_distance(&[0.0, 0.0], &[1.0, 1.0]).unwrap(), 2.0);
    }

    #[test]
    fn warping_absorbs_repetition() {
        assert_eq!(dtw_distance(&[1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 2.0, 3.0]).unwrap(), 0.0);
    }

    #[test]
    fn unequal_lengths_and_symmetry() {
        let a = [0.0, 1.0, 0.5];
        let b = [1.0, 0.0];
        assert_eq!(dtw_distance(&a, &b).unwrap(), dtw_distance(&b, &a).unwrap());
    }

    #[test]
    fn empty_is_error() {
        assert!(dtw_distance(&[], &[1.0]).is_err());
    }
}
