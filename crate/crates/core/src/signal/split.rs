use rand::seq::SliceRandom;

use super::{Dataset, DatasetRole};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Splits `round(fraction * total)` picks across classes in proportion to
/// their sizes (largest-remainder rounding, ties to the lower class index).
/// Every class receives either the floor or the ceiling of its exact share.
pub fn stratified_allocation(counts: &[usize], fraction: f64) -> Vec<usize> {
    let total: usize = counts.iter().sum();
    let target = (fraction * total as f64).round() as usize;
    let exact: Vec<f64> = counts.iter().map(|&n| fraction * n as f64).collect();
    let mut alloc: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let assigned: usize = alloc.iter().sum();
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = exact[a] - exact[a].floor();
        let fb = exact[b] - exact[b].floor();
        fb.total_cmp(&fa).then(a.cmp(&b))
    });
    let mut remaining = target.saturating_sub(assigned);
    for &c in order.iter().cycle().take(order.len() * 2) {
        if remaining == 0 {
            break;
        }
        if alloc[c] < counts[c] && (alloc[c] as f64) < exact[c].ceil() {
            alloc[c] += 1;
            remaining -= 1;
        }
    }
    alloc
}

/// Stratified, seeded train/test split. The train side keeps the input's
/// role; the test side is tagged [`DatasetRole::TestSet`].
pub fn split_dataset(ds: &Dataset, ratio: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if ds.is_empty() {
        return Err(Error::EmptyInput("dataset to split"));
    }
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::Config(format!("split ratio {ratio} not in (0, 1)")));
    }
    let counts = ds.class_counts();
    if let Some(c) = counts.iter().position(|&n| n == 0) {
        return Err(Error::EmptyClass(c));
    }
    let alloc = stratified_allocation(&counts, ratio);
    let mut rng = seeded(seed);
    let mut in_train = vec![false; ds.len()];
    for (class, mut members) in ds.indices_by_class().into_iter().enumerate() {
        members.shuffle(&mut rng);
        for &i in &members[..alloc[class]] {
            in_train[i] = true;
        }
    }
    let (mut train, mut test) = (Vec::new(), Vec::new());
    for (s, &t) in ds.signals().iter().zip(&in_train) {
        if t {
            train.push(s.clone());
        } else {
            test.push(s.clone());
        }
    }
    let train = ds.derive(train)?;
    let test = ds.derive(test)?.with_role(DatasetRole::TestSet);
    Ok((train, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::{ClassLabel, Provenance, Signal};

    fn dataset(counts: &[usize]) -> Dataset {
        let mut signals = Vec::new();
        for (label, &n) in counts.iter().enumerate() {
            for i in 0..n {
                signals.push(Signal::new(
                    format!("c{label}_{i}"),
                    vec![i as f64, label as f64],
                    10.0,
                    label,
                    Provenance::Asserted,
                ));
            }
        }
        Dataset::new(signals, ClassLabel::generic(counts.len()), DatasetRole::AssertedPool).unwrap()
    }

    #[test]
    fn allocation_hits_rounded_total() {
        assert_eq!(stratified_allocation(&[163, 163, 163, 163], 0.7).iter().sum::<usize>(), 456);
        assert_eq!(stratified_allocation(&[115; 4], 0.5), vec![58, 58, 57, 57]);
        assert_eq!(stratified_allocation(&[3, 0, 5], 1.0), vec![3, 0, 5]);
    }

    #[test]
    fn split_652_into_460_and_192() {
        let ds = dataset(&[163, 163, 163, 163]);
        let (train, test) = split_dataset(&ds, 460.0 / 652.0, 1).unwrap();
        assert_eq!((train.len(), test.len()), (460, 192));
        // A literal 70% of 652 rounds to 456.
        let (train, test) = split_dataset(&ds, 0.7, 1).unwrap();
        assert_eq!((train.len(), test.len()), (456, 196));
    }

    #[test]
    fn two_per_class_halves_evenly() {
        let ds = dataset(&[2, 2]);
        let (train, test) = split_dataset(&ds, 0.5, 3).unwrap();
        assert_eq!(train.class_counts(), vec![1, 1]);
        assert_eq!(test.class_counts(), vec![1, 1]);
    }

    #[test]
    fn same_seed_same_split() {
        let ds = dataset(&[5, 5]);
        let a = split_dataset(&ds, 0.5, 9).unwrap();
        let b = split_dataset(&ds, 0.5, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn empty_class_is_an_error() {
        let ds = dataset(&[4, 0, 4]);
        assert!(matches!(split_dataset(&ds, 0.5, 0), Err(Error::EmptyClass(1))));
    }
}
