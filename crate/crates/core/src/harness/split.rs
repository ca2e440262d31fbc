use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::dataset::Dataset;
use crate::error::{Error, Result};
use crate::rng::rng_from;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub source: usize,
    pub target: usize,
    pub test: usize,
}

impl SplitSizes {
    pub fn total(&self) -> usize {
        self.source + self.target + self.test
    }
}

/// Disjoint `(source, target, test)` subsets. The target is drawn first; with
/// `balance` it is stratified so every class (or group, without class labels)
/// gets an equal quota, as far as the strata allow. Source and test are then
/// drawn from the remaining rows.
pub fn split(dataset: &Dataset, sizes: SplitSizes, seed: u64, balance: bool) -> Result<(Dataset, Dataset, Dataset)> {
    let n = dataset.len();
    if sizes.total() > n {
        return Err(Error::config(format!(
            "split sizes {}+{}+{} exceed the {n} available samples",
            sizes.source, sizes.target, sizes.test
        )));
    }
    if sizes.source == 0 || sizes.target == 0 {
        return Err(Error::config("source and target sizes must be positive"));
    }
    let mut rng = rng_from(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);

    let target: Vec<usize> = if balance {
        let strata = strata(dataset)?;
        stratified_take(&order, &strata, sizes.target)
    } else {
        order[..sizes.target].to_vec()
    };
    let mut taken = vec![false; n];
    target.iter().for_each(|&i| taken[i] = true);
    let rest: Vec<usize> = order.into_iter().filter(|&i| !taken[i]).collect();
    let source = &rest[..sizes.source];
    let test = &rest[sizes.source..sizes.source + sizes.test];
    Ok((dataset.subset(source), dataset.subset(&target), dataset.subset(test)))
}

fn strata(dataset: &Dataset) -> Result<Vec<String>> {
    if let Some(c) = dataset.classes() {
        Ok(c.iter().map(|c| c.to_string()).collect())
    } else if let Some(g) = dataset.groups() {
        Ok(g.to_vec())
    } else {
        Err(Error::config("balanced target sampling needs class labels or groups"))
    }
}

/// Takes `k` rows from `order` with equal per-stratum quotas; quota left over
/// by small strata goes to the others. Within a stratum rows keep `order`.
fn stratified_take(order: &[usize], strata: &[String], k: usize) -> Vec<usize> {
    let mut by_stratum: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for &i in order {
        by_stratum.entry(strata[i].as_str()).or_default().push(i);
    }
    let pools: Vec<Vec<usize>> = by_stratum.into_values().collect();
    let mut quota = vec![0usize; pools.len()];
    let mut remaining = k;
    // water-filling: repeatedly share what is left among strata with spare rows
    while remaining > 0 {
        let open: Vec<usize> = (0..pools.len()).filter(|&s| quota[s] < pools[s].len()).collect();
        if open.is_empty() {
            break;
        }
        let share = (remaining / open.len()).max(1);
        for s in open {
            let add = share.min(pools[s].len() - quota[s]).min(remaining);
            quota[s] += add;
            remaining -= add;
            if remaining == 0 {
                break;
            }
        }
    }
    let mut chosen: Vec<usize> = pools
        .iter()
        .zip(&quota)
        .flat_map(|(p, &q)| p[..q].iter().copied())
        .collect();
    // restore the shuffled order so the target is not grouped by stratum
    let position: std::collections::HashMap<usize, usize> = order.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    chosen.sort_by_key(|i| position[i]);
    chosen
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::Labels;
    use crate::matrix::Matrix;

    fn data(n: usize, labels: Vec<usize>) -> Dataset {
        let x = Matrix::from_vec(n, 1, (0..n).map(|i| i as f64).collect()).unwrap();
        Dataset::from_features(x, Some(Labels::Classes(labels))).unwrap()
    }

    #[test]
    fn disjoint_cover_and_reproducible() {
        let d = data(2000, vec![0; 2000]);
        let sizes = SplitSizes {
            source: 1000,
            target: 400,
            test: 600,
        };
        let (s, t, e) = split(&d, sizes, 9, false).unwrap();
        let mut all: Vec<&String> = s.ids().iter().chain(t.ids()).chain(e.ids()).collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 2000);
        let (s2, t2, e2) = split(&d, sizes, 9, false).unwrap();
        assert_eq!((s, t, e), (s2, t2, e2));
    }

    #[test]
    fn balanced_target_on_skewed_classes() {
        let labels: Vec<usize> = (0..2000).map(|i| usize::from(i % 10 == 0)).collect();
        let d = data(2000, labels);
        let sizes = SplitSizes {
            source: 1000,
            target: 200,
            test: 100,
        };
        let (_, t, _) = split(&d, sizes, 1, true).unwrap();
        let ones = t.classes().unwrap().iter().filter(|&&c| c == 1).count();
        assert!((ones as f64 / 200.0 - 0.5).abs() <= 0.05, "{ones}");
    }

    #[test]
    fn small_stratum_quota_is_redistributed() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i < 5)).collect();
        let d = data(100, labels);
        let sizes = SplitSizes {
            source: 10,
            target: 40,
            test: 0,
        };
        let (_, t, _) = split(&d, sizes, 4, true).unwrap();
        assert_eq!(t.len(), 40);
        assert_eq!(t.classes().unwrap().iter().filter(|&&c| c == 1).count(), 5);
    }

    #[test]
    fn infeasible_requests_fail() {
        let d = data(10, vec![0; 10]);
        let too_big = SplitSizes {
            source: 5,
            target: 5,
            test: 1,
        };
        assert!(split(&d, too_big, 0, false).is_err());
        let unlabeled = Dataset::from_features(d.features().clone(), None).unwrap();
        let ok = SplitSizes {
            source: 5,
            target: 2,
            test: 0,
        };
        assert!(split(&unlabeled, ok, 0, true).is_err());
    }
}
