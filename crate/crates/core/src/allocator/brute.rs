use std::collections::HashSet;

use super::{group_fragments, Fragment};
use crate::{Error, Result};

pub const MAX_BRUTE_FRAGMENTS: usize = 14;
pub const MAX_BRUTE_SUBCHANNELS: usize = 4;

/// Exact minimum over all assignments of the largest sub-channel load, with
/// each UE's fragments on distinct sub-channels.
///
/// Depth-first over UEs (largest fragments first), one sub-channel subset
/// per UE. Sub-channels with equal load are interchangeable, so subsets that
/// pick the same multiset of loads are tried once.
pub fn brute_force_partition(fragments: &[Fragment], subchannels: usize) -> Result<f64> {
    if fragments.len() > MAX_BRUTE_FRAGMENTS || subchannels > MAX_BRUTE_SUBCHANNELS {
        return Err(Error::TooLarge(format!(
            "{} fragments over {subchannels} sub-channels (limit {MAX_BRUTE_FRAGMENTS} and {MAX_BRUTE_SUBCHANNELS})",
            fragments.len()
        )));
    }
    if subchannels == 0 {
        return Err(Error::InvalidScenario("need at least one sub-channel".into()));
    }
    let mut groups: Vec<(f64, usize)> = group_fragments(fragments, subchannels)?
        .into_iter()
        .filter(|g| g.2 > 0)
        .map(|(value, _, count)| (value, count))
        .collect();
    groups.sort_by(|a, b| b.0.total_cmp(&a.0));

    let subsets: Vec<Vec<Vec<usize>>> = (0..=subchannels)
        .map(|d| {
            (0u32..1 << subchannels)
                .filter(|mask| mask.count_ones() as usize == d)
                .map(|mask| (0..subchannels).filter(|&f| mask >> f & 1 == 1).collect())
                .collect()
        })
        .collect();

    let mut search = Search {
        groups: &groups,
        subsets: &subsets,
        loads: vec![0.0; subchannels],
        best: f64::INFINITY,
    };
    search.descend(0);
    Ok(search.best.max(0.0))
}

struct Search<'a> {
    groups: &'a [(f64, usize)],
    subsets: &'a [Vec<Vec<usize>>],
    loads: Vec<f64>,
    best: f64,
}

impl Search<'_> {
    fn descend(&mut self, depth: usize) {
        let current = self.loads.iter().copied().fold(0.0, f64::max);
        if current >= self.best {
            return;
        }
        let Some(&(value, count)) = self.groups.get(depth) else {
            self.best = current;
            return;
        };
        let mut tried: HashSet<Vec<u64>> = HashSet::new();
        for subset in &self.subsets[count] {
            let mut key: Vec<u64> = subset.iter().map(|&f| self.loads[f].to_bits()).collect();
            key.sort_unstable();
            if !tried.insert(key) {
                continue;
            }
            for &f in subset {
                self.loads[f] += value;
            }
            self.descend(depth + 1);
            for &f in subset {
                self.loads[f] -= value;
            }
        }
    }
}
