use super::{cluster_groups, Eigenpair, SpectrumSnapshot};
use crate::error::{Error, Result};
use crate::mesh::MassOperator;

/// Overlap below which a matched branch is reported as lost.
pub const TRACKING_LOSS_OVERLAP: f64 = 0.5;

#[derive(Debug, Clone)]
pub struct Tracked {
    /// `pairs[i]` continues branch `i` of the previous snapshot.
    pub pairs: Vec<Eigenpair>,
    /// Branches whose overlap fell below [`TRACKING_LOSS_OVERLAP`].
    pub lost: Vec<usize>,
    /// Overlap quality per branch (subspace capture for clusters).
    pub quality: Vec<f64>,
}

/// Continues the branches of `prev` through the freshly solved `curr_raw`
/// by greedy maximal matching of `|<f_prev, M f_curr>|`, then fixes signs so
/// every matched overlap is positive.
pub fn track(prev: &SpectrumSnapshot, curr_raw: Vec<Eigenpair>, m_curr: &MassOperator) -> Result<Tracked> {
    let n = prev.eigenpairs.len();
    if curr_raw.len() != n {
        return Err(Error::input(format!(
            "cannot track {} eigenpairs against {} previous ones",
            curr_raw.len(),
            n
        )));
    }

    let overlap: Vec<Vec<f64>> = prev
        .eigenpairs
        .iter()
        .map(|p| curr_raw.iter().map(|c| m_curr.inner(&p.f, &c.f)).collect())
        .collect();

    let mut candidates: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
    candidates.sort_by(|&(i, j), &(p, q)| {
        overlap[p][q]
            .abs()
            .total_cmp(&overlap[i][j].abs())
            .then_with(|| {
                let d1 = (prev.eigenpairs[i].lambda - curr_raw[j].lambda).abs();
                let d2 = (prev.eigenpairs[p].lambda - curr_raw[q].lambda).abs();
                d1.total_cmp(&d2)
            })
            .then((i, j).cmp(&(p, q)))
    });

    let mut matched: Vec<Option<usize>> = vec![None; n];
    let mut taken = vec![false; n];
    let mut remaining = n;
    for (i, j) in candidates {
        if remaining == 0 {
            break;
        }
        if matched[i].is_none() && !taken[j] {
            matched[i] = Some(j);
            taken[j] = true;
            remaining -= 1;
        }
    }

    let groups = cluster_groups(&curr_raw.iter().map(|c| c.lambda).collect::<Vec<_>>());
    let group_of = |j: usize| groups.iter().find(|g| g.contains(&j)).expect("every index is grouped");

    let mut slots: Vec<Option<Eigenpair>> = curr_raw.into_iter().map(Some).collect();
    let mut pairs = Vec::with_capacity(n);
    let mut lost = Vec::new();
    let mut quality = Vec::with_capacity(n);
    for i in 0..n {
        let j = matched[i].expect("greedy matching is perfect");
        let mut pair = slots[j].take().unwrap();
        if overlap[i][j] < 0.0 {
            pair.f.iter_mut().for_each(|x| *x = -*x);
        }
        pair.index = prev.eigenpairs[i].index;
        let q = group_of(j).iter().map(|&jj| overlap[i][jj].powi(2)).sum::<f64>().sqrt();
        if q < TRACKING_LOSS_OVERLAP {
            lost.push(i);
        }
        quality.push(q);
        pairs.push(pair);
    }
    Ok(Tracked { pairs, lost, quality })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn snapshot(pairs: Vec<Eigenpair>) -> SpectrumSnapshot {
        SpectrumSnapshot {
            t: 0.0,
            eigenpairs: pairs,
            area: 3.0,
            r_avg: 0.0,
            r_min: 0.0,
            r_max: 0.0,
            u: vec![0.0; 3],
            curvature: vec![0.0; 3],
            tracking_lost: vec![],
        }
    }

    fn basis() -> Vec<Eigenpair> {
        let s = 1.0 / 3f64.sqrt();
        vec![
            Eigenpair { index: 0, lambda: 0.0, f: vec![s, s, s] },
            Eigenpair { index: 1, lambda: 1.0, f: vec![1.0 / 2f64.sqrt(), -1.0 / 2f64.sqrt(), 0.0] },
            Eigenpair { index: 2, lambda: 3.0, f: vec![1.0 / 6f64.sqrt(), 1.0 / 6f64.sqrt(), -2.0 / 6f64.sqrt()] },
        ]
    }

    #[test]
    fn sign_flips_are_undone() {
        let prev = snapshot(basis());
        let flipped: Vec<Eigenpair> = basis()
            .into_iter()
            .map(|mut p| {
                p.f.iter_mut().for_each(|x| *x = -*x);
                p
            })
            .collect();
        let m = MassOperator::from_diagonal(vec![1.0; 3]).unwrap();
        let out = track(&prev, flipped, &m).unwrap();
        assert_eq!(out.pairs, basis());
        assert!(out.lost.is_empty());
    }

    #[test]
    fn permutations_are_undone() {
        let prev = snapshot(basis());
        let mut shuffled = basis();
        shuffled.swap(0, 2);
        shuffled.swap(1, 2);
        let m = MassOperator::from_diagonal(vec![1.0; 3]).unwrap();
        let out = track(&prev, shuffled, &m).unwrap();
        assert_eq!(out.pairs, basis());
    }

    #[test]
    fn length_mismatch_is_an_error() {
        let prev = snapshot(basis());
        let m = MassOperator::from_diagonal(vec![1.0; 3]).unwrap();
        assert!(track(&prev, basis()[..2].to_vec(), &m).is_err());
    }
}
