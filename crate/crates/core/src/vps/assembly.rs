use serde::Serialize;
use std::collections::{BTreeMap, BTreeSet};

use crate::UnitId;

/// Units bound by mutually strong excitatory lateral links.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CellAssembly {
    pub members: BTreeSet<UnitId>,
    pub label: String,
}

/// All maximal cliques of size ≥ 2 in an undirected graph, largest first and
/// lexicographic by member ids within a size.
pub fn maximal_cliques(adj: &BTreeMap<UnitId, BTreeSet<UnitId>>) -> Vec<BTreeSet<UnitId>> {
    let mut out = Vec::new();
    let p: BTreeSet<UnitId> = adj.keys().copied().collect();
    bron_kerbosch(adj, BTreeSet::new(), p, BTreeSet::new(), &mut out);
    out.retain(|c| c.len() >= 2);
    out.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.iter().cmp(b.iter())));
    out
}

fn bron_kerbosch(
    adj: &BTreeMap<UnitId, BTreeSet<UnitId>>,
    r: BTreeSet<UnitId>,
    mut p: BTreeSet<UnitId>,
    mut x: BTreeSet<UnitId>,
    out: &mut Vec<BTreeSet<UnitId>>,
) {
    if p.is_empty() && x.is_empty() {
        out.push(r);
        return;
    }
    let empty = BTreeSet::new();
    let nbrs = |u: &UnitId| adj.get(u).unwrap_or(&empty);
    let pivot = p.union(&x).max_by_key(|u| nbrs(u).intersection(&p).count()).copied();
    let candidates: Vec<UnitId> = match pivot {
        Some(pv) => p.difference(nbrs(&pv)).copied().collect(),
        None => p.iter().copied().collect(),
    };
    for v in candidates {
        let n = nbrs(&v);
        let mut r2 = r.clone();
        r2.insert(v);
        bron_kerbosch(
            adj,
            r2,
            p.intersection(n).copied().collect(),
            x.intersection(n).copied().collect(),
            out,
        );
        p.remove(&v);
        x.insert(v);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn graph(edges: &[(u32, u32)]) -> BTreeMap<UnitId, BTreeSet<UnitId>> {
        let mut g: BTreeMap<UnitId, BTreeSet<UnitId>> = BTreeMap::new();
        for &(a, b) in edges {
            g.entry(UnitId(a)).or_default().insert(UnitId(b));
            g.entry(UnitId(b)).or_default().insert(UnitId(a));
        }
        g
    }

    #[test]
    fn triangle_plus_tail() {
        let c = maximal_cliques(&graph(&[(0, 1), (1, 2), (0, 2), (2, 3)]));
        assert_eq!(c.len(), 2);
        assert_eq!(c[0], [0, 1, 2].map(UnitId).into_iter().collect());
        assert_eq!(c[1], [2, 3].map(UnitId).into_iter().collect());
    }

    #[test]
    fn no_edges_no_cliques() {
        assert!(maximal_cliques(&BTreeMap::new()).is_empty());
    }
}
