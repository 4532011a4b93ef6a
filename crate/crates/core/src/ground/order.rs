//! Greedy min-fill elimination order with the deputy constraint.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;

use super::{GroundFactor, GroundModel};

fn fill(adj: &BTreeMap<usize, BTreeSet<usize>>, v: usize) -> usize {
    let nb: Vec<usize> = adj[&v].iter().copied().collect();
    let mut missing = 0;
    for (i, a) in nb.iter().enumerate() {
        for b in &nb[i + 1..] {
            if !adj[a].contains(b) {
                missing += 1;
            }
        }
    }
    missing
}

/// Orders every randvar occurring in the factors, except `query`, by
/// increasing fill-in. A deputy's regular twin E only becomes eligible once
/// its E' is eliminated. Ties go to the lexicographically smaller name.
pub fn min_fill_order(gm: &GroundModel, f1: &[GroundFactor], f2: &[GroundFactor], query: usize) -> Vec<usize> {
    let mut adj: BTreeMap<usize, BTreeSet<usize>> = BTreeMap::new();
    for f in f1.iter().chain(f2.iter()) {
        for &a in &f.vars {
            let e = adj.entry(a).or_default();
            for &b in &f.vars {
                if a != b {
                    e.insert(b);
                }
            }
        }
    }
    // Lexicographic rank of names, for tie breaking.
    let mut by_name: Vec<usize> = adj.keys().copied().collect();
    by_name.sort_by(|a, b| gm.names[*a].cmp(&gm.names[*b]).then(a.cmp(b)));
    let rank: BTreeMap<usize, usize> = by_name.iter().enumerate().map(|(i, &v)| (v, i)).collect();

    let mut blocked: BTreeMap<usize, usize> = BTreeMap::new(); // E -> number of pending E'
    let mut twins: BTreeMap<usize, Vec<usize>> = BTreeMap::new(); // E' -> Es
    for &(e, ep) in &gm.deputies {
        if adj.contains_key(&e) && adj.contains_key(&ep) {
            *blocked.entry(e).or_default() += 1;
            twins.entry(ep).or_default().push(e);
        }
    }

    let mut score: BTreeMap<usize, usize> = BTreeMap::new();
    let mut ready: BTreeSet<(usize, usize, usize)> = BTreeSet::new();
    for &v in adj.keys() {
        if v == query {
            continue;
        }
        let s = fill(&adj, v);
        score.insert(v, s);
        if !blocked.contains_key(&v) {
            ready.insert((s, rank[&v], v));
        }
    }

    let mut order = Vec::with_capacity(score.len());
    while let Some(&(s, r, v)) = ready.iter().next() {
        ready.remove(&(s, r, v));
        order.push(v);
        let nb: Vec<usize> = adj.remove(&v).map(|s| s.into_iter().collect()).unwrap_or_default();
        for &a in &nb {
            let set = adj.get_mut(&a).expect("symmetric");
            set.remove(&v);
            for &b in &nb {
                if a != b {
                    set.insert(b);
                }
            }
        }
        score.remove(&v);
        if let Some(es) = twins.remove(&v) {
            for e in es {
                if let Some(c) = blocked.get_mut(&e) {
                    *c -= 1;
                    if *c == 0 {
                        blocked.remove(&e);
                        if let Some(&s) = score.get(&e) {
                            ready.insert((s, rank[&e], e));
                        }
                    }
                }
            }
        }
        // Fill-in can only change within two hops of v.
        let mut touched: BTreeSet<usize> = BTreeSet::new();
        for &a in &nb {
            touched.insert(a);
            touched.extend(adj[&a].iter().copied());
        }
        for u in touched {
            if let Some(&old) = score.get(&u) {
                let new = fill(&adj, u);
                if new != old {
                    score.insert(u, new);
                    if ready.remove(&(old, rank[&u], u)) {
                        ready.insert((new, rank[&u], u));
                    }
                }
            }
        }
    }
    // Twins of a deputy that is never eliminated (the query) go last.
    let mut rest: Vec<usize> = score.keys().copied().collect();
    rest.sort_by_key(|v| rank[v]);
    order.extend(rest);
    order
}
