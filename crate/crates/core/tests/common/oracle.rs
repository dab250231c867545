//! Brute-force reference implementations, written from the definitions
//! and independent of the library code.

use std::cell::RefCell;
use std::collections::{BTreeSet, HashMap};
use std::rc::Rc;

use groundcoref::{AnnotationRecord, LinkTarget, Span};

pub type Partition = Vec<Vec<u32>>;

/// All set partitions of `0..n` into at most `max_blocks` blocks
/// (restricted growth strings).
pub fn partitions(n: usize, max_blocks: usize) -> Vec<Partition> {
    fn rec(i: usize, n: usize, max_blocks: usize, labels: &mut Vec<usize>, out: &mut Vec<Partition>) {
        if i == n {
            let blocks = labels.iter().copied().max().map_or(0, |m| m + 1);
            let mut p = vec![Vec::new(); blocks];
            for (m, &l) in labels.iter().enumerate() {
                p[l].push(m as u32);
            }
            out.push(p);
            return;
        }
        let used = labels.iter().copied().max().map_or(0, |m| m + 1);
        for l in 0..=used.min(max_blocks - 1) {
            labels.push(l);
            rec(i + 1, n, max_blocks, labels, out);
            labels.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, max_blocks, &mut Vec::new(), &mut out);
    out
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Cluster of each mention, indexed by mention number.
fn owner(p: &Partition) -> Vec<Option<usize>> {
    let len = p.iter().flatten().max().map_or(0, |&m| m as usize + 1);
    let mut own = vec![None; len];
    for (i, c) in p.iter().enumerate() {
        for &m in c {
            own[m as usize] = Some(i);
        }
    }
    own
}

/// MUC recall of `gold` against `other` through connected components: the
/// mentions of a gold cluster are joined whenever `other` puts them together.
fn muc_recall(gold: &Partition, other: &Partition) -> f64 {
    let own = owner(other);
    let mut num = 0usize;
    let mut den = 0usize;
    for cluster in gold {
        let mut parent: Vec<usize> = (0..cluster.len()).collect();
        fn find(parent: &mut Vec<usize>, x: usize) -> usize {
            let mut r = x;
            while parent[r] != r {
                r = parent[r];
            }
            parent[x] = r;
            r
        }
        for i in 0..cluster.len() {
            for j in i + 1..cluster.len() {
                let get = |m: u32| own.get(m as usize).copied().flatten();
                let same = matches!((get(cluster[i]), get(cluster[j])), (Some(a), Some(b)) if a == b);
                if same {
                    let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                    parent[a] = b;
                }
            }
        }
        let components = (0..cluster.len()).filter(|&i| find(&mut parent, i) == i).count();
        num += cluster.len() - components;
        den += cluster.len() - 1;
    }
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// (precision, recall, f1)
pub fn muc(key: &Partition, response: &Partition) -> (f64, f64, f64) {
    let r = muc_recall(key, response);
    let p = muc_recall(response, key);
    (p, r, f1(p, r))
}

/// Mean over mentions of `gold` of |gold(m) ∩ other(m)| / |gold(m)|.
fn b_cubed_side(gold: &Partition, other: &Partition) -> f64 {
    let own = owner(other);
    let mut total = 0.0;
    let mut count = 0usize;
    for cluster in gold {
        for &m in cluster {
            let common = match own.get(m as usize).copied().flatten() {
                Some(o) => cluster.iter().filter(|x| other[o].contains(x)).count(),
                None => 0,
            };
            total += common as f64 / cluster.len() as f64;
            count += 1;
        }
    }
    if count == 0 {
        0.0
    } else {
        total / count as f64
    }
}

pub fn b_cubed(key: &Partition, response: &Partition) -> (f64, f64, f64) {
    let p = b_cubed_side(response, key);
    let r = b_cubed_side(key, response);
    (p, r, f1(p, r))
}

pub fn phi4(a: &[u32], b: &[u32]) -> f64 {
    let common = a.iter().filter(|x| b.contains(x)).count();
    2.0 * common as f64 / (a.len() + b.len()) as f64
}

/// Permutations of `0..n`, memoized because the exhaustive sweep asks for
/// the same small sizes millions of times.
pub fn permutations(n: usize) -> Rc<Vec<Vec<usize>>> {
    thread_local! {
        static CACHE: RefCell<HashMap<usize, Rc<Vec<Vec<usize>>>>> = Default::default();
    }
    CACHE.with(|c| c.borrow_mut().entry(n).or_insert_with(|| Rc::new(enumerate_permutations(n))).clone())
}

fn enumerate_permutations(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for p in enumerate_permutations(n - 1) {
        for pos in 0..=p.len() {
            let mut q = p.clone();
            q.insert(pos, n - 1);
            out.push(q);
        }
    }
    out
}

/// Best total over all one-to-one alignments, each total summed in row order.
pub fn best_alignment(weights: &[Vec<f64>]) -> f64 {
    let rows = weights.len();
    let cols = weights.first().map_or(0, Vec::len);
    let n = rows.max(cols);
    let mut best = 0.0f64;
    for perm in permutations(n).iter() {
        let mut total = 0.0;
        for (i, &j) in perm.iter().enumerate().take(rows) {
            if j < cols {
                total += weights[i][j];
            }
        }
        best = best.max(total);
    }
    best
}

pub fn ceaf_e(key: &Partition, response: &Partition) -> (f64, f64, f64) {
    let weights: Vec<Vec<f64>> = key.iter().map(|k| response.iter().map(|r| phi4(k, r)).collect()).collect();
    let best = best_alignment(&weights);
    let p = if response.is_empty() { 0.0 } else { best / response.len() as f64 };
    let r = if key.is_empty() { 0.0 } else { best / key.len() as f64 };
    (p, r, f1(p, r))
}

fn span_set(spans: &[Span]) -> Vec<Span> {
    spans.iter().copied().collect::<BTreeSet<_>>().into_iter().collect()
}

fn same_target(a: &LinkTarget, b: &LinkTarget) -> bool {
    match (a, b) {
        (LinkTarget::EntitySet { entity_ids: x }, LinkTarget::EntitySet { entity_ids: y }) => x == y,
        (LinkTarget::SpanSet { spans: x }, LinkTarget::SpanSet { spans: y }) => span_set(x) == span_set(y),
        (LinkTarget::NoReference, LinkTarget::NoReference) => true,
        _ => false,
    }
}

pub fn exact_match(a: &AnnotationRecord, b: &AnnotationRecord) -> f64 {
    let same = a.links.iter().filter(|(id, t)| same_target(t, &b.links[*id])).count();
    same as f64 / a.links.len() as f64
}

fn overlap(x: &Span, y: &Span) -> bool {
    x.section_index == y.section_index && x.char_start < y.char_end && y.char_start < x.char_end
}

/// Largest number of disjoint overlapping pairs, by trying every injection.
fn span_matching(a: &[Span], b: &[Span]) -> usize {
    fn rec(i: usize, a: &[Span], b: &[Span], used: &mut Vec<bool>) -> usize {
        if i == a.len() {
            return 0;
        }
        let mut best = rec(i + 1, a, b, used);
        for j in 0..b.len() {
            if !used[j] && overlap(&a[i], &b[j]) {
                used[j] = true;
                best = best.max(1 + rec(i + 1, a, b, used));
                used[j] = false;
            }
        }
        best
    }
    rec(0, a, b, &mut vec![false; b.len()])
}

fn items(t: &LinkTarget) -> usize {
    match t {
        LinkTarget::EntitySet { entity_ids } => entity_ids.len(),
        LinkTarget::SpanSet { spans } => span_set(spans).len(),
        LinkTarget::NoReference => 1,
    }
}

pub fn link_f1(a: &AnnotationRecord, b: &AnnotationRecord) -> f64 {
    let (mut tp, mut fn_, mut fp) = (0usize, 0usize, 0usize);
    for (id, x) in &a.links {
        let y = &b.links[id];
        let common = match (x, y) {
            (LinkTarget::EntitySet { entity_ids: p }, LinkTarget::EntitySet { entity_ids: q }) => {
                p.iter().filter(|e| q.contains(*e)).count()
            }
            (LinkTarget::SpanSet { spans: p }, LinkTarget::SpanSet { spans: q }) => {
                span_matching(&span_set(p), &span_set(q))
            }
            (LinkTarget::NoReference, LinkTarget::NoReference) => 1,
            _ => 0,
        };
        tp += common;
        fn_ += items(x) - common;
        fp += items(y) - common;
    }
    let den = 2 * tp + fn_ + fp;
    if den == 0 {
        0.0
    } else {
        2.0 * tp as f64 / den as f64
    }
}
