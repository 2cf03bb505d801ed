//! Levenshtein alignment with unit costs.

/// Error counts of a minimum-cost alignment of a hypothesis to a reference.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EditCounts {
    pub errors: usize,
    pub subs: usize,
    pub dels: usize,
    pub ins: usize,
}

impl std::ops::AddAssign for EditCounts {
    fn add_assign(&mut self, o: Self) {
        self.errors += o.errors;
        self.subs += o.subs;
        self.dels += o.dels;
        self.ins += o.ins;
    }
}

/// Unit-cost edit distance between two sequences.
pub fn edit_distance<A, B>(a: &[A], b: &[B]) -> usize
where
    A: PartialEq<B>,
{
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Aligns `hyp` against `reference` and counts substitutions, deletions
/// (reference words missing from the hypothesis) and insertions. The
/// back-trace prefers match, then substitution, then deletion, then insertion.
pub fn word_error<H, R>(hyp: &[H], reference: &[R]) -> EditCounts
where
    H: PartialEq<R>,
{
    let (n, m) = (hyp.len(), reference.len());
    let mut d = vec![vec![0usize; m + 1]; n + 1];
    for (i, row) in d.iter_mut().enumerate() {
        row[0] = i;
    }
    for j in 0..=m {
        d[0][j] = j;
    }
    for i in 1..=n {
        for j in 1..=m {
            let sub = d[i - 1][j - 1] + usize::from(hyp[i - 1] != reference[j - 1]);
            d[i][j] = sub.min(d[i - 1][j] + 1).min(d[i][j - 1] + 1);
        }
    }
    let mut counts = EditCounts {
        errors: d[n][m],
        ..Default::default()
    };
    let (mut i, mut j) = (n, m);
    while i > 0 || j > 0 {
        if i > 0 && j > 0 {
            let same = hyp[i - 1] == reference[j - 1];
            if d[i][j] == d[i - 1][j - 1] + usize::from(!same) {
                if !same {
                    counts.subs += 1;
                }
                i -= 1;
                j -= 1;
                continue;
            }
        }
        if j > 0 && d[i][j] == d[i][j - 1] + 1 {
            counts.dels += 1;
            j -= 1;
        } else {
            counts.ins += 1;
            i -= 1;
        }
    }
    debug_assert_eq!(counts.subs + counts.dels + counts.ins, counts.errors);
    counts
}
