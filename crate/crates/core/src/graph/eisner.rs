/// Dense `(n + 1) x (n + 1)` arc score table indexed `[head][modifier]`.
/// Column 0 and the diagonal are never read.
#[derive(Clone, Debug, PartialEq)]
pub struct ArcScores {
    n: usize,
    data: Vec<f64>,
}

impl ArcScores {
    pub fn zeros(n: usize) -> Self {
        ArcScores {
            n,
            data: vec![0.0; (n + 1) * (n + 1)],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut s = ArcScores::zeros(n);
        for h in 0..=n {
            for m in 1..=n {
                if h != m {
                    s.set(h, m, f(h, m));
                }
            }
        }
        s
    }

    pub fn sentence_len(&self) -> usize {
        self.n
    }

    pub fn get(&self, head: usize, modifier: usize) -> f64 {
        self.data[head * (self.n + 1) + modifier]
    }

    pub fn set(&mut self, head: usize, modifier: usize, value: f64) {
        self.data[head * (self.n + 1) + modifier] = value;
    }

    /// Sum of `score[heads[m-1]][m]` over all tokens.
    pub fn tree_score(&self, heads: &[usize]) -> f64 {
        heads.iter().enumerate().map(|(i, &h)| self.get(h, i + 1)).sum()
    }

    /// Adds `cost` to every arc absent from `gold`.
    pub fn augmented(&self, gold: &[usize], cost: f64) -> ArcScores {
        let mut out = self.clone();
        for h in 0..=self.n {
            for m in 1..=self.n {
                if h != m && gold[m - 1] != h {
                    out.set(h, m, self.get(h, m) + cost);
                }
            }
        }
        out
    }
}

const LEFT: usize = 0;
const RIGHT: usize = 1;

/// Best projective tree rooted at 0 under first-order scores.
///
/// Returns heads of tokens `1..=n` and the tree's total score. ROOT may take
/// several children. Among equal-scoring splits the smaller index wins.
pub fn eisner(scores: &ArcScores) -> (Vec<usize>, f64) {
    let n = scores.sentence_len();
    let size = n + 1;
    let idx = |s: usize, t: usize, d: usize| (s * size + t) * 2 + d;
    let mut complete = vec![0.0; size * size * 2];
    let mut incomplete = vec![f64::NEG_INFINITY; size * size * 2];
    let mut complete_split = vec![0usize; size * size * 2];
    let mut incomplete_split = vec![0usize; size * size * 2];

    for k in 1..=n {
        for s in 0..=n - k {
            let t = s + k;
            let mut best = f64::NEG_INFINITY;
            let mut arg = s;
            for r in s..t {
                let v = complete[idx(s, r, RIGHT)] + complete[idx(r + 1, t, LEFT)];
                if v > best {
                    best = v;
                    arg = r;
                }
            }
            incomplete[idx(s, t, LEFT)] = if s == 0 {
                f64::NEG_INFINITY
            } else {
                best + scores.get(t, s)
            };
            incomplete[idx(s, t, RIGHT)] = best + scores.get(s, t);
            incomplete_split[idx(s, t, LEFT)] = arg;
            incomplete_split[idx(s, t, RIGHT)] = arg;

            let mut best = f64::NEG_INFINITY;
            let mut arg = s;
            for r in s..t {
                let v = complete[idx(s, r, LEFT)] + incomplete[idx(r, t, LEFT)];
                if v > best {
                    best = v;
                    arg = r;
                }
            }
            complete[idx(s, t, LEFT)] = best;
            complete_split[idx(s, t, LEFT)] = arg;

            let mut best = f64::NEG_INFINITY;
            let mut arg = t;
            for r in s + 1..=t {
                let v = incomplete[idx(s, r, RIGHT)] + complete[idx(r, t, RIGHT)];
                if v > best {
                    best = v;
                    arg = r;
                }
            }
            complete[idx(s, t, RIGHT)] = best;
            complete_split[idx(s, t, RIGHT)] = arg;
        }
    }

    let mut heads = vec![0usize; n];
    // (s, t, direction, is_complete)
    let mut stack = vec![(0usize, n, RIGHT, true)];
    while let Some((s, t, d, is_complete)) = stack.pop() {
        if s == t {
            continue;
        }
        if is_complete {
            let r = complete_split[idx(s, t, d)];
            if d == LEFT {
                stack.push((s, r, LEFT, true));
                stack.push((r, t, LEFT, false));
            } else {
                stack.push((s, r, RIGHT, false));
                stack.push((r, t, RIGHT, true));
            }
        } else {
            let r = incomplete_split[idx(s, t, d)];
            if d == LEFT {
                heads[s - 1] = t;
            } else {
                heads[t - 1] = s;
            }
            stack.push((s, r, RIGHT, true));
            stack.push((r + 1, t, LEFT, true));
        }
    }
    (heads, complete[idx(0, n, RIGHT)])
}
