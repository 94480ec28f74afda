//! Depth-first enumeration of inverse branches φ_ω over a fixed point set.
//!
//! Words grow by prepending: S_{iω}(x) = S_ω(x) + φ⁽ⁱ⁾(φ_ω(x)) and
//! φ_{iω} = φᵢ∘φ_ω, so each word costs one map and one potential evaluation
//! per point. The enumeration is split into fixed blocks (independent of
//! the thread count) which run in parallel; results come back in block
//! order so reductions are reproducible.

use rayon::prelude::*;

use crate::potential::Model;
use crate::shift::Word;

/// The state of one branch at every point of the sweep.
pub struct Branch<'a> {
    /// ω in prepend order: ωₙ, …, ω₁.
    pub rev: &'a [u32],
    /// S_ω(φ)(x) per point.
    pub s: &'a [f64],
    /// φ_ω(x) per point.
    pub y: &'a [f64],
    /// φ^{(ω₁)}(φ_{σω}(x)) per point, i.e. the amalgamated potential on [ω].
    pub first: &'a [f64],
}

impl Branch<'_> {
    pub fn len(&self) -> usize {
        self.rev.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rev.is_empty()
    }

    pub fn word(&self) -> Word {
        Word::new(self.rev.iter().rev().copied().collect::<Vec<_>>()).expect("symbols are positive")
    }

    /// Lexicographic rank of ω among words of the same length.
    pub fn rank(&self, alphabet: u32) -> usize {
        self.rev
            .iter()
            .rev()
            .fold(0usize, |acc, &s| acc * alphabet as usize + (s - 1) as usize)
    }
}

struct Levels {
    s: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
    first: Vec<Vec<f64>>,
    rev: Vec<u32>,
}

impl Levels {
    fn new(points: &[f64], depth: usize) -> Self {
        let k = points.len();
        let mut y = vec![vec![0.0; k]; depth + 1];
        y[0].copy_from_slice(points);
        Levels {
            s: vec![vec![0.0; k]; depth + 1],
            y,
            first: vec![vec![0.0; k]; depth + 1],
            rev: Vec::with_capacity(depth),
        }
    }

    /// Fills level d + 1 with the branch obtained by prepending `sym`.
    #[inline]
    fn descend(&mut self, model: &Model, d: usize, sym: u32) {
        let (s_lo, s_hi) = self.s.split_at_mut(d + 1);
        let (y_lo, y_hi) = self.y.split_at_mut(d + 1);
        let (ps, py) = (&s_lo[d], &y_lo[d]);
        let (cs, cy, cf) = (&mut s_hi[0], &mut y_hi[0], &mut self.first[d + 1]);
        for k in 0..ps.len() {
            let (p, ny) = model.step(sym, py[k]);
            cf[k] = p;
            cs[k] = ps[k] + p;
            cy[k] = ny;
        }
        self.rev.truncate(d);
        self.rev.push(sym);
    }

    fn branch(&self, d: usize) -> Branch<'_> {
        Branch {
            rev: &self.rev[..d],
            s: &self.s[d],
            y: &self.y[d],
            first: &self.first[d],
        }
    }
}

fn dfs<T, F>(model: &Model, alphabet: u32, lv: &mut Levels, d: usize, max: usize, acc: &mut T, visit: &F)
where
    F: Fn(&mut T, &Branch) + Sync,
{
    if d == max {
        return;
    }
    for sym in 1..=alphabet {
        lv.descend(model, d, sym);
        visit(acc, &lv.branch(d + 1));
        dfs(model, alphabet, lv, d + 1, max, acc, visit);
    }
}

/// Depth at which the enumeration is split into parallel blocks.
fn split_depth(alphabet: u32, depth: usize) -> usize {
    let mut b = 1;
    let mut count = alphabet as u64;
    while count < 64 && b < depth {
        b += 1;
        count = count.saturating_mul(alphabet as u64);
    }
    b.min(depth)
}

/// Visits every word of length 1..=depth over {1..alphabet}. Returns one
/// accumulator per block, in a fixed order.
pub fn sweep<T, I, F>(model: &Model, alphabet: u32, depth: usize, points: &[f64], init: I, visit: F) -> Vec<T>
where
    T: Send,
    I: Fn() -> T + Sync,
    F: Fn(&mut T, &Branch) + Sync,
{
    if depth == 0 || alphabet == 0 {
        return vec![init()];
    }
    let b = split_depth(alphabet, depth);
    let mut head = init();
    let mut lv = Levels::new(points, depth);
    dfs(model, alphabet, &mut lv, 0, b - 1, &mut head, &visit);

    let blocks = (alphabet as usize).pow(b as u32);
    let mut out: Vec<T> = Vec::with_capacity(blocks + 1);
    out.push(head);
    let rest: Vec<T> = (0..blocks)
        .into_par_iter()
        .map(|blk| {
            let mut acc = init();
            let mut lv = Levels::new(points, depth);
            // rev stack of length b; its last entry is ω₁
            let mut r = blk;
            let mut rev = vec![0u32; b];
            for slot in rev.iter_mut() {
                *slot = (r % alphabet as usize) as u32 + 1;
                r /= alphabet as usize;
            }
            for (d, &sym) in rev.iter().enumerate() {
                lv.descend(model, d, sym);
            }
            visit(&mut acc, &lv.branch(b));
            dfs(model, alphabet, &mut lv, b, depth, &mut acc, &visit);
            acc
        })
        .collect();
    out.extend(rest);
    out
}
