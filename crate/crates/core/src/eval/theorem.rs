//! Exhaustive check of optimal-path alignment between a reference cost
//! field H and a generated field R on grids small enough to enumerate every
//! simple path.
//!
//! Paths are 4-connected and a move into cell `x` costs `1 + λ·F(x)`, so a
//! positive affine `R = a·H + b` has the same optimal paths as H when
//! `λ_R = λ_H / (a − λ_H·b)`. Costs are exact rationals.

use super::EvalError;
use crate::data::{cost_of, seeded_rng, TotalOrdering};
use crate::plan::Cell;
use num_integer::Integer;
use num_rational::Ratio;
use rand::Rng;
use serde::{Deserialize, Serialize};

pub type Q = Ratio<i64>;

/// Longest path enumerated, in moves.
pub const MAX_MOVES: usize = 14;
/// Largest grid side the verifier accepts.
pub const MAX_SIDE: usize = 6;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremConfig {
    pub lambda_h: Q,
    pub lambda_r: Q,
    pub max_moves: usize,
}

impl TheoremConfig {
    /// Same λ for both fields.
    pub fn uniform(lambda: Q) -> Self {
        Self {
            lambda_h: lambda,
            lambda_r: lambda,
            max_moves: MAX_MOVES,
        }
    }
}

/// λ for `R = a·H + b` that makes its path costs a positive multiple of
/// H's under `lambda_h`; `None` unless `a > lambda_h · b`.
pub fn affine_lambda(lambda_h: Q, a: Q, b: Q) -> Option<Q> {
    let d = a - lambda_h * b;
    (d > Q::from_integer(0)).then(|| lambda_h / d)
}

/// Start/goal pair whose R-optimal path costs more under H than the
/// H-optimal path does.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    pub start: Cell,
    pub goal: Cell,
    pub r_path: Vec<Cell>,
    pub h_cost_of_r_path: Q,
    pub h_optimum: Q,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremReport {
    pub pairs: usize,
    pub paths: u64,
    /// Pairs whose H- and R-optimal path sets differ.
    pub argmin_mismatches: usize,
    /// Pairs with an R-optimal path whose H-cost is not the H optimum.
    pub cost_mismatches: usize,
    /// Cell pairs where H ties and R does not, or the reverse.
    pub nc1_violations: usize,
    /// Cell pairs where H and R order the two cells differently.
    pub nc2_violations: usize,
    pub witness: Option<Witness>,
}

/// Every ordered (start, goal) pair of a grid.
pub fn all_pairs(width: usize, height: usize) -> Vec<(Cell, Cell)> {
    let cells: Vec<Cell> = (0..height).flat_map(|y| (0..width).map(move |x| [x, y])).collect();
    cells.iter().flat_map(|&s| cells.iter().map(move |&g| (s, g))).collect()
}

/// `count` pairs drawn uniformly with replacement.
pub fn sample_pairs(width: usize, height: usize, count: usize, seed: u64) -> Vec<(Cell, Cell)> {
    let mut rng = seeded_rng(seed, 0);
    let mut cell = || [rng.gen_range(0..width), rng.gen_range(0..height)];
    (0..count).map(|_| (cell(), cell())).collect()
}

/// Per-move costs `1 + λ·F(x)` over a common denominator.
fn scaled_costs(lambda_h: Q, h: &[Q], lambda_r: Q, r: &[Q]) -> Result<(Vec<i128>, i128, Vec<i128>), EvalError> {
    let step = |lambda: Q, c: Q| -> Result<(i128, i128), EvalError> {
        let (p, q) = (*lambda.numer() as i128, *lambda.denom() as i128);
        let (u, v) = (*c.numer() as i128, *c.denom() as i128);
        let den = q.checked_mul(v).ok_or(EvalError::Overflow)?;
        let num = den.checked_add(p.checked_mul(u).ok_or(EvalError::Overflow)?).ok_or(EvalError::Overflow)?;
        let g = num.gcd(&den);
        Ok((num / g, den / g))
    };
    let scale = |lambda: Q, f: &[Q]| -> Result<(Vec<i128>, i128), EvalError> {
        let fracs = f.iter().map(|&c| step(lambda, c)).collect::<Result<Vec<_>, _>>()?;
        let d = fracs.iter().fold(1i128, |acc, &(_, den)| acc.lcm(&den));
        if d > i64::MAX as i128 {
            return Err(EvalError::Overflow);
        }
        let ints = fracs
            .iter()
            .map(|&(num, den)| num.checked_mul(d / den).ok_or(EvalError::Overflow))
            .collect::<Result<Vec<_>, _>>()?;
        Ok((ints, d))
    };
    let (mh, dh) = scale(lambda_h, h)?;
    let (mr, _) = scale(lambda_r, r)?;
    Ok((mh, dh, mr))
}

struct Walker<'a> {
    width: usize,
    height: usize,
    max_moves: usize,
    mh: &'a [i128],
    mr: &'a [i128],
    path: Vec<usize>,
}

impl Walker<'_> {
    /// Calls `visit(goal, path, jh, jr)` for every simple path from the
    /// last cell of `self.path`.
    fn walk(&mut self, visited: u64, jh: i128, jr: i128, visit: &mut impl FnMut(usize, &[usize], i128, i128)) {
        let u = *self.path.last().expect("path starts at the start cell");
        visit(u, &self.path, jh, jr);
        if self.path.len() > self.max_moves {
            return;
        }
        let (x, y) = (u % self.width, u / self.width);
        let mut next = [usize::MAX; 4];
        if y > 0 {
            next[0] = u - self.width;
        }
        if x > 0 {
            next[1] = u - 1;
        }
        if x + 1 < self.width {
            next[2] = u + 1;
        }
        if y + 1 < self.height {
            next[3] = u + self.width;
        }
        for v in next {
            if v == usize::MAX || visited >> v & 1 == 1 {
                continue;
            }
            self.path.push(v);
            self.walk(visited | 1 << v, jh + self.mh[v], jr + self.mr[v], visit);
            self.path.pop();
        }
    }
}

/// Compares H- and R-optimal paths over every simple path of at most
/// `config.max_moves` moves for each requested start/goal pair.
pub fn verify_theorem(
    width: usize,
    height: usize,
    h: &[Q],
    r: &[Q],
    pairs: &[(Cell, Cell)],
    config: &TheoremConfig,
) -> Result<TheoremReport, EvalError> {
    if width == 0 || height == 0 || width > MAX_SIDE || height > MAX_SIDE {
        return Err(EvalError::Input(format!(
            "{width}×{height} grid; enumeration needs sides in 1..={MAX_SIDE}"
        )));
    }
    let n = width * height;
    if h.len() != n || r.len() != n {
        return Err(EvalError::Input(format!(
            "fields of {} and {} cells for a {width}×{height} grid",
            h.len(),
            r.len()
        )));
    }
    let zero = Q::from_integer(0);
    if config.lambda_h < zero || config.lambda_r < zero {
        return Err(EvalError::Input("λ must be ≥ 0".into()));
    }
    if h.iter().chain(r).any(|&c| c < zero) {
        return Err(EvalError::Input("costs must be ≥ 0".into()));
    }
    if let Some(&(s, g)) = pairs.iter().find(|(s, g)| s[0] >= width || s[1] >= height || g[0] >= width || g[1] >= height) {
        return Err(EvalError::Input(format!("pair {s:?} → {g:?} is outside the grid")));
    }

    let (mut nc1, mut nc2) = (0, 0);
    for i in 0..n {
        for j in i + 1..n {
            if (h[i] == h[j]) != (r[i] == r[j]) {
                nc1 += 1;
            }
            if (h[i] < h[j]) != (r[i] < r[j]) || (h[j] < h[i]) != (r[j] < r[i]) {
                nc2 += 1;
            }
        }
    }

    let (mh, dh, mr) = scaled_costs(config.lambda_h, h, config.lambda_r, r)?;
    let mut goals_of: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(s, g) in pairs {
        goals_of[s[1] * width + s[0]].push(g[1] * width + g[0]);
    }
    let mut report = TheoremReport {
        pairs: pairs.len(),
        paths: 0,
        argmin_mismatches: 0,
        cost_mismatches: 0,
        nc1_violations: nc1,
        nc2_violations: nc2,
        witness: None,
    };
    let cell = |i: usize| [i % width, i / width];
    for (s, goals) in goals_of.iter().enumerate() {
        if goals.is_empty() {
            continue;
        }
        let mut wanted = vec![false; n];
        goals.iter().for_each(|&g| wanted[g] = true);
        let mut walker = Walker {
            width,
            height,
            max_moves: config.max_moves,
            mh: &mh,
            mr: &mr,
            path: vec![s],
        };
        let mut min_h = vec![i128::MAX; n];
        let mut min_r = vec![i128::MAX; n];
        walker.walk(1 << s, 0, 0, &mut |g, _, jh, jr| {
            min_h[g] = min_h[g].min(jh);
            min_r[g] = min_r[g].min(jr);
        });
        let mut argmin_bad = vec![false; n];
        let mut cost_bad = vec![false; n];
        let mut paths = 0u64;
        let mut witness = report.witness.take();
        walker.walk(1 << s, 0, 0, &mut |g, path, jh, jr| {
            if !wanted[g] {
                return;
            }
            paths += 1;
            let (h_opt, r_opt) = (jh == min_h[g], jr == min_r[g]);
            argmin_bad[g] |= h_opt != r_opt;
            if r_opt && !h_opt {
                cost_bad[g] = true;
                if witness.is_none() {
                    witness = Some(Witness {
                        start: cell(s),
                        goal: cell(g),
                        r_path: path.iter().map(|&i| cell(i)).collect(),
                        h_cost_of_r_path: unscale(jh, dh),
                        h_optimum: unscale(min_h[g], dh),
                    });
                }
            }
        });
        report.witness = witness;
        report.paths += paths;
        for &g in goals {
            report.argmin_mismatches += argmin_bad[g] as usize;
            report.cost_mismatches += cost_bad[g] as usize;
        }
    }
    Ok(report)
}

fn unscale(v: i128, d: i128) -> Q {
    Q::from_integer((v / d) as i64) + Q::new((v % d) as i64, d as i64)
}

/// Reference field: each cell's rank cost under `ordering`, exactly.
pub fn rank_field(labels: &[u8], ordering: &TotalOrdering) -> Result<Vec<Q>, EvalError> {
    let l = ordering.len() as i64;
    labels
        .iter()
        .map(|&lab| {
            cost_of(ordering, lab)?;
            let rank = ordering.rank(lab).expect("cost_of checked the label") as i64;
            Ok(if l == 1 { Q::from_integer(0) } else { Q::new(rank - 1, l - 1) })
        })
        .collect()
}

/// Positive affine image `a·f + b`.
pub fn affine(f: &[Q], a: Q, b: Q) -> Vec<Q> {
    f.iter().map(|&c| a * c + b).collect()
}

/// `f` with the costs of labels `a` and `b` exchanged.
pub fn swap_label_costs(labels: &[u8], f: &[Q], a: u8, b: u8) -> Result<Vec<Q>, EvalError> {
    let cost_of_label = |l: u8| {
        labels
            .iter()
            .position(|&x| x == l)
            .map(|i| f[i])
            .ok_or_else(|| EvalError::Input(format!("label {l} is absent")))
    };
    let (ca, cb) = (cost_of_label(a)?, cost_of_label(b)?);
    Ok(labels
        .iter()
        .zip(f)
        .map(|(&l, &c)| if l == a { cb } else if l == b { ca } else { c })
        .collect())
}

/// Small random instance for the theorem suite.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TheoremInstance {
    pub seed: u64,
    pub width: usize,
    pub height: usize,
    pub labels: Vec<u8>,
    pub ordering: TotalOrdering,
    /// Labels whose costs the NC2-violating field swaps.
    pub swapped: (u8, u8),
}

impl TheoremInstance {
    /// Side in 4..=6, 3 to 5 labels drawn per cell, and a swap between the
    /// labels of two diagonal neighbours with different costs.
    pub fn random(seed: u64) -> Self {
        let mut rng = seeded_rng(seed, 0);
        loop {
            let side = rng.gen_range(4..=MAX_SIDE);
            let num_labels = rng.gen_range(3..=5);
            let labels: Vec<u8> = (0..side * side).map(|_| rng.gen_range(0..num_labels as u8)).collect();
            let ordering = TotalOrdering::random(&mut rng, num_labels);
            let mut diagonals = Vec::new();
            for y in 0..side - 1 {
                for x in 0..side - 1 {
                    let (a, b) = (labels[y * side + x + 1], labels[(y + 1) * side + x]);
                    if a != b {
                        diagonals.push((a.min(b), a.max(b)));
                    }
                    let (a, b) = (labels[y * side + x], labels[(y + 1) * side + x + 1]);
                    if a != b {
                        diagonals.push((a.min(b), a.max(b)));
                    }
                }
            }
            if diagonals.is_empty() {
                continue;
            }
            let swapped = diagonals[rng.gen_range(0..diagonals.len())];
            return Self {
                seed,
                width: side,
                height: side,
                labels,
                ordering,
                swapped,
            };
        }
    }

    pub fn h_field(&self) -> Result<Vec<Q>, EvalError> {
        rank_field(&self.labels, &self.ordering)
    }
}
