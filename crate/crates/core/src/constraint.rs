//! Constraint definitions and their finite-state descriptions.
//!
//! A [`ConstraintFsm`] is a deterministic labelled graph: from each state at
//! most one edge carries a given output bit. Capacity is `log2` of the Perron
//! eigenvalue of the adjacency matrix, and the same matrix drives exact
//! sequence counting.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Upper bound on a run of zeros in an RLL constraint.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunLimit {
    Bounded(usize),
    Unbounded,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Constraint {
    /// Running digital sum confined to `levels` consecutive values.
    DcFree { levels: usize },
    /// Between `d` and `k` zeros separate consecutive ones.
    Rll { d: usize, k: RunLimit },
}

impl fmt::Display for Constraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Constraint::DcFree { levels } => write!(f, "dcfree:{levels}"),
            Constraint::Rll {
                d,
                k: RunLimit::Bounded(k),
            } => write!(f, "rll:{d},{k}"),
            Constraint::Rll {
                d,
                k: RunLimit::Unbounded,
            } => write!(f, "rll:{d},inf"),
        }
    }
}

/// Accepts `dcfree:<N>`, `rll:<d>,<k>` and `rll:<d>,inf`.
impl FromStr for Constraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parameter(format!("unrecognised constraint `{s}`"));
        let (kind, args) = s.trim().split_once(':').ok_or_else(bad)?;
        match kind.to_ascii_lowercase().as_str() {
            "dcfree" | "dc-free" => {
                let levels = args.trim().parse().map_err(|_| bad())?;
                Ok(Constraint::DcFree { levels })
            }
            "rll" => {
                let (d, k) = args.split_once(',').ok_or_else(bad)?;
                let d = d.trim().parse().map_err(|_| bad())?;
                let k = match k.trim() {
                    "inf" | "infinity" | "unbounded" => RunLimit::Unbounded,
                    k => RunLimit::Bounded(k.parse().map_err(|_| bad())?),
                };
                Ok(Constraint::Rll { d, k })
            }
            _ => Err(bad()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Edge {
    pub from: usize,
    pub to: usize,
    pub bit: u8,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintFsm {
    constraint: Constraint,
    num_states: usize,
    edges: Vec<Edge>,
    // next[state][bit]
    next: Vec<[Option<usize>; 2]>,
}

/// Square matrix of edge multiplicities, row = source state.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AdjacencyMatrix {
    size: usize,
    entries: Vec<u32>,
}

impl AdjacencyMatrix {
    pub fn size(&self) -> usize {
        self.size
    }

    pub fn get(&self, row: usize, col: usize) -> u32 {
        self.entries[row * self.size + col]
    }

    pub fn rows(&self) -> Vec<Vec<u32>> {
        self.entries.chunks(self.size).map(<[u32]>::to_vec).collect()
    }
}

/// Outcome of scanning a bit stream through an FSM.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StreamCheck {
    /// Index of the first bit with no outgoing edge, if any.
    pub violation: Option<usize>,
    /// State after the longest valid prefix.
    pub final_state: usize,
}

impl StreamCheck {
    pub fn is_valid(&self) -> bool {
        self.violation.is_none()
    }
}

pub fn build_fsm(constraint: Constraint) -> Result<ConstraintFsm> {
    let mut edges = Vec::new();
    let num_states = match constraint {
        Constraint::DcFree { levels } => {
            if levels < 2 {
                return Err(Error::Parameter(format!(
                    "DC-free constraint needs at least 2 RDS values, got {levels}"
                )));
            }
            for s in 0..levels {
                if s + 1 < levels {
                    edges.push(Edge { from: s, to: s + 1, bit: 1 });
                }
                if s > 0 {
                    edges.push(Edge { from: s, to: s - 1, bit: 0 });
                }
            }
            levels
        }
        Constraint::Rll {
            d,
            k: RunLimit::Bounded(k),
        } => {
            if d >= k {
                return Err(Error::Parameter(format!(
                    "RLL constraint requires d < k, got d={d}, k={k}"
                )));
            }
            // state = zeros since the last one
            for s in 0..=k {
                if s < k {
                    edges.push(Edge { from: s, to: s + 1, bit: 0 });
                }
                if s >= d {
                    edges.push(Edge { from: s, to: 0, bit: 1 });
                }
            }
            k + 1
        }
        Constraint::Rll {
            d,
            k: RunLimit::Unbounded,
        } => {
            // run length is only tracked up to d
            for s in 0..=d {
                let zero_to = if s < d { s + 1 } else { d };
                edges.push(Edge { from: s, to: zero_to, bit: 0 });
                if s == d {
                    edges.push(Edge { from: s, to: 0, bit: 1 });
                }
            }
            d + 1
        }
    };

    let mut next = vec![[None, None]; num_states];
    for e in &edges {
        next[e.from][e.bit as usize] = Some(e.to);
    }
    Ok(ConstraintFsm {
        constraint,
        num_states,
        edges,
        next,
    })
}

impl ConstraintFsm {
    pub fn constraint(&self) -> Constraint {
        self.constraint
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn next_state(&self, state: usize, bit: u8) -> Option<usize> {
        self.next.get(state)?.get(bit as usize).copied().flatten()
    }

    /// Canonical start state: zero RDS for DC-free constraints (the lower
    /// middle level when the count is even), a satisfied minimum run for RLL.
    pub fn default_start(&self) -> usize {
        match self.constraint {
            Constraint::DcFree { levels } => (levels - 1) / 2,
            Constraint::Rll { d, .. } => d,
        }
    }

    pub fn adjacency(&self) -> AdjacencyMatrix {
        let size = self.num_states;
        let mut entries = vec![0; size * size];
        for e in &self.edges {
            entries[e.from * size + e.to] += 1;
        }
        AdjacencyMatrix { size, entries }
    }

    fn is_irreducible(&self) -> bool {
        let reach = |forward: bool| {
            let mut seen = vec![false; self.num_states];
            let mut stack = vec![0];
            seen[0] = true;
            while let Some(s) = stack.pop() {
                for e in &self.edges {
                    let (a, b) = if forward { (e.from, e.to) } else { (e.to, e.from) };
                    if a == s && !seen[b] {
                        seen[b] = true;
                        stack.push(b);
                    }
                }
            }
            seen.into_iter().all(|x| x)
        };
        reach(true) && reach(false)
    }

    /// Capacity in bits per symbol.
    pub fn capacity(&self) -> Result<f64> {
        Ok(self.dominant_eigenvalue()?.log2())
    }

    /// Perron eigenvalue of the adjacency matrix.
    ///
    /// Iterates on `D + I` rather than `D`: a DC-free chain is bipartite, so
    /// `D` has `-lambda` as a second eigenvalue of maximal modulus and plain
    /// power iteration would oscillate. The shift leaves the eigenvectors
    /// alone and makes `lambda + 1` strictly dominant.
    pub fn dominant_eigenvalue(&self) -> Result<f64> {
        const MAX_ITERS: usize = 1_000_000;
        const TOL: f64 = 1e-12;

        if !self.is_irreducible() {
            return Err(Error::Numeric(format!(
                "FSM for {} is not irreducible",
                self.constraint
            )));
        }
        let d = self.adjacency();
        let n = d.size();
        let mut x = vec![1.0f64; n];
        let mut estimate = f64::NAN;
        for _ in 0..MAX_ITERS {
            let mut y = x.clone();
            for (i, yi) in y.iter_mut().enumerate() {
                for (j, xj) in x.iter().enumerate() {
                    *yi += f64::from(d.get(i, j)) * xj;
                }
            }
            let norm: f64 = y.iter().sum();
            let prev: f64 = x.iter().sum();
            let next_estimate = norm / prev - 1.0;
            y.iter_mut().for_each(|v| *v /= norm);
            x = y;
            if (next_estimate - estimate).abs() < TOL {
                return Ok(next_estimate);
            }
            estimate = next_estimate;
        }
        Err(Error::Numeric(format!(
            "power iteration did not converge within {MAX_ITERS} iterations"
        )))
    }

    /// Number of constraint-satisfying sequences of length `m` from `start`.
    /// Saturates at `u128::MAX`.
    pub fn count_sequences_from(&self, start: usize, m: usize) -> Result<u128> {
        if start >= self.num_states {
            return Err(Error::Parameter(format!(
                "start state {start} out of range for {} states",
                self.num_states
            )));
        }
        let mut counts = vec![0u128; self.num_states];
        counts[start] = 1;
        for _ in 0..m {
            let mut next = vec![0u128; self.num_states];
            for e in &self.edges {
                next[e.to] = next[e.to].saturating_add(counts[e.from]);
            }
            counts = next;
        }
        Ok(counts.into_iter().fold(0u128, u128::saturating_add))
    }

    /// Sequence count from [`ConstraintFsm::default_start`].
    pub fn count_sequences(&self, m: usize) -> Result<u128> {
        if m == 0 {
            return Err(Error::Parameter("sequence length must be at least 1".into()));
        }
        self.count_sequences_from(self.default_start(), m)
    }

    pub fn validate_stream(&self, bits: &[u8], start: usize) -> StreamCheck {
        let mut state = start;
        for (i, &b) in bits.iter().enumerate() {
            match self.next_state(state, b) {
                Some(s) => state = s,
                None => {
                    return StreamCheck {
                        violation: Some(i),
                        final_state: state,
                    }
                }
            }
        }
        StreamCheck {
            violation: None,
            final_state: state,
        }
    }
}

/// Rate and efficiency of a fixed-length `k`-to-`n` code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateReport {
    pub k: usize,
    pub n: usize,
    pub rate: f64,
    /// `rate / capacity` as a fraction.
    pub efficiency: f64,
}

impl RateReport {
    pub fn efficiency_percent(&self) -> f64 {
        round_half_up(self.efficiency * 100.0, 2)
    }
}

pub fn round_half_up(value: f64, decimals: i32) -> f64 {
    let scale = 10f64.powi(decimals);
    (value * scale + 0.5).floor() / scale
}

/// For each `k` in `1..=k_max`, the shortest codeword length `n` with
/// `k / n <= capacity`.
pub fn fl_rate_table(capacity: f64, k_max: usize) -> Result<Vec<RateReport>> {
    if !(capacity > 0.0 && capacity <= 1.0) {
        return Err(Error::Parameter(format!(
            "capacity must lie in (0, 1], got {capacity}"
        )));
    }
    Ok((1..=k_max)
        .map(|k| {
            let mut n = k;
            while k as f64 > capacity * n as f64 {
                n += 1;
            }
            let rate = k as f64 / n as f64;
            RateReport {
                k,
                n,
                rate,
                efficiency: rate / capacity,
            }
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VlRateReport {
    pub k_bar: f64,
    pub n_bar: f64,
    pub rate: f64,
    pub efficiency: f64,
}

impl VlRateReport {
    pub fn efficiency_percent(&self) -> f64 {
        round_half_up(self.efficiency * 100.0, 2)
    }
}

/// Average rate of a variable-length code from `(source_len, codeword_len)`
/// pairs, assuming equiprobable source bits.
pub fn average_rate(pairs: &[(usize, usize)], capacity: f64) -> Result<VlRateReport> {
    check_complete_prefix_lengths(pairs.iter().map(|p| p.0))?;
    let mut k_bar = 0.0;
    let mut n_bar = 0.0;
    for &(s, o) in pairs {
        let p = 0.5f64.powi(s as i32);
        k_bar += p * s as f64;
        n_bar += p * o as f64;
    }
    let rate = k_bar / n_bar;
    Ok(VlRateReport {
        k_bar,
        n_bar,
        rate,
        efficiency: rate / capacity,
    })
}

/// Kraft sum over source-word lengths must equal exactly one.
pub(crate) fn check_complete_prefix_lengths(lengths: impl Iterator<Item = usize>) -> Result<()> {
    let lengths: Vec<usize> = lengths.collect();
    let longest = lengths.iter().copied().max().unwrap_or(0);
    if lengths.is_empty() || lengths.contains(&0) || longest > 63 {
        return Err(Error::Codebook("source word lengths must lie in 1..=63".into()));
    }
    let sum: u128 = lengths.iter().map(|&s| 1u128 << (longest - s)).sum();
    if sum != 1u128 << longest {
        return Err(Error::Codebook(format!(
            "source words are not a complete prefix set (Kraft sum {sum}/{})",
            1u128 << longest
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::parse_bits;

    fn dc5() -> ConstraintFsm {
        build_fsm(Constraint::DcFree { levels: 5 }).unwrap()
    }

    fn rll13() -> ConstraintFsm {
        build_fsm(Constraint::Rll {
            d: 1,
            k: RunLimit::Bounded(3),
        })
        .unwrap()
    }

    fn unconstrained() -> ConstraintFsm {
        build_fsm(Constraint::Rll {
            d: 0,
            k: RunLimit::Unbounded,
        })
        .unwrap()
    }

    /// Brute-force count: scan every length-m word through the validator.
    fn brute_count(fsm: &ConstraintFsm, start: usize, m: usize) -> u128 {
        (0u32..1 << m)
            .filter(|w| {
                let bits: Vec<u8> = (0..m).rev().map(|i| ((w >> i) & 1) as u8).collect();
                fsm.validate_stream(&bits, start).is_valid()
            })
            .count() as u128
    }

    /// Faddeev-LeVerrier characteristic polynomial, highest degree first.
    fn char_poly(d: &AdjacencyMatrix) -> Vec<f64> {
        let n = d.size();
        let a: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| f64::from(d.get(i, j))).collect())
            .collect();
        let matmul = |x: &Vec<Vec<f64>>, y: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            (0..n)
                .map(|i| (0..n).map(|j| (0..n).map(|k| x[i][k] * y[k][j]).sum()).collect())
                .collect()
        };
        let mut coeffs = vec![1.0];
        let mut m = vec![vec![0.0; n]; n];
        let mut c = 1.0;
        for k in 1..=n {
            let mut next = matmul(&a, &m);
            for (i, row) in next.iter_mut().enumerate() {
                row[i] += c;
            }
            m = next;
            let am = matmul(&a, &m);
            let trace: f64 = (0..n).map(|i| am[i][i]).sum();
            c = -trace / k as f64;
            coeffs.push(c);
        }
        coeffs
    }

    /// Largest real root by bisection from above, starting at the row-sum bound.
    fn largest_root(poly: &[f64], upper: f64) -> f64 {
        let eval = |z: f64| poly.iter().fold(0.0, |acc, c| acc * z + c);
        // scan downward for the first sign change
        let step = 1e-3;
        let mut hi = upper + 1.0;
        let sign_hi = eval(hi).signum();
        let mut lo = hi - step;
        while eval(lo).signum() == sign_hi && eval(lo) != 0.0 {
            hi = lo;
            lo -= step;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if eval(mid).signum() == sign_hi {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn dc_free_chain_topology() {
        let fsm = dc5();
        assert_eq!(fsm.num_states(), 5);
        for s in 0..5 {
            let out = fsm.edges().iter().filter(|e| e.from == s).count();
            assert_eq!(out, if s == 0 || s == 4 { 1 } else { 2 });
        }
        assert!(build_fsm(Constraint::DcFree { levels: 1 }).is_err());
    }

    #[test]
    fn rll_fsm_tracks_runs() {
        let fsm = rll13();
        assert_eq!(fsm.num_states(), 4);
        assert_eq!(fsm.next_state(0, 1), None);
        assert_eq!(fsm.next_state(0, 0), Some(1));
        assert_eq!(fsm.next_state(3, 0), None);
        assert_eq!(fsm.next_state(3, 1), Some(0));
        assert!(build_fsm(Constraint::Rll { d: 3, k: RunLimit::Bounded(3) }).is_err());
    }

    #[test]
    fn adjacency_examples() {
        let dc2 = build_fsm(Constraint::DcFree { levels: 2 }).unwrap();
        assert_eq!(dc2.adjacency().rows(), vec![vec![0, 1], vec![1, 0]]);
        assert_eq!(unconstrained().adjacency().rows(), vec![vec![2]]);
        let d = dc5().adjacency();
        for i in 0..5usize {
            for j in 0..5 {
                let expect = u32::from(i.abs_diff(j) == 1);
                assert_eq!(d.get(i, j), expect, "({i},{j})");
            }
        }
    }

    #[test]
    fn capacity_values() {
        assert!((dc5().capacity().unwrap() - 0.7925).abs() < 5e-4);
        assert!((unconstrained().capacity().unwrap() - 1.0).abs() < 1e-12);
        assert!((rll13().capacity().unwrap() - 0.551_463_089_745_594_7).abs() < 1e-9);
    }

    #[test]
    fn capacity_matches_characteristic_polynomial_root() {
        let shipped = [
            Constraint::DcFree { levels: 2 },
            Constraint::DcFree { levels: 3 },
            Constraint::DcFree { levels: 5 },
            Constraint::DcFree { levels: 7 },
            Constraint::Rll { d: 1, k: RunLimit::Bounded(3) },
            Constraint::Rll { d: 2, k: RunLimit::Bounded(7) },
            Constraint::Rll { d: 0, k: RunLimit::Bounded(1) },
            Constraint::Rll { d: 1, k: RunLimit::Unbounded },
        ];
        for c in shipped {
            let fsm = build_fsm(c).unwrap();
            let d = fsm.adjacency();
            let root = largest_root(&char_poly(&d), 2.0);
            let lambda = fsm.dominant_eigenvalue().unwrap();
            assert!(
                (lambda.log2() - root.log2()).abs() < 1e-8,
                "{c}: power {lambda} vs poly {root}"
            );
        }
    }

    #[test]
    fn counting_matches_brute_force() {
        let rll = rll13();
        assert_eq!(rll.count_sequences(4).unwrap(), brute_count(&rll, 1, 4));
        assert_eq!(rll.count_sequences(4).unwrap(), 6);
        let dc = dc5();
        for m in 1..=12 {
            assert_eq!(dc.count_sequences(m).unwrap(), brute_count(&dc, 2, m));
            assert_eq!(rll.count_sequences(m).unwrap(), brute_count(&rll, 1, m));
        }
        assert_eq!(unconstrained().count_sequences(10).unwrap(), 1024);
        assert!(dc.count_sequences(0).is_err());
    }

    #[test]
    fn counting_saturates() {
        assert_eq!(unconstrained().count_sequences(200).unwrap(), u128::MAX);
    }

    #[test]
    fn count_rate_approaches_capacity() {
        for fsm in [dc5(), rll13()] {
            let c = fsm.capacity().unwrap();
            let gap = |m: usize| (((fsm.count_sequences(m).unwrap() as f64).log2() / m as f64) - c).abs();
            assert!(gap(24) <= 0.03, "{}: {}", fsm.constraint(), gap(24));
            assert!(gap(48) < gap(24) && gap(24) < gap(12));
        }
    }

    #[test]
    fn stream_validation() {
        let dc = dc5();
        assert!(dc.validate_stream(&parse_bits("110010").unwrap(), 2).is_valid());
        let bad = dc.validate_stream(&parse_bits("111111").unwrap(), 2);
        assert_eq!(bad.violation, Some(2));
        let rll = rll13();
        assert!(rll.validate_stream(&parse_bits("0100010010").unwrap(), 1).is_valid());
        assert_eq!(rll.validate_stream(&parse_bits("0110").unwrap(), 1).violation, Some(2));
        assert_eq!(rll.validate_stream(&parse_bits("00001").unwrap(), 0).violation, Some(3));
    }

    #[test]
    fn rate_table_examples() {
        let rows = fl_rate_table(0.7925, 20).unwrap();
        assert_eq!((rows[1].k, rows[1].n), (2, 3));
        assert_eq!(rows[1].efficiency_percent(), 84.12);
        assert_eq!((rows[18].k, rows[18].n), (19, 24));
        assert_eq!(rows[18].efficiency_percent(), 99.89);
        let half = fl_rate_table(0.5, 3).unwrap();
        assert_eq!((half[2].n, half[2].rate, half[2].efficiency), (6, 0.5, 1.0));
        assert!(fl_rate_table(0.0, 3).is_err());
    }

    #[test]
    fn average_rate_examples() {
        let r = average_rate(&[(1, 2), (2, 3), (2, 4)], 1.0).unwrap();
        assert!((r.rate - 1.5 / 2.75).abs() < 1e-15);
        let unit = average_rate(&[(1, 1), (1, 1)], 1.0).unwrap();
        assert_eq!(unit.rate, 1.0);
        assert!(average_rate(&[(1, 2), (2, 3)], 1.0).is_err());
    }

    #[test]
    fn parse_constraint() {
        assert_eq!("dcfree:5".parse::<Constraint>().unwrap(), Constraint::DcFree { levels: 5 });
        assert_eq!(
            "rll:1,inf".parse::<Constraint>().unwrap(),
            Constraint::Rll { d: 1, k: RunLimit::Unbounded }
        );
        assert!("rll:1".parse::<Constraint>().is_err());
    }
}
