//! Variable-length codebooks: encoding, greedy bit-by-bit segmentation,
//! resynchronizing segmentation, and decoding from a codeword boundary
//! vector produced by a segmentation network.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use crate::bits::{bits_to_u64, check_bits, format_bits, parse_bits};
use crate::channel::Modulation;
use crate::constraint::{average_rate, VlRateReport};
use crate::error::{Error, Result};

/// Marker written into unused batch positions before modulation.
pub const PAD_VALUE: f64 = -1.0;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VlEntry {
    pub source: Vec<u8>,
    /// Per encoder state: emitted codeword and the next state.
    pub outputs: Vec<(Vec<u8>, usize)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct VlCodebook {
    entries: Vec<VlEntry>,
    num_states: usize,
    l_max: usize,
    // (state, codeword length, codeword value) -> entry
    by_codeword: HashMap<(usize, usize, u64), usize>,
}

impl VlCodebook {
    pub fn new(entries: Vec<VlEntry>, num_states: usize) -> Result<Self> {
        if num_states == 0 || entries.is_empty() {
            return Err(Error::Codebook("codebook needs at least one state and one entry".into()));
        }
        let mut by_codeword = HashMap::new();
        let mut l_max = 0;
        for (i, e) in entries.iter().enumerate() {
            check_bits(&e.source)?;
            if e.outputs.len() != num_states {
                return Err(Error::Codebook(format!(
                    "entry {} has {} state outputs, expected {num_states}",
                    format_bits(&e.source),
                    e.outputs.len()
                )));
            }
            for (state, (cw, next)) in e.outputs.iter().enumerate() {
                check_bits(cw)?;
                if cw.is_empty() || cw.len() > 63 {
                    return Err(Error::Codebook("codeword lengths must lie in 1..=63".into()));
                }
                if *next >= num_states {
                    return Err(Error::Codebook(format!("next state {next} out of range")));
                }
                l_max = l_max.max(cw.len());
                if by_codeword
                    .insert((state, cw.len(), bits_to_u64(cw)), i)
                    .is_some()
                {
                    return Err(Error::Codebook(format!(
                        "codeword {} appears twice in state {state}",
                        format_bits(cw)
                    )));
                }
            }
        }
        for state in 0..num_states {
            let words: Vec<&[u8]> = entries.iter().map(|e| e.outputs[state].0.as_slice()).collect();
            check_prefix_free(&words, &format!("codewords of state {}", state + 1))?;
        }
        let sources: Vec<&[u8]> = entries.iter().map(|e| e.source.as_slice()).collect();
        check_prefix_free(&sources, "source words")?;
        crate::constraint::check_complete_prefix_lengths(entries.iter().map(|e| e.source.len()))?;

        Ok(VlCodebook {
            entries,
            num_states,
            l_max,
            by_codeword,
        })
    }

    /// Single-state (d=1, k=3) RLL code: 0 -> 01, 10 -> 001, 11 -> 0001.
    pub fn rll_1_3() -> Self {
        let rows = [("0", "01"), ("10", "001"), ("11", "0001")];
        let entries = rows
            .iter()
            .map(|(s, c)| VlEntry {
                source: parse_bits(s).unwrap(),
                outputs: vec![(parse_bits(c).unwrap(), 0)],
            })
            .collect();
        Self::new(entries, 1).expect("built-in RLL table is valid")
    }

    /// Two-state DC-free code keeping the running digital sum within five
    /// values.
    pub fn dc_free_two_state() -> Self {
        // source, (codeword, next) in state 1, (codeword, next) in state 2
        let rows = [
            ("00", ("11", 1), ("00", 0)),
            ("010", ("0111", 1), ("1000", 0)),
            ("011", ("0101", 0), ("0101", 1)),
            ("100", ("0110", 0), ("0110", 1)),
            ("101", ("1011", 1), ("0100", 0)),
            ("110", ("1001", 0), ("1001", 1)),
            ("111", ("1010", 0), ("1010", 1)),
        ];
        let entries = rows
            .iter()
            .map(|(s, a, b)| VlEntry {
                source: parse_bits(s).unwrap(),
                outputs: vec![(parse_bits(a.0).unwrap(), a.1), (parse_bits(b.0).unwrap(), b.1)],
            })
            .collect();
        Self::new(entries, 2).expect("built-in DC-free table is valid")
    }

    pub fn entries(&self) -> &[VlEntry] {
        &self.entries
    }

    pub fn num_states(&self) -> usize {
        self.num_states
    }

    /// Longest codeword over all states.
    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn is_single_state(&self) -> bool {
        self.num_states == 1
    }

    fn lookup(&self, state: usize, word: &[u8]) -> Option<usize> {
        if word.is_empty() || word.len() > self.l_max {
            return None;
        }
        self.by_codeword
            .get(&(state, word.len(), bits_to_u64(word)))
            .copied()
    }

    /// Entry whose source word is a prefix of `source`.
    fn match_source(&self, source: &[u8]) -> Option<usize> {
        self.entries
            .iter()
            .position(|e| source.starts_with(&e.source))
    }

    /// Average rate per state, averaged uniformly over states.
    pub fn average_rate(&self, capacity: f64) -> Result<VlRateReport> {
        let mut reports = Vec::with_capacity(self.num_states);
        for state in 0..self.num_states {
            let pairs: Vec<(usize, usize)> = self
                .entries
                .iter()
                .map(|e| (e.source.len(), e.outputs[state].0.len()))
                .collect();
            reports.push(average_rate(&pairs, capacity)?);
        }
        let s = reports.len() as f64;
        let k_bar = reports.iter().map(|r| r.k_bar).sum::<f64>() / s;
        let n_bar = reports.iter().map(|r| r.n_bar).sum::<f64>() / s;
        let rate = k_bar / n_bar;
        Ok(VlRateReport {
            k_bar,
            n_bar,
            rate,
            efficiency: rate / capacity,
        })
    }

    /// Text form: `states=<S>` header, then
    /// `<source>\t<cw1>,<next1>[\t<cw2>,<next2>...]` with 1-based states.
    pub fn to_text(&self) -> String {
        let mut out = format!("states={}\n", self.num_states);
        for e in &self.entries {
            out.push_str(&format_bits(&e.source));
            for (cw, next) in &e.outputs {
                let _ = write!(out, "\t{},{}", format_bits(cw), next + 1);
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut num_states = None;
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = match raw.find('#') {
                Some(p) => raw[..p].trim(),
                None => raw.trim(),
            };
            if line.is_empty() {
                continue;
            }
            let fmt_err = |message: String| Error::Format { line: line_no, message };
            let Some(states) = num_states else {
                let value = line
                    .strip_prefix("states=")
                    .ok_or_else(|| fmt_err("expected `states=<S>` header".into()))?;
                num_states = Some(
                    value
                        .trim()
                        .parse::<usize>()
                        .map_err(|_| fmt_err(format!("invalid state count `{value}`")))?,
                );
                continue;
            };
            let mut fields = line.split('\t').map(str::trim).filter(|f| !f.is_empty());
            let source = parse_bits(fields.next().unwrap()).map_err(|e| fmt_err(e.to_string()))?;
            let mut outputs = Vec::with_capacity(states);
            for field in fields {
                let (cw, next) = field
                    .split_once(',')
                    .ok_or_else(|| fmt_err(format!("expected `<codeword>,<next>`, got `{field}`")))?;
                let cw = parse_bits(cw).map_err(|e| fmt_err(e.to_string()))?;
                let next: usize = next
                    .trim()
                    .trim_start_matches(['s', 'S'])
                    .parse()
                    .map_err(|_| fmt_err(format!("invalid next state `{next}`")))?;
                if next == 0 || next > states {
                    return Err(fmt_err(format!("next state {next} outside 1..={states}")));
                }
                outputs.push((cw, next - 1));
            }
            if outputs.len() != states {
                return Err(fmt_err(format!(
                    "expected {states} state outputs, found {}",
                    outputs.len()
                )));
            }
            entries.push(VlEntry { source, outputs });
        }
        let states = num_states.ok_or(Error::Format {
            line: 0,
            message: "missing `states=<S>` header".into(),
        })?;
        Self::new(entries, states)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}

fn check_prefix_free(words: &[&[u8]], what: &str) -> Result<()> {
    for (i, a) in words.iter().enumerate() {
        for (j, b) in words.iter().enumerate() {
            if i != j && b.starts_with(a) {
                return Err(Error::Codebook(format!(
                    "{what} are not prefix-free: {} is a prefix of {}",
                    format_bits(a),
                    format_bits(b)
                )));
            }
        }
    }
    Ok(())
}

/// One encoded source word.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EncodedWord {
    pub entry: usize,
    pub state: usize,
    pub source_len: usize,
    pub codeword_len: usize,
}

/// Encodes `source` word by word from `initial_state`. Returns the coded
/// bits and the final encoder state.
pub fn vl_encode(cb: &VlCodebook, source: &[u8], initial_state: usize) -> Result<(Vec<u8>, usize)> {
    check_bits(source)?;
    check_state(cb, initial_state)?;
    let mut out = Vec::with_capacity(source.len() * 2);
    let mut state = initial_state;
    let mut pos = 0;
    while pos < source.len() {
        let idx = cb.match_source(&source[pos..]).ok_or_else(|| {
            Error::Encode(format!(
                "trailing bits {} do not form a complete source word",
                format_bits(&source[pos..])
            ))
        })?;
        let entry = &cb.entries[idx];
        let (cw, next) = &entry.outputs[state];
        out.extend_from_slice(cw);
        pos += entry.source.len();
        state = *next;
    }
    Ok((out, state))
}

/// Encodes whole source words while the output fits in `max_len` bits.
/// Returns the number of source bits consumed, the coded bits, and the
/// per-word breakdown.
pub fn encode_within(
    cb: &VlCodebook,
    source: &[u8],
    initial_state: usize,
    max_len: usize,
) -> Result<(usize, Vec<u8>, Vec<EncodedWord>)> {
    check_bits(source)?;
    check_state(cb, initial_state)?;
    let mut out = Vec::with_capacity(max_len.min(2 * source.len() + 8));
    let mut words = Vec::new();
    let mut state = initial_state;
    let mut pos = 0;
    while pos < source.len() {
        let Some(idx) = cb.match_source(&source[pos..]) else {
            break;
        };
        let entry = &cb.entries[idx];
        let (cw, next) = &entry.outputs[state];
        if out.len() + cw.len() > max_len {
            break;
        }
        out.extend_from_slice(cw);
        words.push(EncodedWord {
            entry: idx,
            state,
            source_len: entry.source.len(),
            codeword_len: cw.len(),
        });
        pos += entry.source.len();
        state = *next;
    }
    Ok((pos, out, words))
}

fn check_state(cb: &VlCodebook, state: usize) -> Result<()> {
    if state >= cb.num_states {
        return Err(Error::Parameter(format!(
            "initial state {state} out of range for {} states",
            cb.num_states
        )));
    }
    Ok(())
}

/// Greedy left-to-right segmentation of error-free input: a source word is
/// emitted as soon as the window since the last boundary matches a codeword
/// of the current state.
///
/// Input that ends inside an unmatched window fails with
/// [`Error::TrailingResidue`], which carries the words decoded so far.
pub fn vl_decode_bitwise(cb: &VlCodebook, bits: &[u8], initial_state: usize) -> Result<Vec<u8>> {
    check_bits(bits)?;
    check_state(cb, initial_state)?;
    let mut out = Vec::new();
    let mut state = initial_state;
    let mut head = 0;
    let mut pos = 0;
    while head < bits.len() {
        if pos >= bits.len() {
            return Err(Error::TrailingResidue {
                position: head,
                residue: bits.len() - head,
                decoded: out,
            });
        }
        match cb.lookup(state, &bits[head..=pos]) {
            Some(idx) => {
                out.extend_from_slice(&cb.entries[idx].source);
                state = cb.entries[idx].outputs[state].1;
                pos += 1;
                head = pos;
            }
            None => pos += 1,
        }
    }
    Ok(out)
}

/// Bit-by-bit decoding that tolerates detection errors.
///
/// Matches greedily like [`vl_decode_bitwise`]. Once the window since the
/// last boundary grows past `l_max` without a match, the end position
/// restarts one past the window start and advances one bit at a time; at
/// each end position every start from the old window start onward is tried
/// in order, and the first codeword found resumes normal matching. Bits
/// skipped over are dropped. Input exhausted without a match ends decoding.
pub fn vl_decode_resync(cb: &VlCodebook, bits: &[u8], l_max: usize, initial_state: usize) -> Result<Vec<u8>> {
    check_bits(bits)?;
    check_state(cb, initial_state)?;
    let mut out = Vec::new();
    let mut state = initial_state;
    let mut head = 0;
    let mut pos = 0;
    'outer: while head < bits.len() {
        if pos - head < l_max {
            if pos >= bits.len() {
                break;
            }
            match cb.lookup(state, &bits[head..=pos]) {
                Some(idx) => {
                    out.extend_from_slice(&cb.entries[idx].source);
                    state = cb.entries[idx].outputs[state].1;
                    pos += 1;
                    head = pos;
                }
                None => pos += 1,
            }
        } else {
            pos = head + 1;
            while pos < bits.len() {
                for start in head..=pos {
                    if let Some(idx) = cb.lookup(state, &bits[start..=pos]) {
                        out.extend_from_slice(&cb.entries[idx].source);
                        state = cb.entries[idx].outputs[state].1;
                        pos += 1;
                        head = pos;
                        continue 'outer;
                    }
                }
                pos += 1;
            }
            break;
        }
    }
    Ok(out)
}

/// Copies `bits` into a batch of `l_max` values, filling the rest with
/// [`PAD_VALUE`].
pub fn pad_batch(bits: &[u8], l_max: usize) -> Result<Vec<f64>> {
    if bits.len() > l_max {
        return Err(Error::Batch(format!(
            "{} bits do not fit a batch of {l_max}",
            bits.len()
        )));
    }
    let mut out: Vec<f64> = bits.iter().map(|&b| f64::from(b)).collect();
    out.resize(l_max, PAD_VALUE);
    Ok(out)
}

/// Modulates the data positions of a padded batch; padding passes through.
pub fn modulate_padded(batch: &[f64], modulation: Modulation) -> Vec<f64> {
    batch
        .iter()
        .map(|&v| {
            if v == PAD_VALUE {
                PAD_VALUE
            } else {
                modulation.symbol(u8::from(v != 0.0))
            }
        })
        .collect()
}

/// Codeword end positions within a batch of `l_max` symbols, padded with the
/// sentinel `l_max + 1` to `l_max / 2` entries.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryVector {
    ends: Vec<usize>,
    l_max: usize,
}

impl BoundaryVector {
    pub fn new(ends: Vec<usize>, l_max: usize) -> Result<Self> {
        if ends.len() != l_max / 2 {
            return Err(Error::Batch(format!(
                "boundary vector needs {} entries, got {}",
                l_max / 2,
                ends.len()
            )));
        }
        let sentinel = l_max + 1;
        let mut prev = 0;
        let mut done = false;
        for (i, &e) in ends.iter().enumerate() {
            if e == sentinel {
                done = true;
            } else if done {
                return Err(Error::Batch(format!("boundary {e} at index {i} follows a sentinel")));
            } else if e <= prev || e > l_max {
                return Err(Error::Batch(format!("boundary {e} at index {i} is out of order")));
            } else {
                prev = e;
            }
        }
        Ok(BoundaryVector { ends, l_max })
    }

    /// Turns real-valued network outputs into boundaries: round, clamp to
    /// `1..=l_max+1`, keep only entries strictly above the last kept one,
    /// stop at the first sentinel, and pad.
    pub fn from_outputs(outputs: &[f64], l_max: usize) -> Self {
        let sentinel = l_max + 1;
        let mut ends = Vec::with_capacity(l_max / 2);
        let mut prev = 0;
        for &o in outputs {
            if ends.len() == l_max / 2 {
                break;
            }
            let v = if o.is_finite() {
                o.round().clamp(1.0, sentinel as f64) as usize
            } else {
                sentinel
            };
            if v > prev {
                ends.push(v);
                prev = v;
                if v == sentinel {
                    break;
                }
            }
        }
        ends.resize(l_max / 2, sentinel);
        BoundaryVector { ends, l_max }
    }

    pub fn ends(&self) -> &[usize] {
        &self.ends
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn sentinel(&self) -> usize {
        self.l_max + 1
    }

    /// Half-open `(start, end)` ranges of each codeword, up to the first
    /// sentinel.
    pub fn segments(&self) -> Vec<(usize, usize)> {
        let mut prev = 0;
        self.ends
            .iter()
            .take_while(|&&e| e != self.sentinel())
            .map(|&e| {
                let seg = (prev, e);
                prev = e;
                seg
            })
            .collect()
    }

    pub fn as_targets(&self) -> Vec<f64> {
        self.ends.iter().map(|&e| e as f64).collect()
    }
}

/// Boundary vector of the encoding of `source`, which must fit in `l_max`.
pub fn target_boundaries(cb: &VlCodebook, source: &[u8], l_max: usize, initial_state: usize) -> Result<BoundaryVector> {
    let (consumed, coded, words) = encode_within(cb, source, initial_state, l_max)?;
    if consumed != source.len() {
        let total = vl_encode(cb, source, initial_state)?.0.len();
        return Err(Error::Batch(format!(
            "encoding of {total} bits exceeds the batch length {l_max}"
        )));
    }
    debug_assert_eq!(coded.len(), words.iter().map(|w| w.codeword_len).sum::<usize>());
    if words.len() > l_max / 2 {
        return Err(Error::Batch(format!(
            "{} codewords exceed the boundary vector length {}",
            words.len(),
            l_max / 2
        )));
    }
    let mut ends = Vec::with_capacity(l_max / 2);
    let mut end = 0;
    for w in &words {
        end += w.codeword_len;
        ends.push(end);
    }
    ends.resize(l_max / 2, l_max + 1);
    BoundaryVector::new(ends, l_max)
}

/// Decodes a single-state code from its boundaries. Each segment's length
/// selects the codeword; if several codewords share that length, the one
/// closest to `hard_bits` in Hamming distance is used.
pub fn postprocess_single_state(cb: &VlCodebook, gamma: &BoundaryVector, hard_bits: &[u8]) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    for (start, end) in gamma.segments() {
        let len = end - start;
        let candidates: Vec<usize> = (0..cb.entries.len())
            .filter(|&i| cb.entries[i].outputs[0].0.len() == len)
            .collect();
        let chosen = match candidates.as_slice() {
            [] => {
                return Err(Error::Segmentation(format!(
                    "no codeword of length {len} (segment {start}..{end})"
                )))
            }
            [only] => *only,
            many => {
                let seg = hard_bits.get(start..end).ok_or_else(|| {
                    Error::Segmentation(format!("segment {start}..{end} beyond received bits"))
                })?;
                *many
                    .iter()
                    .min_by_key(|&&i| crate::bits::hamming(&cb.entries[i].outputs[0].0, seg))
                    .unwrap()
            }
        };
        out.extend_from_slice(&cb.entries[chosen].source);
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiStateDecode {
    pub source: Vec<u8>,
    /// Set when some segment had no codeword of its length in the tracked
    /// state and the search had to fall back to all states.
    pub used_fallback: bool,
}

/// Decodes a multi-state code from its boundaries by soft decision: walking
/// the segments with the encoder state, each segment takes the codeword of
/// matching length that is nearest in Euclidean distance to the received
/// symbols, and the state advances along that codeword's transition.
pub fn postprocess_multistate(
    cb: &VlCodebook,
    gamma: &BoundaryVector,
    received: &[f64],
    modulation: Modulation,
    initial_state: usize,
) -> Result<MultiStateDecode> {
    check_state(cb, initial_state)?;
    let mut out = Vec::new();
    let mut state = initial_state;
    let mut used_fallback = false;
    for (start, end) in gamma.segments() {
        let seg = received.get(start..end).ok_or_else(|| {
            Error::Segmentation(format!("segment {start}..{end} beyond received symbols"))
        })?;
        let best_in = |s: usize| -> Option<(f64, usize)> {
            cb.entries
                .iter()
                .enumerate()
                .filter(|(_, e)| e.outputs[s].0.len() == seg.len())
                .map(|(i, e)| {
                    let d: f64 = e.outputs[s]
                        .0
                        .iter()
                        .zip(seg)
                        .map(|(&b, &r)| (r - modulation.symbol(b)).powi(2))
                        .sum();
                    (d, i)
                })
                .min_by(|a, b| a.0.total_cmp(&b.0))
        };
        let (idx, from_state) = match best_in(state) {
            Some((_, i)) => (i, state),
            None => {
                used_fallback = true;
                (0..cb.num_states)
                    .filter_map(|s| best_in(s).map(|(d, i)| (d, i, s)))
                    .min_by(|a, b| a.0.total_cmp(&b.0))
                    .map(|(_, i, s)| (i, s))
                    .ok_or_else(|| {
                        Error::Segmentation(format!(
                            "no codeword of length {} in any state (segment {start}..{end})",
                            seg.len()
                        ))
                    })?
            }
        };
        out.extend_from_slice(&cb.entries[idx].source);
        state = cb.entries[idx].outputs[from_state].1;
    }
    Ok(MultiStateDecode {
        source: out,
        used_fallback,
    })
}
