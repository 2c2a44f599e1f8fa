//! Fixed-length codebooks with hard (table lookup) and soft (maximum
//! likelihood) decoding.
//!
//! Multi-frame operation concatenates per-frame codebooks; decoding
//! factorizes frame by frame because frames and noise are independent.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::bits::{bits_to_u64, check_bits, format_bits, parse_bits, u64_to_bits};
use crate::channel::Modulation;
use crate::constraint::ConstraintFsm;
use crate::error::{Error, Result};

/// 4B6B DC-free code used for visible light communication, in table order.
pub const FOUR_B_SIX_B: [(&str, &str); 16] = [
    ("0000", "001110"),
    ("0001", "001101"),
    ("0010", "010011"),
    ("0011", "010110"),
    ("0100", "010101"),
    ("0101", "100011"),
    ("0110", "100110"),
    ("0111", "100101"),
    ("1000", "011001"),
    ("1001", "011010"),
    ("1010", "011100"),
    ("1011", "110001"),
    ("1100", "110010"),
    ("1101", "101001"),
    ("1110", "101010"),
    ("1111", "101100"),
];

/// Bijection between all `2^k` source words and `2^k` distinct length-`n`
/// codewords.
#[derive(Debug, Clone, PartialEq)]
pub struct FlCodebook {
    k: usize,
    n: usize,
    /// Indexed by source value.
    codewords: Vec<u64>,
    inverse: HashMap<u64, u64>,
    /// Source values in table order, for serialization.
    table_order: Vec<u64>,
}

impl FlCodebook {
    /// Builds a codebook from `(source, codeword)` rows in table order.
    pub fn from_rows(rows: &[(Vec<u8>, Vec<u8>)]) -> Result<Self> {
        let (first_src, first_cw) = rows
            .first()
            .ok_or_else(|| Error::Codebook("codebook has no entries".into()))?;
        let (k, n) = (first_src.len(), first_cw.len());
        if k == 0 || k > 20 || n == 0 || n > 63 {
            return Err(Error::Codebook(format!(
                "unsupported word lengths k={k}, n={n}"
            )));
        }
        if rows.len() != 1 << k {
            return Err(Error::Codebook(format!(
                "expected {} entries for k={k}, found {}",
                1 << k,
                rows.len()
            )));
        }
        let mut codewords = vec![u64::MAX; 1 << k];
        let mut inverse = HashMap::with_capacity(rows.len());
        let mut table_order = Vec::with_capacity(rows.len());
        for (src, cw) in rows {
            check_bits(src)?;
            check_bits(cw)?;
            if src.len() != k || cw.len() != n {
                return Err(Error::Codebook(format!(
                    "entry {} -> {} does not match lengths k={k}, n={n}",
                    format_bits(src),
                    format_bits(cw)
                )));
            }
            let s = bits_to_u64(src);
            let c = bits_to_u64(cw);
            if codewords[s as usize] != u64::MAX {
                return Err(Error::Codebook(format!("duplicate source word {}", format_bits(src))));
            }
            if inverse.insert(c, s).is_some() {
                return Err(Error::Codebook(format!("duplicate codeword {}", format_bits(cw))));
            }
            codewords[s as usize] = c;
            table_order.push(s);
        }
        Ok(FlCodebook {
            k,
            n,
            codewords,
            inverse,
            table_order,
        })
    }

    pub fn four_b_six_b() -> Self {
        let rows: Vec<_> = FOUR_B_SIX_B
            .iter()
            .map(|(s, c)| (parse_bits(s).unwrap(), parse_bits(c).unwrap()))
            .collect();
        Self::from_rows(&rows).expect("built-in 4B6B table is valid")
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rate(&self) -> f64 {
        self.k as f64 / self.n as f64
    }

    pub fn len(&self) -> usize {
        self.codewords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codewords.is_empty()
    }

    pub fn codeword_value(&self, source: u64) -> u64 {
        self.codewords[source as usize]
    }

    pub fn codeword(&self, source: u64) -> Vec<u8> {
        u64_to_bits(self.codeword_value(source), self.n)
    }

    pub fn source_of(&self, codeword: u64) -> Option<u64> {
        self.inverse.get(&codeword).copied()
    }

    /// `(source, codeword)` rows in table order.
    pub fn rows(&self) -> Vec<(Vec<u8>, Vec<u8>)> {
        self.table_order
            .iter()
            .map(|&s| (u64_to_bits(s, self.k), self.codeword(s)))
            .collect()
    }

    /// Checks every codeword against `fsm` starting from `start`.
    pub fn check_constraint(&self, fsm: &ConstraintFsm, start: usize) -> Result<()> {
        for s in 0..self.len() as u64 {
            let cw = self.codeword(s);
            let check = fsm.validate_stream(&cw, start);
            if let Some(pos) = check.violation {
                return Err(Error::Codebook(format!(
                    "codeword {} violates {} at bit {pos}",
                    format_bits(&cw),
                    fsm.constraint()
                )));
            }
        }
        Ok(())
    }

    /// Nearest codeword in Hamming distance; ties go to the smallest source
    /// value. An exact hit has distance zero and always wins.
    pub fn lut_decode_word(&self, hard: &[u8]) -> u64 {
        let received = bits_to_u64(hard);
        if let Some(s) = self.source_of(received) {
            return s;
        }
        let mut best = (u32::MAX, 0u64);
        for (s, &c) in self.codewords.iter().enumerate() {
            let d = (c ^ received).count_ones();
            if d < best.0 {
                best = (d, s as u64);
            }
        }
        best.1
    }

    /// Source word whose modulated codeword is closest in Euclidean distance;
    /// ties go to the smallest source value.
    pub fn map_decode_word(&self, received: &[f64], modulation: Modulation) -> u64 {
        let sym = [modulation.symbol(0), modulation.symbol(1)];
        let mut best = (f64::INFINITY, 0u64);
        for (s, &c) in self.codewords.iter().enumerate() {
            let mut dist = 0.0;
            for (i, &r) in received.iter().enumerate() {
                let bit = (c >> (self.n - 1 - i)) & 1;
                let diff = r - sym[bit as usize];
                dist += diff * diff;
            }
            if dist < best.0 {
                best = (dist, s as u64);
            }
        }
        best.1
    }

    fn shuffled(&self, rng: &mut ChaCha8Rng) -> Self {
        let mut assignment = self.codewords.clone();
        assignment.shuffle(rng);
        let inverse = assignment
            .iter()
            .enumerate()
            .map(|(s, &c)| (c, s as u64))
            .collect();
        FlCodebook {
            k: self.k,
            n: self.n,
            codewords: assignment,
            inverse,
            table_order: self.table_order.clone(),
        }
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (s, c) in self.rows() {
            let _ = writeln!(out, "{}\t{}", format_bits(&s), format_bits(&c));
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        Self::parse_block(text.lines().enumerate().map(|(i, l)| (i + 1, l)))
    }

    fn parse_block<'a>(lines: impl Iterator<Item = (usize, &'a str)>) -> Result<Self> {
        let mut rows = Vec::new();
        for (line_no, raw) in lines {
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let mut fields = line.split('\t').map(str::trim).filter(|f| !f.is_empty());
            let (Some(src), Some(cw), None) = (fields.next(), fields.next(), fields.next()) else {
                return Err(Error::Format {
                    line: line_no,
                    message: "expected `<source>\\t<codeword>`".into(),
                });
            };
            let parse = |s: &str| {
                parse_bits(s).map_err(|e| Error::Format {
                    line: line_no,
                    message: e.to_string(),
                })
            };
            rows.push((parse(src)?, parse(cw)?));
        }
        Self::from_rows(&rows)
    }
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => line[..i].trim(),
        None => line.trim(),
    }
}

/// `F` per-frame codebooks used side by side. Frame `i` of a block is coded
/// with codebook `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConcatCodebook {
    frames: Vec<FlCodebook>,
}

impl ConcatCodebook {
    pub fn new(frames: Vec<FlCodebook>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::Codebook("concatenated codebook needs at least one frame".into()))?;
        if frames.iter().any(|f| f.k != first.k || f.n != first.n) {
            return Err(Error::Codebook("all frames must share k and n".into()));
        }
        Ok(ConcatCodebook { frames })
    }

    /// `frames` copies of `cb` with the original assignment.
    pub fn repeated(cb: &FlCodebook, frames: usize) -> Result<Self> {
        Self::new(vec![cb.clone(); frames])
    }

    pub fn frame_count(&self) -> usize {
        self.frames.len()
    }

    pub fn frame(&self, i: usize) -> &FlCodebook {
        &self.frames[i]
    }

    /// `log2` of the number of distinct block mappings.
    pub fn effective_k(&self) -> usize {
        self.frames.len() * self.frames[0].k
    }

    pub fn effective_n(&self) -> usize {
        self.frames.len() * self.frames[0].n
    }

    pub fn to_text(&self) -> String {
        let blocks: Vec<String> = self.frames.iter().map(FlCodebook::to_text).collect();
        format!("frames={}\n{}", self.frames.len(), blocks.join("\n"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
        let frames: usize = loop {
            let Some((line_no, raw)) = lines.next() else {
                return Err(Error::Format {
                    line: 0,
                    message: "missing `frames=<F>` header".into(),
                });
            };
            let line = strip_comment(raw);
            if line.is_empty() {
                continue;
            }
            let value = line.strip_prefix("frames=").ok_or_else(|| Error::Format {
                line: line_no,
                message: "expected `frames=<F>` header".into(),
            })?;
            break value.trim().parse().map_err(|_| Error::Format {
                line: line_no,
                message: format!("invalid frame count `{value}`"),
            })?;
        };

        let mut blocks: Vec<Vec<(usize, &str)>> = vec![Vec::new()];
        for (line_no, raw) in lines {
            if raw.trim().is_empty() {
                if !blocks.last().unwrap().is_empty() {
                    blocks.push(Vec::new());
                }
            } else if !strip_comment(raw).is_empty() {
                blocks.last_mut().unwrap().push((line_no, raw));
            }
        }
        blocks.retain(|b| !b.is_empty());
        if blocks.len() != frames {
            return Err(Error::Format {
                line: 1,
                message: format!("header declares {frames} frames, found {} blocks", blocks.len()),
            });
        }
        let frames = blocks
            .into_iter()
            .map(|b| FlCodebook::parse_block(b.into_iter()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(frames)
    }
}

/// Independently shuffles the source-to-codeword assignment of `F` copies of
/// `cb`. The resulting block code has `2^(F*k)` mappings but is stored as `F`
/// small tables.
pub fn build_shuffled_concat(cb: &FlCodebook, frames: usize, seed: u64) -> Result<ConcatCodebook> {
    if frames == 0 {
        return Err(Error::Parameter("frame count must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ConcatCodebook::new((0..frames).map(|_| cb.shuffled(&mut rng)).collect())
}

/// Anything that assigns a fixed-length codebook to each frame position.
pub trait FrameCode {
    fn frames(&self) -> usize;
    fn frame_codebook(&self, frame: usize) -> &FlCodebook;

    fn k(&self) -> usize {
        self.frame_codebook(0).k
    }

    fn n(&self) -> usize {
        self.frame_codebook(0).n
    }

    fn block_source_len(&self) -> usize {
        self.frames() * self.k()
    }

    fn block_code_len(&self) -> usize {
        self.frames() * self.n()
    }
}

impl FrameCode for FlCodebook {
    fn frames(&self) -> usize {
        1
    }

    fn frame_codebook(&self, _frame: usize) -> &FlCodebook {
        self
    }
}

impl FrameCode for ConcatCodebook {
    fn frames(&self) -> usize {
        self.frames.len()
    }

    fn frame_codebook(&self, frame: usize) -> &FlCodebook {
        &self.frames[frame]
    }
}

fn check_len(len: usize, unit: usize, what: &str) -> Result<()> {
    if len % unit != 0 {
        return Err(Error::Input(format!(
            "{what} length {len} is not a multiple of {unit}"
        )));
    }
    Ok(())
}

pub fn fl_encode<C: FrameCode + ?Sized>(cb: &C, source: &[u8]) -> Result<Vec<u8>> {
    check_bits(source)?;
    check_len(source.len(), cb.block_source_len(), "source")?;
    let mut out = Vec::with_capacity(source.len() / cb.k() * cb.n());
    for (i, word) in source.chunks(cb.k()).enumerate() {
        let book = cb.frame_codebook(i % cb.frames());
        out.extend(book.codeword(bits_to_u64(word)));
    }
    Ok(out)
}

pub fn lut_decode<C: FrameCode + ?Sized>(cb: &C, hard_bits: &[u8]) -> Result<Vec<u8>> {
    check_bits(hard_bits)?;
    check_len(hard_bits.len(), cb.block_code_len(), "received")?;
    let mut out = Vec::with_capacity(hard_bits.len() / cb.n() * cb.k());
    for (i, word) in hard_bits.chunks(cb.n()).enumerate() {
        let book = cb.frame_codebook(i % cb.frames());
        out.extend(u64_to_bits(book.lut_decode_word(word), cb.k()));
    }
    Ok(out)
}

pub fn map_decode<C: FrameCode + ?Sized>(cb: &C, received: &[f64], modulation: Modulation) -> Result<Vec<u8>> {
    check_len(received.len(), cb.block_code_len(), "received")?;
    let mut out = Vec::with_capacity(received.len() / cb.n() * cb.k());
    for (i, word) in received.chunks(cb.n()).enumerate() {
        let book = cb.frame_codebook(i % cb.frames());
        out.extend(u64_to_bits(book.map_decode_word(word, modulation), cb.k()));
    }
    Ok(out)
}

/// Either kind of fixed-length codebook file.
#[derive(Debug, Clone, PartialEq)]
pub enum FlCodebookFile {
    Single(FlCodebook),
    Concat(ConcatCodebook),
}

impl FlCodebookFile {
    pub fn parse(text: &str) -> Result<Self> {
        let first = text.lines().map(strip_comment).find(|l| !l.is_empty());
        match first {
            Some(l) if l.starts_with("frames=") => Ok(Self::Concat(ConcatCodebook::parse(text)?)),
            _ => Ok(Self::Single(FlCodebook::parse(text)?)),
        }
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Expands to a concatenated codebook with `frames` frames. A single
    /// codebook is repeated; a concatenated one must already have that many.
    pub fn into_concat(self, frames: usize) -> Result<ConcatCodebook> {
        match self {
            Self::Single(cb) => ConcatCodebook::repeated(&cb, frames.max(1)),
            Self::Concat(c) if frames == 0 || c.frame_count() == frames => Ok(c),
            Self::Concat(c) => Err(Error::Config(format!(
                "codebook has {} frames but {frames} were requested",
                c.frame_count()
            ))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::modulate;
    use crate::constraint::{build_fsm, Constraint};
    use proptest::prelude::*;
    use rand::Rng;

    fn cb() -> FlCodebook {
        FlCodebook::four_b_six_b()
    }

    fn bits(s: &str) -> Vec<u8> {
        parse_bits(s).unwrap()
    }

    #[test]
    fn encode_examples() {
        assert_eq!(fl_encode(&cb(), &bits("0000")).unwrap(), bits("001110"));
        assert_eq!(fl_encode(&cb(), &bits("1100")).unwrap(), bits("110010"));
        assert_eq!(
            fl_encode(&cb(), &bits("0000 1111")).unwrap(),
            bits("001110 101100")
        );
        assert!(fl_encode(&cb(), &bits("000")).is_err());
    }

    #[test]
    fn codewords_are_balanced_and_dc_free() {
        let fsm = build_fsm(Constraint::DcFree { levels: 5 }).unwrap();
        let book = cb();
        book.check_constraint(&fsm, fsm.default_start()).unwrap();
        for s in 0..16 {
            assert_eq!(book.codeword(s).iter().filter(|&&b| b == 1).count(), 3);
        }
    }

    #[test]
    fn lut_examples() {
        assert_eq!(lut_decode(&cb(), &bits("001110")).unwrap(), bits("0000"));
        assert_eq!(lut_decode(&cb(), &bits("110010")).unwrap(), bits("1100"));
        assert_eq!(lut_decode(&cb(), &bits("001100")).unwrap(), bits("0000"));
    }

    #[test]
    fn lut_tie_break_matches_brute_force() {
        let book = cb();
        for received in 0u64..64 {
            let hard = u64_to_bits(received, 6);
            // oracle: full distance table, first minimum in source order
            let dists: Vec<usize> = (0..16)
                .map(|s| crate::bits::hamming(&book.codeword(s), &hard))
                .collect();
            let min = *dists.iter().min().unwrap();
            let expect = dists.iter().position(|&d| d == min).unwrap() as u64;
            assert_eq!(book.lut_decode_word(&hard), expect, "{}", format_bits(&hard));
        }
    }

    #[test]
    fn map_examples() {
        let book = cb();
        for m in [Modulation::Ook, Modulation::Bpsk] {
            let clean = modulate(&bits("001110"), m);
            assert_eq!(map_decode(&book, &clean, m).unwrap(), bits("0000"));
            // first bit is 0; push it 40% of the way toward the symbol for 1
            let mut pushed = clean.clone();
            let flipped = m.symbol(1);
            pushed[0] += 0.4 * (flipped - pushed[0]);
            assert_eq!(map_decode(&book, &pushed, m).unwrap(), bits("0000"));
        }
    }

    #[test]
    fn map_factorizes_over_frames() {
        let book = cb();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let received: Vec<f64> = (0..30).map(|_| rng.random_range(-1.5..1.5)).collect();
        let joint = map_decode(&book, &received, Modulation::Bpsk).unwrap();
        let per_frame: Vec<u8> = received
            .chunks(6)
            .flat_map(|c| map_decode(&book, c, Modulation::Bpsk).unwrap())
            .collect();
        assert_eq!(joint, per_frame);
    }

    #[test]
    fn shuffled_concat_properties() {
        let c = build_shuffled_concat(&cb(), 5, 42).unwrap();
        assert_eq!(c.effective_k(), 20);
        assert_eq!(c.effective_n(), 30);
        for f in 0..5 {
            let mut cws: Vec<u64> = (0..16).map(|s| c.frame(f).codeword_value(s)).collect();
            cws.sort_unstable();
            let mut orig: Vec<u64> = (0..16).map(|s| cb().codeword_value(s)).collect();
            orig.sort_unstable();
            assert_eq!(cws, orig);
        }
        assert_eq!(c, build_shuffled_concat(&cb(), 5, 42).unwrap());
        assert_ne!(c, build_shuffled_concat(&cb(), 5, 43).unwrap());
        assert!(build_shuffled_concat(&cb(), 0, 1).is_err());

        let plain = ConcatCodebook::repeated(&cb(), 1).unwrap();
        assert_eq!(fl_encode(&plain, &bits("1100")).unwrap(), bits("110010"));
    }

    #[test]
    fn every_word_round_trips() {
        let book = cb();
        for frames in 1..=5 {
            let concat = ConcatCodebook::repeated(&book, frames).unwrap();
            for s in 0..16u64 {
                let src: Vec<u8> = (0..frames).flat_map(|_| u64_to_bits(s, 4)).collect();
                let enc = fl_encode(&concat, &src).unwrap();
                assert_eq!(lut_decode(&concat, &enc).unwrap(), src);
            }
        }
    }

    #[test]
    fn text_formats_round_trip() {
        let book = cb();
        assert_eq!(FlCodebook::parse(&book.to_text()).unwrap(), book);
        let concat = build_shuffled_concat(&book, 3, 1).unwrap();
        let text = concat.to_text();
        assert!(text.starts_with("frames=3\n"));
        assert_eq!(ConcatCodebook::parse(&text).unwrap(), concat);
        assert!(matches!(FlCodebookFile::parse(&text).unwrap(), FlCodebookFile::Concat(_)));
    }

    #[test]
    fn malformed_codebooks() {
        assert!(matches!(FlCodebook::parse("00\t01\n01"), Err(Error::Format { line: 2, .. })));
        assert!(FlCodebook::parse("0\t01\n1\t01\n").is_err());
        assert!(FlCodebook::parse("0\t01\n").is_err());
        let with_comments = "# a comment\n0\t01 # zero\n1\t10\n";
        assert_eq!(FlCodebook::parse(with_comments).unwrap().len(), 2);
        assert!(ConcatCodebook::parse("frames=2\n0\t01\n1\t10\n").is_err());
    }

    proptest! {
        #[test]
        fn shuffled_round_trip(seed in any::<u64>(), frames in 1usize..=5, words in proptest::collection::vec(0u64..16, 1..40)) {
            let c = build_shuffled_concat(&cb(), frames, seed).unwrap();
            let mut src: Vec<u8> = words.iter().flat_map(|&w| u64_to_bits(w, 4)).collect();
            src.truncate(src.len() / (4 * frames) * 4 * frames);
            let enc = fl_encode(&c, &src).unwrap();
            prop_assert_eq!(lut_decode(&c, &enc).unwrap(), src.clone());
            let clean = modulate(&enc, Modulation::Ook);
            prop_assert_eq!(map_decode(&c, &clean, Modulation::Ook).unwrap(), src);
        }
    }
}
