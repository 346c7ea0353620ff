//! Free words over a named generator alphabet: reduction, cyclic
//! reduction, exact evaluation, and breadth-first enumeration by length
//! with optional group-element dedup and relation detection.
//!
//! Enumeration order is the shortlex order induced by (generator index,
//! sign) with the positive sign first, and it is deterministic regardless
//! of how many worker threads multiply matrices. With dedup enabled only
//! shortlex-canonical representatives are extended; a canonical word has
//! canonical prefixes, so the pruned search still meets every group
//! element of the ball and each recorded witness is the shortlex-minimal
//! word for its element.

use crate::exactmat::RationalMatrix;
use rayon::prelude::*;
use serde::de::Error as DeError;
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use std::collections::HashMap;
use std::fmt;

/// Default enumeration memory budget: 4 GiB of estimated entry storage.
pub const DEFAULT_BUDGET_BYTES: usize = 4 << 30;

#[derive(Debug, thiserror::Error)]
pub enum WordError {
    #[error("unknown word token {0:?}")]
    UnknownToken(String),
    #[error("letter index {idx} out of range for rank {rank}")]
    IndexOutOfRange { idx: usize, rank: usize },
    #[error("generator {name:?} is {got}x{got}, the set is {expected}x{expected}")]
    DimensionMismatch { name: String, expected: usize, got: usize },
    #[error("generator name {0:?} rejected: names start with a lowercase ASCII letter followed by lowercase letters, digits or underscores")]
    BadName(String),
    #[error("duplicate generator name {0:?}")]
    DuplicateName(String),
    #[error("word is not freely reduced at position {0}")]
    NotReduced(usize),
}

/// Sign of a letter; the positive sign orders first.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Sign {
    Pos,
    Neg,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Pos => Sign::Neg,
            Sign::Neg => Sign::Pos,
        }
    }

    pub fn as_i8(self) -> i8 {
        match self {
            Sign::Pos => 1,
            Sign::Neg => -1,
        }
    }
}

/// One letter: a generator index with a sign.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Letter {
    pub idx: usize,
    pub sign: Sign,
}

impl Letter {
    pub fn new(idx: usize, sign: Sign) -> Letter {
        Letter { idx, sign }
    }

    pub fn inverse(self) -> Letter {
        Letter { idx: self.idx, sign: self.sign.flip() }
    }

    fn cancels(self, other: Letter) -> bool {
        self.idx == other.idx && self.sign != other.sign
    }
}

/// A freely reduced word. Construction reduces, so the invariant holds by
/// the time a value exists.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Word {
    letters: Vec<Letter>,
}

impl Word {
    pub fn empty() -> Word {
        Word { letters: Vec::new() }
    }

    /// Builds a word from raw letters, cancelling adjacent inverse pairs.
    pub fn from_letters(raw: &[Letter]) -> Word {
        reduce(raw)
    }

    pub fn letters(&self) -> &[Letter] {
        &self.letters
    }

    pub fn len(&self) -> usize {
        self.letters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.letters.is_empty()
    }

    pub fn inverse(&self) -> Word {
        Word {
            letters: self.letters.iter().rev().map(|l| l.inverse()).collect(),
        }
    }

    /// Free product with reduction at the junction.
    pub fn concat(&self, rhs: &Word) -> Word {
        let mut letters = self.letters.clone();
        for &l in &rhs.letters {
            if letters.last().is_some_and(|p| p.cancels(l)) {
                letters.pop();
            } else {
                letters.push(l);
            }
        }
        Word { letters }
    }

    /// Strips conjugating prefix/suffix pairs: returns `(core, c)` with
    /// `self = c * core * c^-1` as free words and `core` cyclically
    /// reduced (its first letter does not cancel its last).
    pub fn cyclic_reduce(&self) -> (Word, Word) {
        let mut core = self.letters.clone();
        let mut conj = Vec::new();
        while core.len() >= 2 && core[0].cancels(core[core.len() - 1]) {
            conj.push(core[0]);
            core.remove(0);
            core.pop();
        }
        (Word { letters: core }, Word { letters: conj })
    }

    pub fn is_cyclically_reduced(&self) -> bool {
        self.letters.len() < 2
            || !self.letters[0].cancels(self.letters[self.letters.len() - 1])
    }

    /// Canonical string in the explicit syntax: `a b^-1 a`, or `1` for
    /// the empty word.
    pub fn display(&self, gens: &GeneratorSet) -> String {
        if self.letters.is_empty() {
            return "1".to_string();
        }
        let parts: Vec<String> = self
            .letters
            .iter()
            .map(|l| match l.sign {
                Sign::Pos => gens.name(l.idx).to_string(),
                Sign::Neg => format!("{}^-1", gens.name(l.idx)),
            })
            .collect();
        parts.join(" ")
    }

    /// Parses the space separated syntax: `a`, `a^-1`, and the compact
    /// uppercase-first-letter alias (`A` = `a^-1`); `1` is the empty word.
    pub fn parse(s: &str, gens: &GeneratorSet) -> Result<Word, WordError> {
        let mut raw = Vec::new();
        for token in s.split_whitespace() {
            if token == "1" {
                continue;
            }
            raw.push(gens.parse_token(token)?);
        }
        Ok(reduce(&raw))
    }
}

/// Cancels adjacent inverse pairs until none remain; repeated application
/// is the identity on the result.
pub fn reduce(raw: &[Letter]) -> Word {
    let mut letters: Vec<Letter> = Vec::with_capacity(raw.len());
    for &l in raw {
        if letters.last().is_some_and(|p| p.cancels(l)) {
            letters.pop();
        } else {
            letters.push(l);
        }
    }
    Word { letters }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let pairs: Vec<(usize, i8)> =
            self.letters.iter().map(|l| (l.idx, l.sign.as_i8())).collect();
        pairs.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Word {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let pairs = Vec::<(usize, i8)>::deserialize(deserializer)?;
        let mut raw = Vec::with_capacity(pairs.len());
        for (idx, s) in pairs {
            let sign = match s {
                1 => Sign::Pos,
                -1 => Sign::Neg,
                other => return Err(D::Error::custom(format!("letter sign {other} not +-1"))),
            };
            raw.push(Letter::new(idx, sign));
        }
        let w = reduce(&raw);
        if w.len() != raw.len() {
            return Err(D::Error::custom("word is not freely reduced"));
        }
        Ok(w)
    }
}

/// Named generators with precomputed exact inverses.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratorSet {
    n: usize,
    names: Vec<String>,
    gens: Vec<RationalMatrix>,
    invs: Vec<RationalMatrix>,
}

fn valid_name(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c.is_ascii_lowercase() => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

fn alias(name: &str) -> String {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) => c.to_ascii_uppercase().to_string() + chars.as_str(),
        None => String::new(),
    }
}

impl GeneratorSet {
    /// An empty or nonempty set over `n x n` matrices. Every matrix is
    /// already unimodular by construction of [`RationalMatrix`]; this
    /// checks dimensions and name hygiene and inverts each generator.
    pub fn new(n: usize, named: Vec<(String, RationalMatrix)>) -> Result<GeneratorSet, WordError> {
        let mut names = Vec::with_capacity(named.len());
        let mut gens = Vec::with_capacity(named.len());
        let mut invs = Vec::with_capacity(named.len());
        for (name, g) in named {
            if !valid_name(&name) {
                return Err(WordError::BadName(name));
            }
            if names.contains(&name) {
                return Err(WordError::DuplicateName(name));
            }
            if g.n() != n {
                return Err(WordError::DimensionMismatch { name, expected: n, got: g.n() });
            }
            invs.push(g.inverse());
            names.push(name);
            gens.push(g);
        }
        Ok(GeneratorSet { n, names, gens, invs })
    }

    /// Convenience constructor with string slices for names.
    pub fn named(n: usize, items: &[(&str, RationalMatrix)]) -> Result<GeneratorSet, WordError> {
        GeneratorSet::new(
            n,
            items.iter().map(|(s, m)| (s.to_string(), m.clone())).collect(),
        )
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn rank(&self) -> usize {
        self.gens.len()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.names[i]
    }

    pub fn generator(&self, i: usize) -> &RationalMatrix {
        &self.gens[i]
    }

    pub fn generator_inverse(&self, i: usize) -> &RationalMatrix {
        &self.invs[i]
    }

    /// The matrix of one letter.
    pub fn matrix(&self, l: Letter) -> &RationalMatrix {
        match l.sign {
            Sign::Pos => &self.gens[l.idx],
            Sign::Neg => &self.invs[l.idx],
        }
    }

    /// All `2 * rank` letters in enumeration order.
    pub fn letters(&self) -> Vec<Letter> {
        let mut out = Vec::with_capacity(2 * self.rank());
        for idx in 0..self.rank() {
            out.push(Letter::new(idx, Sign::Pos));
            out.push(Letter::new(idx, Sign::Neg));
        }
        out
    }

    /// The set conjugated elementwise: `h g h^-1` for each generator.
    pub fn conjugated(&self, h: &RationalMatrix) -> Result<GeneratorSet, WordError> {
        let mut named = Vec::with_capacity(self.rank());
        for (name, g) in self.names.iter().zip(&self.gens) {
            let c = g.conjugate_by(h).expect("matching dimensions");
            named.push((name.clone(), c));
        }
        GeneratorSet::new(self.n, named)
    }

    fn parse_token(&self, token: &str) -> Result<Letter, WordError> {
        if let Some(base) = token.strip_suffix("^-1") {
            if let Some(idx) = self.names.iter().position(|n| n == base) {
                return Ok(Letter::new(idx, Sign::Neg));
            }
            return Err(WordError::UnknownToken(token.to_string()));
        }
        if let Some(idx) = self.names.iter().position(|n| n == token) {
            return Ok(Letter::new(idx, Sign::Pos));
        }
        if let Some(idx) = self.names.iter().position(|n| alias(n) == token) {
            return Ok(Letter::new(idx, Sign::Neg));
        }
        Err(WordError::UnknownToken(token.to_string()))
    }
}

impl Serialize for GeneratorSet {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Entry {
            name: String,
            rows: Vec<Vec<String>>,
        }
        #[derive(Serialize)]
        struct Shape {
            n: usize,
            generators: Vec<Entry>,
        }
        let generators = self
            .names
            .iter()
            .zip(&self.gens)
            .map(|(name, m)| Entry { name: name.clone(), rows: m.rows_str() })
            .collect();
        Shape { n: self.n, generators }.serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for GeneratorSet {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        struct Entry {
            name: String,
            rows: Vec<Vec<String>>,
        }
        #[derive(Deserialize)]
        struct Shape {
            n: usize,
            generators: Vec<Entry>,
        }
        let shape = Shape::deserialize(deserializer)?;
        let mut named = Vec::with_capacity(shape.generators.len());
        for e in shape.generators {
            let refs: Vec<Vec<&str>> =
                e.rows.iter().map(|r| r.iter().map(String::as_str).collect()).collect();
            let m = RationalMatrix::from_rows_str(&refs).map_err(D::Error::custom)?;
            named.push((e.name, m));
        }
        GeneratorSet::new(shape.n, named).map_err(D::Error::custom)
    }
}

/// Exact product of the letter matrices; the empty word is the identity.
pub fn evaluate(w: &Word, gens: &GeneratorSet) -> RationalMatrix {
    let mut acc = RationalMatrix::identity(gens.n());
    for &l in w.letters() {
        acc = acc.dot(gens.matrix(l));
    }
    acc
}

/// One enumerated word with its exact matrix.
#[derive(Clone, Debug)]
pub struct EnumeratedWord {
    pub word: Word,
    pub matrix: RationalMatrix,
}

/// A detected relation: `word` evaluates to the same matrix as the
/// earlier canonical `witness`.
#[derive(Clone, Debug, Serialize)]
pub struct Relation {
    pub word: Word,
    pub witness: Word,
}

/// Result of a breadth-first enumeration.
///
/// `levels[k]` holds the length-`k` entries in shortlex order; with dedup
/// enabled these are exactly the canonical representatives of the new
/// group elements at radius `k`, and every pruned duplicate is recorded
/// in `relations`. `completed_len` trails `requested_len` only when the
/// memory budget truncated the run (`truncated` set, partial results
/// retained for all complete levels).
#[derive(Debug)]
pub struct EnumerationResult {
    pub dedup: bool,
    pub levels: Vec<Vec<EnumeratedWord>>,
    pub relations: Vec<Relation>,
    pub truncated: bool,
    pub completed_len: usize,
    pub requested_len: usize,
    pub bytes_estimate: usize,
    index: HashMap<String, (usize, usize)>,
}

impl EnumerationResult {
    pub fn total(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = &EnumeratedWord> {
        self.levels.iter().flatten()
    }

    /// Canonical entry for a matrix, when dedup indexed it.
    pub fn find(&self, m: &RationalMatrix) -> Option<&EnumeratedWord> {
        let (lvl, idx) = *self.index.get(&m.canonical_key())?;
        Some(&self.levels[lvl][idx])
    }
}

/// Breadth-first enumerator, one level at a time, so searches can stop at
/// the first level containing what they want.
///
/// Every freely reduced word is walked whether or not dedup is on; dedup
/// controls what the levels store (canonical first-seen entries only) and
/// feeds the relation log, so a relation like `a a a = 1` is observed as
/// such even though `a a` already duplicated `a^-1` one level earlier.
pub struct Enumeration<'a> {
    gens: &'a GeneratorSet,
    dedup: bool,
    /// Extend only newly discovered canonical elements instead of every
    /// reduced word; implies dedup.
    pruned: bool,
    budget: usize,
    levels: Vec<Vec<EnumeratedWord>>,
    /// All reduced words at the current length; equals the last stored
    /// level when dedup is off (kept empty then to avoid double storage).
    frontier: Vec<EnumeratedWord>,
    relations: Vec<Relation>,
    index: HashMap<String, (usize, usize)>,
    bytes: usize,
    truncated: bool,
}

impl<'a> Enumeration<'a> {
    pub fn new(gens: &'a GeneratorSet, dedup: bool, budget: usize) -> Enumeration<'a> {
        let identity = EnumeratedWord {
            word: Word::empty(),
            matrix: RationalMatrix::identity(gens.n()),
        };
        let mut index = HashMap::new();
        let bytes = entry_bytes(&identity);
        if dedup {
            index.insert(identity.matrix.canonical_key(), (0, 0));
        }
        Enumeration {
            gens,
            dedup,
            pruned: false,
            budget,
            levels: vec![vec![identity.clone()]],
            frontier: if dedup { vec![identity] } else { Vec::new() },
            relations: Vec::new(),
            index,
            bytes,
            truncated: false,
        }
    }

    /// Element-ball enumerator: dedup with a pruned frontier that keeps
    /// only the newly discovered canonical elements, so the walk scales
    /// with the number of distinct group elements instead of reduced
    /// words. Levels still equal word-metric spheres: a geodesic's prefix
    /// lands on an earlier element, whose canonical word extends to the
    /// endpoint at the same length. Witness words stay geodesic but may
    /// tie-break differently from the full walk, and the relation log
    /// shrinks to first collisions.
    pub fn new_pruned(gens: &'a GeneratorSet, budget: usize) -> Enumeration<'a> {
        let mut e = Enumeration::new(gens, true, budget);
        e.pruned = true;
        e
    }

    pub fn current_len(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn truncated(&self) -> bool {
        self.truncated
    }

    /// Entries stored at the current length: canonical representatives
    /// when dedup is on, every reduced word otherwise.
    pub fn last_level(&self) -> &[EnumeratedWord] {
        self.levels.last().expect("level 0 always present")
    }

    /// Builds the next level. Returns false (and retains only complete
    /// levels) when the memory budget would be exceeded or the frontier
    /// is empty.
    pub fn advance(&mut self) -> bool {
        if self.truncated {
            return false;
        }
        let lvl_no = self.levels.len();
        // Children of the full reduced frontier, in shortlex order:
        // parents are shortlex sorted and extension order is (parent,
        // letter). Matrix products run in parallel; everything order
        // sensitive below is sequential.
        let children: Vec<EnumeratedWord> = {
            let parents: &[EnumeratedWord] = if self.dedup {
                &self.frontier
            } else {
                self.levels.last().expect("level 0 always present")
            };
            if parents.is_empty() {
                return false;
            }
            let letters = self.gens.letters();
            let candidates: Vec<(usize, Letter)> = parents
                .iter()
                .enumerate()
                .flat_map(|(pi, p)| {
                    letters
                        .iter()
                        .filter(move |l| {
                            p.word.letters().last().map_or(true, |last| !last.cancels(**l))
                        })
                        .map(move |&l| (pi, l))
                })
                .collect();
            let products: Vec<RationalMatrix> = candidates
                .par_iter()
                .map(|&(pi, l)| parents[pi].matrix.dot(self.gens.matrix(l)))
                .collect();
            candidates
                .into_iter()
                .zip(products)
                .map(|((pi, l), matrix)| {
                    let mut letters = parents[pi].word.letters().to_vec();
                    letters.push(l);
                    EnumeratedWord { word: Word { letters }, matrix }
                })
                .collect()
        };
        let child_bytes: usize = children.iter().map(entry_bytes).sum();
        // Conservative pre-check: frontier replacement plus (with dedup)
        // the stored canonical subset, bounded by the full child size.
        let worst = child_bytes * if self.dedup { 2 } else { 1 };
        if self.bytes + worst > self.budget {
            self.truncated = true;
            return false;
        }
        let mut level: Vec<EnumeratedWord> = Vec::new();
        if self.dedup {
            let mut stored_bytes = 0usize;
            for e in &children {
                let key = e.matrix.canonical_key();
                if let Some(&(wl, wi)) = self.index.get(&key) {
                    // The witness may sit in the level still being built.
                    let witness = if wl == lvl_no {
                        level[wi].word.clone()
                    } else {
                        self.levels[wl][wi].word.clone()
                    };
                    self.relations.push(Relation { word: e.word.clone(), witness });
                } else {
                    self.index.insert(key, (lvl_no, level.len()));
                    stored_bytes += entry_bytes(e);
                    level.push(e.clone());
                }
            }
            // The previous frontier is dropped when replaced, so the
            // running total keeps one frontier plus all stored levels.
            let frontier_bytes = if self.pruned { stored_bytes } else { child_bytes };
            self.bytes = self.bytes - self.frontier.iter().map(entry_bytes).sum::<usize>()
                + frontier_bytes
                + stored_bytes;
            self.frontier = if self.pruned { level.clone() } else { children };
        } else {
            self.bytes += child_bytes;
            level = children;
        }
        self.levels.push(level);
        true
    }

    /// Number of fully built levels beyond the identity.
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn finish(self, requested_len: usize) -> EnumerationResult {
        EnumerationResult {
            dedup: self.dedup,
            completed_len: self.levels.len() - 1,
            requested_len,
            levels: self.levels,
            relations: self.relations,
            truncated: self.truncated,
            bytes_estimate: self.bytes,
            index: self.index,
        }
    }
}

fn entry_bytes(e: &EnumeratedWord) -> usize {
    e.matrix.byte_estimate() + 16 * e.word.len() + 64
}

/// All freely reduced words of length at most `max_len` under the default
/// memory budget; with `dedup` one canonical word per group element plus
/// the relation log.
pub fn enumerate(gens: &GeneratorSet, max_len: usize, dedup: bool) -> EnumerationResult {
    enumerate_with_budget(gens, max_len, dedup, DEFAULT_BUDGET_BYTES)
}

pub fn enumerate_with_budget(
    gens: &GeneratorSet,
    max_len: usize,
    dedup: bool,
    budget_bytes: usize,
) -> EnumerationResult {
    let mut e = Enumeration::new(gens, dedup, budget_bytes);
    for _ in 0..max_len {
        if !e.advance() {
            break;
        }
    }
    e.finish(max_len)
}

/// Group-element ball of radius `max_len`: one canonical geodesic word
/// per element, levels indexed by word-metric distance. Scales with the
/// number of distinct elements instead of reduced words, so heavily
/// collapsing groups stay cheap at depths the free walk cannot reach.
pub fn enumerate_elements(gens: &GeneratorSet, max_len: usize) -> EnumerationResult {
    enumerate_elements_with_budget(gens, max_len, DEFAULT_BUDGET_BYTES)
}

pub fn enumerate_elements_with_budget(
    gens: &GeneratorSet,
    max_len: usize,
    budget_bytes: usize,
) -> EnumerationResult {
    let mut e = Enumeration::new_pruned(gens, budget_bytes);
    for _ in 0..max_len {
        if !e.advance() {
            break;
        }
    }
    e.finish(max_len)
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?} = {:?}", self.word, self.witness)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn mat(rows: &[&[i64]]) -> RationalMatrix {
        RationalMatrix::from_i64_rows(rows).unwrap()
    }

    fn gen_a() -> RationalMatrix {
        mat(&[&[1, 1, 2], &[0, 1, 1], &[0, -3, -2]])
    }

    fn gen_b() -> RationalMatrix {
        mat(&[&[-2, 0, -1], &[-5, 1, -1], &[3, 0, 1]])
    }

    fn triangle() -> GeneratorSet {
        GeneratorSet::named(3, &[("a", gen_a()), ("b", gen_b())]).unwrap()
    }

    /// Generic pair: shears in transverse positions generate a free
    /// monoid worth of distinct matrices at small length.
    fn generic_pair() -> GeneratorSet {
        let u = mat(&[&[1, 2, 0], &[0, 1, 0], &[0, 0, 1]]);
        let v = mat(&[&[1, 0, 0], &[3, 1, 0], &[2, 1, 1]]);
        GeneratorSet::named(3, &[("u", u), ("v", v)]).unwrap()
    }

    #[test]
    fn construction_validates() {
        assert!(matches!(
            GeneratorSet::named(3, &[("A", gen_a())]),
            Err(WordError::BadName(_))
        ));
        assert!(matches!(
            GeneratorSet::named(3, &[("a", gen_a()), ("a", gen_b())]),
            Err(WordError::DuplicateName(_))
        ));
        assert!(matches!(
            GeneratorSet::named(2, &[("a", gen_a())]),
            Err(WordError::DimensionMismatch { .. })
        ));
        let empty = GeneratorSet::new(3, vec![]).unwrap();
        assert_eq!(empty.rank(), 0);
        let g = triangle();
        assert_eq!(g.rank(), 2);
        assert!(g.generator(0).dot(g.generator_inverse(0)).is_identity());
    }

    #[test]
    fn parse_reduce_display_round_trip() {
        let g = triangle();
        let w = Word::parse("a a^-1", &g).unwrap();
        assert!(w.is_empty());
        let w = Word::parse("a b B a", &g).unwrap();
        assert_eq!(w.display(&g), "a a");
        let w = Word::parse("1", &g).unwrap();
        assert_eq!(w.display(&g), "1");
        assert!(Word::parse("c", &g).is_err());
        assert!(Word::parse("a^2", &g).is_err());
        // Alias and explicit inverse agree.
        let w1 = Word::parse("A b", &g).unwrap();
        let w2 = Word::parse("a^-1 b", &g).unwrap();
        assert_eq!(w1, w2);
        assert_eq!(w1.display(&g), "a^-1 b");
        // Round trip through the canonical form.
        let back = Word::parse(&w1.display(&g), &g).unwrap();
        assert_eq!(back, w1);
    }

    #[test]
    fn paper_length_18_word_is_already_reduced() {
        let g = triangle();
        let s = "b a^-1 b a^-1 b a^-1 b a^-1 b^-1 a b a^-1 b a^-1 b^-1 a b a^-1";
        let w = Word::parse(s, &g).unwrap();
        assert_eq!(w.len(), 18);
        assert_eq!(w.display(&g), s);
    }

    #[test]
    fn reduction_is_idempotent_and_removes_nested_pairs() {
        let a = Letter::new(0, Sign::Pos);
        let ai = Letter::new(0, Sign::Neg);
        let b = Letter::new(1, Sign::Pos);
        let bi = Letter::new(1, Sign::Neg);
        // a b b^-1 a^-1 collapses completely from the inside out.
        let w = reduce(&[a, b, bi, ai]);
        assert!(w.is_empty());
        let w = reduce(&[a, b, bi, a]);
        assert_eq!(w.letters(), &[a, a]);
        let again = reduce(w.letters());
        assert_eq!(again, w);
    }

    #[test]
    fn cyclic_reduction_and_conjugator() {
        let g = triangle();
        let w = Word::parse("a b a^-1", &g).unwrap();
        let (core, conj) = w.cyclic_reduce();
        assert_eq!(core.display(&g), "b");
        assert_eq!(conj.display(&g), "a");
        let w = Word::parse("a b", &g).unwrap();
        let (core, conj) = w.cyclic_reduce();
        assert_eq!(core, w);
        assert!(conj.is_empty());
        // Deep conjugation: a b^-1 (x) b a^-1 with x = a a.
        let w = Word::parse("a b^-1 a a b a^-1", &g).unwrap();
        let (core, conj) = w.cyclic_reduce();
        assert!(core.is_cyclically_reduced());
        assert_eq!(conj.display(&g), "a b^-1");
        // Free identity w = c core c^-1.
        let rebuilt = conj.concat(&core).concat(&conj.inverse());
        assert_eq!(rebuilt, w);
    }

    #[test]
    fn evaluation_relations_of_triangle_group() {
        let g = triangle();
        let a3 = Word::parse("a a a", &g).unwrap();
        assert!(evaluate(&a3, &g).is_identity());
        let b3 = Word::parse("b b b", &g).unwrap();
        assert!(evaluate(&b3, &g).is_identity());
        let ab4 = Word::parse("a b a b a b a b", &g).unwrap();
        assert!(evaluate(&ab4, &g).is_identity());
        assert!(evaluate(&Word::empty(), &g).is_identity());
    }

    #[test]
    fn evaluation_is_a_homomorphism() {
        let g = triangle();
        let u = Word::parse("a b^-1 a", &g).unwrap();
        let v = Word::parse("a^-1 b a", &g).unwrap();
        let uv = u.concat(&v);
        assert_eq!(evaluate(&uv, &g), evaluate(&u, &g).dot(&evaluate(&v, &g)));
        assert_eq!(evaluate(&u.inverse(), &g), evaluate(&u, &g).inverse());
    }

    #[test]
    fn enumeration_counts_match_closed_form() {
        // Free reduced word count: 1 + sum 2r (2r-1)^(k-1).
        for (rank, max_len) in [(1usize, 8usize), (2, 6), (3, 4)] {
            let shears: Vec<(String, RationalMatrix)> = (0..rank)
                .map(|i| {
                    let mut rows = vec![vec![0i64; 3]; 3];
                    for d in 0..3 {
                        rows[d][d] = 1;
                    }
                    // Distinct off-diagonal positions keep the generators
                    // independent but the count is about words, not matrices.
                    let (r, c) = [(0, 1), (0, 2), (1, 2)][i];
                    rows[r][c] = 1;
                    let refs: Vec<&[i64]> = rows.iter().map(|x| x.as_slice()).collect();
                    (
                        format!("g{i}"),
                        RationalMatrix::from_i64_rows(&refs).unwrap(),
                    )
                })
                .collect();
            let gens = GeneratorSet::new(3, shears).unwrap();
            let result = enumerate(&gens, max_len, false);
            let r = rank as u64;
            let mut expect = 1u64;
            for k in 1..=max_len {
                expect += 2 * r * (2 * r - 1).pow(k as u32 - 1);
            }
            assert_eq!(result.total() as u64, expect, "rank {rank} len {max_len}");
            for (k, level) in result.levels.iter().enumerate() {
                for e in level {
                    assert_eq!(e.word.len(), k);
                }
                // Shortlex within the level.
                for pair in level.windows(2) {
                    assert!(pair[0].word < pair[1].word, "level {k} ordered");
                }
            }
        }
    }

    #[test]
    fn two_generator_level_two_has_seventeen_words() {
        let result = enumerate(&generic_pair(), 2, false);
        assert_eq!(result.total(), 17);
        assert_eq!(result.levels[1].len(), 4);
        assert_eq!(result.levels[2].len(), 12);
    }

    #[test]
    fn dedup_detects_triangle_relations() {
        let g = triangle();
        let result = enumerate(&g, 3, true);
        assert!(!result.truncated);
        // a^3 = 1 shows up as the relation word "a a a" with the empty
        // canonical witness.
        let a3 = Word::parse("a a a", &g).unwrap();
        let hit = result
            .relations
            .iter()
            .find(|r| r.word == a3)
            .expect("a^3 relation detected");
        assert!(hit.witness.is_empty());
        // Identity dedups to the empty word.
        let found = result.find(&RationalMatrix::identity(3)).unwrap();
        assert!(found.word.is_empty());
        // The first nontrivial duplicate already happens at length 2:
        // a a = a^-1.
        let aa = Word::parse("a a", &g).unwrap();
        let ai = Word::parse("a^-1", &g).unwrap();
        let hit = result.relations.iter().find(|r| r.word == aa).unwrap();
        assert_eq!(hit.witness, ai);
    }

    #[test]
    fn dedup_never_merges_distinct_matrices_and_generic_pairs_are_free() {
        let result = enumerate(&generic_pair(), 4, true);
        assert!(result.relations.is_empty(), "generic pair has no short relations");
        // Without relations, dedup counts match the free counts.
        let free = enumerate(&generic_pair(), 4, false);
        assert_eq!(result.total(), free.total());
        // Matrices in the dedup index really are pairwise distinct.
        let mut keys: Vec<String> =
            result.iter().map(|e| e.matrix.canonical_key()).collect();
        keys.sort();
        keys.dedup();
        assert_eq!(keys.len(), result.total());
    }

    #[test]
    fn dedup_entries_evaluate_to_their_matrix() {
        let g = triangle();
        let result = enumerate(&g, 4, true);
        for e in result.iter() {
            assert_eq!(evaluate(&e.word, &g), e.matrix, "stored matrix matches");
        }
        // Canonical witnesses are shortlex minimal: no later word at the
        // same length is smaller.
        for level in &result.levels {
            for pair in level.windows(2) {
                assert!(pair[0].word < pair[1].word);
            }
        }
    }

    #[test]
    fn budget_truncation_keeps_whole_levels() {
        let g = triangle();
        // A budget high enough for a couple of levels only.
        let result = enumerate_with_budget(&g, 6, true, 4_000);
        assert!(result.truncated);
        assert!(result.completed_len < 6);
        assert_eq!(result.levels.len(), result.completed_len + 1);
        assert_eq!(result.requested_len, 6);
        // The retained prefix agrees with an untruncated run.
        let full = enumerate(&g, result.completed_len, true);
        assert_eq!(full.total(), result.total());
        for (a, b) in full.iter().zip(result.iter()) {
            assert_eq!(a.word, b.word);
        }
    }

    #[test]
    fn enumeration_of_empty_generator_set() {
        let gens = GeneratorSet::new(3, vec![]).unwrap();
        let result = enumerate(&gens, 5, true);
        assert_eq!(result.total(), 1);
        assert!(!result.truncated);
        assert!(result.iter().next().unwrap().word.is_empty());
    }

    #[test]
    fn pruned_ball_matches_the_dedup_walk_per_level() {
        let g = triangle();
        let ball = enumerate_elements(&g, 6);
        let full = enumerate(&g, 6, true);
        assert_eq!(ball.levels.len(), full.levels.len());
        for (pruned_level, full_level) in ball.levels.iter().zip(&full.levels) {
            // Same elements at each word-metric distance; witness words may
            // tie-break differently, so compare canonical keys.
            let mut pk: Vec<String> =
                pruned_level.iter().map(|e| e.matrix.canonical_key()).collect();
            let mut fk: Vec<String> =
                full_level.iter().map(|e| e.matrix.canonical_key()).collect();
            pk.sort();
            fk.sort();
            assert_eq!(pk, fk);
        }
        // Witness words are geodesic: they evaluate back and have the
        // level's length.
        for (lvl, level) in ball.levels.iter().enumerate() {
            for e in level {
                assert_eq!(e.word.len(), lvl);
                assert_eq!(evaluate(&e.word, &g), e.matrix);
            }
        }
        // Triangle group sphere sizes stay far below the free counts.
        let sizes: Vec<usize> = ball.levels.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![1, 4, 8, 16, 30, 50, 88]);
    }

    #[test]
    fn pruned_ball_equals_the_free_walk_without_relations() {
        let g = generic_pair();
        let ball = enumerate_elements(&g, 4);
        let full = enumerate(&g, 4, true);
        assert!(ball.relations.is_empty());
        assert_eq!(ball.total(), full.total());
        for (a, b) in ball.iter().zip(full.iter()) {
            assert_eq!(a.word, b.word);
            assert_eq!(a.matrix, b.matrix);
        }
    }

    #[test]
    fn pruned_ball_logs_first_collisions() {
        let g = triangle();
        let ball = enumerate_elements(&g, 3);
        let aa = Word::parse("a a", &g).unwrap();
        let ai = Word::parse("a^-1", &g).unwrap();
        let hit = ball.relations.iter().find(|r| r.word == aa).unwrap();
        assert_eq!(hit.witness, ai);
        // The word a a a is never walked: its prefix a a was pruned.
        let a3 = Word::parse("a a a", &g).unwrap();
        assert!(ball.relations.iter().all(|r| r.word != a3));
    }

    #[test]
    fn generator_set_serde_uses_documented_shape() {
        let g = triangle();
        let json = serde_json::to_string(&g).unwrap();
        let v: serde_json::Value = serde_json::from_str(&json).unwrap();
        assert_eq!(v["n"], 3);
        assert_eq!(v["generators"][0]["name"], "a");
        assert_eq!(v["generators"][0]["rows"][0][2], "2");
        let back: GeneratorSet = serde_json::from_str(&json).unwrap();
        assert_eq!(back, g);
        // Documented input format parses directly.
        let input = r#"{"n":3,"generators":[{"name":"a","rows":[["1","1","2"],["0","1","1"],["0","-3","-2"]]}]}"#;
        let parsed: GeneratorSet = serde_json::from_str(input).unwrap();
        assert_eq!(parsed.rank(), 1);
        assert_eq!(parsed.generator(0), &gen_a());
        // Non-unimodular rows are rejected on the way in.
        let bad = r#"{"n":2,"generators":[{"name":"a","rows":[["2","0"],["0","1"]]}]}"#;
        assert!(serde_json::from_str::<GeneratorSet>(bad).is_err());
    }

    #[test]
    fn cyclic_generator_enumeration_is_linear() {
        let d = RationalMatrix::from_rows_str(&[
            vec!["9", "0", "0"],
            vec!["0", "3", "0"],
            vec!["0", "0", "1/27"],
        ])
        .unwrap();
        let gens = GeneratorSet::named(3, &[("d", d)]).unwrap();
        let result = enumerate(&gens, 10, true);
        // Powers d^-10 .. d^10: 21 distinct elements, no relations.
        assert_eq!(result.total(), 21);
        assert!(result.relations.is_empty());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn prop_cyclic_reduce_evaluation_oracle(raw in proptest::collection::vec((0usize..2, prop::bool::ANY), 0..12)) {
            let g = triangle();
            let letters: Vec<Letter> = raw
                .into_iter()
                .map(|(idx, neg)| Letter::new(idx, if neg { Sign::Neg } else { Sign::Pos }))
                .collect();
            let w = reduce(&letters);
            let (core, conj) = w.cyclic_reduce();
            prop_assert!(core.is_cyclically_reduced());
            let lhs = evaluate(&w, &g);
            let rhs = evaluate(&conj, &g)
                .dot(&evaluate(&core, &g))
                .dot(&evaluate(&conj.inverse(), &g));
            prop_assert_eq!(lhs, rhs);
        }

        #[test]
        fn prop_inverse_evaluation(raw in proptest::collection::vec((0usize..2, prop::bool::ANY), 0..10)) {
            let g = generic_pair();
            let letters: Vec<Letter> = raw
                .into_iter()
                .map(|(idx, neg)| Letter::new(idx, if neg { Sign::Neg } else { Sign::Pos }))
                .collect();
            let w = reduce(&letters);
            prop_assert_eq!(evaluate(&w.inverse(), &g), evaluate(&w, &g).inverse());
        }
    }
}
