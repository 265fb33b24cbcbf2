//! Utterance–scene pairs, their on-disk formats, and the transforms that
//! raise referential or linguistic uncertainty.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lexicon::{Referent, Word};

/// An insertion-ordered set. Utterances and scenes keep the order in which
/// their symbols were first seen so that saving a loaded corpus reproduces
/// the input bytes.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SymbolSet<T>(Vec<T>);

impl<T: PartialEq> SymbolSet<T> {
    pub fn new() -> Self {
        Self(Vec::new())
    }

    /// Inserts `x` unless already present; returns whether it was added.
    pub fn insert(&mut self, x: T) -> bool {
        if self.0.contains(&x) {
            false
        } else {
            self.0.push(x);
            true
        }
    }

    pub fn contains(&self, x: &T) -> bool {
        self.0.contains(x)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, T> {
        self.0.iter()
    }

    pub fn is_subset(&self, other: &Self) -> bool {
        self.0.iter().all(|x| other.contains(x))
    }
}

impl<T: PartialEq + Clone> SymbolSet<T> {
    pub fn union_with(&mut self, other: &Self) {
        for x in other.iter() {
            self.insert(x.clone());
        }
    }
}

impl<T: PartialEq> Default for SymbolSet<T> {
    fn default() -> Self {
        Self::new()
    }
}

impl<T: PartialEq> FromIterator<T> for SymbolSet<T> {
    fn from_iter<I: IntoIterator<Item = T>>(iter: I) -> Self {
        let mut s = Self::new();
        for x in iter {
            s.insert(x);
        }
        s
    }
}

impl<'a, T> IntoIterator for &'a SymbolSet<T> {
    type Item = &'a T;
    type IntoIter = std::slice::Iter<'a, T>;
    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// One observation: the words heard and the referents perceived.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputPair {
    pub utterance: SymbolSet<Word>,
    pub scene: SymbolSet<Referent>,
    /// 1-based position in the owning corpus.
    pub index: usize,
}

impl InputPair {
    pub fn new(
        utterance: impl IntoIterator<Item = Word>,
        scene: impl IntoIterator<Item = Referent>,
    ) -> Result<Self> {
        let utterance: SymbolSet<Word> = utterance.into_iter().collect();
        let scene: SymbolSet<Referent> = scene.into_iter().collect();
        if utterance.is_empty() {
            return Err(Error::EmptyUtterance);
        }
        if scene.is_empty() {
            return Err(Error::InvalidSpec("scene is empty".into()));
        }
        Ok(Self {
            utterance,
            scene,
            index: 1,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Base,
    RuPlus,
    LuPlus,
    Synthetic,
    File,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::Base => "base",
            Provenance::RuPlus => "ru_plus",
            Provenance::LuPlus => "lu_plus",
            Provenance::Synthetic => "synthetic",
            Provenance::File => "file",
        }
    }
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "base" => Provenance::Base,
            "ru_plus" => Provenance::RuPlus,
            "lu_plus" => Provenance::LuPlus,
            "synthetic" => Provenance::Synthetic,
            "file" => Provenance::File,
            _ => return Err(Error::InvalidSpec(format!("unknown provenance `{s}`"))),
        })
    }
}

/// Corpus file formats.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    /// Two-line records (utterance, then scene) separated by blank lines.
    PairsText,
    /// One `{"u": [...], "s": [...]}` object per line.
    Jsonl,
}

impl FromStr for Format {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pairs-text" | "pairs" | "txt" => Ok(Format::PairsText),
            "jsonl" => Ok(Format::Jsonl),
            _ => Err(Error::InvalidSpec(format!("unknown corpus format `{s}`"))),
        }
    }
}

/// An ordered sequence of input pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pairs: Vec<InputPair>,
    provenance: Provenance,
}

#[derive(Serialize, Deserialize)]
struct JsonRecord {
    u: Vec<String>,
    s: Vec<String>,
}

impl Corpus {
    /// Builds a corpus, renumbering pair indices from 1.
    pub fn new(pairs: impl IntoIterator<Item = InputPair>, provenance: Provenance) -> Self {
        let pairs = pairs
            .into_iter()
            .enumerate()
            .map(|(i, mut p)| {
                p.index = i + 1;
                p
            })
            .collect();
        Self { pairs, provenance }
    }

    pub fn pairs(&self) -> &[InputPair] {
        &self.pairs
    }

    pub fn provenance(&self) -> Provenance {
        self.provenance
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, InputPair> {
        self.pairs.iter()
    }

    /// The first `n` pairs (or all of them), keeping provenance.
    pub fn prefix(&self, n: usize) -> Corpus {
        Corpus::new(self.pairs.iter().take(n).cloned(), self.provenance)
    }

    /// Pairs after the first `n`.
    pub fn suffix(&self, n: usize) -> Corpus {
        Corpus::new(self.pairs.iter().skip(n).cloned(), self.provenance)
    }

    /// Token occurrences of each word across all utterances.
    pub fn word_counts(&self) -> BTreeMap<Word, usize> {
        let mut counts = BTreeMap::new();
        for p in &self.pairs {
            for w in &p.utterance {
                *counts.entry(w.clone()).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Referents present in every scene whose utterance contains `w`; empty
    /// when `w` never occurs.
    pub fn candidate_referents(&self, w: &Word) -> BTreeSet<Referent> {
        let mut scenes = self
            .pairs
            .iter()
            .filter(|p| p.utterance.contains(w))
            .map(|p| &p.scene);
        let Some(first) = scenes.next() else {
            return BTreeSet::new();
        };
        let mut out: BTreeSet<Referent> = first.iter().cloned().collect();
        for s in scenes {
            out.retain(|r| s.contains(r));
        }
        out
    }

    /// True when every word occurring at least `min_occurrences` times has a
    /// single candidate referent.
    pub fn is_unambiguous(&self, min_occurrences: usize) -> bool {
        self.word_counts()
            .iter()
            .filter(|&(_, &n)| n >= min_occurrences)
            .all(|(w, _)| self.candidate_referents(w).len() == 1)
    }

    /// Occurrences of each referent across all scenes.
    pub fn referent_counts(&self) -> BTreeMap<Referent, usize> {
        let mut counts = BTreeMap::new();
        for p in &self.pairs {
            for r in &p.scene {
                *counts.entry(r.clone()).or_insert(0) += 1;
            }
        }
        counts
    }

    pub fn load(reader: impl BufRead, format: Format) -> Result<Self> {
        let pairs = match format {
            Format::PairsText => read_pairs_text(reader)?,
            Format::Jsonl => read_jsonl(reader)?,
        };
        if pairs.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Corpus::new(pairs, Provenance::File))
    }

    pub fn save(&self, mut out: impl Write, format: Format) -> Result<()> {
        match format {
            Format::PairsText => {
                for (i, p) in self.pairs.iter().enumerate() {
                    if i > 0 {
                        writeln!(out)?;
                    }
                    writeln!(out, "{}", join(&p.utterance))?;
                    writeln!(out, "{}", join(&p.scene))?;
                }
            }
            Format::Jsonl => {
                for p in &self.pairs {
                    let rec = JsonRecord {
                        u: p.utterance.iter().map(|w| w.to_string()).collect(),
                        s: p.scene.iter().map(|r| r.to_string()).collect(),
                    };
                    serde_json::to_writer(&mut out, &rec)?;
                    writeln!(out)?;
                }
            }
        }
        Ok(())
    }

    /// Keeps pairs 1, 4, 7, ...: the core pairs shared by the base, RU+ and
    /// LU+ corpora.
    pub fn subsample_every_third(&self) -> Result<Corpus> {
        self.regroup(Provenance::Base, |group| group[0].clone())
    }

    /// Core pair utterance with the scenes of the whole triple.
    pub fn make_ru_plus(&self) -> Result<Corpus> {
        self.regroup(Provenance::RuPlus, |group| {
            let mut p = group[0].clone();
            for extra in &group[1..] {
                p.scene.union_with(&extra.scene);
            }
            p
        })
    }

    /// Utterances of the whole triple with the core pair's scene.
    pub fn make_lu_plus(&self) -> Result<Corpus> {
        self.regroup(Provenance::LuPlus, |group| {
            let mut p = group[0].clone();
            for extra in &group[1..] {
                p.utterance.union_with(&extra.utterance);
            }
            p
        })
    }

    fn regroup(
        &self,
        provenance: Provenance,
        f: impl Fn(&[InputPair]) -> InputPair,
    ) -> Result<Corpus> {
        if self.pairs.len() < 3 {
            return Err(Error::TooShort {
                needed: 3,
                got: self.pairs.len(),
            });
        }
        Ok(Corpus::new(self.pairs.chunks(3).map(f), provenance))
    }
}

impl<'a> IntoIterator for &'a Corpus {
    type Item = &'a InputPair;
    type IntoIter = std::slice::Iter<'a, InputPair>;
    fn into_iter(self) -> Self::IntoIter {
        self.pairs.iter()
    }
}

fn join<T: fmt::Display + PartialEq>(set: &SymbolSet<T>) -> String {
    let mut s = String::new();
    for (i, x) in set.iter().enumerate() {
        if i > 0 {
            s.push(' ');
        }
        s.push_str(&x.to_string());
    }
    s
}

fn parse_words(line: &str, lineno: usize) -> Result<SymbolSet<Word>> {
    line.split_whitespace()
        .map(|t| Word::plain(t).map_err(|e| parse_err(lineno, e.to_string())))
        .collect()
}

fn parse_referents(line: &str, lineno: usize) -> Result<SymbolSet<Referent>> {
    line.split_whitespace()
        .map(|t| Referent::plain(t).map_err(|e| parse_err(lineno, e.to_string())))
        .collect()
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn read_pairs_text(reader: impl BufRead) -> Result<Vec<InputPair>> {
    let mut pairs = Vec::new();
    // (line number, text) of the lines in the record being assembled
    let mut record: Vec<(usize, String)> = Vec::new();

    let mut flush = |record: &mut Vec<(usize, String)>| -> Result<()> {
        if record.is_empty() {
            return Ok(());
        }
        if record.len() != 2 {
            let (first, _) = record[0];
            return Err(parse_err(
                first,
                format!(
                    "record has {} line(s), expected utterance and scene",
                    record.len()
                ),
            ));
        }
        let (ul, u) = &record[0];
        let (sl, s) = &record[1];
        pairs.push(InputPair {
            utterance: parse_words(u, *ul)?,
            scene: parse_referents(s, *sl)?,
            index: 0,
        });
        record.clear();
        Ok(())
    };

    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        if line.starts_with('#') {
            continue;
        }
        if line.trim().is_empty() {
            flush(&mut record)?;
        } else {
            record.push((lineno, line));
        }
    }
    flush(&mut record)?;
    Ok(pairs)
}

fn read_jsonl(reader: impl BufRead) -> Result<Vec<InputPair>> {
    let mut pairs = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| parse_err(lineno, e.to_string()))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: JsonRecord =
            serde_json::from_str(&line).map_err(|e| parse_err(lineno, e.to_string()))?;
        let utterance: SymbolSet<Word> = rec
            .u
            .into_iter()
            .map(|t| Word::plain(t).map_err(|e| parse_err(lineno, e.to_string())))
            .collect::<Result<_>>()?;
        let scene: SymbolSet<Referent> = rec
            .s
            .into_iter()
            .map(|t| Referent::plain(t).map_err(|e| parse_err(lineno, e.to_string())))
            .collect::<Result<_>>()?;
        if utterance.is_empty() {
            return Err(parse_err(lineno, "empty utterance"));
        }
        if scene.is_empty() {
            return Err(parse_err(lineno, "empty scene"));
        }
        pairs.push(InputPair {
            utterance,
            scene,
            index: 0,
        });
    }
    Ok(pairs)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(u: &[&str], s: &[&str]) -> InputPair {
        InputPair::new(
            u.iter().map(|x| Word::new(*x).unwrap()),
            s.iter().map(|x| Referent::new(*x).unwrap()),
        )
        .unwrap()
    }

    fn numbered(n: usize) -> Corpus {
        Corpus::new(
            (1..=n).map(|i| pair(&[&format!("u{i}")], &[&format!("S{i}")])),
            Provenance::Synthetic,
        )
    }

    fn utt_ids(c: &Corpus) -> Vec<String> {
        c.iter().map(|p| join(&p.utterance)).collect()
    }

    #[test]
    fn loads_two_line_record() {
        let c = Corpus::load("ray eats\nRAY EATS\n".as_bytes(), Format::PairsText).unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.pairs()[0], pair(&["ray", "eats"], &["RAY", "EATS"]));
        assert_eq!(c.pairs()[0].index, 1);
    }

    #[test]
    fn duplicate_tokens_collapse() {
        let c = Corpus::load("the the dog\nTHE DOG\n".as_bytes(), Format::PairsText).unwrap();
        assert_eq!(c.pairs()[0].utterance.len(), 2);
    }

    #[test]
    fn comments_and_blank_separators() {
        let text = "# header\na b\nA B\n\n# mid\nc\nC\n";
        let c = Corpus::load(text.as_bytes(), Format::PairsText).unwrap();
        assert_eq!(c.len(), 2);
        assert_eq!(c.pairs()[1].index, 2);
    }

    #[test]
    fn malformed_record_names_line() {
        let text = "a b\nA B\n\nlonely\n\nc\nC\n";
        match Corpus::load(text.as_bytes(), Format::PairsText) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
        let text = "a\nA\nextra\n";
        assert!(matches!(
            Corpus::load(text.as_bytes(), Format::PairsText),
            Err(Error::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn empty_file_is_rejected() {
        assert!(matches!(
            Corpus::load("# nothing\n".as_bytes(), Format::PairsText),
            Err(Error::EmptyCorpus)
        ));
        assert!(matches!(
            Corpus::load("".as_bytes(), Format::Jsonl),
            Err(Error::EmptyCorpus)
        ));
    }

    #[test]
    fn reserved_prefix_is_refused() {
        assert!(Corpus::load("!dax\nDAX\n".as_bytes(), Format::PairsText).is_err());
    }

    #[test]
    fn jsonl_rejects_empty_sides() {
        let err = Corpus::load(
            "{\"u\":[\"a\"],\"s\":[\"A\"]}\n{\"u\":[],\"s\":[\"A\"]}\n".as_bytes(),
            Format::Jsonl,
        );
        assert!(matches!(err, Err(Error::Parse { line: 2, .. })));
        let err = Corpus::load("{\"u\":[\"a\"]}\n".as_bytes(), Format::Jsonl);
        assert!(matches!(err, Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn save_reproduces_canonical_input() {
        let text = "ray eats\nRAY EATS\n\nan apple\nAN APPLE\n";
        let c = Corpus::load(text.as_bytes(), Format::PairsText).unwrap();
        let mut out = Vec::new();
        c.save(&mut out, Format::PairsText).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), text);

        let jsonl = "{\"u\":[\"ray\",\"eats\"],\"s\":[\"RAY\",\"EATS\"]}\n";
        let c = Corpus::load(jsonl.as_bytes(), Format::Jsonl).unwrap();
        let mut out = Vec::new();
        c.save(&mut out, Format::Jsonl).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), jsonl);
    }

    #[test]
    fn every_third_pair() {
        let c = numbered(9);
        assert_eq!(
            utt_ids(&c.subsample_every_third().unwrap()),
            ["u1", "u4", "u7"]
        );
        assert_eq!(
            utt_ids(&numbered(3).subsample_every_third().unwrap()),
            ["u1"]
        );
        assert_eq!(
            utt_ids(&numbered(10).subsample_every_third().unwrap()),
            ["u1", "u4", "u7", "u10"]
        );
        assert!(matches!(
            numbered(2).subsample_every_third(),
            Err(Error::TooShort { needed: 3, got: 2 })
        ));
        assert_eq!(
            numbered(9).subsample_every_third().unwrap().provenance(),
            Provenance::Base
        );
    }

    #[test]
    fn ru_plus_unions_scenes() {
        let ru = numbered(6).make_ru_plus().unwrap();
        assert_eq!(ru.provenance(), Provenance::RuPlus);
        assert_eq!(ru.pairs()[0], pair(&["u1"], &["S1", "S2", "S3"]));
        assert_eq!(ru.pairs()[1].index, 2);

        let same = Corpus::new(
            (0..3).map(|i| pair(&[&format!("u{i}")], &["A"])),
            Provenance::File,
        );
        assert_eq!(same.make_ru_plus().unwrap().pairs()[0].scene.len(), 1);
    }

    #[test]
    fn lu_plus_unions_utterances() {
        let c = Corpus::new(
            [
                pair(&["a", "b"], &["A", "B"]),
                pair(&["c", "d"], &["C", "D"]),
                pair(&["e", "f"], &["E", "F"]),
            ],
            Provenance::File,
        );
        let lu = c.make_lu_plus().unwrap();
        assert_eq!(
            lu.pairs()[0],
            pair(&["a", "b", "c", "d", "e", "f"], &["A", "B"])
        );

        let same = Corpus::new((0..3).map(|_| pair(&["x"], &["X"])), Provenance::File);
        assert_eq!(same.make_lu_plus().unwrap().pairs()[0].utterance.len(), 1);
    }

    #[test]
    fn counts_tokens_over_utterances() {
        let c = Corpus::new(
            [pair(&["a", "b"], &["A", "B"]), pair(&["a"], &["A"])],
            Provenance::File,
        );
        let counts = c.word_counts();
        assert_eq!(counts[&Word::new("a").unwrap()], 2);
        assert_eq!(counts[&Word::new("b").unwrap()], 1);
    }
}
