//! Words, referents and the gold-standard lexicon that links them.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Prefix reserved for probe symbols (novel words and novel referents).
/// Corpus and lexicon readers refuse it, so a probe symbol can never
/// collide with anything a learner has already seen.
pub const NOVEL_PREFIX: char = '!';

fn check_symbol(kind: &str, s: &str) -> Result<()> {
    if s.is_empty() {
        return Err(Error::InvalidSpec(format!("empty {kind}")));
    }
    if s.chars().any(char::is_whitespace) {
        return Err(Error::InvalidSpec(format!(
            "{kind} `{s}` contains whitespace"
        )));
    }
    Ok(())
}

macro_rules! symbol {
    ($(#[$meta:meta])* $name:ident, $kind:literal) => {
        $(#[$meta])*
        #[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(try_from = "String", into = "String")]
        pub struct $name(String);

        impl $name {
            pub fn new(s: impl Into<String>) -> Result<Self> {
                let s = s.into();
                check_symbol($kind, &s)?;
                Ok(Self(s))
            }

            /// A symbol read from outside input; the probe namespace is refused.
            pub fn plain(s: impl Into<String>) -> Result<Self> {
                let s = s.into();
                if s.starts_with(NOVEL_PREFIX) {
                    return Err(Error::InvalidSpec(format!(
                        "{} `{s}` uses the reserved prefix `{NOVEL_PREFIX}`",
                        $kind
                    )));
                }
                Self::new(s)
            }

            /// A symbol in the reserved probe namespace.
            pub fn novel(name: &str) -> Result<Self> {
                Self::new(format!("{NOVEL_PREFIX}{name}"))
            }

            pub fn is_novel(&self) -> bool {
                self.0.starts_with(NOVEL_PREFIX)
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl TryFrom<String> for $name {
            type Error = Error;
            fn try_from(s: String) -> Result<Self> {
                Self::new(s)
            }
        }

        impl From<$name> for String {
            fn from(s: $name) -> String {
                s.0
            }
        }

        impl std::borrow::Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }
    };
}

symbol!(
    /// A word token as heard in an utterance. Case is preserved.
    Word,
    "word"
);
symbol!(
    /// A meaning symbol perceived in a scene. Referents live in their own
    /// namespace: `ball` and `BALL` are only related through a lexicon.
    Referent,
    "referent"
);

/// Ground-truth mapping from each word to its referent(s).
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldLexicon {
    entries: BTreeMap<Word, BTreeSet<Referent>>,
}

impl GoldLexicon {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds `referent` to the meanings of `word`.
    pub fn insert(&mut self, word: Word, referent: Referent) {
        self.entries.entry(word).or_default().insert(referent);
    }

    /// One-to-one lexicon where each word maps to its upper-cased form.
    pub fn upper_case_identity<'a>(words: impl IntoIterator<Item = &'a Word>) -> Result<Self> {
        let mut lex = Self::new();
        for w in words {
            lex.insert(w.clone(), Referent::new(w.as_str().to_uppercase())?);
        }
        Ok(lex)
    }

    pub fn get(&self, word: &Word) -> Option<&BTreeSet<Referent>> {
        self.entries.get(word)
    }

    pub fn contains(&self, word: &Word) -> bool {
        self.entries.contains_key(word)
    }

    pub fn words(&self) -> impl Iterator<Item = &Word> {
        self.entries.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Word, &BTreeSet<Referent>)> {
        self.entries.iter()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_homonym(&self, word: &Word) -> bool {
        self.entries.get(word).is_some_and(|r| r.len() >= 2)
    }

    /// All words whose gold meaning includes `referent`.
    pub fn labels_of(&self, referent: &Referent) -> Vec<&Word> {
        self.entries
            .iter()
            .filter(|(_, refs)| refs.contains(referent))
            .map(|(w, _)| w)
            .collect()
    }

    /// Every referent mentioned anywhere in the lexicon.
    pub fn referents(&self) -> BTreeSet<&Referent> {
        self.entries.values().flatten().collect()
    }

    /// Union of the gold referents of every word in `utterance`.
    pub fn derive_scene<'a>(
        &self,
        utterance: impl IntoIterator<Item = &'a Word>,
    ) -> Result<BTreeSet<Referent>> {
        let mut scene = BTreeSet::new();
        let mut any = false;
        for w in utterance {
            any = true;
            let refs = self
                .entries
                .get(w)
                .ok_or_else(|| Error::MissingEntry(w.to_string()))?;
            scene.extend(refs.iter().cloned());
        }
        if !any {
            return Err(Error::EmptyUtterance);
        }
        Ok(scene)
    }

    /// Reads the lexicon text format: one `word REF [REF ...]` line per word,
    /// `#` comments and blank lines ignored. Repeated words accumulate.
    pub fn read(reader: impl BufRead) -> Result<Self> {
        let mut lex = Self::new();
        for (i, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let parse = |m: String| Error::Parse {
                line: i + 1,
                message: m,
            };
            let mut toks = line.split_whitespace();
            let word = toks.next().expect("non-empty line has a token");
            let word = Word::plain(word).map_err(|e| parse(e.to_string()))?;
            let mut n = 0;
            for r in toks {
                lex.insert(
                    word.clone(),
                    Referent::plain(r).map_err(|e| parse(e.to_string()))?,
                );
                n += 1;
            }
            if n == 0 {
                return Err(parse(format!("word `{word}` has no referent")));
            }
        }
        Ok(lex)
    }

    pub fn write(&self, mut out: impl Write) -> Result<()> {
        for (w, refs) in &self.entries {
            write!(out, "{w}")?;
            for r in refs {
                write!(out, " {r}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }
}

impl FromIterator<(Word, Referent)> for GoldLexicon {
    fn from_iter<I: IntoIterator<Item = (Word, Referent)>>(iter: I) -> Self {
        let mut lex = Self::new();
        for (w, r) in iter {
            lex.insert(w, r);
        }
        lex
    }
}
