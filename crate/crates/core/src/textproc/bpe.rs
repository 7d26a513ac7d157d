//! Byte-pair encoding over characters with an explicit end-of-word symbol.
//!
//! Segmented output marks every unit that does not end a word with a
//! trailing `@@`, so [`BpeModel::decode`] can rejoin words.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::fmt::Write as _;

use crate::corpus::{MonoCorpus, Sentence};
use crate::error::{Error, Result};

pub const END_OF_WORD: &str = "</w>";
pub const UNK: &str = "<unk>";
const CONTINUATION: &str = "@@";
const ALPHABET_HEADER: &str = "#!alphabet";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeModel {
    merges: Vec<(String, String)>,
    alphabet: BTreeSet<char>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BpeOutput {
    pub sentence: Sentence,
    pub unk_count: usize,
}

fn symbols(word: &str) -> Vec<String> {
    let mut s: Vec<String> = word.chars().map(String::from).collect();
    s.push(END_OF_WORD.to_owned());
    s
}

fn merge_in_place(syms: &mut Vec<String>, left: &str, right: &str) {
    let mut i = 0;
    while i + 1 < syms.len() {
        if syms[i] == left && syms[i + 1] == right {
            let r = syms.remove(i + 1);
            syms[i].push_str(&r);
        }
        i += 1;
    }
}

/// Learn `num_merges` merges greedily: the most frequent adjacent pair wins,
/// frequency ties go to the lexicographically smallest `(left, right)`.
/// Stops early once every word is a single symbol.
pub fn learn_bpe(corpus: &MonoCorpus, num_merges: usize) -> BpeModel {
    let mut words: BTreeMap<&str, usize> = BTreeMap::new();
    for s in &corpus.sentences {
        for t in s.iter() {
            *words.entry(t).or_default() += 1;
        }
    }
    let alphabet = words.keys().flat_map(|w| w.chars()).collect();
    let mut segmented: Vec<(Vec<String>, usize)> =
        words.iter().map(|(w, &c)| (symbols(w), c)).collect();

    let mut merges = Vec::with_capacity(num_merges);
    for _ in 0..num_merges {
        let mut pairs: BTreeMap<(&str, &str), usize> = BTreeMap::new();
        for (syms, count) in &segmented {
            for w in syms.windows(2) {
                *pairs.entry((&w[0], &w[1])).or_default() += count;
            }
        }
        // BTreeMap iterates in lexicographic order; keep the first maximum.
        let Some(((l, r), _)) = pairs
            .into_iter()
            .fold(None, |best: Option<((&str, &str), usize)>, (p, c)| match best {
                Some((_, bc)) if bc >= c => best,
                _ => Some((p, c)),
            })
        else {
            break;
        };
        let (l, r) = (l.to_owned(), r.to_owned());
        for (syms, _) in &mut segmented {
            merge_in_place(syms, &l, &r);
        }
        merges.push((l, r));
    }
    BpeModel { merges, alphabet }
}

impl BpeModel {
    pub fn merges(&self) -> &[(String, String)] {
        &self.merges
    }

    pub fn alphabet(&self) -> &BTreeSet<char> {
        &self.alphabet
    }

    /// Segment one word into units, the last of which carries the
    /// end-of-word symbol (possibly as its own unit).
    fn segment_word(&self, word: &str, unk: &mut usize) -> Vec<String> {
        let mut syms: Vec<String> = word
            .chars()
            .map(|c| {
                if self.alphabet.contains(&c) {
                    c.to_string()
                } else {
                    *unk += 1;
                    UNK.to_owned()
                }
            })
            .collect();
        syms.push(END_OF_WORD.to_owned());
        for (l, r) in &self.merges {
            merge_in_place(&mut syms, l, r);
        }
        syms
    }

    /// Apply merges in learned order to every word of `sentence`.
    pub fn apply(&self, sentence: &Sentence) -> BpeOutput {
        let mut unk_count = 0;
        let mut cache: HashMap<&str, Vec<String>> = HashMap::new();
        let mut out = Vec::new();
        for word in sentence.iter() {
            let units = cache
                .entry(word)
                .or_insert_with(|| {
                    let mut u = 0;
                    let mut syms = self.segment_word(word, &mut u);
                    if syms.last().map(String::as_str) == Some(END_OF_WORD) {
                        syms.pop();
                    }
                    let n = syms.len();
                    for (i, s) in syms.iter_mut().enumerate() {
                        if let Some(stripped) = s.strip_suffix(END_OF_WORD) {
                            *s = stripped.to_owned();
                        }
                        if i + 1 < n {
                            s.push_str(CONTINUATION);
                        }
                    }
                    syms
                })
                .clone();
            unk_count += word.chars().filter(|c| !self.alphabet.contains(c)).count();
            out.extend(units);
        }
        BpeOutput {
            sentence: Sentence::new(out),
            unk_count,
        }
    }

    /// Inverse of [`BpeModel::apply`] for in-alphabet text.
    pub fn decode(&self, sentence: &Sentence) -> Sentence {
        let mut words = Vec::new();
        let mut current = String::new();
        for unit in sentence.iter() {
            match unit.strip_suffix(CONTINUATION) {
                Some(prefix) => current.push_str(prefix),
                None => {
                    current.push_str(unit);
                    words.push(std::mem::take(&mut current));
                }
            }
        }
        if !current.is_empty() {
            words.push(current);
        }
        Sentence::new(words)
    }

    /// Alphabet header followed by one `left<TAB>right` merge per line.
    pub fn to_text(&self) -> String {
        let mut out = format!("{ALPHABET_HEADER}\t{}\n", self.alphabet.iter().collect::<String>());
        for (l, r) in &self.merges {
            let _ = writeln!(out, "{l}\t{r}");
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut alphabet = BTreeSet::new();
        let mut merges = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let (l, r) = line.split_once('\t').ok_or_else(|| Error::Malformed {
                line: i + 1,
                reason: "expected left<TAB>right".into(),
            })?;
            if i == 0 && l == ALPHABET_HEADER {
                alphabet = r.chars().collect();
            } else {
                merges.push((l.to_owned(), r.to_owned()));
            }
        }
        if alphabet.is_empty() {
            // Without a header, recover the alphabet from the merge symbols.
            for (l, r) in &merges {
                let both = format!("{l}{r}").replace(END_OF_WORD, "");
                alphabet.extend(both.chars());
            }
        }
        Ok(BpeModel { merges, alphabet })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn corpus(text: &str) -> MonoCorpus {
        MonoCorpus::new("x", text.lines().map(Sentence::parse).collect())
    }

    fn pair(l: &str, r: &str) -> (String, String) {
        (l.to_owned(), r.to_owned())
    }

    #[test]
    fn single_candidate_merge() {
        let m = learn_bpe(&corpus("ab ab"), 1);
        assert_eq!(m.merges(), [pair("a", "b")]);
    }

    #[test]
    fn zero_merges_is_character_level() {
        let m = learn_bpe(&corpus("low lower"), 0);
        assert!(m.merges().is_empty());
        let out = m.apply(&Sentence::parse("low"));
        assert_eq!(out.sentence, Sentence::parse("l@@ o@@ w"));
    }

    #[test]
    fn low_lower_lowest_trace() {
        // Step 1: (l,o)=3 and (o,w)=3 tie; (l,o) is smaller.
        // Step 2: (lo,w)=3 is the unique maximum.
        // Step 3: (low,e)=2 beats every remaining pair (count 1).
        let m = learn_bpe(&corpus("low lower lowest"), 3);
        assert_eq!(m.merges(), [pair("l", "o"), pair("lo", "w"), pair("low", "e")]);
        let out = m.apply(&Sentence::parse("lowest low"));
        assert_eq!(out.sentence, Sentence::parse("lowe@@ s@@ t low"));
    }

    #[test]
    fn merged_word_is_single_unit() {
        let m = learn_bpe(&corpus("ab ab"), 1);
        assert_eq!(m.apply(&Sentence::parse("ab")).sentence, Sentence::parse("ab"));
    }

    #[test]
    fn unseen_character_maps_to_unk() {
        let m = learn_bpe(&corpus("ab ab"), 1);
        let out = m.apply(&Sentence::parse("a#"));
        assert_eq!(out.unk_count, 1);
        assert_eq!(out.sentence, Sentence::parse("a@@ <unk>"));
    }

    #[test]
    fn text_round_trip() {
        let m = learn_bpe(&corpus("low lower lowest\nnewer wider"), 6);
        assert_eq!(BpeModel::from_text(&m.to_text()).unwrap(), m);
    }

    proptest! {
        #[test]
        fn apply_then_decode_is_identity(
            train in prop::collection::vec("[a-e]{1,6}", 1..30),
            input in prop::collection::vec("[a-e]{1,8}", 0..10),
            merges in 0usize..20,
        ) {
            let c = MonoCorpus::new("x", vec![Sentence::new(train)]);
            let m = learn_bpe(&c, merges);
            let s = Sentence::new(input);
            let out = m.apply(&s);
            prop_assert_eq!(out.unk_count, s.iter().flat_map(str::chars)
                .filter(|ch| !m.alphabet().contains(ch)).count());
            if out.unk_count == 0 {
                prop_assert_eq!(m.decode(&out.sentence), s);
            }
            prop_assert_eq!(learn_bpe(&c, merges), m);
        }
    }
}
