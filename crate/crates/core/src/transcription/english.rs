use std::collections::HashMap;
use std::path::Path;

use super::{push_span, ScriptTag, TranscriptionResult};
use crate::error::{Error, Result};

const BUNDLED_LEXICON: &str = include_str!("../../data/lexicon.tsv");

/// Headword to IPA table. Headwords are stored lowercased.
#[derive(Debug, Clone)]
pub struct Lexicon {
    entries: HashMap<String, String>,
}

impl Default for Lexicon {
    /// The bundled lexicon.
    fn default() -> Self {
        Self::parse(BUNDLED_LEXICON).expect("bundled lexicon is well formed")
    }
}

impl Lexicon {
    pub fn empty() -> Self {
        Lexicon {
            entries: HashMap::new(),
        }
    }

    /// Parses `headword<TAB>ipa` lines. Blank lines and `#` comments are
    /// skipped; a later duplicate headword replaces an earlier one.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = HashMap::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (word, ipa) = line.split_once('\t').ok_or_else(|| Error::Lexicon {
                line: idx + 1,
                reason: "expected headword<TAB>ipa".into(),
            })?;
            let (word, ipa) = (word.trim(), ipa.trim());
            if word.is_empty() || ipa.is_empty() {
                return Err(Error::Lexicon {
                    line: idx + 1,
                    reason: "empty headword or pronunciation".into(),
                });
            }
            entries.insert(word.to_lowercase(), ipa.to_owned());
        }
        Ok(Lexicon { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn lookup(&self, word: &str) -> Option<&str> {
        self.entries.get(&word.to_lowercase()).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Converts English text to IPA, word by word.
///
/// Words are maximal runs of ASCII letters (apostrophes inside a word are
/// dropped). Anything else is copied through unchanged. Words missing from
/// the lexicon go through [`letters_to_sounds`] and their char range is
/// recorded in `oov_spans`.
pub fn english_to_ipa(text: &str, lexicon: &Lexicon) -> TranscriptionResult {
    let chars: Vec<char> = text.chars().collect();
    let mut out = String::with_capacity(text.len() * 2);
    let mut oov = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].is_ascii_alphabetic() {
            out.push(chars[i]);
            i += 1;
            continue;
        }
        let start = i;
        while i < chars.len()
            && (chars[i].is_ascii_alphabetic()
                || (chars[i] == '\'' && chars.get(i + 1).is_some_and(char::is_ascii_alphabetic)))
        {
            i += 1;
        }
        let word: String = chars[start..i]
            .iter()
            .filter(|c| c.is_ascii_alphabetic())
            .map(|c| c.to_ascii_lowercase())
            .collect();
        match lexicon.lookup(&word) {
            Some(ipa) => out.push_str(ipa),
            None => {
                out.push_str(&letters_to_sounds(&word));
                push_span(&mut oov, start, i);
            }
        }
    }
    TranscriptionResult {
        phonetic_text: out,
        source_text: text.to_owned(),
        script: ScriptTag::LatinEnglish,
        oov_spans: oov,
    }
}

fn is_front_vowel(c: Option<&u8>) -> bool {
    matches!(c, Some(b'e' | b'i' | b'y'))
}

// Multi-letter spellings, tried in order before single letters.
const DIGRAPHS: &[(&str, &str)] = &[
    ("tch", "tʃ"),
    ("sch", "sk"),
    ("ch", "tʃ"),
    ("sh", "ʃ"),
    ("th", "θ"),
    ("ph", "f"),
    ("gh", "g"),
    ("ck", "k"),
    ("ng", "ŋ"),
    ("qu", "kw"),
    ("wh", "w"),
    ("ee", "i"),
    ("ea", "i"),
    ("ie", "i"),
    ("oo", "u"),
    ("ou", "aʊ"),
    ("ow", "oʊ"),
    ("oa", "oʊ"),
    ("ai", "eɪ"),
    ("ay", "eɪ"),
    ("ei", "eɪ"),
    ("oi", "ɔɪ"),
    ("oy", "ɔɪ"),
    ("au", "ɔ"),
    ("aw", "ɔ"),
    ("ue", "u"),
];

/// Deterministic letter-to-sound rules for words outside the lexicon.
///
/// Expects a lowercase ASCII word. Output uses only symbols from the
/// default phonetic dictionary (or its aliases).
pub fn letters_to_sounds(word: &str) -> String {
    let w = word.as_bytes();
    let mut out = String::with_capacity(w.len() * 2);
    let mut i = 0;
    'scan: while i < w.len() {
        // Doubled consonant letters sound once.
        if i > 0 && w[i] == w[i - 1] && !b"aeiou".contains(&w[i]) {
            i += 1;
            continue;
        }
        for (spelling, sound) in DIGRAPHS {
            if w[i..].starts_with(spelling.as_bytes()) {
                out.push_str(sound);
                i += spelling.len();
                continue 'scan;
            }
        }
        let next = w.get(i + 1);
        let sound = match w[i] {
            b'c' if is_front_vowel(next) => "s",
            b'c' => "k",
            b'g' if is_front_vowel(next) => "dʒ",
            b'x' if i == 0 => "z",
            b'x' => "ks",
            b'y' if i == 0 => "j",
            b'y' => "i",
            b'e' if i + 1 == w.len() && w.len() > 2 => "",
            b'a' => "æ",
            b'e' => "ɛ",
            b'i' => "ɪ",
            b'o' => "ɑ",
            b'u' => "ʌ",
            b'j' => "dʒ",
            b'q' => "k",
            other => {
                out.push(other as char);
                i += 1;
                continue;
            }
        };
        out.push_str(sound);
        i += 1;
    }
    out
}
