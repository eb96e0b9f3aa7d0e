//! Phonetic symbol dictionary, tokenization and 2-gram coordinates.

use std::collections::HashMap;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

const DEFAULT_DICTIONARY: &str = include_str!("../data/dictionary.tsv");

pub const START_MARKER: &str = "-";
pub const END_MARKER: &str = "_";

/// Largest coordinate value a symbol may take (grid side is 128).
pub const MAX_VALUE: u8 = 127;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SymbolGroup {
    pub name: String,
    pub members: Vec<String>,
}

/// Maps phonetic symbols to grid coordinates.
#[derive(Debug, Clone)]
pub struct SymbolDictionary {
    entries: Vec<(String, u8)>,
    aliases: Vec<(String, String)>,
    groups: Vec<SymbolGroup>,
    // Symbol or alias text -> canonical entry index.
    index: HashMap<String, usize>,
    max_symbol_chars: usize,
}

impl Default for SymbolDictionary {
    fn default() -> Self {
        Self::parse(DEFAULT_DICTIONARY).expect("embedded dictionary is well formed")
    }
}

/// The embedded dictionary.
pub fn default_dictionary() -> SymbolDictionary {
    SymbolDictionary::default()
}

impl SymbolDictionary {
    /// Parses the dictionary file format:
    ///
    /// ```text
    /// #group vowels
    /// a<TAB>33
    /// alias<TAB>ɪ→i
    /// ```
    ///
    /// Other lines starting with `#` are comments.
    pub fn parse(text: &str) -> Result<Self> {
        let mut entries: Vec<(String, u8)> = Vec::new();
        let mut aliases = Vec::new();
        let mut groups: Vec<SymbolGroup> = Vec::new();
        let bad = |line: usize, reason: String| Error::Dictionary { line, reason };

        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            if let Some(name) = line.strip_prefix("#group") {
                let name = name.trim();
                if name.is_empty() {
                    return Err(bad(line_no, "group header without a name".into()));
                }
                groups.push(SymbolGroup {
                    name: name.to_owned(),
                    members: Vec::new(),
                });
                continue;
            }
            if line.starts_with('#') {
                continue;
            }
            let (key, value) = line
                .split_once('\t')
                .ok_or_else(|| bad(line_no, "expected symbol<TAB>value".into()))?;
            if key == "alias" {
                let (from, to) = value
                    .split_once('→')
                    .ok_or_else(|| bad(line_no, "alias must read from→to".into()))?;
                aliases.push((from.trim().to_owned(), to.trim().to_owned()));
                continue;
            }
            let symbol = key.trim();
            if symbol.is_empty() || symbol.chars().any(char::is_whitespace) {
                return Err(bad(line_no, format!("invalid symbol {key:?}")));
            }
            let value: u8 = value
                .trim()
                .parse()
                .ok()
                .filter(|v| *v <= MAX_VALUE)
                .ok_or_else(|| bad(line_no, format!("value {value:?} not in 0..=127")))?;
            if entries.iter().any(|(s, _)| s == symbol) {
                return Err(bad(line_no, format!("duplicate symbol {symbol:?}")));
            }
            entries.push((symbol.to_owned(), value));
            if let Some(group) = groups.last_mut() {
                group.members.push(symbol.to_owned());
            }
        }

        let mut index: HashMap<String, usize> = entries
            .iter()
            .enumerate()
            .map(|(i, (s, _))| (s.clone(), i))
            .collect();
        for (from, to) in &aliases {
            let target = *index
                .get(to)
                .ok_or_else(|| bad(0, format!("alias target {to:?} is not a symbol")))?;
            if index.contains_key(from) {
                return Err(bad(0, format!("alias {from:?} shadows a symbol")));
            }
            index.insert(from.clone(), target);
        }
        for marker in [START_MARKER, END_MARKER] {
            if !index.contains_key(marker) {
                return Err(bad(0, format!("missing boundary marker {marker:?}")));
            }
        }
        let max_symbol_chars = index.keys().map(|k| k.chars().count()).max().unwrap_or(1);
        Ok(SymbolDictionary {
            entries,
            aliases,
            groups,
            index,
            max_symbol_chars,
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    /// Value of a symbol, resolving aliases.
    pub fn lookup(&self, symbol: &str) -> Option<u8> {
        self.index.get(symbol).map(|&i| self.entries[i].1)
    }

    /// Canonical (non-alias) spelling of a symbol.
    pub fn canonical<'a>(&'a self, symbol: &str) -> Option<&'a str> {
        self.index.get(symbol).map(|&i| self.entries[i].0.as_str())
    }

    pub fn entries(&self) -> &[(String, u8)] {
        &self.entries
    }

    pub fn aliases(&self) -> &[(String, String)] {
        &self.aliases
    }

    pub fn groups(&self) -> &[SymbolGroup] {
        &self.groups
    }

    /// Name of the group a symbol (or alias) belongs to.
    pub fn group_of(&self, symbol: &str) -> Option<&str> {
        let canonical = self.canonical(symbol)?;
        self.groups
            .iter()
            .find(|g| g.members.iter().any(|m| m == canonical))
            .map(|g| g.name.as_str())
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Phonetic symbols of one word, framed by the start and end markers.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SymbolSequence {
    symbols: Vec<String>,
}

impl SymbolSequence {
    /// Frames `body` with the boundary markers. Symbols are not checked
    /// against any dictionary.
    pub fn from_body<I, S>(body: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut symbols = vec![START_MARKER.to_owned()];
        symbols.extend(body.into_iter().map(Into::into));
        symbols.push(END_MARKER.to_owned());
        SymbolSequence { symbols }
    }

    pub fn symbols(&self) -> &[String] {
        &self.symbols
    }

    /// Symbols between the markers.
    pub fn body(&self) -> &[String] {
        &self.symbols[1..self.symbols.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Same body in reverse order, markers re-applied.
    pub fn reversed(&self) -> Self {
        Self::from_body(self.body().iter().rev().cloned())
    }

    /// Concatenated symbols, e.g. `-adidaseu_`.
    pub fn framed_text(&self) -> String {
        self.symbols.concat()
    }
}

/// Splits phonetic text into dictionary symbols by greedy longest match.
///
/// Symbols keep their input spelling (aliases are not rewritten).
/// Whitespace is skipped. `UnknownSymbol` carries the char index into
/// `text`.
pub fn tokenize(text: &str, dict: &SymbolDictionary) -> Result<SymbolSequence> {
    if text.trim().is_empty() {
        return Err(Error::EmptyInput);
    }
    let chars: Vec<char> = text.chars().collect();
    let mut body = Vec::new();
    let mut i = 0;
    let mut candidate = String::new();
    while i < chars.len() {
        if chars[i].is_whitespace() {
            i += 1;
            continue;
        }
        let longest = dict.max_symbol_chars.min(chars.len() - i);
        let len = (1..=longest)
            .rev()
            .find(|&len| {
                candidate.clear();
                candidate.extend(&chars[i..i + len]);
                dict.lookup(&candidate).is_some()
            })
            .ok_or_else(|| Error::UnknownSymbol {
                position: i,
                found: chars[i].to_string(),
            })?;
        body.push(candidate.clone());
        i += len;
    }
    Ok(SymbolSequence::from_body(body))
}

/// Dictionary value of every symbol, in order.
pub fn encode(seq: &SymbolSequence, dict: &SymbolDictionary) -> Result<Vec<u8>> {
    seq.symbols()
        .iter()
        .enumerate()
        .map(|(position, s)| {
            dict.lookup(s).ok_or_else(|| Error::UnknownSymbol {
                position,
                found: s.clone(),
            })
        })
        .collect()
}

/// One consecutive symbol pair.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Gram2 {
    pub first: String,
    pub second: String,
    pub index: usize,
}

/// All overlapping consecutive pairs: `len - 1` of them.
pub fn segment_2grams(seq: &SymbolSequence) -> Vec<Gram2> {
    seq.symbols()
        .windows(2)
        .enumerate()
        .map(|(index, w)| Gram2 {
            first: w[0].clone(),
            second: w[1].clone(),
            index,
        })
        .collect()
}

/// Grid coordinate of one 2-gram: x from the first symbol, y from the
/// second.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct GridPoint {
    pub x: u8,
    pub y: u8,
}

impl GridPoint {
    pub fn new(x: u8, y: u8) -> Self {
        GridPoint { x, y }
    }

    pub fn transposed(self) -> Self {
        GridPoint {
            x: self.y,
            y: self.x,
        }
    }
}

/// Points in pronunciation order.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize)]
pub struct GramPath {
    pub points: Vec<GridPoint>,
}

impl GramPath {
    pub fn new(points: Vec<GridPoint>) -> Self {
        GramPath { points }
    }

    pub fn from_pairs(pairs: &[(u8, u8)]) -> Self {
        GramPath {
            points: pairs.iter().map(|&(x, y)| GridPoint::new(x, y)).collect(),
        }
    }

    pub fn as_pairs(&self) -> Vec<(u8, u8)> {
        self.points.iter().map(|p| (p.x, p.y)).collect()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn reversed(&self) -> Self {
        GramPath {
            points: self.points.iter().rev().copied().collect(),
        }
    }
}

pub fn gram_coordinates(grams: &[Gram2], dict: &SymbolDictionary) -> Result<GramPath> {
    let value = |s: &str, position: usize| {
        dict.lookup(s).ok_or_else(|| Error::UnknownSymbol {
            position,
            found: s.to_owned(),
        })
    };
    let points = grams
        .iter()
        .map(|g| {
            Ok(GridPoint::new(
                value(&g.first, g.index)?,
                value(&g.second, g.index + 1)?,
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(GramPath { points })
}

/// tokenize → segment → coordinates.
pub fn path_for(text: &str, dict: &SymbolDictionary) -> Result<(SymbolSequence, GramPath)> {
    let seq = tokenize(text, dict)?;
    let path = gram_coordinates(&segment_2grams(&seq), dict)?;
    Ok((seq, path))
}
