//! Raw trademark text to phonetic text.
//!
//! Korean goes through a per-jamo romanizer, English through a
//! lexicon-first grapheme-to-phoneme converter. Both are total: unknown
//! input is passed through or handled by fallback rules and reported in
//! `oov_spans`.

mod english;
mod hangul;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use english::{english_to_ipa, Lexicon};
pub use hangul::romanize_hangul;

/// Which converter applies to a piece of text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ScriptTag {
    #[serde(rename = "hangul")]
    Hangul,
    #[serde(rename = "en")]
    LatinEnglish,
    /// Already phonetic; used as is.
    #[serde(rename = "ipa")]
    RawIpa,
    /// Already romanized; lowercased only.
    #[serde(rename = "roman")]
    RawRoman,
}

impl ScriptTag {
    pub fn as_str(self) -> &'static str {
        match self {
            ScriptTag::Hangul => "hangul",
            ScriptTag::LatinEnglish => "en",
            ScriptTag::RawIpa => "ipa",
            ScriptTag::RawRoman => "roman",
        }
    }
}

impl fmt::Display for ScriptTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ScriptTag {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "hangul" | "ko" => Ok(ScriptTag::Hangul),
            "en" | "english" => Ok(ScriptTag::LatinEnglish),
            "ipa" => Ok(ScriptTag::RawIpa),
            "roman" => Ok(ScriptTag::RawRoman),
            other => Err(format!(
                "unknown script {other:?} (expected hangul, en, ipa or roman)"
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TranscriptionResult {
    pub phonetic_text: String,
    pub source_text: String,
    pub script: ScriptTag,
    /// Half-open char ranges of `source_text` that went through fallback
    /// handling. Sorted and disjoint.
    pub oov_spans: Vec<(usize, usize)>,
}

/// Dispatches on `script`. Raw scripts bypass conversion.
pub fn transcribe(text: &str, script: ScriptTag, lexicon: &Lexicon) -> TranscriptionResult {
    match script {
        ScriptTag::Hangul => romanize_hangul(text),
        ScriptTag::LatinEnglish => english_to_ipa(text, lexicon),
        ScriptTag::RawIpa => TranscriptionResult {
            phonetic_text: text.to_owned(),
            source_text: text.to_owned(),
            script,
            oov_spans: Vec::new(),
        },
        ScriptTag::RawRoman => TranscriptionResult {
            phonetic_text: text.to_lowercase(),
            source_text: text.to_owned(),
            script,
            oov_spans: Vec::new(),
        },
    }
}

/// Appends `[start, end)`, merging with the previous span when contiguous.
pub(crate) fn push_span(spans: &mut Vec<(usize, usize)>, start: usize, end: usize) {
    if let Some(last) = spans.last_mut() {
        if last.1 == start {
            last.1 = end;
            return;
        }
    }
    spans.push((start, end));
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn script_tags_parse_their_wire_names() {
        for tag in [
            ScriptTag::Hangul,
            ScriptTag::LatinEnglish,
            ScriptTag::RawIpa,
            ScriptTag::RawRoman,
        ] {
            assert_eq!(tag.as_str().parse::<ScriptTag>().unwrap(), tag);
            let json = serde_json::to_string(&tag).unwrap();
            assert_eq!(json, format!("\"{}\"", tag.as_str()));
        }
        assert!("klingon".parse::<ScriptTag>().is_err());
    }

    #[test]
    fn raw_scripts_bypass_conversion() {
        let lex = Lexicon::default();
        let r = transcribe("ədɪdəs", ScriptTag::RawIpa, &lex);
        assert_eq!(r.phonetic_text, "ədɪdəs");
        let r = transcribe("XCEED", ScriptTag::RawRoman, &lex);
        assert_eq!(r.phonetic_text, "xceed");
        assert!(r.oov_spans.is_empty());
    }
}
