//! Text to feature, end to end.

use serde::Serialize;

use crate::codec::{encode, path_for, GramPath, SymbolDictionary, SymbolSequence};
use crate::error::Result;
use crate::pairing::{compose_pair, PairTensor};
use crate::raster::{rasterize, PhoneticFeature, RasterConfig};
use crate::transcription::{transcribe, Lexicon, ScriptTag, TranscriptionResult};

/// Punctuation never reaches the tokenizer, so `X-SEED` reads as `XSEED`
/// and the boundary markers only ever come from framing.
pub fn strip_punctuation(text: &str) -> String {
    text.chars()
        .filter(|&c| {
            !(c.is_ascii_punctuation()
                || ('\u{2000}'..='\u{206F}').contains(&c)
                || matches!(c, '·' | '«' | '»' | '¡' | '¿'))
        })
        .collect()
}

/// Everything derived from one piece of text.
#[derive(Debug, Clone, Serialize)]
pub struct Featurized {
    pub transcription: TranscriptionResult,
    pub sequence: SymbolSequence,
    pub mapping: Vec<u8>,
    pub path: GramPath,
}

/// Bundles the tables and raster settings the pipeline needs.
#[derive(Debug, Clone, Default)]
pub struct Featurizer {
    pub dictionary: SymbolDictionary,
    pub lexicon: Lexicon,
    pub raster: RasterConfig<f32>,
}

impl Featurizer {
    pub fn new(dictionary: SymbolDictionary, lexicon: Lexicon, raster: RasterConfig<f32>) -> Self {
        Featurizer {
            dictionary,
            lexicon,
            raster,
        }
    }

    /// transcribe → strip punctuation → tokenize → 2-gram path.
    pub fn analyze(&self, text: &str, script: ScriptTag) -> Result<Featurized> {
        let transcription = transcribe(text, script, &self.lexicon);
        let cleaned = strip_punctuation(&transcription.phonetic_text);
        let (sequence, path) = path_for(&cleaned, &self.dictionary)?;
        let mapping = encode(&sequence, &self.dictionary)?;
        Ok(Featurized {
            transcription,
            sequence,
            mapping,
            path,
        })
    }

    pub fn feature(&self, text: &str, script: ScriptTag) -> Result<PhoneticFeature<f32>> {
        let analysis = self.analyze(text, script)?;
        let mut feature = rasterize(&analysis.path, &self.raster);
        feature.source = text.to_owned();
        Ok(feature)
    }

    pub fn pair(&self, a: (&str, ScriptTag), b: (&str, ScriptTag)) -> Result<PairTensor<f32>> {
        compose_pair(&self.feature(a.0, a.1)?, &self.feature(b.0, b.1)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn punctuation_is_dropped_but_ipa_marks_survive() {
        assert_eq!(strip_punctuation("X-SEED!"), "XSEED");
        assert_eq!(strip_punctuation("bɔ̃_ʃ"), "bɔ̃ʃ");
        assert_eq!(strip_punctuation("a–b"), "ab");
    }

    #[test]
    fn korean_and_english_adidas() {
        let f = Featurizer::default();
        let ko = f.analyze("아디다스", ScriptTag::Hangul).unwrap();
        assert_eq!(ko.sequence.framed_text(), "-adidaseu_");
        assert_eq!(ko.mapping, vec![16, 33, 69, 19, 69, 33, 79, 25, 46, 111]);
        let en = f.analyze("Adidas", ScriptTag::LatinEnglish).unwrap();
        assert_eq!(en.sequence.framed_text(), "-ədɪdəs_");
        assert_eq!(en.mapping, vec![16, 29, 69, 19, 69, 29, 79, 111]);
    }

    #[test]
    fn adidas_in_both_scripts_overlaps() {
        let f = Featurizer::default();
        let ko = f.feature("아디다스", ScriptTag::Hangul).unwrap();
        let en = f.feature("Adidas", ScriptTag::LatinEnglish).unwrap();
        let pair = compose_pair(&ko, &en).unwrap();
        let a: std::collections::BTreeSet<_> = ko.nonzero().into_iter().collect();
        let b: std::collections::BTreeSet<_> = en.nonzero().into_iter().collect();
        let both = a.intersection(&b).count();
        assert!(both > 0);
        assert_eq!(pair.overlap_count(), both);
    }

    #[test]
    fn hyphenated_mark_still_overlaps() {
        let f = Featurizer::default();
        let pair = f
            .pair(
                ("XCEED", ScriptTag::LatinEnglish),
                ("X-SEED", ScriptTag::LatinEnglish),
            )
            .unwrap();
        assert!(pair.overlap_count() > 0);
    }

    #[test]
    fn digits_are_unknown_symbols() {
        let f = Featurizer::default();
        assert!(matches!(
            f.analyze("7up", ScriptTag::RawRoman),
            Err(crate::Error::UnknownSymbol { position: 0, .. })
        ));
    }
}
