//! JSONL pair datasets.

use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::stratified_split;
use crate::pairing::{PairSample, Similarity};
use crate::pipeline::Featurizer;
use crate::transcription::ScriptTag;

/// One labelled pair of trademark texts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairRecord {
    pub id: String,
    #[serde(rename = "a")]
    pub text_a: String,
    #[serde(rename = "b")]
    pub text_b: String,
    pub script_a: ScriptTag,
    pub script_b: ScriptTag,
    pub label: u8,
}

impl PairRecord {
    pub fn similarity(&self) -> Similarity {
        if self.label == 1 {
            Similarity::Similar
        } else {
            Similarity::Dissimilar
        }
    }

    fn validate(&self) -> std::result::Result<(), String> {
        if self.text_a.trim().is_empty() || self.text_b.trim().is_empty() {
            return Err("empty text".into());
        }
        if Similarity::from_label(self.label).is_none() {
            return Err(format!("label must be 0 or 1, got {}", self.label));
        }
        Ok(())
    }
}

/// Parses JSONL text. Blank lines are skipped; line numbers are 1-based.
pub fn parse_jsonl(text: &str) -> Result<Vec<PairRecord>> {
    read_jsonl(text.as_bytes())
}

pub fn read_jsonl<R: BufRead>(reader: R) -> Result<Vec<PairRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Dataset {
            line: line_no,
            reason: e.to_string(),
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: PairRecord = serde_json::from_str(&line).map_err(|e| Error::Dataset {
            line: line_no,
            reason: e.to_string(),
        })?;
        record.validate().map_err(|reason| Error::Dataset {
            line: line_no,
            reason,
        })?;
        records.push(record);
    }
    Ok(records)
}

pub fn load_jsonl(path: &Path) -> Result<Vec<PairRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_jsonl(BufReader::new(file))
}

pub fn write_jsonl<W: Write>(records: &[PairRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io("<output>", e))?;
    }
    Ok(())
}

/// The same 9:1 stratified split `nn::train` makes for this seed.
pub fn split_records(records: &[PairRecord], seed: u64) -> (Vec<usize>, Vec<usize>) {
    let labels: Vec<usize> = records.iter().map(|r| r.similarity().label()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    stratified_split(&labels, 0.1, &mut rng)
}

/// Featurizes every record; failures carry the record id.
pub fn featurize_records(
    records: &[PairRecord],
    featurizer: &Featurizer,
) -> Result<Vec<PairSample<f32>>> {
    records
        .iter()
        .map(|r| {
            let pair = featurizer
                .pair((&r.text_a, r.script_a), (&r.text_b, r.script_b))
                .map_err(|e| Error::Record {
                    id: r.id.clone(),
                    source: Box::new(e),
                })?;
            Ok(PairSample {
                pair,
                label: r.similarity(),
                id: r.id.clone(),
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let text = r#"{"id":"p1","a":"아디다스","b":"Adidas","script_a":"hangul","script_b":"en","label":1}

{"id":"p2","a":"kola","b":"nike","script_a":"roman","script_b":"en","label":0}
"#;
        let records = parse_jsonl(text).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].script_a, ScriptTag::Hangul);
        let mut out = Vec::new();
        write_jsonl(&records, &mut out).unwrap();
        assert_eq!(
            parse_jsonl(std::str::from_utf8(&out).unwrap()).unwrap(),
            records
        );
    }

    #[test]
    fn malformed_lines_report_line_numbers() {
        let missing_label = "{\"id\":\"p1\",\"a\":\"x\",\"b\":\"y\",\"script_a\":\"ipa\",\"script_b\":\"ipa\",\"label\":0}\n\
                             {\"id\":\"p2\",\"a\":\"x\",\"b\":\"y\",\"script_a\":\"ipa\",\"script_b\":\"ipa\"}\n";
        match parse_jsonl(missing_label) {
            Err(Error::Dataset { line, reason }) => {
                assert_eq!(line, 2);
                assert!(reason.contains("label"), "{reason}");
            }
            other => panic!("{other:?}"),
        }
        let bad_label = r#"{"id":"p","a":"x","b":"y","script_a":"ipa","script_b":"ipa","label":2}"#;
        assert!(matches!(
            parse_jsonl(bad_label),
            Err(Error::Dataset { line: 1, .. })
        ));
        let empty = r#"{"id":"p","a":"","b":"y","script_a":"ipa","script_b":"ipa","label":1}"#;
        assert!(matches!(
            parse_jsonl(empty),
            Err(Error::Dataset { line: 1, .. })
        ));
        assert!(matches!(
            parse_jsonl("{nope"),
            Err(Error::Dataset { line: 1, .. })
        ));
    }

    #[test]
    fn featurize_errors_name_the_record() {
        let records = parse_jsonl(
            r#"{"id":"bad-7","a":"ab7","b":"ab","script_a":"roman","script_b":"roman","label":1}"#,
        )
        .unwrap();
        let err = featurize_records(&records, &Featurizer::default()).unwrap_err();
        match &err {
            Error::Record { id, .. } => assert_eq!(id, "bad-7"),
            other => panic!("{other:?}"),
        }
        assert!(matches!(
            err.root(),
            Error::UnknownSymbol { position: 2, .. }
        ));
    }
}
