use super::{push_span, ScriptTag, TranscriptionResult};

const SYLLABLE_BASE: u32 = 0xAC00;
const SYLLABLE_LAST: u32 = 0xD7A3;
const MEDIAL_COUNT: u32 = 21;
const FINAL_COUNT: u32 = 28;

const COMPAT_FIRST: u32 = 0x3131;
const COMPAT_LAST: u32 = 0x3163;

// Revised-Romanization letters, applied per jamo with no sound-change rules.
const INITIALS: [&str; 19] = [
    "g", "kk", "n", "d", "tt", "r", "m", "b", "pp", "s", "ss", "", "j", "jj", "ch", "k", "t", "p",
    "h",
];

const MEDIALS: [&str; 21] = [
    "a", "ae", "ya", "yae", "eo", "e", "yeo", "ye", "o", "wa", "wae", "oe", "yo", "u", "wo", "we",
    "wi", "yu", "eu", "ui", "i",
];

const FINALS: [&str; 28] = [
    "", "g", "kk", "gs", "n", "nj", "nh", "d", "l", "lg", "lm", "lb", "ls", "lt", "lp", "lh", "m",
    "b", "bs", "s", "ss", "ng", "j", "ch", "k", "t", "p", "h",
];

// Standalone compatibility jamo, U+3131..=U+3163.
const COMPAT: [&str; 51] = [
    "g", "kk", "gs", "n", "nj", "nh", "d", "tt", "r", "lg", "lm", "lb", "ls", "lt", "lp", "lh",
    "m", "b", "pp", "bs", "s", "ss", "ng", "j", "jj", "ch", "k", "t", "p", "h", // consonants
    "a", "ae", "ya", "yae", "eo", "e", "yeo", "ye", "o", "wa", "wae", "oe", "yo", "u", "wo", "we",
    "wi", "yu", "eu", "ui", "i",
];

fn syllable_letters(code: u32, out: &mut String) {
    let offset = code - SYLLABLE_BASE;
    let initial = offset / (MEDIAL_COUNT * FINAL_COUNT);
    let medial = (offset % (MEDIAL_COUNT * FINAL_COUNT)) / FINAL_COUNT;
    let fin = offset % FINAL_COUNT;
    out.push_str(INITIALS[initial as usize]);
    out.push_str(MEDIALS[medial as usize]);
    out.push_str(FINALS[fin as usize]);
}

/// Romanizes Hangul syllable blocks jamo by jamo.
///
/// ASCII passes through lowercased. Any other codepoint passes through
/// lowercased and is reported in `oov_spans`.
pub fn romanize_hangul(text: &str) -> TranscriptionResult {
    let mut phonetic = String::with_capacity(text.len() * 2);
    let mut oov = Vec::new();
    for (idx, ch) in text.chars().enumerate() {
        let code = ch as u32;
        match code {
            SYLLABLE_BASE..=SYLLABLE_LAST => syllable_letters(code, &mut phonetic),
            COMPAT_FIRST..=COMPAT_LAST => {
                phonetic.push_str(COMPAT[(code - COMPAT_FIRST) as usize]);
            }
            _ if ch.is_ascii() => phonetic.push(ch.to_ascii_lowercase()),
            _ => {
                phonetic.extend(ch.to_lowercase());
                push_span(&mut oov, idx, idx + 1);
            }
        }
    }
    TranscriptionResult {
        phonetic_text: phonetic,
        source_text: text.to_owned(),
        script: ScriptTag::Hangul,
        oov_spans: oov,
    }
}
