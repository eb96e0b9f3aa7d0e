//! Seeded synthetic pair corpus built from the dictionary's symbol groups.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::dataset::PairRecord;
use crate::codec::{tokenize, SymbolDictionary};
use crate::transcription::ScriptTag;

/// Dissimilar pairs per similar pair in the reference corpus (34020 / 12553).
pub const DISSIMILAR_RATIO: f64 = 34_020.0 / 12_553.0;

/// Minimum normalized edit distance between the two names of a
/// dissimilar pair.
pub const DISSIMILAR_FLOOR: f64 = 0.5;

pub fn default_dissimilar_count(n_similar: usize) -> usize {
    (n_similar as f64 * DISSIMILAR_RATIO).round() as usize
}

/// Plain Levenshtein distance over symbols.
pub fn edit_distance<S: PartialEq>(a: &[S], b: &[S]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// Edit distance divided by the longer length.
pub fn normalized_edit_distance<S: PartialEq>(a: &[S], b: &[S]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        0.0
    } else {
        edit_distance(a, b) as f64 / longest as f64
    }
}

struct Inventory {
    vowels: Vec<String>,
    consonants: Vec<String>,
    // Group of every usable symbol, as indices into `groups`.
    groups: Vec<Vec<String>>,
}

impl Inventory {
    fn new(dict: &SymbolDictionary) -> Self {
        let mut inv = Inventory {
            vowels: Vec::new(),
            consonants: Vec::new(),
            groups: Vec::new(),
        };
        for g in dict.groups() {
            if g.name == "start" || g.name == "end" {
                continue;
            }
            if g.name.contains("vowel") {
                inv.vowels.extend(g.members.iter().cloned());
            } else {
                inv.consonants.extend(g.members.iter().cloned());
            }
            inv.groups.push(g.members.clone());
        }
        inv
    }

    fn group(&self, symbol: &str) -> Option<&[String]> {
        self.groups
            .iter()
            .find(|g| g.iter().any(|m| m == symbol))
            .map(Vec::as_slice)
    }

    fn is_vowel(&self, symbol: &str) -> bool {
        self.vowels.iter().any(|v| v == symbol)
    }

    fn name(&self, rng: &mut ChaCha8Rng) -> Vec<String> {
        let syllables = rng.random_range(2..=3);
        let mut out = Vec::new();
        for _ in 0..syllables {
            if rng.random_bool(0.8) {
                out.push(self.consonants.choose(rng).unwrap().clone());
            }
            out.push(self.vowels.choose(rng).unwrap().clone());
            if rng.random_bool(0.3) {
                out.push(self.consonants.choose(rng).unwrap().clone());
            }
        }
        out
    }

    /// One phonetically close edit. `None` when the chosen edit does not
    /// apply to this name.
    fn perturb(&self, name: &[String], rng: &mut ChaCha8Rng) -> Option<Vec<String>> {
        let mut out = name.to_vec();
        let vowel_positions: Vec<usize> =
            (0..out.len()).filter(|&i| self.is_vowel(&out[i])).collect();
        match rng.random_range(0..5) {
            0 => {
                let i = rng.random_range(0..out.len());
                let group = self.group(&out[i])?;
                let others: Vec<&String> = group.iter().filter(|m| **m != out[i]).collect();
                out[i] = (*others.choose(rng)?).clone();
            }
            1 => {
                if out.len() <= 3 {
                    return None;
                }
                out.remove(*vowel_positions.choose(rng)?);
            }
            2 => {
                let i = *vowel_positions.choose(rng)?;
                out.insert(i, out[i].clone());
            }
            3 => out.insert(0, out[0].clone()),
            _ => out.push(out[out.len() - 1].clone()),
        }
        Some(out)
    }
}

/// Symbols survive a text round trip only if greedy tokenization splits the
/// concatenation back the same way.
fn round_trips(symbols: &[String], dict: &SymbolDictionary) -> bool {
    tokenize(&symbols.concat(), dict).is_ok_and(|seq| seq.body() == symbols)
}

fn record(id: usize, a: &[String], b: &[String], label: u8) -> PairRecord {
    PairRecord {
        id: format!("syn-{id:06}"),
        text_a: a.concat(),
        text_b: b.concat(),
        script_a: ScriptTag::RawIpa,
        script_b: ScriptTag::RawIpa,
        label,
    }
}

/// Similar pairs are a random name and a copy with one or two close edits
/// (same-group substitution, vowel drop or doubling, first or last symbol
/// repeated). Dissimilar pairs are two independent names at least
/// [`DISSIMILAR_FLOOR`] apart. Records come out shuffled; the result is a
/// function of the arguments alone.
pub fn generate_synthetic(
    n_similar: usize,
    n_dissimilar: usize,
    seed: u64,
    dict: &SymbolDictionary,
) -> Vec<PairRecord> {
    let inv = Inventory::new(dict);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let draw_name = |rng: &mut ChaCha8Rng| loop {
        let name = inv.name(rng);
        if round_trips(&name, dict) {
            return name;
        }
    };

    let mut pairs: Vec<(Vec<String>, Vec<String>, u8)> =
        Vec::with_capacity(n_similar + n_dissimilar);
    while pairs.len() < n_similar {
        let base = draw_name(&mut rng);
        let mut edited = base.clone();
        let edits = rng.random_range(1..=2);
        let mut applied = 0;
        while applied < edits {
            if let Some(next) = inv.perturb(&edited, &mut rng) {
                edited = next;
                applied += 1;
            }
        }
        if !round_trips(&edited, dict) {
            continue;
        }
        if rng.random_bool(0.5) {
            pairs.push((base, edited, 1));
        } else {
            pairs.push((edited, base, 1));
        }
    }
    while pairs.len() < n_similar + n_dissimilar {
        let a = draw_name(&mut rng);
        let b = draw_name(&mut rng);
        if normalized_edit_distance(&a, &b) >= DISSIMILAR_FLOOR {
            pairs.push((a, b, 0));
        }
    }
    pairs.shuffle(&mut rng);
    pairs
        .iter()
        .enumerate()
        .map(|(i, (a, b, label))| record(i + 1, a, b, *label))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::default_dictionary;

    /// Edit distance where a substitution is only allowed inside one symbol
    /// group; cross-group replacements must be spelled as delete + insert.
    fn grouped_edit_distance(a: &[String], b: &[String], dict: &SymbolDictionary) -> usize {
        let same_group = |x: &String, y: &String| match (dict.group_of(x), dict.group_of(y)) {
            (Some(g), Some(h)) => g == h,
            _ => false,
        };
        let mut d = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in d.iter_mut().enumerate() {
            row[0] = i;
        }
        for (j, cell) in d[0].iter_mut().enumerate() {
            *cell = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let mut best = d[i - 1][j].min(d[i][j - 1]) + 1;
                if a[i - 1] == b[j - 1] {
                    best = best.min(d[i - 1][j - 1]);
                } else if same_group(&a[i - 1], &b[j - 1]) {
                    best = best.min(d[i - 1][j - 1] + 1);
                }
                d[i][j] = best;
            }
        }
        d[a.len()][b.len()]
    }

    fn symbols(text: &str, dict: &SymbolDictionary) -> Vec<String> {
        tokenize(text, dict).unwrap().body().to_vec()
    }

    #[test]
    fn edit_distance_basics() {
        let s = |t: &str| t.chars().collect::<Vec<_>>();
        assert_eq!(edit_distance(&s("kitten"), &s("sitting")), 3);
        assert_eq!(edit_distance(&s(""), &s("abc")), 3);
        assert_eq!(normalized_edit_distance(&s("ab"), &s("ab")), 0.0);
    }

    #[test]
    fn deterministic_and_counted() {
        let dict = default_dictionary();
        let a = generate_synthetic(10, 27, 7, &dict);
        assert_eq!(a, generate_synthetic(10, 27, 7, &dict));
        assert_ne!(a, generate_synthetic(10, 27, 8, &dict));
        assert_eq!(a.len(), 37);
        assert_eq!(a.iter().filter(|r| r.label == 1).count(), 10);
        assert_eq!(default_dissimilar_count(1000), 2710);
    }

    #[test]
    fn similar_pairs_are_close_edits_and_dissimilar_pairs_are_far() {
        let dict = default_dictionary();
        for r in generate_synthetic(300, 300, 11, &dict) {
            let a = symbols(&r.text_a, &dict);
            let b = symbols(&r.text_b, &dict);
            if r.label == 1 {
                assert!(
                    grouped_edit_distance(&a, &b, &dict) <= 2,
                    "{} / {}",
                    r.text_a,
                    r.text_b
                );
            } else {
                assert!(
                    normalized_edit_distance(&a, &b) >= DISSIMILAR_FLOOR,
                    "{} / {}",
                    r.text_a,
                    r.text_b
                );
            }
        }
    }
}
