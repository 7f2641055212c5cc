//! Language identification.
//!
//! Text written in a script used by a single language (or a small family that
//! a few marker letters separate) is decided by script. Latin-script text is
//! classified by a multinomial naive Bayes model over character 1..=4-grams of
//! space-padded words, trained on bundled per-language profile text.

use std::collections::{HashMap, HashSet};

use super::{DetectedLanguage, LanguageDetector, ProviderError};

const MAX_N: usize = 4;
/// Additive smoothing for n-grams unseen in a language's training text.
const SMOOTHING: f64 = 0.5;

const TRAINING: &[(&str, &str)] = &[
    ("en", include_str!("../../profiles/en.txt")),
    ("de", include_str!("../../profiles/de.txt")),
    ("fr", include_str!("../../profiles/fr.txt")),
    ("es", include_str!("../../profiles/es.txt")),
    ("it", include_str!("../../profiles/it.txt")),
    ("pt", include_str!("../../profiles/pt.txt")),
    ("nl", include_str!("../../profiles/nl.txt")),
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Script {
    Latin,
    Han,
    Kana,
    Hangul,
    Greek,
    Cyrillic,
    Arabic,
    Hebrew,
    Thai,
    Devanagari,
    Other,
}

fn script_of(c: char) -> Option<Script> {
    let cp = c as u32;
    let script = match cp {
        0x41..=0x5A | 0x61..=0x7A | 0xC0..=0x24F | 0x1E00..=0x1EFF => Script::Latin,
        0x370..=0x3FF | 0x1F00..=0x1FFF => Script::Greek,
        0x400..=0x52F => Script::Cyrillic,
        0x590..=0x5FF => Script::Hebrew,
        0x600..=0x6FF | 0x750..=0x77F => Script::Arabic,
        0x900..=0x97F => Script::Devanagari,
        0xE00..=0xE7F => Script::Thai,
        0x1100..=0x11FF | 0x3130..=0x318F | 0xAC00..=0xD7AF => Script::Hangul,
        0x3040..=0x30FF | 0x31F0..=0x31FF => Script::Kana,
        0x3400..=0x4DBF | 0x4E00..=0x9FFF | 0xF900..=0xFAFF => Script::Han,
        _ if c.is_alphabetic() => Script::Other,
        _ => return None,
    };
    Some(script)
}

fn ngram_counts(text: &str) -> HashMap<String, u32> {
    let mut counts = HashMap::new();
    let lower = text.to_lowercase();
    for word in lower.split(|c: char| !c.is_alphabetic()).filter(|w| !w.is_empty()) {
        let padded: Vec<char> = std::iter::once('_')
            .chain(word.chars())
            .chain(std::iter::once('_'))
            .collect();
        for n in 1..=MAX_N.min(padded.len()) {
            for gram in padded.windows(n) {
                if n == 1 && gram[0] == '_' {
                    continue;
                }
                *counts.entry(gram.iter().collect()).or_insert(0) += 1;
            }
        }
    }
    counts
}

#[derive(Debug, Clone)]
struct Profile {
    code: &'static str,
    counts: HashMap<String, u32>,
    total: u64,
}

/// Script rules plus n-gram models for en, de, fr, es, it, pt and nl.
#[derive(Debug, Clone)]
pub struct NgramDetector {
    profiles: Vec<Profile>,
    vocabulary: usize,
}

impl Default for NgramDetector {
    fn default() -> Self {
        Self::new()
    }
}

impl NgramDetector {
    pub fn new() -> Self {
        let profiles: Vec<Profile> = TRAINING
            .iter()
            .map(|(code, text)| {
                let counts = ngram_counts(text);
                let total = counts.values().map(|&c| c as u64).sum();
                Profile {
                    code,
                    counts,
                    total,
                }
            })
            .collect();
        let vocabulary = profiles
            .iter()
            .flat_map(|p| p.counts.keys())
            .collect::<HashSet<_>>()
            .len();
        Self {
            profiles,
            vocabulary,
        }
    }

    pub fn languages(&self) -> impl Iterator<Item = &str> {
        self.profiles.iter().map(|p| p.code)
    }

    /// Log-likelihood of the document's n-grams under each language.
    fn log_likelihoods(&self, text: &str) -> Vec<(f64, &'static str)> {
        let doc = ngram_counts(text);
        let mut grams: Vec<(&String, &u32)> = doc.iter().collect();
        grams.sort();
        self.profiles
            .iter()
            .map(|p| {
                let denom = (p.total as f64 + SMOOTHING * self.vocabulary as f64).ln();
                let ll = grams
                    .iter()
                    .map(|(g, &k)| {
                        let c = p.counts.get(*g).copied().unwrap_or(0) as f64;
                        k as f64 * ((c + SMOOTHING).ln() - denom)
                    })
                    .sum();
                (ll, p.code)
            })
            .collect()
    }

    fn classify_latin(&self, text: &str) -> DetectedLanguage {
        let scored = self.log_likelihoods(text);
        let (best, code) = scored
            .iter()
            .copied()
            .fold((f64::NEG_INFINITY, "und"), |acc, s| if s.0 > acc.0 { s } else { acc });
        // Posterior of the winner under a uniform prior.
        let mass: f64 = scored.iter().map(|(ll, _)| (ll - best).exp()).sum();
        DetectedLanguage {
            lang_code: code.to_string(),
            confidence: 1.0 / mass,
        }
    }
}

impl LanguageDetector for NgramDetector {
    fn detect(&self, text: &str) -> Result<DetectedLanguage, ProviderError> {
        if text.trim().is_empty() {
            return Err(ProviderError::EmptyText);
        }
        let mut counts: HashMap<Script, usize> = HashMap::new();
        for s in text.chars().filter_map(script_of) {
            *counts.entry(s).or_insert(0) += 1;
        }
        let letters: usize = counts.values().sum();
        if letters == 0 {
            return Ok(DetectedLanguage {
                lang_code: DetectedLanguage::UNDETERMINED.to_string(),
                confidence: 1.0,
            });
        }
        let count = |s: Script| counts.get(&s).copied().unwrap_or(0);
        let (&dominant, &n) = counts
            .iter()
            .max_by_key(|(s, n)| (**n, std::cmp::Reverse(**s as u8)))
            .expect("at least one letter");
        let share = n as f64 / letters as f64;
        let code = match dominant {
            Script::Latin => return Ok(self.classify_latin(text)),
            Script::Han | Script::Kana if count(Script::Kana) > 0 => "ja",
            Script::Han => "zh",
            Script::Kana => "ja",
            Script::Hangul => "ko",
            Script::Greek => "el",
            Script::Cyrillic => {
                if text.chars().any(|c| "іїєґІЇЄҐ".contains(c)) {
                    "uk"
                } else {
                    "ru"
                }
            }
            Script::Arabic => "ar",
            Script::Hebrew => "he",
            Script::Thai => "th",
            Script::Devanagari => "hi",
            Script::Other => DetectedLanguage::UNDETERMINED,
        };
        Ok(DetectedLanguage {
            lang_code: code.to_string(),
            confidence: share,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(text: &str) -> String {
        NgramDetector::new().detect(text).unwrap().lang_code
    }

    #[test]
    fn scripts() {
        assert_eq!(code("一个男人在骑马"), "zh");
        assert_eq!(code("말을 타는 남자"), "ko");
        assert_eq!(code("ένας άντρας καβαλάει ένα άλογο"), "el");
        assert_eq!(code("馬に乗っている男性"), "ja");
        assert_eq!(code("мужчина едет на лошади"), "ru");
        assert_eq!(code("чоловік їде на коні"), "uk");
        assert_eq!(code("رجل يركب حصانا"), "ar");
    }

    #[test]
    fn letterless_text_is_undetermined() {
        assert_eq!(code("🐎🏇🌅"), "und");
        assert_eq!(code("12 + 7 = 19"), "und");
    }

    #[test]
    fn empty_text() {
        let d = NgramDetector::new();
        assert_eq!(d.detect(""), Err(ProviderError::EmptyText));
        assert_eq!(d.detect("  \n\t"), Err(ProviderError::EmptyText));
    }

    #[test]
    fn english_sentences() {
        for s in [
            "a man riding a horse",
            "a dog",
            "two cats sleeping on a couch",
            "people walking in the rain with umbrellas",
            "What is the man in the second picture holding?",
            "the quick brown fox jumps over the lazy dog",
            "a bowl of soup next to a sandwich on a table",
        ] {
            assert_eq!(code(s), "en", "{s}");
        }
    }

    #[test]
    fn latin_script_languages() {
        assert_eq!(code("ein Mann reitet auf einem Pferd am Strand"), "de");
        assert_eq!(code("un homme qui monte un cheval sur la plage"), "fr");
        assert_eq!(code("un hombre montando a caballo en la playa"), "es");
        assert_eq!(code("un uomo che cavalca un cavallo sulla spiaggia"), "it");
        assert_eq!(code("um homem andando a cavalo na praia"), "pt");
        assert_eq!(code("een man die op een paard rijdt op het strand"), "nl");
    }

    #[test]
    fn confidence_is_a_fraction() {
        let d = NgramDetector::new();
        for s in ["a cat", "一个男人", "der Hund und die Katze", "Ελλάδα and Greece"] {
            let c = d.detect(s).unwrap().confidence;
            assert!((0.0..=1.0).contains(&c), "{s}: {c}");
        }
    }

    #[test]
    fn every_language_is_trained() {
        let d = NgramDetector::new();
        assert_eq!(d.languages().count(), 7);
        for p in &d.profiles {
            assert!(p.total > 1_000, "{}", p.code);
        }
    }

    #[test]
    fn short_captions() {
        for s in ["a dog", "two dogs", "people", "an elephant", "a man jumping over a laptop"] {
            assert_eq!(code(s), "en", "{s}");
        }
    }
}
