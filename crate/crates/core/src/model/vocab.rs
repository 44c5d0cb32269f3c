//! Fixed 64-symbol vocabulary shared by questions and rationales.

pub const PAD: usize = 0;
pub const BOS: usize = 1;
pub const EOS: usize = 2;
pub const UNK: usize = 3;

const WORDS: [&str; 64] = [
    "<pad>", "<bos>", "<eos>", "<unk>", "how", "is", "this", "the", "street", "safe", "clean", "green",
    "wide", "narrow", "sidewalk", "road", "trees", "shops", "cars", "traffic", "busy", "quiet", "open",
    "sky", "lively", "comfortable", "walk", "accessible", "convenient", "satisfying", "rich", "visual",
    "facilities", "public", "feels", "very", "somewhat", "not", "and", "with", "many", "few", "pleasant",
    "crowded", "noisy", "bright", "dark", "high", "low", "moderate", "good", "poor", "overall",
    "greenery", "space", "lane", "width", "density", "commercial", "safety", "amenities", "motorization",
    "connectivity", "here",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<&'static str>,
}

impl Default for Vocabulary {
    fn default() -> Self {
        Self { words: WORDS.to_vec() }
    }
}

impl Vocabulary {
    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn id(&self, word: &str) -> usize {
        self.words.iter().position(|w| *w == word).unwrap_or(UNK)
    }

    pub fn word(&self, id: usize) -> Option<&'static str> {
        self.words.get(id).copied()
    }

    /// Lowercased whitespace tokenization; unknown words map to `<unk>`.
    pub fn encode(&self, text: &str) -> Vec<usize> {
        text.split_whitespace()
            .map(|w| {
                let w = w.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase();
                self.id(&w)
            })
            .collect()
    }

    pub fn decode(&self, ids: &[usize]) -> String {
        ids.iter()
            .filter(|i| !matches!(**i, PAD | BOS | EOS))
            .map(|i| self.word(*i).unwrap_or("<unk>"))
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn words(&self) -> &[&'static str] {
        &self.words
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sixty_four_unique_symbols() {
        let v = Vocabulary::default();
        assert_eq!(v.len(), 64);
        let mut w = v.words().to_vec();
        w.sort_unstable();
        w.dedup();
        assert_eq!(w.len(), 64);
    }

    #[test]
    fn encode_decode() {
        let v = Vocabulary::default();
        let ids = v.encode("How safe is this Street?");
        assert_eq!(v.decode(&ids), "how safe is this street");
        assert_eq!(v.encode("zebra"), vec![UNK]);
    }
}
