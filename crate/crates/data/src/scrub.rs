//! Pattern-based removal of personal details from free text.

use std::sync::OnceLock;

use regex::{Regex, RegexBuilder};
use serde::{Deserialize, Serialize};

pub const PHONE_TOKEN: &str = "⟨PHONE⟩";
pub const EMAIL_TOKEN: &str = "⟨EMAIL⟩";

/// Fewest digits a run needs before it is treated as a phone number.
const PHONE_MIN_DIGITS: usize = 7;

fn phone_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"\+?\d[\d\- ]*\d").expect("valid phone pattern"))
}

fn email_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(r"[A-Za-z0-9._%+\-]+@[A-Za-z0-9.\-]+\.[A-Za-z]{2,}").expect("valid email pattern"))
}

/// Alias → canonical replacement, matched case-insensitively.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AliasTable {
    pub entries: Vec<(String, String)>,
}

impl Default for AliasTable {
    fn default() -> Self {
        Self { entries: vec![("the power plant compound".into(), "Dongli Square Residential Area".into())] }
    }
}

pub struct Scrubber {
    aliases: Vec<(Regex, String)>,
}

impl Scrubber {
    pub fn new(table: &AliasTable) -> Self {
        let aliases = table
            .entries
            .iter()
            .map(|(alias, canonical)| {
                let re = RegexBuilder::new(&regex::escape(alias)).case_insensitive(true).build().expect("escaped literal");
                (re, canonical.clone())
            })
            .collect();
        Self { aliases }
    }

    /// Returns the cleaned text and how many replacements were made.
    pub fn scrub(&self, text: &str) -> (String, usize) {
        let mut count = 0;
        let mut out = email_re()
            .replace_all(text, |_: &regex::Captures| {
                count += 1;
                EMAIL_TOKEN
            })
            .into_owned();
        out = phone_re()
            .replace_all(&out, |c: &regex::Captures| {
                let m = &c[0];
                if m.chars().filter(char::is_ascii_digit).count() >= PHONE_MIN_DIGITS {
                    count += 1;
                    PHONE_TOKEN.to_string()
                } else {
                    m.to_string()
                }
            })
            .into_owned();
        for (re, canonical) in &self.aliases {
            let n = re.find_iter(&out).count();
            if n > 0 {
                count += n;
                out = re.replace_all(&out, regex::NoExpand(canonical)).into_owned();
            }
        }
        (out, count)
    }
}

/// Scrubs with the default alias table.
pub fn scrub_pii(text: &str) -> (String, usize) {
    static DEFAULT: OnceLock<Scrubber> = OnceLock::new();
    DEFAULT.get_or_init(|| Scrubber::new(&AliasTable::default())).scrub(text)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clean_text_untouched() {
        assert_eq!(scrub_pii("many trees and a wide sidewalk"), ("many trees and a wide sidewalk".to_string(), 0));
    }

    #[test]
    fn phone_numbers() {
        assert_eq!(scrub_pii("call 13812345678"), ("call ⟨PHONE⟩".to_string(), 1));
        assert_eq!(scrub_pii("tel +86 451-8666-1234 now").0, "tel ⟨PHONE⟩ now");
        assert_eq!(scrub_pii("built in 1998, 3 lanes"), ("built in 1998, 3 lanes".to_string(), 0));
    }

    #[test]
    fn emails() {
        assert_eq!(scrub_pii("write to li.wei@example.cn today"), ("write to ⟨EMAIL⟩ today".to_string(), 1));
    }

    #[test]
    fn alias_table() {
        let (out, n) = scrub_pii("near The Power Plant Compound gate");
        assert_eq!(out, "near Dongli Square Residential Area gate");
        assert_eq!(n, 1);
    }
}
