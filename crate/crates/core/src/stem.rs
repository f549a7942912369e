//! English Porter2 ("Snowball English") stemmer.
//!
//! Operates on lowercase ASCII words. Anything else, including tokens with
//! digits or inner apostrophes, is returned unchanged.

use alloc::string::String;
use alloc::vec::Vec;

fn is_vowel(c: u8) -> bool {
    matches!(c, b'a' | b'e' | b'i' | b'o' | b'u' | b'y')
}

fn is_double(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && matches!(w[n - 1], b'b' | b'd' | b'f' | b'g' | b'm' | b'n' | b'p' | b'r' | b't')
}

fn is_valid_li(c: u8) -> bool {
    matches!(c, b'c' | b'd' | b'e' | b'g' | b'h' | b'k' | b'm' | b'n' | b'r' | b't')
}

/// Whether `w[..k]` ends in a short syllable.
fn ends_short_syllable(w: &[u8], k: usize) -> bool {
    if k == 2 {
        is_vowel(w[0]) && !is_vowel(w[1])
    } else if k >= 3 {
        let last = w[k - 1];
        !is_vowel(last) && !matches!(last, b'w' | b'x' | b'Y') && is_vowel(w[k - 2]) && !is_vowel(w[k - 3])
    } else {
        false
    }
}

/// Position after the first non-vowel that follows a vowel, from `start`.
fn region_after(w: &[u8], start: usize) -> usize {
    let mut i = start;
    while i < w.len() && !is_vowel(w[i]) {
        i += 1;
    }
    while i < w.len() && is_vowel(w[i]) {
        i += 1;
    }
    if i < w.len() {
        i + 1
    } else {
        w.len()
    }
}

fn ends_with(w: &[u8], suffix: &str) -> bool {
    w.ends_with(suffix.as_bytes())
}

fn replace_suffix(w: &mut Vec<u8>, suffix_len: usize, with: &str) {
    w.truncate(w.len() - suffix_len);
    w.extend_from_slice(with.as_bytes());
}

/// Longest entry of `table` whose suffix ends `w`.
fn longest<'a>(w: &[u8], table: &'a [(&'a str, &'a str)]) -> Option<(&'a str, &'a str)> {
    table
        .iter()
        .filter(|(s, _)| ends_with(w, s))
        .max_by_key(|(s, _)| s.len())
        .copied()
}

fn exception1(word: &str) -> Option<&'static str> {
    Some(match word {
        "skis" => "ski",
        "skies" => "sky",
        "dying" => "die",
        "lying" => "lie",
        "tying" => "tie",
        "idly" => "idl",
        "gently" => "gentl",
        "ugly" => "ugli",
        "early" => "earli",
        "only" => "onli",
        "singly" => "singl",
        "sky" => "sky",
        "news" => "news",
        "howe" => "howe",
        "atlas" => "atlas",
        "cosmos" => "cosmos",
        "bias" => "bias",
        "andes" => "andes",
        _ => return None,
    })
}

const EXCEPTION2: [&str; 8] = [
    "inning", "outing", "canning", "herring", "earring", "proceed", "exceed", "succeed",
];

const STEP2: [(&str, &str); 24] = [
    ("tional", "tion"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("abli", "able"),
    ("entli", "ent"),
    ("izer", "ize"),
    ("ization", "ize"),
    ("ational", "ate"),
    ("ation", "ate"),
    ("ator", "ate"),
    ("alism", "al"),
    ("aliti", "al"),
    ("alli", "al"),
    ("fulness", "ful"),
    ("ousli", "ous"),
    ("ousness", "ous"),
    ("iveness", "ive"),
    ("iviti", "ive"),
    ("biliti", "ble"),
    ("bli", "ble"),
    ("ogi", "og"),
    ("fulli", "ful"),
    ("lessli", "less"),
    ("li", ""),
];

const STEP3: [(&str, &str); 9] = [
    ("tional", "tion"),
    ("ational", "ate"),
    ("alize", "al"),
    ("icate", "ic"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
    ("ative", ""),
];

const STEP4: [(&str, &str); 18] = [
    ("al", ""),
    ("ance", ""),
    ("ence", ""),
    ("er", ""),
    ("ic", ""),
    ("able", ""),
    ("ible", ""),
    ("ant", ""),
    ("ement", ""),
    ("ment", ""),
    ("ent", ""),
    ("ism", ""),
    ("ate", ""),
    ("iti", ""),
    ("ous", ""),
    ("ive", ""),
    ("ize", ""),
    ("ion", ""),
];

struct Word {
    w: Vec<u8>,
    p1: usize,
    p2: usize,
}

impl Word {
    fn step1a(&mut self) {
        let w = &mut self.w;
        if ends_with(w, "sses") {
            replace_suffix(w, 4, "ss");
        } else if ends_with(w, "ied") || ends_with(w, "ies") {
            let with = if w.len() > 4 { "i" } else { "ie" };
            replace_suffix(w, 3, with);
        } else if ends_with(w, "us") || ends_with(w, "ss") {
        } else if ends_with(w, "s") && w[..w.len() - 2].iter().any(|&c| is_vowel(c)) {
            w.pop();
        }
    }

    fn step1b(&mut self) {
        const SUFFIXES: [&str; 6] = ["eedly", "ingly", "edly", "eed", "ing", "ed"];
        let Some(suffix) = SUFFIXES.iter().find(|s| ends_with(&self.w, s)) else {
            return;
        };
        let start = self.w.len() - suffix.len();
        if suffix.starts_with("eed") {
            if start >= self.p1 {
                replace_suffix(&mut self.w, suffix.len(), "ee");
            }
            return;
        }
        if !self.w[..start].iter().any(|&c| is_vowel(c)) {
            return;
        }
        self.w.truncate(start);
        let w = &mut self.w;
        if ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz") {
            w.push(b'e');
        } else if is_double(w) {
            w.pop();
        } else if self.p1 >= w.len() && ends_short_syllable(w, w.len()) {
            w.push(b'e');
        }
    }

    fn step1c(&mut self) {
        let n = self.w.len();
        if n > 2 && matches!(self.w[n - 1], b'y' | b'Y') && !is_vowel(self.w[n - 2]) {
            self.w[n - 1] = b'i';
        }
    }

    fn step2(&mut self) {
        let Some((suffix, with)) = longest(&self.w, &STEP2) else { return };
        let start = self.w.len() - suffix.len();
        if start < self.p1 {
            return;
        }
        match suffix {
            "ogi" if start == 0 || self.w[start - 1] != b'l' => {}
            "li" if start == 0 || !is_valid_li(self.w[start - 1]) => {}
            _ => replace_suffix(&mut self.w, suffix.len(), with),
        }
    }

    fn step3(&mut self) {
        let Some((suffix, with)) = longest(&self.w, &STEP3) else { return };
        let start = self.w.len() - suffix.len();
        if start < self.p1 || (suffix == "ative" && start < self.p2) {
            return;
        }
        replace_suffix(&mut self.w, suffix.len(), with);
    }

    fn step4(&mut self) {
        let Some((suffix, _)) = longest(&self.w, &STEP4) else { return };
        let start = self.w.len() - suffix.len();
        if start < self.p2 {
            return;
        }
        if suffix == "ion" && (start == 0 || !matches!(self.w[start - 1], b's' | b't')) {
            return;
        }
        self.w.truncate(start);
    }

    fn step5(&mut self) {
        let n = self.w.len();
        if n == 0 {
            return;
        }
        let start = n - 1;
        match self.w[start] {
            b'e' => {
                if start >= self.p2 || (start >= self.p1 && !ends_short_syllable(&self.w, start)) {
                    self.w.pop();
                }
            }
            b'l' if start >= self.p2 && start > 0 && self.w[start - 1] == b'l' => {
                self.w.pop();
            }
            _ => {}
        }
    }

    fn finish(mut self) -> String {
        for c in self.w.iter_mut() {
            if *c == b'Y' {
                *c = b'y';
            }
        }
        // Only ASCII bytes are ever produced.
        String::from_utf8(self.w).unwrap_or_default()
    }
}

/// Stems one lowercase token.
pub fn stem(token: &str) -> String {
    if token.is_empty() || !token.bytes().all(|b| b.is_ascii_lowercase()) {
        return token.into();
    }
    if let Some(e) = exception1(token) {
        return e.into();
    }
    if token.len() < 3 {
        return token.into();
    }

    let mut w: Vec<u8> = token.bytes().collect();
    if w[0] == b'y' {
        w[0] = b'Y';
    }
    for i in 1..w.len() {
        if w[i] == b'y' && is_vowel(w[i - 1]) {
            w[i] = b'Y';
        }
    }

    let p1 = ["gener", "commun", "arsen"]
        .iter()
        .find(|p| w.starts_with(p.as_bytes()))
        .map(|p| p.len())
        .unwrap_or_else(|| region_after(&w, 0));
    let p2 = region_after(&w, p1);
    let mut word = Word { w, p1, p2 };

    word.step1a();
    if EXCEPTION2.iter().any(|e| word.w == e.as_bytes()) {
        return word.finish();
    }
    word.step1b();
    word.step1c();
    word.step2();
    word.step3();
    word.step4();
    word.step5();
    word.finish()
}

#[cfg(test)]
mod tests {
    use super::stem;

    #[test]
    fn reference_vocabulary() {
        let cases = [
            ("running", "run"),
            ("caresses", "caress"),
            ("tv", "tv"),
            ("ponies", "poni"),
            ("ties", "tie"),
            ("cats", "cat"),
            ("gas", "gas"),
            ("hoping", "hope"),
            ("agreed", "agre"),
            ("feed", "feed"),
            ("generously", "generous"),
            ("communism", "communism"),
            ("consign", "consign"),
            ("consigned", "consign"),
            ("consignment", "consign"),
            ("knightly", "knight"),
            ("happy", "happi"),
            ("say", "say"),
            ("skies", "sky"),
            ("succeeded", "succeed"),
            ("yelling", "yell"),
            ("vegetarianism", "vegetarian"),
            ("harmful", "harm"),
            ("relational", "relat"),
        ];
        for (word, want) in cases {
            assert_eq!(stem(word), want, "{word}");
        }
    }

    #[test]
    fn non_alphabetic_passthrough() {
        assert_eq!(stem("2022"), "2022");
        assert_eq!(stem("don't"), "don't");
        assert_eq!(stem("école"), "école");
        assert_eq!(stem(""), "");
    }
}
