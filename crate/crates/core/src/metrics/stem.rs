//! Porter suffix-stripping stemmer (the classic 1980 rule set).
//!
//! Used by the METEOR stage-2 matcher. Operates on lowercase ASCII words;
//! anything else is returned unchanged.

pub fn porter_stem(word: &str) -> String {
    if !word.is_ascii() || word.len() <= 2 {
        return word.to_string();
    }
    let mut b = word.as_bytes().to_vec();
    step_1a(&mut b);
    step_1b(&mut b);
    step_1c(&mut b);
    step_2(&mut b);
    step_3(&mut b);
    step_4(&mut b);
    step_5(&mut b);
    String::from_utf8(b).expect("stemmer operates on ascii")
}

fn is_vowel_at(w: &[u8], i: usize) -> bool {
    match w[i] {
        b'a' | b'e' | b'i' | b'o' | b'u' => true,
        // y counts as a vowel when it follows a consonant
        b'y' => i > 0 && !is_vowel_at(w, i - 1),
        _ => false,
    }
}

/// Number of vowel-consonant groups in `[C](VC)^m[V]`.
fn measure(w: &[u8]) -> usize {
    let mut m = 0;
    let mut prev_vowel = false;
    for i in 0..w.len() {
        let v = is_vowel_at(w, i);
        if prev_vowel && !v {
            m += 1;
        }
        prev_vowel = v;
    }
    m
}

fn contains_vowel(w: &[u8]) -> bool {
    (0..w.len()).any(|i| is_vowel_at(w, i))
}

fn ends_double_consonant(w: &[u8]) -> bool {
    let n = w.len();
    n >= 2 && w[n - 1] == w[n - 2] && !is_vowel_at(w, n - 1)
}

/// Consonant-vowel-consonant ending where the final consonant is not w, x, y.
fn ends_cvc(w: &[u8]) -> bool {
    let n = w.len();
    n >= 3
        && !is_vowel_at(w, n - 3)
        && is_vowel_at(w, n - 2)
        && !is_vowel_at(w, n - 1)
        && !matches!(w[n - 1], b'w' | b'x' | b'y')
}

fn ends(w: &[u8], suffix: &str) -> bool {
    w.len() >= suffix.len() && &w[w.len() - suffix.len()..] == suffix.as_bytes()
}

fn replace_suffix(w: &mut Vec<u8>, suffix: &str, replacement: &str) {
    let keep = w.len() - suffix.len();
    w.truncate(keep);
    w.extend_from_slice(replacement.as_bytes());
}

fn step_1a(w: &mut Vec<u8>) {
    if ends(w, "sses") {
        replace_suffix(w, "sses", "ss");
    } else if ends(w, "ies") {
        replace_suffix(w, "ies", "i");
    } else if ends(w, "ss") {
        // unchanged
    } else if ends(w, "s") {
        replace_suffix(w, "s", "");
    }
}

fn step_1b(w: &mut Vec<u8>) {
    if ends(w, "eed") {
        if measure(&w[..w.len() - 3]) > 0 {
            replace_suffix(w, "eed", "ee");
        }
        return;
    }
    let stripped = if ends(w, "ed") && contains_vowel(&w[..w.len() - 2]) {
        replace_suffix(w, "ed", "");
        true
    } else if ends(w, "ing") && contains_vowel(&w[..w.len() - 3]) {
        replace_suffix(w, "ing", "");
        true
    } else {
        false
    };
    if !stripped {
        return;
    }
    if ends(w, "at") || ends(w, "bl") || ends(w, "iz") {
        w.push(b'e');
    } else if ends_double_consonant(w) && !matches!(w[w.len() - 1], b'l' | b's' | b'z') {
        w.truncate(w.len() - 1);
    } else if measure(w) == 1 && ends_cvc(w) {
        w.push(b'e');
    }
}

fn step_1c(w: &mut [u8]) {
    if ends(w, "y") && contains_vowel(&w[..w.len() - 1]) {
        let n = w.len();
        w[n - 1] = b'i';
    }
}

/// Longest-suffix rules applied when the remaining stem has measure > 0.
const STEP_2_RULES: &[(&str, &str)] = &[
    ("ational", "ate"),
    ("ization", "ize"),
    ("iveness", "ive"),
    ("fulness", "ful"),
    ("ousness", "ous"),
    ("biliti", "ble"),
    ("tional", "tion"),
    ("entli", "ent"),
    ("ousli", "ous"),
    ("alism", "al"),
    ("aliti", "al"),
    ("iviti", "ive"),
    ("ation", "ate"),
    ("enci", "ence"),
    ("anci", "ance"),
    ("izer", "ize"),
    ("abli", "able"),
    ("alli", "al"),
    ("ator", "ate"),
    ("eli", "e"),
];

const STEP_3_RULES: &[(&str, &str)] = &[
    ("icate", "ic"),
    ("ative", ""),
    ("alize", "al"),
    ("iciti", "ic"),
    ("ical", "ic"),
    ("ful", ""),
    ("ness", ""),
];

fn apply_rules(w: &mut Vec<u8>, rules: &[(&str, &str)]) {
    for (suffix, replacement) in rules {
        if ends(w, suffix) {
            if measure(&w[..w.len() - suffix.len()]) > 0 {
                replace_suffix(w, suffix, replacement);
            }
            return;
        }
    }
}

fn step_2(w: &mut Vec<u8>) {
    apply_rules(w, STEP_2_RULES);
}

fn step_3(w: &mut Vec<u8>) {
    apply_rules(w, STEP_3_RULES);
}

const STEP_4_SUFFIXES: &[&str] = &[
    "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ism", "ate", "iti", "ous",
    "ive", "ize", "ion", "al", "er", "ic", "ou",
];

fn step_4(w: &mut Vec<u8>) {
    for suffix in STEP_4_SUFFIXES {
        if ends(w, suffix) {
            let stem = &w[..w.len() - suffix.len()];
            let ok = measure(stem) > 1
                && (*suffix != "ion" || stem.last().is_some_and(|&c| c == b's' || c == b't'));
            if ok {
                replace_suffix(w, suffix, "");
            }
            return;
        }
    }
}

fn step_5(w: &mut Vec<u8>) {
    // 5a: drop a final e when the stem is long enough
    if ends(w, "e") {
        let stem = &w[..w.len() - 1];
        let m = measure(stem);
        if m > 1 || (m == 1 && !ends_cvc(stem)) {
            w.truncate(w.len() - 1);
        }
    }
    // 5b: collapse a final double l
    if measure(w) > 1 && ends_double_consonant(w) && w[w.len() - 1] == b'l' {
        w.truncate(w.len() - 1);
    }
}
