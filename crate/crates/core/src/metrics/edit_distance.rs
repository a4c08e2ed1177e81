use unicode_normalization::UnicodeNormalization;

/// Character-level Levenshtein distance with unit costs, over the Unicode
/// scalar values of the NFC forms of `a` and `b`.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.nfc().collect();
    let b: Vec<char> = b.nfc().collect();
    levenshtein_chars(&a, &b)
}

fn levenshtein_chars<'a>(mut a: &'a [char], mut b: &'a [char]) -> usize {
    // Shared prefix and suffix never contribute.
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    a = &a[prefix..];
    b = &b[prefix..];
    let suffix = a.iter().rev().zip(b.iter().rev()).take_while(|(x, y)| x == y).count();
    a = &a[..a.len() - suffix];
    b = &b[..b.len() - suffix];

    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    if b.is_empty() {
        return a.len();
    }

    let mut row: Vec<usize> = (0..=b.len()).collect();
    for (i, ca) in a.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let above = row[j + 1];
            row[j + 1] = if ca == cb {
                diag
            } else {
                1 + diag.min(above).min(row[j])
            };
            diag = above;
        }
    }
    row[b.len()]
}

/// `max(1 - lev(x, y) / len(x), 0)` with lengths in NFC scalar values.
/// An empty `x` preserves fully only into an empty `y`.
pub fn preservation(x: &str, y: &str) -> f64 {
    let x: Vec<char> = x.nfc().collect();
    let y: Vec<char> = y.nfc().collect();
    if x.is_empty() {
        return if y.is_empty() { 1.0 } else { 0.0 };
    }
    let dist = levenshtein_chars(&x, &y);
    (1.0 - dist as f64 / x.len() as f64).max(0.0)
}
