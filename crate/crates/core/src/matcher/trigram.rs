//! Padded character trigrams and the Dice coefficient over them.

/// Boundary sentinel; normalization never produces it.
const PAD: char = '\u{0}';

/// Lowercases, trims and collapses whitespace runs to single spaces.
pub fn normalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    for word in s.split_whitespace() {
        if !out.is_empty() {
            out.push(' ');
        }
        out.extend(
            word.chars()
                .flat_map(char::to_lowercase)
                .filter(|&c| c != PAD),
        );
    }
    out
}

fn pack(a: char, b: char, c: char) -> u64 {
    ((a as u64) << 42) | ((b as u64) << 21) | c as u64
}

/// Sorted multiset of padded trigrams of a normalized string.
///
/// A non-empty string of `n` chars yields `n + 2` trigrams; the empty string
/// yields none.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TrigramProfile {
    grams: Vec<u64>,
}

impl TrigramProfile {
    pub fn new(text: &str) -> Self {
        Self::from_normalized(&normalize(text))
    }

    pub fn from_normalized(normalized: &str) -> Self {
        if normalized.is_empty() {
            return TrigramProfile::default();
        }
        let chars: Vec<char> = [PAD, PAD]
            .into_iter()
            .chain(normalized.chars())
            .chain([PAD, PAD])
            .collect();
        let mut grams: Vec<u64> = chars.windows(3).map(|w| pack(w[0], w[1], w[2])).collect();
        grams.sort_unstable();
        TrigramProfile { grams }
    }

    pub fn len(&self) -> usize {
        self.grams.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grams.is_empty()
    }

    /// `(trigram, multiplicity)` pairs in ascending trigram order.
    pub fn counts(&self) -> Vec<(u64, u32)> {
        let mut out: Vec<(u64, u32)> = Vec::new();
        for &g in &self.grams {
            match out.last_mut() {
                Some((last, n)) if *last == g => *n += 1,
                _ => out.push((g, 1)),
            }
        }
        out
    }

    /// Size of the multiset intersection.
    pub fn shared(&self, other: &TrigramProfile) -> usize {
        let (a, b) = (&self.grams, &other.grams);
        let (mut i, mut j, mut n) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => i += 1,
                std::cmp::Ordering::Greater => j += 1,
                std::cmp::Ordering::Equal => {
                    n += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        n
    }

    pub fn similarity(&self, other: &TrigramProfile) -> f64 {
        match (self.is_empty(), other.is_empty()) {
            (true, true) => 1.0,
            (true, false) | (false, true) => 0.0,
            _ => dice(self.shared(other), self.len(), other.len()),
        }
    }
}

/// `2·shared / (left + right)` for non-empty profiles.
#[inline]
pub(crate) fn dice(shared: usize, left: usize, right: usize) -> f64 {
    (2 * shared) as f64 / (left + right) as f64
}

/// Dice coefficient over padded trigram multisets of the normalized inputs.
pub fn trigram_similarity(s1: &str, s2: &str) -> f64 {
    TrigramProfile::new(s1).similarity(&TrigramProfile::new(s2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_and_disjoint() {
        assert_eq!(trigram_similarity("heart", "heart"), 1.0);
        assert_eq!(trigram_similarity("abc", "xyz"), 0.0);
    }

    #[test]
    fn empty_inputs() {
        assert_eq!(trigram_similarity("", ""), 1.0);
        assert_eq!(trigram_similarity("", "a"), 0.0);
        assert_eq!(trigram_similarity("  ", "a"), 0.0);
    }

    #[test]
    fn normalization_collapses_case_and_whitespace() {
        assert_eq!(normalize("  Cardiac \t  MUSCLE "), "cardiac muscle");
        assert_eq!(trigram_similarity("Cardiac  muscle", "cardiac muscle"), 1.0);
    }

    #[test]
    fn trigram_counts() {
        assert_eq!(TrigramProfile::new("a").len(), 3);
        assert_eq!(TrigramProfile::new("heart").len(), 7);
        let p = TrigramProfile::new("aaaa");
        // [PAD PAD a] [PAD a a] [a a a]x2 [a a PAD] [a PAD PAD]
        assert_eq!(p.counts().iter().map(|c| c.1).max(), Some(2));
    }
}
