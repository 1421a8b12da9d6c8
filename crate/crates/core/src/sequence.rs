//! Matching event sequences up to reordering of commuting events.

/// Length of the longest prefix of `observed` that can be matched, in order,
/// against `target`, where two events may be swapped when `commute` says so.
///
/// Each observed label is matched with its first remaining occurrence in
/// `target`, provided it commutes with every remaining label before that
/// occurrence. This decides equality of the two words in the partially
/// commutative monoid, prefix by prefix.
pub fn matched_prefix<L: PartialEq>(
    observed: &[L],
    target: &[L],
    commute: impl Fn(&L, &L) -> bool,
) -> usize {
    let mut remaining: Vec<&L> = target.iter().collect();
    for (k, e) in observed.iter().enumerate() {
        let Some(p) = remaining.iter().position(|t| *t == e) else {
            return k;
        };
        if !remaining[..p].iter().all(|t| commute(t, e)) {
            return k;
        }
        remaining.remove(p);
    }
    observed.len()
}

/// `true` when both sequences have the same length and match completely.
pub fn equivalent<L: PartialEq>(a: &[L], b: &[L], commute: impl Fn(&L, &L) -> bool) -> bool {
    a.len() == b.len() && matched_prefix(a, b, commute) == a.len()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn disjoint(a: &(usize, usize), b: &(usize, usize)) -> bool {
        a.0 != b.0 && a.0 != b.1 && a.1 != b.0 && a.1 != b.1
    }

    #[test]
    fn commuting_swap_is_accepted() {
        let a = [(0, 1), (2, 3), (1, 2)];
        let b = [(2, 3), (0, 1), (1, 2)];
        assert!(equivalent(&a, &b, disjoint));
    }

    #[test]
    fn non_commuting_swap_is_rejected() {
        let a = [(0, 1), (1, 2)];
        let b = [(1, 2), (0, 1)];
        assert_eq!(matched_prefix(&a, &b, disjoint), 0);
        assert!(!equivalent(&a, &b, disjoint));
    }

    #[test]
    fn prefix_length() {
        let target = [1, 2, 3, 4];
        assert_eq!(matched_prefix(&[1, 2, 9], &target, |_, _| false), 2);
        assert_eq!(matched_prefix(&[1, 2, 3, 4, 5], &target, |_, _| false), 4);
    }
}
