//! The relations the zoo machines compute, as decidable membership
//! predicates with bounded candidate enumerators.

use super::{Family, PcpInstance};
use crate::machine::Alphabet;
use crate::relations::RelationSpec;
use crate::{OutputWord, Result};

/// Split `v` into maximal runs of equal symbols and return (symbol, count)
/// pairs.
fn runs(v: &[usize]) -> Vec<(usize, usize)> {
    let mut out: Vec<(usize, usize)> = Vec::new();
    for &s in v {
        match out.last_mut() {
            Some((sym, n)) if *sym == s => *n += 1,
            _ => out.push((s, 1)),
        }
    }
    out
}

/// `v = 0^a 1^b` (either block possibly empty)?
fn zeros_then_ones(v: &[usize]) -> Option<(usize, usize)> {
    match runs(v).as_slice() {
        [] => Some((0, 0)),
        [(0, a)] => Some((*a, 0)),
        [(1, b)] => Some((0, *b)),
        [(0, a), (1, b)] => Some((*a, *b)),
        _ => None,
    }
}

fn uniform(symbol: u8, n: usize) -> OutputWord {
    vec![symbol; n]
}

fn all_lengths_candidates(symbol: u8) -> impl Fn(&[usize]) -> Vec<OutputWord> + Send + Sync {
    move |v: &[usize]| (0..=v.len()).map(|i| uniform(symbol, i)).collect()
}

pub fn build_relation(family: Family) -> Result<RelationSpec> {
    Ok(match family {
        Family::R1 => RelationSpec::new(
            "R1",
            Alphabet::new(["0", "1"])?,
            Alphabet::new(["2"])?,
            Box::new(|v, w| {
                matches!(zeros_then_ones(v), Some((a, b)) if a == b && w == uniform(0, a))
            }),
            Box::new(all_lengths_candidates(0)),
        ),
        Family::R2 => RelationSpec::new(
            "R2",
            Alphabet::new(["0", "1", "2"])?,
            Alphabet::new(["0", "1"])?,
            Box::new(|v, w| match split_once(v, 2) {
                Some((x, y)) => x == y && word_eq(x, w),
                None => false,
            }),
            Box::new(|v| match split_once(v, 2) {
                Some((x, y)) => vec![to_out(x), to_out(y)],
                None => Vec::new(),
            }),
        ),
        Family::R3 => RelationSpec::new(
            "R3",
            Alphabet::new(["0", "1", "2"])?,
            Alphabet::new(["3"])?,
            Box::new(|v, w| match runs_mnk(v) {
                Some((m, n, k)) => n != k && (m == k || m == n) && w == uniform(0, m),
                None => false,
            }),
            Box::new(all_lengths_candidates(0)),
        ),
        Family::R4 => RelationSpec::new(
            "R4",
            Alphabet::new(["0", "1", "2", "3"])?,
            Alphabet::new(["4"])?,
            Box::new(|v, w| {
                let Some((&a, body)) = v.split_last() else {
                    return false;
                };
                let Some((m, n)) = zeros_then_ones(body) else {
                    return false;
                };
                match a {
                    2 => w == uniform(0, m),
                    3 => w == uniform(0, n),
                    _ => false,
                }
            }),
            Box::new(all_lengths_candidates(0)),
        ),
        Family::R5 => RelationSpec::new(
            "R5",
            Alphabet::new(["0", "1"])?,
            Alphabet::new(["0", "1"])?,
            Box::new(|v, w| match v.last() {
                Some(&x) => w == [x as u8],
                None => false,
            }),
            Box::new(|_| vec![vec![0u8], vec![1u8]]),
        ),
    })
}

/// The relation computed by the tile machines: an index word is related to
/// the common concatenation of its tiles when the two concatenations agree
/// and the word is nonempty.
pub fn build_pcp_relation(instance: &PcpInstance) -> Result<RelationSpec> {
    let (ia, oa) = instance.alphabets()?;
    let inst_m = instance.clone();
    let inst_c = instance.clone();
    let oa_m = oa.clone();
    let oa_c = oa.clone();
    Ok(RelationSpec::new(
        "PCP",
        ia,
        oa,
        Box::new(move |v, w| {
            if v.is_empty() {
                return false;
            }
            let cv = inst_m.concat_v(v, &oa_m).expect("tiles tokenize");
            let cw = inst_m.concat_w(v, &oa_m).expect("tiles tokenize");
            cv == cw && w == cv
        }),
        Box::new(move |v| {
            let mut out = vec![
                inst_c.concat_v(v, &oa_c).expect("tiles tokenize"),
                inst_c.concat_w(v, &oa_c).expect("tiles tokenize"),
            ];
            out.dedup();
            out
        }),
    ))
}

fn split_once(v: &[usize], sep: usize) -> Option<(&[usize], &[usize])> {
    let pos = v.iter().position(|&s| s == sep)?;
    let (x, rest) = v.split_at(pos);
    let y = &rest[1..];
    if y.contains(&sep) {
        None
    } else {
        Some((x, y))
    }
}

fn word_eq(x: &[usize], w: &[u8]) -> bool {
    x.len() == w.len() && x.iter().zip(w).all(|(&a, &b)| a == b as usize)
}

fn to_out(x: &[usize]) -> OutputWord {
    x.iter().map(|&s| s as u8).collect()
}

fn runs_mnk(v: &[usize]) -> Option<(usize, usize, usize)> {
    let mut m = 0;
    let mut n = 0;
    let mut k = 0;
    for (sym, count) in runs(v) {
        match sym {
            0 if n == 0 && k == 0 && m == 0 => m = count,
            1 if n == 0 && k == 0 => n = count,
            2 if k == 0 => k = count,
            _ => return None,
        }
    }
    Some((m, n, k))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r3_membership_examples() {
        let rel = build_relation(Family::R3).unwrap();
        // 0^2 1^2 2^3 with output "33": m=n=2, n != k
        assert!(rel.member(&[0, 0, 1, 1, 2, 2, 2], &[0, 0]));
        // n == k fails
        assert!(!rel.member(&[0, 0, 1, 1, 2, 2], &[0, 0]));
        // ones alone: m = k = 0, n nonzero, output empty
        assert!(rel.member(&[1, 1], &[]));
        assert!(!rel.member(&[], &[]));
    }

    #[test]
    fn r5_membership_examples() {
        let rel = build_relation(Family::R5).unwrap();
        assert!(rel.member(&[0, 1, 1, 0], &[0]));
        assert!(!rel.member(&[0, 1], &[0]));
        assert!(!rel.member(&[], &[0]));
    }

    #[test]
    fn runs_mnk_polices_order() {
        assert_eq!(runs_mnk(&[0, 0, 1, 2]), Some((2, 1, 1)));
        assert_eq!(runs_mnk(&[1, 1]), Some((0, 2, 0)));
        assert_eq!(runs_mnk(&[]), Some((0, 0, 0)));
        assert_eq!(runs_mnk(&[0, 1, 0]), None);
        assert_eq!(runs_mnk(&[2, 1]), None);
    }

    #[test]
    fn enumerator_counts() {
        let rel = build_relation(Family::R1).unwrap();
        assert_eq!(rel.enumerate_inputs(3).len(), 1 + 2 + 4 + 8);
    }

    #[test]
    fn pcp_relation_matches_concatenation_equality() {
        let inst = PcpInstance::new(vec!["a", "ba"], vec!["ab", "a"]).unwrap();
        let rel = build_pcp_relation(&inst).unwrap();
        let aba = rel.output_alphabet.tokenize_output("aba").unwrap();
        assert!(rel.member(&[0, 1], &aba));
        assert!(!rel.member(&[0], &aba));
        assert!(!rel.member(&[], &[]));
    }
}
