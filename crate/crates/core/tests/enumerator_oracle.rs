//! Average weight spectra of small lifts, computed two independent ways: by
//! listing codewords for every permutation choice, and by counting
//! even-parity placements of variable weights on each lifted check.

use std::collections::HashMap;

use scloop_core::ensembles::{build_chain, build_uncoupled};
use scloop_core::wenum::exact_small_lift_enumerator;
use scloop_core::Protograph;

fn binom(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of ways to pick subsets of `[lift]` with the given sizes, one per
/// edge socket, such that every element lands in an even number of them.
fn even_placements(weights: &[usize], lift: usize) -> f64 {
    let d = weights.len();
    let even_masks: Vec<u32> = (0..1u32 << d).filter(|m| m.count_ones() % 2 == 0).collect();
    let mut counts: HashMap<Vec<usize>, f64> = HashMap::from([(vec![0; d], 1.0)]);
    for _ in 0..lift {
        let mut next: HashMap<Vec<usize>, f64> = HashMap::new();
        for (state, ways) in &counts {
            for &mask in &even_masks {
                let mut s = state.clone();
                let mut ok = true;
                for (i, c) in s.iter_mut().enumerate() {
                    if mask >> i & 1 == 1 {
                        *c += 1;
                        ok &= *c <= weights[i];
                    }
                }
                if ok {
                    *next.entry(s).or_default() += ways;
                }
            }
        }
        counts = next;
    }
    counts.get(weights).copied().unwrap_or(0.0)
}

fn expected_spectrum(p: &Protograph, lift: usize) -> Vec<f64> {
    let nv = p.num_vars();
    let mut sockets: Vec<Vec<usize>> = vec![Vec::new(); p.num_checks()];
    for (c, v) in p.edge_instances() {
        sockets[c].push(v);
    }
    let mut out = vec![0.0; nv * lift + 1];
    let mut w = vec![0usize; nv];
    loop {
        let mut term: f64 = w.iter().map(|&x| binom(lift, x)).product();
        for s in &sockets {
            if term == 0.0 {
                break;
            }
            let ws: Vec<usize> = s.iter().map(|&v| w[v]).collect();
            let total: f64 = ws.iter().map(|&x| binom(lift, x)).product();
            term *= even_placements(&ws, lift) / total;
        }
        out[w.iter().sum::<usize>()] += term;
        let mut i = 0;
        while i < nv && w[i] == lift {
            w[i] = 0;
            i += 1;
        }
        if i == nv {
            break;
        }
        w[i] += 1;
    }
    out
}

fn assert_spectra_match(p: &Protograph, lift: usize) {
    let exact = exact_small_lift_enumerator(p, lift).unwrap();
    let formula = expected_spectrum(p, lift);
    assert_eq!(exact.len(), formula.len());
    for (w, (a, b)) in exact.iter().zip(&formula).enumerate() {
        assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{} weight {w}: {a} vs {b}", p.name());
    }
}

#[test]
fn uncoupled_three_six_at_lift_three() {
    let p = build_uncoupled(3, 6).unwrap();
    assert_spectra_match(&p, 3);
    let exact = exact_small_lift_enumerator(&p, 3).unwrap();
    assert_eq!(exact[0], 1.0);
    assert!((exact[2] - 2619.0 / 729.0).abs() < 1e-12, "{}", exact[2]);
}

#[test]
fn uncoupled_three_six_at_lift_two() {
    assert_spectra_match(&build_uncoupled(3, 6).unwrap(), 2);
}

#[test]
fn short_chain_at_lift_two() {
    assert_spectra_match(&build_chain(3, 6, 3).unwrap(), 2);
}

#[test]
fn unit_lift_cancels_doubled_edges() {
    // doubled edges cancel over GF(2), leaving no constraint at all
    let p = build_uncoupled(2, 4).unwrap();
    let exact = exact_small_lift_enumerator(&p, 1).unwrap();
    assert_eq!(exact, vec![1.0, 2.0, 1.0]);
    assert_spectra_match(&p, 1);
}
