//! Wigner symbols against independent constructions: Clebsch-Gordan
//! coefficients built by lowering from stretched states, and 6j symbols as
//! sums over products of four 3j symbols.

use std::collections::BTreeMap;

use rydpol::angular::{clebsch_gordan, wigner_3j, wigner_6j, HalfInt};

type Ket = BTreeMap<(i32, i32), f64>;

fn lower_factor(j2: i32, m2: i32) -> f64 {
    // <j, m-1| J- |j, m> with twice-valued arguments
    let (j, m) = (j2 as f64 / 2.0, m2 as f64 / 2.0);
    (j * (j + 1.0) - m * (m - 1.0)).sqrt()
}

fn lower(ket: &Ket, j1: i32, j2: i32) -> Ket {
    let mut out = Ket::new();
    for (&(m1, m2), &c) in ket {
        if m1 > -j1 {
            *out.entry((m1 - 2, m2)).or_default() += c * lower_factor(j1, m1);
        }
        if m2 > -j2 {
            *out.entry((m1, m2 - 2)).or_default() += c * lower_factor(j2, m2);
        }
    }
    out
}

fn dot(a: &Ket, b: &Ket) -> f64 {
    a.iter().map(|(k, v)| v * b.get(k).copied().unwrap_or(0.0)).sum()
}

fn scale(a: &mut Ket, s: f64) {
    for v in a.values_mut() {
        *v *= s;
    }
}

/// Every coupled state `|J M>` of `j1 ⊗ j2` in the product basis, keyed by
/// twice `(J, M)`, with the Condon-Shortley phase.
fn coupled_states(j1: i32, j2: i32) -> BTreeMap<(i32, i32), Ket> {
    let mut states: BTreeMap<(i32, i32), Ket> = BTreeMap::new();
    let mut big_j = j1 + j2;
    while big_j >= (j1 - j2).abs() {
        // top state: orthogonal to the higher-J states with M = J
        let mut top = Ket::new();
        let mut m1 = j1;
        while m1 >= -j1 {
            let m2 = big_j - m1;
            if m2.abs() <= j2 && (m2 - j2) % 2 == 0 {
                top.insert((m1, m2), 1.0 + 0.1 * m1 as f64);
            }
            m1 -= 2;
        }
        for _ in 0..2 {
            for ((_, m), other) in states.iter() {
                if *m == big_j {
                    let overlap = dot(&top, other);
                    for (k, v) in other {
                        *top.entry(*k).or_default() -= overlap * v;
                    }
                }
            }
        }
        let norm = dot(&top, &top).sqrt();
        let sign = top.get(&(j1, big_j - j1)).copied().unwrap_or(0.0).signum();
        scale(&mut top, sign / norm);

        let mut current = top;
        let mut m = big_j;
        loop {
            states.insert((big_j, m), current.clone());
            if m == -big_j {
                break;
            }
            current = lower(&current, j1, j2);
            scale(&mut current, 1.0 / lower_factor(big_j, m));
            m -= 2;
        }
        big_j -= 2;
    }
    states
}

#[test]
fn clebsch_gordan_matches_ladder_construction() {
    let mut checked = 0;
    for j1 in 0..=5 {
        for j2 in 0..=4 {
            for ((big_j, big_m), ket) in coupled_states(j1, j2) {
                for m1 in (-j1..=j1).step_by(2) {
                    for m2 in (-j2..=j2).step_by(2) {
                        let oracle = ket.get(&(m1, m2)).copied().unwrap_or(0.0);
                        let got = clebsch_gordan(
                            HalfInt::from_twice(j1),
                            HalfInt::from_twice(m1),
                            HalfInt::from_twice(j2),
                            HalfInt::from_twice(m2),
                            HalfInt::from_twice(big_j),
                            HalfInt::from_twice(big_m),
                        )
                        .unwrap();
                        assert!(
                            (got - oracle).abs() < 1e-12,
                            "<{j1}/2 {m1}/2 {j2}/2 {m2}/2 | {big_j}/2 {big_m}/2>: {got} vs {oracle}"
                        );
                        checked += 1;
                    }
                }
            }
        }
    }
    assert!(checked > 1000);
}

fn projections(j: i32) -> impl Iterator<Item = i32> {
    (-j..=j).step_by(2)
}

fn parity(twice: i32) -> f64 {
    debug_assert!(twice % 2 == 0);
    if (twice / 2) % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

fn sixj_from_3j(j: [i32; 6]) -> f64 {
    let h = HalfInt::from_twice;
    let w =
        |a: i32, b: i32, c: i32, ma: i32, mb: i32, mc: i32| wigner_3j(h(a), h(b), h(c), h(ma), h(mb), h(mc)).unwrap();
    let [j1, j2, j3, j4, j5, j6] = j;
    let mut sum = 0.0;
    for m1 in projections(j1) {
        for m2 in projections(j2) {
            let m3 = -m1 - m2;
            if m3.abs() > j3 {
                continue;
            }
            for m5 in projections(j5) {
                let m6 = m5 - m1;
                if m6.abs() > j6 {
                    continue;
                }
                let m4 = m5 + m3;
                if m4.abs() > j4 || m4 + m2 - m6 != 0 {
                    continue;
                }
                let phase = parity(j1 - m1 + j2 - m2 + j3 - m3 + j4 - m4 + j5 - m5 + j6 - m6);
                sum += phase
                    * w(j1, j2, j3, -m1, -m2, -m3)
                    * w(j1, j5, j6, m1, -m5, m6)
                    * w(j4, j2, j6, m4, m2, -m6)
                    * w(j4, j5, j3, -m4, m5, m3);
            }
        }
    }
    sum
}

#[test]
fn sixj_matches_sum_over_3j_products() {
    let mut nonzero = 0;
    for j1 in 0..=4 {
        for j2 in 0..=4 {
            for j3 in 0..=4 {
                for j4 in 0..=3 {
                    for j5 in 0..=3 {
                        for j6 in 0..=3 {
                            let j = [j1, j2, j3, j4, j5, j6];
                            if (j1 + j2 + j3) % 2 != 0 || (j1 + j5 + j6) % 2 != 0 || (j4 + j2 + j6) % 2 != 0 {
                                continue;
                            }
                            let h = HalfInt::from_twice;
                            let got = wigner_6j(h(j1), h(j2), h(j3), h(j4), h(j5), h(j6)).unwrap();
                            let oracle = sixj_from_3j(j);
                            assert!((got - oracle).abs() < 1e-12, "{j:?}: {got} vs {oracle}");
                            if got != 0.0 {
                                nonzero += 1;
                            }
                        }
                    }
                }
            }
        }
    }
    assert!(nonzero > 100);
}

#[test]
fn sixj_values_used_by_the_rubidium_ladders() {
    let h = HalfInt::half;
    let one = HalfInt::ONE;
    // {L' J' S; J L 1} for S1/2 -> P3/2, P3/2 -> D5/2 and D5/2 -> P3/2
    let cases = [
        (
            [HalfInt::int(1), h(3), h(1), h(1), HalfInt::ZERO, one],
            sixj_from_3j([2, 3, 1, 1, 0, 2]),
        ),
        (
            [HalfInt::int(2), h(5), h(1), h(3), HalfInt::int(1), one],
            sixj_from_3j([4, 5, 1, 3, 2, 2]),
        ),
        (
            [h(3), HalfInt::int(3), h(3), HalfInt::int(2), h(1), one],
            sixj_from_3j([3, 6, 3, 4, 1, 2]),
        ),
    ];
    for (args, oracle) in cases {
        let got = wigner_6j(args[0], args[1], args[2], args[3], args[4], args[5]).unwrap();
        assert!((got - oracle).abs() < 1e-13, "{args:?}");
        assert!(got != 0.0);
    }
}
