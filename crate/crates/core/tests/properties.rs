use proptest::prelude::*;
use qlm_core::angular::{enumerate_sectors, spins_of};
use qlm_core::spectrum::{eigen_2x2, p_err_min, spectrum_report, spectrum_totals, theta_block};
use qlm_core::{helstrom_avg, CaseTag, PriorScenario};
use std::collections::BTreeMap;
use std::f64::consts::PI;

fn main_scenarios() -> [PriorScenario; 3] {
    [
        PriorScenario::FixedPurities { r1: 0.75, r2: 0.5 },
        PriorScenario::HardSphere,
        PriorScenario::FixedOverlap { theta: PI / 3.0 },
    ]
}

#[test]
fn error_decreases_and_respects_bounds() {
    for sc in main_scenarios() {
        let base = helstrom_avg(&sc);
        let mut prev = 0.5;
        for n in 1..=40 {
            let p = p_err_min(n, &sc).unwrap().p_exact;
            assert!(p <= prev + 1e-12, "{sc}: n = {n}");
            assert!(p >= base - 1e-10, "{sc}: n = {n}");
            assert!(p <= 0.5);
            prev = p;
        }
    }
}

#[test]
fn trace_null_up_to_sixty() {
    // spectrum_report is capped, so sum the blocks directly
    for sc in [PriorScenario::FixedPurities { r1: 0.75, r2: 0.5 }, PriorScenario::HardSphere] {
        for n in [45u32, 60] {
            let mut total = 0.0;
            let mut count = 0usize;
            for key in enumerate_sectors(n) {
                let blk = theta_block(&key, n, &sc).unwrap();
                let (plus, minus) = eigen_2x2(blk.lam_pp, blk.lam_mm, blk.lam_pm);
                let lams = if blk.is_2x2 { vec![plus, minus] } else { vec![blk.lam_pp] };
                let m = qlm_core::angular::ln_sector_multiplicity(&key, n);
                for lam in lams {
                    total += lam * (blk.scale.ln_magnitude + m).exp();
                    count += 1;
                }
            }
            assert!(total.abs() < 1e-10 * count as f64, "{sc} n = {n}: {total}");
        }
    }
}

#[test]
fn plus_eigenvalue_is_smallest_at_the_top_of_each_q_range() {
    for sc in [
        PriorScenario::FixedPurities { r1: 0.75, r2: 0.5 },
        PriorScenario::FixedPurities { r1: 0.3, r2: 0.95 },
        PriorScenario::FixedPurities { r1: 0.6, r2: 0.6 },
    ] {
        for n in 1..=20 {
            let mut by_pair: BTreeMap<(u32, u32), Vec<(u32, f64)>> = BTreeMap::new();
            for key in enumerate_sectors(n).into_iter().filter(|k| k.case_tag == CaseTag::D) {
                let blk = theta_block(&key, n, &sc).unwrap();
                let plus = eigen_2x2(blk.lam_pp, blk.lam_mm, blk.lam_pm).0;
                by_pair.entry((key.s.twice, key.t.twice)).or_default().push((key.q.twice, plus));
            }
            for ((s2, t2), list) in by_pair {
                let top_q = s2 + t2 - 1;
                let top = list.iter().find(|(q, _)| *q == top_q).expect("top q is case D").1;
                for (q, lam) in &list {
                    assert!(*lam >= top - 1e-12, "{sc} n = {n} s = {s2}/2 t = {t2}/2 q = {q}/2");
                }
            }
        }
    }
}

#[test]
fn sign_structure_near_the_typical_spins() {
    let (r1, r2) = (0.75, 0.5);
    let sc = PriorScenario::FixedPurities { r1, r2 };
    let n = 200u32;
    let nf = f64::from(n);
    let window = |r: f64, j: f64| (j - nf * r / 2.0).abs() <= 3.0 * (nf * (1.0 - r * r)).sqrt() / 2.0;
    let mut checked = 0;
    for s in spins_of(n).filter(|s| window(r1, s.value())) {
        for t in spins_of(n).filter(|t| window(r2, t.value())) {
            for case in [CaseTag::A, CaseTag::C] {
                let q = match case {
                    CaseTag::A => s.raise().twice + t.twice,
                    _ if s.twice > t.twice => s.twice - t.twice - 1,
                    _ => continue,
                };
                let key = qlm_core::SectorKey::new(s, t, qlm_core::SpinLabel::from_twice(q)).unwrap();
                assert_eq!(key.case_tag, case);
                // 1×1 block: the entry is the eigenvalue
                let lam = theta_block(&key, n, &sc).unwrap().lam_pp;
                match case {
                    CaseTag::A => assert!(lam > 0.0, "A at ({s}, {t})"),
                    _ => assert!(lam < 0.0, "C at ({s}, {t})"),
                }
                checked += 1;
            }
        }
    }
    assert!(checked > 100);
}

#[test]
fn thread_count_does_not_change_the_result() {
    let run = |threads: usize, sc: PriorScenario| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| p_err_min(90, &sc).unwrap().p_exact)
    };
    for sc in main_scenarios() {
        assert_eq!(run(1, sc).to_bits(), run(7, sc).to_bits(), "{sc}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn spectrum_accounting(r1 in 0.0f64..=1.0, r2 in 0.0f64..=1.0, n in 1u32..=24) {
        let sc = PriorScenario::FixedPurities { r1, r2 };
        let entries = spectrum_report(n, &sc).unwrap();
        let tot = spectrum_totals(&entries);
        prop_assert!(tot.trace_sum.abs() < 1e-10 * entries.len() as f64);
        prop_assert_eq!(tot.total_multiplicity, 1u128 << (2 * n + 1));
        let p = p_err_min(n, &sc).unwrap().p_exact;
        prop_assert!(p >= helstrom_avg(&sc) - 1e-10 && p <= 0.5 + 1e-12);
    }

    #[test]
    fn error_decreases_for_random_purities(r1 in 0.0f64..=1.0, r2 in 0.0f64..=1.0, n in 1u32..=60) {
        let sc = PriorScenario::FixedPurities { r1, r2 };
        let a = p_err_min(n, &sc).unwrap().p_exact;
        let b = p_err_min(n + 1, &sc).unwrap().p_exact;
        prop_assert!(b <= a + 1e-12, "{} -> {}", a, b);
    }

    #[test]
    fn error_decreases_for_random_overlaps(theta in 0.0f64..=PI, n in 1u32..=80) {
        let sc = PriorScenario::FixedOverlap { theta };
        let a = p_err_min(n, &sc).unwrap().p_exact;
        let b = p_err_min(n + 1, &sc).unwrap().p_exact;
        prop_assert!(b <= a + 1e-12);
        prop_assert!(a >= helstrom_avg(&sc) - 1e-10);
    }
}
