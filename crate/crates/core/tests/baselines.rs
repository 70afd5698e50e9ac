#![allow(clippy::needless_range_loop)]

mod common;

use common::*;
use leobf::baselines::{mrt_beamformers, s3_assignment, s3_run, zf_beamformers, zf_inverse, S3Scheme};
use leobf::pipeline::Scheme;
use leobf::rate::sum_rate;
use leobf::schedule::{AnalogBeamformer, Schedule};
use leobf::C64;
use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;

#[test]
fn mrt_uses_full_budget_along_the_channel() {
    let mut r = rng(61);
    let syn = Synthetic::new(&mut r, 3, 5, 3, 2);
    let p = syn.problem(1.0, 0.7);
    let bf = mrt_beamformers(&p);
    bf.check_mask().unwrap();
    for k in 0..2 {
        for s in 0..3 {
            assert!(rel(bf.power(k, s, &syn.analog.gram[s]), 0.7) < 1e-12);
            for &u in &syn.schedule.served[s] {
                let g = syn.stats.g(s, u).conjugate();
                let w = bf.column(k, s, u).into_owned();
                // parallel with a common positive real scale
                let c = g.dotc(&w) / g.norm_squared();
                assert!(c.im.abs() < 1e-12 * c.re && c.re > 0.0);
                assert!((&w - &g * c).norm() < 1e-12 * w.norm());
            }
        }
    }
}

#[test]
fn zf_nulls_intra_satellite_interference() {
    let mut r = rng(62);
    for _ in 0..10 {
        let syn = Synthetic::new(&mut r, 2, 5, 3, 1);
        let p = syn.problem(1.0, 1.0);
        let (bf, regularized) = zf_beamformers(&p);
        assert!(!regularized);
        bf.check_mask().unwrap();
        for s in 0..2 {
            assert!(rel(bf.power(0, s, &syn.analog.gram[s]), 1.0) < 1e-12);
            let served = &syn.schedule.served[s];
            for &u in served {
                for &l in served {
                    let x = (syn.stats.g(s, u).transpose() * bf.column(0, s, l))[(0, 0)];
                    if u == l {
                        assert!(x.norm() > 1e-6);
                    } else {
                        assert!(x.norm() <= 1e-9 * bf.column(0, s, l).norm().max(1.0), "{x}");
                    }
                }
            }
        }
    }
}

#[test]
fn zf_equals_mrt_for_orthonormal_channels() {
    let mut r = rng(63);
    let mut syn = Synthetic::new(&mut r, 1, 2, 2, 1);
    let e = |i: usize| DVector::from_fn(2, |j, _| if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) });
    syn.stats.link_mut(0, 0).g_eff = e(0) * C64::from_polar(1.0, 0.3);
    syn.stats.link_mut(0, 1).g_eff = e(1) * C64::from_polar(1.0, -1.1);
    let mut f = DMatrix::zeros(4, 2);
    f[(0, 0)] = C64::new(1.0, 0.0);
    f[(1, 1)] = C64::new(1.0, 0.0);
    syn.analog = AnalogBeamformer::from_matrices(vec![f]);
    let p = syn.problem(1.0, 1.0);
    let (zf, _) = zf_beamformers(&p);
    let mrt = mrt_beamformers(&p);
    assert!((&zf.weights[0][0] - &mrt.weights[0][0]).norm() < 1e-12);
}

#[test]
fn rank_deficient_channels_fall_back_to_regularization() {
    let mut r = rng(64);
    let row = cvec(&mut r, 3).transpose();
    let h = DMatrix::from_fn(2, 3, |i, j| row[j] * C64::from((i + 1) as f64));
    let (w, regularized) = zf_inverse(&h);
    assert!(regularized);
    assert!(w.iter().all(|x| x.re.is_finite() && x.im.is_finite()));
    let wide = cmat(&mut r, 3, 2);
    assert!(zf_inverse(&wide).1);
    let good = cmat(&mut r, 2, 4);
    let (pinv, reg) = zf_inverse(&good);
    assert!(!reg);
    assert!((&good * &pinv - DMatrix::<C64>::identity(2, 2)).norm() < 1e-10);
}

#[test]
fn satellites_without_users_transmit_nothing() {
    let mut r = rng(65);
    let mut syn = Synthetic::new(&mut r, 2, 3, 2, 1);
    syn.schedule = Schedule::from_served(3, vec![vec![0, 2], vec![]]);
    let p = syn.problem(1.0, 1.0);
    for bf in [mrt_beamformers(&p), zf_beamformers(&p).0] {
        assert!(bf.w(0, 1).iter().all(|x| x.norm() == 0.0));
        assert!(rel(bf.power(0, 0, &syn.analog.gram[0]), 1.0) < 1e-12);
    }
}

#[test]
fn s3_assigns_each_user_to_at_most_one_satellite() {
    for seed in 1..=5 {
        let inst = instance(seed, 4, 16, (4, 4), 4);
        let a = s3_assignment(&inst.scenario, &inst.cfg);
        let mut count = [0; 16];
        for (s, users) in a.served.iter().enumerate() {
            assert!(users.len() <= 4);
            for &u in users {
                count[u] += 1;
                assert_eq!(a.serving[u], Some(s));
                // nearest satellite
                let d = inst.scenario.distance(s, u);
                assert!((0..4).all(|j| inst.scenario.distance(j, u) >= d));
            }
        }
        assert!(count.iter().all(|&c| c <= 1));
        for u in 0..16 {
            assert_eq!(a.serving[u].is_some(), count[u] == 1);
        }
    }
}

#[test]
fn s3_on_one_satellite_equals_the_networked_scheme() {
    let inst = instance(7, 1, 4, (4, 4), 4);
    for (net, s3) in [
        (Scheme::Mrt, Scheme::MrtS3),
        (Scheme::Zf, Scheme::ZfS3),
        (Scheme::Central, Scheme::WmmseS3),
    ] {
        let a = inst.run(net).unwrap().report.sum_rate_bps;
        let b = inst.run(s3).unwrap().report.sum_rate_bps;
        assert!(rel(a, b) < 1e-9, "{net}: {a} vs {s3}: {b}");
    }
}

#[test]
fn s3_output_is_feasible() {
    let inst = instance(8, 3, 12, (4, 4), 4);
    for which in [S3Scheme::Mrt, S3Scheme::Zf, S3Scheme::Wmmse] {
        let out = s3_run(
            &inst.cfg,
            &inst.scenario,
            &inst.stats,
            inst.noise,
            inst.budget_w,
            which,
            &inst.cfg.solver,
        )
        .unwrap();
        out.bf.check_mask().unwrap();
        out.bf.check_power(&out.analog, inst.budget_w, 1e-9).unwrap();
        assert!(out.report.sum_rate_bps > 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn mrt_beats_random_directions_for_a_lone_user(seed in 0u64..10_000) {
        let mut r = rng(seed);
        let mut syn = Synthetic::new(&mut r, 1, 1, 3, 1);
        let mut f = DMatrix::zeros(6, 3);
        for i in 0..3 {
            f[(i, i)] = C64::new(1.0, 0.0);
        }
        syn.analog = AnalogBeamformer::from_matrices(vec![f]);
        let p = syn.problem(1.0, 1.0);
        let mrt = sum_rate(&p, &mrt_beamformers(&p)).unwrap().objective;
        let rand = sum_rate(&p, &random_bf(&mut r, &p, 1.0)).unwrap().objective;
        prop_assert!(mrt >= rand - 1e-12);
    }

    #[test]
    fn zf_is_invariant_to_channel_scaling(seed in 0u64..10_000, c in 0.01f64..100.0) {
        let mut r = rng(seed);
        let syn = Synthetic::new(&mut r, 2, 4, 3, 1);
        let p = syn.problem(1.0, 1.0);
        let (a, _) = zf_beamformers(&p);
        let mut scaled = syn.stats.clone();
        for s in 0..2 {
            for u in 0..4 {
                let l = scaled.link_mut(s, u);
                l.g_eff *= C64::from(c);
            }
        }
        let q = leobf::beamformer::Problem { stats: &scaled, ..p };
        let (b, _) = zf_beamformers(&q);
        for s in 0..2 {
            prop_assert!((a.w(0, s) - b.w(0, s)).norm() <= 1e-9 * a.w(0, s).norm());
        }
    }
}
