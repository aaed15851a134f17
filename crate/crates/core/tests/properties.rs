use lamstat::generators::{gen_bit_average, gen_interleave, gen_pair_embedding, Pair};
use lamstat::probe::{
    modulus_estimate, ward_preservation_test, Domain, Family, FunctionKind, FunctionSpec,
};
use lamstat::quasicauchy::{diff, qc_profile, QcConfig, QcVerdict};
use lamstat::schedules::{LacunarySchedule, LambdaSchedule};
use lamstat::summability::{
    lambda_density, matrix_a_transform, strong_residual, vp_mean, SequencePrefix,
};
use proptest::prelude::*;

fn values(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-10.0f64..10.0, len)
}

/// Increments in {0, 0.5, 1} starting at 1.
fn lambda_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop::sample::select(vec![0.0, 0.5, 1.0]), 0..80).prop_map(|incs| {
        let mut v = vec![1.0];
        for d in incs {
            let next = v[v.len() - 1] + d;
            v.push(next);
        }
        v
    })
}

fn builtin(len: usize) -> Vec<LambdaSchedule> {
    LambdaSchedule::BUILTIN_IDS
        .iter()
        .map(|id| LambdaSchedule::builtin(id, len).unwrap())
        .collect()
}

proptest! {
    #[test]
    fn window_counts_are_bounded(v in lambda_values()) {
        let s = LambdaSchedule::validate("p", v).unwrap();
        for n in 1..=s.len() {
            let lambda = s.lambda(n).unwrap();
            prop_assert!(lambda <= n as f64);
            let w = s.window(n).unwrap();
            let brute = (1..=n).filter(|&k| (n as f64) - lambda + 1.0 <= k as f64).count();
            prop_assert_eq!(w.len(), brute);
            prop_assert!(!w.is_empty());
            prop_assert!(w.len() as f64 <= lambda.ceil());
        }
    }

    #[test]
    fn revalidation_is_idempotent(v in lambda_values(), cuts in prop::collection::btree_set(1usize..500, 1..12), margin in 0.0f64..1.0) {
        let s = LambdaSchedule::validate("p", v).unwrap();
        let again = LambdaSchedule::validate(s.name(), s.values().to_vec()).unwrap();
        prop_assert_eq!(&s, &again);
        let mut k = vec![0];
        k.extend(cuts);
        let l = LacunarySchedule::validate(k, margin).unwrap();
        prop_assert_eq!(&l, &LacunarySchedule::validate(l.cuts().to_vec(), margin).unwrap());
    }

    #[test]
    fn vp_mean_is_linear(x in values(1..60), a in -5.0f64..5.0, b in -5.0f64..5.0, seed in any::<u64>()) {
        let len = x.len();
        let y: Vec<f64> = (0..len).map(|i| ((seed.wrapping_add(i as u64) % 1000) as f64) / 100.0 - 5.0).collect();
        let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let (xs, ys, zs) = (
            SequencePrefix::new(x.clone()).unwrap(),
            SequencePrefix::new(y.clone()).unwrap(),
            SequencePrefix::new(z).unwrap(),
        );
        for s in builtin(len) {
            for n in 1..=len {
                let lhs = vp_mean(&zs, &s, n).unwrap();
                let rhs = a * vp_mean(&xs, &s, n).unwrap() + b * vp_mean(&ys, &s, n).unwrap();
                let w = s.window(n).unwrap();
                let scale: f64 = w.indices().map(|k| a.abs() * x[k - 1].abs() + b.abs() * y[k - 1].abs()).sum::<f64>() / s.lambda(n).unwrap();
                prop_assert!((lhs - rhs).abs() <= 1e-12 * scale.max(1e-300), "n={} lhs={} rhs={}", n, lhs, rhs);
            }
        }
    }

    #[test]
    fn density_monotone_in_epsilon(x in values(1..80), e1 in 0.01f64..5.0, e2 in 0.01f64..5.0, center in -3.0f64..3.0) {
        let (lo, hi) = if e1 <= e2 { (e1, e2) } else { (e2, e1) };
        let xs = SequencePrefix::new(x).unwrap();
        for s in builtin(xs.len()) {
            let a = lambda_density(&xs, &s, center, lo).unwrap();
            let b = lambda_density(&xs, &s, center, hi).unwrap();
            for (da, db) in a.densities.iter().zip(&b.densities) {
                prop_assert!(da >= db);
            }
        }
    }

    #[test]
    fn density_bounded_by_window_share(x in values(1..80), eps in 0.01f64..5.0, v in lambda_values()) {
        let s = LambdaSchedule::validate("p", v).unwrap();
        let len = x.len().min(s.len());
        let xs = SequencePrefix::new(x[..len].to_vec()).unwrap();
        let p = lambda_density(&xs, &s, 0.0, eps).unwrap();
        for n in 1..=len {
            let d = p.at(n).unwrap();
            prop_assert!(d >= 0.0);
            prop_assert!(d <= s.window(n).unwrap().len() as f64 / s.lambda(n).unwrap());
        }
    }

    #[test]
    fn markov_bound(x in values(1..80), eps in 0.01f64..5.0, center in -3.0f64..3.0) {
        let xs = SequencePrefix::new(x).unwrap();
        for s in builtin(xs.len()) {
            let d = lambda_density(&xs, &s, center, eps).unwrap();
            for n in 1..=xs.len() {
                prop_assert!(d.at(n).unwrap() <= strong_residual(&xs, &s, center, n).unwrap() / eps);
            }
        }
    }

    #[test]
    fn split_subadditivity(u in values(1..60), v in values(1..60), z in values(1..60), eps in 0.01f64..5.0) {
        let len = u.len().min(v.len()).min(z.len());
        let (u, v, z) = (&u[..len], &v[..len], &z[..len]);
        let seq = |x: Vec<f64>| SequencePrefix::new(x).unwrap();
        let two = seq(u.iter().zip(v).map(|(a, b)| a + b).collect());
        let three = seq(u.iter().zip(v).zip(z).map(|((a, b), c)| a + b + c).collect());
        let (us, vs, zs) = (seq(u.to_vec()), seq(v.to_vec()), seq(z.to_vec()));
        for s in builtin(len) {
            // Window counts d_n·λ_n: the densities share λ_n, and a sum of rounded
            // quotients can land one ulp below the quotient of the summed counts.
            let d = |x: &SequencePrefix, e: f64| -> Vec<f64> {
                let p = lambda_density(x, &s, 0.0, e).unwrap();
                (1..=len).map(|n| (p.at(n).unwrap() * s.lambda(n).unwrap()).round()).collect()
            };
            let (w2, u2, v2) = (d(&two, eps), d(&us, eps / 2.0), d(&vs, eps / 2.0));
            let (w3, u3, v3, z3) = (d(&three, eps), d(&us, eps / 3.0), d(&vs, eps / 3.0), d(&zs, eps / 3.0));
            for n in 0..len {
                prop_assert!(w2[n] <= u2[n] + v2[n]);
                prop_assert!(w3[n] <= u3[n] + v3[n] + z3[n]);
            }
        }
    }

    #[test]
    fn matrix_a_of_constant_is_zero(c in -100.0f64..100.0, len in 2usize..50) {
        let xs = SequencePrefix::new(vec![c; len]).unwrap();
        for s in builtin(len) {
            let y = matrix_a_transform(&xs, &s).unwrap();
            prop_assert_eq!(y.len(), len - 1);
            prop_assert!(y.values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn diff_is_linear(x in values(2..60), a in -5.0f64..5.0, b in -5.0f64..5.0) {
        let y: Vec<f64> = x.iter().rev().map(|v| v * 0.5 + 1.0).collect();
        let z: Vec<f64> = x.iter().zip(&y).map(|(p, q)| a * p + b * q).collect();
        let dz = diff(&SequencePrefix::new(z).unwrap()).unwrap();
        let dx = diff(&SequencePrefix::new(x.clone()).unwrap()).unwrap();
        let dy = diff(&SequencePrefix::new(y.clone()).unwrap()).unwrap();
        for i in 0..dz.len() {
            let rhs = a * dx.values()[i] + b * dy.values()[i];
            let scale = a.abs() * (x[i].abs() + x[i + 1].abs()) + b.abs() * (y[i].abs() + y[i + 1].abs());
            prop_assert!((dz.values()[i] - rhs).abs() <= 1e-12 * scale.max(1e-300));
        }
    }

    #[test]
    fn small_steps_have_zero_density(x0 in -5.0f64..5.0, steps in prop::collection::vec(-1.0f64..1.0, 1..80), eps in 0.01f64..1.0) {
        // Build a prefix whose steps are all strictly below ε.
        let mut v = vec![x0];
        for s in steps {
            let next = v[v.len() - 1] + s * eps * 0.99;
            v.push(next);
        }
        let xs = SequencePrefix::new(v).unwrap();
        let d = diff(&xs).unwrap();
        prop_assume!(d.values().iter().all(|s| s.abs() < eps));
        for s in builtin(d.len()) {
            prop_assert!(lambda_density(&d, &s, 0.0, eps).unwrap().densities.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn qc_verdict_ignores_constant_shift(steps in prop::collection::vec(-1.0f64..1.0, 10..200), shift in -4.0f64..4.0) {
        // Dyadic steps keep every partial sum and its shift exact.
        let mut v = vec![0.0];
        for (k, s) in steps.iter().enumerate() {
            let step = (s * 64.0).round() / 64.0 / ((k + 1) as f64).log2().ceil().exp2();
            let next = v[v.len() - 1] + step;
            v.push(next);
        }
        let shift = (shift * 8.0).round() / 8.0;
        let x = SequencePrefix::new(v.clone()).unwrap();
        let y = SequencePrefix::new(v.iter().map(|t| t + shift).collect()).unwrap();
        prop_assume!(diff(&x).unwrap() == diff(&y).unwrap());
        let s = LambdaSchedule::floor_sqrt(v.len());
        let a = qc_profile(&x, &s, &QcConfig::default()).unwrap();
        let b = qc_profile(&y, &s, &QcConfig::default()).unwrap();
        prop_assert_eq!(a.verdict, b.verdict);
    }

    #[test]
    fn qc_evidence_means_clean_tail_windows(steps in prop::collection::vec(-1.0f64..1.0, 10..300)) {
        let mut v = vec![0.0];
        for (k, s) in steps.iter().enumerate() {
            let next = v[v.len() - 1] + s / (k + 1) as f64;
            v.push(next);
        }
        let x = SequencePrefix::new(v).unwrap();
        let cfg = QcConfig::default();
        for s in builtin(x.len()) {
            let d = qc_profile(&x, &s, &cfg).unwrap();
            if d.verdict != QcVerdict::QcEvidence {
                continue;
            }
            let steps_len = x.len() - 1;
            let tail_start = steps_len - d.tail_steps + 1;
            let eps = d.max_recent_step * 1.000_001 + f64::MIN_POSITIVE;
            let dens = lambda_density(&diff(&x).unwrap(), &s, 0.0, eps).unwrap();
            for n in tail_start..=steps_len {
                if s.window(n).unwrap().lo >= tail_start {
                    prop_assert_eq!(dens.at(n).unwrap(), 0.0);
                }
            }
        }
    }

    #[test]
    fn bit_average_step_bound(bits in prop::collection::vec(0u8..2, 1..2000)) {
        let a = gen_bit_average(&bits).unwrap();
        let v = a.values();
        prop_assert!(v.iter().all(|&x| (0.0..=1.0).contains(&x)));
        for n in 1..v.len() {
            prop_assert!(n as f64 * (v[n] - v[n - 1]).abs() <= 1.0);
        }
    }

    #[test]
    fn interleave_positions(x in values(1..50), x0 in -3.0f64..3.0) {
        let xs = SequencePrefix::new(x.clone()).unwrap();
        let out = gen_interleave(&xs, x0).unwrap();
        prop_assert_eq!(out.len(), 2 * x.len());
        for (i, &v) in x.iter().enumerate() {
            prop_assert_eq!(out.get(2 * i + 1), Some(v));
            prop_assert_eq!(out.get(2 * i + 2), Some(x0));
        }
    }

    #[test]
    fn embedding_anchors_and_bridges(raw in prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0), 1..40)) {
        let pairs: Vec<Pair> = raw.iter().map(|&(xi, eta)| Pair { xi, eta }).collect();
        let e = gen_pair_embedding(&pairs).unwrap();
        let v = e.sequence.values();
        prop_assert!(e.anchor_indices.windows(2).all(|w| w[0] < w[1]));
        for (p, &j) in pairs.iter().zip(&e.anchor_indices) {
            prop_assert_eq!(v[j - 2].to_bits(), p.xi.to_bits());
            prop_assert_eq!(v[j - 1].to_bits(), p.eta.to_bits());
        }
        for i in 1..pairs.len() {
            let bound = 1.0 / (i + 1) as f64;
            for k in e.anchor_indices[i - 1]..e.anchor_indices[i] - 1 {
                prop_assert!((v[k] - v[k - 1]).abs() <= bound);
            }
        }
    }

    #[test]
    fn modulus_monotone_and_shift_invariant(slope in -3.0f64..3.0, shift in -5.0f64..5.0, mut deltas in prop::collection::vec(0.05f64..0.5, 1..6)) {
        let domain = Domain::new(-1.0, 1.0).unwrap();
        let table: Vec<(f64, f64)> = (0..=40).map(|i| {
            let x = -1.0 + i as f64 * 0.05;
            (x, (slope * x).sin() + x * x)
        }).collect();
        let f = FunctionSpec::new(FunctionKind::Table { points: table.clone() }, domain).unwrap();
        let g = FunctionSpec::new(
            FunctionKind::Table { points: table.iter().map(|&(x, y)| (x, y + shift)).collect() },
            domain,
        ).unwrap();
        let h = 0.01;
        let mf = modulus_estimate(&f, &deltas, h).unwrap();
        let mg = modulus_estimate(&g, &deltas, h).unwrap();
        deltas.sort_by(f64::total_cmp);
        for w in mf.windows(2) {
            prop_assert!(w[0].delta <= w[1].delta);
            prop_assert!(w[0].omega <= w[1].omega);
        }
        for (a, b) in mf.iter().zip(&mg) {
            prop_assert!((a.omega - b.omega).abs() <= 1e-12 * (1.0 + shift.abs()) * 16.0);
        }
    }
}

#[test]
fn lipschitz_domination_on_walks() {
    for (slope, intercept) in [(2.0, 1.0), (-0.5, 3.0), (3.0, 0.0)] {
        let f = FunctionSpec::new(
            FunctionKind::Affine { slope, intercept },
            Domain::new(-2.0, 2.0).unwrap(),
        )
        .unwrap();
        let fam = Family::ShrinkingWalks {
            count: 20,
            len: 800,
            lo: -2.0,
            hi: 2.0,
            seed: 4,
        };
        for s in builtin(800) {
            let r = ward_preservation_test(&f, &fam, &s, &QcConfig::default(), Some(slope.abs()))
                .unwrap();
            assert_eq!(
                r.all_dominated,
                Some(true),
                "slope {slope} schedule {}",
                s.name()
            );
        }
    }
}
