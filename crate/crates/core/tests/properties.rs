use noiselet_spc::haar::{haar_analyze, haar_synthesize, max_levels};
use noiselet_spc::noiselet::{self, fnt, fnt2d, ComplexField, Direction, Geometry, NoiseletOrder};
use noiselet_spc::patterns::stream::{read_bundle_stream, write_bundle_stream};
use noiselet_spc::patterns::{
    gen_bundle, gen_pattern_fast, make_plan, max_planes, BundledPatterns, PatternKind, PlaneDescriptor,
    SamplingPlan,
};
use noiselet_spc::spc::{self, MeasurementMode, MeasurementRecord, SceneImage};
use noiselet_spc::Image;
use proptest::prelude::*;

fn geometry_for(q: u32) -> Geometry {
    Geometry::new(1 << q.div_ceil(2), 1 << (q / 2)).unwrap()
}

fn complex_vec(q: u32) -> impl Strategy<Value = ComplexField> {
    let n = 1usize << q;
    (prop::collection::vec(-1.0f64..1.0, n), prop::collection::vec(-1.0f64..1.0, n))
        .prop_map(|(re, im)| ComplexField::vector(re, im).unwrap())
}

fn q_and_vec(max_q: u32) -> impl Strategy<Value = (u32, ComplexField)> {
    (1..=max_q).prop_flat_map(|q| (Just(q), complex_vec(q)))
}

fn plan_strategy(max_q: u32) -> impl Strategy<Value = SamplingPlan> {
    (1..=max_q, any::<u64>(), 0.0f64..1.0).prop_map(|(q, seed, frac)| {
        let g = geometry_for(q);
        let pairs = 1 + (frac * (g.n() / 2 - 1) as f64) as usize;
        make_plan(g, 2 * pairs, seed).unwrap()
    })
}

fn dot(a: &ComplexField, b: &ComplexField) -> f64 {
    a.re().iter().zip(b.re()).map(|(x, y)| x * y).sum::<f64>()
        + a.im().iter().zip(b.im()).map(|(x, y)| x * y).sum::<f64>()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn fnt_preserves_norm((q, v) in q_and_vec(10)) {
        let order = NoiseletOrder::new(q).unwrap();
        for dir in [Direction::Forward, Direction::Inverse] {
            let w = fnt(&v, order, dir).unwrap();
            prop_assert!((w.norm() - v.norm()).abs() <= 1e-12 * v.norm().max(1.0));
        }
    }

    #[test]
    fn fnt_round_trip((q, v) in q_and_vec(10)) {
        let order = NoiseletOrder::new(q).unwrap();
        let back = fnt(&fnt(&v, order, Direction::Forward).unwrap(), order, Direction::Inverse).unwrap();
        prop_assert!(back.max_abs_diff(&v) < 1e-12);
    }

    #[test]
    fn fnt_is_linear((q, u) in q_and_vec(8), a in -2.0f64..2.0, b in -2.0f64..2.0, seed in any::<u64>()) {
        let order = NoiseletOrder::new(q).unwrap();
        let n = order.n();
        let v = ComplexField::vector(
            (0..n).map(|i| ((seed.wrapping_add(i as u64) % 97) as f64) / 97.0).collect(),
            (0..n).map(|i| ((seed.wrapping_mul(3).wrapping_add(i as u64) % 89) as f64) / 89.0).collect(),
        ).unwrap();
        let mix = |x: &ComplexField, y: &ComplexField| {
            ComplexField::vector(
                x.re().iter().zip(y.re()).map(|(p, r)| a * p + b * r).collect(),
                x.im().iter().zip(y.im()).map(|(p, r)| a * p + b * r).collect(),
            ).unwrap()
        };
        let lhs = fnt(&mix(&u, &v), order, Direction::Forward).unwrap();
        let rhs = mix(&fnt(&u, order, Direction::Forward).unwrap(), &fnt(&v, order, Direction::Forward).unwrap());
        prop_assert!(lhs.max_abs_diff(&rhs) < 1e-11);
    }

    #[test]
    fn inverse_is_adjoint((q, u) in q_and_vec(8), seed in any::<u64>()) {
        // Real inner product <N u, v> = <u, N^H v>.
        let order = NoiseletOrder::new(q).unwrap();
        let n = order.n();
        let v = ComplexField::vector(
            (0..n).map(|i| (((seed >> (i % 32)) & 7) as f64) - 3.5).collect(),
            (0..n).map(|i| (((seed >> ((i + 5) % 32)) & 3) as f64) - 1.5).collect(),
        ).unwrap();
        let lhs = dot(&fnt(&u, order, Direction::Forward).unwrap(), &v);
        let rhs = dot(&u, &fnt(&v, order, Direction::Inverse).unwrap());
        prop_assert!((lhs - rhs).abs() < 1e-10 * (1.0 + lhs.abs()));
    }

    #[test]
    fn fnt2d_equals_flat_transform((q, v) in q_and_vec(10)) {
        let g = geometry_for(q);
        let img = ComplexField::from_parts(v.re().to_vec(), v.im().to_vec(), g.rows(), g.cols()).unwrap();
        let two_d = fnt2d(&img, Direction::Forward).unwrap();
        let flat = fnt(&v, g.order(), Direction::Forward).unwrap();
        let two_d = ComplexField::vector(two_d.re().to_vec(), two_d.im().to_vec()).unwrap();
        prop_assert!(two_d.max_abs_diff(&flat) < 1e-13);
    }

    #[test]
    fn haar_round_trip_and_energy(q in 0u32..=10, seed in any::<u64>(), levels_frac in 0.0f64..=1.0) {
        let g = geometry_for(q);
        let levels = (levels_frac * f64::from(max_levels(g))).round() as u32;
        let x: Vec<f64> = (0..g.n()).map(|i| ((seed.rotate_left(i as u32 % 64) % 1000) as f64) / 1000.0).collect();
        let c = haar_analyze(&x, g, levels).unwrap();
        let energy: f64 = x.iter().map(|v| v * v).sum();
        prop_assert!((c.l2_norm().powi(2) - energy).abs() < 1e-10 * energy.max(1.0));
        let back = haar_synthesize(&c).unwrap();
        prop_assert!(back.iter().zip(&x).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn plan_is_deterministic_and_mirrored(plan in plan_strategy(12)) {
        let again = make_plan(plan.geometry(), plan.m(), plan.seed()).unwrap();
        prop_assert_eq!(&again, &plan);
        let (n, m) = (plan.n(), plan.m());
        let upper = plan.upper_rows();
        prop_assert!(upper.windows(2).all(|w| w[0] < w[1]));
        prop_assert!(upper.iter().all(|&k| (1..=n / 2).contains(&k)));
        for j in 1..=m {
            prop_assert_eq!(plan.row_at(m + 1 - j), n + 1 - plan.row_at(j));
        }
        let back = SamplingPlan::from_json(&plan.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, plan);
    }

    #[test]
    fn bundle_planes_equal_single_patterns(
        q in 1u32..=10,
        width in 3u32..=64,
        picks in prop::collection::vec((any::<prop::sample::Index>(), any::<bool>(), any::<bool>()), 1..=62),
    ) {
        let order = NoiseletOrder::new(q).unwrap();
        let l = picks.len().min(max_planes(width));
        let descriptors: Vec<PlaneDescriptor> = picks[..l]
            .iter()
            .map(|(idx, b, c)| PlaneDescriptor {
                kind: if *b { PatternKind::B } else { PatternKind::A },
                row: idx.index(order.n()) + 1,
                complement: *c,
            })
            .collect();
        let bundle = gen_bundle(&descriptors, order, width).unwrap();
        for (t, d) in descriptors.iter().enumerate() {
            let mut single = gen_pattern_fast(d.row, d.kind, order).unwrap();
            if d.complement {
                single.iter_mut().for_each(|v| *v ^= 1);
            }
            prop_assert_eq!(bundle.plane(t), single);
        }
        let guard = u64::MAX.checked_shl(l as u32).unwrap_or(0);
        prop_assert!(bundle.planes.iter().all(|w| w & guard == 0));
    }

    #[test]
    fn bundle_stream_round_trip(plan in plan_strategy(8), width in 3u32..=25) {
        let source = BundledPatterns::with_width(plan.clone(), width).unwrap();
        let bundles: Vec<_> = source.bundles().collect::<Result<_, _>>().unwrap();
        let bytes = write_bundle_stream(Vec::new(), plan.geometry(), &bundles).unwrap();
        let (g, back) = read_bundle_stream(&bytes[..]).unwrap();
        prop_assert_eq!(g, plan.geometry());
        prop_assert_eq!(back, bundles);
    }

    #[test]
    fn noiseless_measurement_restores_coefficients(plan in plan_strategy(10), seed in any::<u64>(), diff in any::<bool>()) {
        let g = plan.geometry();
        let pixels: Vec<f64> = (0..g.n()).map(|i| ((seed.rotate_left(i as u32 % 64) % 255) as f64) / 255.0).collect();
        let x = SceneImage::new(Image::new(g.rows(), g.cols(), pixels.clone()).unwrap()).unwrap();
        let mode = if diff { MeasurementMode::Differential } else { MeasurementMode::Plain };
        let rec = spc::measure(&BundledPatterns::new(plan.clone()), &x, 0.0, mode, 0).unwrap();
        let y = spc::restore_complex(&rec).unwrap();
        let (mut re, mut im) = (pixels, vec![0.0; g.n()]);
        noiselet::fnt_in_place(&mut re, &mut im, Direction::Forward).unwrap();
        for (pos, k) in plan.rows().into_iter().enumerate() {
            prop_assert!((y.re()[pos] - re[k - 1]).abs() < 1e-9);
            prop_assert!((y.im()[pos] - im[k - 1]).abs() < 1e-9);
        }
        let back = MeasurementRecord::from_json(&rec.to_json().unwrap()).unwrap();
        prop_assert_eq!(back, rec);
    }

    #[test]
    fn measurement_is_linear(plan in plan_strategy(8), a in 0.0f64..1.0, seed in any::<u64>()) {
        let g = plan.geometry();
        let img = |salt: u64| {
            let px = (0..g.n()).map(|i| ((seed ^ salt).rotate_left(i as u32 % 64) % 100) as f64 / 200.0).collect();
            Image::new(g.rows(), g.cols(), px).unwrap()
        };
        let (x1, x2) = (img(1), img(2));
        let mixed = Image::new(
            g.rows(),
            g.cols(),
            x1.pixels().iter().zip(x2.pixels()).map(|(p, r)| a * p + (1.0 - a) * r).collect(),
        ).unwrap();
        let source = BundledPatterns::new(plan);
        let read = |x: &Image| {
            spc::measure(&source, &SceneImage::new(x.clone()).unwrap(), 0.0, MeasurementMode::Plain, 0).unwrap()
        };
        let (r1, r2, rm) = (read(&x1), read(&x2), read(&mixed));
        for t in 0..rm.y_tilde.len() {
            prop_assert!((rm.y_tilde[t] - (a * r1.y_tilde[t] + (1.0 - a) * r2.y_tilde[t])).abs() < 1e-9);
        }
    }
}
