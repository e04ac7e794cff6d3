use std::process::Command;

use noiselet_spc::experiment::{self, ExperimentSpec, ImageSource, Sampling};
use noiselet_spc::noiselet::Geometry;
use noiselet_spc::patterns::stream::read_bundle_stream;
use noiselet_spc::recon::{self, ReconConfig};
use noiselet_spc::scene;
use noiselet_spc::spc::{self, MeasurementMode};

#[test]
fn patterns_stream_framing_and_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let g = Geometry::square(256).unwrap();
    let (a, b) = (dir.path().join("a.nspb"), dir.path().join("b.nspb"));
    let ra = experiment::cmd_patterns(g, 512, 7, &a).unwrap();
    experiment::cmd_patterns(g, 512, 7, &b).unwrap();
    assert_eq!(ra.frames, 512usize.div_ceil(23));
    let (bytes_a, bytes_b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    assert_eq!(bytes_a, bytes_b);
    let (g2, bundles) = read_bundle_stream(&bytes_a[..]).unwrap();
    assert_eq!(g2, g);
    assert_eq!(bundles.len(), 23);
    assert_eq!(bundles.iter().map(|b| b.plane_count()).sum::<usize>(), 512);
}

#[test]
fn sample_record_sizes_and_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let img = scene::object_scene(64).unwrap();
    let out = dir.path().join("r.json");
    let rec = experiment::cmd_sample(&img, None, Sampling::Ratio(0.3), 1, 0.0, MeasurementMode::Plain, &out).unwrap();
    assert_eq!(rec.plan.m(), 1228);
    assert_eq!(rec.y_tilde.len(), 1228);
    assert_eq!(spc::measurement_count(&rec), 1229);
    assert_eq!(experiment::read_record(&out).unwrap(), rec);

    let diff = experiment::cmd_sample(&img, None, Sampling::Ratio(0.3), 1, 0.0, MeasurementMode::Differential, &out)
        .unwrap();
    assert_eq!(spc::measurement_count(&diff), 2 * 1229);
    assert_eq!(spc::DEFAULT_NOISE_SIGMA, 4e-4);
}

#[test]
fn sample_with_plan_file() {
    let dir = tempfile::tempdir().unwrap();
    let img = scene::object_scene(32).unwrap();
    let plan = noiselet_spc::patterns::make_plan(img.geometry().unwrap(), 200, 5).unwrap();
    let plan_path = dir.path().join("plan.json");
    std::fs::write(&plan_path, plan.to_json().unwrap()).unwrap();
    let out = dir.path().join("r.json");
    let rec = experiment::cmd_sample(&img, Some(&plan_path), Sampling::Count(0), 0, 0.0, MeasurementMode::Plain, &out)
        .unwrap();
    assert_eq!(rec.plan, plan);

    let other = scene::object_scene(64).unwrap();
    assert!(experiment::cmd_sample(&other, Some(&plan_path), Sampling::Count(0), 0, 0.0, MeasurementMode::Plain, &out)
        .is_err());
}

#[test]
fn full_sampling_pipeline_identity() {
    let dir = tempfile::tempdir().unwrap();
    let img = scene::object_scene(64).unwrap();
    let rec_path = dir.path().join("r.json");
    for mode in [MeasurementMode::Plain, MeasurementMode::Differential] {
        experiment::cmd_sample(&img, None, Sampling::Ratio(1.0), 3, 0.0, mode, &rec_path).unwrap();
        let (out, metrics) = experiment::cmd_recover(
            &rec_path,
            Some(&img),
            None,
            100,
            &dir.path().join("x.pgm"),
            &dir.path().join("x.tsv"),
        )
        .unwrap();
        let err = out.pixels().iter().zip(img.pixels()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        assert!(err < 1e-6, "{err}");
        assert!(metrics.psnr.unwrap() > 90.0);
        assert_eq!(metrics.method, "direct");
    }
}

#[test]
fn partial_sampling_recovers_sparse_phantom() {
    let dir = tempfile::tempdir().unwrap();
    let (img, _) = scene::sparse_haar_image(Geometry::square(64).unwrap(), 0.03, 2).unwrap();
    let rec_path = dir.path().join("r.json");
    experiment::cmd_sample(&img, None, Sampling::Ratio(0.3), 4, 0.0, MeasurementMode::Plain, &rec_path).unwrap();
    let metrics_path = dir.path().join("x.tsv");
    let (_, metrics) =
        experiment::cmd_recover(&rec_path, Some(&img), None, 5000, &dir.path().join("x.pgm"), &metrics_path).unwrap();
    assert_eq!(metrics.method, "bpdn");
    assert!(metrics.psnr.unwrap() > 60.0, "{:?}", metrics.psnr);

    let (_, without) =
        experiment::cmd_recover(&rec_path, None, None, 5000, &dir.path().join("y.pgm"), &metrics_path).unwrap();
    assert!(without.psnr.is_none());
    let text = std::fs::read_to_string(&metrics_path).unwrap();
    assert!(!text.contains("psnr"));
}

#[test]
fn noiseless_sweep_on_sparse_phantom_is_monotone() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        image: ImageSource::SparseHaar { fraction: 0.02, seed: 1 },
        geometry: Some(Geometry::square(64).unwrap()),
        center_crop: false,
        ratios: vec![0.1, 0.3, 1.0],
        seeds: (0..5).collect(),
        noise_sigma: 0.0,
        mode: MeasurementMode::Plain,
        recon: ReconConfig::default(),
        epsilon_override: None,
        register: false,
        bpdn_at_full: false,
        output_dir: dir.path().to_path_buf(),
    };
    let report = experiment::cmd_sweep(&spec).unwrap();
    let rows = &report.rows;
    assert_eq!(rows.len(), 3);
    assert!(rows.windows(2).all(|w| w[1].mean_psnr >= w[0].mean_psnr), "{rows:?}");
    assert!(rows[2].std_psnr.abs() < 1e-9 || rows[2].mean_psnr.is_infinite());
    let table = std::fs::read_to_string(dir.path().join("sweep.tsv")).unwrap();
    assert_eq!(table.lines().count(), 4);
    let cells = std::fs::read_to_string(dir.path().join("sweep_cells.tsv")).unwrap();
    assert_eq!(cells.lines().count(), 16);
}

#[test]
fn recovered_image_matches_library_path() {
    let img = scene::object_scene(32).unwrap();
    let rec = experiment::sample(&img, 512, 0, 4e-4, MeasurementMode::Plain).unwrap();
    let a = experiment::recover(&rec, None, 300).unwrap();
    let y = spc::restore_complex(&rec).unwrap();
    let config = ReconConfig { epsilon: spc::noise_epsilon(&rec), max_iters: 300, ..ReconConfig::default() };
    let b = recon::solve_bpdn(&y, &rec.plan, &config).unwrap();
    assert_eq!(a.image, b.image);
}

#[test]
fn binary_reports_errors_on_one_line() {
    let bin = env!("CARGO_BIN_EXE_spc");
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin)
        .args(["sample", "-i", "missing.pgm", "-m", "4", "-o"])
        .arg(dir.path().join("r.json"))
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(err.starts_with("spc: "));

    let ok = Command::new(bin).arg("selftest").output().unwrap();
    assert!(ok.status.success());
    assert!(String::from_utf8(ok.stdout).unwrap().lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn binary_patterns_prints_throughput() {
    let bin = env!("CARGO_BIN_EXE_spc");
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(bin)
        .args(["patterns", "--size", "64", "--ratio", "0.25", "--seed", "3", "-o"])
        .arg(dir.path().join("p.nspb"))
        .output()
        .unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.starts_with("bundles/s: ")).unwrap();
    let (b, p) = line.trim_start_matches("bundles/s: ").split_once(", patterns/s: ").unwrap();
    assert!(b.parse::<f64>().unwrap() > 0.0 && p.parse::<f64>().unwrap() > 0.0);
}
