//! Acceptance gate: one test per acceptance criterion, each printing a
//! single pass/fail line. Residual thresholds here are the contract; the
//! per-check tolerances inside the gallery may be stricter but never looser.

use std::process::Command;
use twistorlab::fiber::{standard_center, FiberChart};
use twistorlab::linalg::skew_anticommutator_basis;
use twistorlab::report::{run_case, strip_wall_times, CheckRecord, RunConfig};
use twistorlab::RMat;

fn record(case: &str, check: &str, samples: usize) -> CheckRecord {
    let mut config = RunConfig::new(case);
    config.samples = samples;
    config.check_filter = Some(check.to_string());
    let report = run_case(&config)
        .unwrap_or_else(|e| panic!("running {case}/{check} failed: {e}"));
    assert_eq!(
        report.checks.len(),
        1,
        "filter {check} matched {} checks in {case}",
        report.checks.len()
    );
    report.checks.into_iter().next().expect("one record")
}

fn residual(case: &str, check: &str, samples: usize) -> f64 {
    let rec = record(case, check, samples);
    rec.residual
        .unwrap_or_else(|| panic!("{case}/{check} invalid: {:?}", rec.note))
}

fn assert_bound(case: &str, check: &str, samples: usize, bound: f64) -> f64 {
    let r = residual(case, check, samples);
    assert!(r <= bound, "{case}/{check}: residual {r} exceeds {bound}");
    r
}

fn assert_floor(case: &str, check: &str, samples: usize, floor: f64) -> f64 {
    let r = residual(case, check, samples);
    assert!(r >= floor, "{case}/{check}: residual {r} below floor {floor}");
    r
}

#[test]
fn criterion_01_fiber_dimensions_are_exact_integers() {
    for n in 1..=3usize {
        let j0 = standard_center(n);
        assert_eq!(FiberChart::general(&j0).unwrap().dim(), 2 * n * n);
        let skew = skew_anticommutator_basis(&j0, &RMat::identity(2 * n, 2 * n)).unwrap();
        assert_eq!(skew.len(), n * (n - 1));
        if n > 1 {
            let metric = FiberChart::metric(&j0, &RMat::identity(2 * n, 2 * n)).unwrap();
            assert_eq!(metric.dim(), n * (n - 1));
        }
    }
    assert_eq!(assert_bound("flat_cn", "fiber_dimension_general", 1, 0.0), 0.0);
    assert_eq!(assert_bound("flat_cn", "fiber_dimension_metric", 1, 0.0), 0.0);
    println!("PASS criterion 1: structure-space dimensions 2n^2 and n(n-1) exact for n=1,2,3");
}

#[test]
fn criterion_02_closed_nijenhuis_matches_finite_differences_everywhere() {
    let mut worst: f64 = 0.0;
    for key in twistorlab::gallery::case_keys() {
        // 50 sampled tangent pairs per case, including the negative control
        worst = worst.max(assert_bound(key, "nijenhuis_oracle_agreement", 50, 1e-4));
    }
    println!(
        "PASS criterion 2: closed-form vs finite-difference Nijenhuis within 1e-4 \
         on 50 pairs for all 10 cases (worst {worst:.3e})"
    );
}

#[test]
fn criterion_03_integrable_cases_pass_and_control_fails() {
    let a = assert_bound("hopf_skt", "twistor_nijenhuis_vanishes", 40, 1e-5);
    let b = assert_bound("cp1_fubini_study", "twistor_nijenhuis_vanishes", 40, 1e-5);
    let c = assert_bound(
        "complex_curve_any_connection",
        "twistor_nijenhuis_vanishes",
        40,
        1e-5,
    );
    // frozen witness on the control, plus the commutator localization of the
    // obstruction acting on the antiholomorphic subbundle
    let w = assert_floor("torus_02_control", "metric_nijenhuis_witness", 1, 1e-2);
    let o = assert_floor("torus_02_control", "obstruction_witness", 1, 1e-2);
    println!(
        "PASS criterion 3: integrable residuals {a:.1e}/{b:.1e}/{c:.1e} <= 1e-5; \
         control witness {w:.2e} and localized obstruction {o:.2e} >= 1e-2"
    );
}

#[test]
fn criterion_04_scalar_curvature_loophole() {
    let nij = assert_bound("scalar_02_loophole", "twistor_nijenhuis_vanishes", 40, 1e-5);
    let curv = assert_floor("scalar_02_loophole", "curvature_02_part_nonzero", 10, 1e-1);
    println!(
        "PASS criterion 4: loophole integrable (Nijenhuis {nij:.1e}) despite \
         (0,2) curvature of size {curv:.2e}"
    );
}

#[test]
fn criterion_05_canonical_connections_preserve_structures() {
    let plus = assert_bound("hopf_skt", "bismut_plus_preserves_structure", 40, 1e-6);
    let fixed = assert_bound("hopf_skt", "parallel_modification_fixes_structure", 40, 1e-6);
    let chern = assert_bound("hopf_skt", "parallel_modification_equals_chern", 40, 1e-6);
    println!(
        "PASS criterion 5: plus-connection keeps the structure ({plus:.1e}), modified \
         connection keeps it ({fixed:.1e}) and equals the hermitian-holomorphic one \
         coefficientwise ({chern:.1e})"
    );
}

#[test]
fn criterion_06_sections_are_holomorphic_exactly_when_claimed() {
    let acc = assert_bound("hopf_skt", "section_structure_holomorphic", 40, 1e-5);
    let rej = assert_floor("hopf_skt", "section_reversed_structure_rejected", 40, 1e-2);
    assert!(
        rej >= 10.0 * acc.max(1e-5),
        "rejection {rej} not 10x above acceptance {acc}"
    );
    for (case, checks) in [
        (
            "flat_r4_asd",
            vec![
                "phi_section_holomorphic_for_fibered",
                "phi_section_holomorphic_for_tautological",
                "taut_section_holomorphy",
            ],
        ),
        (
            "complex_curve_any_connection",
            vec!["phi_section_holomorphy", "taut_section_holomorphy"],
        ),
        (
            "hopf_skt",
            vec!["phi_section_holomorphy", "taut_section_holomorphy"],
        ),
    ] {
        for check in checks {
            assert_bound(case, check, 40, 1e-5);
        }
    }
    println!(
        "PASS criterion 6: structure section accepted at {acc:.1e}, reversed structure \
         rejected at {rej:.1e} (>=10x); endomorphism and rotation sections \
         pseudoholomorphic on three geometries"
    );
}

#[test]
fn criterion_07_grassmann_embedding_package() {
    let mut worst_push: f64 = 0.0;
    for case in ["hopf_skt", "complex_curve_any_connection"] {
        worst_push = worst_push.max(assert_bound(case, "pushforward_half_law", 40, 1e-6));
    }
    let mut worst_emb: f64 = 0.0;
    for case in [
        "hopf_skt",
        "complex_curve_any_connection",
        "cp1_fubini_study",
    ] {
        worst_emb = worst_emb.max(assert_bound(case, "embedding_holomorphy", 40, 1e-5));
    }
    let mut worst_iso: f64 = 0.0;
    for case in ["hopf_skt", "flat_r4_asd"] {
        worst_iso = worst_iso.max(assert_bound(case, "plane_isotropy", 40, 1e-9));
    }
    let mut worst_rt: f64 = 0.0;
    for case in ["hopf_skt", "complex_curve_any_connection", "flat_r4_asd"] {
        worst_rt = worst_rt.max(assert_bound(case, "plane_round_trip", 40, 1e-9));
    }
    println!(
        "PASS criterion 7: pushforward law {worst_push:.1e} <= 1e-6, embedding \
         holomorphy {worst_emb:.1e} <= 1e-5, isotropy {worst_iso:.1e} <= 1e-9, \
         round trip {worst_rt:.1e} <= 1e-9"
    );
}

#[test]
fn criterion_08_cohomology_intertwiners() {
    let twist = assert_bound(
        "d_twist_family",
        "intertwiner_conjugates_derivatives",
        40,
        1e-7,
    );
    let orth = assert_bound("d_twist_family", "twist_map_orthogonal", 40, 1e-7);
    let rescale = assert_bound("hopf_skt", "rescaled_metric_intertwines", 40, 1e-7);
    let pairing = assert_bound("hopf_skt", "rescaled_metric_map_orthogonal", 40, 1e-7);
    println!(
        "PASS criterion 8: twist intertwiner {twist:.1e}, its pairing change {orth:.1e}, \
         metric-rescaling intertwiner {rescale:.1e}, its pairing change {pairing:.1e}, \
         all <= 1e-7"
    );
}

#[test]
fn criterion_09_antiselfdual_forms_are_traceless_one_one() {
    let r = assert_bound(
        "flat_r4_asd",
        "antiselfdual_forms_are_traceless_one_one",
        1,
        1e-10,
    );
    println!(
        "PASS criterion 9: anti-self-dual forms coincide with traceless (1,1) forms \
         (residual {r:.1e} <= 1e-10)"
    );
}

#[test]
fn criterion_10_reports_are_byte_identical() {
    let exe = env!("CARGO_BIN_EXE_twistorlab");
    let dir = std::env::temp_dir().join("twistorlab-acceptance");
    std::fs::create_dir_all(&dir).unwrap();
    let run = |name: &str, threads: &str| {
        let path = dir.join(name);
        let status = Command::new(exe)
            .args([
                "verify",
                "complex_curve_any_connection",
                "--samples",
                "6",
                "--threads",
                threads,
                "--json",
            ])
            .arg(&path)
            .output()
            .expect("binary runs");
        assert!(status.status.success(), "verify exited with {status:?}");
        std::fs::read_to_string(&path).unwrap()
    };
    let a = run("a.json", "1");
    let b = run("b.json", "1");
    let c = run("c.json", "3");
    assert_eq!(
        strip_wall_times(&a),
        strip_wall_times(&b),
        "repeated runs differ"
    );
    let neutral_threads = |s: &str| strip_wall_times(s).replace("\"threads\": 3", "\"threads\": 1");
    assert_eq!(
        neutral_threads(&a),
        neutral_threads(&c),
        "thread count changed the report body"
    );
    println!(
        "PASS criterion 10: JSON reports byte-identical across repeated runs and \
         across 1 vs 3 worker threads (wall times excluded)"
    );
}
