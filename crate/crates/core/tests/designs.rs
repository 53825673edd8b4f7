use std::path::PathBuf;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use seqbf::bayesfactor::{bf01_z, critical_z, AnalysisPriorSpec, CriticalSet, ZObservation};
use seqbf::cli::DesignConfig;
use seqbf::design::{
    build_schedule, characteristics, stopping_regions, z_moments, DesignPrior, InformationModel,
    SequentialDesign, Thresholds,
};
use seqbf::mvn::default_tolerance;
use seqbf::numerics::{norm_cdf, norm_quantile};

const BUNDLED: [&str; 6] = [
    "appendix-a",
    "schoenbrodt",
    "schoenbrodt-null",
    "lowpv-h1",
    "lowpv-h0",
    "two-sided-m4",
];

fn config_path(name: &str) -> PathBuf {
    [
        env!("CARGO_MANIFEST_DIR"),
        "configs",
        &format!("{name}.json"),
    ]
    .iter()
    .collect()
}

#[test]
fn bundled_configs_round_trip() {
    for name in BUNDLED {
        let c = DesignConfig::load(config_path(name)).unwrap();
        let again = DesignConfig::parse(&c.to_json(), name).unwrap();
        assert_eq!(c, again, "{name}");
        assert_eq!(c.design().unwrap(), again.design().unwrap(), "{name}");
    }
}

/// Every simulated path lands in exactly one terminal region, and in at most
/// one rectangle of any stage.
#[test]
fn regions_are_disjoint_on_a_million_draws() {
    for name in ["appendix-a", "lowpv-h1", "two-sided-m4"] {
        let d = DesignConfig::load(config_path(name))
            .unwrap()
            .design()
            .unwrap();
        let regions = stopping_regions(&d).unwrap();
        let moments = z_moments(&d.schedule, &d.design_prior).unwrap();
        let m = d.m();
        let l = moments.cholesky().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let (mut e, mut z) = (vec![0.0; m], vec![0.0; m]);
        for _ in 0..1_000_000 {
            for v in e.iter_mut() {
                *v = rng.sample(StandardNormal);
            }
            for i in 0..m {
                z[i] = moments.mean()[i] + (0..=i).map(|k| l[i * m + k] * e[k]).sum::<f64>();
            }
            let mut terminal = 0;
            for (j, s) in regions.stages.iter().enumerate() {
                let prefix = &z[..=j];
                let hits = s
                    .h1_rects
                    .iter()
                    .chain(&s.h0_rects)
                    .filter(|r| r.contains(prefix))
                    .count();
                assert!(
                    hits <= 1,
                    "{name}: {hits} rectangles at stage {} for {z:?}",
                    j + 1
                );
                terminal += hits;
            }
            terminal += regions
                .continuation
                .iter()
                .filter(|r| r.contains(&z))
                .count();
            assert_eq!(terminal, 1, "{name}: {z:?} in {terminal} terminal regions");
        }
    }
}

fn family(kind: u8, mu: f64, tau: f64) -> AnalysisPriorSpec {
    match kind {
        0 => AnalysisPriorSpec::DirectionalDirectional { mu, tau },
        1 => AnalysisPriorSpec::PointPoint {
            mu: if mu.abs() < 0.1 { 0.5 } else { mu },
        },
        2 => AnalysisPriorSpec::PointTwoSided { mu, tau },
        _ => AnalysisPriorSpec::PointDirectional { mu: mu.abs(), tau },
    }
}

fn random_design(
    kind: u8,
    mu: f64,
    tau: f64,
    k0: f64,
    k1: f64,
    steps: &[f64],
    prior: DesignPrior,
) -> SequentialDesign {
    let mut n = Vec::new();
    let mut acc = 0.0;
    for s in steps {
        acc += s.round().max(1.0);
        n.push(acc);
    }
    let model = InformationModel::UnitVariance { lambda2: 1.0 };
    SequentialDesign::new(
        build_schedule(&model, &n).unwrap(),
        Thresholds::new(k0, k1).unwrap(),
        family(kind, mu, tau),
        prior,
        model,
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn probabilities_partition_unity(
        kind in 0u8..4,
        mu in -1.0f64..1.0,
        tau in 0.2f64..2.0,
        k0 in 1.5f64..20.0,
        k1 in 0.03f64..0.7,
        steps in prop::collection::vec(2.0f64..30.0, 1..5),
        mu_d in -0.5f64..0.8,
        tau_d in prop_oneof![Just(0.0), 0.01f64..0.3],
    ) {
        let d = random_design(kind, mu, tau, k0, k1, &steps, DesignPrior::new(mu_d, tau_d).unwrap());
        let r = characteristics(&d, &default_tolerance(), 5).unwrap();
        let mut prev = (0.0, 0.0);
        for s in &r.stages {
            let total = s.h1.value + s.h0.value + s.inconclusive.value;
            let err = s.h1.err_est + s.h0.err_est + s.inconclusive.err_est;
            prop_assert!((total - 1.0).abs() <= 3.0 * err + 1e-12, "sum {total} at stage {}", s.stage);
            let slack = s.h1.err_est + s.h0.err_est + 1e-12;
            prop_assert!(s.h1.value >= prev.0 - slack && s.h0.value >= prev.1 - slack);
            prev = (s.h1.value, s.h0.value);
        }
        prop_assert!((r.cov_n - r.sd_n[0] / r.expected_n[0]).abs() < 1e-12);
    }

    /// Under a point design prior at zero the result depends on the analysis
    /// prior and schedule only, not on where the design prior would otherwise sit.
    #[test]
    fn point_null_probabilities_ignore_alternative_location(
        kind in 0u8..4,
        mu in 0.2f64..1.0,
        steps in prop::collection::vec(5.0f64..30.0, 1..4),
        shift in -1.0f64..1.0,
    ) {
        let at_zero = random_design(kind, mu, 0.7, 6.0, 1.0 / 6.0, &steps, DesignPrior::point(0.0));
        let moved = at_zero.with_design_prior(DesignPrior::point(shift)).unwrap();
        let back = moved.with_design_prior(DesignPrior::point(0.0)).unwrap();
        let a = characteristics(&at_zero, &default_tolerance(), 1).unwrap();
        let b = characteristics(&back, &default_tolerance(), 1).unwrap();
        prop_assert_eq!(a, b);
    }

    #[test]
    fn two_sided_bf_peaks_between_its_critical_values(
        mu in -1.0f64..1.0,
        tau in 0.1f64..2.0,
        sigma in 0.05f64..1.0,
        k in 0.05f64..3.0,
    ) {
        let spec = AnalysisPriorSpec::PointTwoSided { mu, tau };
        if let CriticalSet::Pair { boundary } = critical_z(k, sigma, &spec).unwrap() {
            let bf = |z: f64| bf01_z(&ZObservation::new(z, sigma).unwrap(), &spec).unwrap();
            let (lo, hi) = (boundary.z_minus, boundary.z_plus);
            prop_assert!(bf(boundary.m) >= k);
            prop_assert!(bf(0.5 * (lo + hi)) >= k * (1.0 - 1e-9));
            prop_assert!(bf(lo - 0.1) < k && bf(hi + 0.1) < k);
        }
    }

    #[test]
    fn normal_quantile_inverts_cdf(log_p in -8.0f64..0.0, upper in any::<bool>()) {
        let p = 10f64.powf(log_p).min(1.0 - 1e-8);
        let p = if upper { 1.0 - p } else { p };
        let x = norm_quantile(p).unwrap();
        prop_assert!((norm_cdf(x) - p).abs() <= 1e-9 * p.min(1.0 - p).max(1e-8));
    }
}

#[test]
fn bundled_configs_match_the_published_schema() {
    let schema_path: PathBuf = [
        env!("CARGO_MANIFEST_DIR"),
        "..",
        "..",
        "docs",
        "config.schema.json",
    ]
    .iter()
    .collect();
    let schema: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(schema_path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    for name in BUNDLED {
        let v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(config_path(name)).unwrap()).unwrap();
        let errors: Vec<String> = validator.iter_errors(&v).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{name}: {errors:?}");
    }
    let bad: serde_json::Value =
        serde_json::json!({"name": "x", "thresholds": {"k0": 0.5, "k1": 0.1}});
    assert!(!validator.is_valid(&bad));
}
