use std::path::PathBuf;

use marw::Rational;
use marw_harness::spec::{CheckKind, Checkpoints, EstimatorKind, ExperimentSpec, Format, MdpSpec, Number, Tier};
use proptest::prelude::*;

fn number() -> impl Strategy<Value = Number> {
    prop_oneof![
        (0i64..50, 1i64..50).prop_map(|(n, d)| Number::Exact(Rational::new(n, d).unwrap())),
        (0.0f64..10.0).prop_map(Number::Float),
    ]
}

fn checkpoints() -> impl Strategy<Value = Checkpoints> {
    prop_oneof![
        (2usize..40).prop_map(Checkpoints::Geometric),
        (1usize..5000).prop_map(Checkpoints::Every),
        prop::collection::vec(1usize..100_000, 0..6).prop_map(Checkpoints::List),
    ]
}

fn estimator() -> impl Strategy<Value = EstimatorKind> {
    prop_oneof![
        Just(EstimatorKind::Qsl),
        Just(EstimatorKind::BarycenterQsl),
        Just(EstimatorKind::LBeta),
        Just(EstimatorKind::SigmaRatio),
        Just(EstimatorKind::Mdp),
    ]
}

fn spec() -> impl Strategy<Value = ExperimentSpec> {
    let model = ("[a-z][a-z0-9_]{0,12}", prop::option::of(prop_oneof![Just(Tier::Smoke), Just(Tier::Full)]), 1usize..6, number(), number());
    let run = (1u64..10_000_000, 1usize..10_000_000, any::<u64>(), checkpoints(), 1usize..4096);
    let extras = (
        prop::collection::vec(estimator(), 0..4),
        prop::option::of((number(), prop::collection::vec(number(), 0..3))),
        prop::collection::vec(prop::sample::select(CheckKind::ALL.to_vec()), 0..5),
        prop::option::of("[a-z_./]{1,20}"),
        prop::collection::vec(prop_oneof![Just(Format::Json), Just(Format::Csv)], 0..3),
    );
    (model, run, extras).prop_map(|((name, tier, d, p, beta), (paths, horizon, seed, checkpoints, block_size), (estimators, mdp, checks, out, formats))| {
        let mut s = ExperimentSpec::new(name, d, p, beta);
        s.tier = tier;
        s.paths = paths;
        s.horizon = horizon;
        s.seed = seed;
        s.checkpoints = checkpoints;
        s.block_size = block_size;
        s.estimators = estimators;
        s.mdp = mdp.map(|(eta, radii)| MdpSpec { eta, radii });
        s.checks = checks;
        s.out = out.map(PathBuf::from);
        s.formats = formats;
        s
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(500))]

    #[test]
    fn text_form_round_trips(s in spec()) {
        let text = s.to_text();
        let back = ExperimentSpec::parse(&text).unwrap();
        prop_assert_eq!(&back, &s);
        prop_assert_eq!(back.to_text(), text);
    }
}

#[test]
fn bundled_specs_round_trip() {
    for name in marw_harness::runner::bundled_names() {
        let s = marw_harness::bundled(name).unwrap();
        assert_eq!(ExperimentSpec::parse(&s.to_text()).unwrap(), s);
    }
}
