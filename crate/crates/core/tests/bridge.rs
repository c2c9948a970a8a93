use suborbit::bridge::{run_case, CaseConfig, Conclusion};

#[test]
fn conclusions_are_stable_under_reseeding() {
    for (mults, spectrum, expected) in [
        (vec![1, 1, 2], vec![1.0, 2.0, 3.0], Conclusion::Confirmed),
        (vec![1, 1, 4], vec![1.0, 2.0, 3.0], Conclusion::ReducedPathUsed),
        (vec![1, 2, 2], vec![-2.0, 0.5, 4.0], Conclusion::Confirmed),
    ] {
        for seed in [1, 2, 3, 4, 5] {
            let case = run_case(&CaseConfig::new(&mults, &spectrum, seed)).unwrap();
            assert_eq!(case.conclusion, expected, "{mults:?} seed {seed}: {:?}", case.notes);
        }
    }
}

#[test]
fn witness_point_replays_to_the_same_verdict() {
    use suborbit::geometry::estimate_generic_dims;
    use suborbit::pencil::kronecker_test;
    use suborbit::setup::{build_setup, Space};
    use suborbit::LieElement;

    let config = CaseConfig::new(&[1, 1, 1, 2], &[1.0, 2.0, 3.0, 4.0], 11);
    let case = run_case(&config).unwrap();
    let coords = case.full.witness_point.clone().expect("witness recorded");
    let setup = build_setup(&config.multiplicities, &config.spectrum).unwrap();
    let x = LieElement::from_coords(setup.n, nalgebra::DVector::from_vec(coords)).unwrap();
    let pair = setup.pair(Space::M);
    let dims = estimate_generic_dims(pair, 25, 11).unwrap();
    assert!(kronecker_test(pair, &setup.a, &x, &dims, 20, 3).unwrap().in_okr);
}
