//! Closed-form initialization.

mod common;

use elaa_loc::initializer::*;
use elaa_loc::measurement::SigmaMode;
use elaa_loc::{Error, Vec3, SPEED_OF_LIGHT};

fn errors(e: &InitEstimate, sc: &elaa_loc::scenario::Scenario) -> [f64; 3] {
    let r = &sc.receiver;
    [(e.position0 - r.position0).norm(), (e.velocity - r.velocity).norm(), (e.orientation - r.orientation).norm()]
}

#[test]
fn tdoa_fix_is_exact_on_clean_ranges() {
    let x = Vec3::new(1.0, -2.0, 0.5);
    let anchors = vec![
        Vec3::new(30.0, 0.0, 5.0),
        Vec3::new(-20.0, 25.0, -3.0),
        Vec3::new(5.0, -40.0, 12.0),
        Vec3::new(-15.0, -10.0, 30.0),
        Vec3::new(18.0, 22.0, -25.0),
    ];
    let delays: Vec<f64> = anchors.iter().map(|a| (a - x).norm() / SPEED_OF_LIGHT + 3e-6).collect();
    assert!((tdoa_element_fix(&delays, &anchors).unwrap() - x).norm() < 1e-9);
    assert!((tdoa_element_fix(&delays[..4], &anchors[..4]).unwrap() - x).norm() < 1e-9);
}

#[test]
fn coplanar_anchors_are_rejected() {
    let anchors: Vec<Vec3> = (0..6).map(|i| Vec3::new((i as f64).cos() * 30.0, (i as f64).sin() * 30.0, 4.0)).collect();
    let x = Vec3::new(0.0, 1.0, -8.0);
    let delays: Vec<f64> = anchors.iter().map(|a| (a - x).norm() / SPEED_OF_LIGHT).collect();
    assert!(matches!(tdoa_element_fix(&delays, &anchors), Err(Error::Initializer(_))));
}

#[test]
fn exact_on_noiseless_data() {
    for (nb, nk) in [(5, 2), (4, 2), (6, 3), (5, 1)] {
        for seed in 0..3 {
            let sc = common::zero_offsets(common::scenario(nb, 40, nk, seed));
            let f = common::Fixture::new(sc, SigmaMode::Median);
            let init = initialize(&f.clean(), &f.scenario, &InitConfig::default()).unwrap();
            let e = errors(&init, &f.scenario);
            assert!(e.iter().all(|&x| x < 1e-6), "nb={nb} nk={nk} seed={seed}: {e:?}");
            assert!(init.clock_offsets.iter().all(|c| c.abs() < 1e-12));
        }
    }
}

#[test]
fn common_clock_offset_does_not_bias_the_fix() {
    let mut sc = common::zero_offsets(common::scenario(5, 30, 2, 4));
    for a in &mut sc.anchors {
        a.clock_offset = 2e-6;
    }
    let f = common::Fixture::new(sc, SigmaMode::Median);
    let init = initialize(&f.clean(), &f.scenario, &InitConfig::default()).unwrap();
    assert!(errors(&init, &f.scenario)[0] < 1e-6);
    assert!(init.clock_offsets.iter().all(|c| (c - 2e-6).abs() < 1e-12));
}

#[test]
fn index_set_is_spread_and_validated() {
    assert_eq!(default_index_set(100, 5).len(), 5);
    let s = default_index_set(100, 8);
    assert_eq!(s.first(), Some(&0));
    assert_eq!(s.last(), Some(&99));
    assert!(s.windows(2).all(|w| w[0] < w[1]));
    let f = common::Fixture::new(common::scenario(5, 10, 2, 0), SigmaMode::Median);
    let bad = InitConfig { index_set: Some(vec![3, 10]), ..Default::default() };
    assert!(initialize(&f.clean(), &f.scenario, &bad).is_err());
}

#[test]
fn fallback_handles_three_anchors() {
    let sc = common::zero_offsets(common::scenario(3, 40, 2, 1));
    let f = common::Fixture::new(sc, SigmaMode::Median);
    let init = initialize(&f.clean(), &f.scenario, &InitConfig::default()).unwrap();
    let e = errors(&init, &f.scenario);
    assert!(e.iter().all(|x| x.is_finite()));
    assert!((init.orientation.norm() - 1.0).abs() < 1e-12);
}
