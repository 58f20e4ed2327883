//! Analytic channel gradients against central differences of an
//! independently written channel map.

mod common;

use elaa_loc::fisher::{jacobian, triple_gradient, Grad9};
use elaa_loc::scenario::Scenario;
use elaa_loc::{Vec3, SPEED_OF_LIGHT};
use std::f64::consts::PI;

/// Delay without offset, Doppler deviation without offset, gain.
fn maps(sc: &Scenario, x: &[f64; 9], b: usize, u: usize, k: usize) -> [f64; 3] {
    let p = Vec3::new(x[0], x[1], x[2]);
    let v = Vec3::new(x[3], x[4], x[5]);
    let s = Vec3::new(x[6], x[7], x[8]);
    let tk = k as f64 * sc.plan.slot_spacing;
    let off = (u as f64 - sc.array.reference_index as f64) * sc.array.element_spacing;
    let pu = p + tk * v + off * s;
    let a = &sc.anchors[b];
    let vb = a.velocity_per_slot[k];
    let pb = a.initial_position + tk * vb;
    let d = (pb - pu).norm();
    let fc = sc.waveform.carrier_frequency;
    let lambda = SPEED_OF_LIGHT / fc;
    let nu = (vb - v).dot(&(pb - pu)) / (d * SPEED_OF_LIGHT);
    [d / SPEED_OF_LIGHT, -fc * nu, lambda * d.powf(-sc.pathloss_exponent) / (4.0 * PI)]
}

fn numeric(sc: &Scenario, b: usize, u: usize, k: usize) -> [Grad9; 3] {
    let r = &sc.receiver;
    let x0 = [
        r.position0.x, r.position0.y, r.position0.z,
        r.velocity.x, r.velocity.y, r.velocity.z,
        r.orientation.x, r.orientation.y, r.orientation.z,
    ];
    let mut g = [Grad9::zeros(); 3];
    for i in 0..9 {
        let h = if i < 6 { 1e-4 } else { 1e-5 };
        let mut xp = x0;
        let mut xm = x0;
        xp[i] += h;
        xm[i] -= h;
        let fp = maps(sc, &xp, b, u, k);
        let fm = maps(sc, &xm, b, u, k);
        for m in 0..3 {
            g[m][i] = (fp[m] - fm[m]) / (2.0 * h);
        }
    }
    g
}

/// Largest component error relative to the gradient's infinity norm.
fn rel_err(a: &Grad9, n: &Grad9) -> f64 {
    (a - n).amax() / a.amax().max(n.amax())
}

#[test]
fn gradients_match_finite_differences() {
    let mut worst = [0.0f64; 3];
    for seed in 0..20u64 {
        let nk = 1 + (seed as usize % 3);
        let pattern = if seed % 2 == 0 { "constant" } else { "distinct" };
        let cfg = common::config(3, 16, nk, &[&format!("anchors.velocity_pattern=\"{pattern}\"")]);
        let mut sc = cfg.build_scenario(100 + seed).unwrap();
        sc.pathloss_exponent = [1.0, 2.0, 2.7][seed as usize % 3];
        let geom = sc.geometry().unwrap();
        for b in 0..3 {
            for k in 0..nk {
                for u in [0, 7, 15] {
                    let a = triple_gradient(&sc, &geom, b, u, k);
                    let n = numeric(&sc, b, u, k);
                    for (m, (x, y)) in [a.delay, a.doppler, a.gain].iter().zip(n.iter()).enumerate() {
                        worst[m] = worst[m].max(rel_err(x, y));
                    }
                }
            }
        }
    }
    assert!(worst.iter().all(|&e| e <= 1e-5), "worst relative errors {worst:?}");
}

#[test]
fn jacobian_passes_audit_and_holds_gradients() {
    let sc = common::scenario(3, 5, 2, 4);
    let geom = sc.geometry().unwrap();
    let t = jacobian(&sc, &geom);
    t.audit().unwrap();
    let n = 5 * 2;
    assert_eq!(t.matrix.ncols(), 3 * (3 * n + 2));
    assert_eq!(t.matrix.nrows(), 9 + 2 * 3 + 3 * n);
    // Column of the delay of (b=1, u=2, k=1) holds its gradient in the motion rows.
    let g = triple_gradient(&sc, &geom, 1, 2, 1);
    let col = (3 * n + 2) + (5 + 2);
    for r in 0..9 {
        assert_eq!(t.matrix[(r, col)], g.delay[r]);
    }
}

#[test]
fn reference_element_has_no_orientation_gradient() {
    let sc = common::scenario(2, 6, 2, 8);
    let geom = sc.geometry().unwrap();
    for b in 0..2 {
        for k in 0..2 {
            let g = triple_gradient(&sc, &geom, b, sc.array.reference_index, k);
            for m in [g.delay, g.doppler, g.gain] {
                assert_eq!(m.fixed_rows::<3>(6).amax(), 0.0);
            }
            if k == 0 {
                assert_eq!(g.delay.fixed_rows::<3>(3).amax(), 0.0);
            }
        }
    }
}
