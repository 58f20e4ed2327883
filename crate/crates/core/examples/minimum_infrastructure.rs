//! How few anchors and snapshots still give a full-rank information matrix.

use elaa_loc::fisher::{localizability, BoundSettings};
use elaa_loc::harness::ScenarioConfig;
use elaa_loc::scenario::Anchor;
use elaa_loc::Vec3;

fn verdict(cfg: &ScenarioConfig, seed: u64, edit: impl Fn(&mut Vec<Anchor>)) -> elaa_loc::Result<bool> {
    let mut s = cfg.build_scenario(seed)?;
    edit(&mut s.anchors);
    let l = localizability(&s, &BoundSettings::default())?;
    Ok(l.localizable)
}

pub fn run_example() -> elaa_loc::Result<Vec<(String, bool)>> {
    let mut out = Vec::new();
    for (nb, nk) in [(1, 1), (2, 1), (3, 1), (1, 2), (2, 2)] {
        let cfg = ScenarioConfig::from_toml_with_overrides(
            "",
            &[format!("anchors.count={nb}"), format!("slots.num_slots={nk}"), "array.num_elements=100".into()],
        )?;
        out.push((format!("N_B={nb} N_K={nk}"), verdict(&cfg, 11, |_| {})?));
    }
    let cfg = ScenarioConfig::from_toml_with_overrides(
        "",
        &["anchors.count=1".into(), "slots.num_slots=4".into(), "array.num_elements=100".into()],
    )?;
    out.push(("N_B=1 N_K=4, one heading".into(), verdict(&cfg, 11, |_| {})?));
    // Same anchor, but it turns between slots.
    let turns = [Vec3::new(10.0, 0.0, 0.0), Vec3::new(0.0, 10.0, 0.0), Vec3::new(0.0, 0.0, 10.0), Vec3::new(-6.0, 8.0, 0.0)];
    out.push(("N_B=1 N_K=4, turning".into(), verdict(&cfg, 11, |a| a[0].velocity_per_slot = turns.to_vec())?));
    for (name, ok) in &out {
        println!("{name:28} {}", if *ok { "localizable" } else { "not localizable" });
    }
    Ok(out)
}

fn main() -> elaa_loc::Result<()> {
    run_example().map(|_| ())
}
