use evalforge_core::analytics::indicator_correlations;
use evalforge_core::scoring::{build_overview, WeightingPolicy};
use evalforge_core::simulate::{bias_experiment, generate, SimConfig};
use evalforge_core::store::ProjectStore;

fn fixture(seed: u64) -> (tempfile::TempDir, evalforge_core::ProjectSnapshot) {
    let dir = tempfile::tempdir().unwrap();
    let store = ProjectStore::open(dir.path().join("p")).unwrap();
    generate(&SimConfig::calibrated(seed)).unwrap().save(&store).unwrap();
    let snap = store.snapshot().unwrap();
    (dir, snap)
}

#[test]
fn overviews_carry_no_expert_identity() {
    let (_dir, snap) = fixture(11);
    let mut scanned = 0;
    for team in &snap.teams {
        let text = build_overview(&snap.forms, &team.id, 3).render();
        for e in &snap.experts {
            assert!(!text.contains(e.id.as_str()), "{} leaks {}", team.id, e.id);
            assert!(!text.contains(&e.name), "{} leaks {}", team.id, e.name);
        }
        scanned += 1;
    }
    assert_eq!(scanned, 93);
}

#[test]
fn saved_fixture_reloads_identically() {
    let (dir, snap) = fixture(12);
    let again = ProjectStore::open(dir.path().join("p")).unwrap().snapshot().unwrap();
    assert_eq!(snap.teams, again.teams);
    assert_eq!(snap.forms, again.forms);
    assert!(snap.check_integrity().is_empty());
}

#[test]
fn calibrated_correlations_are_positive_and_imperfect() {
    for seed in 1..=3 {
        let (_dir, snap) = fixture(seed);
        let mut all = Vec::new();
        for d in &snap.disciplines {
            all.extend(snap.summaries(&d.id, WeightingPolicy::Linear).unwrap());
        }
        let m = indicator_correlations(&all).unwrap();
        let (lo, hi) = m.off_diagonal_range().unwrap();
        assert!(lo >= 0.4 && hi <= 0.99, "seed {seed}: [{lo}, {hi}]");
    }
}

#[test]
fn full_coverage_limits_a_biased_expert() {
    let cfg = SimConfig::reliability(false, 77);
    let b = bias_experiment(&cfg, 3.0, 300).unwrap();
    assert!(b.full_rank_error < b.single_rank_error);
    assert!(b.delta > 2.0 * b.se, "{b:?}");
}
