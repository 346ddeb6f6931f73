//! Whole-run invariants of the particle simulation.

use opinion_games::kernels::KernelSpec;
use opinion_games::scenario::{InitLaw, KnowledgeConfig, Mode};
use opinion_games::{preset, Scenario, Simulation};

fn small_unit_scenario(followers: usize, horizon: f64) -> Scenario {
    let mut s = preset("test2a").unwrap();
    s.followers = followers;
    s.horizon = horizon;
    s.snapshot_times = vec![0.0, horizon];
    s.follower.kernel = KernelSpec::Unit;
    for l in &mut s.leaders {
        l.follower_kernel = KernelSpec::Unit;
    }
    s
}

#[test]
fn mirrored_scenario_mirrors_means() {
    let s = small_unit_scenario(20_000, 5.0);
    let mut mirror = s.clone();
    mirror.seed += 1;
    mirror.follower.init = InitLaw::Uniform {
        low: -0.75,
        high: 0.0,
    };
    for l in &mut mirror.leaders {
        l.target = -l.target;
        if let InitLaw::Normal { mean, .. } = &mut l.init {
            *mean = -*mean;
        }
    }
    let a = Simulation::new(&s).unwrap().run().unwrap().moments;
    let b = Simulation::new(&mirror).unwrap().run().unwrap().moments;
    let tol = 3.0 / (s.followers as f64).sqrt();
    for (x, y) in a.iter().zip(&b) {
        assert!(
            (x.m_f + y.m_f).abs() <= tol,
            "t = {}: {} vs {}",
            x.t,
            x.m_f,
            y.m_f
        );
    }
}

#[test]
fn zero_dynamics_is_a_fixed_point() {
    let mut s = small_unit_scenario(1_000, 1.0);
    s.follower.kernel = KernelSpec::bounded_confidence(0.0);
    s.follower.noise_std = 0.0;
    // at the origin every strategy drift is exactly zero, so the control vanishes
    s.follower.init = InitLaw::Point { value: 0.0 };
    for l in &mut s.leaders {
        l.target = 0.0;
        l.kernel = KernelSpec::bounded_confidence(0.0);
        l.follower_kernel = KernelSpec::bounded_confidence(0.0);
        l.noise_std = 0.0;
        l.follower_noise_std = 0.0;
        l.init = InitLaw::Point { value: 0.0 };
    }
    let mut sim = Simulation::new(&s).unwrap();
    while sim.step_index() < sim.steps_total() {
        sim.step().unwrap();
    }
    assert!(sim.followers().opinions().all(|w| w == 0.0));
    assert!(sim
        .leaders()
        .iter()
        .flat_map(|g| &g.opinions)
        .all(|v| *v == 0.0));
    assert_eq!(sim.stats().total().rejected, 0);
}

#[test]
fn particle_counts_and_histogram_mass_are_conserved() {
    let s = preset("test3").map(|mut s| {
        s.followers = 5_000;
        s.horizon = 1.0;
        s.snapshot_times = vec![0.0, 0.5, 1.0];
        s
    });
    let s = s.unwrap();
    let counts = s.leader_counts();
    let record = Simulation::new(&s).unwrap().run().unwrap();
    assert_eq!(record.snapshots.len(), 3);
    for snap in &record.snapshots {
        assert_eq!(
            snap.followers.counts().iter().sum::<u64>() as usize
                + snap.followers.outside() as usize,
            s.followers
        );
        assert!((snap.followers.masses().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        for (h, n) in snap.leaders.iter().zip(&counts) {
            assert_eq!(h.counts().iter().sum::<u64>() as usize, *n);
            assert!((h.masses().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
        let grid = snap.grid.as_ref().unwrap();
        let (rows, cols) = grid.shape();
        let width = 2.0 / cols as f64 * s.knowledge.as_ref().unwrap().display_max() / rows as f64;
        let mass: f64 = grid.densities().iter().map(|d| d * width).sum();
        assert!((mass - 1.0).abs() <= 1e-12, "{mass}");
    }
}

#[test]
fn frozen_equal_knowledge_matches_homogeneous_means() {
    let homogeneous = small_unit_scenario(20_000, 5.0);
    let mut frozen = homogeneous.clone();
    frozen.mode = Mode::Heterogeneous;
    frozen.seed += 7;
    frozen.snapshot_times.clear();
    frozen.follower.kernel = KernelSpec::knowledge_gap(50.0);
    frozen.follower.knowledge_init = Some(InitLaw::Point { value: 1.0 });
    // every agent keeps the same knowledge, so the follower kernel stays at 1/2
    frozen.knowledge = Some(KnowledgeConfig {
        lambda: 1e-12,
        lambda_c: 0.0,
        lambda_b: 0.0,
        lambda_min: None,
        lambda_max: None,
        noise_std: 0.0,
        background_max: 1.0,
        display_max: None,
    });
    let a = Simulation::new(&homogeneous)
        .unwrap()
        .run()
        .unwrap()
        .moments;
    let b = Simulation::new(&frozen).unwrap().run().unwrap();
    let tol = 3.0 / (homogeneous.followers as f64).sqrt();
    for (x, y) in a.iter().zip(&b.moments) {
        assert!(
            (x.m_f - y.m_f).abs() <= tol,
            "t = {}: {} vs {}",
            x.t,
            x.m_f,
            y.m_f
        );
    }
    let k = b.mean_knowledge.unwrap();
    assert!(k.iter().all(|x| (x - 1.0).abs() < 1e-9));
}
