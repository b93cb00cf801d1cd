use hcm_core::degree_model::DegreeSequence;
use hcm_core::graph::{sample_white_matching, ColoredMultigraph};
use hcm_core::percolation::{run_coupled, run_dynamic, run_modified};
use hcm_core::rng::{replicate, stream_rng};

fn four_black_stubs() -> ColoredMultigraph {
    let seq = DegreeSequence::plain(vec![1, 1, 1, 1], vec![1, 1, 1, 1]).unwrap();
    sample_white_matching(&seq, &mut stream_rng(0, 0)).unwrap()
}

// Q0 = 2, stubs a,b,c,d. Pair {a,b} forms first with probability 1/6 at rate 2,
// or second after {c,d}: P = (1/6)(1-e^{-2s}) + (1/6)(1-e^{-s})^2 = (1/3)(1-e^{-s}).
#[test]
fn two_pair_dynamics_matches_closed_form() {
    let g = four_black_stubs();
    let reps = 60_000;
    for (k, &s) in [0.3, 1.0, 2.5].iter().enumerate() {
        let hits: Vec<bool> = replicate(40 + k as u64, reps, |_, rng| {
            let st = run_dynamic(&g, s, rng).unwrap();
            st.event_log
                .iter()
                .any(|e| (e.a.min(e.b), e.a.max(e.b)) == (0, 1))
        });
        let p_hat = hits.iter().filter(|&&h| h).count() as f64 / reps as f64;
        let p = (1.0 - (-s).exp()) / 3.0;
        let se = (p * (1.0 - p) / reps as f64).sqrt();
        assert!((p_hat - p).abs() < 4.0 * se, "s={s}: {p_hat} vs {p}");
    }
}

#[test]
fn full_pairing_is_uniform() {
    let g = four_black_stubs();
    let reps = 30_000;
    let partner_of_zero: Vec<u32> = replicate(50, reps, |_, rng| {
        let st = run_dynamic(&g, 1e3, rng).unwrap();
        assert_eq!(st.q_at(1e3), 0);
        let e = st.event_log.iter().find(|e| e.a == 0 || e.b == 0).unwrap();
        e.a + e.b
    });
    for partner in 1..=3 {
        let c = partner_of_zero.iter().filter(|&&p| p == partner).count() as f64;
        let p = 1.0 / 3.0;
        let sd = (reps as f64 * p * (1.0 - p)).sqrt();
        assert!((c - reps as f64 * p).abs() < 4.0 * sd);
    }
}

#[test]
fn modified_event_count_is_poisson() {
    let seq = DegreeSequence::plain(vec![2, 2, 1, 1], vec![3, 2, 2, 1]).unwrap();
    let g = sample_white_matching(&seq, &mut stream_rng(1, 0)).unwrap();
    let q0 = 4.0;
    let s = 0.7;
    let reps = 20_000;
    let counts: Vec<f64> = replicate(60, reps, |_, rng| run_modified(&g, s, rng).unwrap().event_log.len() as f64);
    let m = counts.iter().sum::<f64>() / reps as f64;
    let want = q0 * s;
    assert!((m - want).abs() < 4.0 * (want / reps as f64).sqrt(), "{m}");
}

#[test]
fn coupled_runs_nest_and_keep_invariants() {
    let seq = DegreeSequence::plain(vec![3, 2, 2, 1, 1, 1, 1, 1], vec![2, 1, 1, 0, 2, 1, 0, 1]).unwrap();
    for seed in 0..300 {
        let mut rng = stream_rng(70, seed);
        let g = sample_white_matching(&seq, &mut rng).unwrap();
        let c = run_coupled(&g, 1.5, &mut rng).unwrap();
        c.check_subset().unwrap();
        c.dynamic.check_invariants().unwrap();
        c.modified.check_invariants().unwrap();
        assert!(c.dynamic.ordered_sizes()[0] <= c.modified.ordered_sizes()[0]);
    }
}
