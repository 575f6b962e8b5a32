use gpc_core::{Oracle, OracleConfig};

fn oracle(rate: f64, error: f64, seed: u64) -> Oracle {
    Oracle::new(OracleConfig { feedback_rate: rate, error_rate: error, deadband: 0.0, seed, ..Default::default() })
        .unwrap()
}

#[test]
fn emission_frequency_matches_rate() {
    for seed in 0..5 {
        let mut o = oracle(0.05, 0.0, seed);
        let emitted = (0..10_000).filter(|_| o.feedback(&[0.0], &[1.0], None).emitted).count();
        let freq = emitted as f64 / 10_000.0;
        assert!((freq - 0.05).abs() <= 0.01, "seed {seed}: {freq}");
    }
}

#[test]
fn flip_fraction_matches_error_rate() {
    for error in [0.1, 0.2] {
        let mut o = oracle(0.05, error, 11);
        let (mut given, mut flipped) = (0usize, 0usize);
        for _ in 0..200_000 {
            let d = o.feedback(&[0.0, 0.0], &[1.0, -1.0], None);
            if let Some(f) = d.feedback {
                given += f.dims().iter().filter(|v| **v != 0).count();
                flipped += d.flipped;
                // Flipped entries point away from the reference.
                let wrong = usize::from(f.dims()[0] == -1) + usize::from(f.dims()[1] == 1);
                assert_eq!(wrong, d.flipped);
            }
        }
        let fraction = flipped as f64 / given as f64;
        assert!(given > 15_000);
        assert!((fraction - error).abs() <= 0.01, "error {error}: {fraction}");
    }
}

#[test]
fn draws_do_not_depend_on_the_policy() {
    // Emission decisions are identical whether or not the action is in the
    // deadband, so conditions see common random numbers.
    let mut near =
        Oracle::new(OracleConfig { feedback_rate: 0.3, deadband: 0.5, seed: 4, ..Default::default() }).unwrap();
    let mut far = near.clone();
    for k in 0..2000 {
        let a = near.feedback(&[0.0], &[0.1], None);
        let b = far.feedback(&[0.0], &[0.9], None);
        assert_eq!(a.emitted, b.emitted, "step {k}");
        assert!(a.feedback.is_none());
    }
}

#[test]
fn active_learning_rate_follows_signal() {
    let o = Oracle::new(OracleConfig { active_learning: true, min_rate: 0.01, ..Default::default() }).unwrap();
    assert!((o.rate(Some(&[0.2, 0.4])) - 0.31).abs() < 1e-15);
    assert_eq!(o.rate(None), 0.01);
    assert_eq!(o.rate(Some(&[3.0])), 1.0);
    let mut o = o;
    let emitted = (0..20_000).filter(|_| o.feedback(&[0.0], &[1.0], Some(&[0.09])).emitted).count();
    assert!((emitted as f64 / 20_000.0 - 0.1).abs() < 0.01);
}
