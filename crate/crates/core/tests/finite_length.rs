use scloop_core::decode::{decode_awgn, decode_bec};
use scloop_core::ensembles::{build_chain, build_loop, ConnectionStyle};
use scloop_core::lift::{lift, LiftConfig};
use scloop_core::sim::{simulate, Channel, StopRule};

#[test]
fn reference_lifts_have_equal_length() {
    let chain = lift(&build_chain(3, 6, 8).unwrap(), &LiftConfig::new(512, 1, false)).unwrap();
    let ring = lift(
        &build_loop(3, 6, 8, None, ConnectionStyle::Full).unwrap(),
        &LiftConfig::new(256, 1, false),
    )
    .unwrap();
    assert_eq!(chain.n(), 8192);
    assert_eq!(ring.n(), 8192);
    assert_eq!(chain.m(), 10 * 512);
    assert_eq!(ring.m(), 20 * 256);
}

#[test]
fn girth_six_lift_has_no_four_cycles() {
    let h = lift(
        &build_loop(3, 6, 8, None, ConnectionStyle::Full).unwrap(),
        &LiftConfig::new(64, 9, true),
    )
    .unwrap();
    assert_eq!(h.four_cycle_pairs(), 0);
    assert!(h.rate() >= 1.0 - h.m() as f64 / h.n() as f64);
}

#[test]
fn peeling_recovers_light_erasures() {
    let h = lift(&build_chain(3, 6, 8).unwrap(), &LiftConfig::new(128, 4, true)).unwrap();
    let report = simulate(&h, &[Channel::Bec(0.3)], StopRule { min_frame_errors: 1, max_frames: 50 }, 2, 0);
    assert_eq!(report.rows[0].frames, 50);
    assert_eq!(report.rows[0].frame_errors, 0);
}

#[test]
fn stopping_set_survives_peeling() {
    let h = lift(&build_chain(3, 6, 6).unwrap(), &LiftConfig::new(32, 1, false)).unwrap();
    // erasing every bit leaves the whole word unresolved
    let out = decode_bec(&h, &vec![true; h.n()]);
    assert_eq!(out.residual.len(), h.n());
}

#[test]
fn strong_signal_decodes_cleanly() {
    let h = lift(&build_chain(3, 6, 8).unwrap(), &LiftConfig::new(64, 2, true)).unwrap();
    let report = simulate(
        &h,
        &[Channel::Awgn { ebn0_db: 4.0, rate: 0.375 }],
        StopRule { min_frame_errors: 1, max_frames: 40 },
        7,
        50,
    );
    assert_eq!(report.rows[0].bit_errors, 0);
    assert!(report.rows[0].avg_iters() < 10.0);
    let out = decode_awgn(&h, &vec![3.0; h.n()], 50);
    assert!(out.codeword);
    assert_eq!(out.iterations, 0);
}

#[test]
fn simulation_is_reproducible() {
    let h = lift(&build_chain(3, 6, 6).unwrap(), &LiftConfig::new(32, 3, true)).unwrap();
    let chans = [Channel::Awgn { ebn0_db: 1.0, rate: 1.0 / 3.0 }, Channel::Bec(0.5)];
    let stop = StopRule { min_frame_errors: 5, max_frames: 200 };
    assert_eq!(simulate(&h, &chans, stop, 11, 40), simulate(&h, &chans, stop, 11, 40));
    assert_ne!(simulate(&h, &chans, stop, 11, 40), simulate(&h, &chans, stop, 12, 40));
}
