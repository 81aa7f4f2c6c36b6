use ims_core::catalog::{builtin_with_defaults, Params};
use ims_core::cftp::{cftp_batch, cftp_sample, default_t0};
use ims_core::sim::{apply_event, EventSource};
use ims_core::{extremal, Error, Lattice};

#[test]
fn later_epochs_reuse_earlier_randomness() {
    let lat = Lattice::ring(6).unwrap();
    let m = builtin_with_defaults("noisy_contact", &Params::new(), lat.max_mass()).unwrap();
    let src = EventSource::new(&m, &lat, 9).unwrap();
    let t0 = default_t0(&src, &lat);
    let windows: Vec<_> = (0..6).map(|k| src.events_in(-(2f64.powi(k)) * t0, 0.0)).collect();
    for k in 0..windows.len() {
        for later in &windows[k + 1..] {
            let tail: Vec<_> = later.iter().filter(|e| e.t > -(2f64.powi(k as i32)) * t0).cloned().collect();
            assert_eq!(tail, windows[k]);
        }
    }
}

#[test]
fn more_epochs_never_change_a_coalesced_sample() {
    let lat = Lattice::ring(6).unwrap();
    let m = builtin_with_defaults("contact", &Params::new(), lat.max_mass()).unwrap();
    for seed in 0..40 {
        let short = cftp_sample(&m, &lat, seed, None, 8);
        let long = cftp_sample(&m, &lat, seed, None, 20).unwrap();
        match short {
            Ok(r) => assert_eq!(r, long),
            Err(Error::NoCoalescence { .. }) => assert!(long.epochs_used >= 8),
            Err(e) => panic!("{e}"),
        }
    }
}

#[test]
fn sandwich_holds_along_every_epoch() {
    let lat = Lattice::ring(5).unwrap();
    let m = builtin_with_defaults("two_stage", &Params::new(), lat.max_mass()).unwrap();
    let src = EventSource::new(&m, &lat, 4).unwrap();
    let (bottom, top) = extremal(&m, &lat);
    let t0 = default_t0(&src, &lat);
    for k in 0..8 {
        let (mut lo, mut hi) = (bottom.clone(), top.clone());
        let mut met = false;
        for e in src.events_in(-(2f64.powi(k)) * t0, 0.0) {
            lo = apply_event(&lo, &e, &m, &lat);
            hi = apply_event(&hi, &e, &m, &lat);
            assert!(lo.le(&hi));
            if met {
                assert_eq!(lo, hi);
            }
            met |= lo == hi;
        }
    }
}

#[test]
fn batches_are_reproducible() {
    let lat = Lattice::ring(4).unwrap();
    let m = builtin_with_defaults("noisy_contact", &Params::new(), lat.max_mass()).unwrap();
    let a = cftp_batch(&m, &lat, 100, 50, None, 30).unwrap();
    let b = cftp_batch(&m, &lat, 100, 50, None, 30).unwrap();
    assert_eq!(a.results, b.results);
    assert_eq!(a.histogram, b.histogram);
    assert_eq!(a.histogram.values().sum::<usize>(), 50);
    assert_eq!(a.results[3], cftp_sample(&m, &lat, 103, None, 30).unwrap());
}

#[test]
fn non_attractive_models_are_refused() {
    let lat = Lattice::ring(4).unwrap();
    let m = builtin_with_defaults("two_type", &Params::new(), lat.max_mass()).unwrap();
    assert!(matches!(cftp_sample(&m, &lat, 0, None, 10), Err(Error::Precondition(_))));
}
