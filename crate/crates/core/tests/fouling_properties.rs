//! Fouling growth factors on random schedules, admiralty exponent recovery
//! and the friction-coefficient identity.

mod oracles;

use chrono::Duration;
use proptest::prelude::*;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use oracles::*;
use shipperf::data_model::{read_voyage_csv, write_voyage_csv, VoyageSchema};
use shipperf::fouling::{compute_fgf, delta_cf, fit_admiralty_exponents, AdmiraltyPoint, DefaultEstimator, ResistanceEstimator};
use shipperf::synth::synthetic_ship;
use shipperf::{KNOT, STATIC_SPEED_KNOTS};

proptest! {
    #![proptest_config(ProptestConfig::with_cases(50))]

    #[test]
    fn growth_factors_accumulate_and_reset(seed in any::<u64>()) {
        let (samples, events, rates) = random_schedule(seed);
        let fgf = compute_fgf(&samples, &events, &rates, STATIC_SPEED_KNOTS).unwrap();

        // brute-force reference: walk back from each sample to its last cleaning
        let mut hull_ref = vec![0.0; samples.len()];
        let mut prop_ref = vec![0.0; samples.len()];
        let (mut h, mut p) = (0.0, 0.0);
        for (i, s) in samples.iter().enumerate() {
            let since = if i == 0 { None } else { Some(samples[i - 1].timestamp) };
            let between: Vec<_> = events
                .iter()
                .filter(|e| since.is_none_or(|t| e.timestamp > t) && e.timestamp <= s.timestamp)
                .collect();
            let leg = events.iter().filter(|e| e.timestamp <= s.timestamp).count();
            let dt = if s.gps_speed < STATIC_SPEED_KNOTS { 0.25 } else { 0.0 };
            h = if between.iter().any(|e| e.kind.cleans_hull()) { 0.0 } else { h + dt * rates[leg] };
            p = if between.iter().any(|e| e.kind.cleans_propeller()) { 0.0 } else { p + dt * rates[leg] };
            hull_ref[i] = h;
            prop_ref[i] = p;

            prop_assert_eq!(fgf.total[i], fgf.hull[i] + fgf.propeller[i]);
            if i > 0 {
                let cleans_hull = between.iter().any(|e| e.kind.cleans_hull());
                let cleans_prop = between.iter().any(|e| e.kind.cleans_propeller());
                if cleans_hull {
                    prop_assert_eq!(fgf.hull[i], 0.0);
                } else {
                    prop_assert!(fgf.hull[i] >= fgf.hull[i - 1]);
                }
                if cleans_prop {
                    prop_assert_eq!(fgf.propeller[i], 0.0);
                } else {
                    prop_assert!(fgf.propeller[i] >= fgf.propeller[i - 1]);
                }
            }
        }
        for i in 0..samples.len() {
            prop_assert!((fgf.hull[i] - hull_ref[i]).abs() <= 1e-12 * hull_ref[i].max(1e-3));
            prop_assert!((fgf.propeller[i] - prop_ref[i]).abs() <= 1e-12 * prop_ref[i].max(1e-3));
        }
    }

    #[test]
    fn voyage_csv_round_trip_is_byte_stable(seed in any::<u64>()) {
        let mut r = rng(seed);
        let mut samples: Vec<_> = (0..r.random_range(1..40))
            .map(|i| {
                let mut s = sample(t0() + Duration::minutes(15 * i), r.random_range(0.0..18.0));
                s.shaft_power = r.random_range(0.0..12_000.0);
                s.long_wind_speed = r.random_range(-20.0..20.0);
                s.sig_wave_height = r.random_range(0.0..6.0);
                s
            })
            .collect();
        samples[0].cargo_weight = Some(r.random_range(0.0..30_000.0));
        let mut first = Vec::new();
        write_voyage_csv(&mut first, &samples).unwrap();
        let back = read_voyage_csv(first.as_slice(), &VoyageSchema::default()).unwrap();
        prop_assert_eq!(back.dropped_count(), 0);
        prop_assert_eq!(&back.samples, &samples);
        let mut second = Vec::new();
        write_voyage_csv(&mut second, &back.samples).unwrap();
        prop_assert_eq!(first, second);
    }
}

fn admiralty_cloud(seed: u64, n: usize, noise: f64, m: f64, k: f64) -> Vec<AdmiraltyPoint> {
    let mut r = rng(seed);
    let eps = Normal::new(0.0, noise.max(f64::MIN_POSITIVE)).unwrap();
    (0..n)
        .map(|index| {
            let displacement = r.random_range(15_000.0..33_000.0);
            let speed = r.random_range(8.0..16.0);
            let clean = 0.02 * f64::powf(displacement, m) * f64::powf(speed, k);
            let factor = if noise > 0.0 { 1.0 + eps.sample(&mut r) } else { 1.0 };
            AdmiraltyPoint {
                index,
                displacement,
                speed,
                power: clean * factor,
            }
        })
        .collect()
}

#[test]
fn admiralty_exponents_exact_without_noise() {
    for seed in 0..5 {
        let fit = fit_admiralty_exponents(&admiralty_cloud(seed, 200, 0.0, 2.0 / 3.0, 3.0)).unwrap();
        assert!((fit.m_exp - 2.0 / 3.0).abs() < 1e-6, "seed {seed}: m {}", fit.m_exp);
        assert!((fit.n_exp - 3.0).abs() < 1e-6, "seed {seed}: n {}", fit.n_exp);
    }
}

#[test]
fn admiralty_exponents_within_tolerance_under_noise() {
    for seed in 0..20 {
        let fit = fit_admiralty_exponents(&admiralty_cloud(100 + seed, 500, 0.02, 2.0 / 3.0, 3.0)).unwrap();
        assert!((fit.m_exp - 2.0 / 3.0).abs() < 0.1, "seed {seed}: m {}", fit.m_exp);
        assert!((fit.n_exp - 3.0).abs() < 0.1, "seed {seed}: n {}", fit.n_exp);
    }
}

#[test]
fn friction_difference_vanishes_when_power_matches_resistance() {
    let ship = synthetic_ship();
    let est = DefaultEstimator;
    let mut r = rng(3);
    for i in 0..200 {
        let mut s = sample(t0() + Duration::minutes(15 * i), r.random_range(6.0..17.0));
        s.log_speed = s.gps_speed + r.random_range(-1.0..1.0);
        s.draft_fore = r.random_range(6.0..11.0);
        s.draft_aft = s.draft_fore + r.random_range(-1.5..1.5);
        s.long_wind_speed = r.random_range(-15.0..15.0);
        s.sig_wave_height = r.random_range(0.0..4.0);
        s.rel_mean_wave_dir = r.random_range(0.0..180.0);
        let resistance = est.calm(&s, &ship) + est.wind(&s, &ship) + est.wave(&s, &ship);
        let eta = ship.propulsive_efficiency.at(s.log_speed).unwrap();
        s.shaft_power = resistance * s.log_speed * KNOT / eta / 1000.0;
        let d = delta_cf(&s, &ship, &est).unwrap();
        assert!(d.delta_cf.abs() < 1e-12, "sample {i}: {:e}", d.delta_cf);
    }
}
