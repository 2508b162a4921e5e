//! Independent reference computations shared by the integration tests and
//! the acceptance runner. None of them call the routine they check.

#![allow(dead_code)]

use chrono::{DateTime, Duration, TimeZone, Utc};
use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use shipperf::ann::{Masks, Mlp};
use shipperf::data_model::{CleaningEvent, EventKind, VoyageSample};
use shipperf::preprocessing::{Scaling, Standardizer};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_matrix(rng: &mut impl Rng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| StandardNormal.sample(rng))
}

/// Columns centred and scaled to unit sample standard deviation.
pub fn standardize(m: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = m.clone();
    let n = m.nrows() as f64;
    for mut col in out.column_iter_mut() {
        let mu = col.sum() / n;
        col.add_scalar_mut(-mu);
        let sd = (col.norm_squared() / (n - 1.0)).sqrt();
        col /= sd;
    }
    out
}

pub fn identity_scaling(n_in: usize, n_out: usize) -> Scaling {
    let names = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect();
    Scaling {
        x: Standardizer::identity(names("x", n_in)),
        y: Standardizer::identity(names("y", n_out)),
    }
}

/// Least squares through the normal equations, solved by Cholesky.
pub fn ols_predict(x: &DMatrix<f64>, y: &DMatrix<f64>) -> DMatrix<f64> {
    let gram = x.tr_mul(x);
    let chol = gram.cholesky().expect("full-rank design");
    x * chol.solve(&x.tr_mul(y))
}

pub fn relative_rms(a: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    (a - reference).norm() / reference.norm()
}

/// PLS2 regression operator where each X weight is the dominant eigenvector
/// of `EᵀF FᵀE` on the deflated blocks, instead of a power iteration.
pub fn eigen_pls_operator(x: &DMatrix<f64>, y: &DMatrix<f64>, a: usize) -> DMatrix<f64> {
    let (n, k) = (x.ncols(), y.ncols());
    let (mut e, mut f) = (x.clone(), y.clone());
    let mut w_all = DMatrix::zeros(n, a);
    let mut p_all = DMatrix::zeros(n, a);
    let mut c_all = DMatrix::zeros(k, a);
    for comp in 0..a {
        let cross = e.tr_mul(&f);
        let eig = SymmetricEigen::new(&cross * cross.transpose());
        let top = eig.eigenvalues.imax();
        let w = eig.eigenvectors.column(top).normalize();
        let t = &e * &w;
        let tt = t.dot(&t);
        let p = e.tr_mul(&t) / tt;
        let c = f.tr_mul(&t) / tt;
        e -= &t * p.transpose();
        f -= &t * c.transpose();
        w_all.set_column(comp, &w);
        p_all.set_column(comp, &p);
        c_all.set_column(comp, &c);
    }
    let inner = (p_all.transpose() * &w_all).try_inverse().expect("PᵀW invertible");
    w_all * inner * c_all.transpose()
}

/// Ratio of the second to the first eigenvalue of `EᵀF FᵀE` at each of the
/// first `a` components: the contraction factor of a power iteration.
pub fn pls_eigen_ratios(x: &DMatrix<f64>, y: &DMatrix<f64>, a: usize) -> Vec<f64> {
    let (mut e, mut f) = (x.clone(), y.clone());
    let mut out = Vec::with_capacity(a);
    for _ in 0..a {
        let cross = e.tr_mul(&f);
        let eig = SymmetricEigen::new(&cross * cross.transpose());
        let mut vals: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        vals.sort_by(|p, q| q.total_cmp(p));
        out.push(vals.get(1).copied().unwrap_or(0.0).max(0.0) / vals[0]);
        let w = eig.eigenvectors.column(eig.eigenvalues.imax()).normalize();
        let t = &e * &w;
        let tt = t.dot(&t);
        let p = e.tr_mul(&t) / tt;
        let c = f.tr_mul(&t) / tt;
        e -= &t * p.transpose();
        f -= &t * c.transpose();
    }
    out
}

/// Largest absolute cosine between distinct columns.
pub fn max_column_cosine(t: &DMatrix<f64>) -> f64 {
    let mut worst: f64 = 0.0;
    for i in 0..t.ncols() {
        for j in 0..i {
            let c = t.column(i).dot(&t.column(j)) / (t.column(i).norm() * t.column(j).norm());
            worst = worst.max(c.abs());
        }
    }
    worst
}

/// Central differences of the masked loss in every parameter.
pub fn finite_difference_gradient(mlp: &Mlp, x: &DMatrix<f64>, y: &DMatrix<f64>, masks: &Masks, h: f64) -> Vec<f64> {
    let base = mlp.flat_params();
    let mut probe = mlp.clone();
    (0..base.len())
        .map(|i| {
            let mut p = base.clone();
            p[i] = base[i] + h;
            probe.set_flat_params(&p);
            let up = probe.loss(x, y, Some(masks));
            p[i] = base[i] - h;
            probe.set_flat_params(&p);
            let down = probe.loss(x, y, Some(masks));
            (up - down) / (2.0 * h)
        })
        .collect()
}

pub fn vec_relative_error(a: &[f64], b: &[f64]) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(u, v)| (u - v).powi(2)).sum::<f64>().sqrt();
    let na: f64 = a.iter().map(|v| v * v).sum::<f64>().sqrt();
    let nb: f64 = b.iter().map(|v| v * v).sum::<f64>().sqrt();
    diff / na.max(nb).max(f64::MIN_POSITIVE)
}

pub fn t0() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2021, 1, 1, 0, 0, 0).unwrap()
}

/// A sailing or static sample with neutral environment fields.
pub fn sample(t: DateTime<Utc>, gps_speed: f64) -> VoyageSample {
    VoyageSample {
        timestamp: t,
        shaft_rpm: 6.9 * gps_speed,
        shaft_power: 0.0,
        gps_speed,
        log_speed: gps_speed,
        draft_fore: 7.0,
        draft_aft: 7.0,
        latitude: 10.0,
        longitude: -30.0,
        heading: 0.0,
        cargo_weight: None,
        long_wind_speed: 0.0,
        trans_wind_speed: 0.0,
        long_current_speed: 0.0,
        sig_wave_height: 0.0,
        rel_mean_wave_dir: 0.0,
        mean_wave_period: 0.0,
        rel_wind_speed: None,
        rel_wind_dir: None,
    }
}

/// Random port/sea schedule at 15-minute resolution with random cleanings
/// placed between samples.
pub fn random_schedule(seed: u64) -> (Vec<VoyageSample>, Vec<CleaningEvent>, Vec<f64>) {
    let mut r = rng(seed);
    let mut samples = Vec::new();
    let mut t = t0();
    let n_phases = r.random_range(6..20);
    for _ in 0..n_phases {
        let port = r.random_range(4..200);
        for _ in 0..port {
            samples.push(sample(t, r.random_range(0.0..2.9)));
            t += Duration::minutes(15);
        }
        let sail = r.random_range(20..600);
        let cruise = r.random_range(8.0..16.0);
        for _ in 0..sail {
            samples.push(sample(t, cruise + r.random_range(-0.5..0.5)));
            t += Duration::minutes(15);
        }
    }
    let n_events = r.random_range(0..5);
    let span = (samples.len() - 1) as i64 * 15;
    let mut events: Vec<CleaningEvent> = (0..n_events)
        .map(|_| CleaningEvent {
            timestamp: t0() + Duration::minutes(r.random_range(1..span)) + Duration::seconds(30),
            kind: [EventKind::Hull, EventKind::Propeller, EventKind::HullAndPropeller][r.random_range(0..3)],
        })
        .collect();
    events.sort_by_key(|e| e.timestamp);
    let rates = (0..=events.len()).map(|_| r.random_range(1e-6..1e-4)).collect();
    (samples, events, rates)
}
