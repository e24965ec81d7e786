use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::fit::{self, linear_fit};
use super::report::{Check, EstimateReport, Provenance, Row};
use super::{default_coefficients, Experiment};
use crate::coeff::{self, CoefficientDecomposition, CoefficientSpec, GKind};
use crate::czop::{commutator_apply, Multiplier, Window};
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Space};
use crate::lpcalc::{self, band_weights};
use crate::norms::{self, CellPartition, WeightProfile};
use crate::solver;
use crate::spacetime::{SpaceTimeField, TimeGrid};

/// Declared bound for `||Mf||_1 / N_{mu,beta}(f)`.
pub const C_LOG: f64 = 2.0;
/// Least growth of `||Mf||_1 / ||f||_1` across the spike family.
pub const PLAIN_GROWTH_MIN: f64 = 1.5;
pub const SPIKE_BAND_MAX: f64 = 3.0;
pub const COMMUTATOR_SLOPE_MAX: f64 = 0.15;
pub const COMMUTATOR_RATE_MAX: f64 = 20.0;
pub const VANISHING_TOL: f64 = 1e-12;
pub const TRIFREQUENCY_SLOPE_MAX: f64 = -0.8;
pub const MULTILINEAR_R2_MIN: f64 = 0.8;
pub const MULTILINEAR_SPREAD_MAX: f64 = 10.0;
pub const INTERPOLATION_SPREAD_MAX: f64 = 3.0;
/// The simplex bound holds with constant one; the slack absorbs quadrature.
pub const SIMPLEX_CONSTANT: f64 = 1.02;
pub const SIMPLEX_VOLUME_TOL: f64 = 0.02;
pub const LOG_LOSS_R2_MIN: f64 = 0.9;
pub const LOG_LOSS_SPREAD_MAX: f64 = 3.0;
pub const LOG_LOSS_DELTA0_MAX: f64 = 0.2;

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Independent stream for one case of one experiment.
fn case_rng(seed: u64, tags: &[u64]) -> ChaCha8Rng {
    let s = tags.iter().fold(splitmix(seed), |acc, &t| splitmix(acc ^ splitmix(t)));
    ChaCha8Rng::seed_from_u64(s)
}

fn l1(f: &Field) -> f64 {
    norms::lp_norm(f, 1.0).expect("physical field")
}

/// Smooth bump of peak one and radius `radius` around `center`.
pub fn spike(grid: &Grid, center: (f64, f64), radius: f64) -> Field {
    Field::from_fn(grid, |x1, x2| {
        let s = grid.torus_distance((x1, x2), center) / radius;
        let v = if s < 1.0 {
            (1.0 - 1.0 / (1.0 - s * s)).exp()
        } else {
            0.0
        };
        Complex64::new(v, 0.0)
    })
}

/// Bump with unit `L^1` norm and peak close to `height`.
pub fn unit_mass_spike(grid: &Grid, center: (f64, f64), height: f64) -> Field {
    // The profile integrates to about 0.4 * r^2 over the plane.
    let r = (1.0 / (0.4 * height.max(1e-3))).sqrt().max(0.75 * grid.spacing());
    let f = spike(grid, center, r);
    f.scale(1.0 / l1(&f))
}

fn random_point(grid: &Grid, rng: &mut impl Rng) -> (f64, f64) {
    let n = grid.n();
    grid.point(rng.gen_range(0..n) * n + rng.gen_range(0..n))
}

/// A few signed bumps of random radius, normalized to unit `L^1` norm.
pub fn random_l1_field(grid: &Grid, rng: &mut impl Rng) -> Field {
    let pieces = rng.gen_range(1..=3);
    let mut f = Field::zeros(grid, Space::Physical);
    let (lo, hi) = ((1.5 * grid.spacing()).ln(), 1.0f64.ln());
    for _ in 0..pieces {
        let center = random_point(grid, rng);
        let radius = rng.gen_range(lo..hi).exp();
        let sign = if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        let weight = sign * rng.gen_range(0.3..1.0) / (radius * radius);
        f.axpy(weight, &spike(grid, center, radius));
    }
    f.scale(1.0 / l1(&f))
}

fn provenance(grid: &Grid, seed: u64, time_steps: Option<usize>, operator: Option<&Multiplier>) -> Provenance {
    Provenance {
        seed,
        grid: grid.n(),
        time_steps,
        operator: operator.map(|m| m.label().to_string()),
        settings: BTreeMap::new(),
    }
}

fn setting(report: &mut EstimateReport, key: &str, value: impl Serialize) {
    report.provenance.settings.insert(
        key.to_string(),
        serde_json::to_value(value).expect("serializable setting"),
    );
}

fn require_unlocalized(m: &Multiplier) -> Result<()> {
    if m.localization().is_some() {
        return Err(Error::InvalidArgument(format!(
            "experiment needs an unlocalized operator, got {}",
            m.label()
        )));
    }
    Ok(())
}

/// `||Mf||_1 <= C N_{mu,beta}(f)` over a bank of amplitudes `2^0 .. 2^10`,
/// plus a unit-mass spike family showing that `||Mf||_1 / ||f||_1` grows.
///
/// Families in the CSV: 0 = bank against `N`, 1 = spikes against `N`,
/// 2 = spikes against `||f||_1`.
pub fn check_log_l1(m: &Multiplier, bank_size: usize, mu: f64, seed: u64) -> Result<EstimateReport> {
    require_unlocalized(m)?;
    if bank_size == 0 {
        return Err(Error::InvalidArgument("bank_size must be positive".into()));
    }
    let grid = m.grid().clone();
    let beta = WeightProfile::new(&grid);
    let cells = CellPartition::new(&grid)?;
    let mut report = EstimateReport::new(
        Experiment::LogL1.id(),
        &["family", "index", "linf"],
        provenance(&grid, seed, None, Some(m)),
    );
    setting(&mut report, "bank_size", bank_size);
    setting(&mut report, "mu", mu);

    struct Sample {
        linf: f64,
        lhs: f64,
        full: f64,
        simple: f64,
        weak: f64,
        l1: f64,
    }
    let measure = |f: Field| -> Result<Sample> {
        let mf = m.apply(&f)?;
        Ok(Sample {
            linf: f.max_abs(),
            lhs: l1(&mf),
            full: norms::n_mu_beta_with(&f, mu, &beta, &cells, true)?,
            simple: norms::n_mu_beta_with(&f, mu, &beta, &cells, false)?,
            weak: norms::weak_l1(&mf),
            l1: l1(&f),
        })
    };

    let bank: Vec<Sample> = (0..bank_size)
        .into_par_iter()
        .map(|i| {
            let mut rng = case_rng(seed, &[1, i as u64]);
            let exponent = if bank_size > 1 {
                10.0 * i as f64 / (bank_size - 1) as f64
            } else {
                0.0
            };
            let shape = random_l1_field(&grid, &mut rng);
            let f = shape.scale(2f64.powf(exponent) / shape.max_abs());
            measure(f)
        })
        .collect::<Result<_>>()?;
    let spikes: Vec<Sample> = (0..=10)
        .into_par_iter()
        .map(|j| measure(unit_mass_spike(&grid, grid.center(), 2f64.powi(j))))
        .collect::<Result<_>>()?;

    for (i, s) in bank.iter().enumerate() {
        report.push(Row::new(vec![0.0, i as f64, s.linf], s.lhs, s.full));
    }
    for (j, s) in spikes.iter().enumerate() {
        report.push(Row::new(vec![1.0, j as f64, s.linf], s.lhs, s.full));
    }
    for (j, s) in spikes.iter().enumerate() {
        report.push(Row::new(vec![2.0, j as f64, s.linf], s.lhs, s.l1));
    }

    let c_log = report
        .rows
        .iter()
        .filter(|r| r.params[0] < 2.0)
        .map(|r| r.ratio)
        .fold(0.0, f64::max);
    let plain: Vec<f64> = spikes.iter().map(|s| s.lhs / s.l1).collect();
    let against_n: Vec<f64> = spikes.iter().map(|s| s.lhs / s.full).collect();
    let plain_growth = plain[plain.len() - 1] / plain[0];
    let log_heights: Vec<f64> = spikes.iter().map(|s| s.linf.log2()).collect();
    let plain_fit = linear_fit(&log_heights, &plain);
    let spike_band = fit::max(&against_n) / fit::min(&against_n);
    let sensitivity = bank
        .iter()
        .chain(&spikes)
        .map(|s| (s.lhs / s.simple) / (s.lhs / s.full) - 1.0)
        .map(f64::abs)
        .fold(0.0, f64::max);
    let c_weak = bank.iter().map(|s| s.weak / s.l1).fold(0.0, f64::max);
    let c_log_simple = bank
        .iter()
        .chain(&spikes)
        .map(|s| s.lhs / s.simple)
        .fold(0.0, f64::max);

    report.fit("c_log", c_log);
    report.fit("plain_ratio_growth", plain_growth);
    report.fit("plain_ratio_slope_per_log2_height", plain_fit.slope);
    report.fit("spike_ratio_max_over_min", spike_band);
    report.fit("neighbor_sum_sensitivity", sensitivity);
    report.fit("c_weak", c_weak);
    report.fit("c_log_simple", c_log_simple);
    report.check(Check::at_most("c_log", c_log, C_LOG));
    report.check(Check::at_least("plain_ratio_growth", plain_growth, PLAIN_GROWTH_MIN));
    report.check(Check::at_most("spike_ratio_max_over_min", spike_band, SPIKE_BAND_MAX));
    report.note(format!(
        "dropping the neighbour sum changes the ratio by at most {:.2}%; verdict {} under the simplified functional",
        100.0 * sensitivity,
        if c_log_simple <= C_LOG { "unchanged" } else { "flips" }
    ));
    Ok(report)
}

/// `||[(M^n)_{>=k}, a_k] f||_1 / (||a_k||_inf ||f||_1)`, maximized over a bank
/// of random pairs for each `(n, k)`.
pub fn check_commutator(
    m: &Multiplier,
    n_values: &[u32],
    k_values: &[usize],
    bank_size: usize,
    seed: u64,
) -> Result<EstimateReport> {
    require_unlocalized(m)?;
    if n_values.is_empty() || k_values.len() < 2 || bank_size == 0 {
        return Err(Error::InvalidArgument(
            "commutator sweep needs n values, at least two bands and a bank".into(),
        ));
    }
    let grid = m.grid().clone();
    for &k in k_values {
        lpcalc::check_band(&grid, k)?;
    }
    let mut report = EstimateReport::new(
        Experiment::Commutator.id(),
        &["n", "k"],
        provenance(&grid, seed, None, Some(m)),
    );
    setting(&mut report, "bank_size", bank_size);
    setting(&mut report, "n", n_values);
    setting(&mut report, "k", k_values);

    let mut table: BTreeMap<(u32, usize), f64> = BTreeMap::new();
    for &n in n_values {
        let power = m.power(n)?;
        for &k in k_values {
            let high = power.localize(Window::AtOrAbove(k))?;
            let samples: Vec<(f64, f64)> = (0..bank_size)
                .into_par_iter()
                .map(|i| {
                    // The same pairs are reused for every n.
                    let mut rng = case_rng(seed, &[2, k as u64, i as u64]);
                    let a = coeff::random_band_atom_rng(&grid, k, &mut rng, 1.0)?;
                    let f = random_l1_field(&grid, &mut rng);
                    let c = commutator_apply(&high, &a, &f)?;
                    Ok((l1(&c), a.max_abs() * l1(&f)))
                })
                .collect::<Result<_>>()?;
            let (lhs, rhs) = samples
                .into_iter()
                .max_by(|x, y| (x.0 / x.1).total_cmp(&(y.0 / y.1)))
                .expect("nonempty bank");
            let row = Row::new(vec![n as f64, k as f64], lhs, rhs);
            table.insert((n, k), row.ratio);
            report.push(row);
        }
    }

    let ks: Vec<f64> = k_values.iter().map(|&k| k as f64).collect();
    let mut worst_slope = f64::NEG_INFINITY;
    for &n in n_values {
        let y: Vec<f64> = k_values.iter().map(|&k| table[&(n, k)].log2()).collect();
        let f = linear_fit(&ks, &y);
        report.fit(&format!("slope_n{n}"), f.slope);
        worst_slope = worst_slope.max(f.slope);
    }
    let mut rate: f64 = 0.0;
    for w in n_values.windows(2) {
        for &k in k_values {
            rate = rate.max(table[&(w[1], k)] / table[&(w[0], k)]);
        }
    }
    report.fit("max_slope", worst_slope);
    report.check(Check::at_most("max_slope", worst_slope, COMMUTATOR_SLOPE_MAX));
    if n_values.len() >= 2 {
        report.fit("geometric_rate", rate);
        report.check(Check::at_most("geometric_rate", rate, COMMUTATOR_RATE_MAX));
    }
    Ok(report)
}

/// Radial support `[lo, hi)` of the band-`k` weight.
fn band_support(k: usize) -> (f64, f64) {
    if k == 0 {
        (0.0, 2.0)
    } else {
        (2f64.powi(k as i32 - 1), 2f64.powi(k as i32 + 1))
    }
}

/// True when `P_{l_prev}(a_k P_l h)` vanishes by support arithmetic alone.
pub fn trifrequency_vanishes(l_prev: usize, k: usize, l: usize) -> bool {
    let (a_lo, a_hi) = band_support(k);
    let (h_lo, h_hi) = band_support(l);
    let (o_lo, o_hi) = band_support(l_prev);
    let sum_lo = (a_lo - h_hi).max(h_lo - a_hi).max(0.0);
    let sum_hi = a_hi + h_hi;
    sum_hi <= o_lo || sum_lo >= o_hi
}

/// `min(|l - l_prev|, |l - k|)`.
pub fn separation(l_prev: usize, k: usize, l: usize) -> usize {
    l.abs_diff(l_prev).min(l.abs_diff(k))
}

/// The separation sweep `(k, k, l)` for `l = k..0`, the three ordering cases
/// and a set of support-vanishing triples.
pub fn default_triples(k_max: usize) -> Vec<[usize; 3]> {
    let k = k_max.min(5);
    let mut out: Vec<[usize; 3]> = (0..=k).rev().map(|l| [k, k, l]).collect();
    if k >= 3 {
        out.extend([[k - 2, k, k], [k - 1, k, k - 1], [k, k - 3, k], [k, k - 2, k - 1]]);
        out.extend([[0, k, 0], [1, k, 1], [k, 1, 1], [2, k, 1]]);
    }
    out
}

/// `||P_{l'} a_k P_l h||_1` against `||a_k||_{H^1} 2^{-min(|l-l'|, |l-k|)} ||h||_1`.
///
/// `h = M f` for a concentrated unit-mass `f`; `a_k` is a wave packet of random
/// width and direction centered on `f`. Rows keep the worst sample, and the
/// decay slope is fitted over the triples with `l' = k`.
pub fn check_trifrequency(
    m: &Multiplier,
    triples: &[[usize; 3]],
    bank_size: usize,
    seed: u64,
) -> Result<EstimateReport> {
    let grid = m.grid().clone();
    for t in triples {
        for &b in t {
            lpcalc::check_band(&grid, b)?;
        }
    }
    if bank_size == 0 {
        return Err(Error::InvalidArgument("bank_size must be positive".into()));
    }
    let mut report = EstimateReport::new(
        Experiment::Trifrequency.id(),
        &["l_prev", "k", "l", "separation", "vanishing"],
        provenance(&grid, seed, None, Some(m)),
    );
    setting(&mut report, "bank_size", bank_size);
    setting(&mut report, "triples", triples);

    let mut vanishing_worst: f64 = 0.0;
    let mut any_vanishing = false;
    for (t, &[l_prev, k, l]) in triples.iter().enumerate() {
        let sep = separation(l_prev, k, l);
        let vanishes = trifrequency_vanishes(l_prev, k, l);
        let samples: Vec<(f64, f64, f64)> = (0..bank_size)
            .into_par_iter()
            .map(|i| {
                let mut rng = case_rng(seed, &[3, t as u64, i as u64]);
                let center = random_point(&grid, &mut rng);
                let f = unit_mass_spike(&grid, center, f64::INFINITY);
                let h = m.apply(&f)?;
                let width = 2f64.powf(-rng.gen_range(0.0..=k as f64));
                let angle = rng.gen_range(0.0..2.0 * PI);
                let phase = rng.gen_range(0.0..2.0 * PI);
                let a = coeff::wave_packet(&grid, k, center, width, angle, phase, 1.0)?;
                let out = lpcalc::project_band(&a.mul(&lpcalc::project_band(&h, l)?)?, l_prev)?;
                let h_l1 = l1(&h);
                let a_h1 = norms::sobolev_norm(&a, 1.0)?;
                let lhs = l1(&out);
                Ok((lhs, a_h1 * h_l1 * 2f64.powi(-(sep as i32)), lhs / (a.max_abs() * h_l1)))
            })
            .collect::<Result<_>>()?;
        if vanishes {
            any_vanishing = true;
            vanishing_worst = samples.iter().map(|s| s.2).fold(vanishing_worst, f64::max);
        }
        let (lhs, rhs, _) = samples
            .into_iter()
            .max_by(|x, y| (x.0 / x.1).total_cmp(&(y.0 / y.1)))
            .expect("nonempty bank");
        report.push(Row::new(
            vec![l_prev as f64, k as f64, l as f64, sep as f64, f64::from(u8::from(vanishes))],
            lhs,
            rhs,
        ));
    }

    let live: Vec<Row> = report.rows.iter().filter(|r| r.params[4] == 0.0).cloned().collect();
    let c_tri = live.iter().map(|r| r.ratio).fold(0.0, f64::max);
    report.fit("c_trifrequency", c_tri);
    // Raw ratio lhs / (||a||_{H^1} ||h||_1) is ratio * 2^{-separation}.
    let sweep: Vec<(f64, f64)> = live
        .iter()
        .filter(|r| r.params[0] == r.params[1])
        .map(|r| (r.params[3], r.ratio.log2() - r.params[3]))
        .collect();
    let mut seps: Vec<f64> = sweep.iter().map(|s| s.0).collect();
    seps.dedup();
    if seps.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = sweep.into_iter().unzip();
        let f = linear_fit(&x, &y);
        report.fit("decay_slope", f.slope);
        report.fit("decay_intercept", f.intercept);
        report.fit("decay_r2", f.r2);
        report.check(Check::at_most("decay_slope", f.slope, TRIFREQUENCY_SLOPE_MAX));
    } else {
        report.note("fewer than two separations with l_prev = k; no decay fit");
    }
    if any_vanishing {
        report.fit("vanishing_max_relative", vanishing_worst);
        report.check(Check::at_most("vanishing_max_relative", vanishing_worst, VANISHING_TOL));
    }
    Ok(report)
}

/// `||M a_k1 M a_k2 ... a_kn M f||_1 / (A N(f))` with `A = prod ||a_ki||_{H^1}`.
///
/// Atoms are `P_k` of a point mass at the center of the spike bank; each row
/// keeps the worst spike. Band tuples are drawn uniformly from `1..=k_max`.
pub fn check_multilinear(
    m: &Multiplier,
    n_values: &[usize],
    tuples: usize,
    f_bank: usize,
    seed: u64,
) -> Result<EstimateReport> {
    require_unlocalized(m)?;
    if n_values.len() < 2 || tuples == 0 || f_bank == 0 || n_values.contains(&0) {
        return Err(Error::InvalidArgument(
            "multilinear sweep needs at least two positive n, tuples and a spike bank".into(),
        ));
    }
    let grid = m.grid().clone();
    let n_width = *n_values.iter().max().expect("nonempty");
    let mut names: Vec<String> = vec!["n".into(), "sample".into()];
    names.extend((1..=n_width).map(|i| format!("k{i}")));
    let name_refs: Vec<&str> = names.iter().map(String::as_str).collect();
    let mut report = EstimateReport::new(
        Experiment::Multilinear.id(),
        &name_refs,
        provenance(&grid, seed, None, Some(m)),
    );
    setting(&mut report, "tuples", tuples);
    setting(&mut report, "f_bank", f_bank);
    setting(&mut report, "n", n_values);

    let center = grid.center();
    let atoms: Vec<Field> = (0..=grid.k_max())
        .map(|k| coeff::centered_band_atom(&grid, k, center, 1.0))
        .collect::<Result<_>>()?;
    let bank: Vec<(Field, f64)> = (0..f_bank)
        .map(|j| {
            let e = if f_bank > 1 {
                2.0 + 8.0 * j as f64 / (f_bank - 1) as f64
            } else {
                6.0
            };
            let f = unit_mass_spike(&grid, center, 2f64.powf(e));
            let nf = norms::n_of_field(&f)?;
            Ok((m.apply(&f)?, nf))
        })
        .collect::<Result<_>>()?;
    let a_norm = |ks: &[usize]| -> Result<f64> {
        ks.iter()
            .map(|&k| norms::sobolev_norm(&atoms[k], 1.0))
            .product::<Result<f64>>()
    };

    let cases: Vec<(usize, usize)> = n_values
        .iter()
        .flat_map(|&n| (0..tuples).map(move |s| (n, s)))
        .collect();
    let rows: Vec<Row> = cases
        .par_iter()
        .map(|&(n, s)| {
            let mut rng = case_rng(seed, &[4, n as u64, s as u64]);
            let ks: Vec<usize> = (0..n).map(|_| rng.gen_range(1..=grid.k_max())).collect();
            let a = a_norm(&ks)?;
            let mut best: Option<(f64, f64)> = None;
            for (mf, nf) in &bank {
                let mut v = mf.clone();
                for &k in ks.iter().rev() {
                    v = m.apply(&atoms[k].mul(&v)?)?;
                }
                let cand = (l1(&v), a * nf);
                if best.is_none_or(|b| cand.0 / cand.1 > b.0 / b.1) {
                    best = Some(cand);
                }
            }
            let (lhs, rhs) = best.expect("nonempty bank");
            let mut params = vec![n as f64, s as f64];
            params.extend((0..n_width).map(|i| ks.get(i).map_or(-1.0, |&k| k as f64)));
            Ok(Row::new(params, lhs, rhs))
        })
        .collect::<Result<_>>()?;
    for r in rows {
        report.push(r);
    }

    let mut xs = Vec::new();
    let mut ys = Vec::new();
    let mut spread: f64 = 0.0;
    for &n in n_values {
        let ratios: Vec<f64> = report.rows_where("n", n as f64).iter().map(|r| r.ratio).collect();
        let worst = fit::max(&ratios);
        spread = spread.max(fit::max_over_median(&ratios));
        report.fit(&format!("max_ratio_n{n}"), worst);
        xs.push(n as f64);
        ys.push(worst.ln());
    }
    let f = linear_fit(&xs, &ys);
    let b = f.slope.exp();
    report.fit("b", b);
    report.fit("exponential_r2", f.r2);
    report.fit("spread", spread);
    // Under factorial growth the log-ratio is convex in n.
    report.fit("log_ratio_curvature", fit::second_difference_mean(&ys));
    report.check(Check::at_least("exponential_r2", f.r2, MULTILINEAR_R2_MIN));
    report.check(Check::at_most("spread", spread, MULTILINEAR_SPREAD_MAX));
    Ok(report)
}

/// Per band `k` of `b`: `sup_t ||b_k||_inf 2^{k/2}` (column 0) and
/// `sup_t ||b_k||_{H^1} 2^{k/2}` (column 1) against `||b_k||_2`.
pub fn check_interpolation(cd: &CoefficientDecomposition) -> Result<EstimateReport> {
    let grid = cd.grid().clone();
    if cd.b().max_abs() == 0.0 {
        return Err(Error::InvalidArgument("b vanishes identically".into()));
    }
    let time = cd.time_grid();
    let mut report = EstimateReport::new(
        Experiment::Interpolation.id(),
        &["k", "column"],
        provenance(&grid, 0, Some(time.steps()), None),
    );
    let bands = grid.k_max() + 1;
    let weights: Vec<Vec<f64>> = (0..bands).map(|k| band_weights(&grid, k)).collect();

    // Per node and band: (||b_k||_inf, ||b_k||_{H^1}, ||b_k||_{H^2}^2, ||d_t b_k||_{H^1}^2).
    let per_node: Vec<Vec<[f64; 4]>> = (0..time.nodes())
        .into_par_iter()
        .map(|j| {
            let b = cd.b().slice(j).forward()?;
            let bd = cd.b_dot().slice(j).forward()?;
            weights
                .iter()
                .map(|w| {
                    let bk = lpcalc::weight_spectrum(&b, w);
                    let bdk = lpcalc::weight_spectrum(&bd, w);
                    let h1 = norms::sobolev_norm_spectral(&bk, 1.0);
                    let h2 = norms::sobolev_norm_spectral(&bk, 2.0);
                    let bd1 = norms::sobolev_norm_spectral(&bdk, 1.0);
                    Ok([bk.inverse()?.max_abs(), h1, h2 * h2, bd1 * bd1])
                })
                .collect()
        })
        .collect::<Result<_>>()?;

    let mut norm2 = vec![0.0; bands];
    for (k, n2) in norm2.iter_mut().enumerate() {
        let h2: Vec<f64> = per_node.iter().map(|v| v[k][2]).collect();
        let bd: Vec<f64> = per_node.iter().map(|v| v[k][3]).collect();
        *n2 = (time.integrate(&h2) + time.integrate(&bd)).sqrt();
    }
    let total: f64 = norm2.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut linf_ratios = Vec::new();
    let mut h1_ratios = Vec::new();
    for k in 0..bands {
        if norm2[k] <= 1e-12 * total {
            report.note(format!("band {k} carries no mass; skipped"));
            continue;
        }
        let gain = 2f64.powf(k as f64 / 2.0);
        let sup_inf = per_node.iter().map(|v| v[k][0]).fold(0.0, f64::max);
        let sup_h1 = per_node.iter().map(|v| v[k][1]).fold(0.0, f64::max);
        let r0 = Row::new(vec![k as f64, 0.0], sup_inf * gain, norm2[k]);
        let r1 = Row::new(vec![k as f64, 1.0], sup_h1 * gain, norm2[k]);
        linf_ratios.push(r0.ratio);
        h1_ratios.push(r1.ratio);
        report.push(r0);
        report.push(r1);
    }
    if linf_ratios.is_empty() {
        return Err(Error::InvalidArgument("b has no resolved band mass".into()));
    }
    let spread = fit::max_over_median(&linf_ratios);
    report.fit("c_interpolation", fit::max(&linf_ratios));
    report.fit("linf_spread", spread);
    report.fit("h1_spread", fit::max_over_median(&h1_ratios));
    report.fit("c_interpolation_h1", fit::max(&h1_ratios));
    report.check(Check::at_most("linf_spread", spread, INTERPOLATION_SPREAD_MAX));
    Ok(report)
}

#[derive(Debug, Clone, Copy)]
enum Profile {
    /// `exp(sum_j c_j sin(2 pi j t + phi_j))`
    Trig([f64; 3], [f64; 3]),
    /// `floor + exp(-(t - center)^2 / (2 width^2))`
    Bump(f64, f64, f64),
}

impl Profile {
    fn random(rng: &mut impl Rng) -> Self {
        if rng.gen_bool(0.5) {
            let c = [(); 3].map(|_| rng.gen_range(-1.5..1.5));
            let phi = [(); 3].map(|_| rng.gen_range(0.0..2.0 * PI));
            Profile::Trig(c, phi)
        } else {
            Profile::Bump(rng.gen_range(0.0..1.0), rng.gen_range(0.02..0.3), rng.gen_range(0.01..0.5))
        }
    }

    fn eval(&self, t: f64) -> f64 {
        match *self {
            Profile::Trig(c, phi) => (0..3)
                .map(|j| c[j] * (2.0 * PI * (j + 1) as f64 * t + phi[j]).sin())
                .sum::<f64>()
                .exp(),
            Profile::Bump(center, width, floor) => {
                floor + (-(t - center).powi(2) / (2.0 * width * width)).exp()
            }
        }
    }
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Simplex integrals of random positive profiles against
/// `prod_{L^1} ||f_i||_1 prod_{L^2} ||f_j||_2 / sqrt((n - m)!)`.
///
/// Kind 0 rows are random profiles with `m` of them in the `L^1` role; kind 1
/// rows are the all-ones volume case.
pub fn check_simplex(n_values: &[usize], samples: usize, nodes: usize, seed: u64) -> Result<EstimateReport> {
    if n_values.iter().any(|&n| n == 0 || n > 7) || samples == 0 {
        return Err(Error::InvalidArgument("simplex sweep needs 1 <= n <= 7 and samples".into()));
    }
    let time = TimeGrid::new(nodes.max(2) - 1)?;
    let times = time.times();
    let mut report = EstimateReport::new(
        Experiment::Simplex.id(),
        &["n", "m", "sample", "kind"],
        Provenance {
            seed,
            grid: 0,
            time_steps: Some(time.steps()),
            operator: None,
            settings: BTreeMap::new(),
        },
    );
    setting(&mut report, "n", n_values);
    setting(&mut report, "samples", samples);

    let cases: Vec<(usize, usize, usize)> = n_values
        .iter()
        .flat_map(|&n| (0..=n).flat_map(move |m| (0..samples).map(move |s| (n, m, s))))
        .collect();
    let rows: Vec<Row> = cases
        .par_iter()
        .map(|&(n, m, s)| {
            let mut rng = case_rng(seed, &[6, n as u64, m as u64, s as u64]);
            let profiles: Vec<Profile> = (0..n).map(|_| Profile::random(&mut rng)).collect();
            let mut roles: Vec<bool> = (0..n).map(|i| i < m).collect();
            roles.shuffle(&mut rng);
            let closures: Vec<Box<dyn Fn(f64) -> f64 + Sync>> = profiles
                .iter()
                .map(|&p| Box::new(move |t: f64| p.eval(t)) as Box<dyn Fn(f64) -> f64 + Sync>)
                .collect();
            let refs: Vec<&dyn Fn(f64) -> f64> = closures.iter().map(|b| b.as_ref() as &dyn Fn(f64) -> f64).collect();
            let lhs = solver::simplex_integral(&refs, nodes)?;
            let mut rhs = 1.0 / factorial(n - m).sqrt();
            for (p, &is_l1) in profiles.iter().zip(&roles) {
                let samples: Vec<f64> = times.iter().map(|&t| p.eval(t)).collect();
                rhs *= if is_l1 {
                    time.integrate(&samples)
                } else {
                    let sq: Vec<f64> = samples.iter().map(|v| v * v).collect();
                    time.integrate(&sq).sqrt()
                };
            }
            Ok(Row::new(vec![n as f64, m as f64, s as f64, 0.0], lhs, rhs))
        })
        .collect::<Result<_>>()?;
    for r in rows {
        report.push(r);
    }
    let mut volume_error: f64 = 0.0;
    for &n in n_values {
        let one = |_: f64| 1.0;
        let refs: Vec<&dyn Fn(f64) -> f64> = (0..n).map(|_| &one as &dyn Fn(f64) -> f64).collect();
        let v = solver::simplex_integral(&refs, nodes)?;
        volume_error = volume_error.max((v * factorial(n) - 1.0).abs());
        report.push(Row::new(vec![n as f64, n as f64, 0.0, 1.0], v, 1.0));
    }
    let c_fit = report
        .rows
        .iter()
        .filter(|r| r.params[3] == 0.0)
        .map(|r| r.ratio)
        .fold(0.0, f64::max);
    report.fit("c_simplex", c_fit);
    report.fit("volume_relative_error", volume_error);
    report.check(Check::at_most("c_simplex", c_fit, SIMPLEX_CONSTANT));
    report.check(Check::at_most("volume_relative_error", volume_error, SIMPLEX_VOLUME_TOL));
    Ok(report)
}

/// Solves with the spike family `g_lambda` (unit space-time mass, peak
/// `lambda`) and compares `sup_t ||u||_1` with `N(g)`.
pub fn probe_log_loss(
    m: &Multiplier,
    cd: &CoefficientDecomposition,
    lambdas: &[f64],
    substeps: usize,
    seed: u64,
) -> Result<EstimateReport> {
    if cd.delta0() > LOG_LOSS_DELTA0_MAX {
        return Err(Error::InvalidArgument(format!(
            "log-loss probe needs delta0 <= {LOG_LOSS_DELTA0_MAX}, got {}",
            cd.delta0()
        )));
    }
    if lambdas.len() < 3 {
        return Err(Error::InvalidArgument("log-loss probe needs at least three lambdas".into()));
    }
    let grid = cd.grid().clone();
    let time = cd.time_grid();
    let mut report = EstimateReport::new(
        Experiment::LogLoss.id(),
        &["lambda"],
        provenance(&grid, seed, Some(time.steps()), Some(m)),
    );
    setting(&mut report, "lambda", lambdas);
    setting(&mut report, "substeps", substeps);
    setting(&mut report, "delta0", cd.delta0());

    // Sequential: each solve holds several full space-time fields.
    for &lambda in lambdas {
        let g = coeff::g_family(&grid, time, GKind::SpikeSweep, lambda, seed)?;
        let res = solver::reference_solve(cd, m, &g, substeps)?;
        report.push(Row::new(vec![lambda], res.sup_l1, norms::n_of_g(&g)));
    }

    let x: Vec<f64> = report.rows.iter().map(|r| r.params[0].ln()).collect();
    let y: Vec<f64> = report.rows.iter().map(|r| r.lhs).collect();
    let ratios: Vec<f64> = report.rows.iter().map(|r| r.ratio).collect();
    let f = linear_fit(&x, &y);
    let convexity = fit::second_difference_mean(&fit::residuals(&f, &x, &y));
    let spread = fit::max(&ratios) / fit::min(&ratios);
    report.fit("a", f.slope);
    report.fit("b", f.intercept);
    report.fit("r2", f.r2);
    report.fit("residual_second_difference_mean", convexity);
    report.fit("ratio_max_over_min", spread);
    report.check(Check::at_least("r2", f.r2, LOG_LOSS_R2_MIN));
    report.check(Check::at_most("residual_second_difference_mean", convexity, 0.0));
    report.check(Check::at_most("ratio_max_over_min", spread, LOG_LOSS_SPREAD_MAX));
    Ok(report)
}

/// Geometric decay rate of `sup_t ||J_n||_1` for each `delta0`.
///
/// The coefficient shapes are fixed by `seed`; only their common scale
/// changes between rows.
pub fn sweep_delta0(
    m: &Multiplier,
    spec: &CoefficientSpec,
    deltas: &[f64],
    g: &SpaceTimeField,
    n_max: usize,
    seed: u64,
) -> Result<EstimateReport> {
    if deltas.len() < 2 || deltas.windows(2).any(|w| w[1] <= w[0]) || deltas[0] < 0.0 {
        return Err(Error::InvalidArgument(
            "delta list must have at least two increasing non-negative entries".into(),
        ));
    }
    if n_max < 2 {
        return Err(Error::InvalidArgument("n_max must be at least 2".into()));
    }
    let grid = g.grid().clone();
    let time = g.time();
    let mut report = EstimateReport::new(
        Experiment::Delta0Sweep.id(),
        &["delta0", "n"],
        provenance(&grid, seed, Some(time.steps()), Some(m)),
    );
    setting(&mut report, "delta0", deltas);
    setting(&mut report, "n_max", n_max);
    let n_g = norms::n_of_g(g);
    let ns: Vec<f64> = (1..=n_max).map(|n| n as f64).collect();
    let mut rhos = Vec::with_capacity(deltas.len());
    for &delta in deltas {
        let cd = if delta == 0.0 {
            CoefficientDecomposition::zero(&grid, time)
        } else {
            coeff::synthesize(&grid, time, spec, delta, seed)?
        };
        let norms_j = solver::dyson_sup_l1(&cd, m, g, n_max)?;
        for (n, &v) in norms_j.iter().enumerate() {
            report.push(Row::new(vec![delta, n as f64], v, n_g));
        }
        let rho = if norms_j[1..].iter().all(|&v| v > 0.0) {
            let y: Vec<f64> = norms_j[1..].iter().map(|v| v.ln()).collect();
            linear_fit(&ns, &y).slope.exp()
        } else {
            0.0
        };
        report.fit(&format!("rho[{delta}]"), rho);
        rhos.push(rho);
    }
    let min_step = rhos
        .windows(2)
        .map(|w| if w[0] > 0.0 { w[1] / w[0] } else if w[1] > 0.0 { f64::INFINITY } else { 1.0 })
        .fold(f64::INFINITY, f64::min);
    report.fit("rho_min_step_ratio", min_step);
    // rho scales like a power of delta0; extrapolate to rho = 1.
    let positive: Vec<(f64, f64)> = deltas
        .iter()
        .zip(&rhos)
        .filter(|(d, r)| **d > 0.0 && **r > 0.0)
        .map(|(d, r)| (d.ln(), r.ln()))
        .collect();
    if positive.len() >= 2 {
        let (x, y): (Vec<f64>, Vec<f64>) = positive.into_iter().unzip();
        let f = linear_fit(&x, &y);
        if f.slope > 0.0 {
            let threshold = (-f.intercept / f.slope).exp();
            report.fit("contraction_threshold", threshold);
            report.note(format!("fitted rho reaches 1 at delta0 ~ {threshold:.4e}"));
        }
        report.fit("rho_power", f.slope);
    }
    report.check(Check::at_least("rho_min_step_ratio", min_step, 1.0));
    report.check(Check::at_most("rho_at_smallest_delta0", rhos[0], 1.0 - 1e-12));
    Ok(report)
}

/// Flat settings shared by every experiment; unused fields are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Settings {
    /// Points per axis; `None` picks 256, or 128 for time-dependent runs.
    pub grid: Option<usize>,
    pub nt: usize,
    pub seed: u64,
    pub operator: String,
    pub bank_size: usize,
    pub mu: f64,
    pub n: Vec<u32>,
    pub k: Vec<usize>,
    pub triples: Vec<[usize; 3]>,
    pub multilinear_n: Vec<usize>,
    pub tuples: usize,
    pub f_bank: usize,
    pub simplex_n: Vec<usize>,
    pub samples: usize,
    pub nodes: usize,
    pub lambda: Vec<f64>,
    pub delta: Vec<f64>,
    pub delta0: f64,
    pub substeps: usize,
    pub n_max: usize,
    pub g_lambda: f64,
    pub coefficients: Option<CoefficientSpec>,
}

impl Default for Settings {
    fn default() -> Self {
        Settings {
            grid: None,
            nt: 256,
            seed: 0,
            operator: "riesz(1,1)".into(),
            bank_size: 50,
            mu: 1.0,
            n: vec![1, 2, 3],
            k: Vec::new(),
            triples: Vec::new(),
            multilinear_n: vec![1, 2, 3, 4],
            tuples: 8,
            f_bank: 9,
            simplex_n: vec![2, 3, 4, 5, 6],
            samples: 20,
            nodes: 512,
            lambda: (2..=10).map(|j| 2f64.powi(j)).collect(),
            delta: vec![0.05, 0.1, 0.2, 0.4],
            delta0: 0.1,
            substeps: 1,
            n_max: 8,
            g_lambda: 16.0,
            coefficients: None,
        }
    }
}

impl Settings {
    pub fn grid_for(&self, experiment: Experiment) -> usize {
        self.grid.unwrap_or(match experiment {
            Experiment::LogLoss | Experiment::Delta0Sweep | Experiment::Interpolation => 128,
            _ => 256,
        })
    }
}

/// Runs one experiment from flat settings.
pub fn run(experiment: Experiment, s: &Settings) -> Result<EstimateReport> {
    let grid = Grid::torus(s.grid_for(experiment))?;
    let m = || Multiplier::parse(&grid, &s.operator);
    let time = || TimeGrid::new(s.nt);
    let spec = || {
        s.coefficients
            .clone()
            .unwrap_or_else(|| default_coefficients(grid.k_max()))
    };
    // delta0 = 0 is the decoupled equation with a = 0.
    let coefficients = || -> Result<CoefficientDecomposition> {
        if s.delta0 == 0.0 {
            Ok(CoefficientDecomposition::zero(&grid, time()?))
        } else {
            coeff::synthesize(&grid, time()?, &spec(), s.delta0, s.seed)
        }
    };
    let mut report = match experiment {
        Experiment::LogL1 => check_log_l1(&m()?, s.bank_size, s.mu, s.seed)?,
        Experiment::Commutator => {
            let k: Vec<usize> = if s.k.is_empty() {
                (1..=grid.k_max()).collect()
            } else {
                s.k.clone()
            };
            check_commutator(&m()?, &s.n, &k, s.bank_size, s.seed)?
        }
        Experiment::Trifrequency => {
            let triples = if s.triples.is_empty() {
                default_triples(grid.k_max())
            } else {
                s.triples.clone()
            };
            check_trifrequency(&m()?, &triples, s.bank_size, s.seed)?
        }
        Experiment::Multilinear => check_multilinear(&m()?, &s.multilinear_n, s.tuples, s.f_bank, s.seed)?,
        Experiment::Interpolation => {
            let cd = coefficients()?;
            let mut r = check_interpolation(&cd)?;
            r.provenance.seed = s.seed;
            r
        }
        Experiment::Simplex => check_simplex(&s.simplex_n, s.samples, s.nodes, s.seed)?,
        Experiment::LogLoss => {
            let cd = coefficients()?;
            probe_log_loss(&m()?, &cd, &s.lambda, s.substeps, s.seed)?
        }
        Experiment::Delta0Sweep => {
            let g = coeff::g_family(&grid, time()?, GKind::SpikeSweep, s.g_lambda, s.seed)?;
            sweep_delta0(&m()?, &spec(), &s.delta, &g, s.n_max, s.seed)?
        }
    };
    report.provenance.settings.insert(
        "resolved".into(),
        serde_json::to_value(s).expect("serializable settings"),
    );
    Ok(report)
}
