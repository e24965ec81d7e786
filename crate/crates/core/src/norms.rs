//! Scalar functionals on fields and space-time fields.

use std::f64::consts::PI;

use crate::coeff::CoefficientDecomposition;
use crate::error::{Error, Result};
use crate::grid::{Field, Grid, Space};
use crate::lpcalc::{band_weights, smooth_step};
use crate::spacetime::SpaceTimeField;

/// `log(2 + |x|)`.
pub fn log_plus(x: f64) -> f64 {
    (2.0 + x.abs()).ln()
}

/// Riemann-sum `L^p` norm; `p = f64::INFINITY` gives the max norm.
pub fn lp_norm(f: &Field, p: f64) -> Result<f64> {
    if !(p >= 1.0) {
        return Err(Error::InvalidArgument(format!("L^p needs p >= 1, got {p}")));
    }
    f.require_space(Space::Physical)?;
    if p.is_infinite() {
        return Ok(f.max_abs());
    }
    let area = f.grid().cell_area();
    let sum: f64 = if p == 1.0 {
        f.values().iter().map(|v| v.norm()).sum()
    } else if p == 2.0 {
        f.values().iter().map(|v| v.norm_sqr()).sum()
    } else {
        f.values().iter().map(|v| v.norm().powf(p)).sum()
    };
    Ok((area * sum).powf(1.0 / p))
}

fn weighted_spectral_norm(spectral: &Field, weight: impl Fn(usize) -> f64) -> f64 {
    spectral
        .values()
        .iter()
        .enumerate()
        .map(|(idx, v)| weight(idx) * v.norm_sqr())
        .sum::<f64>()
        .sqrt()
}

/// `H^s` norm with weight `(1 + |xi|^2)^s`.
pub fn sobolev_norm(f: &Field, s: f64) -> Result<f64> {
    let spectral = f.forward()?;
    Ok(sobolev_norm_spectral(&spectral, s))
}

pub fn sobolev_norm_spectral(spectral: &Field, s: f64) -> f64 {
    let grid = spectral.grid().clone();
    weighted_spectral_norm(spectral, |idx| {
        let r = grid.abs_wavevector(idx);
        (1.0 + r * r).powf(s)
    })
}

/// `||P_0 f||_2 + sum_{k >= 1} 2^k ||P_k f||_2` over the resolved bands.
pub fn besov_norm(f: &Field) -> Result<f64> {
    let spectral = f.forward()?;
    let grid = f.grid();
    let mut total = 0.0;
    for k in 0..=grid.k_max() {
        let w = band_weights(grid, k);
        let piece = weighted_spectral_norm(&spectral, |idx| w[idx] * w[idx]);
        total += if k == 0 { piece } else { 2f64.powi(k as i32) * piece };
    }
    Ok(total)
}

/// Measure of `{|f| > lambda}`.
pub fn distribution(f: &Field, lambda: f64) -> Result<f64> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be >= 0, got {lambda}")));
    }
    let count = f.values().iter().filter(|v| v.norm() > lambda).count();
    Ok(count as f64 * f.grid().cell_area())
}

/// `sup_lambda lambda |{|f| > lambda}|`, with `lambda` running over the
/// distinct sample magnitudes.
pub fn weak_l1(f: &Field) -> f64 {
    let mut mags: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
    mags.sort_by(|a, b| b.total_cmp(a));
    let area = f.grid().cell_area();
    let mut best: f64 = 0.0;
    let mut i = 0;
    while i < mags.len() {
        let lambda = mags[i];
        // Samples strictly above lambda are exactly the first i entries.
        best = best.max(lambda * i as f64 * area);
        while i < mags.len() && mags[i] == lambda {
            i += 1;
        }
    }
    best
}

/// Splits `f` into the part with `|f| < lambda` and the remainder.
pub fn level_split(f: &Field, lambda: f64) -> Result<(Field, Field)> {
    if !(lambda > 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be > 0, got {lambda}")));
    }
    let zero = num_complex::Complex64::new(0.0, 0.0);
    let low = f.map(|v| if v.norm() < lambda { v } else { zero });
    let high = f.map(|v| if v.norm() < lambda { zero } else { v });
    Ok((low, high))
}

/// `||g||_{L^1([0,1] x T^2)}` with the trapezoid rule in time.
pub fn spacetime_l1(g: &SpaceTimeField) -> f64 {
    let per_slice: Vec<f64> = g
        .slices()
        .iter()
        .map(|s| lp_norm(s, 1.0).expect("physical slices"))
        .collect();
    g.time().integrate(&per_slice)
}

/// `||g||_{L^1} log+ ||g||_{L^inf} + 1` over space-time.
pub fn n_of_g(g: &SpaceTimeField) -> f64 {
    spacetime_l1(g) * log_plus(g.max_abs()) + 1.0
}

/// Single-time version `||f||_1 log+ ||f||_inf + 1`.
pub fn n_of_field(f: &Field) -> Result<f64> {
    Ok(lp_norm(f, 1.0)? * log_plus(f.max_abs()) + 1.0)
}

/// Smooth partition of unity subordinate to a square lattice of centers.
///
/// Each axis carries `m = round(L)` centers at spacing `s = L / m`; the
/// one-dimensional weight is `1 - T(|t| / s)`, which pairs with its neighbour
/// to sum to one. Every cell is supported in a square of half-width `s`.
#[derive(Debug, Clone)]
pub struct CellPartition {
    grid: Grid,
    per_axis: usize,
    spacing: f64,
    weights: Vec<Vec<f64>>,
}

impl CellPartition {
    pub fn new(grid: &Grid) -> Result<Self> {
        let per_axis = grid.length().round().max(3.0) as usize;
        let spacing = grid.length() / per_axis as f64;
        let axis_weight = |x: f64, c: f64| {
            let d = (x - c).rem_euclid(grid.length());
            let d = d.min(grid.length() - d);
            1.0 - smooth_step(d / spacing)
        };
        let mut weights = Vec::with_capacity(per_axis * per_axis);
        for a1 in 0..per_axis {
            for a2 in 0..per_axis {
                let (c1, c2) = (a1 as f64 * spacing, a2 as f64 * spacing);
                weights.push(
                    (0..grid.len())
                        .map(|idx| {
                            let (x1, x2) = grid.point(idx);
                            axis_weight(x1, c1) * axis_weight(x2, c2)
                        })
                        .collect(),
                );
            }
        }
        Ok(CellPartition {
            grid: grid.clone(),
            per_axis,
            spacing,
            weights,
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn per_axis(&self) -> usize {
        self.per_axis
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn center(&self, cell: usize) -> (f64, f64) {
        (
            (cell / self.per_axis) as f64 * self.spacing,
            (cell % self.per_axis) as f64 * self.spacing,
        )
    }

    pub fn weights(&self, cell: usize) -> &[f64] {
        &self.weights[cell]
    }

    /// Lattice distance between two cells, measured on the periodic index lattice.
    pub fn lattice_distance(&self, a: usize, b: usize) -> f64 {
        let m = self.per_axis as i64;
        let wrap = |d: i64| {
            let d = d.rem_euclid(m);
            d.min(m - d) as f64
        };
        let (a1, a2) = ((a / self.per_axis) as i64, (a % self.per_axis) as i64);
        let (b1, b2) = ((b / self.per_axis) as i64, (b % self.per_axis) as i64);
        wrap(a1 - b1).hypot(wrap(a2 - b2))
    }

    /// `||chi_a f||_inf`.
    pub fn cell_sup(&self, cell: usize, f: &Field) -> f64 {
        self.weights[cell]
            .iter()
            .zip(f.values())
            .map(|(w, v)| w * v.norm())
            .fold(0.0, f64::max)
    }

    /// `||chi_a f||_1`.
    pub fn cell_l1(&self, cell: usize, f: &Field) -> f64 {
        self.weights[cell]
            .iter()
            .zip(f.values())
            .map(|(w, v)| w * v.norm())
            .sum::<f64>()
            * self.grid.cell_area()
    }
}

/// `beta(x) = (1 + |x - x_c|)^{-3}` with `x_c` the torus center.
#[derive(Debug, Clone)]
pub struct WeightProfile {
    beta: Field,
    l1: f64,
}

impl WeightProfile {
    pub fn new(grid: &Grid) -> Self {
        let c = grid.center();
        let beta = Field::from_fn(grid, |x1, x2| {
            let d = grid.torus_distance((x1, x2), c);
            num_complex::Complex64::new((1.0 + d).powi(-3), 0.0)
        });
        let l1 = lp_norm(&beta, 1.0).expect("physical");
        WeightProfile { beta, l1 }
    }

    pub fn field(&self) -> &Field {
        &self.beta
    }

    pub fn l1(&self) -> f64 {
        self.l1
    }
}

/// Lattice-cell functional
/// `mu ||beta||_1 + ||f||_1 log+ sup_a (sum_{|b-a|<=3} ||chi_b f||_inf) / (mu ||chi_a beta||_1)`.
///
/// With `neighbor_sum = false` the inner sum keeps only `b = a`.
pub fn n_mu_beta_with(
    f: &Field,
    mu: f64,
    beta: &WeightProfile,
    cells: &CellPartition,
    neighbor_sum: bool,
) -> Result<f64> {
    if !(mu > 0.0) {
        return Err(Error::InvalidArgument(format!("mu must be > 0, got {mu}")));
    }
    if f.grid() != cells.grid() || f.grid() != beta.field().grid() {
        return Err(Error::GridMismatch);
    }
    let sups: Vec<f64> = (0..cells.len()).map(|b| cells.cell_sup(b, f)).collect();
    let mut worst: f64 = 0.0;
    for a in 0..cells.len() {
        let numerator: f64 = if neighbor_sum {
            (0..cells.len())
                .filter(|&b| cells.lattice_distance(a, b) <= 3.0)
                .map(|b| sups[b])
                .sum()
        } else {
            sups[a]
        };
        let denom = mu * cells.cell_l1(a, beta.field());
        worst = worst.max(numerator / denom);
    }
    Ok(mu * beta.l1() + lp_norm(f, 1.0)? * log_plus(worst))
}

pub fn n_mu_beta(f: &Field, mu: f64, beta: &WeightProfile, cells: &CellPartition) -> Result<f64> {
    n_mu_beta_with(f, mu, beta, cells, true)
}

/// `(||a||_1, ||b||_2, ||c||_3)` with trapezoid time integrals.
pub fn coefficient_norms(cd: &CoefficientDecomposition) -> Result<(f64, f64, f64)> {
    let time = cd.time_grid();
    for field in [cd.b(), cd.b_dot(), cd.c()] {
        if field.time() != time {
            return Err(Error::TimeGridMismatch);
        }
    }
    let per = |field: &SpaceTimeField, op: &dyn Fn(&Field) -> Result<f64>| -> Result<Vec<f64>> {
        field.slices().iter().map(op).collect()
    };
    let sq = |v: Vec<f64>| v.into_iter().map(|x| x * x).collect::<Vec<_>>();

    let a_h1 = sq(per(cd.a(), &|f| sobolev_norm(f, 1.0))?);
    let b_h2 = sq(per(cd.b(), &|f| sobolev_norm(f, 2.0))?);
    let bdot_h1 = sq(per(cd.b_dot(), &|f| sobolev_norm(f, 1.0))?);
    let c_besov = per(cd.c(), &besov_norm)?;

    let a1 = time.integrate(&a_h1).sqrt();
    let b2 = (time.integrate(&b_h2) + time.integrate(&bdot_h1)).sqrt();
    let c3 = time.integrate(&c_besov);
    Ok((a1, b2, c3))
}

/// Area of the standard torus, `(2 pi)^2`.
pub fn standard_area() -> f64 {
    4.0 * PI * PI
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::tests::random_field;
    use crate::spacetime::TimeGrid;
    use num_complex::Complex64;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn lp_examples() {
        let g = Grid::torus(32).unwrap();
        let one = Field::constant(&g, 1.0);
        assert!((lp_norm(&one, 1.0).unwrap() - standard_area()).abs() < 1e-12);
        let w = Field::plane_wave(&g, 2, 5);
        assert!((lp_norm(&w, 2.0).unwrap() - 2.0 * PI).abs() < 1e-12);

        let f = random_field(&g, 1);
        let direct: f64 = f.values().iter().map(|v| v.norm()).sum::<f64>() * g.cell_area();
        assert!((lp_norm(&f, 1.0).unwrap() - direct).abs() <= 1e-14 * direct);
        assert_eq!(lp_norm(&f, f64::INFINITY).unwrap(), f.max_abs());
        assert!(lp_norm(&f, 0.5).is_err());
        assert!(lp_norm(&f, f64::NAN).is_err());
    }

    #[test]
    fn sobolev_examples() {
        let g = Grid::torus(32).unwrap();
        assert_eq!(sobolev_norm(&Field::zeros(&g, Space::Physical), 1.0).unwrap(), 0.0);
        let w = Field::plane_wave(&g, 3, 0);
        let l2 = lp_norm(&w, 2.0).unwrap();
        assert!((sobolev_norm(&w, 1.0).unwrap() - 10f64.sqrt() * l2).abs() < 1e-12);

        let f = random_field(&g, 6);
        assert!((sobolev_norm(&f, 0.0).unwrap() - lp_norm(&f, 2.0).unwrap()).abs() < 1e-12);
        // Direct spectral sum from the brute-force coefficients.
        let coeffs = crate::grid::tests::brute_force_dft(&f);
        let direct: f64 = coeffs
            .iter()
            .enumerate()
            .map(|(idx, c)| {
                let (a, b) = g.wavevector(idx);
                (1.0 + a * a + b * b).powi(2) * c.norm_sqr()
            })
            .sum::<f64>()
            .sqrt();
        assert!((sobolev_norm(&f, 2.0).unwrap() - direct).abs() <= 1e-12 * direct);
    }

    #[test]
    fn besov_examples() {
        let g = Grid::torus(64).unwrap();
        let c = Field::constant(&g, 2.0);
        assert!((besov_norm(&c).unwrap() - lp_norm(&c, 2.0).unwrap()).abs() < 1e-12);

        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for k in 1..=g.k_max() {
            let f = crate::coeff::random_band_atom_rng(&g, k, &mut rng, 1.0).unwrap();
            let ratio = besov_norm(&f).unwrap() / lp_norm(&f, 2.0).unwrap();
            let s = 2f64.powi(k as i32);
            assert!(ratio >= s / 2.0 && ratio <= 3.0 * 2.0 * s, "k={k} ratio={ratio}");
        }

        for seed in 0..20 {
            let f = crate::lpcalc::random_resolved_field(&g, &mut ChaCha8Rng::seed_from_u64(seed))
                .unwrap();
            assert!(besov_norm(&f).unwrap() >= sobolev_norm(&f, 1.0).unwrap() / 3.0);
        }
    }

    #[test]
    fn distribution_and_weak_l1() {
        let g = Grid::torus(32).unwrap();
        let n = g.n();
        let f = Field::from_values(
            &g,
            Space::Physical,
            (0..g.len())
                .map(|idx| {
                    let (i, j) = (idx / n, idx % n);
                    Complex64::new(if i < n / 2 && j < n / 2 { 2.0 } else { 0.0 }, 0.0)
                })
                .collect(),
        )
        .unwrap();
        assert!((distribution(&f, 1.0).unwrap() - g.area() / 4.0).abs() < 1e-12);
        assert_eq!(distribution(&f, 2.5).unwrap(), 0.0);
        assert!(distribution(&f, -1.0).is_err());

        for seed in 0..100 {
            let h = random_field(&g, seed);
            assert!(weak_l1(&h) <= lp_norm(&h, 1.0).unwrap());
            assert_eq!(distribution(&h, h.max_abs() * 1.01).unwrap(), 0.0);
        }
    }

    #[test]
    fn level_split_examples() {
        let g = Grid::torus(16).unwrap();
        let f = random_field(&g, 3);
        let (lo, hi) = level_split(&f, f.max_abs() * 2.0).unwrap();
        assert!(lo.sub(&f).unwrap().max_abs() == 0.0 && hi.max_abs() == 0.0);
        let (lo, hi) = level_split(&f, 1e-300).unwrap();
        assert!(lo.max_abs() == 0.0 && hi.sub(&f).unwrap().max_abs() == 0.0);

        let mut mags: Vec<f64> = f.values().iter().map(|v| v.norm()).collect();
        mags.sort_by(f64::total_cmp);
        let lambda = mags[mags.len() / 2];
        let (lo, hi) = level_split(&f, lambda).unwrap();
        for ((l, h), v) in lo.values().iter().zip(hi.values()).zip(f.values()) {
            assert_eq!(l + h, *v);
            if v.norm() < lambda {
                assert_eq!(*l, *v);
            } else {
                assert_eq!(*h, *v);
            }
            assert!(l.norm() < lambda);
        }
        assert!(level_split(&f, 0.0).is_err());
    }

    #[test]
    fn n_of_g_examples() {
        let g = Grid::torus(16).unwrap();
        let t = TimeGrid::new(8).unwrap();
        assert_eq!(n_of_g(&SpaceTimeField::zeros(&g, t)), 1.0);
        let one = SpaceTimeField::separable(t, &Field::constant(&g, 1.0), |_| 1.0);
        let expect = standard_area() * 3f64.ln() + 1.0;
        assert!((n_of_g(&one) - expect).abs() < 1e-12);

        // Indicator of 10 cells at height lambda: unit mass, peak lambda.
        let lambda = 1.0 / (10.0 * g.cell_area());
        let mut shape = Field::zeros(&g, Space::Physical);
        for v in shape.values_mut().iter_mut().take(10) {
            *v = Complex64::new(lambda, 0.0);
        }
        let bump = SpaceTimeField::separable(t, &shape, |_| 1.0);
        assert!((spacetime_l1(&bump) - 1.0).abs() < 1e-12);
        assert!((n_of_g(&bump) - ((2.0 + lambda).ln() + 1.0)).abs() < 1e-12);
    }

    #[test]
    fn log_plus_is_monotone() {
        let mut prev = log_plus(0.0);
        assert!((prev - 2f64.ln()).abs() < 1e-15);
        for i in 1..1000 {
            let v = log_plus(i as f64 * 0.37);
            assert!(v >= prev && v >= 2f64.ln());
            prev = v;
        }
    }

    #[test]
    fn partition_of_unity() {
        let g = Grid::torus(128).unwrap();
        let cells = CellPartition::new(&g).unwrap();
        assert_eq!(cells.len(), 36);
        for idx in 0..g.len() {
            let mut sum = 0.0;
            let mut cover = 0;
            for c in 0..cells.len() {
                let w = cells.weights(c)[idx];
                sum += w;
                if w > 0.0 {
                    cover += 1;
                    let d = g.torus_distance(g.point(idx), cells.center(c));
                    assert!(d < 2.0);
                }
            }
            assert!((sum - 1.0).abs() < 1e-12);
            assert!(cover <= 9);
        }
        let beta = WeightProfile::new(&g);
        assert!(beta.field().values().iter().all(|v| v.re > 0.0));
        assert!(beta.l1().is_finite() && beta.l1() > 0.0);
    }

    #[test]
    fn n_mu_beta_examples() {
        let g = Grid::torus(64).unwrap();
        let cells = CellPartition::new(&g).unwrap();
        let beta = WeightProfile::new(&g);
        let zero = Field::zeros(&g, Space::Physical);
        let mu = 0.3;
        assert!((n_mu_beta(&zero, mu, &beta, &cells).unwrap() - mu * beta.l1()).abs() < 1e-14);
        assert!(n_mu_beta(&zero, 0.0, &beta, &cells).is_err());

        // Recompute the closed formula by hand for two values of mu.
        let f = random_field(&g, 8);
        let by_hand = |mu: f64| {
            let sups: Vec<f64> = (0..cells.len()).map(|b| cells.cell_sup(b, &f)).collect();
            let worst = (0..cells.len())
                .map(|a| {
                    let s: f64 = (0..cells.len())
                        .filter(|&b| cells.lattice_distance(a, b) <= 3.0)
                        .map(|b| sups[b])
                        .sum();
                    s / (mu * cells.cell_l1(a, beta.field()))
                })
                .fold(0.0, f64::max);
            mu * beta.l1() + lp_norm(&f, 1.0).unwrap() * (2.0 + worst).ln()
        };
        let d = n_mu_beta(&f, 2.0 * mu, &beta, &cells).unwrap() - n_mu_beta(&f, mu, &beta, &cells).unwrap();
        assert!((d - (by_hand(2.0 * mu) - by_hand(mu))).abs() < 1e-10);

        // Equal mass: concentrated spike versus spread field.
        let spread = Field::constant(&g, 1.0);
        let mass = lp_norm(&spread, 1.0).unwrap();
        let mut spike = Field::zeros(&g, Space::Physical);
        spike.values_mut()[g.len() / 2 + g.n() / 2] = Complex64::new(mass / g.cell_area(), 0.0);
        assert!(
            n_mu_beta(&spike, mu, &beta, &cells).unwrap() > n_mu_beta(&spread, mu, &beta, &cells).unwrap()
        );
    }

    #[test]
    fn homogeneity_and_triangle() {
        let g = Grid::torus(32).unwrap();
        for seed in 0..100 {
            let f = crate::lpcalc::random_resolved_field(&g, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            let h = crate::lpcalc::random_resolved_field(&g, &mut ChaCha8Rng::seed_from_u64(seed + 500)).unwrap();
            let sum = f.add(&h).unwrap();
            let norms: [&dyn Fn(&Field) -> f64; 4] = [
                &|x| lp_norm(x, 1.0).unwrap(),
                &|x| lp_norm(x, 3.0).unwrap(),
                &|x| sobolev_norm(x, 1.5).unwrap(),
                &|x| besov_norm(x).unwrap(),
            ];
            for norm in norms {
                assert!(norm(&sum) <= (norm(&f) + norm(&h)) * (1.0 + 1e-12));
                let alpha = 2.75;
                assert!((norm(&f.scale(alpha)) - alpha * norm(&f)).abs() <= 1e-12 * norm(&f) * alpha);
            }
            let alpha = 3.0;
            assert!((weak_l1(&f.scale(alpha)) - alpha * weak_l1(&f)).abs() <= 1e-12 * alpha * weak_l1(&f));
        }
    }
}
