//! Time integration of `d_t u = a (M u) + g`, `u(0) = 0`.
//!
//! `reference_solve` is a classical RK4 integrator on a refined time grid and
//! serves as the accuracy anchor. The Picard iterates and Dyson terms use the
//! cumulative trapezoid rule on the data grid, so that
//! `u^(n+1) - u^(n) = J_n` holds up to rounding.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::coeff::CoefficientDecomposition;
use crate::czop::Multiplier;
use crate::dump;
use crate::error::{Error, Result};
use crate::grid::{Field, Space};
use crate::lpcalc;
use crate::norms;
use crate::spacetime::{SpaceTimeField, TimeGrid};

/// Samples above this magnitude abort a solve.
pub const BLOW_UP: f64 = 1e12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Rk4,
    Picard,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Method::Rk4 => f.write_str("rk4"),
            Method::Picard => f.write_str("picard"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct SolveResult {
    pub u: SpaceTimeField,
    /// `sup_t ||u(t)||_1` over the output nodes.
    pub sup_l1: f64,
    pub method: Method,
    /// Internal steps taken (RK4 steps, or the iterate number for Picard).
    pub steps: usize,
}

#[derive(Debug, Serialize, Deserialize)]
struct Sidecar {
    method: Method,
    steps: usize,
    n_points: usize,
    domain_length: f64,
    time_steps: usize,
    sup_l1: f64,
    l1: Vec<f64>,
    sup_linf: f64,
}

impl SolveResult {
    fn new(u: SpaceTimeField, method: Method, steps: usize) -> Self {
        let sup_l1 = sup_l1(&u);
        SolveResult {
            u,
            sup_l1,
            method,
            steps,
        }
    }

    /// `||u(t_j)||_1` at every node.
    pub fn l1_history(&self) -> Vec<f64> {
        l1_history(&self.u)
    }

    /// Writes `<stem>.lptx` (the final slice) and `<stem>.json`.
    pub fn save(&self, dir: impl AsRef<Path>, stem: &str) -> Result<(PathBuf, PathBuf)> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir)?;
        let field_path = dir.join(format!("{stem}.lptx"));
        let json_path = dir.join(format!("{stem}.json"));
        let last = self.u.slice(self.u.time().steps());
        dump::save_field(last, &field_path)?;
        let sidecar = Sidecar {
            method: self.method,
            steps: self.steps,
            n_points: self.u.grid().n(),
            domain_length: self.u.grid().length(),
            time_steps: self.u.time().steps(),
            sup_l1: self.sup_l1,
            l1: self.l1_history(),
            sup_linf: self.u.max_abs(),
        };
        fs::write(&json_path, serde_json::to_string_pretty(&sidecar)?)?;
        Ok((field_path, json_path))
    }
}

pub fn l1_history(u: &SpaceTimeField) -> Vec<f64> {
    u.slices()
        .iter()
        .map(|s| norms::lp_norm(s, 1.0).expect("physical slices"))
        .collect()
}

/// `sup_t ||u(t)||_1`.
pub fn sup_l1(u: &SpaceTimeField) -> f64 {
    l1_history(u).into_iter().fold(0.0, f64::max)
}

fn check_inputs(cd: &CoefficientDecomposition, m: &Multiplier, g: &SpaceTimeField) -> Result<()> {
    cd.a().require_compatible(g)?;
    if m.grid() != g.grid() {
        return Err(Error::GridMismatch);
    }
    Ok(())
}

fn blown_up(f: &Field) -> bool {
    f.values()
        .iter()
        .any(|v| !(v.re.abs() <= BLOW_UP && v.im.abs() <= BLOW_UP))
}

/// Lagrange weights at `t` for the given nodes.
fn lagrange_weights(nodes: &[f64], t: f64) -> Vec<f64> {
    (0..nodes.len())
        .map(|i| {
            nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .map(|(_, &x)| (t - x) / (nodes[i] - x))
                .product()
        })
        .collect()
}

/// Piecewise-cubic interpolation of node data inside interval `j`.
fn interpolate(data: &SpaceTimeField, j: usize, t: f64) -> Field {
    let time = data.time();
    let width = time.nodes().min(4);
    let start = (j.saturating_sub(1)).min(time.nodes() - width);
    let nodes: Vec<f64> = (start..start + width).map(|i| time.time(i)).collect();
    let weights = lagrange_weights(&nodes, t);
    let mut out = Field::zeros(data.grid(), Space::Physical);
    for (i, w) in weights.into_iter().enumerate() {
        out.axpy(w, data.slice(start + i));
    }
    out
}

fn rhs(a: &Field, m: &Multiplier, u: &Field, g: &Field) -> Result<Field> {
    let mu = m.apply(u)?;
    let mut out = a.mul(&mu)?;
    out.axpy(1.0, g);
    Ok(out)
}

/// RK4 with `substeps` steps per interval of the data grid; `a` and `g` are
/// interpolated by piecewise cubics in time.
pub fn reference_solve(
    cd: &CoefficientDecomposition,
    m: &Multiplier,
    g: &SpaceTimeField,
    substeps: usize,
) -> Result<SolveResult> {
    check_inputs(cd, m, g)?;
    if substeps == 0 {
        return Err(Error::InvalidArgument("substeps must be at least 1".into()));
    }
    let time = g.time();
    let h = time.dt() / substeps as f64;
    let a = cd.a();
    let mut u = Field::zeros(g.grid(), Space::Physical);
    let mut out = Vec::with_capacity(time.nodes());
    out.push(u.clone());
    for j in 0..time.steps() {
        let t0 = time.time(j);
        for s in 0..substeps {
            let t = t0 + s as f64 * h;
            let sample = |tau: f64| (interpolate(a, j, tau), interpolate(g, j, tau));
            let (a0, g0) = sample(t);
            let (a1, g1) = sample(t + 0.5 * h);
            let (a2, g2) = sample(t + h);

            let k1 = rhs(&a0, m, &u, &g0)?;
            let mut y = u.clone();
            y.axpy(0.5 * h, &k1);
            let k2 = rhs(&a1, m, &y, &g1)?;
            let mut y = u.clone();
            y.axpy(0.5 * h, &k2);
            let k3 = rhs(&a1, m, &y, &g1)?;
            let mut y = u.clone();
            y.axpy(h, &k3);
            let k4 = rhs(&a2, m, &y, &g2)?;

            u.axpy(h / 6.0, &k1);
            u.axpy(h / 3.0, &k2);
            u.axpy(h / 3.0, &k3);
            u.axpy(h / 6.0, &k4);
            if blown_up(&u) {
                return Err(Error::BlowUp { time: t + h });
            }
        }
        out.push(u.clone());
    }
    Ok(SolveResult::new(
        SpaceTimeField::new(time, out)?,
        Method::Rk4,
        time.steps() * substeps,
    ))
}

/// `F(t_j) = integral_0^{t_j} f` by the cumulative trapezoid rule.
pub fn cumulative_integral(f: &SpaceTimeField) -> SpaceTimeField {
    let time = f.time();
    let half = 0.5 * time.dt();
    let mut acc = Field::zeros(f.grid(), Space::Physical);
    let mut out = Vec::with_capacity(time.nodes());
    out.push(acc.clone());
    for j in 0..time.steps() {
        acc.axpy(half, f.slice(j));
        acc.axpy(half, f.slice(j + 1));
        out.push(acc.clone());
    }
    SpaceTimeField::new(time, out).expect("same layout as the input")
}

/// `t -> coeff(t) * M v(t)`.
fn transport(coeff: &SpaceTimeField, m: &Multiplier, v: &SpaceTimeField) -> Result<SpaceTimeField> {
    let slices = coeff
        .slices()
        .iter()
        .zip(v.slices())
        .map(|(a, v)| a.mul(&m.apply(v)?))
        .collect::<Result<Vec<_>>>()?;
    SpaceTimeField::new(v.time(), slices)
}

/// `u^(1), ..., u^(n_max)` with `u^(n+1) = integral_0^t [a M u^(n) + g]`.
pub fn picard_iterates(
    cd: &CoefficientDecomposition,
    m: &Multiplier,
    g: &SpaceTimeField,
    n_max: usize,
) -> Result<Vec<SolveResult>> {
    check_inputs(cd, m, g)?;
    if n_max == 0 {
        return Err(Error::InvalidArgument("n_max must be at least 1".into()));
    }
    let mut iterates = Vec::with_capacity(n_max);
    let mut u = cumulative_integral(g);
    iterates.push(SolveResult::new(u.clone(), Method::Picard, 1));
    for n in 2..=n_max {
        let integrand = transport(cd.a(), m, &u)?.add(g)?;
        u = cumulative_integral(&integrand);
        iterates.push(SolveResult::new(u.clone(), Method::Picard, n));
    }
    Ok(iterates)
}

/// All Dyson terms `J_0, ..., J_n`.
pub fn dyson_terms(
    cd: &CoefficientDecomposition,
    m: &Multiplier,
    g: &SpaceTimeField,
    n: usize,
) -> Result<Vec<SpaceTimeField>> {
    check_inputs(cd, m, g)?;
    let mut terms = Vec::with_capacity(n + 1);
    terms.push(cumulative_integral(g));
    for _ in 0..n {
        let last = terms.last().expect("nonempty");
        let next = cumulative_integral(&transport(cd.a(), m, last)?);
        terms.push(next);
    }
    Ok(terms)
}

/// `sup_t ||J_m||_1` for `m = 0..=n`, keeping only one term in memory.
pub fn dyson_sup_l1(
    cd: &CoefficientDecomposition,
    m: &Multiplier,
    g: &SpaceTimeField,
    n: usize,
) -> Result<Vec<f64>> {
    check_inputs(cd, m, g)?;
    let mut term = cumulative_integral(g);
    let mut out = vec![sup_l1(&term)];
    for _ in 0..n {
        term = cumulative_integral(&transport(cd.a(), m, &term)?);
        out.push(sup_l1(&term));
    }
    Ok(out)
}

/// `J_n`: `v_0 = integral g`, `v_m = integral a M v_{m-1}`.
pub fn dyson_term(
    cd: &CoefficientDecomposition,
    m: &Multiplier,
    g: &SpaceTimeField,
    n: usize,
) -> Result<SpaceTimeField> {
    Ok(dyson_terms(cd, m, g, n)?.pop().expect("nonempty"))
}

/// `J_{n,k}`: the `i`-th coefficient (counting from the latest time) is
/// replaced by `P_{k_i} a`.
pub fn dyson_term_localized(
    cd: &CoefficientDecomposition,
    m: &Multiplier,
    g: &SpaceTimeField,
    bands: &[usize],
) -> Result<SpaceTimeField> {
    check_inputs(cd, m, g)?;
    for &k in bands {
        lpcalc::check_band(g.grid(), k)?;
    }
    let mut v = cumulative_integral(g);
    // The innermost integral carries the earliest time and the last band.
    for &k in bands.iter().rev() {
        let a_k = cd.a().map_slices(|s| lpcalc::project_band(s, k))?;
        v = cumulative_integral(&transport(&a_k, m, &v)?);
    }
    Ok(v)
}

/// `integral over 1 >= t_1 >= ... >= t_n >= 0 of f_1(t_1) ... f_n(t_n)` by
/// nested cumulative trapezoid on `nodes` equispaced points.
pub fn simplex_integral(profiles: &[&dyn Fn(f64) -> f64], nodes: usize) -> Result<f64> {
    if profiles.is_empty() {
        return Err(Error::InvalidArgument("need at least one profile".into()));
    }
    if nodes < 2 {
        return Err(Error::InvalidArgument("need at least two quadrature nodes".into()));
    }
    let time = TimeGrid::new(nodes - 1)?;
    let times = time.times();
    let half = 0.5 * time.dt();
    // inner[j] = integral over t_j >= t_{i+1} >= ... of the later profiles.
    let mut inner = vec![1.0; nodes];
    for f in profiles.iter().rev() {
        let integrand: Vec<f64> = times.iter().zip(&inner).map(|(&t, &w)| f(t) * w).collect();
        let mut acc = 0.0;
        inner[0] = 0.0;
        for j in 1..nodes {
            acc += half * (integrand[j - 1] + integrand[j]);
            inner[j] = acc;
        }
    }
    Ok(inner[nodes - 1])
}

/// `sup_t ||sum_{n<=N} J_n - u_ref||_1 / sup_t ||u_ref||_1` for every `N`.
pub fn series_residuals(terms: &[SpaceTimeField], reference: &SpaceTimeField) -> Result<Vec<f64>> {
    let scale = sup_l1(reference);
    let mut partial = SpaceTimeField::zeros(reference.grid(), reference.time());
    let mut out = Vec::with_capacity(terms.len());
    for term in terms {
        partial = partial.add(term)?;
        let r = sup_l1(&partial.sub(reference)?);
        out.push(if scale > 0.0 { r / scale } else { r });
    }
    Ok(out)
}

/// Maximum over time of the pointwise difference, relative to the reference.
pub fn relative_sup_difference(u: &SpaceTimeField, reference: &SpaceTimeField) -> Result<f64> {
    let diff = u.sub(reference)?.max_abs();
    let scale = reference.max_abs();
    Ok(if scale > 0.0 { diff / scale } else { diff })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeff::{synthesize, AtomTerm, CoefficientSpec, TimeProfile};
    use crate::grid::tests::random_field;
    use crate::grid::Grid;
    use crate::lpcalc::random_resolved_field;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn smooth_field(grid: &Grid, seed: u64) -> Field {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f = random_resolved_field(grid, &mut rng).unwrap();
        lpcalc::truncate_disk(&f, 4.0).unwrap()
    }

    fn mixed_spec() -> CoefficientSpec {
        CoefficientSpec::from_toml(
            r#"
            [[b]]
            band = 1
            profile = "sin(1)"

            [[c]]
            band = 2
            profile = "const"

            [[c]]
            band = 0
            profile = "cos(1)"
            "#,
        )
        .unwrap()
    }

    fn time_field(grid: &Grid, time: TimeGrid, shape: &Field, f: impl Fn(f64) -> f64) -> SpaceTimeField {
        let _ = grid;
        SpaceTimeField::separable(time, shape, f)
    }

    #[test]
    fn decoupled_solve_is_quadrature() {
        let grid = Grid::torus(16).unwrap();
        let time = TimeGrid::new(32).unwrap();
        let cd = CoefficientDecomposition::zero(&grid, time);
        let m = Multiplier::parse(&grid, "riesz(1,1)").unwrap();
        let phi = smooth_field(&grid, 1);
        let g = time_field(&grid, time, &phi, |t| (3.0 * t).cos());
        let res = reference_solve(&cd, &m, &g, 2).unwrap();
        assert_eq!(res.u.slice(0).max_abs(), 0.0);
        let exact = SpaceTimeField::separable(time, &phi, |t| (3.0 * t).sin() / 3.0);
        assert!(relative_sup_difference(&res.u, &exact).unwrap() < 1e-5);
        assert_eq!(res.steps, 64);
        assert_eq!(res.method, Method::Rk4);
    }

    #[test]
    fn scalar_exponential_growth() {
        let grid = Grid::torus(8).unwrap();
        let time = TimeGrid::new(16).unwrap();
        let ones = SpaceTimeField::separable(time, &Field::constant(&grid, 1.0), |_| 1.0);
        let cd = CoefficientDecomposition::from_coefficient(ones).unwrap();
        let m = Multiplier::identity(&grid);
        let phi = random_field(&grid, 5).to_real();
        let g = SpaceTimeField::separable(time, &phi, |_| 1.0);
        let res = reference_solve(&cd, &m, &g, 4).unwrap();
        let exact = SpaceTimeField::separable(time, &phi, |t| t.exp() - 1.0);
        assert!(relative_sup_difference(&res.u, &exact).unwrap() < 1e-8);
    }

    #[test]
    fn rk4_self_convergence() {
        let grid = Grid::torus(16).unwrap();
        let time = TimeGrid::new(8).unwrap();
        let cd = synthesize(&grid, time, &mixed_spec(), 2.0, 11).unwrap();
        let m = Multiplier::parse(&grid, "riesz(1,2)").unwrap();
        let phi = smooth_field(&grid, 2);
        let g = SpaceTimeField::separable(time, &phi, |t| 1.0 + t * t);
        let runs: Vec<SpaceTimeField> = [1, 2, 4, 16]
            .iter()
            .map(|&s| reference_solve(&cd, &m, &g, s).unwrap().u)
            .collect();
        let fine = &runs[3];
        let e: Vec<f64> = runs[..3]
            .iter()
            .map(|u| relative_sup_difference(u, fine).unwrap())
            .collect();
        for w in e.windows(2) {
            let ratio = w[0] / w[1];
            assert!((8.0..=32.0).contains(&ratio), "{e:?}");
        }
    }

    #[test]
    fn blow_up_reports_time() {
        let grid = Grid::torus(8).unwrap();
        let time = TimeGrid::new(4).unwrap();
        let big = SpaceTimeField::separable(time, &Field::constant(&grid, 200.0), |_| 1.0);
        let cd = CoefficientDecomposition::from_coefficient(big).unwrap();
        let m = Multiplier::identity(&grid);
        let g = SpaceTimeField::separable(time, &Field::constant(&grid, 1.0), |_| 1.0);
        match reference_solve(&cd, &m, &g, 4) {
            Err(Error::BlowUp { time }) => assert!(time > 0.0 && time <= 1.0),
            other => panic!("expected blow-up, got {other:?}"),
        }
    }

    #[test]
    fn picard_examples() {
        let grid = Grid::torus(16).unwrap();
        let time = TimeGrid::new(16).unwrap();
        let m = Multiplier::parse(&grid, "riesz(1,1)").unwrap();
        let phi = smooth_field(&grid, 3);
        let g = SpaceTimeField::separable(time, &phi, |t| 1.0 + t);

        let zero = CoefficientDecomposition::zero(&grid, time);
        let its = picard_iterates(&zero, &m, &g, 4).unwrap();
        let first = cumulative_integral(&g);
        for it in &its {
            assert_eq!(relative_sup_difference(&it.u, &first).unwrap(), 0.0);
            assert_eq!(it.u.slice(0).max_abs(), 0.0);
        }

        let cd = synthesize(&grid, time, &mixed_spec(), 0.1, 4).unwrap();
        let its = picard_iterates(&cd, &m, &g, 5).unwrap();
        let terms = dyson_terms(&cd, &m, &g, 4).unwrap();
        for n in 0..4 {
            let diff = its[n + 1].u.sub(&its[n].u).unwrap();
            let err = diff.sub(&terms[n + 1]).unwrap().max_abs() / its[n + 1].u.max_abs();
            assert!(err < 1e-8, "n = {n}: {err}");
        }
    }

    #[test]
    fn dyson_closed_form_for_static_data() {
        let grid = Grid::torus(16).unwrap();
        let time = TimeGrid::new(400).unwrap();
        let a_shape = smooth_field(&grid, 8).scale(0.3);
        let a = SpaceTimeField::separable(time, &a_shape, |_| 1.0);
        let cd = CoefficientDecomposition::from_coefficient(a).unwrap();
        let m = Multiplier::parse(&grid, "smoothed_riesz(1,2)").unwrap();
        let phi = smooth_field(&grid, 9);
        let g = SpaceTimeField::separable(time, &phi, |_| 1.0);
        let terms = dyson_terms(&cd, &m, &g, 3).unwrap();
        let mut power = phi.clone();
        let mut factorial = 1.0;
        for (n, term) in terms.iter().enumerate() {
            factorial *= (n + 1) as f64;
            let exact = SpaceTimeField::separable(time, &power, |t| t.powi(n as i32 + 1) / factorial);
            let err = relative_sup_difference(term, &exact).unwrap();
            assert!(err < 10.0 * time.dt().powi(2), "n = {n}: {err}");
            power = a_shape.mul(&m.apply(&power).unwrap()).unwrap();
        }
        let zero = CoefficientDecomposition::zero(&grid, time);
        assert_eq!(dyson_term(&zero, &m, &g, 2).unwrap().max_abs(), 0.0);
    }

    #[test]
    fn localized_terms_sum_to_full_term() {
        let grid = Grid::torus(32).unwrap();
        let time = TimeGrid::new(16).unwrap();
        let m = Multiplier::parse(&grid, "riesz(1,1)").unwrap();
        let cd = synthesize(&grid, time, &mixed_spec(), 0.1, 6).unwrap();
        let phi = smooth_field(&grid, 7);
        let g = SpaceTimeField::separable(time, &phi, |t| 1.0 - t);
        let full = dyson_term(&cd, &m, &g, 1).unwrap();
        let mut sum = SpaceTimeField::zeros(&grid, time);
        for k in 0..=grid.k_max() {
            sum = sum.add(&dyson_term_localized(&cd, &m, &g, &[k]).unwrap()).unwrap();
        }
        assert!(relative_sup_difference(&sum, &full).unwrap() < 1e-10);
        assert!(dyson_term_localized(&cd, &m, &g, &[grid.k_max() + 1]).is_err());
    }

    #[test]
    fn single_atom_only_diagonal_survives() {
        let grid = Grid::torus(64).unwrap();
        let time = TimeGrid::new(8).unwrap();
        let spec = CoefficientSpec {
            delta0: None,
            seed: None,
            b: vec![],
            c: vec![AtomTerm {
                band: 4,
                profile: TimeProfile::Const,
                amplitude: 1.0,
                seed: None,
            }],
        };
        let cd = synthesize(&grid, time, &spec, 0.1, 1).unwrap();
        let m = Multiplier::parse(&grid, "riesz(1,1)").unwrap();
        let g = SpaceTimeField::separable(time, &smooth_field(&grid, 3), |_| 1.0);
        let scale = dyson_term(&cd, &m, &g, 2).unwrap().max_abs();
        assert!(scale > 0.0);
        for k1 in 0..=grid.k_max() {
            assert_eq!(
                dyson_term_localized(&cd, &m, &g, &[k1]).unwrap().max_abs() > 1e-12 * scale,
                (3..=5).contains(&k1),
                "k = {k1}"
            );
            for k2 in 0..=grid.k_max() {
                let v = dyson_term_localized(&cd, &m, &g, &[k1, k2]).unwrap().max_abs();
                if k1.abs_diff(4) >= 2 || k2.abs_diff(4) >= 2 {
                    assert!(v <= 1e-12 * scale, "{k1} {k2}: {v}");
                }
            }
        }
        let diag = dyson_term_localized(&cd, &m, &g, &[4, 4]).unwrap().max_abs();
        assert!(diag > 1e-3 * scale);
    }

    #[test]
    fn simplex_examples() {
        let one = |_: f64| 1.0;
        let v = simplex_integral(&[&one, &one, &one], 512).unwrap();
        assert!((v * 6.0 - 1.0).abs() < 0.02);

        let f = |t: f64| (2.0 * t).exp();
        let v = simplex_integral(&[&f], 1025).unwrap();
        assert!((v - ((2f64).exp() - 1.0) / 2.0).abs() < 1e-5);

        let two_t = |t: f64| 2.0 * t;
        let v = simplex_integral(&[&one, &two_t], 512).unwrap();
        assert!((v - 1.0 / 3.0).abs() < 1e-5);

        let p1 = |t: f64| 1.0 + (5.0 * t).sin().powi(2);
        let p2 = |t: f64| (t - 0.3).abs() + 0.1;
        let p3 = |t: f64| (-3.0 * t).exp();
        let profiles: [&dyn Fn(f64) -> f64; 3] = [&p1, &p2, &p3];
        let coarse = simplex_integral(&profiles, 256).unwrap();
        let fine = simplex_integral(&profiles, 1024).unwrap();
        assert!((coarse - fine).abs() / fine < 0.01);

        assert!(simplex_integral(&[], 10).is_err());
    }

    #[test]
    fn solve_is_linear_in_g() {
        let grid = Grid::torus(16).unwrap();
        let time = TimeGrid::new(16).unwrap();
        let cd = synthesize(&grid, time, &mixed_spec(), 0.2, 2).unwrap();
        let m = Multiplier::parse(&grid, "riesz(2,2)").unwrap();
        let g1 = SpaceTimeField::separable(time, &smooth_field(&grid, 1), |t| 1.0 + t);
        let g2 = SpaceTimeField::separable(time, &smooth_field(&grid, 2), |t| (4.0 * t).cos());
        let (alpha, beta) = (1.7, -0.4);
        let combo = g1.scale(alpha).add(&g2.scale(beta)).unwrap();
        let u = reference_solve(&cd, &m, &combo, 2).unwrap().u;
        let u1 = reference_solve(&cd, &m, &g1, 2).unwrap().u;
        let u2 = reference_solve(&cd, &m, &g2, 2).unwrap().u;
        let expected = u1.scale(alpha).add(&u2.scale(beta)).unwrap();
        assert!(relative_sup_difference(&u, &expected).unwrap() < 1e-8);
    }

    #[test]
    fn sidecar_round_trip() {
        let grid = Grid::torus(8).unwrap();
        let time = TimeGrid::new(4).unwrap();
        let cd = CoefficientDecomposition::zero(&grid, time);
        let g = SpaceTimeField::separable(time, &Field::constant(&grid, 1.0), |_| 1.0);
        let res = reference_solve(&cd, &Multiplier::identity(&grid), &g, 1).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let (field, json) = res.save(dir.path(), "u").unwrap();
        let back = dump::load_field(&field, grid.length()).unwrap();
        assert_eq!(back.values(), res.u.slice(4).values());
        let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(json).unwrap()).unwrap();
        assert_eq!(meta["method"], "rk4");
        assert_eq!(meta["steps"], 4);
    }
}
