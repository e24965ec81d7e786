//! Experiment harness: one experiment per estimate, each producing an
//! [`EstimateReport`] with measured rows, fitted constants and a verdict.

mod experiments;
pub mod fit;
mod report;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::coeff::{AtomTerm, CoefficientSpec, TimeProfile};
use crate::error::{Error, Result};

pub use experiments::*;
pub use report::{Check, Comparison, EstimateReport, Provenance, Row};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    LogL1,
    Commutator,
    Trifrequency,
    Multilinear,
    Interpolation,
    Simplex,
    LogLoss,
    Delta0Sweep,
}

impl Experiment {
    pub const ALL: [Experiment; 8] = [
        Experiment::LogL1,
        Experiment::Commutator,
        Experiment::Trifrequency,
        Experiment::Multilinear,
        Experiment::Interpolation,
        Experiment::Simplex,
        Experiment::LogLoss,
        Experiment::Delta0Sweep,
    ];

    pub fn id(&self) -> &'static str {
        match self {
            Experiment::LogL1 => "log-l1",
            Experiment::Commutator => "commutator",
            Experiment::Trifrequency => "trifrequency",
            Experiment::Multilinear => "multilinear",
            Experiment::Interpolation => "interpolation",
            Experiment::Simplex => "simplex",
            Experiment::LogLoss => "log-loss",
            Experiment::Delta0Sweep => "delta0-sweep",
        }
    }

    /// The statement in the source analysis that the experiment measures.
    pub fn anchor(&self) -> &'static str {
        match self {
            Experiment::LogL1 => "Lemma 2.1",
            Experiment::Commutator => "Lemma 2.2",
            Experiment::Trifrequency => "Lemma 2.6 (tri-frequency estimate)",
            Experiment::Multilinear => "Proposition 2.4 / Lemma 2.6",
            Experiment::Interpolation => "Lemma 3.1",
            Experiment::Simplex => "Lemma 3.3",
            Experiment::LogLoss => "Theorem 1.1",
            Experiment::Delta0Sweep => "Theorem 1.1 (Dyson series bound)",
        }
    }

    pub fn summary(&self) -> &'static str {
        match self {
            Experiment::LogL1 => "||Mf||_1 against the lattice L log L functional",
            Experiment::Commutator => "L^1 bound for [(M^n)_{>=k}, a_k], uniform in k",
            Experiment::Trifrequency => "decay of P_l' a_k P_l h in the band separation",
            Experiment::Multilinear => "M a_k1 M ... a_kn M f against A N(f), exponential in n",
            Experiment::Interpolation => "sup_t ||b_k||_inf 2^{k/2} against ||b_k||_2",
            Experiment::Simplex => "mixed L^1 / L^2 bound for simplex integrals",
            Experiment::LogLoss => "sup_t ||u||_1 against N(g) along a spike family",
            Experiment::Delta0Sweep => "geometric decay of ||J_n|| as delta0 varies",
        }
    }
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for Experiment {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let alias = match s {
            "logL1" | "log_l1" | "logl1" => Some(Experiment::LogL1),
            "probe-log-loss" => Some(Experiment::LogLoss),
            "sweep-delta0" => Some(Experiment::Delta0Sweep),
            "simplex-combinatorics" => Some(Experiment::Simplex),
            _ => None,
        };
        alias
            .or_else(|| Experiment::ALL.iter().copied().find(|e| e.id() == s))
            .ok_or_else(|| {
                let ids: Vec<&str> = Experiment::ALL.iter().map(|e| e.id()).collect();
                Error::InvalidArgument(format!(
                    "unknown experiment {s:?}; expected one of {}",
                    ids.join(", ")
                ))
            })
    }
}

/// `(id, anchor)` for every experiment.
pub fn catalog() -> Vec<(&'static str, &'static str)> {
    Experiment::ALL.iter().map(|e| (e.id(), e.anchor())).collect()
}

/// `alpha([l]) = 1/2 sum_{m=2}^n min(|l_m - l_{m-1}|, |l_m - k_m|)`.
pub fn alpha_exponent(l: &[usize], k: &[usize]) -> Result<f64> {
    if l.len() != k.len() {
        return Err(Error::InvalidArgument(format!(
            "multi-indices differ in length: {} vs {}",
            l.len(),
            k.len()
        )));
    }
    if l.len() < 2 {
        return Err(Error::InvalidArgument("multi-indices need n >= 2".into()));
    }
    let twice: usize = (1..l.len())
        .map(|m| l[m].abs_diff(l[m - 1]).min(l[m].abs_diff(k[m])))
        .sum();
    Ok(twice as f64 / 2.0)
}

/// `mu([l]) = A 2^{-alpha([l])}` with `A` the product of the atom `H^1` norms.
pub fn mu(l: &[usize], k: &[usize], atom_h1_norms: &[f64]) -> Result<f64> {
    let alpha = alpha_exponent(l, k)?;
    let a: f64 = atom_h1_norms.iter().product();
    Ok(a * 2f64.powf(-alpha))
}

/// Default coefficient spec: `b` in bands `1..=min(k_max, 6)` with `sin(1)`
/// profiles, `c` in bands 0..=2.
pub fn default_coefficients(k_max: usize) -> CoefficientSpec {
    let term = |band, profile| AtomTerm {
        band,
        profile,
        amplitude: 1.0,
        seed: None,
    };
    CoefficientSpec {
        delta0: None,
        seed: None,
        b: (1..=k_max.min(6)).map(|k| term(k, TimeProfile::Sin(1))).collect(),
        c: vec![
            term(0, TimeProfile::Const),
            term(1, TimeProfile::Cos(1)),
            term(2.min(k_max), TimeProfile::Sin(1)),
        ],
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_examples() {
        assert_eq!(alpha_exponent(&[3, 1, 4], &[3, 1, 4]).unwrap(), 0.0);
        assert_eq!(alpha_exponent(&[0, 4], &[0, 0]).unwrap(), 2.0);
        assert!(alpha_exponent(&[0, 4], &[0]).is_err());
        assert!(alpha_exponent(&[1], &[1]).is_err());
        assert_eq!(mu(&[0, 4], &[0, 0], &[2.0, 3.0]).unwrap(), 1.5);
    }

    #[test]
    fn alpha_matches_reevaluation() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        for _ in 0..200 {
            let l: Vec<usize> = (0..3).map(|_| rng.gen_range(0..7)).collect();
            let k: Vec<usize> = (0..3).map(|_| rng.gen_range(0..7)).collect();
            let d = |a: usize, b: usize| (a as i64 - b as i64).abs();
            let expected = (d(l[1], l[0]).min(d(l[1], k[1])) + d(l[2], l[1]).min(d(l[2], k[2]))) as f64 / 2.0;
            assert_eq!(alpha_exponent(&l, &k).unwrap(), expected);
        }
    }

    #[test]
    fn catalog_covers_every_experiment() {
        let c = catalog();
        assert_eq!(c.len(), Experiment::ALL.len());
        assert!(c.contains(&("commutator", "Lemma 2.2")));
        assert!(c.contains(&("log-loss", "Theorem 1.1")));
        for e in Experiment::ALL {
            assert_eq!(e.id().parse::<Experiment>().unwrap(), e);
        }
        assert!("nope".parse::<Experiment>().is_err());
    }
}
