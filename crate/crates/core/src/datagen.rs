//! Reproducible elliptical samples `X_i = theta + v_i Gamma W_i` with Gaussian `W_i`.
//!
//! Each replication draws from its own ChaCha8 stream (`seed`, stream = replication
//! index), so generated data do not depend on how replications are scheduled.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::data::DataMatrix;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Family {
    Normal,
    StudentT { df: f64 },
    /// `gamma N(theta, Sigma) + (1 - gamma) N(theta, inflation Sigma)`.
    MixtureNormal { gamma: f64, inflation: f64 },
}

impl Family {
    pub fn label(&self) -> String {
        match self {
            Family::Normal => "normal".into(),
            Family::StudentT { df } => format!("t{df}"),
            Family::MixtureNormal { gamma, inflation } => format!("mixture({gamma};{inflation})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScatterSpec {
    /// `Sigma_ij = rho^|i-j|`.
    Ar1 { rho: f64 },
    /// `Sigma = D^{1/2} R D^{1/2}` with `R` AR(1) and `D` holding `d_low` on the
    /// first `floor(p/2)` coordinates and `d_high` on the rest.
    ScaledAr1 { rho: f64, d_low: f64, d_high: f64 },
}

impl ScatterSpec {
    pub fn validate(&self) -> Result<()> {
        let rho = match *self {
            ScatterSpec::Ar1 { rho } => rho,
            ScatterSpec::ScaledAr1 { rho, d_low, d_high } => {
                if !(d_low > 0.0 && d_high > 0.0) {
                    return Err(Error::InvalidSpec(format!(
                        "scatter scales must be positive (got {d_low}, {d_high})"
                    )));
                }
                rho
            }
        };
        if !(rho.abs() < 1.0) {
            return Err(Error::InvalidSpec(format!("|rho| must be below 1, got {rho}")));
        }
        Ok(())
    }

    /// Diagonal of `D` (unit for plain AR(1)).
    pub fn scales(&self, p: usize) -> Vec<f64> {
        match *self {
            ScatterSpec::Ar1 { .. } => vec![1.0; p],
            ScatterSpec::ScaledAr1 { d_low, d_high, .. } => {
                (0..p).map(|j| if j < p / 2 { d_low } else { d_high }).collect()
            }
        }
    }

    pub fn rho(&self) -> f64 {
        match *self {
            ScatterSpec::Ar1 { rho } | ScatterSpec::ScaledAr1 { rho, .. } => rho,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SignalSpec {
    Null,
    /// First `s` coordinates equal to `kappa`, the rest zero.
    SparseEqual { s: usize, kappa: f64 },
}

impl SignalSpec {
    /// Sparse signal with `kappa = sqrt(delta / s)`; `s = 0` gives the null.
    pub fn with_strength(s: usize, delta: f64) -> Self {
        if s == 0 {
            SignalSpec::Null
        } else {
            SignalSpec::SparseEqual {
                s,
                kappa: (delta / s as f64).sqrt(),
            }
        }
    }

    pub fn theta(&self, p: usize) -> Vec<f64> {
        let mut theta = vec![0.0; p];
        if let SignalSpec::SparseEqual { s, kappa } = *self {
            theta.iter_mut().take(s).for_each(|t| *t = kappa);
        }
        theta
    }

    pub fn is_null(&self) -> bool {
        match *self {
            SignalSpec::Null => true,
            SignalSpec::SparseEqual { s, kappa } => s == 0 || kappa == 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub family: Family,
    pub n: usize,
    pub p: usize,
    pub scatter: ScatterSpec,
    #[serde(default = "null_signal")]
    pub signal: SignalSpec,
    #[serde(default)]
    pub seed: u64,
}

fn null_signal() -> SignalSpec {
    SignalSpec::Null
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        if self.n < 4 {
            return Err(Error::InvalidSpec(format!("n must be at least 4, got {}", self.n)));
        }
        if self.p < 3 {
            return Err(Error::InvalidSpec(format!("p must be at least 3, got {}", self.p)));
        }
        match self.family {
            Family::Normal => {}
            Family::StudentT { df } => {
                if !(df > 2.0) {
                    return Err(Error::InvalidSpec(format!("t degrees of freedom must exceed 2, got {df}")));
                }
            }
            Family::MixtureNormal { gamma, inflation } => {
                if !(gamma > 0.0 && gamma < 1.0) {
                    return Err(Error::InvalidSpec(format!("mixture weight must be in (0,1), got {gamma}")));
                }
                if !(inflation > 0.0) {
                    return Err(Error::InvalidSpec(format!("inflation must be positive, got {inflation}")));
                }
            }
        }
        self.scatter.validate()?;
        if let SignalSpec::SparseEqual { s, kappa } = self.signal {
            if s > self.p {
                return Err(Error::InvalidSpec(format!("sparsity {s} exceeds p = {}", self.p)));
            }
            if !(kappa >= 0.0 && kappa.is_finite()) {
                return Err(Error::InvalidSpec(format!("kappa must be nonnegative, got {kappa}")));
            }
        }
        Ok(())
    }
}

/// Scatter matrix and its symmetric square root.
#[derive(Debug, Clone)]
pub struct Scatter {
    pub sigma: DMatrix<f64>,
    /// Symmetric PSD factor with `factor * factor^T = sigma`.
    pub factor: DMatrix<f64>,
}

pub fn make_scatter(spec: &ScatterSpec, p: usize) -> Result<Scatter> {
    if p < 2 {
        return Err(Error::InvalidSpec(format!("p must be at least 2, got {p}")));
    }
    spec.validate()?;
    let rho = spec.rho();
    let sd: Vec<f64> = spec.scales(p).iter().map(|d| d.sqrt()).collect();
    let sigma = DMatrix::from_fn(p, p, |i, j| sd[i] * sd[j] * rho.powi(i.abs_diff(j) as i32));
    let eig = SymmetricEigen::new(sigma.clone());
    let root = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let v = &eig.eigenvectors;
    let factor = v * DMatrix::from_diagonal(&root) * v.transpose();
    Ok(Scatter { sigma, factor })
}

/// Draws replications of one scenario.
#[derive(Debug, Clone)]
pub struct Sampler {
    scenario: Scenario,
    scatter: Scatter,
    theta: Vec<f64>,
}

impl Sampler {
    pub fn new(scenario: &Scenario) -> Result<Self> {
        scenario.validate()?;
        Ok(Self {
            scatter: make_scatter(&scenario.scatter, scenario.p)?,
            theta: scenario.signal.theta(scenario.p),
            scenario: scenario.clone(),
        })
    }

    pub fn scatter(&self) -> &Scatter {
        &self.scatter
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    /// Radial multipliers `v_i` and Gaussian directions `W_i` for replication `rep`.
    pub fn components(&self, rep: u64) -> (Vec<f64>, DataMatrix) {
        let Scenario { n, p, seed, family, .. } = self.scenario;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(rep);
        let mut w = Vec::with_capacity(n * p);
        let mut v = Vec::with_capacity(n);
        for _ in 0..n {
            w.extend((0..p).map(|_| -> f64 { StandardNormal.sample(&mut rng) }));
            v.push(match family {
                Family::Normal => 1.0,
                Family::StudentT { df } => {
                    let chi2: f64 = ChiSquared::new(df)
                        .expect("df validated positive")
                        .sample(&mut rng);
                    (df / chi2).sqrt()
                }
                Family::MixtureNormal { gamma, inflation } => {
                    if rng.random::<f64>() < gamma {
                        1.0
                    } else {
                        inflation.sqrt()
                    }
                }
            });
        }
        (v, DataMatrix::new(n, p, w).expect("gaussian draws are finite"))
    }

    pub fn draw(&self, rep: u64) -> DataMatrix {
        let (v, w) = self.components(rep);
        self.compose(&v, &w)
    }

    /// `X_i = theta + v_i Gamma W_i`.
    pub fn compose(&self, v: &[f64], w: &DataMatrix) -> DataMatrix {
        let (n, p) = (w.nrows(), w.ncols());
        let wm = DMatrix::from_row_slice(n, p, w.as_slice());
        // Gamma is symmetric, so row i of W Gamma is Gamma W_i.
        let y = wm * &self.scatter.factor;
        let mut out = DataMatrix::zeros(n, p);
        for i in 0..n {
            for (j, o) in out.row_mut(i).iter_mut().enumerate() {
                *o = self.theta[j] + v[i] * y[(i, j)];
            }
        }
        out
    }
}

/// One draw (replication 0) of the scenario.
pub fn sample(scenario: &Scenario) -> Result<DataMatrix> {
    Ok(Sampler::new(scenario)?.draw(0))
}
