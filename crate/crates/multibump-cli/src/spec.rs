//! Problem-spec file schema and defaults.

use multibump::classify::ClassifierConfig;
use multibump::continuation::ContinuationConfig;
use multibump::error::{Error, Result};
use multibump::newton::NewtonConfig;
use multibump::shooting::ScanConfig;
use multibump::weight::WeightSpec;
use serde::Deserialize;

/// One run of the laboratory. Only `weight` and `p` are mandatory; commands
/// read the sections they need.
#[derive(Deserialize, Debug, Clone)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub weight: WeightSpec,
    pub p: f64,
    /// Optional duplicate of the weight's domain length; must agree with it.
    #[serde(rename = "L")]
    pub length: Option<f64>,
    pub lambda: Option<f64>,
    /// Descending grid for sweeps.
    pub lambda_grid: Option<Vec<f64>>,
    /// Interior grid points (default 2049).
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub rho: Option<f64>,
    pub r_cap: Option<f64>,
    pub margin: Option<f64>,
    pub scan: Option<ScanOverrides>,
    pub newton: Option<NewtonOverrides>,
    pub continuation: Option<ContinuationOverrides>,
    pub verify: Option<VerifyOverrides>,
    pub liouville: Option<LiouvilleOverrides>,
    pub seed: Option<u64>,
}

#[derive(Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct ScanOverrides {
    pub points_per_decade: Option<usize>,
    pub uniform_points: Option<usize>,
    pub s_min: Option<f64>,
    pub u_cap: Option<f64>,
    pub rtol: Option<f64>,
    pub atol: Option<f64>,
    pub dedup_tol: Option<f64>,
    pub keep_scan: Option<bool>,
}

#[derive(Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct NewtonOverrides {
    pub max_iters: Option<usize>,
    pub residual_tol: Option<f64>,
    pub dedup_tol: Option<f64>,
}

#[derive(Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct ContinuationOverrides {
    pub epsilon: Option<f64>,
    pub step: Option<f64>,
    pub step_min: Option<f64>,
    pub step_max: Option<f64>,
    pub max_points: Option<usize>,
    pub amp_cap: Option<f64>,
    pub lambda_floor: Option<f64>,
    /// Dump every k-th branch profile as JSON.
    pub profile_stride: Option<usize>,
}

#[derive(Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct VerifyOverrides {
    pub theta_grid: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub mu_factor: Option<f64>,
    pub bump_index_set: Option<Vec<usize>>,
}

#[derive(Deserialize, Debug, Clone, Default)]
#[serde(deny_unknown_fields)]
pub struct LiouvilleOverrides {
    pub alpha: Option<Vec<f64>>,
    pub gamma: Option<Vec<f64>>,
    pub kappa: Option<Vec<f64>>,
    pub beta: Option<Vec<f64>>,
    pub slopes: Option<Vec<f64>>,
    pub p: Option<f64>,
}

pub struct VerifyConfig {
    pub theta_grid: Vec<f64>,
    pub delta: f64,
    pub rho: f64,
    pub margin: f64,
    pub mu_factor: f64,
    pub bump_index_set: Vec<usize>,
}

#[derive(Clone, Copy, Debug)]
pub struct LiouvilleCase {
    pub alpha: f64,
    pub gamma: f64,
    pub kappa: f64,
    pub beta: f64,
    pub p: f64,
    pub slope: f64,
}

impl ProblemSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.p > 1.0) {
            return Err(Error::InvalidSpec(format!(
                "p must be strictly greater than 1, got p = {}",
                self.p
            )));
        }
        if let Some(length) = self.length {
            if (length - self.weight.length()).abs() > 1e-12 {
                return Err(Error::InvalidSpec(format!(
                    "spec L = {length} disagrees with the weight's L = {}",
                    self.weight.length()
                )));
            }
        }
        if let Some(grid) = &self.lambda_grid {
            if grid.is_empty() || grid.windows(2).any(|w| w[1] >= w[0]) {
                return Err(Error::InvalidSpec(
                    "lambda_grid must be nonempty and strictly descending".into(),
                ));
            }
        }
        if let Some(n) = self.n {
            if n == 0 {
                return Err(Error::InvalidSpec("N must be positive".into()));
            }
        }
        Ok(())
    }

    pub fn grid_n(&self) -> usize {
        self.n.unwrap_or(2049)
    }

    pub fn lambda(&self) -> Result<f64> {
        self.lambda
            .or_else(|| self.lambda_grid.as_ref().and_then(|g| g.first().copied()))
            .ok_or_else(|| Error::InvalidSpec("this command needs a lambda".into()))
    }

    pub fn lambda_grid(&self) -> Result<Vec<f64>> {
        self.lambda_grid
            .clone()
            .ok_or_else(|| Error::InvalidSpec("this command needs a lambda_grid".into()))
    }

    pub fn scan_config(&self) -> ScanConfig<f64> {
        let mut cfg = ScanConfig::default();
        if let Some(o) = &self.scan {
            if let Some(v) = o.points_per_decade {
                cfg.points_per_decade = v;
            }
            if let Some(v) = o.uniform_points {
                cfg.uniform_points = v;
            }
            cfg.s_min = o.s_min.or(cfg.s_min);
            if let Some(v) = o.u_cap {
                cfg.u_cap = v;
            }
            if let Some(v) = o.rtol {
                cfg.rtol = v;
            }
            if let Some(v) = o.atol {
                cfg.atol = v;
            }
            if let Some(v) = o.dedup_tol {
                cfg.dedup_tol = v;
            }
            if let Some(v) = o.keep_scan {
                cfg.keep_scan = v;
            }
        }
        cfg
    }

    pub fn newton_config(&self) -> NewtonConfig<f64> {
        let mut cfg = NewtonConfig::default();
        if let Some(o) = &self.newton {
            if let Some(v) = o.max_iters {
                cfg.max_iters = v;
            }
            if let Some(v) = o.residual_tol {
                cfg.residual_tol = v;
            }
            if let Some(v) = o.dedup_tol {
                cfg.dedup_tol = v;
            }
        }
        cfg
    }

    pub fn classifier_config(&self) -> ClassifierConfig<f64> {
        let mut cfg = ClassifierConfig::default();
        if let Some(v) = self.rho {
            cfg.rho = v;
        }
        if let Some(v) = self.r_cap {
            cfg.r_cap = v;
        }
        if let Some(v) = self.margin {
            cfg.margin = v;
        }
        cfg
    }

    pub fn continuation_config(&self) -> ContinuationConfig<f64> {
        let mut cfg = ContinuationConfig::default();
        if let Some(o) = &self.continuation {
            if let Some(v) = o.step {
                cfg.step = v;
            }
            if let Some(v) = o.step_min {
                cfg.step_min = v;
            }
            if let Some(v) = o.step_max {
                cfg.step_max = v;
            }
            if let Some(v) = o.max_points {
                cfg.max_points = v;
            }
            if let Some(v) = o.amp_cap {
                cfg.amp_cap = v;
            }
            cfg.lambda_floor = o.lambda_floor.or(cfg.lambda_floor);
        }
        cfg
    }

    pub fn epsilon(&self) -> f64 {
        self.continuation.as_ref().and_then(|c| c.epsilon).unwrap_or(1e-4)
    }

    pub fn profile_dump_stride(&self) -> Option<usize> {
        self.continuation.as_ref().and_then(|c| c.profile_stride)
    }

    pub fn verify_config(&self) -> VerifyConfig {
        let v = self.verify.clone().unwrap_or_default();
        VerifyConfig {
            theta_grid: v.theta_grid.unwrap_or_else(|| vec![0.25, 0.5, 0.75, 1.0]),
            delta: v.delta.unwrap_or(0.1),
            rho: self.rho.unwrap_or(1.0),
            margin: self.margin.unwrap_or(1e-3),
            mu_factor: v.mu_factor.unwrap_or(1.05),
            bump_index_set: v.bump_index_set.unwrap_or_else(|| vec![1]),
        }
    }

    /// Cartesian battery of escape-check cases.
    pub fn liouville_battery(&self) -> Vec<LiouvilleCase> {
        let o = self.liouville.clone().unwrap_or_default();
        let alphas = o.alpha.unwrap_or_else(|| vec![0.5, 1.0, 2.0]);
        let gammas = o.gamma.unwrap_or_else(|| vec![0.0, 1.0, 2.0]);
        let kappas = o.kappa.unwrap_or_else(|| vec![0.0, 1.0]);
        let betas = o.beta.unwrap_or_else(|| vec![0.0, 0.5]);
        let slopes = o.slopes.unwrap_or_else(|| vec![0.0, -0.1, -1.0]);
        let p = o.p.unwrap_or(self.p);
        let mut out = Vec::new();
        for &alpha in &alphas {
            for &gamma in &gammas {
                for &kappa in &kappas {
                    for &beta in &betas {
                        for &slope in &slopes {
                            out.push(LiouvilleCase { alpha, gamma, kappa, beta, p, slope });
                        }
                    }
                }
            }
        }
        out
    }
}
