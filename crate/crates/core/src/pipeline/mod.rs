//! Derivation chain: drift certificate -> super weighted Poincare -> F-Sobolev -> weighted LSI,
//! plus the weak and modified variants.

pub mod fsobolev;
pub mod local;
pub mod mlsi;
pub mod poincare;
pub mod rate;
pub mod swpi;
pub mod weak;

use serde::{Deserialize, Serialize};

pub use fsobolev::{fsobolev_to_swpi, swpi_to_fsobolev, tighten, FKind, FSobolevResult, TightLsi};
pub use mlsi::{modified_lsi, MlsiResult, YoungPair};
pub use poincare::{lyapunov_poincare, lyapunov_weighted_poincare, swpi_to_wpi};
pub use rate::{RateFunction, TailModel};
pub use swpi::{derive_swpi, Psi, SwpiOptions, SwpiResult, WeightLaw};
pub use weak::{capacity_comparison, capacity_halfline, weak_lsi, CapacityCheck, WeakLsi};

use crate::error::Result;
use crate::lyapunov::Certificate;
use crate::measure::Measure;

/// Knobs of the derivation chain.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainOptions {
    pub psi: Psi,
    pub delta: f64,
    pub epsilon: f64,
    /// weak-LSI constant c = c_frak_multiple * (tight weighted LSI constant)
    pub c_frak_multiple: f64,
    pub cn_samples: usize,
    pub cn_seed: u64,
    pub mlsi_tau: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        ChainOptions {
            psi: Psi::Auto,
            delta: 2.0,
            epsilon: 0.25,
            c_frak_multiple: 4.0,
            cn_samples: 200,
            cn_seed: 7,
            mlsi_tau: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PoincareSource {
    Rate,
    Certificate,
}

#[derive(Debug, Clone)]
pub struct Chain {
    pub swpi: SwpiResult,
    /// mu(f^2) <= s int Gamma omega + beta(s) mu(|f|)^2
    pub canonical: RateFunction,
    pub fsobolev: FSobolevResult,
    pub poincare: f64,
    pub poincare_source: PoincareSource,
    pub lsi: TightLsi,
}

/// Certificate -> weight and rate -> F-Sobolev -> weighted Poincare -> tight weighted LSI.
pub fn derive_chain(mu: &Measure, cert: &Certificate, opts: &ChainOptions) -> Result<Chain> {
    let cn = local::calibrate_cn(mu.dim, opts.cn_samples, opts.cn_seed);
    let swpi = derive_swpi(mu, cert, opts.psi, &SwpiOptions::new(cn))?;
    let canonical = swpi.canonical_rate();
    let fsob = swpi_to_fsobolev(&canonical, opts.epsilon, opts.delta)?;
    let from_cert = lyapunov_weighted_poincare(mu, &swpi.certificate);
    let (poincare, poincare_source) = match swpi_to_wpi(&canonical) {
        Ok(c) if c < from_cert => (c, PoincareSource::Rate),
        _ => (from_cert, PoincareSource::Certificate),
    };
    let lsi = tighten(&fsob, poincare)?;
    Ok(Chain { swpi, canonical, fsobolev: fsob, poincare, poincare_source, lsi })
}

impl Chain {
    pub fn c_frak(&self, opts: &ChainOptions) -> f64 {
        opts.c_frak_multiple * self.lsi.c_tight
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lyapunov::{cauchy_certificate, exponential_certificate, subexp_certificate};
    use crate::measure::{make_builtin, MeasureKind};

    #[test]
    fn chains_produce_finite_constants() {
        let opts = ChainOptions::default();
        let mu = make_builtin(MeasureKind::Cauchy { beta: 2.0 }, 1).unwrap();
        let cert = cauchy_certificate(&mu, 2.0, 3.0).unwrap();
        let c = derive_chain(&mu, &cert, &opts).unwrap();
        assert!(c.lsi.c_tight.is_finite());
        let mu = make_builtin(MeasureKind::Exponential, 1).unwrap();
        let cert = exponential_certificate(&mu, 0.5).unwrap();
        let c = derive_chain(&mu, &cert, &opts).unwrap();
        assert!(c.lsi.c_tight.is_finite());
        let mu = make_builtin(MeasureKind::Subexp { alpha: 1.5 }, 1).unwrap();
        let cert = subexp_certificate(&mu, 1.5, 0.5).unwrap();
        let c = derive_chain(&mu, &cert, &opts).unwrap();
        assert!(c.lsi.c_tight.is_finite());
    }
}
