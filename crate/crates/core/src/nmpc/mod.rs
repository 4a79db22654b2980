//! The optimal control problem and its receding-horizon solver.

mod config;
pub mod constraints;
pub mod cost;
pub mod discretize;
pub mod qp;
mod solver;

pub use config::{InputWeights, OcpBounds, OcpConfig, OutputWeights, QpSettings};
pub use constraints::{friction_constraints, mz_soft_constraint, FrictionResiduals};
pub use cost::stage_cost;
pub use discretize::{discretize, step_jacobians};
pub use solver::{Nmpc, OnlineData, Solution, SolverStatus};

use crate::config::Config;
use crate::error::Result;
use crate::variant::Variant;

/// Controller instance for a variant name (`bas`, `mz`, `mz-dr`).
pub fn select_variant(name: &str, config: &Config) -> Result<Nmpc> {
    let variant: Variant = name.parse()?;
    Ok(Nmpc::new(variant, config.prediction_model(), config.ocp.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn variant_dimensions() {
        let c = Config::default();
        let bas = select_variant("bas", &c).unwrap();
        assert_eq!(bas.variant.nu(), 2);
        assert_eq!(bas.variant.nx(), 8);
        let mz = select_variant("Mz", &c).unwrap();
        assert_eq!(mz.variant.nu(), 5);
        assert_eq!(mz.variant.nx(), 9);
        let dr = select_variant("Mz_dr", &c).unwrap();
        assert_eq!(dr.variant.nu(), 6);
        assert_eq!(dr.variant.nx(), 10);
        assert!(matches!(
            select_variant("nmpc", &c),
            Err(Error::UnknownVariant(_))
        ));
    }
}
