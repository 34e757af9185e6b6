//! Martingale-coboundary machinery: projections, the m-function, forward
//! and reverse martingale differences, coboundaries and dyadic truncation.

mod blocks;
mod mds;
mod mfunction;

pub use blocks::{build_blocks, cutoff, level_of, truncate, BlockLevel, BlockScheme};
pub use mds::{centering_defect, conditional_law, Atom, ConditionalLaw, DiscreteLaw, ReverseMds};
pub use mfunction::{MFunction, MFunctionOptions, DEFAULT_DEPTH, MFUN_GAUSS_BRANCHES};

use crate::error::Result;
use crate::systems::Observable;
use crate::transfer::AnalyticTransfer;

/// E(X_ℓ | Y_0 = y) = K^ℓ f(y) − ν(f), by branch recursion. Cost grows like
/// branches^ℓ; see [`MFunction::project`] for long lags.
pub fn project(op: &AnalyticTransfer, f: &Observable, lag: usize, y: f64) -> Result<f64> {
    let nu = f.nu_mean(op.map());
    Ok(op.apply_power_fn(&|x| f.eval(x), lag, y)? - nu)
}

/// m-functions for every level of a block scheme.
pub fn block_mfunctions(map: &crate::systems::IntervalMap, scheme: &BlockScheme, options: MFunctionOptions) -> Result<Vec<std::sync::Arc<MFunction>>> {
    scheme
        .levels
        .iter()
        .map(|lv| MFunction::with_options(map, &lv.observable, options).map(std::sync::Arc::new))
        .collect()
}
