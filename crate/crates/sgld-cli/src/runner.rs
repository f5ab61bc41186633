//! Parallel ensemble execution.
//!
//! Chains are independent work units whose generators depend only on
//! `(seed, chain_index)`, so running them on a rayon pool and collecting in
//! index order reproduces the sequential `sgld_core::run_ensemble` result
//! bit-for-bit, regardless of thread count.

use rayon::prelude::*;
use sgld_core::{
    run_chain_indexed, ChainConfig, EnsembleResult, NoiseModel, StreamModel, UpdateModel,
};

pub fn run_ensemble_parallel<M>(
    model: &M,
    stream: &StreamModel,
    noise: &NoiseModel,
    cfg: &ChainConfig,
    n_chains: usize,
) -> sgld_core::Result<EnsembleResult>
where
    M: UpdateModel + Sync + ?Sized,
{
    if n_chains == 0 {
        return Err(sgld_core::Error::Config(
            "ensemble needs at least one chain".into(),
        ));
    }
    let trajectories = (0..n_chains as u64)
        .into_par_iter()
        .map(|index| run_chain_indexed(model, stream, noise, cfg, index))
        .collect::<sgld_core::Result<Vec<_>>>()?;
    Ok(EnsembleResult::from_trajectories(
        cfg.checkpoints().to_vec(),
        trajectories,
    ))
}
