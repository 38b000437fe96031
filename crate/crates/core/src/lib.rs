pub mod geom;
pub mod lp;
pub mod polytope;
pub mod sampling;
pub mod learner;
pub mod projected_volume;
pub mod baselines;
pub mod adversaries;
pub mod harness;
pub mod oracles;
