//! Parallel trial lanes.

use bomatch_core::harness::TrialMap;
use rayon::prelude::*;

/// Spreads trials over a fixed number of worker threads. Results come back
/// in trial order, so the reduction downstream is the same as sequentially.
pub struct Lanes {
    pool: Option<rayon::ThreadPool>,
}

impl Lanes {
    /// `jobs <= 1` runs on the calling thread.
    pub fn new(jobs: usize) -> Result<Self, rayon::ThreadPoolBuildError> {
        if jobs <= 1 {
            return Ok(Lanes { pool: None });
        }
        let pool = rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?;
        Ok(Lanes { pool: Some(pool) })
    }

    /// One lane per available core.
    pub fn all_cores() -> Self {
        let jobs = std::thread::available_parallelism().map_or(1, |n| n.get());
        Lanes::new(jobs).unwrap_or(Lanes { pool: None })
    }

    pub fn jobs(&self) -> usize {
        self.pool.as_ref().map_or(1, |p| p.current_num_threads())
    }
}

impl TrialMap for Lanes {
    fn map<T, F>(&self, trials: u64, f: F) -> Vec<T>
    where
        T: Send,
        F: Fn(u64) -> T + Sync + Send,
    {
        match &self.pool {
            None => (0..trials).map(f).collect(),
            Some(pool) => pool.install(|| (0..trials).into_par_iter().map(f).collect()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use bomatch_core::engines::Algorithm;
    use bomatch_core::harness::{estimate_ratio, Sequential};
    use bomatch_core::instance::gen_upper_triangular;
    use bomatch_core::oracle::opt_obm;

    #[test]
    fn order_is_preserved() {
        let lanes = Lanes::new(4).unwrap();
        assert_eq!(lanes.map(1000, |t| t * 2), (0..1000).map(|t| t * 2).collect::<Vec<_>>());
        assert_eq!(lanes.jobs(), 4);
        assert_eq!(Lanes::new(0).unwrap().jobs(), 1);
    }

    #[test]
    fn lane_count_does_not_change_estimates() {
        let inst = gen_upper_triangular(30).unwrap();
        let opt = opt_obm(&inst).unwrap();
        let seq = estimate_ratio(&inst, Algorithm::Ranking, &opt, 500, 3, &Sequential).unwrap();
        for jobs in [2, 3, 8] {
            let par = estimate_ratio(&inst, Algorithm::Ranking, &opt, 500, 3, &Lanes::new(jobs).unwrap()).unwrap();
            assert_eq!(par, seq);
        }
    }
}
