use serde::{Deserialize, Serialize};

use super::topology::{wrap_distance, Topology};
use super::SimError;
use crate::params::{MetaCurve, SystemParams};

/// Links with fewer post-warm-up attempts are left out of empirical curves.
pub const MIN_ATTEMPTS: u64 = 50;

/// Outcome of one simulation run. Per-link vectors are indexed like the
/// topology; all counts cover slots `warmup..slots` unless noted.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SimStats {
    pub slots: u64,
    pub warmup: u64,
    pub attempts: Vec<u64>,
    pub successes: Vec<u64>,
    /// slots with a transmission, dummy ones included in saturated mode
    pub active_slots: Vec<u64>,
    /// queue length after the last slot
    pub final_queue_length: Vec<u64>,
    pub arrival_count: Vec<u64>,
    /// queue length at the start of slot `warmup`
    pub initial_queue_length: Vec<u64>,
    /// packets that left the queue
    pub departures: Vec<u64>,
    /// counted slots in which the typical link was active
    pub tagged_slots: u64,
    /// per link, how many of those slots it was active too
    pub tagged_active: Vec<u64>,
    pub typical_index: usize,
}

impl SimStats {
    pub(crate) fn new(links: usize, slots: u64, warmup: u64, typical_index: usize) -> Self {
        let z = vec![0u64; links];
        Self {
            slots,
            warmup,
            attempts: z.clone(),
            successes: z.clone(),
            active_slots: z.clone(),
            final_queue_length: z.clone(),
            arrival_count: z.clone(),
            initial_queue_length: z.clone(),
            departures: z.clone(),
            tagged_slots: 0,
            tagged_active: z,
            typical_index,
        }
    }

    pub fn len(&self) -> usize {
        self.attempts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.attempts.is_empty()
    }

    pub fn counted_slots(&self) -> u64 {
        self.slots - self.warmup
    }

    /// initial + arrivals = departures + final, exactly, on every link.
    pub fn conservation_holds(&self) -> bool {
        (0..self.len()).all(|i| {
            self.initial_queue_length[i] + self.arrival_count[i] == self.departures[i] + self.final_queue_length[i]
        })
    }

    /// successes/attempts of each link, `None` for links that never transmitted.
    pub fn link_success_rates(&self) -> Vec<Option<f64>> {
        self.attempts
            .iter()
            .zip(&self.successes)
            .map(|(&a, &s)| (a > 0).then(|| s as f64 / a as f64))
            .collect()
    }

    /// Mean over transmitting links of their own success ratio.
    pub fn success_probability(&self) -> Option<f64> {
        PooledStats::from_stats(self).link_mean()
    }

    /// Total successes over total attempts.
    pub fn pooled_success_rate(&self) -> Option<f64> {
        PooledStats::from_stats(self).pooled_rate()
    }

    /// active_slots/counted slots of each link.
    pub fn activity(&self) -> Vec<f64> {
        let t = self.counted_slots() as f64;
        self.active_slots.iter().map(|&a| a as f64 / t).collect()
    }
}

/// Mergeable summary of many runs.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct PooledStats {
    pub attempts: u64,
    pub successes: u64,
    /// links with at least one attempt
    pub links: u64,
    /// sum of their per-link success ratios
    pub ratio_sum: f64,
    /// sum of squared ratios
    pub ratio_sq_sum: f64,
}

impl PooledStats {
    pub fn from_stats(s: &SimStats) -> Self {
        let mut p = Self::default();
        for (&a, &k) in s.attempts.iter().zip(&s.successes) {
            p.attempts += a;
            p.successes += k;
            if a > 0 {
                let x = k as f64 / a as f64;
                p.links += 1;
                p.ratio_sum += x;
                p.ratio_sq_sum += x * x;
            }
        }
        p
    }

    pub fn from_runs<'a>(runs: impl IntoIterator<Item = &'a SimStats>) -> Self {
        runs.into_iter().map(Self::from_stats).fold(Self::default(), Self::merge)
    }

    pub fn merge(self, o: Self) -> Self {
        Self {
            attempts: self.attempts + o.attempts,
            successes: self.successes + o.successes,
            links: self.links + o.links,
            ratio_sum: self.ratio_sum + o.ratio_sum,
            ratio_sq_sum: self.ratio_sq_sum + o.ratio_sq_sum,
        }
    }

    pub fn link_mean(&self) -> Option<f64> {
        (self.links > 0).then(|| self.ratio_sum / self.links as f64)
    }

    /// Standard error of the link mean, treating links as independent.
    pub fn link_mean_se(&self) -> Option<f64> {
        if self.links < 2 {
            return None;
        }
        let n = self.links as f64;
        let m = self.ratio_sum / n;
        let var = ((self.ratio_sq_sum - n * m * m) / (n - 1.0)).max(0.0);
        Some((var / n).sqrt())
    }

    pub fn pooled_rate(&self) -> Option<f64> {
        (self.attempts > 0).then(|| self.successes as f64 / self.attempts as f64)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMeta {
    pub curve: MetaCurve,
    /// per-link success ratios of the links used, ascending
    pub samples: Vec<f64>,
    pub used: usize,
    pub excluded: usize,
}

impl EmpiricalMeta {
    /// Mean of the per-link ratios that built the curve.
    pub fn sample_mean(&self) -> f64 {
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }
}

/// Empirical CDF of per-link success ratios: F(u) is the fraction of links
/// with ratio below u. `grid` must run from 0 to 1.
pub fn empirical_meta(stats: &[SimStats], grid: &[f64]) -> Result<EmpiricalMeta, SimError> {
    let mut samples = Vec::new();
    let mut excluded = 0;
    for s in stats {
        for (&a, &k) in s.attempts.iter().zip(&s.successes) {
            if a >= MIN_ATTEMPTS {
                samples.push(k as f64 / a as f64);
            } else {
                excluded += 1;
            }
        }
    }
    if samples.is_empty() {
        return Err(SimError::NoQualifyingLinks { min_attempts: MIN_ATTEMPTS });
    }
    samples.sort_by(f64::total_cmp);
    let n = samples.len() as f64;
    let cdf = grid.iter().map(|&u| samples.partition_point(|&x| x < u) as f64 / n).collect();
    let curve = MetaCurve::from_raw(grid.to_vec(), cdf)?;
    Ok(EmpiricalMeta { curve, used: samples.len(), samples, excluded })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActivityBin {
    /// bin centre (m)
    pub distance: f64,
    /// mean activity of links in the bin during typical-link activity
    pub activity: f64,
    pub links: usize,
}

/// Activity of other links, conditioned on the typical link being active,
/// against the distance from the typical transmitter to their receivers.
/// Bins split [0, side/2] evenly; empty bins are left out.
pub fn activity_vs_distance(stats: &SimStats, topology: &Topology, bins: usize) -> Result<Vec<ActivityBin>, SimError> {
    if bins == 0 {
        return Err(SimError::Config("need at least one bin".into()));
    }
    if stats.len() != topology.len() {
        return Err(SimError::Config("stats and topology sizes differ".into()));
    }
    if stats.tagged_slots == 0 {
        return Err(SimError::Config("typical link was never active".into()));
    }
    let typ = stats.typical_index;
    let width = 0.5 * topology.region.side() / bins as f64;
    let mut sum = vec![0.0; bins];
    let mut count = vec![0usize; bins];
    for j in (0..topology.len()).filter(|&j| j != typ) {
        let d = wrap_distance(topology.tx[typ], topology.rx[j], &topology.region);
        let b = ((d / width) as usize).min(bins - 1);
        sum[b] += stats.tagged_active[j] as f64 / stats.tagged_slots as f64;
        count[b] += 1;
    }
    Ok((0..bins)
        .filter(|&b| count[b] > 0)
        .map(|b| ActivityBin {
            distance: (b as f64 + 0.5) * width,
            activity: sum[b] / count[b] as f64,
            links: count[b],
        })
        .collect())
}

/// Fraction of links whose success ratio does not exceed ξ; links that
/// never transmitted count as stable.
pub fn unstable_fraction(stats: &SimStats, params: &SystemParams) -> f64 {
    if stats.is_empty() {
        return 0.0;
    }
    let xi = params.xi();
    let unstable = stats
        .link_success_rates()
        .iter()
        .filter(|r| matches!(r, Some(x) if *x <= xi))
        .count();
    unstable as f64 / stats.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::params::Region;
    use crate::sim::{generate_topology, run_simulation};
    use proptest::prelude::*;

    fn fake(attempts: Vec<u64>, successes: Vec<u64>) -> SimStats {
        let mut s = SimStats::new(attempts.len(), 100, 0, 0);
        s.attempts = attempts;
        s.successes = successes;
        s
    }

    #[test]
    fn json_round_trip() {
        let s = fake(vec![3, 0, 7], vec![2, 0, 7]);
        let v = serde_json::to_value(&s).unwrap();
        for key in ["slots", "warmup", "attempts", "successes", "active_slots", "final_queue_length", "arrival_count"] {
            assert!(v.get(key).is_some(), "{key}");
        }
        let back: SimStats = serde_json::from_value(v).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn identical_links_give_a_step() {
        let s = fake(vec![100; 5], vec![80; 5]);
        let e = empirical_meta(&[s], &MetaCurve::uniform_grid(101)).unwrap();
        assert_eq!(e.used, 5);
        assert_eq!(e.curve.eval(0.8), 0.0);
        assert_eq!(e.curve.eval(0.81), 1.0);
        assert!((e.curve.mean() - 0.8).abs() < 0.01);
    }

    #[test]
    fn sparse_links_are_excluded() {
        let s = fake(vec![10, 60, 0], vec![5, 30, 0]);
        let e = empirical_meta(std::slice::from_ref(&s), &MetaCurve::uniform_grid(11)).unwrap();
        assert_eq!((e.used, e.excluded), (1, 2));
        let none = fake(vec![10], vec![5]);
        assert!(matches!(empirical_meta(&[none], &[0.0, 1.0]), Err(SimError::NoQualifyingLinks { .. })));
    }

    #[test]
    fn estimators() {
        let s = fake(vec![100, 300, 0], vec![50, 300, 0]);
        assert!((s.success_probability().unwrap() - 0.75).abs() < 1e-15);
        assert!((s.pooled_success_rate().unwrap() - 350.0 / 400.0).abs() < 1e-15);
        let p = SystemParams::defaults().with_xi(0.5).unwrap();
        assert!((unstable_fraction(&s, &p) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn light_load_is_stable_and_meta_mean_is_consistent() {
        let p = SystemParams::defaults().with_xi(0.01).unwrap();
        let topo = generate_topology(&p, &Region::default_torus(), 11).unwrap();
        let s = run_simulation(&topo, &p, 10_000, 1000, 3).unwrap();
        assert!(unstable_fraction(&s, &p) < 0.02);
        let full = SystemParams::defaults().with_xi(1.0).unwrap();
        let sat = run_simulation(&topo, &full, 3000, 300, 3).unwrap();
        assert!(unstable_fraction(&sat, &full) > 0.95);
        let e = empirical_meta(&[sat], &MetaCurve::uniform_grid(1001)).unwrap();
        assert!((e.curve.mean() - e.sample_mean()).abs() < 0.01);
    }

    #[test]
    fn activity_bins_cover_links() {
        let p = SystemParams::defaults().with_xi(0.3).unwrap();
        let topo = generate_topology(&p, &Region::default_torus(), 4).unwrap();
        let s = run_simulation(&topo, &p, 3000, 300, 9).unwrap();
        let bins = activity_vs_distance(&s, &topo, 10).unwrap();
        assert_eq!(bins.iter().map(|b| b.links).sum::<usize>(), topo.len() - 1);
        assert!(bins.iter().all(|b| (0.0..=1.0).contains(&b.activity)));
        assert!(bins.windows(2).all(|w| w[0].distance < w[1].distance));
    }

    proptest! {
        #[test]
        fn pooled_merge_is_order_free(
            a in proptest::collection::vec((1u64..500, 0u64..500), 1..20),
            b in proptest::collection::vec((1u64..500, 0u64..500), 1..20),
        ) {
            let mk = |v: &Vec<(u64, u64)>| {
                fake(v.iter().map(|x| x.0).collect(), v.iter().map(|x| x.1.min(x.0)).collect())
            };
            let (sa, sb) = (mk(&a), mk(&b));
            let ab = PooledStats::from_runs([&sa, &sb]);
            let ba = PooledStats::from_runs([&sb, &sa]);
            prop_assert_eq!(ab.attempts, ba.attempts);
            prop_assert_eq!(ab.successes, ba.successes);
            prop_assert!((ab.ratio_sum - ba.ratio_sum).abs() < 1e-9);
            let m = ab.link_mean().unwrap();
            prop_assert!((0.0..=1.0).contains(&m));
        }
    }
}
