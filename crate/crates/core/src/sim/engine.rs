use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::SimStats;
use super::topology::{generate_topology, wrap_distance, Topology};
use super::{derive_seed, SimError};
use crate::params::{Region, SystemParams};

const STREAM_ARRIVALS: u64 = 0;
const STREAM_FADING: u64 = 1;
const STREAM_ACTIVITY: u64 = 2;
const STREAMS_PER_LINK: u64 = 4;

/// How transmitters decide to be active in a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum TrafficMode {
    /// FCFS queue, transmit whenever backlogged, retransmit on failure
    #[default]
    Queued,
    /// always transmit, sending dummy packets when the queue is empty
    Saturated,
    /// transmit a fresh packet with probability ξ, never retransmit
    Bernoulli,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub slots: u64,
    pub warmup: u64,
    pub seed: u64,
    pub mode: TrafficMode,
}

impl Default for SimConfig {
    fn default() -> Self {
        Self { slots: 10_000, warmup: 1_000, seed: 0, mode: TrafficMode::Queued }
    }
}

fn stream(seed: u64, link: usize, purpose: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(link as u64 * STREAMS_PER_LINK + purpose);
    rng
}

/// Queued-traffic simulation; see [`run_simulation_with`].
pub fn run_simulation(
    topology: &Topology,
    params: &SystemParams,
    slots: u64,
    warmup: u64,
    seed: u64,
) -> Result<SimStats, SimError> {
    run_simulation_with(topology, params, &SimConfig { slots, warmup, seed, mode: TrafficMode::Queued })
}

/// Slot loop: arrivals, transmissions by active links, Rayleigh fading,
/// SINR test and queue update. Statistics cover slots `warmup..slots`.
pub fn run_simulation_with(
    topology: &Topology,
    params: &SystemParams,
    cfg: &SimConfig,
) -> Result<SimStats, SimError> {
    if cfg.slots <= cfg.warmup {
        return Err(SimError::Config(format!("slots {} must exceed warm-up {}", cfg.slots, cfg.warmup)));
    }
    let n = topology.len();
    let alpha = params.alpha();
    let theta = params.theta();
    let noise = 1.0 / params.rho();
    let xi = params.xi();
    // gain[i][j]: path gain from transmitter j to receiver i
    let gain: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| wrap_distance(topology.tx[j], topology.rx[i], &topology.region).powf(-alpha))
                .collect()
        })
        .collect();
    let mut arrivals_rng: Vec<ChaCha8Rng> = (0..n).map(|i| stream(cfg.seed, i, STREAM_ARRIVALS)).collect();
    let mut fading_rng: Vec<ChaCha8Rng> = (0..n).map(|i| stream(cfg.seed, i, STREAM_FADING)).collect();
    let mut activity_rng: Vec<ChaCha8Rng> = (0..n).map(|i| stream(cfg.seed, i, STREAM_ACTIVITY)).collect();

    let mut stats = SimStats::new(n, cfg.slots, cfg.warmup, topology.typical_index);
    let mut queue = vec![0u64; n];
    let mut active = Vec::with_capacity(n);
    let mut is_active = vec![false; n];
    let typ = topology.typical_index;

    for t in 0..cfg.slots {
        let counting = t >= cfg.warmup;
        if t == cfg.warmup {
            stats.initial_queue_length.copy_from_slice(&queue);
        }
        active.clear();
        for i in 0..n {
            let arrived = arrivals_rng[i].random::<f64>() < xi;
            let on = match cfg.mode {
                TrafficMode::Queued => {
                    queue[i] += arrived as u64;
                    queue[i] > 0
                }
                TrafficMode::Saturated => {
                    queue[i] += arrived as u64;
                    true
                }
                // arrivals stream is unused here so that the activity draw alone
                // decides transmission
                TrafficMode::Bernoulli => {
                    let on = activity_rng[i].random::<f64>() < xi;
                    queue[i] += on as u64;
                    on
                }
            };
            if counting {
                stats.arrival_count[i] += match cfg.mode {
                    TrafficMode::Bernoulli => on as u64,
                    _ => arrived as u64,
                };
            }
            is_active[i] = on;
            if on {
                active.push(i);
            }
        }
        for &i in &active {
            let rng = &mut fading_rng[i];
            let h0: f64 = rng.sample(Exp1);
            let mut interference = noise;
            for &j in &active {
                if j != i {
                    let h: f64 = rng.sample(Exp1);
                    interference += h * gain[i][j];
                }
            }
            let success = h0 * gain[i][i] > theta * interference;
            let departs = match cfg.mode {
                TrafficMode::Queued => success,
                TrafficMode::Saturated => success && queue[i] > 0,
                // a fresh packet leaves whether or not it was decoded
                TrafficMode::Bernoulli => true,
            };
            if departs {
                queue[i] -= 1;
            }
            if counting {
                stats.attempts[i] += 1;
                stats.active_slots[i] += 1;
                stats.successes[i] += success as u64;
                stats.departures[i] += departs as u64;
            }
        }
        if counting && is_active[typ] {
            stats.tagged_slots += 1;
            for &j in &active {
                stats.tagged_active[j] += 1;
            }
        }
    }
    stats.final_queue_length.copy_from_slice(&queue);
    Ok(stats)
}

/// Independent topologies and dynamics, seeded from `cfg.seed`, run in
/// parallel and returned in realization order.
pub fn run_realizations(
    params: &SystemParams,
    region: &Region,
    cfg: &SimConfig,
    realizations: usize,
) -> Result<Vec<(Topology, SimStats)>, SimError> {
    (0..realizations)
        .into_par_iter()
        .map(|k| {
            let topo = generate_topology(params, region, derive_seed(cfg.seed, 2 * k as u64))?;
            let run = SimConfig { seed: derive_seed(cfg.seed, 2 * k as u64 + 1), ..*cfg };
            let stats = run_simulation_with(&topo, params, &run)?;
            Ok((topo, stats))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::{bound_success_probability, Regime};

    fn isolated(params: &SystemParams) -> Topology {
        Topology::from_points(vec![[100.0, 100.0]], vec![[100.0 + params.r(), 100.0]], Region::default_torus())
            .unwrap()
    }

    #[test]
    fn rejects_bad_slot_counts() {
        let p = SystemParams::defaults();
        assert!(run_simulation(&isolated(&p), &p, 10, 10, 0).is_err());
    }

    #[test]
    fn no_arrivals_no_activity() {
        let p = SystemParams::defaults().with_xi(1e-300).unwrap();
        let topo = generate_topology(&p, &Region::default_torus(), 3).unwrap();
        let s = run_simulation(&topo, &p, 2000, 100, 1).unwrap();
        assert!(s.attempts.iter().all(|&a| a == 0));
        assert!(s.active_slots.iter().all(|&a| a == 0));
    }

    #[test]
    fn isolated_link_matches_noise_limit() {
        // θ chosen so that the noise-only success probability is moderate
        let p = SystemParams::defaults().with_theta_db(55.0).unwrap().with_xi(1.0).unwrap();
        let s = run_simulation(&isolated(&p), &p, 60_000, 1000, 4).unwrap();
        let est = s.successes[0] as f64 / s.attempts[0] as f64;
        let e = p.noise_only_success();
        let se = (e * (1.0 - e) / s.attempts[0] as f64).sqrt();
        assert!((est - e).abs() < 3.0 * se, "{est} vs {e}");
    }

    #[test]
    fn conservation_in_every_mode() {
        let p = SystemParams::defaults().with_xi(0.3).unwrap();
        let topo = generate_topology(&p, &Region::default_torus(), 8).unwrap();
        for mode in [TrafficMode::Queued, TrafficMode::Saturated, TrafficMode::Bernoulli] {
            let s = run_simulation_with(&topo, &p, &SimConfig { slots: 3000, warmup: 300, seed: 2, mode }).unwrap();
            assert!(s.conservation_holds(), "{mode:?}");
            for i in 0..s.len() {
                assert!(s.successes[i] <= s.attempts[i]);
                assert!(s.attempts[i] <= 2700);
                assert!(s.active_slots[i] >= s.attempts[i]);
            }
        }
    }

    #[test]
    fn seeds_reproduce() {
        let p = SystemParams::defaults();
        let topo = generate_topology(&p, &Region::default_torus(), 8).unwrap();
        let a = run_simulation(&topo, &p, 2000, 200, 77).unwrap();
        let b = run_simulation(&topo, &p, 2000, 200, 77).unwrap();
        assert_eq!(a, b);
        let c = run_simulation(&topo, &p, 2000, 200, 78).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn saturated_mode_matches_dominant_bound() {
        let p = SystemParams::defaults();
        let cfg = SimConfig { slots: 2000, warmup: 100, seed: 5, mode: TrafficMode::Saturated };
        let runs = run_realizations(&p, &Region::default_torus(), &cfg, 20).unwrap();
        let (mut succ, mut att) = (0u64, 0u64);
        for (_, s) in &runs {
            succ += s.successes.iter().sum::<u64>();
            att += s.attempts.iter().sum::<u64>();
        }
        let est = succ as f64 / att as f64;
        let b = bound_success_probability(&p, Regime::Dominant);
        // per-topology spread dominates the binomial error, so pool over realizations
        let per: Vec<f64> = runs
            .iter()
            .map(|(_, s)| s.successes.iter().sum::<u64>() as f64 / s.attempts.iter().sum::<u64>() as f64)
            .collect();
        let m = per.iter().sum::<f64>() / per.len() as f64;
        let var = per.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (per.len() - 1) as f64;
        let se = (var / per.len() as f64).sqrt();
        assert!((est - b).abs() < 3.0 * se, "{est} vs {b} (se {se})");
    }
}
