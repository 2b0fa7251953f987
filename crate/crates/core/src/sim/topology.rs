use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::Poisson;
use serde::{Deserialize, Serialize};

use super::SimError;
use crate::params::{Region, SystemParams};

/// Transmitter/receiver pairs in a square region.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Topology {
    pub tx: Vec<[f64; 2]>,
    pub rx: Vec<[f64; 2]>,
    pub region: Region,
    /// link whose receiver is nearest the centre of the region
    pub typical_index: usize,
    /// redraws needed because a realization had no transmitters
    pub empty_redraws: u32,
}

impl Topology {
    pub fn len(&self) -> usize {
        self.tx.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tx.is_empty()
    }

    /// Build from explicit coordinates (all inside the region).
    pub fn from_points(tx: Vec<[f64; 2]>, rx: Vec<[f64; 2]>, region: Region) -> Result<Self, SimError> {
        if tx.len() != rx.len() || tx.is_empty() {
            return Err(SimError::Config("need equally many transmitters and receivers, at least one".into()));
        }
        let s = region.side();
        if tx.iter().chain(&rx).any(|p| !(0.0..s).contains(&p[0]) || !(0.0..s).contains(&p[1])) {
            return Err(SimError::Config("point outside region".into()));
        }
        let typical_index = nearest_centre(&rx, s);
        Ok(Self { tx, rx, region, typical_index, empty_redraws: 0 })
    }
}

fn nearest_centre(rx: &[[f64; 2]], side: f64) -> usize {
    let c = 0.5 * side;
    let d2 = |p: &[f64; 2]| (p[0] - c).powi(2) + (p[1] - c).powi(2);
    (0..rx.len())
        .min_by(|&a, &b| d2(&rx[a]).total_cmp(&d2(&rx[b])))
        .unwrap_or(0)
}

/// Distance under the torus metric when the region wraps, else Euclidean.
pub fn wrap_distance(a: [f64; 2], b: [f64; 2], region: &Region) -> f64 {
    let mut dx = (a[0] - b[0]).abs();
    let mut dy = (a[1] - b[1]).abs();
    if region.wrap() {
        let s = region.side();
        dx = dx.min(s - dx);
        dy = dy.min(s - dy);
    }
    dx.hypot(dy)
}

/// Poisson bipolar layout: Poisson(λ·side²) transmitters placed uniformly,
/// each with a receiver at distance r in a uniform direction.
pub fn generate_topology(params: &SystemParams, region: &Region, seed: u64) -> Result<Topology, SimError> {
    let s = region.side();
    let r = params.r();
    if !region.wrap() && 2.0 * r >= s {
        return Err(SimError::Config("link distance too large for the region".into()));
    }
    let mean = params.lambda() * region.area();
    let poisson = Poisson::new(mean).map_err(|e| SimError::Config(e.to_string()))?;
    let mut redraws = 0u32;
    loop {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(redraws as u64);
        let n = rng.sample(poisson) as usize;
        if n == 0 {
            redraws += 1;
            if redraws > 1000 {
                return Err(SimError::Config("density too low to place any link".into()));
            }
            continue;
        }
        let mut tx = Vec::with_capacity(n);
        let mut rx = Vec::with_capacity(n);
        for _ in 0..n {
            let p = [rng.random::<f64>() * s, rng.random::<f64>() * s];
            let q = loop {
                let ang = rng.random::<f64>() * 2.0 * PI;
                let q = [p[0] + r * ang.cos(), p[1] + r * ang.sin()];
                if region.wrap() {
                    let m = |x: f64| {
                        let y = x.rem_euclid(s);
                        if y >= s { 0.0 } else { y }
                    };
                    break [m(q[0]), m(q[1])];
                }
                if (0.0..s).contains(&q[0]) && (0.0..s).contains(&q[1]) {
                    break q;
                }
            };
            tx.push(p);
            rx.push(q);
        }
        let typical_index = nearest_centre(&rx, s);
        return Ok(Topology { tx, rx, region: *region, typical_index, empty_redraws: redraws });
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrap_metric_cases() {
        let reg = Region::new(1000.0, true).unwrap();
        assert_eq!(wrap_distance([3.0, 4.0], [3.0, 4.0], &reg), 0.0);
        assert!((wrap_distance([0.0, 0.0], [999.0, 0.0], &reg) - 1.0).abs() < 1e-12);
        assert!((wrap_distance([0.0, 0.0], [500.0, 500.0], &reg) - 500.0 * 2f64.sqrt()).abs() < 1e-9);
        let flat = Region::new(1000.0, false).unwrap();
        assert!((wrap_distance([0.0, 0.0], [999.0, 0.0], &flat) - 999.0).abs() < 1e-12);
    }

    #[test]
    fn links_have_length_r() {
        let p = SystemParams::defaults();
        let reg = Region::default_torus();
        let t = generate_topology(&p, &reg, 5).unwrap();
        for (a, b) in t.tx.iter().zip(&t.rx) {
            assert!((wrap_distance(*a, *b, &reg) - 25.0).abs() < 1e-9);
            for c in a.iter().chain(b) {
                assert!((0.0..1000.0).contains(c));
            }
        }
    }

    #[test]
    fn deterministic() {
        let p = SystemParams::defaults();
        let reg = Region::default_torus();
        assert_eq!(generate_topology(&p, &reg, 42).unwrap(), generate_topology(&p, &reg, 42).unwrap());
        assert_ne!(generate_topology(&p, &reg, 42).unwrap(), generate_topology(&p, &reg, 43).unwrap());
    }

    #[test]
    fn poisson_counts_concentrate() {
        let p = SystemParams::defaults();
        let reg = Region::default_torus();
        let inside = (0..1000u64)
            .filter(|&s| {
                let n = generate_topology(&p, &reg, s).unwrap().len() as f64;
                (n - 100.0).abs() <= 30.0
            })
            .count();
        assert!(inside >= 950, "{inside}");
    }

    #[test]
    fn empty_draws_are_redrawn() {
        let p = SystemParams::defaults().with_lambda(1e-7).unwrap();
        let reg = Region::default_torus();
        let layouts: Vec<Topology> = (0..20).map(|s| generate_topology(&p, &reg, s).unwrap()).collect();
        assert!(layouts.iter().all(|t| !t.is_empty()));
        assert!(layouts.iter().any(|t| t.empty_redraws > 0));
    }

    #[test]
    fn typical_link_near_centre() {
        let p = SystemParams::defaults();
        let reg = Region::default_torus();
        let t = generate_topology(&p, &reg, 9).unwrap();
        let c = [500.0, 500.0];
        let d = |q: [f64; 2]| (q[0] - c[0]).hypot(q[1] - c[1]);
        let best = t.rx.iter().map(|&q| d(q)).fold(f64::INFINITY, f64::min);
        assert_eq!(d(t.rx[t.typical_index]), best);
    }
}
