use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::Point;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeedingConfig {
    /// Poisson-disk radius `σ`.
    pub sigma: f64,
    /// Far-field suppression `κ`.
    pub kappa: f64,
    pub seed: u64,
}

impl SeedingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "sigma must be positive, got {}",
                self.sigma
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "kappa must be non-negative, got {}",
                self.kappa
            )));
        }
        Ok(())
    }
}

type Cell = [i64; 3];

fn cell_of(p: &Point, origin: &Point, size: f64) -> Cell {
    [0, 1, 2].map(|k| ((p[k] - origin[k]) / size).floor() as i64)
}

/// Uniform-grid index answering nearest-point distance queries.
#[derive(Clone, Debug)]
pub struct NearestIndex {
    points: Vec<Point>,
    origin: Point,
    cell: f64,
    buckets: HashMap<Cell, Vec<usize>>,
    extent: i64,
}

impl NearestIndex {
    /// Cells are sized so that each holds about two points on average.
    pub fn new(points: Vec<Point>) -> Result<NearestIndex> {
        let first = *points
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty point set".into()))?;
        let (lo, hi) = points
            .iter()
            .fold((first, first), |(lo, hi), p| (lo.inf(p), hi.sup(p)));
        let span = (hi - lo).max().max(f64::MIN_POSITIVE);
        let per_axis = (points.len() as f64 / 2.0).cbrt().ceil().max(1.0);
        let cell = span / per_axis;
        let mut buckets: HashMap<Cell, Vec<usize>> = HashMap::new();
        for (i, p) in points.iter().enumerate() {
            buckets.entry(cell_of(p, &lo, cell)).or_default().push(i);
        }
        Ok(NearestIndex {
            points,
            origin: lo,
            cell,
            buckets,
            extent: per_axis as i64 + 1,
        })
    }

    /// Index of and distance to the nearest indexed point; ties go to the
    /// lowest index.
    pub fn nearest(&self, p: &Point) -> (usize, f64) {
        let c = cell_of(p, &self.origin, self.cell);
        // rings beyond this cannot contain anything closer than the grid span
        let outside = [0, 1, 2]
            .map(|k| (-c[k]).max(c[k] - self.extent).max(0))
            .into_iter()
            .max()
            .unwrap_or(0);
        let mut best = (usize::MAX, f64::INFINITY);
        let mut ring = 0i64;
        loop {
            for dx in -ring..=ring {
                for dy in -ring..=ring {
                    for dz in -ring..=ring {
                        if dx.abs().max(dy.abs()).max(dz.abs()) != ring {
                            continue;
                        }
                        let Some(ids) = self.buckets.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) else {
                            continue;
                        };
                        for &i in ids {
                            let d = (self.points[i] - p).norm();
                            if d < best.1 || (d == best.1 && i < best.0) {
                                best = (i, d);
                            }
                        }
                    }
                }
            }
            // any point in a farther ring is at least `ring·cell` away
            if best.1 < ring as f64 * self.cell || ring > outside + self.extent {
                return best;
            }
            ring += 1;
        }
    }

    pub fn distance(&self, p: &Point) -> f64 {
        self.nearest(p).1
    }
}

/// `min(1, d/σ)·exp(−κd)` with `d` the distance from `p` to the nearest
/// surface vertex.
pub fn keep_probability(p: &Point, surface: &NearestIndex, cfg: &SeedingConfig) -> f64 {
    probability_at(surface.distance(p), cfg)
}

pub fn probability_at(d: f64, cfg: &SeedingConfig) -> f64 {
    (d / cfg.sigma).min(1.0) * (-cfg.kappa * d).exp()
}

/// Keeps candidate `p` iff a uniform draw in `[0, 1)` is below its keep
/// probability. One draw is taken per candidate, in order.
pub fn filter_samples(candidates: &[Point], surface: &[Point], cfg: &SeedingConfig) -> Result<Vec<Point>> {
    cfg.validate()?;
    let index = NearestIndex::new(surface.to_vec())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    Ok(candidates
        .iter()
        .filter(|p| {
            let u: f64 = rng.random_range(0.0..1.0);
            u < keep_probability(p, &index, cfg)
        })
        .copied()
        .collect())
}

/// Bridson dart throwing in the box `[lo, hi]`: no two samples closer than
/// `radius`, `attempts` candidates per active sample.
pub fn poisson_disk(lo: Point, hi: Point, radius: f64, attempts: usize, seed: u64) -> Result<Vec<Point>> {
    if !(radius > 0.0) || (0..3).any(|k| !(hi[k] > lo[k])) {
        return Err(Error::InvalidArgument(
            "Poisson-disk sampling needs a positive radius and a non-empty box".into(),
        ));
    }
    let cell = radius / 3f64.sqrt();
    let dims = [0, 1, 2].map(|k| ((hi[k] - lo[k]) / cell).ceil() as usize);
    let total = dims[0]
        .checked_mul(dims[1])
        .and_then(|x| x.checked_mul(dims[2]))
        .filter(|&t| t <= 1 << 28)
        .ok_or_else(|| Error::InvalidArgument("radius too small for the sampling box".into()))?;
    let mut grid: Vec<Option<usize>> = vec![None; total];
    let index_of = |p: &Point| {
        let c = [0, 1, 2].map(|k| (((p[k] - lo[k]) / cell) as usize).min(dims[k] - 1));
        (c, c[0] + dims[0] * (c[1] + dims[1] * c[2]))
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut samples: Vec<Point> = Vec::new();
    let mut active: Vec<usize> = Vec::new();

    let first = Point::new(
        rng.random_range(lo.x..hi.x),
        rng.random_range(lo.y..hi.y),
        rng.random_range(lo.z..hi.z),
    );
    grid[index_of(&first).1] = Some(0);
    samples.push(first);
    active.push(0);

    while !active.is_empty() {
        let slot = rng.random_range(0..active.len());
        let base = samples[active[slot]];
        let mut placed = false;
        for _ in 0..attempts {
            // uniform direction, radius in [r, 2r)
            let dir = loop {
                let v = Point::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                );
                let n = v.norm();
                if n > 1e-3 && n <= 1.0 {
                    break v / n;
                }
            };
            let q = base + dir * rng.random_range(radius..2.0 * radius);
            if (0..3).any(|k| q[k] < lo[k] || q[k] >= hi[k]) {
                continue;
            }
            let (c, _) = index_of(&q);
            let mut ok = true;
            'scan: for x in c[0].saturating_sub(2)..(c[0] + 3).min(dims[0]) {
                for y in c[1].saturating_sub(2)..(c[1] + 3).min(dims[1]) {
                    for z in c[2].saturating_sub(2)..(c[2] + 3).min(dims[2]) {
                        if let Some(s) = grid[x + dims[0] * (y + dims[1] * z)] {
                            if (samples[s] - q).norm() < radius {
                                ok = false;
                                break 'scan;
                            }
                        }
                    }
                }
            }
            if ok {
                grid[index_of(&q).1] = Some(samples.len());
                active.push(samples.len());
                samples.push(q);
                placed = true;
                break;
            }
        }
        if !placed {
            active.swap_remove(slot);
        }
    }
    Ok(samples)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(sigma: f64, kappa: f64) -> SeedingConfig {
        SeedingConfig {
            sigma,
            kappa,
            seed: 42,
        }
    }

    #[test]
    fn probability_examples() {
        let surface = NearestIndex::new(vec![Point::zeros(), Point::x()]).unwrap();
        let c = cfg(0.2, 1.5);
        assert_eq!(keep_probability(&Point::x(), &surface, &c), 0.0);
        let at_sigma = Point::new(0.0, 0.2, 0.0);
        assert!((keep_probability(&at_sigma, &surface, &c) - (-1.5f64 * 0.2).exp()).abs() < 1e-15);
        let far = Point::new(0.5, 3.0, 0.0);
        assert_eq!(keep_probability(&far, &surface, &cfg(0.2, 0.0)), 1.0);
    }

    #[test]
    fn nearest_matches_brute_force() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut pt = || {
            Point::new(
                rng.random_range(-1.0..2.0),
                rng.random_range(0.0..1.0),
                rng.random_range(0.0..0.1),
            )
        };
        let points: Vec<Point> = (0..300).map(|_| pt()).collect();
        let index = NearestIndex::new(points.clone()).unwrap();
        for _ in 0..500 {
            let q = pt() * 1.7 - Point::new(0.5, 0.5, 0.5);
            let brute = points
                .iter()
                .map(|p| (p - q).norm())
                .fold(f64::INFINITY, f64::min);
            assert_eq!(index.distance(&q), brute);
        }
        assert!(NearestIndex::new(Vec::new()).is_err());
    }

    #[test]
    fn filtering_examples() {
        let surface = vec![Point::zeros(), Point::y()];
        assert!(filter_samples(&surface, &surface, &cfg(0.1, 2.0))
            .unwrap()
            .is_empty());
        let far: Vec<Point> = (0..50)
            .map(|i| Point::new(1.0 + i as f64 * 0.01, 0.0, 0.0))
            .collect();
        assert_eq!(filter_samples(&far, &surface, &cfg(0.1, 0.0)).unwrap(), far);
    }

    #[test]
    fn filtering_is_deterministic() {
        let samples = poisson_disk(Point::zeros(), Point::repeat(1.0), 0.15, 30, 3).unwrap();
        let surface: Vec<Point> = samples.iter().filter(|p| p.x < 0.3).copied().collect();
        let a = filter_samples(&samples, &surface, &cfg(0.15, 1.0)).unwrap();
        let b = filter_samples(&samples, &surface, &cfg(0.15, 1.0)).unwrap();
        assert_eq!(a, b);
        // recorded once from this configuration
        const KEPT: [usize; 98] = [
            2, 3, 4, 5, 6, 8, 9, 10, 13, 14, 15, 17, 18, 19, 20, 21, 23, 24, 25, 28, 29, 30, 31, 33, 36, 37,
            42, 46, 48, 51, 54, 55, 59, 66, 67, 68, 71, 72, 74, 79, 80, 83, 85, 87, 89, 90, 91, 93, 99, 100,
            101, 107, 111, 112, 113, 116, 117, 118, 122, 123, 125, 126, 133, 134, 136, 137, 138, 140, 143,
            145, 149, 150, 151, 152, 156, 160, 161, 162, 164, 168, 169, 170, 173, 175, 177, 180, 181, 182,
            183, 184, 185, 188, 190, 191, 193, 203, 204, 208,
        ];
        assert_eq!((samples.len(), surface.len()), (212, 66));
        let kept: Vec<Point> = KEPT.iter().map(|&i| samples[i]).collect();
        assert_eq!(a, kept);
    }

    #[test]
    fn poisson_disk_respects_the_radius() {
        let r = 0.12;
        let s = poisson_disk(Point::zeros(), Point::repeat(1.0), r, 30, 9).unwrap();
        assert!(s.len() > 100);
        for (i, p) in s.iter().enumerate() {
            assert!((0..3).all(|k| p[k] >= 0.0 && p[k] < 1.0));
            for q in &s[..i] {
                assert!((p - q).norm() >= r);
            }
        }
        assert_eq!(
            s,
            poisson_disk(Point::zeros(), Point::repeat(1.0), r, 30, 9).unwrap()
        );
        assert!(poisson_disk(Point::zeros(), Point::repeat(1.0), 0.0, 30, 9).is_err());
    }
}
