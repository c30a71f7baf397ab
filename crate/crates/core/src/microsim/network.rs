use std::sync::Arc;

use rand::Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::field::{FieldKind, ScalarField2D};
use crate::geometry::Point2;
use crate::rng::stream_rng;

/// Uniform bucket grid over the domain rectangle for radius queries.
#[derive(Debug, Clone)]
struct BucketIndex {
    x_min: f64,
    y_min: f64,
    cell: f64,
    nx: usize,
    ny: usize,
    /// Node indices per bucket, ascending.
    buckets: Vec<Vec<usize>>,
}

impl BucketIndex {
    fn build(nodes: &[Point2], x_min: f64, y_min: f64, width: f64, height: f64) -> Self {
        let target = if nodes.is_empty() {
            width.max(height)
        } else {
            (width * height / nodes.len() as f64).sqrt() * 2.0
        };
        let cell = target.max(width.max(height) / 2048.0).max(f64::MIN_POSITIVE);
        let nx = ((width / cell).ceil() as usize).max(1);
        let ny = ((height / cell).ceil() as usize).max(1);
        let mut index = BucketIndex {
            x_min,
            y_min,
            cell,
            nx,
            ny,
            buckets: vec![Vec::new(); nx * ny],
        };
        for (k, &p) in nodes.iter().enumerate() {
            let b = index.bucket_of(p);
            index.buckets[b].push(k);
        }
        index
    }

    fn coords(&self, p: Point2) -> (usize, usize) {
        let i = ((p.x - self.x_min) / self.cell)
            .floor()
            .clamp(0.0, (self.nx - 1) as f64) as usize;
        let j = ((p.y - self.y_min) / self.cell)
            .floor()
            .clamp(0.0, (self.ny - 1) as f64) as usize;
        (i, j)
    }

    fn bucket_of(&self, p: Point2) -> usize {
        let (i, j) = self.coords(p);
        j * self.nx + i
    }

    fn visit_within(&self, nodes: &[Point2], center: Point2, radius: f64, mut f: impl FnMut(usize)) {
        let r_sq = radius * radius;
        let (i0, j0) = self.coords(center - Point2::new(radius, radius));
        let (i1, j1) = self.coords(center + Point2::new(radius, radius));
        for j in j0..=j1 {
            for i in i0..=i1 {
                for &k in &self.buckets[j * self.nx + i] {
                    if nodes[k].distance_sq(center) <= r_sq {
                        f(k);
                    }
                }
            }
        }
    }
}

/// Node positions of one Poisson deployment over a density field.
#[derive(Debug, Clone)]
pub struct NetworkRealization {
    nodes: Vec<Point2>,
    density: Arc<ScalarField2D>,
    seed: u64,
    index: BucketIndex,
}

impl NetworkRealization {
    /// Wrap explicit node positions, which must lie inside the density
    /// field's rectangle.
    pub fn from_nodes(nodes: Vec<Point2>, density: Arc<ScalarField2D>, seed: u64) -> Result<Self> {
        if density.kind() != FieldKind::Density {
            return Err(Error::Parameter(format!(
                "networks need a density field, got a {} field",
                density.kind().as_str()
            )));
        }
        let spec = *density.spec();
        if let Some(p) = nodes.iter().find(|p| !spec.contains(**p)) {
            return Err(Error::OutOfDomain {
                point: *p,
                reason: "network node outside the density grid".into(),
            });
        }
        let index = BucketIndex::build(
            &nodes,
            spec.x_min,
            spec.y_min,
            spec.x_max() - spec.x_min,
            spec.y_max() - spec.y_min,
        );
        Ok(NetworkRealization {
            nodes,
            density,
            seed,
            index,
        })
    }

    pub fn nodes(&self) -> &[Point2] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn node(&self, k: usize) -> Point2 {
        self.nodes[k]
    }

    pub fn density(&self) -> &ScalarField2D {
        &self.density
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Density at `p`, clamped into the grid.
    pub fn local_density(&self, p: Point2) -> f64 {
        self.density.sample_unchecked(self.density.spec().clamp(p))
    }

    /// Indices of nodes within `radius` of `center`, ascending.
    pub fn within(&self, center: Point2, radius: f64) -> Vec<usize> {
        let mut out = Vec::new();
        self.index.visit_within(&self.nodes, center, radius, |k| out.push(k));
        out.sort_unstable();
        out
    }

    pub(crate) fn for_each_within(&self, center: Point2, radius: f64, f: impl FnMut(usize)) {
        self.index.visit_within(&self.nodes, center, radius, f);
    }

    /// Node closest to `p`; ties go to the lower index.
    pub fn nearest(&self, p: Point2) -> Result<usize> {
        if self.nodes.is_empty() {
            return Err(Error::State("the network has no nodes".into()));
        }
        let mut radius = self.index.cell;
        loop {
            let mut best: Option<(f64, usize)> = None;
            self.index.visit_within(&self.nodes, p, radius, |k| {
                let d = self.nodes[k].distance_sq(p);
                if best.is_none_or(|(bd, bk)| d < bd || (d == bd && k < bk)) {
                    best = Some((d, k));
                }
            });
            if let Some((_, k)) = best {
                return Ok(k);
            }
            radius *= 2.0;
        }
    }
}

/// Inhomogeneous Poisson deployment by thinning: a homogeneous process at
/// `max(density)` over the rectangle, each point kept with probability
/// `density(p) / max(density)`.
pub fn sample_network(density: Arc<ScalarField2D>, seed: u64) -> Result<NetworkRealization> {
    if density.kind() != FieldKind::Density {
        return Err(Error::Parameter(format!(
            "networks need a density field, got a {} field",
            density.kind().as_str()
        )));
    }
    let spec = *density.spec();
    let lambda_max = density.max();
    let mean = lambda_max * spec.area();
    let mut rng = stream_rng(seed, 0);
    let count = if mean > 0.0 {
        Poisson::new(mean)
            .map_err(|e| Error::Parameter(format!("invalid Poisson mean {mean}: {e}")))?
            .sample(&mut rng) as usize
    } else {
        0
    };
    let mut nodes = Vec::with_capacity((mean * density.min() / lambda_max) as usize + 16);
    for _ in 0..count {
        let p = Point2::new(
            spec.x_min + rng.random::<f64>() * (spec.x_max() - spec.x_min),
            spec.y_min + rng.random::<f64>() * (spec.y_max() - spec.y_min),
        );
        let keep: f64 = rng.random();
        if keep * lambda_max < density.sample_unchecked(p) {
            nodes.push(p);
        }
    }
    NetworkRealization::from_nodes(nodes, density, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::GridSpec;

    fn uniform(lambda: f64) -> Arc<ScalarField2D> {
        let spec = GridSpec::from_extent(0.0, 100.0, 0.0, 100.0, 5.0).unwrap();
        Arc::new(ScalarField2D::constant(spec, FieldKind::Density, lambda).unwrap())
    }

    #[test]
    fn mean_count_matches_integral() {
        let density = uniform(0.01);
        let counts: Vec<f64> = (0..200)
            .map(|s| sample_network(density.clone(), s).unwrap().len() as f64)
            .collect();
        let mean = counts.iter().sum::<f64>() / 200.0;
        assert!((mean - 100.0).abs() <= 3.0 * (100.0f64 / 200.0).sqrt(), "mean {mean}");
    }

    #[test]
    fn same_seed_same_nodes() {
        let density = uniform(0.05);
        let a = sample_network(density.clone(), 17).unwrap();
        let b = sample_network(density.clone(), 17).unwrap();
        let c = sample_network(density, 18).unwrap();
        assert_eq!(a.nodes(), b.nodes());
        assert_ne!(a.nodes(), c.nodes());
    }

    #[test]
    fn disjoint_counts_are_uncorrelated() {
        let density = uniform(0.02);
        let pairs: Vec<(f64, f64)> = (0..500)
            .map(|s| {
                let net = sample_network(density.clone(), 1000 + s).unwrap();
                let left = net.nodes().iter().filter(|p| p.x < 40.0).count() as f64;
                let right = net.nodes().iter().filter(|p| p.x >= 60.0).count() as f64;
                (left, right)
            })
            .collect();
        let n = pairs.len() as f64;
        let (ma, mb) = (
            pairs.iter().map(|p| p.0).sum::<f64>() / n,
            pairs.iter().map(|p| p.1).sum::<f64>() / n,
        );
        let cov = pairs.iter().map(|p| (p.0 - ma) * (p.1 - mb)).sum::<f64>();
        let va = pairs.iter().map(|p| (p.0 - ma).powi(2)).sum::<f64>();
        let vb = pairs.iter().map(|p| (p.1 - mb).powi(2)).sum::<f64>();
        let corr = cov / (va * vb).sqrt();
        assert!(corr.abs() <= 0.1, "correlation {corr}");
    }

    #[test]
    fn thinning_follows_density() {
        let spec = GridSpec::from_extent(0.0, 100.0, 0.0, 50.0, 1.0).unwrap();
        let density = Arc::new(ScalarField2D::from_fn(spec, FieldKind::Density, |p| 0.001 + 0.001 * p.x).unwrap());
        let net = sample_network(density, 3).unwrap();
        let left = net.nodes().iter().filter(|p| p.x < 50.0).count() as f64;
        let right = net.nodes().iter().filter(|p| p.x >= 50.0).count() as f64;
        // Expected 65 and 190.
        assert!((left - 65.0).abs() < 4.0 * 65f64.sqrt(), "left {left}");
        assert!((right - 190.0).abs() < 4.0 * 190f64.sqrt(), "right {right}");
    }

    #[test]
    fn radius_queries_match_brute_force() {
        let net = sample_network(uniform(0.3), 5).unwrap();
        for (c, r) in [
            (Point2::new(50.0, 50.0), 7.5),
            (Point2::new(0.0, 3.0), 12.0),
            (Point2::new(99.0, 99.0), 0.5),
        ] {
            let brute: Vec<usize> = (0..net.len()).filter(|&k| net.node(k).distance(c) <= r).collect();
            assert_eq!(net.within(c, r), brute);
            let nearest = (0..net.len())
                .min_by(|&a, &b| net.node(a).distance(c).total_cmp(&net.node(b).distance(c)))
                .unwrap();
            assert_eq!(net.nearest(c).unwrap(), nearest);
        }
    }
}
