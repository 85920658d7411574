//! Adaptive zones of normal operation in the eigenvalue plane.
//!
//! Healthy eigenvalue samples are clustered with k-means; each cluster gets
//! a boundary `ρ(θ)` around its centroid from a least-squares polynomial in
//! the polar angle. A [`Detector`] classifies a stream against those zones,
//! confirms excursions with a consecutive-sample counter and refits the
//! zones periodically from in-zone samples only.

use std::f64::consts::PI;
use std::fmt::Write as _;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::estimator::EigenSample;

const MAX_ITER: usize = 100;
const RESTARTS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DetectorConfig {
    pub k_clusters: usize,
    pub poly_degree: usize,
    /// Radial margin applied to the fitted boundary, ≥ 1.
    pub margin: f64,
    /// Consecutive out-of-zone samples that raise an alarm.
    pub confirm_count: usize,
    /// Seconds between zone refits.
    pub update_interval: f64,
    /// Non-withheld samples collected before the detector arms.
    pub training_min: usize,
    /// Smallest boundary radius as a fraction of the centroid magnitude.
    pub min_radius_frac: f64,
    /// In-zone samples kept out of refits just before an alarm and just
    /// after a clear, since their estimator windows straddle the fault.
    /// Usually the estimator window length.
    pub guard: usize,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            k_clusters: 2,
            poly_degree: 2,
            margin: 1.5,
            confirm_count: 3,
            update_interval: 60.0,
            training_min: 100,
            min_radius_frac: 0.01,
            guard: 0,
            seed: 7,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k_clusters < 1 || self.confirm_count < 1 {
            return Err(Error::Config("k_clusters and confirm_count must be >= 1".into()));
        }
        if !(self.margin >= 1.0) {
            return Err(Error::Config(format!("margin must be >= 1, got {}", self.margin)));
        }
        if !(self.update_interval > 0.0) {
            return Err(Error::Config("update_interval must be > 0".into()));
        }
        if !(self.min_radius_frac >= 0.0) {
            return Err(Error::Config("min_radius_frac must be >= 0".into()));
        }
        let needed = self.k_clusters * (self.poly_degree + 2);
        if self.training_min < needed {
            return Err(Error::Config(format!(
                "training_min must be >= k_clusters * (poly_degree + 2) = {needed}"
            )));
        }
        Ok(())
    }

    fn min_per_cluster(&self) -> usize {
        self.poly_degree + 2
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    pub assignments: Vec<usize>,
    pub centroids: Vec<Complex64>,
    pub wcss: f64,
}

impl Clustering {
    pub fn members(&self, points: &[Complex64], cluster: usize) -> Vec<Complex64> {
        points
            .iter()
            .zip(&self.assignments)
            .filter(|(_, a)| **a == cluster)
            .map(|(p, _)| *p)
            .collect()
    }
}

fn nearest(p: Complex64, centroids: &[Complex64]) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (j, c) in centroids.iter().enumerate() {
        let d = (p - c).norm_sqr();
        if d < best.1 {
            best = (j, d);
        }
    }
    best
}

fn plus_plus(points: &[Complex64], k: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
    let mut centroids = vec![points[rng.gen_range(0..points.len())]];
    let mut d2: Vec<f64> = points.iter().map(|p| (p - centroids[0]).norm_sqr()).collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        let idx = if total > 0.0 {
            let mut r = rng.gen::<f64>() * total;
            let mut pick = points.len() - 1;
            for (i, d) in d2.iter().enumerate() {
                if r < *d {
                    pick = i;
                    break;
                }
                r -= d;
            }
            pick
        } else {
            rng.gen_range(0..points.len())
        };
        let c = points[idx];
        centroids.push(c);
        for (d, p) in d2.iter_mut().zip(points) {
            *d = d.min((p - c).norm_sqr());
        }
    }
    centroids
}

fn lloyd(points: &[Complex64], mut centroids: Vec<Complex64>) -> Clustering {
    let k = centroids.len();
    let mut assignments = vec![usize::MAX; points.len()];
    for _ in 0..MAX_ITER {
        let mut changed = false;
        for (a, p) in assignments.iter_mut().zip(points) {
            let (j, _) = nearest(*p, &centroids);
            if *a != j {
                *a = j;
                changed = true;
            }
        }
        let mut sums = vec![Complex64::new(0.0, 0.0); k];
        let mut counts = vec![0usize; k];
        for (a, p) in assignments.iter().zip(points) {
            sums[*a] += p;
            counts[*a] += 1;
        }
        for j in 0..k {
            if counts[j] > 0 {
                centroids[j] = sums[j] / counts[j] as f64;
            } else {
                // Re-seed an empty cluster at the worst-fit point.
                let far = points
                    .iter()
                    .zip(&assignments)
                    .enumerate()
                    .max_by(|x, y| {
                        let dx = (x.1 .0 - centroids[*x.1 .1]).norm_sqr();
                        let dy = (y.1 .0 - centroids[*y.1 .1]).norm_sqr();
                        dx.total_cmp(&dy).then(y.0.cmp(&x.0))
                    })
                    .map(|(i, _)| i)
                    .unwrap_or(0);
                centroids[j] = points[far];
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    let wcss = assignments
        .iter()
        .zip(points)
        .map(|(a, p)| (p - centroids[*a]).norm_sqr())
        .sum();
    Clustering {
        assignments,
        centroids,
        wcss,
    }
}

/// k-means in the complex plane: k-means++ seeding, best of 5 restarts.
pub fn cluster(points: &[Complex64], k: usize, seed: u64) -> Result<Clustering> {
    if k == 0 || points.len() < k {
        return Err(Error::InsufficientData {
            needed: k.max(1),
            got: points.len(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<Clustering> = None;
    for _ in 0..RESTARTS {
        let c = lloyd(points, plus_plus(points, k, &mut rng));
        if best.as_ref().is_none_or(|b| c.wcss < b.wcss) {
            best = Some(c);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// One zone: `ρ(θ) = margin · max(poly(θ/π), ρ95)`, floored at `min_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub cluster_id: usize,
    pub centroid: Complex64,
    /// Polynomial coefficients in `θ/π`, constant term first. Empty for a
    /// degenerate (disc) zone.
    pub coefficients: Vec<f64>,
    /// 95th-percentile sample radius.
    pub rho95: f64,
    pub margin: f64,
    pub min_radius: f64,
    pub sample_count: usize,
    pub last_update_time: f64,
}

fn polyval(c: &[f64], x: f64) -> f64 {
    c.iter().rev().fold(0.0, |acc, a| acc * x + a)
}

impl Zone {
    pub fn degree(&self) -> usize {
        self.coefficients.len().saturating_sub(1)
    }

    pub fn is_disc(&self) -> bool {
        self.coefficients.is_empty()
    }

    /// Boundary radius at polar angle `theta` (radians, about the centroid).
    pub fn boundary(&self, theta: f64) -> f64 {
        let fitted = if self.is_disc() {
            0.0
        } else {
            polyval(&self.coefficients, theta / PI).max(self.rho95)
        };
        (self.margin * fitted).max(self.min_radius).max(f64::MIN_POSITIVE)
    }

    /// `ρ / boundary(θ) − 1`: negative inside, zero on the boundary.
    pub fn distance(&self, z: Complex64) -> f64 {
        let d = z - self.centroid;
        d.norm() / self.boundary(d.arg()) - 1.0
    }

    /// Closed boundary polygon with `n` vertices, for plotting.
    pub fn outline(&self, n: usize) -> Vec<Complex64> {
        (0..n)
            .map(|i| {
                let theta = -PI + 2.0 * PI * i as f64 / n as f64;
                self.centroid + Complex64::from_polar(self.boundary(theta), theta)
            })
            .collect()
    }

    /// One machine-readable snapshot line.
    pub fn snapshot_line(&self) -> String {
        let mut s = format!(
            "t={} cluster_id={} centroid={},{} degree={} margin={} rho95={} min_radius={} samples={} coefficients=",
            self.last_update_time,
            self.cluster_id,
            self.centroid.re,
            self.centroid.im,
            self.degree(),
            self.margin,
            self.rho95,
            self.min_radius,
            self.sample_count,
        );
        for (i, c) in self.coefficients.iter().enumerate() {
            if i > 0 {
                s.push(',');
            }
            let _ = write!(s, "{c}");
        }
        s
    }
}

fn nearest_rank(sorted: &[f64], q: f64) -> f64 {
    let idx = ((q * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len()) - 1;
    sorted[idx]
}

/// Fit one zone to `points` around `centroid`.
pub fn fit_zone(cluster_id: usize, points: &[Complex64], centroid: Complex64, cfg: &DetectorConfig, t: f64) -> Result<Zone> {
    let deg = cfg.poly_degree;
    if points.len() < deg + 2 {
        return Err(Error::InsufficientData {
            needed: deg + 2,
            got: points.len(),
        });
    }
    let min_radius = cfg.min_radius_frac * centroid.norm();
    let polar: Vec<(f64, f64)> = points
        .iter()
        .map(|p| {
            let d = p - centroid;
            (d.norm(), d.arg())
        })
        .collect();
    let mut radii: Vec<f64> = polar.iter().map(|(r, _)| *r).collect();
    radii.sort_by(f64::total_cmp);
    let rho_max = *radii.last().expect("non-empty");
    let mut zone = Zone {
        cluster_id,
        centroid,
        coefficients: Vec::new(),
        rho95: nearest_rank(&radii, 0.95),
        margin: cfg.margin,
        min_radius,
        sample_count: points.len(),
        last_update_time: t,
    };
    if rho_max <= 1e-12 * centroid.norm().max(1.0) {
        return Ok(zone);
    }
    // Samples near ±π are duplicated one period over so the fit sees the
    // wrap-around.
    let mut rows: Vec<(f64, f64)> = Vec::with_capacity(points.len() * 2);
    for &(r, th) in &polar {
        let x = th / PI;
        rows.push((x, r));
        if x > 0.5 {
            rows.push((x - 2.0, r));
        } else if x < -0.5 {
            rows.push((x + 2.0, r));
        }
    }
    let v = DMatrix::from_fn(rows.len(), deg + 1, |i, j| rows[i].0.powi(j as i32));
    let y = DVector::from_iterator(rows.len(), rows.iter().map(|(_, r)| *r));
    let svd = v.svd(true, true);
    let tol = svd.singular_values.max() * 1e-12;
    let c = svd
        .solve(&y, tol)
        .map_err(|e| Error::InvalidParameter(format!("zone fit: {e}")))?;
    zone.coefficients = c.iter().copied().collect();
    Ok(zone)
}

/// Cluster `points` and fit a zone per cluster. Clusters too small for the
/// polynomial are dropped; at least one zone is always returned.
pub fn fit_zones(points: &[Complex64], cfg: &DetectorConfig, t: f64) -> Result<Vec<Zone>> {
    let k = cfg.k_clusters.min(points.len().max(1));
    let clustering = cluster(points, k, cfg.seed)?;
    let mut zones = Vec::with_capacity(k);
    for (j, c) in clustering.centroids.iter().enumerate() {
        let members = clustering.members(points, j);
        if members.len() >= cfg.min_per_cluster() {
            zones.push(fit_zone(j, &members, *c, cfg, t)?);
        }
    }
    if zones.is_empty() {
        return Err(Error::InsufficientData {
            needed: cfg.min_per_cluster(),
            got: points.len(),
        });
    }
    Ok(zones)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Classification {
    pub in_zone: bool,
    pub distance: f64,
}

pub fn classify(z: Complex64, zones: &[Zone]) -> Classification {
    let distance = zones.iter().map(|zn| zn.distance(z)).fold(f64::INFINITY, f64::min);
    Classification {
        in_zone: distance <= 0.0,
        distance,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum EventKind {
    Alarm,
    Clear,
}

impl EventKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            EventKind::Alarm => "ALARM",
            EventKind::Clear => "CLEAR",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DetectionEvent {
    pub t: f64,
    pub line_id: String,
    pub kind: EventKind,
    pub lambda: Complex64,
    pub distance: f64,
}

/// Streaming detector for one line.
#[derive(Debug, Clone)]
pub struct Detector {
    cfg: DetectorConfig,
    line_id: String,
    training: Vec<Complex64>,
    zones: Vec<Zone>,
    pending: Vec<Complex64>,
    holdoff: usize,
    last_refit: f64,
    counter: usize,
    alarmed: bool,
    history: Vec<Vec<Zone>>,
}

impl Detector {
    pub fn new(cfg: DetectorConfig, line_id: impl Into<String>) -> Result<Detector> {
        cfg.validate()?;
        Ok(Detector {
            cfg,
            line_id: line_id.into(),
            training: Vec::new(),
            zones: Vec::new(),
            pending: Vec::new(),
            holdoff: 0,
            last_refit: 0.0,
            counter: 0,
            alarmed: false,
            history: Vec::new(),
        })
    }

    pub fn armed(&self) -> bool {
        !self.zones.is_empty()
    }

    pub fn alarmed(&self) -> bool {
        self.alarmed
    }

    pub fn zones(&self) -> &[Zone] {
        &self.zones
    }

    /// Every zone set in force so far, oldest first.
    pub fn history(&self) -> &[Vec<Zone>] {
        &self.history
    }

    fn install(&mut self, zones: Vec<Zone>, t: f64) {
        self.history.push(zones.clone());
        self.zones = zones;
        self.last_refit = t;
    }

    /// Feed one estimate. Withheld samples are ignored.
    pub fn step(&mut self, s: &EigenSample) -> Result<Option<DetectionEvent>> {
        let Some(lambda) = s.lambda else {
            return Ok(None);
        };
        if !self.armed() {
            self.training.push(lambda);
            if self.training.len() >= self.cfg.training_min {
                let zones = fit_zones(&self.training, &self.cfg, s.t)?;
                self.training.clear();
                self.install(zones, s.t);
            }
            return Ok(None);
        }
        let c = classify(lambda, &self.zones);
        let event = |kind| DetectionEvent {
            t: s.t,
            line_id: self.line_id.clone(),
            kind,
            lambda,
            distance: c.distance,
        };
        let mut out = None;
        if c.in_zone {
            self.counter = 0;
            if self.alarmed {
                self.alarmed = false;
                self.holdoff = self.cfg.guard;
                out = Some(event(EventKind::Clear));
            }
            if self.holdoff > 0 {
                self.holdoff -= 1;
            } else {
                self.pending.push(lambda);
            }
        } else {
            self.counter += 1;
            if self.counter == self.cfg.confirm_count && !self.alarmed {
                self.alarmed = true;
                let keep = self.pending.len().saturating_sub(self.cfg.guard);
                self.pending.truncate(keep);
                out = Some(event(EventKind::Alarm));
            }
        }
        // Zones are frozen while alarmed.
        if !self.alarmed && s.t - self.last_refit >= self.cfg.update_interval
            && self.pending.len() >= self.cfg.k_clusters * self.cfg.min_per_cluster() {
                let zones = fit_zones(&self.pending, &self.cfg, s.t)?;
                self.pending.clear();
                self.install(zones, s.t);
            }
        Ok(out)
    }

    pub fn run(&mut self, samples: &[EigenSample]) -> Result<Vec<DetectionEvent>> {
        let mut events = Vec::new();
        for s in samples {
            if let Some(e) = self.step(s)? {
                events.push(e);
            }
        }
        Ok(events)
    }
}

/// Event log CSV: `t, line_id, kind, re, im, distance`.
pub fn write_events_csv<W: Write>(out: W, events: &[DetectionEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "line_id", "kind", "re", "im", "distance"])?;
    for e in events {
        w.write_record([
            e.t.to_string(),
            e.line_id.clone(),
            e.kind.as_str().to_string(),
            e.lambda.re.to_string(),
            e.lambda.im.to_string(),
            e.distance.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// Zone snapshots, one line per zone, refits in order.
pub fn write_zone_snapshots<W: Write>(mut out: W, history: &[Vec<Zone>]) -> Result<()> {
    for zones in history {
        for z in zones {
            writeln!(out, "{}", z.snapshot_line())?;
        }
    }
    Ok(())
}

/// Boundary polygons CSV: `refit, cluster_id, vertex, re, im`.
pub fn write_zone_outlines<W: Write>(out: W, history: &[Vec<Zone>], vertices: usize) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["refit", "cluster_id", "vertex", "re", "im"])?;
    for (r, zones) in history.iter().enumerate() {
        for z in zones {
            for (i, p) in z.outline(vertices).iter().enumerate() {
                w.write_record([
                    r.to_string(),
                    z.cluster_id.to_string(),
                    i.to_string(),
                    p.re.to_string(),
                    p.im.to_string(),
                ])?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::estimator::Strategy;
    use rand_distr::{Distribution, Normal};

    fn blob(center: Complex64, sigma: f64, n: usize, rng: &mut ChaCha8Rng) -> Vec<Complex64> {
        let d = Normal::new(0.0, sigma).unwrap();
        (0..n)
            .map(|_| center + Complex64::new(d.sample(rng), d.sample(rng)))
            .collect()
    }

    fn sample(t: f64, z: Complex64) -> EigenSample {
        EigenSample {
            t,
            lambda: Some(z),
            strategy: Strategy::Impedance,
        }
    }

    #[test]
    fn separates_blobs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = blob(Complex64::new(-60.0, -1900.0), 1.0, 300, &mut rng);
        let b = blob(Complex64::new(-50.0, -1900.0), 1.0, 300, &mut rng);
        let pts: Vec<_> = a.iter().chain(&b).copied().collect();
        let c = cluster(&pts, 2, 1).unwrap();
        let label_a = c.assignments[0];
        let agree = c.assignments[..300].iter().filter(|x| **x == label_a).count()
            + c.assignments[300..].iter().filter(|x| **x != label_a).count();
        assert!(agree as f64 >= 0.99 * 600.0, "agree {agree}");
    }

    #[test]
    fn single_cluster_is_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let pts = blob(Complex64::new(3.0, -2.0), 0.5, 97, &mut rng);
        let c = cluster(&pts, 1, 9).unwrap();
        let mut sum = Complex64::new(0.0, 0.0);
        for p in &pts {
            sum += p;
        }
        assert_eq!(c.centroids[0], sum / pts.len() as f64);
    }

    #[test]
    fn identical_points_terminate() {
        let pts = vec![Complex64::new(-5.0, -100.0); 20];
        let c = cluster(&pts, 2, 0).unwrap();
        assert_eq!(c.centroids.len(), 2);
        assert_eq!(c.wcss, 0.0);
        assert!(matches!(cluster(&pts[..1], 2, 0), Err(Error::InsufficientData { .. })));
    }

    #[test]
    fn ring_boundary_is_uniform() {
        let cfg = DetectorConfig {
            min_radius_frac: 0.0,
            ..Default::default()
        };
        let centre = Complex64::new(-60.0, -1900.0);
        let r = 4.0;
        let pts: Vec<_> = (0..200)
            .map(|i| centre + Complex64::from_polar(r, 2.0 * PI * (i as f64 + 0.5) / 200.0))
            .collect();
        let z = fit_zone(0, &pts, centre, &cfg, 0.0).unwrap();
        for i in 0..72 {
            let th = -PI + 2.0 * PI * i as f64 / 72.0;
            let b = z.boundary(th);
            assert!((b / (cfg.margin * r) - 1.0).abs() < 0.1, "θ={th} b={b}");
        }
    }

    #[test]
    fn repeated_point_is_min_disc() {
        let cfg = DetectorConfig::default();
        let p = Complex64::new(-60.0, -1900.0);
        let z = fit_zone(0, &[p; 10], p, &cfg, 0.0).unwrap();
        assert!(z.is_disc());
        let expect = 0.01 * p.norm();
        assert!((z.boundary(0.3) - expect).abs() < 1e-12);
        assert!((z.boundary(-2.9) - expect).abs() < 1e-12);
    }

    #[test]
    fn crescent_is_enclosed() {
        let cfg = DetectorConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let jitter = Normal::new(0.0, 0.05).unwrap();
        let pts: Vec<_> = (0..400)
            .map(|i| {
                let a = -0.6 * PI + 1.2 * PI * i as f64 / 399.0;
                Complex64::from_polar(5.0 + jitter.sample(&mut rng), a) + Complex64::new(-40.0, -900.0)
            })
            .collect();
        let zones = fit_zones(&pts, &cfg, 0.0).unwrap();
        let inside = pts.iter().filter(|p| classify(**p, &zones).in_zone).count();
        assert_eq!(inside, pts.len());
        for z in &zones {
            let own = pts.iter().filter(|p| z.distance(**p) <= 0.0).count();
            assert!(own as f64 >= 0.95 * z.sample_count as f64);
        }
    }

    #[test]
    fn classify_examples() {
        let cfg = DetectorConfig::default();
        let centre = Complex64::new(10.0, 10.0);
        let pts: Vec<_> = (0..64)
            .map(|i| centre + Complex64::from_polar(1.0, 2.0 * PI * i as f64 / 64.0))
            .collect();
        let z = fit_zone(0, &pts, centre, &cfg, 0.0).unwrap();
        let zones = [z.clone()];
        let at_centre = classify(centre, &zones);
        assert!(at_centre.in_zone);
        assert!((at_centre.distance + 1.0).abs() < 1e-12);
        let th = 0.7;
        let twice = classify(centre + Complex64::from_polar(2.0 * z.boundary(th), th), &zones);
        assert!((twice.distance - 1.0).abs() < 1e-9);
        assert!(!twice.in_zone);
        let on = centre + Complex64::from_polar(z.boundary(th), th);
        let c = classify(on, &zones);
        assert!(c.distance.abs() < 1e-12);
    }

    fn trained(cfg: DetectorConfig) -> Detector {
        let mut d = Detector::new(cfg, "test").unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for (i, p) in blob(Complex64::new(0.0, -100.0), 0.1, cfg.training_min, &mut rng)
            .into_iter()
            .enumerate()
        {
            assert!(d.step(&sample(i as f64 * 0.01, p)).unwrap().is_none());
        }
        assert!(d.armed());
        d
    }

    #[test]
    fn confirm_counter_pattern() {
        let cfg = DetectorConfig {
            update_interval: 1e9,
            ..Default::default()
        };
        let mut d = trained(cfg);
        let inside = Complex64::new(0.0, -100.0);
        let outside = Complex64::new(50.0, -100.0);
        let pattern = [outside, outside, inside, outside, outside, outside];
        let events: Vec<_> = pattern
            .iter()
            .enumerate()
            .filter_map(|(i, z)| d.step(&sample(10.0 + i as f64, *z)).unwrap().map(|e| (i, e)))
            .collect();
        assert_eq!(events.len(), 1);
        assert_eq!(events[0].0, 5);
        assert_eq!(events[0].1.kind, EventKind::Alarm);
        // withheld samples do not move the counter; the next in-zone clears
        let gap = EigenSample {
            t: 20.0,
            lambda: None,
            strategy: Strategy::Impedance,
        };
        assert!(d.step(&gap).unwrap().is_none());
        assert!(d.alarmed());
        let e = d.step(&sample(21.0, inside)).unwrap().unwrap();
        assert_eq!(e.kind, EventKind::Clear);
        assert!(!d.alarmed());
    }

    #[test]
    fn withheld_does_not_reset_counter() {
        let cfg = DetectorConfig {
            update_interval: 1e9,
            ..Default::default()
        };
        let mut d = trained(cfg);
        let outside = Complex64::new(50.0, -100.0);
        let gap = EigenSample {
            t: 10.0,
            lambda: None,
            strategy: Strategy::Impedance,
        };
        assert!(d.step(&sample(9.0, outside)).unwrap().is_none());
        assert!(d.step(&gap).unwrap().is_none());
        assert!(d.step(&sample(11.0, outside)).unwrap().is_none());
        let e = d.step(&sample(12.0, outside)).unwrap().unwrap();
        assert_eq!(e.kind, EventKind::Alarm);
    }

    #[test]
    fn refit_skips_alarmed_samples() {
        let cfg = DetectorConfig {
            training_min: 50,
            update_interval: 5.0,
            ..Default::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let healthy = blob(Complex64::new(-60.0, -1900.0), 0.5, 2000, &mut rng);
        let rate = 100.0;
        let fault = (600, 800);
        let stream: Vec<EigenSample> = healthy
            .iter()
            .enumerate()
            .map(|(i, z)| {
                let z = if (fault.0..fault.1).contains(&i) {
                    z + Complex64::new(30.0, 200.0)
                } else {
                    *z
                };
                sample(i as f64 / rate, z)
            })
            .collect();
        let mut with = Detector::new(cfg, "a").unwrap();
        let events = with.run(&stream).unwrap();
        assert_eq!(events.iter().filter(|e| e.kind == EventKind::Alarm).count(), 1);

        let deleted: Vec<_> = stream
            .iter()
            .enumerate()
            .filter(|(i, _)| !(fault.0..fault.1).contains(i))
            .map(|(_, s)| *s)
            .collect();
        let mut without = Detector::new(cfg, "a").unwrap();
        assert!(without.run(&deleted).unwrap().is_empty());
        assert_eq!(with.history().len(), without.history().len());
        for (a, b) in with.zones().iter().zip(without.zones()) {
            assert!((a.centroid - b.centroid).norm() < 1e-9);
            for (x, y) in a.coefficients.iter().zip(&b.coefficients) {
                assert!((x - y).abs() < 1e-9);
            }
            assert!((a.rho95 - b.rho95).abs() < 1e-9);
        }
    }

    #[test]
    fn alarm_latency_bound() {
        let cfg = DetectorConfig::default();
        let rate = 30.0;
        let mut d = trained(cfg);
        let onset = 20.0;
        let mut alarm_t = None;
        for k in 0..60 {
            let t = onset + k as f64 / rate;
            if let Some(e) = d.step(&sample(t, Complex64::new(20.0, -100.0))).unwrap() {
                alarm_t = Some(e.t);
                break;
            }
        }
        let latency = alarm_t.unwrap() - onset;
        assert!(latency <= cfg.confirm_count as f64 / rate + 1e-12);
    }

    #[test]
    fn event_csv_header() {
        let e = DetectionEvent {
            t: 1.5,
            line_id: "675".into(),
            kind: EventKind::Alarm,
            lambda: Complex64::new(-1.0, -2.0),
            distance: 0.25,
        };
        let mut buf = Vec::new();
        write_events_csv(&mut buf, &[e]).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            "t,line_id,kind,re,im,distance\n1.5,675,ALARM,-1,-2,0.25\n"
        );
    }

    #[test]
    fn config_validation() {
        assert!(DetectorConfig::default().validate().is_ok());
        let bad = DetectorConfig {
            margin: 0.9,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let small = DetectorConfig {
            training_min: 7,
            ..Default::default()
        };
        assert!(small.validate().is_err());
    }
}
