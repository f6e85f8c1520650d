//! Embeddedness monitoring: segment-segment intersection of the sampled loop
//! on the sphere, with spatial hashing and proximity warnings.

use crate::sphere::Vec3;
use std::collections::HashMap;

#[derive(Debug, Clone)]
pub struct EmbedReport {
    pub embedded: bool,
    /// Non-adjacent segment pairs closer than half the mean spacing.
    pub proximity_warnings: Vec<(usize, usize, f64)>,
}

/// True if no pair of non-adjacent sample segments intersects.
pub fn check_embedded(lp: &super::Loop) -> bool {
    lp.is_embedded()
}

/// Spatially hashed intersection/proximity scan.
pub fn embed_report(samples: &[Vec3]) -> EmbedReport {
    let n = samples.len();
    let mut max_chord = 0.0f64;
    let mut total = 0.0;
    for i in 0..n {
        let d = (samples[(i + 1) % n] - samples[i]).norm();
        max_chord = max_chord.max(d);
        total += d;
    }
    let warn_dist = 0.5 * total / n as f64;
    let cell = (max_chord + warn_dist).max(1e-6) * 1.05;

    let key = |p: &Vec3| -> i64 {
        let qx = (p.x / cell).floor() as i64 + 512;
        let qy = (p.y / cell).floor() as i64 + 512;
        let qz = (p.z / cell).floor() as i64 + 512;
        (qx << 20) | (qy << 10) | qz
    };
    let mut grid: HashMap<i64, Vec<u32>> = HashMap::with_capacity(2 * n);
    for i in 0..n {
        let mid = (samples[i] + samples[(i + 1) % n]) * 0.5;
        grid.entry(key(&mid)).or_default().push(i as u32);
    }

    let mut report = EmbedReport { embedded: true, proximity_warnings: Vec::new() };
    // Pair dedup by bitmask (candidates repeat across neighbor cells).
    let words = (n * n + 63) / 64;
    let mut seen = vec![0u64; words];
    for i in 0..n {
        let mid = (samples[i] + samples[(i + 1) % n]) * 0.5;
        let base = key(&mid);
        for dx in -1i64..=1 {
            for dy in -1i64..=1 {
                for dz in -1i64..=1 {
                    let Some(bucket) = grid.get(&(base + (dx << 20) + (dy << 10) + dz)) else {
                        continue;
                    };
                    for &j in bucket {
                        let j = j as usize;
                        if j <= i || adjacent(i, j, n) {
                            continue;
                        }
                        let bit = i * n + j;
                        if seen[bit / 64] & (1 << (bit % 64)) != 0 {
                            continue;
                        }
                        seen[bit / 64] |= 1 << (bit % 64);
                        examine_pair(samples, i, j, warn_dist, &mut report);
                    }
                }
            }
        }
    }
    report.proximity_warnings.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
    report
}

/// All-pairs reference scan (the oracle for the hashed version).
pub fn embed_report_brute(samples: &[Vec3]) -> EmbedReport {
    let n = samples.len();
    let mut total = 0.0;
    for i in 0..n {
        total += (samples[(i + 1) % n] - samples[i]).norm();
    }
    let warn_dist = 0.5 * total / n as f64;
    let mut report = EmbedReport { embedded: true, proximity_warnings: Vec::new() };
    for i in 0..n {
        for j in (i + 1)..n {
            if adjacent(i, j, n) {
                continue;
            }
            examine_pair(samples, i, j, warn_dist, &mut report);
        }
    }
    report
}

fn adjacent(i: usize, j: usize, n: usize) -> bool {
    let d = if i < j { j - i } else { i - j };
    d <= 1 || d == n - 1
}

fn examine_pair(samples: &[Vec3], i: usize, j: usize, warn_dist: f64, report: &mut EmbedReport) {
    let n = samples.len();
    let (a, b) = (samples[i], samples[(i + 1) % n]);
    let (c, d) = (samples[j], samples[(j + 1) % n]);
    if arcs_intersect(&a, &b, &c, &d) {
        report.embedded = false;
        return;
    }
    let dist = arc_distance(&a, &b, &c, &d);
    if dist < warn_dist {
        report.proximity_warnings.push((i, j, dist));
    }
}

/// Great-circle arc intersection test for the short arcs between samples.
fn arcs_intersect(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> bool {
    let n1 = a.cross(b);
    let n2 = c.cross(d);
    let dir = n1.cross(&n2);
    let dn = dir.norm();
    if dn < 1e-14 {
        // Same great circle: overlap iff an endpoint of one lies on the other.
        return on_arc(a, b, c, &n1)
            || on_arc(a, b, d, &n1)
            || on_arc(c, d, a, &n2)
            || on_arc(c, d, b, &n2);
    }
    let p = dir / dn;
    for cand in [p, -p] {
        if within(a, b, &cand, &n1) && within(c, d, &cand, &n2) {
            return true;
        }
    }
    false
}

fn within(a: &Vec3, b: &Vec3, p: &Vec3, n: &Vec3) -> bool {
    a.cross(p).dot(n) >= -1e-14 && p.cross(b).dot(n) >= -1e-14
}

fn on_arc(a: &Vec3, b: &Vec3, p: &Vec3, n: &Vec3) -> bool {
    p.dot(&n.normalize()).abs() < 1e-12 && within(a, b, p, n)
}

/// Chordal distance between two disjoint short arcs: min over endpoint-to-arc
/// distances.
fn arc_distance(a: &Vec3, b: &Vec3, c: &Vec3, d: &Vec3) -> f64 {
    point_arc(a, c, d)
        .min(point_arc(b, c, d))
        .min(point_arc(c, a, b))
        .min(point_arc(d, a, b))
}

fn point_arc(p: &Vec3, a: &Vec3, b: &Vec3) -> f64 {
    let n = a.cross(b);
    let nn = n.norm();
    if nn < 1e-14 {
        return (p - a).norm();
    }
    let n_hat = n / nn;
    let off = p.dot(&n_hat);
    let foot = (p - n_hat * off).normalize();
    if within(a, b, &foot, &n) {
        (p - foot).norm()
    } else {
        (p - a).norm().min((p - b).norm())
    }
}
