//! Random ice fields: non-overlapping convex floes at a target concentration.

use std::collections::HashMap;

use rand::Rng;
use rand_distr::{Distribution, LogNormal};

use crate::geom::{convex_hull, convex_separated, polygon_centroid, signed_area, Rect, Vec2};

/// Median characteristic floe radius (m).
pub const MEDIAN_FLOE_RADIUS: f64 = 0.3;
const RADIUS_SIGMA: f64 = 0.35;
const MIN_RADIUS: f64 = 0.04;
const MAX_RADIUS: f64 = 0.6;
/// Separation kept between floes at generation time (m).
const GAP: f64 = 2e-3;
/// Placement attempts per floe before giving up on it.
pub const MAX_ATTEMPTS: usize = 10_000;
/// Stop once the realized concentration is this close to the target.
const TOLERANCE: f64 = 0.004;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IceError {
    #[error("concentration {0} is outside [0, 0.5]")]
    Concentration(f64),
    #[error("could only reach concentration {realized:.4} of {target}")]
    PlacementFailure { target: f64, realized: f64 },
}

/// Random convex polygon: hull of 6–10 points on a jittered circle,
/// centered on its own area centroid.
pub fn random_floe<R: Rng + ?Sized>(rng: &mut R, radius: f64) -> Vec<Vec2> {
    loop {
        let n = rng.random_range(6..=10);
        let pts: Vec<Vec2> = (0..n)
            .map(|_| {
                let a: f64 = rng.random_range(0.0..std::f64::consts::TAU);
                let r = radius * rng.random_range(0.7..=1.0);
                Vec2::new(r * a.cos(), r * a.sin())
            })
            .collect();
        let hull = convex_hull(&pts);
        if hull.len() >= 3 && signed_area(&hull) > 0.25 * radius * radius {
            let c = polygon_centroid(&hull);
            return hull.into_iter().map(|p| p - c).collect();
        }
    }
}

struct SpatialHash {
    cell: f64,
    buckets: HashMap<(i64, i64), Vec<usize>>,
}

impl SpatialHash {
    fn keys(&self, lo: Vec2, hi: Vec2) -> impl Iterator<Item = (i64, i64)> {
        let (c0, r0) = ((lo.x / self.cell).floor() as i64, (lo.y / self.cell).floor() as i64);
        let (c1, r1) = ((hi.x / self.cell).floor() as i64, (hi.y / self.cell).floor() as i64);
        (r0..=r1).flat_map(move |r| (c0..=c1).map(move |c| (c, r)))
    }
}

fn bounds(poly: &[Vec2]) -> (Vec2, Vec2) {
    poly.iter().fold(
        (Vec2::new(f64::INFINITY, f64::INFINITY), Vec2::new(f64::NEG_INFINITY, f64::NEG_INFINITY)),
        |(lo, hi), p| (Vec2::new(lo.x.min(p.x), lo.y.min(p.y)), Vec2::new(hi.x.max(p.x), hi.y.max(p.y))),
    )
}

/// Places floes inside `region` until their total area is within a small
/// tolerance of `concentration × area(region)`. Larger floes go first;
/// the remainder is filled with progressively smaller ones. Returned
/// polygons are in world coordinates, counter-clockwise.
pub fn generate_ice_field<R: Rng + ?Sized>(
    region: Rect,
    concentration: f64,
    rng: &mut R,
) -> Result<Vec<Vec<Vec2>>, IceError> {
    if !(0.0..=0.5).contains(&concentration) {
        return Err(IceError::Concentration(concentration));
    }
    let total = region.area();
    let target = concentration * total;
    let mut floes: Vec<Vec<Vec2>> = Vec::new();
    if target <= 0.0 {
        return Ok(floes);
    }
    let sizes = LogNormal::new(MEDIAN_FLOE_RADIUS.ln(), RADIUS_SIGMA).expect("valid log-normal");
    let mut hash = SpatialHash { cell: 2.0 * MAX_RADIUS, buckets: HashMap::new() };
    let mut area = 0.0;

    // draw the main population up front and place it largest first
    let mut shapes: Vec<(f64, Vec<Vec2>)> = Vec::new();
    let mut drawn = 0.0;
    while drawn < target {
        let r: f64 = sizes.sample(rng);
        let poly = random_floe(rng, r.clamp(2.0 * MIN_RADIUS, MAX_RADIUS));
        let a = signed_area(&poly);
        drawn += a;
        shapes.push((a, poly));
    }
    shapes.sort_by(|x, y| y.0.total_cmp(&x.0));

    let try_place = |poly: &[Vec2], floes: &mut Vec<Vec<Vec2>>, hash: &mut SpatialHash, rng: &mut R| -> bool {
        let (lo, hi) = bounds(poly);
        let (xmin, xmax) = (region.min.x - lo.x + GAP, region.max.x - hi.x - GAP);
        let (ymin, ymax) = (region.min.y - lo.y + GAP, region.max.y - hi.y - GAP);
        if xmin >= xmax || ymin >= ymax {
            return false;
        }
        for _ in 0..MAX_ATTEMPTS {
            let offset = Vec2::new(rng.random_range(xmin..xmax), rng.random_range(ymin..ymax));
            let cand: Vec<Vec2> = poly.iter().map(|&p| p + offset).collect();
            let (clo, chi) = (lo + offset, hi + offset);
            let clear = hash
                .keys(clo, chi)
                .filter_map(|k| hash.buckets.get(&k))
                .flatten()
                .all(|&j| convex_separated(&cand, &floes[j], GAP));
            if clear {
                let id = floes.len();
                for k in hash.keys(clo, chi).collect::<Vec<_>>() {
                    hash.buckets.entry(k).or_default().push(id);
                }
                floes.push(cand);
                return true;
            }
        }
        false
    };

    for (a, poly) in shapes {
        if area + a > target + TOLERANCE * total {
            continue;
        }
        if try_place(&poly, &mut floes, &mut hash, rng) {
            area += a;
        }
        if (target - area).abs() <= TOLERANCE * total {
            return Ok(floes);
        }
    }

    // fill the remainder with smaller floes, shrinking after each miss
    let mut scale = 0.6;
    while target - area > TOLERANCE * total {
        let remaining = target - area;
        let r = (MEDIAN_FLOE_RADIUS * scale).max(MIN_RADIUS);
        let mut poly = random_floe(rng, r);
        let mut a = signed_area(&poly);
        if a > remaining {
            let s = (remaining / a).sqrt();
            poly.iter_mut().for_each(|p| *p = *p * s);
            a = remaining;
        }
        if try_place(&poly, &mut floes, &mut hash, rng) {
            area += a;
        } else if r <= MIN_RADIUS {
            return Err(IceError::PlacementFailure { target: concentration, realized: area / total });
        } else {
            scale *= 0.8;
        }
    }
    Ok(floes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_concentration_is_empty() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let f = generate_ice_field(Rect::new(Vec2::ZERO, Vec2::new(6.0, 9.0)), 0.0, &mut rng).unwrap();
        assert!(f.is_empty());
    }

    #[test]
    fn rejects_out_of_range() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(generate_ice_field(Rect::new(Vec2::ZERO, Vec2::new(1.0, 1.0)), 0.6, &mut rng).is_err());
    }

    #[test]
    fn floes_are_convex_and_centered() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let f = random_floe(&mut rng, 0.3);
            assert!((3..=10).contains(&f.len()));
            assert!(polygon_centroid(&f).length() < 1e-12);
            assert!(signed_area(&f) > 0.0);
        }
    }
}
