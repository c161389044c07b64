//! Independent oracles shared by the integration tests. Nothing here calls
//! into the geometry routines under test.
#![allow(dead_code)]

use pushnav::geom::Vec2;
use pushnav::metrics::Edge;

/// Shoelace area, positive for counter-clockwise input.
pub fn shoelace(points: &[Vec2]) -> f64 {
    let n = points.len();
    let mut acc = 0.0;
    for i in 0..n {
        let (p, q) = (points[i], points[(i + 1) % n]);
        acc += p.x * q.y - q.x * p.y;
    }
    0.5 * acc
}

/// Sutherland–Hodgman clip of `subject` by convex counter-clockwise `clip`.
pub fn clip_polygon(subject: &[Vec2], clip: &[Vec2]) -> Vec<Vec2> {
    let mut output: Vec<Vec2> = subject.to_vec();
    let m = clip.len();
    for i in 0..m {
        if output.is_empty() {
            break;
        }
        let a = clip[i];
        let b = clip[(i + 1) % m];
        let inside = |p: Vec2| (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x) >= 0.0;
        let intersect = |p: Vec2, q: Vec2| {
            let dpq = Vec2::new(q.x - p.x, q.y - p.y);
            let dab = Vec2::new(b.x - a.x, b.y - a.y);
            let denom = dab.x * dpq.y - dab.y * dpq.x;
            let t = (dab.x * (a.y - p.y) - dab.y * (a.x - p.x)) / denom;
            Vec2::new(p.x + t * dpq.x, p.y + t * dpq.y)
        };
        let input = std::mem::take(&mut output);
        let n = input.len();
        for j in 0..n {
            let cur = input[j];
            let prev = input[(j + n - 1) % n];
            match (inside(prev), inside(cur)) {
                (true, true) => output.push(cur),
                (true, false) => output.push(intersect(prev, cur)),
                (false, true) => {
                    output.push(intersect(prev, cur));
                    output.push(cur);
                }
                (false, false) => {}
            }
        }
    }
    output
}

pub fn intersection_area(a: &[Vec2], b: &[Vec2]) -> f64 {
    let clipped = clip_polygon(a, b);
    if clipped.len() < 3 {
        0.0
    } else {
        shoelace(&clipped).abs()
    }
}

/// Gift-wrapping hull, used to make random convex test polygons.
pub fn gift_wrap(points: &[Vec2]) -> Vec<Vec2> {
    let n = points.len();
    let start = (0..n)
        .min_by(|&i, &j| points[i].x.total_cmp(&points[j].x).then(points[i].y.total_cmp(&points[j].y)))
        .unwrap();
    let mut hull = Vec::new();
    let mut cur = start;
    loop {
        hull.push(points[cur]);
        let mut next = (cur + 1) % n;
        for k in 0..n {
            let o = points[cur];
            let a = points[next];
            let b = points[k];
            let cross = (a.x - o.x) * (b.y - o.y) - (a.y - o.y) * (b.x - o.x);
            let further = (b.x - o.x).powi(2) + (b.y - o.y).powi(2) > (a.x - o.x).powi(2) + (a.y - o.y).powi(2);
            if cross < 0.0 || (cross == 0.0 && further) {
                next = k;
            }
        }
        cur = next;
        if cur == start || hull.len() > n {
            break;
        }
    }
    hull
}

/// Bellman-Ford over an explicit edge list: 8-connected, diagonal moves
/// only between two free orthogonal cells.
pub fn bellman_ford(blocked: &[bool], w: usize, h: usize, source: usize) -> Vec<f64> {
    let free = |c: i64, r: i64| c >= 0 && r >= 0 && c < w as i64 && r < h as i64 && !blocked[r as usize * w + c as usize];
    let mut edges = Vec::new();
    for r in 0..h as i64 {
        for c in 0..w as i64 {
            if !free(c, r) {
                continue;
            }
            for dr in -1..=1i64 {
                for dc in -1..=1i64 {
                    if (dr, dc) == (0, 0) || !free(c + dc, r + dr) {
                        continue;
                    }
                    let diagonal = dr != 0 && dc != 0;
                    if diagonal && !(free(c + dc, r) && free(c, r + dr)) {
                        continue;
                    }
                    let len = if diagonal { 2f64.sqrt() } else { 1.0 };
                    edges.push(((r * w as i64 + c) as usize, ((r + dr) * w as i64 + c + dc) as usize, len));
                }
            }
        }
    }
    let mut dist = vec![f64::INFINITY; w * h];
    dist[source] = 0.0;
    for _ in 0..w * h {
        let mut changed = false;
        for &(a, b, len) in &edges {
            if dist[a] + len < dist[b] - 1e-12 {
                dist[b] = dist[a] + len;
                changed = true;
            }
        }
        if !changed {
            break;
        }
    }
    dist
}

fn find(parent: &mut [usize], x: usize) -> usize {
    let mut r = x;
    while parent[r] != r {
        r = parent[r];
    }
    r
}

/// Minimum over every (n − 1)-edge subset that connects all vertices.
/// Sum in ascending order, so equal edge sets give bit-equal totals.
pub fn tree_weight(mut weights: Vec<f64>) -> f64 {
    weights.sort_by(f64::total_cmp);
    weights.iter().sum()
}

pub fn brute_force_mst(n: usize, edges: &[Edge]) -> Option<f64> {
    let m = edges.len();
    let mut best: Option<f64> = None;
    for mask in 0u32..(1 << m) {
        if mask.count_ones() as usize != n - 1 {
            continue;
        }
        let mut parent: Vec<usize> = (0..n).collect();
        let mut chosen = Vec::with_capacity(n - 1);
        let mut acyclic = true;
        for (i, e) in edges.iter().enumerate() {
            if mask & (1 << i) == 0 {
                continue;
            }
            let (a, b) = (find(&mut parent, e.a), find(&mut parent, e.b));
            if a == b {
                acyclic = false;
                break;
            }
            parent[a] = b;
            chosen.push(e.weight);
        }
        let weight = tree_weight(chosen);
        if acyclic && best.is_none_or(|b| weight < b) {
            best = Some(weight);
        }
    }
    best
}
