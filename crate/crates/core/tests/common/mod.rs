#![allow(dead_code)]

use dchaos::{rat, PiecewiseLinearMap, Rational, SystemConfig};
use proptest::prelude::*;

/// Continuous PL self-map of [0, 1] with breakpoints on the grid `k/den_x`
/// and values on the grid `j/den_y`.
pub fn pl_map(den_x: i64, den_y: i64, max_segments: usize) -> impl Strategy<Value = PiecewiseLinearMap<Rational>> {
    (1..=max_segments.min(den_x as usize))
        .prop_flat_map(move |segments| {
            (
                proptest::collection::btree_set(1..den_x, segments - 1),
                proptest::collection::vec(0..=den_y, segments + 1),
            )
        })
        .prop_map(move |(inner, ys)| {
            let mut xs = vec![rat(0, 1)];
            xs.extend(inner.into_iter().map(|k| rat(k, den_x)));
            xs.push(rat(1, 1));
            PiecewiseLinearMap::new(xs.into_iter().zip(ys.into_iter().map(|j| rat(j, den_y))).collect())
                .expect("valid map")
        })
}

/// Random system with coarse rational data; `p` ranges over `k/10`.
pub fn system(den_x: i64, den_y: i64, max_segments: usize) -> impl Strategy<Value = SystemConfig> {
    (pl_map(den_x, den_y, max_segments), pl_map(den_x, den_y, max_segments), 0..=10i64)
        .prop_map(|(f, g, k)| SystemConfig::new(f, g, rat(k, 10)).expect("valid system"))
}

/// Map sending every point `k/m` to another such point, so that
/// `{0, 1/m, ..., 1}` is invariant.
pub fn grid_map(m: i64) -> impl Strategy<Value = PiecewiseLinearMap<Rational>> {
    proptest::collection::vec(0..=m, (m + 1) as usize).prop_map(move |ys| {
        PiecewiseLinearMap::new((0..=m).zip(ys).map(|(k, j)| (rat(k, m), rat(j, m))).collect()).expect("valid map")
    })
}

pub fn unit_grid(m: i64) -> Vec<Rational> {
    (0..=m).map(|k| rat(k, m)).collect()
}
