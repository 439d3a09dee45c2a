use std::collections::BTreeMap;

use super::{AnnouncementGroup, Coord, GridError, Region};
use crate::stats;

pub fn squared_distance(a: Coord, b: Coord) -> u64 {
    let dx = u64::from(a.x.abs_diff(b.x));
    let dy = u64::from(a.y.abs_diff(b.y));
    dx * dx + dy * dy
}

/// Straight-line distance between parcel centres.
pub fn euclidean_distance(a: Coord, b: Coord) -> f64 {
    (squared_distance(a, b) as f64).sqrt()
}

/// Closest approach between a bundle and a set of new parcels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Nearest {
    pub distance: f64,
    /// Index into the bundle of the parcel achieving the minimum (first on ties).
    pub parcel_index: usize,
}

/// Minimum distance between any bundle parcel and any region parcel.
pub fn nearest_to_region(parcels: &[Coord], region: &Region) -> Result<Nearest, GridError> {
    if parcels.is_empty() {
        return Err(GridError::InvalidInput("empty parcel list".into()));
    }
    if region.is_empty() {
        return Err(GridError::InvalidInput("empty region".into()));
    }
    let (parcel_index, sq) = parcels
        .iter()
        .enumerate()
        .map(|(i, p)| (i, region.nearest_squared(*p)))
        .fold(
            (0, u64::MAX),
            |best, cur| if cur.1 < best.1 { cur } else { best },
        );
    Ok(Nearest {
        distance: (sq as f64).sqrt(),
        parcel_index,
    })
}

pub fn distance_to_region(parcels: &[Coord], region: &Region) -> Result<f64, GridError> {
    nearest_to_region(parcels, region).map(|n| n.distance)
}

/// Minimum over every region released by the announcement.
pub fn nearest_to_announcement(
    parcels: &[Coord],
    group: &AnnouncementGroup,
) -> Result<Nearest, GridError> {
    let mut best: Option<Nearest> = None;
    for region in group.regions() {
        let n = nearest_to_region(parcels, region)?;
        if best.is_none_or(|b| n.distance < b.distance) {
            best = Some(n);
        }
    }
    best.ok_or_else(|| {
        GridError::InvalidInput(format!(
            "announcement group {} has no waves",
            group.group_id
        ))
    })
}

pub fn distance_to_announcement(
    parcels: &[Coord],
    group: &AnnouncementGroup,
) -> Result<f64, GridError> {
    nearest_to_announcement(parcels, group).map(|n| n.distance)
}

/// Splits one announcement group at its median distance.
///
/// `near` is true iff the distance is strictly below the interpolated median,
/// so ties at the median go to the control arm.
pub fn assign_near<K: Ord + Clone>(samples: &[(K, f64)]) -> Result<BTreeMap<K, bool>, GridError> {
    if samples.len() < 2 {
        return Err(GridError::DegenerateGroup(samples.len()));
    }
    let distances: Vec<f64> = samples.iter().map(|(_, d)| *d).collect();
    if distances.iter().any(|d| !d.is_finite()) {
        return Err(GridError::InvalidInput("non-finite distance".into()));
    }
    let median = stats::median(&distances).expect("non-empty");
    Ok(samples
        .iter()
        .map(|(k, d)| (k.clone(), *d < median))
        .collect())
}

/// True iff every pair of parcels is within `threshold` in Chebyshev distance.
pub fn contiguity_check(parcels: &[Coord], threshold: u32) -> bool {
    let Some(first) = parcels.first() else {
        return true;
    };
    let (mut min_x, mut max_x, mut min_y, mut max_y) = (first.x, first.x, first.y, first.y);
    for p in parcels {
        min_x = min_x.min(p.x);
        max_x = max_x.max(p.x);
        min_y = min_y.min(p.y);
        max_y = max_y.max(p.y);
    }
    // the largest pairwise Chebyshev distance equals the bounding-box extent
    (max_x - min_x).max(max_y - min_y) <= threshold
}

#[cfg(test)]
mod tests {
    use chrono::NaiveDate;
    use proptest::prelude::*;

    use super::*;
    use crate::grid::{Rect, Wave, DEFAULT_CONTIGUITY_THRESHOLD};

    fn c(x: u32, y: u32) -> Coord {
        Coord::new(x, y)
    }

    fn region(coords: &[(u32, u32)]) -> Region {
        Region::new(coords.iter().map(|&(x, y)| c(x, y)).collect(), 408).unwrap()
    }

    fn group(regions: Vec<Region>) -> AnnouncementGroup {
        let d = NaiveDate::from_ymd_opt(2021, 6, 19).unwrap();
        let waves: Vec<Wave> = regions
            .into_iter()
            .enumerate()
            .map(|(i, region)| Wave {
                wave_id: i as u32,
                group_id: 1,
                name: String::new(),
                announce_date: d,
                sale_date: d,
                land_offered: region.len(),
                region,
            })
            .collect();
        AnnouncementGroup {
            group_id: 1,
            announce_date: d,
            multi: waves.len() > 1,
            waves,
        }
    }

    fn brute_region(parcels: &[Coord], r: &Region) -> f64 {
        let mut best = f64::INFINITY;
        for p in parcels {
            for q in r.parcels() {
                let dx = p.x as f64 - q.x as f64;
                let dy = p.y as f64 - q.y as f64;
                best = best.min((dx * dx + dy * dy).sqrt());
            }
        }
        best
    }

    #[test]
    fn euclidean_examples() {
        assert_eq!(euclidean_distance(c(10, 10), c(10, 10)), 0.0);
        assert_eq!(euclidean_distance(c(0, 0), c(3, 4)), 5.0);
        // independent recomputation: 188² + 343² = 35344 + 117649 = 152993
        let expected = 152_993f64.sqrt();
        assert_eq!(euclidean_distance(c(12, 7), c(200, 350)), expected);
        assert_eq!(euclidean_distance(c(200, 350), c(12, 7)), expected);
    }

    #[test]
    fn region_distance_examples() {
        assert_eq!(
            distance_to_region(&[c(0, 0), c(3, 4)], &region(&[(6, 8)])).unwrap(),
            5.0
        );
        assert_eq!(
            distance_to_region(&[c(5, 5)], &region(&[(5, 5)])).unwrap(),
            0.0
        );
        let block = Region::from_rects(&[Rect::new(10, 10, 12, 12)], 408).unwrap();
        assert_eq!(
            distance_to_region(&[c(1, 1)], &block).unwrap(),
            euclidean_distance(c(1, 1), c(10, 10))
        );
    }

    #[test]
    fn nearest_reports_bundle_index() {
        let n = nearest_to_region(&[c(0, 0), c(3, 4)], &region(&[(6, 8)])).unwrap();
        assert_eq!(n.parcel_index, 1);
        // ties keep the first parcel
        let n = nearest_to_region(&[c(4, 0), c(0, 4)], &region(&[(0, 0)])).unwrap();
        assert_eq!(n.parcel_index, 0);
    }

    #[test]
    fn empty_parcels_rejected() {
        assert!(matches!(
            distance_to_region(&[], &region(&[(1, 1)])),
            Err(GridError::InvalidInput(_))
        ));
    }

    #[test]
    fn announcement_distance_examples() {
        let r1 = region(&[(100, 100)]);
        let r2 = region(&[(10, 0)]);
        let single = group(vec![r1.clone()]);
        let p = [c(0, 0)];
        assert_eq!(
            distance_to_announcement(&p, &single).unwrap(),
            distance_to_region(&p, &r1).unwrap()
        );
        let two = group(vec![r1, r2]);
        assert_eq!(distance_to_announcement(&p, &two).unwrap(), 10.0);
        let eq = group(vec![region(&[(0, 5)]), region(&[(5, 0)])]);
        assert_eq!(distance_to_announcement(&p, &eq).unwrap(), 5.0);
        assert!(distance_to_announcement(&p, &group(vec![])).is_err());
    }

    #[test]
    fn near_split_examples() {
        let s: Vec<(u32, f64)> = vec![(1, 1.0), (2, 2.0), (3, 3.0), (4, 4.0)];
        let near = assign_near(&s).unwrap();
        assert_eq!(
            near.values().copied().collect::<Vec<_>>(),
            vec![true, true, false, false]
        );
        let ties: Vec<(u32, f64)> = (0..4).map(|i| (i, 2.0)).collect();
        assert!(assign_near(&ties).unwrap().values().all(|n| !n));
        assert!(matches!(
            assign_near(&[(1u32, 1.0)]),
            Err(GridError::DegenerateGroup(1))
        ));
    }

    #[test]
    fn contiguity_examples() {
        let t = DEFAULT_CONTIGUITY_THRESHOLD;
        assert!(contiguity_check(&[c(0, 0), c(0, 1)], t));
        assert!(!contiguity_check(&[c(0, 0), c(100, 100)], t));
        let estate: Vec<Coord> = Rect::new(5, 5, 7, 7).coords().collect();
        assert_eq!(estate.len(), 9);
        let brute_max = estate
            .iter()
            .flat_map(|a| {
                estate
                    .iter()
                    .map(move |b| a.x.abs_diff(b.x).max(a.y.abs_diff(b.y)))
            })
            .max()
            .unwrap();
        assert_eq!(brute_max, 2);
        assert!(contiguity_check(&estate, t));
        let xl: Vec<Coord> = Rect::new(0, 0, 23, 23).coords().collect();
        assert!(contiguity_check(&xl, t));
    }

    fn coord_strategy() -> impl Strategy<Value = Coord> {
        (0u32..60, 0u32..60).prop_map(|(x, y)| Coord::new(x, y))
    }

    proptest! {
        #[test]
        fn euclidean_is_a_metric(a in coord_strategy(), b in coord_strategy(), d in coord_strategy()) {
            let ab = euclidean_distance(a, b);
            prop_assert_eq!(ab, euclidean_distance(b, a));
            prop_assert!(ab >= 0.0);
            prop_assert_eq!(ab == 0.0, a == b);
            prop_assert!(ab <= euclidean_distance(a, d) + euclidean_distance(d, b) + 1e-12);
        }

        #[test]
        fn region_distance_is_a_lower_bound_and_monotone(
            parcels in prop::collection::vec(coord_strategy(), 1..6),
            rset in prop::collection::btree_set((0u32..60, 0u32..60), 1..20),
            extra_p in coord_strategy(),
            extra_r in (0u32..60, 0u32..60),
        ) {
            let coords: Vec<Coord> = rset.iter().map(|&(x, y)| c(x, y)).collect();
            let r = Region::new(coords.clone(), 408).unwrap();
            let d = distance_to_region(&parcels, &r).unwrap();
            prop_assert_eq!(d, brute_region(&parcels, &r));
            for p in &parcels {
                for q in r.parcels() {
                    prop_assert!(d <= euclidean_distance(*p, *q));
                }
            }
            let mut more = parcels.clone();
            more.push(extra_p);
            prop_assert!(distance_to_region(&more, &r).unwrap() <= d);
            let mut bigger = coords;
            if !rset.contains(&extra_r) {
                bigger.push(c(extra_r.0, extra_r.1));
            }
            let r2 = Region::new(bigger, 408).unwrap();
            prop_assert!(distance_to_region(&parcels, &r2).unwrap() <= d);
        }

        #[test]
        fn near_split_sizes(dist in prop::collection::vec(0.0f64..300.0, 2..80)) {
            let s: Vec<(usize, f64)> = dist.iter().copied().enumerate().collect();
            let near = assign_near(&s).unwrap();
            let n_near = near.values().filter(|v| **v).count();
            prop_assert!(n_near <= dist.len().div_ceil(2));
            let max_near = s.iter().filter(|(k, _)| near[k]).map(|(_, d)| *d).fold(f64::NEG_INFINITY, f64::max);
            let min_far = s.iter().filter(|(k, _)| !near[k]).map(|(_, d)| *d).fold(f64::INFINITY, f64::min);
            prop_assert!(max_near < min_far);
        }

        #[test]
        fn announcement_is_min_over_waves(
            p in prop::collection::vec(coord_strategy(), 1..4),
            r1 in prop::collection::btree_set((0u32..60, 0u32..60), 1..8),
            r2 in prop::collection::btree_set((0u32..60, 0u32..60), 1..8),
        ) {
            let a = Region::new(r1.iter().map(|&(x, y)| c(x, y)).collect(), 408).unwrap();
            let b = Region::new(r2.iter().map(|&(x, y)| c(x, y)).collect(), 408).unwrap();
            let expected = brute_region(&p, &a).min(brute_region(&p, &b));
            prop_assert_eq!(distance_to_announcement(&p, &group(vec![a, b])).unwrap(), expected);
        }
    }
}
