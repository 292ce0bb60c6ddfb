use std::f64::consts::TAU;

use proptest::prelude::*;

use hand2tool::affordance::*;
use hand2tool::data::{augment, EntityKind, EntityRecord, TrialRecord};
use hand2tool::reduce::*;
use hand2tool::shape::*;
use hand2tool::tasks::*;

/// Star-shaped polygon around the origin: strictly increasing angles make it
/// simple.
fn star_polygon() -> impl Strategy<Value = Contour> {
    (5usize..40)
        .prop_flat_map(|n| {
            (
                prop::collection::vec(0.2f64..1.0, n),
                prop::collection::vec(0.3f64..1.0, n),
            )
        })
        .prop_filter_map("degenerate", |(gaps, radii)| {
            let total: f64 = gaps.iter().sum();
            let mut t = 0.0;
            let pts: Vec<(f64, f64)> = gaps
                .iter()
                .zip(&radii)
                .map(|(g, r)| {
                    t += g / total * TAU;
                    (r * t.cos(), r * t.sin())
                })
                .collect();
            Contour::from_xy(&pts).ok()
        })
}

fn feature_vec() -> impl Strategy<Value = FeatureVector> {
    prop::array::uniform13(0.0f64..1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn features_are_similarity_invariant(
        c in star_polygon(),
        theta in 0.0..TAU,
        scale in 0.05f64..20.0,
        tx in -1e3f64..1e3,
        ty in -1e3f64..1e3,
    ) {
        let a = extract_features(&c).unwrap().to_array();
        let b = extract_features(&c.similarity(theta, scale, tx, ty)).unwrap().to_array();
        for (x, y) in a.iter().zip(&b) {
            prop_assert!((x - y).abs() <= 1e-6, "{x} vs {y}");
        }
    }

    #[test]
    fn features_lie_in_unit_interval(c in star_polygon()) {
        let f = extract_features(&c).unwrap();
        for x in f.to_array() {
            prop_assert!((0.0..=1.0).contains(&x));
        }
        prop_assert!(f.convexity > 0.0 && f.compactness > 0.0);
        prop_assert!(f.circularity > 0.0 && f.squareness > 0.0);
    }

    #[test]
    fn defects_ignore_start_vertex(c in star_polygon(), k in 0usize..40) {
        let k = k % c.len();
        prop_assert_eq!(
            convexity_defects(&c, DEFECT_DEPTH_FRACTION),
            convexity_defects(&c.reindex(k), DEFECT_DEPTH_FRACTION)
        );
    }

    #[test]
    fn hull_contains_polygon(c in star_polygon()) {
        let h = convex_hull(&c);
        prop_assert!(h.area() >= c.area() * (1.0 - 1e-12));
        prop_assert!(h.perimeter() <= c.perimeter() * (1.0 + 1e-12));
        prop_assert!(min_enclosing_circle(&c).area() >= h.area() * (1.0 - 1e-9));
        prop_assert!(min_area_rect(&c).area() >= h.area() * (1.0 - 1e-9));
    }

    #[test]
    fn effect_bins_are_monotone(a in -0.2f64..0.2, b in -0.2f64..0.2) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        prop_assert!(effect_bin(lo).unwrap() <= effect_bin(hi).unwrap());
        prop_assert!(effect_bin(hi).unwrap() < EFFECT_BINS);
    }

    #[test]
    fn median_split_fills_both_bins(values in prop::collection::vec(-5.0f64..5.0, 2..60)) {
        let distinct = values.iter().any(|v| *v != values[0]);
        let proj: Vec<[f64; 2]> = values.iter().map(|&v| [v, -v]).collect();
        let d = fit_pc_discretizer(&proj).unwrap();
        if distinct {
            for k in 0..2 {
                let ones = proj.iter().filter(|p| d.bin(k, p[k]) == 1).count();
                prop_assert!(ones > 0 && ones < proj.len());
            }
        }
    }

    #[test]
    fn pca_components_are_orthonormal(samples in prop::collection::vec(feature_vec(), 3..30)) {
        let Ok(b) = fit_pca(&samples) else { return Ok(()); };
        let dot = |u: &FeatureVector, v: &FeatureVector| u.iter().zip(v).map(|(a, b)| a * b).sum::<f64>();
        prop_assert!((dot(&b.components[0], &b.components[0]) - 1.0).abs() < 1e-9);
        prop_assert!((dot(&b.components[1], &b.components[1]) - 1.0).abs() < 1e-9);
        prop_assert!(dot(&b.components[0], &b.components[1]).abs() < 1e-9);
        prop_assert!(b.explained_variance[0] >= b.explained_variance[1]);
    }

    #[test]
    fn learned_rows_are_distributions(
        raw in prop::collection::vec((0usize..CONFIG_COUNT, 0usize..5, 0usize..5), 0..300),
        alpha in 0.0f64..3.0,
    ) {
        let samples: Vec<DiscreteSample> = raw
            .iter()
            .map(|&(c, x, y)| DiscreteSample { config: ParentConfig::from_index(c).unwrap(), bin_x: x, bin_y: y })
            .collect();
        let (cx, cy, counts) = learn(&samples, alpha).unwrap();
        for (i, row) in cx.rows.iter().chain(&cy.rows).enumerate() {
            match row {
                Some(r) => prop_assert!((r.iter().sum::<f64>() - 1.0).abs() < 1e-12),
                None => prop_assert!(alpha == 0.0 && counts.total(i % CONFIG_COUNT) == 0),
            }
        }
        // order of the samples does not matter
        let mut rev = samples.clone();
        rev.reverse();
        let (rx, ry, _) = learn(&rev, alpha).unwrap();
        prop_assert_eq!(rx, cx);
        prop_assert_eq!(ry, cy);
    }

    #[test]
    fn outer_product_sums_to_one(
        a in prop::array::uniform5(0.0f64..1.0),
        b in prop::array::uniform5(0.0f64..1.0),
    ) {
        let norm = |v: [f64; 5]| {
            let s: f64 = v.iter().sum::<f64>() + 1e-9;
            v.map(|x| (x + 1e-9 / 5.0) / s)
        };
        let d = EffectDistribution::outer(&norm(a), &norm(b));
        prop_assert!((d.total() - 1.0).abs() < 1e-9);
        let (i, j) = d.argmax();
        prop_assert!(d.p.iter().flatten().all(|v| *v <= d.p[i][j]));
        for axis in [Axis::X, Axis::Y] {
            prop_assert!((d.marginal(axis).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn selection_depends_only_on_marginal(m in prop::array::uniform5(0.0f64..1.0), perm in 0usize..2) {
        let dir = DesiredDirection::new(Axis::X, if perm == 0 { Sign::Negative } else { Sign::Positive });
        // two joints with the same X marginal but different Y rows
        let u = [0.2; 5];
        let skew = [0.6, 0.1, 0.1, 0.1, 0.1];
        let s: f64 = m.iter().sum::<f64>() + 1e-9;
        let mx = m.map(|x| x / s);
        let d1 = EffectDistribution::outer(&mx, &u);
        let d2 = EffectDistribution::outer(&mx, &skew);
        prop_assert_eq!(decide(&d1.marginal(Axis::X), dir), decide(&d2.marginal(Axis::X), dir));
    }

    #[test]
    fn augmentation_preserves_labels(
        views in prop::collection::vec(1usize..6, 3),
        effects in prop::collection::vec((-0.1f64..0.1, -0.1f64..0.1, 0usize..4), 1..10),
    ) {
        let f = ShapeFeatures::from_array([0.5; 13]).unwrap();
        let mut ents = Vec::new();
        for (k, (id, kind)) in [("h", EntityKind::Hand), ("t", EntityKind::Tool), ("o", EntityKind::Object)].iter().enumerate() {
            for v in 0..views[k] {
                ents.push(EntityRecord { entity_id: id.to_string(), kind: *kind, view_id: format!("{v}"), features: f });
            }
        }
        let trials: Vec<TrialRecord> = effects
            .iter()
            .enumerate()
            .map(|(i, &(x, y, a))| TrialRecord {
                trial_id: format!("t{i}"),
                manipulator_id: if i % 2 == 0 { "h" } else { "t" }.into(),
                object_id: "o".into(),
                action: ActionId::from_index(a).unwrap(),
                effect_x_m: x,
                effect_y_m: y,
            })
            .collect();
        let out = augment(&trials, &ents).unwrap();
        let want: usize = trials.iter().enumerate().map(|(i, _)| views[i % 2] * views[2]).sum();
        prop_assert_eq!(out.len(), want);
        for s in &out {
            let t = trials.iter().find(|t| t.trial_id == s.trial_id).unwrap();
            prop_assert_eq!(s.observation.effect_x_m, t.effect_x_m);
            prop_assert_eq!(s.observation.effect_y_m, t.effect_y_m);
            prop_assert_eq!(s.observation.action, t.action);
        }
    }

    #[test]
    fn config_index_is_a_bijection(i in 0usize..CONFIG_COUNT) {
        prop_assert_eq!(ParentConfig::from_index(i).unwrap().index(), i);
    }
}
