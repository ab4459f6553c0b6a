use proptest::prelude::*;

use gspt_core::model::{default_model, ModelKind, Vec2};
use gspt_core::scaling::{log_ladder, loglog_fit};
use gspt_core::simulate::{hausdorff_distance, resample_closed, stroke_count};
use gspt_core::singular::{projection, reduced_rhs, reduced_rhs_projected};

fn polyline(len: usize) -> impl Strategy<Value = Vec<Vec2>> {
    prop::collection::vec(prop::array::uniform2(-10.0f64..10.0), 2..len)
}

/// Speed profile with `k` fast bursts of height `fast` on a unit background.
fn bursts(n: usize, k: usize, fast: f64) -> Vec<f64> {
    let mut v = vec![1.0; n];
    for j in 0..k {
        let start = j * n / k + n / (4 * k);
        for s in v.iter_mut().skip(start).take(n / (4 * k)) {
            *s = fast;
        }
    }
    v
}

proptest! {
    #[test]
    fn projection_is_idempotent_and_kills_fibres(x in -14.0f64..0.9, kind_ix in 0usize..4) {
        let kind = [ModelKind::Minimal, ModelKind::EbersMoll, ModelKind::StickSlipExp, ModelKind::StickSlipPoly][kind_ix];
        let model = default_model(kind);
        let z = [x, 0.0];
        prop_assume!(model.lambda(z).abs() > 1e-3);
        let p = projection(&model, z).unwrap();
        let n = model.n(z);
        for i in 0..2 {
            let pn = p[i][0] * n[0] + p[i][1] * n[1];
            prop_assert!(pn.abs() < 1e-10 * (1.0 + n[0].hypot(n[1])));
            for j in 0..2 {
                let pp = p[i][0] * p[0][j] + p[i][1] * p[1][j];
                prop_assert!((pp - p[i][j]).abs() < 1e-10 * (1.0 + p[i][j].abs()));
            }
        }
        let a = reduced_rhs(&model, z).unwrap();
        let b = reduced_rhs_projected(&model, z).unwrap();
        prop_assert!((a[0] - b[0]).abs() + (a[1] - b[1]).abs() < 1e-10 * (1.0 + a[0].hypot(a[1])));
    }

    #[test]
    fn hausdorff_is_symmetric_and_bounded_by_shifts(
        a in polyline(12),
        b in polyline(12),
        shift in prop::array::uniform2(-1.0f64..1.0),
    ) {
        let ab = hausdorff_distance(&a, &b).unwrap();
        let ba = hausdorff_distance(&b, &a).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(hausdorff_distance(&a, &a).unwrap() < 1e-12);
        let moved: Vec<Vec2> = a.iter().map(|p| [p[0] + shift[0], p[1] + shift[1]]).collect();
        let d = hausdorff_distance(&a, &moved).unwrap();
        prop_assert!(d <= shift[0].hypot(shift[1]) + 1e-12);
        let b_moved: Vec<Vec2> = b.iter().map(|p| [p[0] + shift[0], p[1] + shift[1]]).collect();
        prop_assert!((hausdorff_distance(&moved, &b_moved).unwrap() - ab).abs() < 1e-9);
    }

    #[test]
    fn stroke_count_ignores_rotation(k in 1usize..4, shift in 0usize..2000, fast in 50.0f64..1e4) {
        let v = bursts(2000, k, fast);
        let mut r = v.clone();
        r.rotate_left(shift);
        let a = stroke_count(&v).unwrap();
        prop_assert_eq!(a, 2 * k as u32);
        prop_assert_eq!(stroke_count(&r).unwrap(), a);
    }

    #[test]
    fn loglog_fit_recovers_power_laws(p in -2.0f64..2.0, c in 0.1f64..10.0) {
        let x = log_ladder(1e-4, 1e-1, 6);
        let y: Vec<f64> = x.iter().map(|x| c * x.powf(p)).collect();
        let fit = loglog_fit(&x, &y).unwrap();
        prop_assert!((fit.slope - p).abs() < 1e-10);
        prop_assert!((fit.intercept - c.ln()).abs() < 1e-9);
    }

    #[test]
    fn log_ladder_is_geometric(lo in 1e-6f64..1e-2, decades in 0.5f64..4.0, n in 2usize..12) {
        let hi = lo * 10f64.powf(decades);
        let v = log_ladder(lo, hi, n);
        prop_assert_eq!(v.len(), n);
        prop_assert!((v[0] / lo - 1.0).abs() < 1e-12);
        prop_assert!((v[n - 1] / hi - 1.0).abs() < 1e-12);
        let r = v[1] / v[0];
        for w in v.windows(2) {
            prop_assert!((w[1] / w[0] / r - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn resampling_keeps_a_circle_on_the_circle(n in 8usize..200, m in 16usize..500) {
        let circle: Vec<Vec2> = (0..=n)
            .map(|i| {
                let t = 2.0 * std::f64::consts::PI * i as f64 / n as f64;
                [t.cos(), t.sin()]
            })
            .collect();
        let r = resample_closed(&circle, m);
        prop_assert_eq!(r.len(), m);
        for p in &r {
            let rad = p[0].hypot(p[1]);
            prop_assert!(rad <= 1.0 + 1e-12 && rad >= (std::f64::consts::PI / n as f64).cos() - 1e-12);
        }
    }
}

#[test]
fn flat_speed_profile_is_rejected() {
    assert!(stroke_count(&[1.0; 2000]).is_err());
}
