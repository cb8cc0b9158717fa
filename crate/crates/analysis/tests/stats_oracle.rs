//! The statistics battery against reference values computed independently
//! with SciPy on five fixed synthetic datasets.

use hybs_analysis::*;

mod oracle;

use oracle::{Oracle, DATASETS};

fn groups(o: &Oracle) -> Vec<Vec<f64>> {
    o.groups.iter().map(|g| g.to_vec()).collect()
}

#[test]
fn shapiro_wilk_matches_reference() {
    for (d, o) in DATASETS.iter().enumerate() {
        for (g, (w, p)) in o.groups.iter().zip(o.shapiro) {
            let r = shapiro_wilk(g).unwrap();
            assert!((r.statistic - w).abs() < 1e-4, "dataset {d}: W {} vs {w}", r.statistic);
            assert!((r.p_value - p).abs() < 5e-3, "dataset {d}: p {} vs {p}", r.p_value);
        }
    }
}

#[test]
fn uniform_sample_is_not_normal() {
    let uniform = DATASETS[4].groups[0];
    assert_eq!(uniform.len(), 50);
    assert!(shapiro_wilk(uniform).unwrap().p_value < 0.05);
    let normal = DATASETS[4].groups[2];
    assert!(shapiro_wilk(normal).unwrap().p_value > 0.05);
}

#[test]
fn bartlett_matches_reference() {
    for (d, o) in DATASETS.iter().enumerate() {
        let r = bartlett(&groups(o)).unwrap();
        assert!((r.statistic - o.bartlett.0).abs() < 1e-6, "dataset {d}: {} vs {}", r.statistic, o.bartlett.0);
        assert!((r.p_value - o.bartlett.1).abs() < 1e-6, "dataset {d}: {} vs {}", r.p_value, o.bartlett.1);
    }
}

#[test]
fn anova_matches_reference() {
    for (d, o) in DATASETS.iter().enumerate() {
        let r = one_way_anova(&groups(o)).unwrap();
        assert!((r.statistic - o.anova.0).abs() < 1e-6, "dataset {d}: {} vs {}", r.statistic, o.anova.0);
        assert!((r.p_value - o.anova.1).abs() < 1e-6, "dataset {d}: {} vs {}", r.p_value, o.anova.1);
    }
}

#[test]
fn tukey_kramer_matches_reference() {
    for (d, o) in DATASETS.iter().enumerate() {
        let r = tukey_kramer(&groups(o), 0.05).unwrap();
        assert_eq!(r.comparisons.len(), o.pairs.len());
        for (later, earlier, diff, lo, hi, p) in o.pairs {
            let c = r.comparisons.iter().find(|c| (c.later, c.earlier) == (*later, *earlier)).unwrap();
            assert!((c.difference - diff).abs() < 1e-9, "dataset {d}");
            assert!((c.ci_low - lo).abs() < 1e-4 && (c.ci_high - hi).abs() < 1e-4, "dataset {d}: ci");
            assert!((c.p_value - p).abs() < 1e-4, "dataset {d} {later}-{earlier}: {} vs {p}", c.p_value);
        }
    }
}

#[test]
fn distribution_tails_match_reference() {
    assert!((f_sf(55.020, 2.0, 22.0) - 2.7471907581377604e-09).abs() < 1e-15);
    assert!((qtukey(0.95, 3, 22.0).unwrap() - 3.5525939921591023).abs() < 1e-6);
    assert!((qtukey(0.95, 4, 29.0).unwrap() - 3.853037659694372).abs() < 1e-6);
    assert!((ptukey_sf(3.5, 4, 29.0).unwrap() - 0.08538221948451474).abs() < 1e-8);
    let tiny = ptukey_sf(8.0, 3, 22.0).unwrap();
    assert!((tiny / 3.146271754150831e-05 - 1.0).abs() < 1e-4);
}

/// The published ANOVA rows report F with df (2, 22) and p-values that the
/// F tail must reproduce to the printed precision.
#[test]
fn published_anova_p_values_follow_from_f() {
    for (f, d1, d2, p) in [(55.020, 2.0, 22.0, 2.75e-9), (4.868, 2.0, 22.0, 1.78e-2), (9.305, 2.0, 22.0, 1.18e-3), (2.184, 3.0, 29.0, 1.11e-1)] {
        let got = f_sf(f, d1, d2);
        assert!((got / p - 1.0).abs() < 0.01, "F {f}: {got} vs {p}");
    }
}

/// The published post-hoc rows give a difference and its 95% interval. The
/// half-width fixes the standard error, and the p-value must follow from the
/// implied studentized range.
#[test]
fn published_pairwise_p_values_follow_from_intervals() {
    let q_crit = qtukey(0.95, 3, 22.0).unwrap();
    for (diff, lo, hi, p) in [(0.289, 0.190, 0.387, 6.57e-7), (0.132, 0.027, 0.237, 1.23e-2), (0.332, 0.055, 0.609, 1.71e-2), (0.263, -0.015, 0.540, 6.58e-2)] {
        let se = (hi - lo) / 2.0 / q_crit;
        let got = ptukey_sf(f64::abs(diff) / se, 3, 22.0).unwrap();
        assert!((got.ln() - f64::ln(p)).abs() < 0.25, "{diff}: {got} vs {p}");
    }
}

#[test]
fn identical_groups_give_unit_p_values() {
    let g = DATASETS[0].groups[1].to_vec();
    let same = vec![g.clone(), g.clone(), g];
    let a = one_way_anova(&same).unwrap();
    assert_eq!((a.statistic, a.p_value), (0.0, 1.0));
    let t = tukey_kramer(&same, 0.05).unwrap();
    for c in &t.comparisons {
        assert_eq!(c.difference, 0.0);
        assert!((c.p_value - 1.0).abs() < 1e-9);
        assert_eq!(c.ci_high - c.difference, c.difference - c.ci_low);
    }
    let b = bartlett(&same).unwrap();
    assert_eq!((b.statistic, b.p_value), (0.0, 1.0));
}
