use isosurf_core::catalog;
use isosurf_core::checks::CheckOptions;
use isosurf_core::forms::{isotropy_report, IsotropyOptions};
use isosurf_core::surface::Grid;
use isosurf_core::Error;

#[test]
fn expected_records_match_the_analyzer() {
    let n = CheckOptions::default().grid;
    for entry in catalog::all() {
        let c = &entry.chart;
        let exp = &entry.expected;
        assert_eq!(c.ambient().dim, exp.ambient_dim, "{}", entry.label);
        assert_eq!(c.ambient().normal_levels(), exp.m, "{}", entry.label);
        assert_eq!(exp.ranks.len(), exp.m, "{}", entry.label);
        let r = isotropy_report(c, &Grid::over(c.domain(), n, n), &IsotropyOptions::default());
        if !exp.minimal {
            assert!(matches!(r, Err(Error::NotMinimal { .. })), "{}: {r:?}", entry.label);
            continue;
        }
        let r = r.unwrap_or_else(|e| panic!("{}: {e}", entry.label));
        assert_eq!(r.isotropic, exp.isotropic, "{}", entry.label);
        assert_eq!(r.substantial, exp.substantial, "{}", entry.label);
        assert!(r.nonregular_isolated, "{}", entry.label);
        for p in r.records.iter().filter(|p| p.regular) {
            assert_eq!(p.ranks, exp.ranks, "{} at ({}, {})", entry.label, p.u, p.v);
            assert!(p.substantial || !exp.substantial, "{} at ({}, {})", entry.label, p.u, p.v);
        }
    }
}

#[test]
fn periods_close_the_chart() {
    for entry in catalog::all() {
        let c = &entry.chart;
        assert_eq!(entry.expected.periodic, !c.periods().is_empty(), "{}", entry.label);
        let d = c.domain();
        for w in c.periods() {
            for k in 0..16 {
                let s = k as f64 / 16.0;
                let p = [d.u[0] + s * (d.u[1] - d.u[0]), d.v[0] + (1.0 - s) * (d.v[1] - d.v[0])];
                let q = [p[0] + w[0], p[1] + w[1]];
                if !d.contains(q) {
                    continue;
                }
                let (a, b) = (c.point(p).unwrap(), c.point(q).unwrap());
                let err = a.iter().zip(&b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max);
                assert!(err < 1e-12, "{} period {w:?}: {err}", entry.label);
            }
        }
    }
}

#[test]
fn isolated_rank_drop_is_found_on_the_cubic() {
    let c = catalog::get("holo-cubic-r4").unwrap().chart;
    let r = isotropy_report(&c, &Grid::over(c.domain(), 33, 33), &IsotropyOptions::default()).unwrap();
    assert_eq!(r.nonregular.len(), 1);
    let p = &r.nonregular[0];
    assert!(p.u.abs() < 1e-12 && p.v.abs() < 1e-12);
}
