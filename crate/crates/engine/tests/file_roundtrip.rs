use lpmilp::{export_model, parse_model, render_model, ExportFormat, LinearProgram, MixedIntegerProgram, Sense};
use proptest::prelude::*;

const INF: f64 = f64::INFINITY;

fn bound() -> impl Strategy<Value = (f64, f64)> {
    prop_oneof![
        Just((0.0, INF)),
        Just((-INF, INF)),
        (-50.0..50.0f64).prop_map(|v| (v, v)),
        (-50.0..0.0f64, 0.0..50.0f64),
        (-50.0..50.0f64).prop_map(|v| (-INF, v)),
        (-50.0..50.0f64).prop_map(|v| (v, INF)),
    ]
}

prop_compose! {
    fn model()(
        ncols in 0usize..12,
        nrows in 0usize..10,
        seed_rows in prop::collection::vec((bound(), prop::collection::vec((0usize..12, -1e4..1e4f64), 0..8)), 10),
        cols in prop::collection::vec((bound(), prop_oneof![Just(0.0), -1e3..1e3f64], any::<bool>()), 12),
        offset in prop_oneof![Just(0.0), -100.0..100.0f64],
        maximize in any::<bool>(),
    ) -> MixedIntegerProgram {
        let sense = if maximize { Sense::Maximize } else { Sense::Minimize };
        let mut lp = LinearProgram::new("rt", sense);
        lp.objective_offset = offset;
        for (j, &((lo, hi), c, b)) in cols.iter().take(ncols).enumerate() {
            let (lo, hi) = if b { (0.0, 1.0) } else { (lo, hi) };
            lp.add_col(format!("x_{j}"), lo, hi, c);
        }
        for (i, ((lo, hi), coeffs)) in seed_rows.into_iter().take(nrows).enumerate() {
            let coeffs: Vec<(usize, f64)> = coeffs.into_iter().filter(|&(j, _)| j < ncols).collect();
            lp.add_row(format!("row_{i}"), lo, hi, coeffs);
        }
        let mut mip = MixedIntegerProgram::new(lp);
        for (j, &(_, _, b)) in cols.iter().take(ncols).enumerate() {
            if b {
                mip.mark_binary(j);
            }
        }
        mip
    }
}

fn close(a: f64, b: f64) -> bool {
    a == b || (a - b).abs() <= 1e-10 * (1.0 + a.abs().max(b.abs()))
}

fn same_model(a: &MixedIntegerProgram, b: &MixedIntegerProgram) -> bool {
    let (x, y) = (&a.lp, &b.lp);
    if x.sense != y.sense || x.num_cols() != y.num_cols() || x.num_rows() != y.num_rows() {
        return false;
    }
    let mut ba = a.binaries().to_vec();
    let mut bb = b.binaries().to_vec();
    ba.sort_unstable();
    bb.sort_unstable();
    if ba != bb || !close(x.objective_offset, y.objective_offset) {
        return false;
    }
    for (c, d) in x.cols().iter().zip(y.cols()) {
        if c.name != d.name || !close(c.lower, d.lower) || !close(c.upper, d.upper) || !close(c.cost, d.cost) {
            return false;
        }
    }
    for (r, s) in x.rows().iter().zip(y.rows()) {
        let mut rc = r.coeffs.clone();
        let mut sc = s.coeffs.clone();
        rc.sort_by_key(|e| e.0);
        sc.sort_by_key(|e| e.0);
        if r.name != s.name || !close(r.lower, s.lower) || !close(r.upper, s.upper) || rc.len() != sc.len() {
            return false;
        }
        if rc.iter().zip(&sc).any(|(p, q)| p.0 != q.0 || !close(p.1, q.1)) {
            return false;
        }
    }
    true
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn export_parse_export_is_byte_identical(mip in model()) {
        for fmt in [ExportFormat::LpText, ExportFormat::Mps] {
            let first = render_model(&mip, fmt).unwrap();
            let parsed = parse_model(&first, fmt).unwrap();
            let second = render_model(&parsed, fmt).unwrap();
            prop_assert_eq!(&first, &second);
            prop_assert!(same_model(&mip, &parsed), "{:?} lost information", fmt);
        }
    }
}

#[test]
fn writes_to_disk() {
    let dir = tempfile::tempdir().unwrap();
    let mut lp = LinearProgram::new("disk", Sense::Minimize);
    let x = lp.add_col("x", 0.0, 1.0, 2.0);
    lp.add_row("c", 0.5, INF, [(x, 1.0)]);
    let mip = MixedIntegerProgram::new(lp);
    for (name, fmt) in [("m.lp", ExportFormat::LpText), ("m.mps", ExportFormat::Mps)] {
        let path = dir.path().join(name);
        assert_eq!(ExportFormat::from_path(&path), Some(fmt));
        export_model(&mip, &path, fmt).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        let back = parse_model(&text, fmt).unwrap();
        let sol = lpmilp::solve_lp(&back.lp).unwrap();
        assert!((sol.objective - 1.0).abs() < 1e-12);
    }
}

#[test]
fn long_rows_wrap_and_parse() {
    let mut lp = LinearProgram::new("wide", Sense::Minimize);
    let cols: Vec<usize> = (0..60)
        .map(|j| lp.add_col(format!("very_long_column_name_{j}"), 0.0, 1.0, 1.0))
        .collect();
    lp.add_row("wide_row", 1.0, 30.0, cols.iter().map(|&j| (j, 1.0 + j as f64 / 7.0)));
    let mip = MixedIntegerProgram::new(lp);
    let text = render_model(&mip, ExportFormat::LpText).unwrap();
    assert!(text.lines().all(|l| l.len() <= 90));
    let back = parse_model(&text, ExportFormat::LpText).unwrap();
    assert!(same_model(&mip, &back));
}
