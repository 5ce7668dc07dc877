use selm_core::bench::*;
use selm_core::data::SyntheticConfig;
use selm_core::triplet::TripletConfig;

fn tiny() -> BenchConfig {
    BenchConfig {
        synthetic: SyntheticConfig { identities_per_cohort: 15, ..benchmark_synthetic(0) },
        triplet: TripletConfig { epochs: 5, hidden: vec![8], ..Default::default() },
        runs: 2,
        c_grid: vec![1.0, 100.0],
        sweep_hidden: vec![20.0, 80.0],
        ..Default::default()
    }
}

#[test]
fn report_shape_and_rank_identities() {
    let rep = run_protocol(&tiny()).unwrap();
    assert_eq!(rep.methods.len(), 6);
    assert!(rep.method_reports.iter().all(|r| r.len() == 6 && r.iter().all(|e| e.rows.len() == 6)));
    assert_eq!(rep.ranks.len(), 12);
    for row in &rep.ranks {
        assert_eq!(row.iter().sum::<f64>(), 21.0);
    }
    let k = rep.ranks.len() as f64;
    assert_eq!(rep.chi_square, k * 5.0 * rep.kendalls_w);
    let text = rep.to_text();
    let table: Vec<&str> = text
        .lines()
        .skip_while(|l| !l.starts_with("[method accuracy"))
        .skip(2)
        .take_while(|l| !l.is_empty())
        .collect();
    assert_eq!(table.len(), 6);
    assert!(table.iter().all(|l| l.split(',').count() == 8));
}
