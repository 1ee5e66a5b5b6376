use csdac_core::metric::{optimal_rms, thermometer_raw};
use csdac_core::optimizer::descend_multistart;
use csdac_core::{
    enumerate_all, io, mismatch_mse, reference, run_simulation, ArchitectureKind, Basis, DescentConfig, Error,
    InputPmf, SegmentSpec, SimConfig,
};

fn pmf8() -> InputPmf {
    InputPmf::gaussian(8, optimal_rms(8)).unwrap()
}

#[test]
fn optimal_rms_is_frozen() {
    assert_eq!(optimal_rms(8), 32.5);
}

#[test]
fn segmented_metrics_under_gaussian_input() {
    let pmf = pmf8();
    let got: Vec<(usize, f64)> = (2..=4)
        .map(|m| {
            let spec = SegmentSpec::new(m, 8).unwrap();
            let b = Basis::segmented(spec, 8).unwrap();
            let t = ArchitectureKind::Segmented(spec).canonical_mapping(&b).unwrap();
            (b.len(), mismatch_mse(&t, &b, &pmf, 1.0).unwrap().raw)
        })
        .collect();
    assert_eq!(got.iter().map(|g| g.0).collect::<Vec<_>>(), vec![9, 12, 19]);
    for (g, want) in got.iter().zip([34.8047002308, 26.0835823419, 22.0846845247]) {
        assert!((g.1 - want).abs() < 1e-8, "{} vs {want}", g.1);
    }
    assert!((thermometer_raw(&pmf) - 18.3355105702).abs() < 1e-8);
}

#[test]
fn table2_rows_match_the_descended_shape() {
    let pmf = pmf8();
    let b = reference::published_basis(13).unwrap();
    let index = enumerate_all(&b).unwrap();
    let (t, _) = descend_multistart(&index, &b, &pmf, &DescentConfig { max_sweeps: 1000, seed: 1 }, 50).unwrap();
    for (x, _) in reference::published_rows() {
        let row = &t.rows()[x as usize];
        assert_eq!(row.len(), 13);
        assert_eq!(row.value(&b).unwrap(), u64::from(x));
    }
    let csv = io::mapping_to_csv(&t, &b, &[]).unwrap();
    assert_eq!(io::parse_mapping(&csv, &b).unwrap(), t);
}

#[test]
fn lut_row_118_selects_the_published_weights() {
    let b = reference::published_basis(13).unwrap();
    let (_, row) = reference::published_rows().into_iter().next().unwrap();
    let picked: Vec<u32> = row.ones().map(|i| b.weights()[i]).collect();
    assert_eq!(picked, vec![6, 9, 12, 25, 66]);
}

#[test]
fn incomplete_basis_is_named() {
    let b = Basis::new(3, vec![1, 1, 4]).unwrap();
    assert!(matches!(csdac_core::mean_representation_count(&b), Err(Error::Incomplete { missing: 3 })));
}

#[test]
fn simulation_is_deterministic_and_thread_independent() {
    let pmf = pmf8();
    let b = Basis::segmented(SegmentSpec::new(3, 8).unwrap(), 8).unwrap();
    let t = ArchitectureKind::Segmented(SegmentSpec::new(3, 8).unwrap()).canonical_mapping(&b).unwrap();
    let cfg = SimConfig { realizations: 500, seed: 4, ..SimConfig::default() };
    let a = run_simulation(&t, &b, &pmf, &cfg).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let c = pool.install(|| run_simulation(&t, &b, &pmf, &cfg).unwrap());
    assert_eq!(a.values, c.values);
    assert_eq!(a.summary, c.summary);

    let one = run_simulation(&t, &b, &pmf, &SimConfig { realizations: 1, ..cfg }).unwrap();
    assert_eq!(one.summary.mean_db, one.values[0]);
}
