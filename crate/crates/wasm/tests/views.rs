use pagrad_wasm::{graph_view, mi_view, wavelet_view, PATCH_DIMS};

#[test]
fn graph_view_matches_its_summary() {
    let v = graph_view(4.0, 0, 7, 16, 0.5).unwrap();
    let n = PATCH_DIMS[0] * PATCH_DIMS[1];
    assert_eq!(v.degrees.len(), n);
    assert_eq!(v.column_means.len(), n);
    assert_eq!(v.eigenvalues.len(), n);
    assert_eq!(v.summary.num_edges, v.edges.len());
    assert_eq!(
        v.summary.num_active_nodes,
        v.degrees.iter().filter(|&&d| d > 0).count()
    );
    assert_eq!(v.degrees.iter().sum::<usize>(), 2 * v.edges.len());
    let trace: f64 = v.eigenvalues.iter().sum();
    assert!(trace.abs() <= 1e-9 * n as f64, "{trace}");
    assert!(v.eigenvalues.windows(2).all(|w| w[0] >= w[1]));
    assert!(graph_view(4.0, 0, 7, 1, 0.5).is_err());
}

#[test]
fn controls_have_denser_graphs() {
    let control = graph_view(4.0, 0, 7, 16, 0.5).unwrap();
    let patient = graph_view(4.0, 1, 7, 16, 0.5).unwrap();
    assert!(control.summary.num_active_nodes > patient.summary.num_active_nodes);
}

#[test]
fn mi_grows_with_correlation() {
    let estimates: Vec<f64> = [0.0, 0.5, 0.9]
        .iter()
        .map(|&r| mi_view(r, 2000, 16, 3).unwrap().estimate)
        .collect();
    assert!(estimates.windows(2).all(|w| w[0] < w[1]), "{estimates:?}");
    let v = mi_view(0.9, 2000, 16, 3).unwrap();
    assert!((v.gaussian - 0.5 * (1.0f64 / 0.19).ln()).abs() < 1e-12);
    assert_eq!(v.points.len(), 2000);
    assert!(mi_view(1.0, 10, 4, 0).is_err());
    assert!(mi_view(f64::NAN, 10, 4, 0).is_err());
}

#[test]
fn haar_energy_is_conserved() {
    let v = wavelet_view(4.0, 1, 5).unwrap();
    assert_eq!(v.subbands.len(), 8);
    assert_eq!(v.subbands[0].name, "LLL");
    let sum: f64 = v.subbands.iter().map(|b| b.energy).sum();
    assert!((sum - v.total_energy).abs() <= 1e-9 * v.total_energy);
}
