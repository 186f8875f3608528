use hawkes_granger::graph::{
    abnormality_correlation, adjusted_rand_index, correlation_to_distance, hierarchical_cluster, spectral_blockmodel,
    symmetrize, threshold_graph, Adjacency, Linkage, DEFAULT_FAR_CONSTANT,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Two groups of series driven by separate latent binary processes.
fn grouped_series(seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let t = 2000;
    let latent: Vec<Vec<bool>> = (0..2).map(|_| (0..t).map(|_| rng.gen_bool(0.3)).collect()).collect();
    let truth = vec![0, 0, 0, 1, 1, 1, 1];
    let series = truth
        .iter()
        .map(|&g| latent[g].iter().map(|&on| f64::from(u8::from(if on { rng.gen_bool(0.9) } else { rng.gen_bool(0.05) }))).collect())
        .collect();
    (series, truth)
}

#[test]
fn correlated_groups_cluster_together() {
    let (series, truth) = grouped_series(5);
    let corr = abnormality_correlation(&series).unwrap();
    let dist = correlation_to_distance(&corr, DEFAULT_FAR_CONSTANT);
    for linkage in [Linkage::Average, Linkage::Complete, Linkage::Single] {
        let dend = hierarchical_cluster(&dist, linkage).unwrap();
        assert_eq!(dend.merges.len(), series.len() - 1);
        assert_eq!(adjusted_rand_index(&dend.cut(2), &truth), 1.0, "{linkage:?}");
    }
}

#[test]
fn thresholded_graph_blocks() {
    // two dense groups joined by weak cross edges that the threshold removes
    let n = 10;
    let truth: Vec<usize> = (0..n).map(|i| usize::from(i >= 5)).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let w: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| {
                    if i == j {
                        0.0
                    } else if truth[i] == truth[j] {
                        0.5 + 0.5 * rng.gen::<f64>()
                    } else {
                        0.1 * rng.gen::<f64>()
                    }
                })
                .collect()
        })
        .collect();
    let labels = (0..n).map(|i| format!("v{i}")).collect();
    let adj = threshold_graph(&Adjacency::new(w, labels).unwrap(), 0.15);
    assert!(adj.edges().iter().all(|&(_, _, w)| w > 0.15));
    let sym = symmetrize(&adj);
    let bm = spectral_blockmodel(&sym, 2, None, 0).unwrap();
    let got: Vec<usize> = bm.assignment.iter().map(|a| a.expect("no isolated nodes")).collect();
    assert_eq!(adjusted_rand_index(&got, &truth), 1.0);
    let dist = correlation_to_distance(&sym, DEFAULT_FAR_CONSTANT);
    let dend = hierarchical_cluster(&dist, Linkage::Average).unwrap();
    assert_eq!(adjusted_rand_index(&dend.cut(2), &truth), 1.0);
}
