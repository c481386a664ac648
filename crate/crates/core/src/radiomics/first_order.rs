use super::texture::discretize;

pub const FIRST_ORDER_FEATURES: [&str; 16] = [
    "Mean",
    "Median",
    "Variance",
    "Skewness",
    "Kurtosis",
    "Energy",
    "Entropy",
    "Minimum",
    "Maximum",
    "Range",
    "MeanAbsoluteDeviation",
    "RobustMeanAbsoluteDeviation",
    "RootMeanSquared",
    "Percentile10",
    "Percentile90",
    "InterquartileRange",
];

const ENTROPY_BINS: u32 = 32;

/// Linear-interpolation percentile of sorted data, `q` in `[0, 100]`.
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    let pos = q / 100.0 * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Population-moment intensity statistics. Skewness and kurtosis are 0 for a
/// constant input; kurtosis is the plain fourth standardized moment.
pub fn first_order_features(values: &[f64]) -> Vec<(String, f64)> {
    assert!(
        !values.is_empty(),
        "first-order features need at least one voxel"
    );
    let n = values.len() as f64;
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mean = values.iter().sum::<f64>() / n;
    let (mut m2, mut m3, mut m4, mut mad) = (0.0, 0.0, 0.0, 0.0);
    for &x in values {
        let d = x - mean;
        m2 += d * d;
        m3 += d * d * d;
        m4 += d * d * d * d;
        mad += d.abs();
    }
    let (m2, m3, m4, mad) = (m2 / n, m3 / n, m4 / n, mad / n);
    let (skew, kurt) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (0.0, 0.0)
    };
    let energy: f64 = values.iter().map(|x| x * x).sum();

    let levels = discretize(values, ENTROPY_BINS).expect("bin count is fixed above 1");
    let mut hist = vec![0usize; ENTROPY_BINS as usize + 1];
    for l in levels {
        hist[l as usize] += 1;
    }
    let entropy = -hist
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.log2()
        })
        .sum::<f64>();

    let p10 = percentile(&sorted, 10.0);
    let p90 = percentile(&sorted, 90.0);
    let robust: Vec<f64> = sorted
        .iter()
        .copied()
        .filter(|&x| x >= p10 && x <= p90)
        .collect();
    let rmean = robust.iter().sum::<f64>() / robust.len() as f64;
    let rmad = robust.iter().map(|x| (x - rmean).abs()).sum::<f64>() / robust.len() as f64;
    let min = sorted[0];
    let max = sorted[sorted.len() - 1];

    let vals = [
        mean,
        percentile(&sorted, 50.0),
        m2,
        skew,
        kurt,
        energy,
        entropy,
        min,
        max,
        max - min,
        mad,
        rmad,
        (energy / n).sqrt(),
        p10,
        p90,
        percentile(&sorted, 75.0) - percentile(&sorted, 25.0),
    ];
    FIRST_ORDER_FEATURES
        .iter()
        .zip(vals)
        .map(|(k, v)| (k.to_string(), v))
        .collect()
}
