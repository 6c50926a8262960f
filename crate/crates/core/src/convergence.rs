//! Shared helpers for convergence tables: log-log slope fits and monotonicity.

/// Gaps at or below this are treated as the floating-point floor.
pub const GAP_FLOOR: f64 = 1e-13;

/// Least-squares slope of `log10(gap)` against `log10(n)` over the longest
/// contiguous run of points whose gap exceeds `floor`.
pub fn fit_loglog_slope(ns: &[f64], gaps: &[f64], floor: f64) -> Option<f64> {
    let mut best: Option<(usize, usize)> = None;
    let mut start = None;
    for i in 0..=gaps.len() {
        let ok = i < gaps.len() && gaps[i] > floor && ns[i] > 0.0;
        match (ok, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if best.is_none_or(|(bs, be)| i - s > be - bs) {
                    best = Some((s, i));
                }
                start = None;
            }
            _ => {}
        }
    }
    let (s, e) = best?;
    if e - s < 2 {
        return None;
    }
    let xs: Vec<f64> = ns[s..e].iter().map(|n| n.log10()).collect();
    let ys: Vec<f64> = gaps[s..e].iter().map(|g| g.log10()).collect();
    least_squares_slope(&xs, &ys)
}

pub fn least_squares_slope(xs: &[f64], ys: &[f64]) -> Option<f64> {
    let k = xs.len() as f64;
    if xs.len() < 2 {
        return None;
    }
    let mx = xs.iter().sum::<f64>() / k;
    let my = ys.iter().sum::<f64>() / k;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    Some(sxy / sxx)
}

/// Strictly decreasing over the given values.
pub fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0])
}

/// Geometric schedule `10^lo, 10^(lo+1), …, 10^hi`.
pub fn decade_schedule(lo: u32, hi: u32) -> Vec<u64> {
    (lo..=hi).map(|k| 10u64.pow(k)).collect()
}
