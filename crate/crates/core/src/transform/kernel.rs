use super::KernelSize;

/// Standard deviation used for a kernel of size `k`:
/// `0.3 * ((k - 1) / 2 - 1) + 0.8`.
pub fn sigma_for_kernel(k: KernelSize) -> f64 {
    0.3 * ((f64::from(k.get()) - 1.0) * 0.5 - 1.0) + 0.8
}

/// Normalized, symmetric 1-D Gaussian weights of length `k`.
pub fn gaussian_kernel(k: KernelSize) -> Vec<f64> {
    let sigma = sigma_for_kernel(k);
    let r = k.radius() as f64;
    let denom = 2.0 * sigma * sigma;
    let raw: Vec<f64> = (0..k.get())
        .map(|i| {
            let d = f64::from(i) - r;
            (-(d * d) / denom).exp()
        })
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / sum).collect()
}
