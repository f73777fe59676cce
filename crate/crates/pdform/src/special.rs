//! Small shared numeric helpers: Γ and sphere surface area.

use std::f64::consts::PI;

/// Γ(x) for x > 0 (thin wrapper so call sites read mathematically).
pub fn gamma(x: f64) -> f64 {
    libm::tgamma(x)
}

/// Surface area of the unit sphere S^{n-1} ⊂ ℝⁿ: 2·π^{n/2}/Γ(n/2).
pub fn sphere_surface_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma(n as f64 / 2.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn surface_areas() {
        assert_relative_eq!(sphere_surface_area(1), 2.0, max_relative = 1e-14); // two points
        assert_relative_eq!(sphere_surface_area(2), 2.0 * PI, max_relative = 1e-14);
        assert_relative_eq!(sphere_surface_area(3), 4.0 * PI, max_relative = 1e-14);
    }

    #[test]
    fn gamma_values() {
        assert_relative_eq!(gamma(0.5), PI.sqrt(), max_relative = 1e-14);
        assert_relative_eq!(gamma(4.0), 6.0, max_relative = 1e-14);
        assert_relative_eq!(gamma(1.5), PI.sqrt() / 2.0, max_relative = 1e-14);
    }
}
