pub const DEFAULT_ALPHA: f64 = 0.1;

#[inline]
pub fn leaky_relu(x: f64, alpha: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        alpha * x
    }
}

/// Derivative, taken as 1 at the origin.
#[inline]
pub fn leaky_relu_deriv(x: f64, alpha: f64) -> f64 {
    if x >= 0.0 {
        1.0
    } else {
        alpha
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn values_and_slopes() {
        assert_eq!(leaky_relu(2.0, 0.1), 2.0);
        assert_eq!(leaky_relu(-1.0, 0.1), -0.1);
        assert_eq!(leaky_relu(0.0, 0.1), 0.0);
        assert_eq!(leaky_relu_deriv(0.0, 0.1), 1.0);
        assert_eq!(leaky_relu_deriv(-3.0, 0.1), 0.1);
    }
}
