//! One-dimensional maximisation helpers shared by the numeric suprema and
//! the likelihood oracle.

const INV_PHI: f64 = 0.618_033_988_749_894_9;

/// Golden-section search for a maximum of `f` on `[a, b]`, stopping when the
/// bracket is narrower than `tol`. Returns `(argmax, f(argmax))`.
pub(crate) fn golden_section_max<F>(f: F, mut a: f64, mut b: f64, tol: f64) -> (f64, f64)
where
    F: Fn(f64) -> f64,
{
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = f(d);
        }
    }
    if fc >= fd {
        (c, fc)
    } else {
        (d, fd)
    }
}

/// `n` equally spaced points spanning `[a, b]` inclusive.
pub(crate) fn linspace(a: f64, b: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![a],
        _ => {
            let last = (n - 1) as f64;
            (0..n).map(|i| a + (b - a) * (i as f64) / last).collect()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn finds_parabola_peak() {
        let (x, fx) = golden_section_max(|x| -(x - 0.3) * (x - 0.3), -1.0, 2.0, 1e-12);
        assert!((x - 0.3).abs() < 1e-7);
        assert!(fx <= 0.0);
    }

    #[test]
    fn linspace_endpoints() {
        let g = linspace(-3.0, 3.0, 601);
        assert_eq!(g[0], -3.0);
        assert_eq!(g[300], 0.0);
        assert_eq!(g[600], 3.0);
    }
}
