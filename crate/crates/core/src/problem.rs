//! The black-box problem interface shared by every optimizer.

/// A smooth objective over dense real vectors.
///
/// Implementations must be callable from several worker threads at once.
/// Optimizers in this crate only ever use [`Problem::gradient`]; the
/// objective is evaluated for traces, metrics and verification.
pub trait Problem: Send + Sync {
    fn dim(&self) -> usize;

    fn objective(&self, x: &[f64]) -> f64;

    /// Writes `g(x)` into `out`, which has length [`Problem::dim`].
    fn gradient_into(&self, x: &[f64], out: &mut [f64]);

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        self.gradient_into(x, &mut g);
        g
    }

    /// A constant `L` with `|g(x) - g(y)| <= L |x - y|`, when known.
    fn lipschitz(&self) -> Option<f64> {
        None
    }

    /// A known lower bound on the objective.
    fn lower_bound(&self) -> f64 {
        0.0
    }
}

impl<P: Problem + ?Sized> Problem for &P {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (**self).objective(x)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).gradient_into(x, out)
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
    fn lower_bound(&self) -> f64 {
        (**self).lower_bound()
    }
}

impl<P: Problem + ?Sized> Problem for Box<P> {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn objective(&self, x: &[f64]) -> f64 {
        (**self).objective(x)
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        (**self).gradient_into(x, out)
    }
    fn lipschitz(&self) -> Option<f64> {
        (**self).lipschitz()
    }
    fn lower_bound(&self) -> f64 {
        (**self).lower_bound()
    }
}

/// `f(x) = ½|x|²`, handy for smoke tests.
#[derive(Clone, Debug)]
pub struct HalfSquaredNorm {
    pub n: usize,
}

impl Problem for HalfSquaredNorm {
    fn dim(&self) -> usize {
        self.n
    }
    fn objective(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().map(|v| v * v).sum::<f64>()
    }
    fn gradient_into(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }
    fn lipschitz(&self) -> Option<f64> {
        Some(1.0)
    }
}

/// Central finite-difference gradient check used by tests and the harness.
///
/// Returns the relative error `|g - g_fd| / max(1, |g|)` at `x` with step
/// `h_i = h_scale * (1 + |x_i|)`.
pub fn finite_difference_error<P: Problem + ?Sized>(problem: &P, x: &[f64], h_scale: f64) -> f64 {
    let g = problem.gradient(x);
    let mut xp = x.to_vec();
    let mut diff2 = 0.0;
    for i in 0..x.len() {
        let h = h_scale * (1.0 + x[i].abs());
        xp[i] = x[i] + h;
        let fp = problem.objective(&xp);
        xp[i] = x[i] - h;
        let fm = problem.objective(&xp);
        xp[i] = x[i];
        let fd = (fp - fm) / (2.0 * h);
        diff2 += (fd - g[i]).powi(2);
    }
    diff2.sqrt() / crate::vector::norm(&g).max(1.0)
}
