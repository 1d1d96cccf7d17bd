//! Cyclic coordinate descent with a sampled bracket and golden-section
//! refinement along each coordinate.

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy)]
pub struct LineSearch {
    /// Coarse samples across `span` around the current value.
    pub samples: usize,
    pub span: f64,
    /// Golden-section stops once the bracket is narrower than this.
    pub bracket_tol: f64,
    pub max_refinements: usize,
}

impl Default for LineSearch {
    fn default() -> Self {
        Self { samples: 12, span: std::f64::consts::PI, bracket_tol: 1e-13, max_refinements: 90 }
    }
}

/// Minimises a unimodal `f` on [lo, hi].
pub fn golden_section(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64, max_iter: usize) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..max_iter {
        if hi - lo <= tol {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - INV_PHI * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + INV_PHI * (hi - lo);
            f2 = f(x2);
        }
    }
    if f1 <= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

impl LineSearch {
    /// Returns the improved coordinate value and objective, or `(x0, f0)`
    /// when nothing better was found.
    pub fn minimize(&self, mut f: impl FnMut(f64) -> f64, x0: f64, f0: f64) -> (f64, f64) {
        let h = self.span / self.samples as f64;
        let (mut bx, mut bf) = (x0, f0);
        for j in 0..self.samples {
            let offset = (j as f64 - (self.samples / 2) as f64) * h;
            if offset == 0.0 {
                continue;
            }
            let x = x0 + offset;
            let fx = f(x);
            if fx < bf {
                bx = x;
                bf = fx;
            }
        }
        let (gx, gf) = golden_section(&mut f, bx - h, bx + h, self.bracket_tol, self.max_refinements);
        if gf < bf {
            (gx, gf)
        } else {
            (bx, bf)
        }
    }

    /// One cyclic sweep over all coordinates of `x`. Returns the objective.
    pub fn sweep(&self, x: &mut [f64], mut f: impl FnMut(&[f64]) -> f64, mut current: f64) -> f64 {
        let mut trial = x.to_vec();
        for j in 0..x.len() {
            let x0 = x[j];
            let (best, value) = self.minimize(
                |v| {
                    trial[j] = v;
                    f(&trial)
                },
                x0,
                current,
            );
            x[j] = best;
            trial[j] = best;
            current = value;
        }
        current
    }
}
