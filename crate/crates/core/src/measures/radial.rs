//! Tabulated inverse CDF for the radius `s = |x′|` of a power surface.
//!
//! The base-plane density of the surface measure on `x_n = |x′|^k` is
//! proportional to `s^{n−2} · √(1 + k² s^{2(k−1)})`. For `k < 1` the area
//! factor blows up at the axis but the density stays integrable, so it is
//! tabulated in the variable `u = √(s/R)` (which smooths the `s^k` cusp) and
//! inverted with a local Newton solve inside each cell.

const NODES: usize = 10_000;

// 4-point Gauss-Legendre on [-1, 1]
const GL_X: [f64; 4] =
    [-0.861_136_311_594_052_6, -0.339_981_043_584_856_3, 0.339_981_043_584_856_3, 0.861_136_311_594_052_6];
const GL_W: [f64; 4] =
    [0.347_854_845_137_453_9, 0.652_145_154_862_546_1, 0.652_145_154_862_546_1, 0.347_854_845_137_453_9];

#[derive(Clone, Debug, PartialEq)]
pub struct RadialTable {
    n: usize,
    k: f64,
    radius: f64,
    /// Unnormalized cumulative mass at `u = j / NODES`.
    cumulative: Vec<f64>,
}

impl RadialTable {
    pub fn new(n: usize, k: f64, radius: f64) -> Self {
        let mut t = RadialTable { n, k, radius, cumulative: Vec::with_capacity(NODES + 1) };
        let h = 1.0 / NODES as f64;
        let mut acc = 0.0;
        t.cumulative.push(0.0);
        for j in 0..NODES {
            acc += t.integrate(j as f64 * h, (j + 1) as f64 * h);
            t.cumulative.push(acc);
        }
        t
    }

    /// Density in `u`, unnormalized.
    fn density_u(&self, u: f64) -> f64 {
        let s = self.radius * u * u;
        if s == 0.0 {
            return 0.0;
        }
        let area = (1.0 + self.k * self.k * s.powf(2.0 * (self.k - 1.0))).sqrt();
        s.powi(self.n as i32 - 2) * area * 2.0 * self.radius * u
    }

    fn integrate(&self, a: f64, b: f64) -> f64 {
        let mid = 0.5 * (a + b);
        let half = 0.5 * (b - a);
        GL_X.iter().zip(GL_W).map(|(&x, w)| w * self.density_u(mid + half * x)).sum::<f64>() * half
    }

    pub fn total(&self) -> f64 {
        self.cumulative[NODES]
    }

    /// Normalized CDF of the radius `s`.
    pub fn cdf(&self, s: f64) -> f64 {
        if s <= 0.0 {
            return 0.0;
        }
        if s >= self.radius {
            return 1.0;
        }
        let u = (s / self.radius).sqrt();
        let j = ((u * NODES as f64) as usize).min(NODES - 1);
        let lo = j as f64 / NODES as f64;
        (self.cumulative[j] + self.integrate(lo, u)) / self.total()
    }

    /// The radius `s` with `cdf(s) = q`, for `q ∈ [0, 1)`.
    pub fn quantile(&self, q: f64) -> f64 {
        let target = q * self.total();
        let j = self.cumulative.partition_point(|&c| c <= target).clamp(1, NODES) - 1;
        let h = 1.0 / NODES as f64;
        let (u_lo, u_hi) = (j as f64 * h, (j + 1) as f64 * h);
        let need = target - self.cumulative[j];
        let cell = self.cumulative[j + 1] - self.cumulative[j];
        let mut u = if cell > 0.0 { u_lo + h * (need / cell).clamp(0.0, 1.0) } else { u_lo };
        for _ in 0..4 {
            let err = self.integrate(u_lo, u) - need;
            let d = self.density_u(u);
            if d <= 0.0 {
                break;
            }
            u = (u - err / d).clamp(u_lo, u_hi);
        }
        self.radius * u * u
    }
}
