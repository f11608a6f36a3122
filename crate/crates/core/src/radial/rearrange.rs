use crate::error::Result;

use super::field::RadialField;

/// Symmetric decreasing rearrangement of |u|.
///
/// |u| is interpolated by a monotone cubic (PCHIP) in x = ln r, so every
/// grid cell is monotone and each level set crosses it at most once. The
/// distribution function μ(t) = |{ũ > t}| is then exact for the interpolant,
/// and the result at r_i is the level t with μ(t) equal to the volume of the
/// ball of radius r_i. Decreasing nonnegative inputs are returned unchanged.
pub fn schwarz_rearrange(u: &RadialField) -> Result<RadialField> {
    let grid = u.grid();
    let m = u.len();
    let n = grid.dim() as f64;
    let h = grid.log_step();
    let abs: Vec<f64> = u.values().iter().map(|v| v.abs()).collect();
    let slopes = pchip_slopes(&abs);

    // Volume coordinate (units of r^N / N, measured from r_min).
    let base: Vec<f64> = grid.nodes().iter().map(|r| r.powf(n) / n).collect();
    let growth = (n * h).exp_m1();
    let cell_volume: Vec<f64> = base[..m - 1].iter().map(|b| b * growth).collect();
    let mut target = vec![0.0; m];
    for i in 1..m {
        target[i] = target[i - 1] + cell_volume[i - 1];
    }

    let cells: Vec<Cell> = (0..m - 1)
        .map(|j| Cell {
            lo: abs[j],
            hi: abs[j + 1],
            m_lo: slopes[j],
            m_hi: slopes[j + 1],
            base: base[j],
            volume: cell_volume[j],
        })
        .collect();

    let mut levels = abs.clone();
    levels.push(0.0);
    levels.sort_by(|a, b| b.total_cmp(a));
    levels.dedup();

    let mut by_max: Vec<usize> = (0..m - 1).collect();
    by_max.sort_by(|&a, &b| cells[b].max().total_cmp(&cells[a].max()));
    let mut by_min: Vec<usize> = (0..m - 1).collect();
    by_min.sort_by(|&a, &b| cells[b].min().total_cmp(&cells[a].min()));

    let mut out = vec![0.0; m];
    let mut full = 0.0;
    let mut next_max = 0;
    let mut next_min = 0;
    let mut in_full = vec![false; m - 1];
    let mut active: Vec<usize> = Vec::new();
    let mut i = 0;
    // μ at the current upper level of the gap being processed.
    let mut mu_top = 0.0;
    for k in 0..levels.len() {
        let top = levels[k];
        // Targets with μ(top) >= V sit at the top level itself. The slack
        // absorbs summation-order rounding between μ and the targets.
        while i < m && target[i] <= mu_top * (1.0 + 1e-12) {
            out[i] = top;
            i += 1;
        }
        if k + 1 == levels.len() || i == m {
            break;
        }
        let bottom = levels[k + 1];
        while next_min < by_min.len() && cells[by_min[next_min]].min() >= top {
            let j = by_min[next_min];
            full += cells[j].volume;
            in_full[j] = true;
            next_min += 1;
        }
        while next_max < by_max.len() && cells[by_max[next_max]].max() >= top {
            active.push(by_max[next_max]);
            next_max += 1;
        }
        active.retain(|&j| !in_full[j]);
        let mu = |t: f64| full + active.iter().map(|&j| cells[j].measure_above(t, n, h)).sum::<f64>();
        let mu_bottom = mu(bottom);
        while i < m && target[i] < mu_bottom {
            out[i] = solve_level(&mu, target[i], bottom, top);
            i += 1;
        }
        mu_top = mu_bottom;
    }
    // Round-off can leave ulp-sized increases; the rearrangement is monotone.
    for i in 1..m {
        out[i] = out[i].min(out[i - 1]);
    }
    RadialField::new(grid, out)
}

struct Cell {
    lo: f64,
    hi: f64,
    m_lo: f64,
    m_hi: f64,
    base: f64,
    volume: f64,
}

impl Cell {
    fn min(&self) -> f64 {
        self.lo.min(self.hi)
    }

    fn max(&self) -> f64 {
        self.lo.max(self.hi)
    }

    fn eval(&self, s: f64) -> (f64, f64) {
        let s2 = s * s;
        let s3 = s2 * s;
        let v = (2.0 * s3 - 3.0 * s2 + 1.0) * self.lo
            + (s3 - 2.0 * s2 + s) * self.m_lo
            + (-2.0 * s3 + 3.0 * s2) * self.hi
            + (s3 - s2) * self.m_hi;
        let d = (6.0 * s2 - 6.0 * s) * self.lo
            + (3.0 * s2 - 4.0 * s + 1.0) * self.m_lo
            + (-6.0 * s2 + 6.0 * s) * self.hi
            + (3.0 * s2 - 2.0 * s) * self.m_hi;
        (v, d)
    }

    /// Volume of the part of the cell where the interpolant exceeds t.
    fn measure_above(&self, t: f64, n: f64, h: f64) -> f64 {
        if self.min() > t {
            return self.volume;
        }
        if self.max() <= t {
            return 0.0;
        }
        let s = self.crossing(t);
        let inner = self.base * (n * h * s).exp_m1();
        if self.lo > self.hi {
            inner
        } else {
            self.volume - inner
        }
    }

    // Monotone cubic on [0, 1]: safeguarded Newton for the unique root.
    fn crossing(&self, t: f64) -> f64 {
        let decreasing = self.lo > self.hi;
        let (mut a, mut b) = (0.0, 1.0);
        let mut s = (self.lo - t) / (self.lo - self.hi);
        for _ in 0..100 {
            let (v, d) = self.eval(s);
            if (v - t).abs() <= 1e-16 * self.max() {
                break;
            }
            let above = v > t;
            if above == decreasing {
                a = s;
            } else {
                b = s;
            }
            if b - a <= 1e-15 {
                break;
            }
            let newton = s - (v - t) / d;
            s = if d != 0.0 && newton > a && newton < b {
                newton
            } else {
                0.5 * (a + b)
            };
        }
        s
    }
}

fn solve_level(mu: &impl Fn(f64) -> f64, volume: f64, bottom: f64, top: f64) -> f64 {
    let (mut lo, mut hi) = (bottom, top);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if mu(mid) > volume {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

// Fritsch-Carlson slopes per unit step, zero at local extrema.
fn pchip_slopes(y: &[f64]) -> Vec<f64> {
    let m = y.len();
    let delta: Vec<f64> = y.windows(2).map(|w| w[1] - w[0]).collect();
    let mut d = vec![0.0; m];
    for k in 1..m - 1 {
        let (a, b) = (delta[k - 1], delta[k]);
        if a * b > 0.0 {
            d[k] = 2.0 / (1.0 / a + 1.0 / b);
        }
    }
    let end = |d0: f64, d1: f64| {
        let s = 0.5 * (3.0 * d0 - d1);
        if s * d0 <= 0.0 {
            0.0
        } else if d0 * d1 < 0.0 && s.abs() > 3.0 * d0.abs() {
            3.0 * d0
        } else {
            s
        }
    };
    d[0] = end(delta[0], delta[1]);
    d[m - 1] = end(delta[m - 2], delta[m - 3]);
    d
}
