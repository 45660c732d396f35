//! Central finite-difference stencils on the periodic grid.

use crate::linalg::CyclicBanded;
use crate::torus::Grid;

/// Order of the centered difference stencils used for `∂x` and `∂xx`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum Stencil {
    Second,
    Fourth,
    #[default]
    Sixth,
}

impl Stencil {
    /// Number of neighbours on each side.
    pub fn half_width(self) -> usize {
        match self {
            Stencil::Second => 1,
            Stencil::Fourth => 2,
            Stencil::Sixth => 3,
        }
    }

    /// Weights `c_k` with `∂x f ≈ Σ_k c_k (f_{j+k} - f_{j-k}) / h`.
    fn first(self) -> &'static [f64] {
        match self {
            Stencil::Second => &[0.5],
            Stencil::Fourth => &[2.0 / 3.0, -1.0 / 12.0],
            Stencil::Sixth => &[0.75, -0.15, 1.0 / 60.0],
        }
    }

    /// Centre weight and side weights of `∂xx f ≈ (c_0 f_j + Σ_k c_k (f_{j+k} + f_{j-k})) / h²`.
    fn second(self) -> (f64, &'static [f64]) {
        match self {
            Stencil::Second => (-2.0, &[1.0]),
            Stencil::Fourth => (-2.5, &[4.0 / 3.0, -1.0 / 12.0]),
            Stencil::Sixth => (-49.0 / 18.0, &[1.5, -0.15, 1.0 / 90.0]),
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        match name {
            "2" | "second" => Some(Stencil::Second),
            "4" | "fourth" => Some(Stencil::Fourth),
            "6" | "sixth" => Some(Stencil::Sixth),
            _ => None,
        }
    }

    pub fn order(self) -> usize {
        2 * self.half_width()
    }

    pub fn d1(self, grid: Grid, f: &[f64]) -> Vec<f64> {
        let n = grid.n();
        let inv = 1.0 / grid.h();
        let c = self.first();
        (0..n)
            .map(|j| {
                let mut s = 0.0;
                for (m, ck) in c.iter().enumerate() {
                    let k = m + 1;
                    s += ck * (f[(j + k) % n] - f[(j + n - k) % n]);
                }
                s * inv
            })
            .collect()
    }

    pub fn d2(self, grid: Grid, f: &[f64]) -> Vec<f64> {
        let n = grid.n();
        let inv = 1.0 / (grid.h() * grid.h());
        let (c0, c) = self.second();
        (0..n)
            .map(|j| {
                let mut s = c0 * f[j];
                for (m, ck) in c.iter().enumerate() {
                    let k = m + 1;
                    s += ck * (f[(j + k) % n] + f[(j + n - k) % n]);
                }
                s * inv
            })
            .collect()
    }

    /// Adds `scale · diag(w) · D1` to `a`.
    pub fn add_d1(self, grid: Grid, w: &[f64], scale: f64, a: &mut CyclicBanded) {
        let inv = scale / grid.h();
        for (j, wj) in w.iter().enumerate() {
            for (m, ck) in self.first().iter().enumerate() {
                let k = (m + 1) as isize;
                a.add(j, k, wj * ck * inv);
                a.add(j, -k, -wj * ck * inv);
            }
        }
    }

    /// Adds `scale · D2` to `a`.
    pub fn add_d2(self, grid: Grid, scale: f64, a: &mut CyclicBanded) {
        let inv = scale / (grid.h() * grid.h());
        let (c0, c) = self.second();
        for j in 0..grid.n() {
            a.add(j, 0, c0 * inv);
            for (m, ck) in c.iter().enumerate() {
                let k = (m + 1) as isize;
                a.add(j, k, ck * inv);
                a.add(j, -k, ck * inv);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn second_order_matches_grid_differences() {
        let g = Grid::new(32).unwrap();
        let f: Vec<f64> = g.points().iter().map(|x| (2.0 * x).sin() + x.cos()).collect();
        let d1 = Stencil::Second.d1(g, &f);
        let d2 = Stencil::Second.d2(g, &f);
        for (a, b) in d1.iter().zip(g.d1(&f)) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in d2.iter().zip(g.d2(&f)) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn errors_shrink_with_order() {
        let g = Grid::new(64).unwrap();
        let x = g.points();
        let f: Vec<f64> = x.iter().map(|x| x.sin().exp()).collect();
        let exact1: Vec<f64> = x.iter().map(|x| x.cos() * x.sin().exp()).collect();
        let exact2: Vec<f64> = x
            .iter()
            .map(|x| (x.cos().powi(2) - x.sin()) * x.sin().exp())
            .collect();
        let mut last = (f64::INFINITY, f64::INFINITY);
        for s in [Stencil::Second, Stencil::Fourth, Stencil::Sixth] {
            let e1 = crate::torus::sup_diff(&s.d1(g, &f), &exact1);
            let e2 = crate::torus::sup_diff(&s.d2(g, &f), &exact2);
            assert!(e1 < last.0 / 10.0 && e2 < last.1 / 10.0, "{s:?}: {e1} {e2}");
            last = (e1, e2);
        }
        assert!(last.0 < 1e-5 && last.1 < 1e-5, "{last:?}");
    }

    #[test]
    fn assembled_operator_matches_pointwise_stencil() {
        let g = Grid::new(16).unwrap();
        let f: Vec<f64> = g.points().iter().map(|x| (3.0 * x).cos()).collect();
        let w: Vec<f64> = g.points().iter().map(|x| 1.0 + x.sin()).collect();
        for s in [Stencil::Second, Stencil::Fourth, Stencil::Sixth] {
            let mut a = CyclicBanded::zeros(16, 3);
            s.add_d2(g, 0.5, &mut a);
            s.add_d1(g, &w, 2.0, &mut a);
            let expect: Vec<f64> = s
                .d2(g, &f)
                .iter()
                .zip(s.d1(g, &f))
                .zip(&w)
                .map(|((d2, d1), w)| 0.5 * d2 + 2.0 * w * d1)
                .collect();
            assert!(crate::torus::sup_diff(&a.apply(&f), &expect) < 1e-10);
        }
    }
}
