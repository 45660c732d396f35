//! Cyclic banded systems.
//!
//! Every implicit operator on the periodic grid (Newton Jacobians, implicit
//! diffusion, the Fokker–Planck generator) couples each node to a few
//! neighbours with wrap-around. The tridiagonal case is handled by the
//! Thomas algorithm with a Sherman–Morrison correction, wider stencils by a
//! banded LU of the non-wrapping part plus a Woodbury correction for the
//! corner blocks.

/// Matrix with `diag[j]` on the diagonal, `lower[j]` at `(j, j-1)` and
/// `upper[j]` at `(j, j+1)`, indices taken modulo `n`.
#[derive(Debug, Clone)]
pub struct CyclicTridiagonal {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl CyclicTridiagonal {
    pub fn new(lower: Vec<f64>, diag: Vec<f64>, upper: Vec<f64>) -> Self {
        assert!(diag.len() >= 3 && lower.len() == diag.len() && upper.len() == diag.len());
        Self { lower, diag, upper }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// `y = A x`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|j| {
                let jm = (j + n - 1) % n;
                let jp = (j + 1) % n;
                self.lower[j] * x[jm] + self.diag[j] * x[j] + self.upper[j] * x[jp]
            })
            .collect()
    }

    pub fn factor(&self) -> FactoredCyclic {
        FactoredCyclic::new(self)
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor().solve(rhs)
    }
}

/// Thomas factorisation of the rank-one-corrected matrix plus the
/// Sherman–Morrison correction vector, reusable across right-hand sides.
#[derive(Debug, Clone)]
pub struct FactoredCyclic {
    // forward-elimination coefficients of the modified tridiagonal matrix
    cprime: Vec<f64>,
    denom: Vec<f64>,
    lower: Vec<f64>,
    // z = T^{-1} u and the scalars of the correction
    z: Vec<f64>,
    corner_scale: f64,
    vz_denom: f64,
}

impl FactoredCyclic {
    fn new(a: &CyclicTridiagonal) -> Self {
        let n = a.len();
        let alpha = a.lower[0]; // entry (0, n-1)
        let beta = a.upper[n - 1]; // entry (n-1, 0)
        let g = -a.diag[0];
        let mut diag = a.diag.clone();
        diag[0] -= g;
        diag[n - 1] -= alpha * beta / g;

        let mut cprime = vec![0.0; n];
        let mut denom = vec![0.0; n];
        denom[0] = diag[0];
        cprime[0] = a.upper[0] / denom[0];
        for j in 1..n {
            denom[j] = diag[j] - a.lower[j] * cprime[j - 1];
            if j < n - 1 {
                cprime[j] = a.upper[j] / denom[j];
            }
        }
        let mut f = Self {
            cprime,
            denom,
            lower: a.lower.clone(),
            z: Vec::new(),
            corner_scale: alpha / g,
            vz_denom: 0.0,
        };
        let mut u = vec![0.0; n];
        u[0] = g;
        u[n - 1] = beta;
        let z = f.thomas(&u);
        f.vz_denom = 1.0 + z[0] + f.corner_scale * z[n - 1];
        f.z = z;
        f
    }

    fn thomas(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let mut y = vec![0.0; n];
        y[0] = rhs[0] / self.denom[0];
        for j in 1..n {
            y[j] = (rhs[j] - self.lower[j] * y[j - 1]) / self.denom[j];
        }
        for j in (0..n - 1).rev() {
            y[j] -= self.cprime[j] * y[j + 1];
        }
        y
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = rhs.len();
        let y = self.thomas(rhs);
        let factor = (y[0] + self.corner_scale * y[n - 1]) / self.vz_denom;
        y.iter().zip(&self.z).map(|(yi, zi)| yi - factor * zi).collect()
    }
}

/// Matrix with half-bandwidth `p` and wrap-around: `band(j, k)` is the entry
/// at `(j, (j + k) mod n)` for `-p <= k <= p`.
#[derive(Debug, Clone)]
pub struct CyclicBanded {
    n: usize,
    p: usize,
    data: Vec<f64>,
}

impl CyclicBanded {
    pub fn zeros(n: usize, p: usize) -> Self {
        assert!(p >= 1 && n > 2 * p + 1, "grid too small for bandwidth {p}");
        Self {
            n,
            p,
            data: vec![0.0; n * (2 * p + 1)],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn half_bandwidth(&self) -> usize {
        self.p
    }

    fn idx(&self, j: usize, k: isize) -> usize {
        debug_assert!(k.unsigned_abs() <= self.p);
        j * (2 * self.p + 1) + (k + self.p as isize) as usize
    }

    pub fn band(&self, j: usize, k: isize) -> f64 {
        self.data[self.idx(j, k)]
    }

    pub fn add(&mut self, j: usize, k: isize, value: f64) {
        let i = self.idx(j, k);
        self.data[i] += value;
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.n;
        let p = self.p as isize;
        (0..n)
            .map(|j| {
                (-p..=p)
                    .map(|k| self.band(j, k) * x[(j as isize + k).rem_euclid(n as isize) as usize])
                    .sum()
            })
            .collect()
    }

    pub fn factor(&self) -> FactoredBanded {
        FactoredBanded::new(self)
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        self.factor().solve(rhs)
    }
}

/// LU factors of the non-wrapping band and the Woodbury capacitance matrix
/// for the `2p` rows that carry corner entries.
#[derive(Debug, Clone)]
pub struct FactoredBanded {
    n: usize,
    p: usize,
    // band storage of L (unit lower) and U, same layout as CyclicBanded
    lu: Vec<f64>,
    corner_rows: Vec<usize>,
    // corner entries of each corner row as (column, value)
    corners: Vec<Vec<(usize, f64)>>,
    // Z = B^{-1} U, one column per corner row
    z: Vec<Vec<f64>>,
    // LU of I + V^T Z with partial pivoting
    cap: Vec<f64>,
    piv: Vec<usize>,
}

impl FactoredBanded {
    fn new(a: &CyclicBanded) -> Self {
        let (n, p) = (a.n, a.p);
        let w = 2 * p + 1;
        let mut lu = vec![0.0; n * w];
        let mut corner_rows = Vec::new();
        let mut corners = Vec::new();
        for j in 0..n {
            let mut row_corners = Vec::new();
            for k in -(p as isize)..=(p as isize) {
                let col = j as isize + k;
                let value = a.band(j, k);
                if (0..n as isize).contains(&col) {
                    lu[a.idx(j, k)] = value;
                } else {
                    row_corners.push((col.rem_euclid(n as isize) as usize, value));
                }
            }
            if !row_corners.is_empty() {
                corner_rows.push(j);
                corners.push(row_corners);
            }
        }

        let at = |i: usize, j: usize| i * w + (j + p - i);
        for k in 0..n {
            let pivot = lu[at(k, k)];
            for i in (k + 1)..(k + p + 1).min(n) {
                let l = lu[at(i, k)] / pivot;
                lu[at(i, k)] = l;
                for j in (k + 1)..(k + p + 1).min(n) {
                    lu[at(i, j)] -= l * lu[at(k, j)];
                }
            }
        }

        let mut f = Self {
            n,
            p,
            lu,
            corner_rows,
            corners,
            z: Vec::new(),
            cap: Vec::new(),
            piv: Vec::new(),
        };
        let m = f.corner_rows.len();
        let z: Vec<Vec<f64>> = f
            .corner_rows
            .iter()
            .map(|&r| {
                let mut e = vec![0.0; n];
                e[r] = 1.0;
                f.band_solve(&e)
            })
            .collect();
        let mut cap = vec![0.0; m * m];
        for (row, entries) in f.corners.iter().enumerate() {
            for (col, zc) in z.iter().enumerate() {
                let dot: f64 = entries.iter().map(|&(c, v)| v * zc[c]).sum();
                cap[row * m + col] = dot + if row == col { 1.0 } else { 0.0 };
            }
        }
        let piv = dense_lu(&mut cap, m);
        f.z = z;
        f.cap = cap;
        f.piv = piv;
        f
    }

    fn band_solve(&self, rhs: &[f64]) -> Vec<f64> {
        let (n, p) = (self.n, self.p);
        let w = 2 * p + 1;
        let at = |i: usize, j: usize| i * w + (j + p - i);
        let mut y = rhs.to_vec();
        for i in 0..n {
            let mut s = y[i];
            for j in i.saturating_sub(p)..i {
                s -= self.lu[at(i, j)] * y[j];
            }
            y[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = y[i];
            for j in (i + 1)..(i + p + 1).min(n) {
                s -= self.lu[at(i, j)] * y[j];
            }
            y[i] = s / self.lu[at(i, i)];
        }
        y
    }

    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let mut y = self.band_solve(rhs);
        let m = self.corner_rows.len();
        let mut t: Vec<f64> = self
            .corners
            .iter()
            .map(|entries| entries.iter().map(|&(c, v)| v * y[c]).sum())
            .collect();
        dense_solve(&self.cap, &self.piv, m, &mut t);
        for (zc, tc) in self.z.iter().zip(&t) {
            for (yi, zi) in y.iter_mut().zip(zc) {
                *yi -= tc * zi;
            }
        }
        y
    }
}

fn dense_lu(a: &mut [f64], m: usize) -> Vec<usize> {
    let mut piv: Vec<usize> = (0..m).collect();
    for k in 0..m {
        let best = (k..m)
            .max_by(|&i, &j| a[i * m + k].abs().total_cmp(&a[j * m + k].abs()))
            .unwrap_or(k);
        if best != k {
            for c in 0..m {
                a.swap(k * m + c, best * m + c);
            }
            piv.swap(k, best);
        }
        for i in (k + 1)..m {
            let l = a[i * m + k] / a[k * m + k];
            a[i * m + k] = l;
            for c in (k + 1)..m {
                a[i * m + c] -= l * a[k * m + c];
            }
        }
    }
    piv
}

fn dense_solve(lu: &[f64], piv: &[usize], m: usize, b: &mut [f64]) {
    let mut x: Vec<f64> = piv.iter().map(|&i| b[i]).collect();
    for i in 0..m {
        for j in 0..i {
            x[i] -= lu[i * m + j] * x[j];
        }
    }
    for i in (0..m).rev() {
        for j in (i + 1)..m {
            x[i] -= lu[i * m + j] * x[j];
        }
        x[i] /= lu[i * m + i];
    }
    b.copy_from_slice(&x);
}
