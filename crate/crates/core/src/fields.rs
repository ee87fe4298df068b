//! Periodic-cross-section fields and their trigonometric calculus:
//!
//! - [`TorusField`]: nodal values on the uniform `N × N` grid of the
//!   2π-periodic cross-section, with exact analysis/synthesis between nodal
//!   values and a real trigonometric basis (`cos·cos`, `sin·cos`,
//!   `cos·sin`, `sin·sin` products up to the Nyquist mode),
//! - [`TorusSpectrum`]: coefficients in that basis, with spectral
//!   differentiation, Laplacian, Poisson solves and point evaluation,
//! - [`CylinderField`]: an axial stack of cross-section grids with
//!   4th-order axial differentiation, cumulative axial integration and
//!   high-order axial interpolation.
//!
//! Conventions: nodes are `y_j = 2πj/N` (`N` even); the sine basis excludes
//! the Nyquist index `N/2` (identically zero at the nodes), so the basis has
//! exactly `N²` members and analysis inverts synthesis on the nodal space.

use crate::ode::{cumulative_integral_uniform, fd_weights, lagrange_eval};

/// Identifies one of the four product-basis families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrigBlock {
    /// `cos(m₁y¹)cos(m₂y²)`, `0 ≤ m₁, m₂ ≤ N/2`.
    CosCos,
    /// `sin(m₁y¹)cos(m₂y²)`, `1 ≤ m₁ < N/2`, `0 ≤ m₂ ≤ N/2`.
    SinCos,
    /// `cos(m₁y¹)sin(m₂y²)`, `0 ≤ m₁ ≤ N/2`, `1 ≤ m₂ < N/2`.
    CosSin,
    /// `sin(m₁y¹)sin(m₂y²)`, `1 ≤ m₁, m₂ < N/2`.
    SinSin,
}

/// All `N²` basis modes for half-size `h = N/2`, in a canonical order.
pub fn mode_list(h: usize) -> Vec<(TrigBlock, usize, usize)> {
    let mut modes = Vec::with_capacity(4 * h * h);
    for m1 in 0..=h {
        for m2 in 0..=h {
            modes.push((TrigBlock::CosCos, m1, m2));
        }
    }
    for m1 in 1..h {
        for m2 in 0..=h {
            modes.push((TrigBlock::SinCos, m1, m2));
        }
    }
    for m1 in 0..=h {
        for m2 in 1..h {
            modes.push((TrigBlock::CosSin, m1, m2));
        }
    }
    for m1 in 1..h {
        for m2 in 1..h {
            modes.push((TrigBlock::SinSin, m1, m2));
        }
    }
    modes
}

/// Nodal values on the `N × N` cross-section grid, stored row-major as
/// `vals[i1 * N + i2]` with `y^β_j = 2πj/N`.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusField {
    n: usize,
    vals: Vec<f64>,
}

impl TorusField {
    /// Zero field on an `n × n` grid (`n` even, at least 4).
    pub fn new(n: usize) -> Self {
        assert!(n >= 4 && n % 2 == 0, "grid size must be even and ≥ 4, got {n}");
        Self {
            n,
            vals: vec![0.0; n * n],
        }
    }

    /// Field sampled from `f(y¹, y²)`.
    pub fn from_fn(n: usize, f: impl Fn(f64, f64) -> f64) -> Self {
        let mut out = Self::new(n);
        let step = 2.0 * std::f64::consts::PI / n as f64;
        for i1 in 0..n {
            for i2 in 0..n {
                out.vals[i1 * n + i2] = f(i1 as f64 * step, i2 as f64 * step);
            }
        }
        out
    }

    /// Grid size per direction.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Node coordinate `2πj/n`.
    pub fn node(n: usize, j: usize) -> f64 {
        2.0 * std::f64::consts::PI * j as f64 / n as f64
    }

    /// Value at node `(i1, i2)`.
    pub fn at(&self, i1: usize, i2: usize) -> f64 {
        self.vals[i1 * self.n + i2]
    }

    /// Mutable value at node `(i1, i2)`.
    pub fn at_mut(&mut self, i1: usize, i2: usize) -> &mut f64 {
        &mut self.vals[i1 * self.n + i2]
    }

    /// All nodal values, row-major.
    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Mutable nodal values, row-major.
    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.vals
    }

    /// Node average (equals the mean-mode coefficient exactly).
    pub fn mean(&self) -> f64 {
        self.vals.iter().sum::<f64>() / (self.n * self.n) as f64
    }

    /// Subtracts the node average in place.
    pub fn project_zero_mean(&mut self) {
        let m = self.mean();
        for v in &mut self.vals {
            *v -= m;
        }
    }

    /// Largest absolute nodal value.
    pub fn sup_norm(&self) -> f64 {
        self.vals.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// Resamples the trigonometric interpolant on a finer `m × m` grid.
    pub fn refined(&self, m: usize) -> TorusField {
        if m == self.n {
            return self.clone();
        }
        self.analyze().refine(m)
    }

    /// In-place `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &TorusField) {
        assert_eq!(self.n, other.n, "grid size mismatch");
        for (s, o) in self.vals.iter_mut().zip(&other.vals) {
            *s += a * o;
        }
    }

    /// In-place scaling.
    pub fn scale(&mut self, a: f64) {
        for v in &mut self.vals {
            *v *= a;
        }
    }

    /// Expands the nodal values in the trigonometric basis.
    pub fn analyze(&self) -> TorusSpectrum {
        let n = self.n;
        let h = n / 2;
        let tables = TrigTables::new(n);
        // Stage 1: transform the y² direction per row.
        // c_rows[i1][m2], s_rows[i1][m2] (sin rows only used for 1..h-1).
        let mut c_rows = vec![0.0; n * (h + 1)];
        let mut s_rows = vec![0.0; n * (h + 1)];
        for i1 in 0..n {
            let row = &self.vals[i1 * n..(i1 + 1) * n];
            for m2 in 0..=h {
                let (mut sc, mut ss) = (0.0, 0.0);
                for (i2, v) in row.iter().enumerate() {
                    sc += v * tables.cos(m2, i2);
                    ss += v * tables.sin(m2, i2);
                }
                c_rows[i1 * (h + 1) + m2] = sc;
                s_rows[i1 * (h + 1) + m2] = ss;
            }
        }
        // Stage 2: transform the y¹ direction per column, then scale.
        let mut spec = TorusSpectrum::zero(n);
        let norm = 4.0 / (n * n) as f64;
        let w = |m: usize| if m == 0 || m == h { 0.5 } else { 1.0 };
        for m1 in 0..=h {
            for m2 in 0..=h {
                let (mut acc_cc, mut acc_sc, mut acc_cs, mut acc_ss) = (0.0, 0.0, 0.0, 0.0);
                for i1 in 0..n {
                    let c = c_rows[i1 * (h + 1) + m2];
                    let s = s_rows[i1 * (h + 1) + m2];
                    let cm = tables.cos(m1, i1);
                    let sm = tables.sin(m1, i1);
                    acc_cc += c * cm;
                    acc_sc += c * sm;
                    acc_cs += s * cm;
                    acc_ss += s * sm;
                }
                spec.set(TrigBlock::CosCos, m1, m2, norm * w(m1) * w(m2) * acc_cc);
                if m1 >= 1 && m1 < h {
                    spec.set(TrigBlock::SinCos, m1, m2, norm * w(m2) * acc_sc);
                }
                if m2 >= 1 && m2 < h {
                    spec.set(TrigBlock::CosSin, m1, m2, norm * w(m1) * acc_cs);
                }
                if m1 >= 1 && m1 < h && m2 >= 1 && m2 < h {
                    spec.set(TrigBlock::SinSin, m1, m2, norm * acc_ss);
                }
            }
        }
        spec
    }
}

/// Precomputed `cos(m·2πj/n)` and `sin(m·2πj/n)` tables for `m ≤ n/2`.
struct TrigTables {
    n: usize,
    cos_t: Vec<f64>,
    sin_t: Vec<f64>,
}

impl TrigTables {
    fn new(n: usize) -> Self {
        let h = n / 2;
        let mut cos_t = vec![0.0; (h + 1) * n];
        let mut sin_t = vec![0.0; (h + 1) * n];
        for m in 0..=h {
            for j in 0..n {
                let a = 2.0 * std::f64::consts::PI * (m * j % n) as f64 / n as f64;
                cos_t[m * n + j] = a.cos();
                sin_t[m * n + j] = a.sin();
            }
        }
        Self { n, cos_t, sin_t }
    }

    #[inline]
    fn cos(&self, m: usize, j: usize) -> f64 {
        self.cos_t[m * self.n + j]
    }

    #[inline]
    fn sin(&self, m: usize, j: usize) -> f64 {
        self.sin_t[m * self.n + j]
    }
}

/// Coefficients of a cross-section field in the real trigonometric basis.
#[derive(Debug, Clone, PartialEq)]
pub struct TorusSpectrum {
    n: usize,
    cc: Vec<f64>,
    sc: Vec<f64>,
    cs: Vec<f64>,
    ss: Vec<f64>,
}

impl TorusSpectrum {
    /// Zero spectrum for an `n × n` grid.
    pub fn zero(n: usize) -> Self {
        assert!(n >= 4 && n % 2 == 0, "grid size must be even and ≥ 4, got {n}");
        let h = n / 2;
        Self {
            n,
            cc: vec![0.0; (h + 1) * (h + 1)],
            sc: vec![0.0; (h - 1) * (h + 1)],
            cs: vec![0.0; (h + 1) * (h - 1)],
            ss: vec![0.0; (h - 1) * (h - 1)],
        }
    }

    /// Grid size per direction.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Half-size `N/2` (largest representable mode index).
    pub fn h(&self) -> usize {
        self.n / 2
    }

    fn idx(&self, block: TrigBlock, m1: usize, m2: usize) -> usize {
        let h = self.h();
        match block {
            TrigBlock::CosCos => {
                debug_assert!(m1 <= h && m2 <= h);
                m1 * (h + 1) + m2
            }
            TrigBlock::SinCos => {
                debug_assert!((1..h).contains(&m1) && m2 <= h);
                (m1 - 1) * (h + 1) + m2
            }
            TrigBlock::CosSin => {
                debug_assert!(m1 <= h && (1..h).contains(&m2));
                m1 * (h - 1) + (m2 - 1)
            }
            TrigBlock::SinSin => {
                debug_assert!((1..h).contains(&m1) && (1..h).contains(&m2));
                (m1 - 1) * (h - 1) + (m2 - 1)
            }
        }
    }

    /// Coefficient of the `(block, m1, m2)` basis function.
    pub fn get(&self, block: TrigBlock, m1: usize, m2: usize) -> f64 {
        let i = self.idx(block, m1, m2);
        match block {
            TrigBlock::CosCos => self.cc[i],
            TrigBlock::SinCos => self.sc[i],
            TrigBlock::CosSin => self.cs[i],
            TrigBlock::SinSin => self.ss[i],
        }
    }

    /// Sets the coefficient of the `(block, m1, m2)` basis function.
    pub fn set(&mut self, block: TrigBlock, m1: usize, m2: usize, v: f64) {
        let i = self.idx(block, m1, m2);
        match block {
            TrigBlock::CosCos => self.cc[i] = v,
            TrigBlock::SinCos => self.sc[i] = v,
            TrigBlock::CosSin => self.cs[i] = v,
            TrigBlock::SinSin => self.ss[i] = v,
        }
    }

    /// Mean-mode coefficient.
    pub fn mean(&self) -> f64 {
        self.cc[0]
    }

    /// Overwrites the mean-mode coefficient.
    pub fn set_mean(&mut self, v: f64) {
        self.cc[0] = v;
    }

    /// Reconstructs nodal values (exact inverse of [`TorusField::analyze`]).
    pub fn synthesize(&self) -> TorusField {
        let n = self.n;
        let h = self.h();
        let tables = TrigTables::new(n);
        // Stage 1: sum the y¹ direction per (i1, m2).
        let mut c_rows = vec![0.0; n * (h + 1)];
        let mut s_rows = vec![0.0; n * (h + 1)];
        for i1 in 0..n {
            for m2 in 0..=h {
                let mut acc_c = 0.0;
                let mut acc_s = 0.0;
                for m1 in 0..=h {
                    let cm = tables.cos(m1, i1);
                    acc_c += self.get(TrigBlock::CosCos, m1, m2) * cm;
                    if m2 >= 1 && m2 < h {
                        acc_s += self.get(TrigBlock::CosSin, m1, m2) * cm;
                    }
                }
                for m1 in 1..h {
                    let sm = tables.sin(m1, i1);
                    acc_c += self.get(TrigBlock::SinCos, m1, m2) * sm;
                    if m2 >= 1 && m2 < h {
                        acc_s += self.get(TrigBlock::SinSin, m1, m2) * sm;
                    }
                }
                c_rows[i1 * (h + 1) + m2] = acc_c;
                s_rows[i1 * (h + 1) + m2] = acc_s;
            }
        }
        // Stage 2: sum the y² direction per node.
        let mut out = TorusField::new(n);
        for i1 in 0..n {
            for i2 in 0..n {
                let mut acc = 0.0;
                for m2 in 0..=h {
                    acc += c_rows[i1 * (h + 1) + m2] * tables.cos(m2, i2);
                    if m2 >= 1 && m2 < h {
                        acc += s_rows[i1 * (h + 1) + m2] * tables.sin(m2, i2);
                    }
                }
                *out.at_mut(i1, i2) = acc;
            }
        }
        out
    }

    /// Synthesizes the trigonometric interpolant on a finer `m × m` grid
    /// (`m ≥ n`, even). Exact: the result samples the same trigonometric
    /// polynomial, so refining and re-analyzing returns the spectrum padded
    /// with zeros.
    pub fn refine(&self, m: usize) -> TorusField {
        assert!(m >= self.n && m % 2 == 0, "target grid must be even and ≥ {}", self.n);
        let h = self.h();
        let tables = TrigTables::new(m);
        // Stage 1: sum the y¹ direction per (i1, m2) on the fine nodes.
        let mut c_rows = vec![0.0; m * (h + 1)];
        let mut s_rows = vec![0.0; m * (h + 1)];
        for i1 in 0..m {
            for m2 in 0..=h {
                let mut acc_c = 0.0;
                let mut acc_s = 0.0;
                for m1 in 0..=h {
                    let cm = tables.cos(m1, i1);
                    acc_c += self.get(TrigBlock::CosCos, m1, m2) * cm;
                    if m2 >= 1 && m2 < h {
                        acc_s += self.get(TrigBlock::CosSin, m1, m2) * cm;
                    }
                }
                for m1 in 1..h {
                    let sm = tables.sin(m1, i1);
                    acc_c += self.get(TrigBlock::SinCos, m1, m2) * sm;
                    if m2 >= 1 && m2 < h {
                        acc_s += self.get(TrigBlock::SinSin, m1, m2) * sm;
                    }
                }
                c_rows[i1 * (h + 1) + m2] = acc_c;
                s_rows[i1 * (h + 1) + m2] = acc_s;
            }
        }
        // Stage 2: sum the y² direction per fine node.
        let mut out = TorusField::new(m);
        for i1 in 0..m {
            for i2 in 0..m {
                let mut acc = 0.0;
                for m2 in 0..=h {
                    acc += c_rows[i1 * (h + 1) + m2] * tables.cos(m2, i2);
                    if m2 >= 1 && m2 < h {
                        acc += s_rows[i1 * (h + 1) + m2] * tables.sin(m2, i2);
                    }
                }
                *out.at_mut(i1, i2) = acc;
            }
        }
        out
    }

    /// Evaluates the trigonometric interpolant at an arbitrary point.
    pub fn eval(&self, y1: f64, y2: f64) -> f64 {
        let h = self.h();
        // cos/sin of m·y via the angle-addition recurrence.
        let build = |y: f64| {
            let (s1, c1) = y.sin_cos();
            let mut c = vec![0.0; h + 1];
            let mut s = vec![0.0; h + 1];
            c[0] = 1.0;
            s[0] = 0.0;
            if h >= 1 {
                c[1] = c1;
                s[1] = s1;
            }
            for m in 2..=h {
                c[m] = c[m - 1] * c1 - s[m - 1] * s1;
                s[m] = s[m - 1] * c1 + c[m - 1] * s1;
            }
            (c, s)
        };
        let (c1v, s1v) = build(y1);
        let (c2v, s2v) = build(y2);
        let mut acc = 0.0;
        for m1 in 0..=h {
            for m2 in 0..=h {
                acc += self.get(TrigBlock::CosCos, m1, m2) * c1v[m1] * c2v[m2];
            }
        }
        for m1 in 1..h {
            for m2 in 0..=h {
                acc += self.get(TrigBlock::SinCos, m1, m2) * s1v[m1] * c2v[m2];
            }
        }
        for m1 in 0..=h {
            for m2 in 1..h {
                acc += self.get(TrigBlock::CosSin, m1, m2) * c1v[m1] * s2v[m2];
            }
        }
        for m1 in 1..h {
            for m2 in 1..h {
                acc += self.get(TrigBlock::SinSin, m1, m2) * s1v[m1] * s2v[m2];
            }
        }
        acc
    }

    /// Spectral partial derivative along direction `dir` (0 for `y¹`, 1 for
    /// `y²`). The cosine-Nyquist mode has no representable derivative (its
    /// sine partner vanishes at the nodes) and is dropped.
    pub fn deriv(&self, dir: usize) -> TorusSpectrum {
        assert!(dir < 2, "direction must be 0 or 1");
        let h = self.h();
        let mut out = TorusSpectrum::zero(self.n);
        if dir == 0 {
            for m1 in 1..h {
                let k = m1 as f64;
                for m2 in 0..=h {
                    out.set(TrigBlock::CosCos, m1, m2, k * self.get(TrigBlock::SinCos, m1, m2));
                    out.set(TrigBlock::SinCos, m1, m2, -k * self.get(TrigBlock::CosCos, m1, m2));
                    if m2 >= 1 && m2 < h {
                        out.set(TrigBlock::CosSin, m1, m2, k * self.get(TrigBlock::SinSin, m1, m2));
                        out.set(TrigBlock::SinSin, m1, m2, -k * self.get(TrigBlock::CosSin, m1, m2));
                    }
                }
            }
        } else {
            for m2 in 1..h {
                let k = m2 as f64;
                for m1 in 0..=h {
                    out.set(TrigBlock::CosCos, m1, m2, k * self.get(TrigBlock::CosSin, m1, m2));
                    out.set(TrigBlock::CosSin, m1, m2, -k * self.get(TrigBlock::CosCos, m1, m2));
                    if m1 >= 1 && m1 < h {
                        out.set(TrigBlock::SinCos, m1, m2, k * self.get(TrigBlock::SinSin, m1, m2));
                        out.set(TrigBlock::SinSin, m1, m2, -k * self.get(TrigBlock::SinCos, m1, m2));
                    }
                }
            }
        }
        out
    }

    /// Spectral cross-section Laplacian: multiplies each mode by
    /// `−(m₁² + m₂²)`.
    pub fn laplacian(&self) -> TorusSpectrum {
        let mut out = self.clone();
        let h = self.h();
        for (block, m1, m2) in mode_list(h) {
            let q = (m1 * m1 + m2 * m2) as f64;
            out.set(block, m1, m2, -q * self.get(block, m1, m2));
        }
        out
    }

    /// Solves `Δ'u = self` spectrally: `u_m = −f_m/(m₁² + m₂²)` for
    /// non-mean modes. The mean of the data is ignored (a mean source has no
    /// periodic solution) and the returned solution has zero mean.
    pub fn solve_poisson(&self) -> TorusSpectrum {
        let mut out = self.clone();
        let h = self.h();
        for (block, m1, m2) in mode_list(h) {
            let q = (m1 * m1 + m2 * m2) as f64;
            if q == 0.0 {
                out.set(block, m1, m2, 0.0);
            } else {
                out.set(block, m1, m2, -self.get(block, m1, m2) / q);
            }
        }
        out
    }

    /// In-place `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &TorusSpectrum) {
        assert_eq!(self.n, other.n, "grid size mismatch");
        for (s, o) in self.cc.iter_mut().zip(&other.cc) {
            *s += a * o;
        }
        for (s, o) in self.sc.iter_mut().zip(&other.sc) {
            *s += a * o;
        }
        for (s, o) in self.cs.iter_mut().zip(&other.cs) {
            *s += a * o;
        }
        for (s, o) in self.ss.iter_mut().zip(&other.ss) {
            *s += a * o;
        }
    }

    /// Fraction of the spectral energy carried by modes with
    /// `max(m₁, m₂) ≥ h − 1` (0 when the spectrum vanishes).
    pub fn tail_fraction(&self) -> f64 {
        let h = self.h();
        let mut tail = 0.0;
        let mut total = 0.0;
        for (block, m1, m2) in mode_list(h) {
            let e = self.get(block, m1, m2).powi(2);
            total += e;
            if m1.max(m2) + 1 >= h {
                tail += e;
            }
        }
        if total == 0.0 {
            0.0
        } else {
            tail / total
        }
    }
}

/// An axial stack of cross-section grids on `[x_lo, x_hi]`: `n0` axial
/// stations including both endpoints (spacing `(x_hi − x_lo)/(n0 − 1)`),
/// each an `n × n` torus grid. Storage is `vals[i0·n² + i1·n + i2]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CylinderField {
    n0: usize,
    n: usize,
    x_lo: f64,
    h: f64,
    vals: Vec<f64>,
}

impl CylinderField {
    /// Zero field.
    pub fn new(n0: usize, n: usize, x_lo: f64, x_hi: f64) -> Self {
        assert!(n0 >= 6, "need at least 6 axial stations, got {n0}");
        assert!(n >= 4 && n % 2 == 0, "grid size must be even and ≥ 4, got {n}");
        assert!(x_hi > x_lo, "empty axial span");
        Self {
            n0,
            n,
            x_lo,
            h: (x_hi - x_lo) / (n0 - 1) as f64,
            vals: vec![0.0; n0 * n * n],
        }
    }

    /// Field sampled from `f(x, y¹, y²)`.
    pub fn from_fn(
        n0: usize,
        n: usize,
        x_lo: f64,
        x_hi: f64,
        f: impl Fn(f64, f64, f64) -> f64,
    ) -> Self {
        let mut out = Self::new(n0, n, x_lo, x_hi);
        let step = 2.0 * std::f64::consts::PI / n as f64;
        for i0 in 0..n0 {
            let x = out.node_x(i0);
            for i1 in 0..n {
                for i2 in 0..n {
                    out.vals[(i0 * n + i1) * n + i2] = f(x, i1 as f64 * step, i2 as f64 * step);
                }
            }
        }
        out
    }

    /// Number of axial stations.
    pub fn n0(&self) -> usize {
        self.n0
    }

    /// Cross-section grid size.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Axial position of station `i0`.
    pub fn node_x(&self, i0: usize) -> f64 {
        self.x_lo + i0 as f64 * self.h
    }

    /// Axial spacing.
    pub fn spacing(&self) -> f64 {
        self.h
    }

    /// Axial span `(lo, hi)`.
    pub fn span(&self) -> (f64, f64) {
        (self.x_lo, self.x_lo + (self.n0 - 1) as f64 * self.h)
    }

    /// Value at `(i0, i1, i2)`.
    pub fn at(&self, i0: usize, i1: usize, i2: usize) -> f64 {
        self.vals[(i0 * self.n + i1) * self.n + i2]
    }

    /// Mutable value at `(i0, i1, i2)`.
    pub fn at_mut(&mut self, i0: usize, i1: usize, i2: usize) -> &mut f64 {
        &mut self.vals[(i0 * self.n + i1) * self.n + i2]
    }

    /// All values.
    pub fn values(&self) -> &[f64] {
        &self.vals
    }

    /// Copy of the cross-section at station `i0`.
    pub fn slice(&self, i0: usize) -> TorusField {
        let nn = self.n * self.n;
        let mut out = TorusField::new(self.n);
        out.values_mut()
            .copy_from_slice(&self.vals[i0 * nn..(i0 + 1) * nn]);
        out
    }

    /// Overwrites the cross-section at station `i0`.
    pub fn set_slice(&mut self, i0: usize, slice: &TorusField) {
        assert_eq!(slice.n(), self.n, "grid size mismatch");
        let nn = self.n * self.n;
        self.vals[i0 * nn..(i0 + 1) * nn].copy_from_slice(slice.values());
    }

    /// Resamples every cross-section on a finer `m × m` tangential grid
    /// (exact for the stored trigonometric interpolants); the axial grid is
    /// unchanged.
    pub fn refined_sections(&self, m: usize) -> CylinderField {
        if m == self.n {
            return self.clone();
        }
        let (x_lo, x_hi) = self.span();
        let mut out = CylinderField::new(self.n0, m, x_lo, x_hi);
        for i0 in 0..self.n0 {
            out.set_slice(i0, &self.slice(i0).refined(m));
        }
        out
    }

    /// The first axial station (the trace at the lower axial end).
    pub fn trace(&self) -> TorusField {
        self.slice(0)
    }

    /// 4th-order axial derivative (centered inside, one-sided at the ends).
    pub fn axial_deriv(&self) -> CylinderField {
        let (n0, n) = (self.n0, self.n);
        let nn = n * n;
        let xs: Vec<f64> = (0..5).map(|i| i as f64 * self.h).collect();
        let w_c = fd_weights(
            &[-2.0 * self.h, -self.h, 0.0, self.h, 2.0 * self.h],
            0.0,
            1,
        );
        let w_l0 = fd_weights(&xs, 0.0, 1);
        let w_l1 = fd_weights(&xs, self.h, 1);
        let w_r1 = fd_weights(&xs, 3.0 * self.h, 1);
        let w_r0 = fd_weights(&xs, 4.0 * self.h, 1);
        let mut out = self.clone();
        for i0 in 0..n0 {
            let (j0, w): (usize, &Vec<f64>) = if i0 >= 2 && i0 + 2 < n0 {
                (i0 - 2, &w_c)
            } else if i0 == 0 {
                (0, &w_l0)
            } else if i0 == 1 {
                (0, &w_l1)
            } else if i0 + 2 == n0 {
                (n0 - 5, &w_r1)
            } else {
                (n0 - 5, &w_r0)
            };
            for k in 0..nn {
                let mut acc = 0.0;
                for (s, ws) in w.iter().enumerate() {
                    acc += ws * self.vals[(j0 + s) * nn + k];
                }
                out.vals[i0 * nn + k] = acc;
            }
        }
        out
    }

    /// Cumulative axial integral from the lower end, per tangential node
    /// (4th-order accurate).
    pub fn cumulative_axial_integral(&self) -> CylinderField {
        let nn = self.n * self.n;
        let mut out = self.clone();
        let mut column = vec![0.0; self.n0];
        for k in 0..nn {
            for i0 in 0..self.n0 {
                column[i0] = self.vals[i0 * nn + k];
            }
            let cum = cumulative_integral_uniform(self.h, &column);
            for i0 in 0..self.n0 {
                out.vals[i0 * nn + k] = cum[i0];
            }
        }
        out
    }

    /// 6-point Lagrange interpolation in the axial direction at the
    /// tangential node `(i1, i2)`.
    pub fn eval_axial(&self, x: f64, i1: usize, i2: usize) -> f64 {
        let (j0, xs) = self.axial_stencil(x);
        let ys: Vec<f64> = (0..6)
            .map(|s| self.at(j0 + s, i1, i2))
            .collect();
        lagrange_eval(&xs, &ys, x)
    }

    /// Whole cross-section interpolated at axial position `x` (6-point
    /// Lagrange weights shared across the section).
    pub fn eval_slice(&self, x: f64) -> TorusField {
        let (j0, xs) = self.axial_stencil(x);
        // Lagrange weights at x for the 6 stencil stations.
        let mut w = [0.0; 6];
        for j in 0..6 {
            let mut lj = 1.0;
            for k in 0..6 {
                if k != j {
                    lj *= (x - xs[k]) / (xs[j] - xs[k]);
                }
            }
            w[j] = lj;
        }
        let nn = self.n * self.n;
        let mut out = TorusField::new(self.n);
        for (k, v) in out.values_mut().iter_mut().enumerate() {
            let mut acc = 0.0;
            for (s, ws) in w.iter().enumerate() {
                acc += ws * self.vals[(j0 + s) * nn + k];
            }
            *v = acc;
        }
        out
    }

    fn axial_stencil(&self, x: f64) -> (usize, Vec<f64>) {
        let (lo, hi) = self.span();
        let slack = 1e-9 * (1.0 + lo.abs().max(hi.abs()));
        assert!(
            x >= lo - slack && x <= hi + slack,
            "axial evaluation at {x} outside [{lo}, {hi}]"
        );
        let xc = x.clamp(lo, hi);
        let near = ((xc - self.x_lo) / self.h).round() as i64;
        let j0 = (near - 2).clamp(0, self.n0 as i64 - 6) as usize;
        let xs: Vec<f64> = (0..6).map(|s| self.node_x(j0 + s)).collect();
        (j0, xs)
    }

    /// Spectra of every axial slice, lower end first.
    pub fn analyze_slices(&self) -> Vec<TorusSpectrum> {
        (0..self.n0).map(|i0| self.slice(i0).analyze()).collect()
    }

    /// Largest absolute value over all nodes.
    pub fn sup_norm(&self) -> f64 {
        self.vals.iter().fold(0.0, |a, v| a.max(v.abs()))
    }

    /// In-place `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &CylinderField) {
        assert_eq!(self.vals.len(), other.vals.len(), "shape mismatch");
        for (s, o) in self.vals.iter_mut().zip(&other.vals) {
            *s += a * o;
        }
    }

    /// In-place scaling.
    pub fn scale(&mut self, a: f64) {
        for v in &mut self.vals {
            *v *= a;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn splitmix_values(seed: u64, count: usize) -> Vec<f64> {
        let mut state = seed;
        (0..count)
            .map(|_| {
                state = state.wrapping_add(0x9e3779b97f4a7c15);
                let mut z = state;
                z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
                z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
                z = z ^ (z >> 31);
                (z >> 11) as f64 / (1u64 << 53) as f64 - 0.5
            })
            .collect()
    }

    #[test]
    fn analyze_synthesize_roundtrip() {
        for n in [8usize, 16] {
            let mut f = TorusField::new(n);
            f.values_mut()
                .copy_from_slice(&splitmix_values(42 + n as u64, n * n));
            let back = f.analyze().synthesize();
            let mut worst: f64 = 0.0;
            for (a, b) in f.values().iter().zip(back.values()) {
                worst = worst.max((a - b).abs());
            }
            println!("roundtrip n = {n}: worst {worst:.3e}");
            assert!(worst < 1e-12, "roundtrip error {worst} at n = {n}");
        }
    }

    #[test]
    fn single_mode_isolated() {
        let f = TorusField::from_fn(16, |y1, y2| (3.0 * y1).cos() * y2.sin());
        let spec = f.analyze();
        assert!((spec.get(TrigBlock::CosSin, 3, 1) - 1.0).abs() < 1e-13);
        let mut other: f64 = 0.0;
        for (block, m1, m2) in mode_list(spec.h()) {
            if (block, m1, m2) != (TrigBlock::CosSin, 3, 1) {
                other = other.max(spec.get(block, m1, m2).abs());
            }
        }
        assert!(other < 1e-13, "spurious coefficient {other}");
    }

    #[test]
    fn nyquist_mode_roundtrips_and_derivative_drops() {
        let n = 16;
        let f = TorusField::from_fn(n, |y1, _| (8.0 * y1).cos());
        let spec = f.analyze();
        assert!((spec.get(TrigBlock::CosCos, 8, 0) - 1.0).abs() < 1e-13);
        let back = spec.synthesize();
        for (a, b) in f.values().iter().zip(back.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        // The sine partner of the Nyquist cosine vanishes at the nodes, so
        // the spectral derivative of this mode is identically zero.
        let d = spec.deriv(0);
        for (block, m1, m2) in mode_list(d.h()) {
            assert!(d.get(block, m1, m2).abs() < 1e-13);
        }
    }

    #[test]
    fn derivative_matches_analytic() {
        let n = 16;
        let f = TorusField::from_fn(n, |y1, y2| {
            (3.0 * y1).cos() * (2.0 * y2).sin() + 0.5 * y1.sin() - 0.25 * (y2 * 4.0).cos()
        });
        let d1f = TorusField::from_fn(n, |y1, y2| {
            -3.0 * (3.0 * y1).sin() * (2.0 * y2).sin() + 0.5 * y1.cos()
        });
        let d2f = TorusField::from_fn(n, |y1, y2| {
            2.0 * (3.0 * y1).cos() * (2.0 * y2).cos() + (y2 * 4.0).sin() * 4.0 * 0.25
        });
        let spec = f.analyze();
        let g1 = spec.deriv(0).synthesize();
        let g2 = spec.deriv(1).synthesize();
        for (a, b) in g1.values().iter().zip(d1f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
        for (a, b) in g2.values().iter().zip(d2f.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn laplacian_and_poisson_invert() {
        let n = 16;
        let f = TorusField::from_fn(n, |y1, y2| {
            (2.0 * y1).cos() * y2.sin() + 0.3 * (y1 + 2.0 * y2).sin()
        });
        let spec = f.analyze();
        assert!(spec.mean().abs() < 1e-13);
        let u = spec.solve_poisson();
        let back = u.laplacian();
        for (block, m1, m2) in mode_list(spec.h()) {
            let want = spec.get(block, m1, m2);
            let got = back.get(block, m1, m2);
            assert!(
                (want - got).abs() < 1e-12,
                "mode ({block:?}, {m1}, {m2}): {got} vs {want}"
            );
        }
        assert!(u.mean().abs() < 1e-15);
    }

    #[test]
    fn point_eval_matches_interpolant() {
        let n = 16;
        let f = |y1: f64, y2: f64| (3.0 * y1).cos() * (2.0 * y2).sin() + 0.7 * (y1).cos();
        let spec = TorusField::from_fn(n, f).analyze();
        // At grid nodes the interpolant reproduces the samples.
        for j in [0usize, 3, 11] {
            let y1 = TorusField::node(n, j);
            let y2 = TorusField::node(n, (j * 5) % n);
            assert!((spec.eval(y1, y2) - f(y1, y2)).abs() < 1e-12);
        }
        // Off the nodes a band-limited function is reproduced exactly.
        for (y1, y2) in [(0.123, 2.456), (3.9, 1.1), (5.0, 0.02)] {
            assert!((spec.eval(y1, y2) - f(y1, y2)).abs() < 1e-12);
        }
    }

    #[test]
    fn refinement_is_exact_for_the_interpolant() {
        let n = 8;
        let mut f = TorusField::new(n);
        f.values_mut().copy_from_slice(&splitmix_values(21, n * n));
        let spec = f.analyze();
        for m in [8usize, 12, 32] {
            let fine = f.refined(m);
            assert_eq!(fine.n(), m);
            // Every fine node samples the same trigonometric polynomial.
            for i1 in 0..m {
                for i2 in 0..m {
                    let v = spec.eval(TorusField::node(m, i1), TorusField::node(m, i2));
                    assert!((fine.at(i1, i2) - v).abs() < 1e-12);
                }
            }
            // Re-analysis returns the original coefficients padded by zeros.
            let respec = fine.analyze();
            for m1 in 0..=spec.h() {
                for m2 in 0..=spec.h() {
                    let d = respec.get(TrigBlock::CosCos, m1, m2)
                        - spec.get(TrigBlock::CosCos, m1, m2);
                    assert!(d.abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn cylinder_section_refinement_keeps_axial_grid() {
        let f = |x: f64, y1: f64, y2: f64| (1.0 + x) * y1.cos() + 0.3 * (2.0 * y2).sin() * x;
        let field = CylinderField::from_fn(12, 8, 1.0, 2.0, f);
        let fine = field.refined_sections(16);
        assert_eq!(fine.n0(), 12);
        assert_eq!(fine.n(), 16);
        assert_eq!(fine.span(), field.span());
        for i0 in [0usize, 5, 11] {
            let x = fine.node_x(i0);
            for (i1, i2) in [(0usize, 0usize), (3, 9), (15, 7)] {
                let v = f(x, TorusField::node(16, i1), TorusField::node(16, i2));
                assert!((fine.at(i0, i1, i2) - v).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mean_equals_node_average() {
        let n = 8;
        let mut f = TorusField::new(n);
        f.values_mut().copy_from_slice(&splitmix_values(7, n * n));
        let spec = f.analyze();
        assert!((spec.mean() - f.mean()).abs() < 1e-14);
        let mut g = f.clone();
        g.project_zero_mean();
        assert!(g.mean().abs() < 1e-15);
    }

    #[test]
    fn tail_fraction_detects_top_band() {
        let n = 16;
        let smooth = TorusField::from_fn(n, |y1, y2| y1.cos() + (2.0 * y2).sin());
        assert!(smooth.analyze().tail_fraction() < 1e-28);
        let spiky = TorusField::from_fn(n, |y1, _| (8.0 * y1).cos());
        assert!(spiky.analyze().tail_fraction() > 0.99);
    }

    #[test]
    fn cylinder_axial_derivative_is_fourth_order() {
        let f = |x: f64, y1: f64, _y2: f64| (2.0 * x).sin() * (1.0 + y1.cos());
        let fx = |x: f64, y1: f64, _y2: f64| 2.0 * (2.0 * x).cos() * (1.0 + y1.cos());
        let mut errs = Vec::new();
        for n0 in [51usize, 101] {
            let c = CylinderField::from_fn(n0, 8, 0.0, 2.0, f);
            let d = c.axial_deriv();
            let exact = CylinderField::from_fn(n0, 8, 0.0, 2.0, fx);
            let mut worst: f64 = 0.0;
            for (a, b) in d.values().iter().zip(exact.values()) {
                worst = worst.max((a - b).abs());
            }
            errs.push(worst);
        }
        let order = (errs[0] / errs[1]).log2();
        println!("axial derivative observed order: {order:.2} ({errs:?})");
        assert!(order > 3.6, "observed order {order}");
    }

    #[test]
    fn cylinder_cumulative_integral_and_interpolation() {
        let f = |x: f64, y1: f64, _y2: f64| (1.5 * x).cos() * (1.0 + 0.5 * y1.sin());
        let int_f =
            |x: f64, y1: f64, _y2: f64| (1.5 * x).sin() / 1.5 * (1.0 + 0.5 * y1.sin());
        let c = CylinderField::from_fn(121, 8, 0.0, 2.0, f);
        let cum = c.cumulative_axial_integral();
        let exact = CylinderField::from_fn(121, 8, 0.0, 2.0, int_f);
        let mut worst: f64 = 0.0;
        for (a, b) in cum.values().iter().zip(exact.values()) {
            worst = worst.max((a - b).abs());
        }
        assert!(worst < 1e-8, "cumulative integral error {worst}");
        // 6-point axial interpolation of a smooth field.
        let x = 0.7321;
        for (i1, i2) in [(0usize, 0usize), (3, 5)] {
            let y1 = TorusField::node(8, i1);
            let y2 = TorusField::node(8, i2);
            let v = c.eval_axial(x, i1, i2);
            assert!((v - f(x, y1, y2)).abs() < 1e-9, "axial interpolation");
            let sl = c.eval_slice(x);
            assert!((sl.at(i1, i2) - f(x, y1, y2)).abs() < 1e-9, "slice interpolation");
        }
        // Trace and slice round-trips.
        let tr = c.trace();
        assert_eq!(tr.at(2, 3), c.at(0, 2, 3));
        let mut c2 = c.clone();
        c2.set_slice(4, &tr);
        assert_eq!(c2.at(4, 2, 3), c.at(0, 2, 3));
    }

    proptest! {
        #![proptest_config(ProptestConfig { cases: 32, ..ProptestConfig::default() })]

        /// Analysis inverts synthesis on arbitrary nodal data.
        #[test]
        fn roundtrip_random_fields(vals in proptest::collection::vec(-1.0f64..1.0, 64)) {
            let mut f = TorusField::new(8);
            f.values_mut().copy_from_slice(&vals);
            let back = f.analyze().synthesize();
            for (a, b) in f.values().iter().zip(back.values()) {
                prop_assert!((a - b).abs() < 1e-11);
            }
        }

        /// Differentiation and Poisson inversion commute with the basis:
        /// Δ'(poisson(f)) recovers the mean-free part of f.
        #[test]
        fn poisson_solves_laplace_equation(vals in proptest::collection::vec(-1.0f64..1.0, 64)) {
            let mut f = TorusField::new(8);
            f.values_mut().copy_from_slice(&vals);
            let mut spec = f.analyze();
            spec.set_mean(0.0);
            let u = spec.solve_poisson();
            let back = u.laplacian();
            for (block, m1, m2) in mode_list(spec.h()) {
                prop_assert!((back.get(block, m1, m2) - spec.get(block, m1, m2)).abs() < 1e-11);
            }
        }
    }
}
