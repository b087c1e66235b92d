//! Sampled scalar fields on square periodic grids and the free-space
//! propagators that act on them.
//!
//! Two propagators are provided. [`propagate`] is a band-limited angular
//! spectrum step that keeps the field on its own grid and is used between
//! neighbouring satellites. [`fresnel_zoom`] evaluates the Fresnel integral
//! directly onto an arbitrary output grid and is used for the long
//! ground-to-orbit legs where the beam grows far beyond the launch window.

mod fft;

pub use fft::fft2;

use std::f64::consts::PI;

use num_complex::Complex64;
use thiserror::Error;

/// Samples per half-axis the angular-spectrum passband must retain.
pub const MIN_PASSBAND_SAMPLES: f64 = 8.0;

/// Smallest waist, in grid cells, accepted by [`gaussian_field`].
pub const MIN_WAIST_CELLS: f64 = 4.0;

/// Fraction of the window (per side) occupied by the absorbing guard band.
pub const GUARD_FRACTION: f64 = 0.10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum WaveError {
    #[error("grid side {0} is not a power of two of at least 256")]
    InvalidGridSize(usize),
    #[error("window width must be positive and finite, got {0} m")]
    InvalidWindow(f64),
    #[error("wavelength must be positive and finite, got {0} m")]
    InvalidWavelength(f64),
    #[error("waist {waist} m covers fewer than {MIN_WAIST_CELLS} cells of {cell} m")]
    GridTooCoarse { waist: f64, cell: f64 },
    #[error("waist {waist} m exceeds a quarter of the {window} m window")]
    WindowTooSmall { waist: f64, window: f64 },
    #[error("propagating {distance} m would alias on this grid (max safe distance {max_safe} m)")]
    Aliasing { distance: f64, max_safe: f64 },
    #[error("propagation distance must be non-negative and finite, got {0} m")]
    InvalidDistance(f64),
    #[error("field carries no power")]
    ZeroPower,
    #[error("fields live on different grids or wavelengths")]
    GridMismatch,
}

pub type Result<T> = std::result::Result<T, WaveError>;

/// Square sampling grid of side `window` metres with `n` points per axis.
/// Sample `i` sits at `(i - n/2) * dx`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    window: f64,
    n: usize,
}

impl Grid {
    pub fn new(window: f64, n: usize) -> Result<Self> {
        if n < 256 || !n.is_power_of_two() {
            return Err(WaveError::InvalidGridSize(n));
        }
        Self::unchecked(window, n)
    }

    /// Like [`Grid::new`] but accepts any even size; used for small
    /// receive-plane grids of the Fresnel evaluator.
    pub(crate) fn unchecked(window: f64, n: usize) -> Result<Self> {
        if !(window.is_finite() && window > 0.0) {
            return Err(WaveError::InvalidWindow(window));
        }
        if n < 2 || n % 2 == 1 {
            return Err(WaveError::InvalidGridSize(n));
        }
        Ok(Self { window, n })
    }

    pub fn window(&self) -> f64 {
        self.window
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn spacing(&self) -> f64 {
        self.window / self.n as f64
    }

    pub fn cell_area(&self) -> f64 {
        self.spacing() * self.spacing()
    }

    #[inline]
    pub fn coord(&self, i: usize) -> f64 {
        (i as f64 - (self.n / 2) as f64) * self.spacing()
    }

    pub fn coords(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.coord(i)).collect()
    }

    /// Largest distance [`propagate`] accepts at this wavelength.
    pub fn max_safe_distance(&self, wavelength: f64) -> f64 {
        // passband half-width (W/2)/(lambda*sqrt(z^2 + W^2/4)) must hold
        // MIN_PASSBAND_SAMPLES frequency bins of width 1/W
        let w = self.window;
        let lim = w * w / (2.0 * MIN_PASSBAND_SAMPLES * wavelength);
        let q = lim * lim - w * w / 4.0;
        if q <= 0.0 {
            0.0
        } else {
            q.sqrt()
        }
    }
}

/// Complex amplitude samples, row-major (`data[iy * n + ix]`).
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexField {
    pub grid: Grid,
    pub wavelength: f64,
    pub data: Vec<Complex64>,
}

impl ComplexField {
    pub fn zeros(grid: Grid, wavelength: f64) -> Result<Self> {
        check_wavelength(wavelength)?;
        Ok(Self {
            grid,
            wavelength,
            data: vec![Complex64::default(); grid.n * grid.n],
        })
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * PI / self.wavelength
    }

    pub fn power(&self) -> f64 {
        total_power(self)
    }

    pub fn scale(&mut self, factor: f64) {
        for a in &mut self.data {
            *a *= factor;
        }
    }

    pub fn normalized(mut self) -> Result<Self> {
        let p = self.power();
        if p <= 0.0 || !p.is_finite() {
            return Err(WaveError::ZeroPower);
        }
        self.scale(1.0 / p.sqrt());
        Ok(self)
    }

    /// Multiply by a separable real mask `mx[ix] * my[iy]`.
    pub fn apply_separable(&mut self, mx: &[f64], my: &[f64]) {
        let n = self.grid.n;
        for (iy, row) in self.data.chunks_mut(n).enumerate() {
            let fy = my[iy];
            for (a, &fx) in row.iter_mut().zip(mx) {
                *a *= fx * fy;
            }
        }
    }

    /// Multiply by a separable phase `exp(i (px[ix] + py[iy]))`.
    pub fn apply_separable_phase(&mut self, px: &[f64], py: &[f64]) {
        let n = self.grid.n;
        let ex: Vec<Complex64> = px.iter().map(|&p| Complex64::from_polar(1.0, p)).collect();
        for (iy, row) in self.data.chunks_mut(n).enumerate() {
            let ey = Complex64::from_polar(1.0, py[iy]);
            for (a, e) in row.iter_mut().zip(&ex) {
                *a *= e * ey;
            }
        }
    }

    /// Multiply by `exp(i phase)` sample by sample.
    pub fn apply_phase(&mut self, phase: &[f64]) {
        for (a, &p) in self.data.iter_mut().zip(phase) {
            *a *= Complex64::from_polar(1.0, p);
        }
    }
}

fn check_wavelength(wavelength: f64) -> Result<()> {
    if wavelength.is_finite() && wavelength > 0.0 {
        Ok(())
    } else {
        Err(WaveError::InvalidWavelength(wavelength))
    }
}

/// Fundamental Gaussian beam at its launch plane.
///
/// `wavefront_radius` follows the usual sign rule: positive is diverging,
/// negative is converging towards a focus that distance ahead, and infinity
/// is a flat front.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct GaussianSpec {
    /// 1/e^2 intensity radius.
    pub waist: f64,
    pub wavefront_radius: f64,
}

impl GaussianSpec {
    pub fn collimated(waist: f64) -> Self {
        Self {
            waist,
            wavefront_radius: f64::INFINITY,
        }
    }

    pub fn curved(waist: f64, wavefront_radius: f64) -> Self {
        Self {
            waist,
            wavefront_radius,
        }
    }

    /// Complex beam parameter `q` with `1/q = 1/R - i lambda/(pi w^2)`.
    pub fn q(&self, wavelength: f64) -> Complex64 {
        let inv_r = if self.wavefront_radius.is_infinite() {
            0.0
        } else {
            1.0 / self.wavefront_radius
        };
        let inv_q = Complex64::new(inv_r, -wavelength / (PI * self.waist * self.waist));
        1.0 / inv_q
    }

    /// The same beam after free travel over `z` metres.
    pub fn after(&self, z: f64, wavelength: f64) -> Self {
        Self::from_q(self.q(wavelength) + z, wavelength)
    }

    pub fn from_q(q: Complex64, wavelength: f64) -> Self {
        let inv = 1.0 / q;
        let waist = (-wavelength / (PI * inv.im)).sqrt();
        let wavefront_radius = if inv.re == 0.0 {
            f64::INFINITY
        } else {
            1.0 / inv.re
        };
        Self {
            waist,
            wavefront_radius,
        }
    }

    /// Radius at the beam's focus.
    pub fn focal_waist(&self, wavelength: f64) -> f64 {
        let q = self.q(wavelength);
        (wavelength * q.im / PI).sqrt()
    }

    /// Far-field 1/e^2 half-angle divergence.
    pub fn divergence(&self, wavelength: f64) -> f64 {
        wavelength / (PI * self.focal_waist(wavelength))
    }
}

/// Sampled Gaussian normalised to unit power, centred on the grid origin.
pub fn gaussian_field(grid: &Grid, spec: &GaussianSpec, wavelength: f64) -> Result<ComplexField> {
    gaussian_field_at(grid, spec, wavelength, (0.0, 0.0))
}

pub fn gaussian_field_at(
    grid: &Grid,
    spec: &GaussianSpec,
    wavelength: f64,
    centre: (f64, f64),
) -> Result<ComplexField> {
    check_wavelength(wavelength)?;
    let cell = grid.spacing();
    if !(spec.waist.is_finite() && spec.waist >= MIN_WAIST_CELLS * cell) {
        return Err(WaveError::GridTooCoarse {
            waist: spec.waist,
            cell,
        });
    }
    if spec.waist > grid.window / 4.0 {
        return Err(WaveError::WindowTooSmall {
            waist: spec.waist,
            window: grid.window,
        });
    }
    let k = 2.0 * PI / wavelength;
    let curv = if spec.wavefront_radius.is_infinite() {
        0.0
    } else {
        k / (2.0 * spec.wavefront_radius)
    };
    let w2 = spec.waist * spec.waist;
    // exp(-r^2/w^2 + i curv r^2) is separable in x and y
    let axis = |c: f64| -> Vec<Complex64> {
        grid.coords()
            .iter()
            .map(|&x| {
                let d2 = (x - c) * (x - c);
                Complex64::from_polar((-d2 / w2).exp(), curv * d2)
            })
            .collect()
    };
    let gx = axis(centre.0);
    let gy = axis(centre.1);
    let mut f = ComplexField::zeros(*grid, wavelength)?;
    let n = grid.n;
    for (iy, row) in f.data.chunks_mut(n).enumerate() {
        for (a, g) in row.iter_mut().zip(&gx) {
            *a = g * gy[iy];
        }
    }
    f.normalized()
}

pub fn total_power(field: &ComplexField) -> f64 {
    field.data.iter().map(|a| a.norm_sqr()).sum::<f64>() * field.grid.cell_area()
}

/// Power-weighted centroid `(x, y)`.
pub fn centroid(field: &ComplexField) -> Result<(f64, f64)> {
    let m = moments(field)?;
    Ok((m.0, m.1))
}

fn moments(field: &ComplexField) -> Result<(f64, f64, f64)> {
    let g = field.grid;
    let xs = g.coords();
    let (mut p, mut sx, mut sy, mut sxx) = (0.0, 0.0, 0.0, 0.0);
    for (iy, row) in field.data.chunks(g.n).enumerate() {
        let y = xs[iy];
        for (a, &x) in row.iter().zip(&xs) {
            let i = a.norm_sqr();
            p += i;
            sx += i * x;
            sy += i * y;
            sxx += i * (x * x + y * y);
        }
    }
    if p <= 0.0 || !p.is_finite() {
        return Err(WaveError::ZeroPower);
    }
    let (cx, cy) = (sx / p, sy / p);
    Ok((cx, cy, sxx / p - cx * cx - cy * cy))
}

/// Second-moment (1/e^2 equivalent) radius about the centroid.
pub fn beam_radius(field: &ComplexField) -> Result<f64> {
    let (_, _, var) = moments(field)?;
    Ok((2.0 * var.max(0.0)).sqrt())
}

/// Power inside a circle of `radius` about `centre`.
pub fn encircled_power(field: &ComplexField, centre: (f64, f64), radius: f64) -> f64 {
    let g = field.grid;
    let xs = g.coords();
    let r2 = radius * radius;
    let mut p = 0.0;
    for (iy, row) in field.data.chunks(g.n).enumerate() {
        let dy = xs[iy] - centre.1;
        for (a, &x) in row.iter().zip(&xs) {
            let dx = x - centre.0;
            if dx * dx + dy * dy <= r2 {
                p += a.norm_sqr();
            }
        }
    }
    p * g.cell_area()
}

/// Normalised overlap `|<ref|f>|^2 / (P_ref P_f)`, in [0, 1].
pub fn mode_overlap(field: &ComplexField, reference: &ComplexField) -> Result<f64> {
    if field.grid != reference.grid || field.wavelength != reference.wavelength {
        return Err(WaveError::GridMismatch);
    }
    let mut ip = Complex64::default();
    let (mut pf, mut pr) = (0.0, 0.0);
    for (a, r) in field.data.iter().zip(&reference.data) {
        ip += r.conj() * a;
        pf += a.norm_sqr();
        pr += r.norm_sqr();
    }
    if pf <= 0.0 || pr <= 0.0 {
        return Err(WaveError::ZeroPower);
    }
    Ok((ip.norm_sqr() / (pf * pr)).min(1.0))
}

/// Best overlap of `field` with any centred fundamental Gaussian.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MatchedMode {
    pub fraction: f64,
    pub spec: GaussianSpec,
}

/// Searches waist and wavefront curvature of a fundamental Gaussian centred
/// at `centre` for the largest [`mode_overlap`] with `field`.
pub fn matched_gaussian(field: &ComplexField, centre: (f64, f64)) -> Result<MatchedMode> {
    const BINS: usize = 8192;
    let g = field.grid;
    let xs = g.coords();
    let mut rmax2: f64 = 0.0;
    let mut pf = 0.0;
    for (iy, row) in field.data.chunks(g.n).enumerate() {
        let dy = xs[iy] - centre.1;
        for (a, &x) in row.iter().zip(&xs) {
            let i = a.norm_sqr();
            if i > 0.0 {
                let dx = x - centre.0;
                rmax2 = rmax2.max(dx * dx + dy * dy);
                pf += i;
            }
        }
    }
    if pf <= 0.0 || !pf.is_finite() {
        return Err(WaveError::ZeroPower);
    }
    // the overlap only depends on r^2, so accumulate the field (and pixel
    // counts for the reference norm) in fine r^2 bins
    let r2_top = rmax2 * 1.0001 + g.cell_area();
    let half_diag2 = 0.5 * g.window * g.window;
    let all_top = half_diag2 * 4.0;
    let mut amp = vec![Complex64::default(); BINS];
    let mut cnt = vec![0.0f64; BINS];
    let mut r2c = vec![0.0f64; BINS];
    let bin_of = |r2: f64, top: f64| ((r2 / top) * BINS as f64).min(BINS as f64 - 1.0) as usize;
    let mut cnt_all = vec![0.0f64; BINS];
    let mut r2_all = vec![0.0f64; BINS];
    for (iy, row) in field.data.chunks(g.n).enumerate() {
        let dy = xs[iy] - centre.1;
        for (a, &x) in row.iter().zip(&xs) {
            let dx = x - centre.0;
            let r2 = dx * dx + dy * dy;
            if r2 <= r2_top {
                let b = bin_of(r2, r2_top);
                amp[b] += a;
                cnt[b] += 1.0;
                r2c[b] += r2;
            }
            let b = bin_of(r2, all_top);
            cnt_all[b] += 1.0;
            r2_all[b] += r2;
        }
    }
    for b in 0..BINS {
        if cnt[b] > 0.0 {
            r2c[b] /= cnt[b];
        }
        if cnt_all[b] > 0.0 {
            r2_all[b] /= cnt_all[b];
        }
    }
    let k = field.wavenumber();
    let overlap = |w: f64, c: f64| -> f64 {
        let a = 1.0 / (w * w);
        let mut ip = Complex64::default();
        for b in 0..BINS {
            if cnt[b] > 0.0 {
                ip += amp[b] * Complex64::from_polar((-a * r2c[b]).exp(), -0.5 * k * c * r2c[b]);
            }
        }
        let mut pr = 0.0;
        for b in 0..BINS {
            if cnt_all[b] > 0.0 {
                pr += cnt_all[b] * (-2.0 * a * r2_all[b]).exp();
            }
        }
        ip.norm_sqr() / (pf * pr)
    };
    let rms = beam_radius(field)?.max(4.0 * g.spacing());
    let (mut lw, mut c) = (rms.ln(), 0.0);
    let (lw_lo, lw_hi) = ((2.0 * g.spacing()).ln(), (g.window / 2.0).ln());
    // curvature scale: a quarter-wave of sag over the field radius
    let c_span = 8.0 * PI / (k * rms * rms);
    for _ in 0..4 {
        c = golden_max(
            |c| overlap(lw.exp(), c),
            c - c_span,
            c + c_span,
            1e-4 * c_span,
        );
        lw = golden_max(|l| overlap(l.exp(), c), lw_lo, lw_hi, 1e-5);
    }
    let fraction = overlap(lw.exp(), c).min(1.0);
    let radius = if c == 0.0 { f64::INFINITY } else { 1.0 / c };
    Ok(MatchedMode {
        fraction,
        spec: GaussianSpec::curved(lw.exp(), radius),
    })
}

/// Golden-section maximiser of a unimodal function on `[a, b]`.
pub(crate) fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, tol: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - r * (b - a);
    let mut d = a + r * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - r * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + r * (b - a);
            fd = f(d);
        }
    }
    0.5 * (a + b)
}

fn band_limit(grid: &Grid, wavelength: f64, z: f64) -> f64 {
    let w = grid.window;
    (w / 2.0) / (wavelength * (z * z + w * w / 4.0).sqrt())
}

/// Band-limited angular-spectrum step over `z` metres.
///
/// The window is treated as periodic and no padding is added; whatever
/// reaches the edge wraps around, so callers keep an absorber near the edge
/// (see [`absorb_guard_band`]). Distances beyond
/// [`Grid::max_safe_distance`] are refused.
pub fn propagate(field: &ComplexField, z: f64) -> Result<ComplexField> {
    spectral_step(field, z, false)
}

/// Exact inverse of [`propagate`] on the retained passband.
pub fn unpropagate(field: &ComplexField, z: f64) -> Result<ComplexField> {
    spectral_step(field, z, true)
}

fn spectral_step(field: &ComplexField, z: f64, backwards: bool) -> Result<ComplexField> {
    if !(z.is_finite() && z >= 0.0) {
        return Err(WaveError::InvalidDistance(z));
    }
    if z == 0.0 {
        return Ok(field.clone());
    }
    let g = field.grid;
    let lambda = field.wavelength;
    let max_safe = g.max_safe_distance(lambda);
    if z > max_safe {
        return Err(WaveError::Aliasing {
            distance: z,
            max_safe,
        });
    }
    let n = g.n;
    let flim = band_limit(&g, lambda, z);
    let band: Vec<usize> = (0..n)
        .filter(|&i| (fft::signed_index(i, n) as f64 / g.window).abs() <= flim)
        .collect();
    let nb = band.len();
    let inv_l = 1.0 / lambda;
    let sign = if backwards { 1.0 } else { -1.0 };
    // phase relative to the carrier, written to avoid cancellation
    let kernel = |fx: f64, fy: f64| {
        let f2 = fx * fx + fy * fy;
        let ph = sign * 2.0 * PI * z * f2 / (inv_l + (inv_l * inv_l - f2).sqrt());
        Complex64::from_polar(1.0, ph)
    };

    let mut data = field.data.clone();
    fft::rows(&mut data, n, false);
    // only the passband columns matter from here on
    let mut cols = vec![Complex64::default(); nb * n];
    for iy in 0..n {
        let row = &data[iy * n..(iy + 1) * n];
        for (b, &ix) in band.iter().enumerate() {
            cols[b * n + iy] = row[ix];
        }
    }
    fft::rows(&mut cols, n, false);
    let in_band: Vec<bool> = (0..n)
        .map(|i| (fft::signed_index(i, n) as f64 / g.window).abs() <= flim)
        .collect();
    for (b, &ix) in band.iter().enumerate() {
        let fx = fft::signed_index(ix, n) as f64 / g.window;
        let col = &mut cols[b * n..(b + 1) * n];
        for (iy, a) in col.iter_mut().enumerate() {
            if in_band[iy] {
                let fy = fft::signed_index(iy, n) as f64 / g.window;
                *a *= kernel(fx, fy);
            } else {
                *a = Complex64::default();
            }
        }
    }
    fft::rows(&mut cols, n, true);
    data.iter_mut().for_each(|a| *a = Complex64::default());
    for iy in 0..n {
        let row = &mut data[iy * n..(iy + 1) * n];
        for (b, &ix) in band.iter().enumerate() {
            row[ix] = cols[b * n + iy];
        }
    }
    fft::rows(&mut data, n, true);
    let norm = 1.0 / (n * n) as f64;
    for a in &mut data {
        *a *= norm;
    }
    Ok(ComplexField {
        grid: g,
        wavelength: lambda,
        data,
    })
}

/// Per-axis amplitude profile of the edge absorber: unity over the inner
/// window, then a fourth-order super-Gaussian roll-off reaching 1e-3 at
/// the edge.
pub fn guard_profile(grid: &Grid) -> Vec<f64> {
    let half = grid.window / 2.0;
    let band = GUARD_FRACTION * half;
    let inner = half - band;
    let sigma = band / 1000f64.ln().powf(0.25);
    grid.coords()
        .iter()
        .map(|&x| {
            let d = x.abs() - inner;
            if d <= 0.0 {
                1.0
            } else {
                (-(d / sigma).powi(4)).exp()
            }
        })
        .collect()
}

/// Applies the edge absorber in place and returns the power it removed.
pub fn absorb_guard_band(field: &mut ComplexField) -> f64 {
    let before = field.power();
    let m = guard_profile(&field.grid);
    field.apply_separable(&m, &m);
    before - field.power()
}

/// Fresnel diffraction integral evaluated directly onto `out`.
///
/// Works for any distance where the paraxial approximation holds; the
/// output grid may be much larger or smaller than the input window. The
/// input is cropped to its support and, when the output only needs low
/// spatial frequencies, block-summed before the separable transform.
pub fn fresnel_zoom(field: &ComplexField, z: f64, out: &Grid) -> Result<ComplexField> {
    if !(z.is_finite() && z > 0.0) {
        return Err(WaveError::InvalidDistance(z));
    }
    let g = field.grid;
    let n = g.n;
    let lambda = field.wavelength;
    let k = 2.0 * PI / lambda;
    let dx = g.spacing();

    // support bounding box
    let (mut x0, mut x1, mut y0, mut y1) = (n, 0, n, 0);
    for (iy, row) in field.data.chunks(n).enumerate() {
        for (ix, a) in row.iter().enumerate() {
            if a.norm_sqr() > 0.0 {
                x0 = x0.min(ix);
                x1 = x1.max(ix);
                y0 = y0.min(iy);
                y1 = y1.max(iy);
            }
        }
    }
    if x0 > x1 {
        return Err(WaveError::ZeroPower);
    }
    let xs = g.coords();
    let in_max = [xs[x0].abs(), xs[x1].abs(), xs[y0].abs(), xs[y1].abs()]
        .into_iter()
        .fold(0.0, f64::max);
    let out_max = out.window / 2.0;
    let u_max = out_max / (lambda * z);
    if 2.0 * u_max * dx > 1.0 {
        let max_safe = 2.0 * dx * out_max / lambda;
        return Err(WaveError::Aliasing {
            distance: z,
            max_safe,
        });
    }
    // decimation: keep the kernel frequency far below the new Nyquist and
    // the input chirp nearly constant across a block
    let mut d = 1usize;
    while {
        let nd = 2 * d;
        let span = (x1 - x0 + 1).max(y1 - y0 + 1);
        let cell = nd as f64 * dx;
        64.0 * u_max * cell <= 1.0 && k * in_max * cell / z <= PI / 16.0 && span / nd >= 32
    } {
        d *= 2;
    }
    // align the crop to block boundaries
    let bx0 = x0 / d * d;
    let by0 = y0 / d * d;
    let nxb = (x1 - bx0) / d + 1;
    let nyb = (y1 - by0) / d + 1;
    let centre = |b0: usize, j: usize| -> f64 {
        // mean coordinate of the block
        let first = b0 + j * d;
        g.coord(first) + 0.5 * (d - 1) as f64 * dx
    };
    let cx: Vec<f64> = (0..nxb).map(|j| centre(bx0, j)).collect();
    let cy: Vec<f64> = (0..nyb).map(|j| centre(by0, j)).collect();
    let mut a = vec![Complex64::default(); nxb * nyb];
    for iy in y0..=y1 {
        let by = (iy - by0) / d;
        let y = xs[iy];
        for ix in x0..=x1 {
            let v = field.data[iy * n + ix];
            if v.norm_sqr() == 0.0 {
                continue;
            }
            let x = xs[ix];
            let bx = (ix - bx0) / d;
            a[by * nxb + bx] += v * Complex64::from_polar(1.0, k * (x * x + y * y) / (2.0 * z));
        }
    }

    let m = out.n;
    let xo = out.coords();
    let kern = |c: &[f64]| -> Vec<Complex64> {
        // rows indexed by output sample
        let mut e = Vec::with_capacity(m * c.len());
        for &x2 in &xo {
            for &x1 in c {
                e.push(Complex64::from_polar(1.0, -k * x1 * x2 / z));
            }
        }
        e
    };
    let ex = kern(&cx);
    let ey = kern(&cy);
    // C[y1][x2] = sum_x1 A[y1][x1] Ex[x2][x1]
    let mut c = vec![Complex64::default(); nyb * m];
    for yb in 0..nyb {
        let arow = &a[yb * nxb..(yb + 1) * nxb];
        if arow.iter().all(|v| v.norm_sqr() == 0.0) {
            continue;
        }
        for j in 0..m {
            let erow = &ex[j * nxb..(j + 1) * nxb];
            c[yb * m + j] = arow.iter().zip(erow).map(|(p, q)| p * q).sum();
        }
    }
    // B[y2][x2] = sum_y1 Ey[y2][y1] C[y1][x2]
    let mut data = vec![Complex64::default(); m * m];
    for i in 0..m {
        let brow = &mut data[i * m..(i + 1) * m];
        for yb in 0..nyb {
            let e = ey[i * nyb + yb];
            let crow = &c[yb * m..(yb + 1) * m];
            for (b, cv) in brow.iter_mut().zip(crow) {
                *b += e * cv;
            }
        }
    }
    // 1/(i lambda z) prefactor and output chirp
    let pre = Complex64::new(0.0, -dx * dx / (lambda * z));
    let q2: Vec<Complex64> = xo
        .iter()
        .map(|&x| Complex64::from_polar(1.0, k * x * x / (2.0 * z)))
        .collect();
    for (i, row) in data.chunks_mut(m).enumerate() {
        for (b, qx) in row.iter_mut().zip(&q2) {
            *b *= pre * qx * q2[i];
        }
    }
    Ok(ComplexField {
        grid: *out,
        wavelength: lambda,
        data,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_rejects_bad_sizes() {
        assert_eq!(Grid::new(1.0, 255), Err(WaveError::InvalidGridSize(255)));
        assert_eq!(Grid::new(1.0, 384), Err(WaveError::InvalidGridSize(384)));
        assert_eq!(Grid::new(1.0, 128), Err(WaveError::InvalidGridSize(128)));
        assert!(matches!(
            Grid::new(0.0, 256),
            Err(WaveError::InvalidWindow(_))
        ));
        assert!(Grid::new(1.0, 256).is_ok());
    }

    #[test]
    fn gaussian_has_unit_power() {
        let g = Grid::new(1.5, 256).unwrap();
        let f = gaussian_field(&g, &GaussianSpec::collimated(0.2), 800e-9).unwrap();
        assert!((f.power() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_size_guards() {
        let g = Grid::new(1.0, 256).unwrap();
        let cell = g.spacing();
        assert!(matches!(
            gaussian_field(&g, &GaussianSpec::collimated(3.9 * cell), 800e-9),
            Err(WaveError::GridTooCoarse { .. })
        ));
        assert!(matches!(
            gaussian_field(&g, &GaussianSpec::collimated(0.26), 800e-9),
            Err(WaveError::WindowTooSmall { .. })
        ));
    }

    #[test]
    fn q_parameter_roundtrip() {
        let s = GaussianSpec::curved(0.1748, -120e3);
        let back = GaussianSpec::from_q(s.q(800e-9), 800e-9);
        assert!((back.waist - s.waist).abs() < 1e-12);
        assert!((back.wavefront_radius / s.wavefront_radius - 1.0).abs() < 1e-9);
    }

    #[test]
    fn zero_distance_is_identity() {
        let g = Grid::new(1.0, 256).unwrap();
        let f = gaussian_field(&g, &GaussianSpec::collimated(0.1), 800e-9).unwrap();
        assert_eq!(propagate(&f, 0.0).unwrap(), f);
        assert!(matches!(
            propagate(&f, -1.0),
            Err(WaveError::InvalidDistance(_))
        ));
    }

    #[test]
    fn golden_finds_peak() {
        let x = golden_max(|x| -(x - 0.3) * (x - 0.3), -2.0, 2.0, 1e-9);
        assert!((x - 0.3).abs() < 1e-7);
    }

    #[test]
    fn guard_profile_shape() {
        let g = Grid::new(1.0, 256).unwrap();
        let m = guard_profile(&g);
        assert_eq!(m[128], 1.0);
        assert!(m[0] < 2e-3);
        assert!(m.iter().all(|&v| (0.0..=1.0).contains(&v)));
    }
}
