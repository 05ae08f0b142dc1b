//! Forward evaluation of weight vectors: array-factor gain, gain heatmaps,
//! peak direction, sidelobe levels and spiral target sweeps.

use std::collections::VecDeque;
use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::coupling::{hermitian_form, HermitianMatrix};
use crate::error::{Error, Result};
use crate::geometry::{dot, ArrayGeometry, Direction};

pub const DB_FLOOR: f64 = -80.0;
pub const DEFAULT_SPIRAL_TURNS: f64 = 6.0;

/// `10·log10(ratio)` clamped below at [`DB_FLOOR`].
pub fn to_db(ratio: f64) -> f64 {
    if ratio > 0.0 {
        (10.0 * ratio.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// Evaluates `|T(u)^H w|²` for many directions. Square grids use the
/// separable form `Σ_r e_y[r] Σ_c e_x[c] w[r, c]`, which needs `2·side`
/// exponentials per direction instead of `n`.
pub struct GainEvaluator<'a> {
    geometry: &'a ArrayGeometry,
    w: &'a DVector<Complex64>,
}

impl<'a> GainEvaluator<'a> {
    pub fn new(geometry: &'a ArrayGeometry, w: &'a DVector<Complex64>) -> Result<Self> {
        if w.len() != geometry.len() {
            return Err(Error::invalid(format!(
                "weight vector has {} entries, array has {} elements",
                w.len(),
                geometry.len()
            )));
        }
        if w.iter().all(|z| z.norm_sqr() == 0.0) {
            return Err(Error::invalid("weight vector is zero"));
        }
        Ok(Self { geometry, w })
    }

    pub fn gain(&self, direction: &Direction) -> f64 {
        let u = direction.unit();
        let k = self.geometry.wavenumber();
        match self.geometry.grid() {
            Some(grid) => {
                let side = grid.side;
                let half = (side as f64 - 1.0) / 2.0;
                let (kx, ky) = (k * u[0] * grid.spacing, k * u[1] * grid.spacing);
                let ex: Vec<Complex64> = (0..side).map(|c| Complex64::cis(kx * (c as f64 - half))).collect();
                let mut total = Complex64::new(0.0, 0.0);
                for r in 0..side {
                    let row = &self.w.as_slice()[r * side..(r + 1) * side];
                    let s: Complex64 = row.iter().zip(&ex).map(|(w, e)| w * e).sum();
                    total += Complex64::cis(ky * (r as f64 - half)) * s;
                }
                total.norm_sqr()
            }
            None => {
                let s: Complex64 = self
                    .geometry
                    .positions()
                    .iter()
                    .zip(self.w.iter())
                    .map(|(r, w)| Complex64::cis(k * dot(&u, r)) * w)
                    .sum();
                s.norm_sqr()
            }
        }
    }
}

/// `|T(direction)^H w|²`.
pub fn beam_gain(w: &DVector<Complex64>, geometry: &ArrayGeometry, direction: &Direction) -> Result<f64> {
    Ok(GainEvaluator::new(geometry, w)?.gain(direction))
}

/// Directivity `4π·gain / w^H B w` for a full-sphere `B`.
pub fn directivity(
    w: &DVector<Complex64>,
    geometry: &ArrayGeometry,
    b: &HermitianMatrix,
    direction: &Direction,
) -> Result<f64> {
    let gain = beam_gain(w, geometry, direction)?;
    let radiated = hermitian_form(b, w);
    if !(radiated > 0.0) {
        return Err(Error::Consistency(format!("non-positive radiated power {radiated:e}")));
    }
    Ok(4.0 * PI * gain / radiated)
}

/// Uniform sampling of one angular axis; `steps` points from `start` to
/// `end` inclusive (a single point sits at `start`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub start: f64,
    pub end: f64,
    pub steps: usize,
}

impl AxisSpec {
    pub fn new(start: f64, end: f64, steps: usize) -> Self {
        Self { start, end, steps }
    }

    pub fn step(&self) -> f64 {
        if self.steps > 1 {
            (self.end - self.start) / (self.steps - 1) as f64
        } else {
            0.0
        }
    }

    pub fn value(&self, i: usize) -> f64 {
        self.start + i as f64 * self.step()
    }

    /// Whether the axis covers a full turn, so the last sample repeats the first.
    fn wraps(&self) -> bool {
        self.steps > 1 && ((self.end - self.start).abs() - 2.0 * PI).abs() < 1e-9
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub theta_steps: usize,
    pub phi_steps: usize,
    #[serde(default = "default_theta_max_deg")]
    pub theta_max_deg: f64,
}

fn default_theta_max_deg() -> f64 {
    90.0
}

impl Default for GridSpec {
    /// Half-degree elevation by one-degree azimuth over the upper hemisphere.
    fn default() -> Self {
        Self {
            theta_steps: 181,
            phi_steps: 361,
            theta_max_deg: 90.0,
        }
    }
}

impl GridSpec {
    pub fn axes(&self) -> (AxisSpec, AxisSpec) {
        (
            AxisSpec::new(0.0, self.theta_max_deg.to_radians(), self.theta_steps),
            AxisSpec::new(0.0, 2.0 * PI, self.phi_steps),
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PatternEntry {
    pub direction: Direction,
    pub gain: f64,
    pub gain_db: f64,
}

/// Gain sampled on a regular (θ, φ) grid, θ-major.
#[derive(Debug, Clone)]
pub struct BeamPattern {
    pub theta: AxisSpec,
    pub phi: AxisSpec,
    gains: Vec<f64>,
    /// Largest sampled gain; dB values are relative to it.
    pub normalization: f64,
    argmax: usize,
}

impl BeamPattern {
    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn index(&self, it: usize, ip: usize) -> usize {
        it * self.phi.steps + ip
    }

    pub fn gain_at(&self, it: usize, ip: usize) -> f64 {
        self.gains[self.index(it, ip)]
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn direction(&self, idx: usize) -> Direction {
        let (it, ip) = (idx / self.phi.steps, idx % self.phi.steps);
        Direction::new(self.theta.value(it), self.phi.value(ip))
    }

    pub fn gain_db(&self, idx: usize) -> f64 {
        to_db(self.gains[idx] / self.normalization)
    }

    pub fn entry(&self, idx: usize) -> PatternEntry {
        PatternEntry {
            direction: self.direction(idx),
            gain: self.gains[idx],
            gain_db: self.gain_db(idx),
        }
    }

    pub fn entries(&self) -> impl Iterator<Item = PatternEntry> + '_ {
        (0..self.gains.len()).map(|i| self.entry(i))
    }

    pub fn argmax(&self) -> PatternEntry {
        self.entry(self.argmax)
    }

    pub fn argmax_index(&self) -> usize {
        self.argmax
    }

    /// CSV with header `theta_deg,phi_deg,gain_db`.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wr = csv::Writer::from_writer(out);
        let parse = |e: csv::Error| Error::Parse(e.to_string());
        wr.write_record(["theta_deg", "phi_deg", "gain_db"]).map_err(parse)?;
        for e in self.entries() {
            wr.write_record([
                format!("{:.4}", e.direction.theta.to_degrees()),
                format!("{:.4}", e.direction.phi.to_degrees()),
                format!("{:.6}", e.gain_db),
            ])
            .map_err(parse)?;
        }
        wr.flush().map_err(|e| Error::Parse(e.to_string()))?;
        Ok(())
    }

    /// Heatmap raster with φ across and θ down, optionally marking a target.
    pub fn to_svg(&self, title: &str, marker: Option<&Direction>) -> String {
        svg_heatmap(self, title, marker)
    }
}

/// Evaluate the gain on a regular grid. Work is split over the available
/// cores by θ rows.
pub fn pattern_grid(
    w: &DVector<Complex64>,
    geometry: &ArrayGeometry,
    theta: AxisSpec,
    phi: AxisSpec,
) -> Result<BeamPattern> {
    if theta.steps == 0 || phi.steps == 0 {
        return Err(Error::invalid("pattern grid needs at least one step per axis"));
    }
    let eval = GainEvaluator::new(geometry, w)?;
    let rows = theta.steps;
    let threads = std::thread::available_parallelism().map_or(1, |n| n.get()).min(rows);
    let mut gains = vec![0.0; rows * phi.steps];
    let chunk_rows = rows.div_ceil(threads);
    std::thread::scope(|s| {
        for (c, chunk) in gains.chunks_mut(chunk_rows * phi.steps).enumerate() {
            let eval = &eval;
            s.spawn(move || {
                for (local, g) in chunk.iter_mut().enumerate() {
                    let it = c * chunk_rows + local / phi.steps;
                    let ip = local % phi.steps;
                    *g = eval.gain(&Direction::new(theta.value(it), phi.value(ip)));
                }
            });
        }
    });
    // first strictly larger value wins, so ties resolve to smaller θ then φ
    let mut argmax = 0;
    for (i, &g) in gains.iter().enumerate() {
        if g > gains[argmax] * (1.0 + 1e-12) {
            argmax = i;
        }
    }
    let normalization = gains[argmax];
    Ok(BeamPattern {
        theta,
        phi,
        gains,
        normalization: if normalization > 0.0 { normalization } else { 1.0 },
        argmax,
    })
}

pub fn default_pattern(w: &DVector<Complex64>, geometry: &ArrayGeometry, grid: &GridSpec) -> Result<BeamPattern> {
    let (t, p) = grid.axes();
    pattern_grid(w, geometry, t, p)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaxGain {
    pub direction: Direction,
    pub gain: f64,
    /// `10·log10(gain)`, absolute array-factor power.
    pub gain_db: f64,
}

const INV_PHI: f64 = 0.618_033_988_749_894_9;

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, iters: usize) -> (f64, f64) {
    let mut x1 = hi - INV_PHI * (hi - lo);
    let mut x2 = lo + INV_PHI * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..iters {
        if f1 >= f2 {
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
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

/// Grid argmax refined by one golden-section pass along θ and then φ, each
/// confined to one grid cell on either side. A refinement is kept only if it
/// improves on the grid value.
pub fn max_gain_direction(pattern: &BeamPattern, w: &DVector<Complex64>, geometry: &ArrayGeometry) -> Result<MaxGain> {
    if pattern.is_empty() {
        return Err(Error::invalid("empty pattern"));
    }
    let eval = GainEvaluator::new(geometry, w)?;
    let best = pattern.argmax();
    let mut dir = best.direction;
    let mut gain = best.gain;

    let dt = pattern.theta.step().abs();
    if dt > 0.0 {
        let lo = (dir.theta - dt).max(pattern.theta.start.min(pattern.theta.end)).max(0.0);
        let hi = (dir.theta + dt).min(pattern.theta.start.max(pattern.theta.end)).min(PI);
        let phi = dir.phi;
        let (t, g) = golden_max(|t| eval.gain(&Direction::new(t, phi)), lo, hi, 40);
        if g > gain {
            dir.theta = t;
            gain = g;
        }
    }
    let dp = pattern.phi.step().abs();
    if dp > 0.0 && dir.theta > 0.0 {
        let theta = dir.theta;
        let (p, g) = golden_max(|p| eval.gain(&Direction::new(theta, p)), dir.phi - dp, dir.phi + dp, 40);
        if g > gain {
            dir.phi = p;
            gain = g;
        }
    }
    dir.phi = dir.phi.rem_euclid(2.0 * PI);
    Ok(MaxGain {
        direction: dir,
        gain,
        gain_db: to_db_abs(gain),
    })
}

fn to_db_abs(gain: f64) -> f64 {
    if gain > 0.0 {
        10.0 * gain.log10()
    } else {
        f64::NEG_INFINITY
    }
}

/// Archimedean spiral: `s_i = (i+1)/count`, `θ = s·theta_max`,
/// `φ = 2π·turns·s mod 2π`.
pub fn spiral_targets(count: usize, theta_max: f64, turns: f64) -> Result<Vec<Direction>> {
    if count == 0 {
        return Err(Error::invalid("spiral needs at least one target"));
    }
    if !(theta_max > 0.0 && theta_max <= FRAC_PI_2) {
        return Err(Error::invalid(format!("theta_max must lie in (0, π/2], got {theta_max}")));
    }
    if !(turns > 0.0 && turns.is_finite()) {
        return Err(Error::invalid(format!("turn count must be positive, got {turns}")));
    }
    Ok((0..count)
        .map(|i| {
            let s = (i + 1) as f64 / count as f64;
            Direction::new(s * theta_max, (2.0 * PI * turns * s).rem_euclid(2.0 * PI))
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SidelobeReport {
    /// Highest gain outside the main lobe, dB relative to the peak.
    pub peak_sidelobe_db: f64,
    pub sidelobe_direction: Option<Direction>,
    /// Grid cells assigned to the main lobe.
    pub main_lobe_cells: usize,
}

/// The main lobe is every cell reachable from the peak by steps that never
/// increase the gain (4-neighbourhood, φ wrapping when the axis spans a full
/// turn). Everything else counts as sidelobe.
pub fn sidelobe_analysis(pattern: &BeamPattern) -> SidelobeReport {
    let (nt, np) = (pattern.theta.steps, pattern.phi.steps);
    let wraps = pattern.phi.wraps();
    let mut in_main = vec![false; pattern.len()];
    let mut queue = VecDeque::new();
    let start = pattern.argmax_index();
    in_main[start] = true;
    queue.push_back(start);
    while let Some(idx) = queue.pop_front() {
        let (it, ip) = (idx / np, idx % np);
        let g = pattern.gains()[idx];
        let mut neighbours = Vec::with_capacity(6);
        if it > 0 {
            neighbours.push(pattern.index(it - 1, ip));
        }
        if it + 1 < nt {
            neighbours.push(pattern.index(it + 1, ip));
        }
        if ip > 0 {
            neighbours.push(pattern.index(it, ip - 1));
        } else if wraps {
            // last sample duplicates the first; step to the one before it
            neighbours.push(pattern.index(it, np - 2));
        }
        if ip + 1 < np {
            neighbours.push(pattern.index(it, ip + 1));
        } else if wraps {
            neighbours.push(pattern.index(it, 1));
        }
        if wraps && (ip == 0 || ip == np - 1) {
            neighbours.push(pattern.index(it, np - 1 - ip));
        }
        for n in neighbours {
            if !in_main[n] && pattern.gains()[n] <= g {
                in_main[n] = true;
                queue.push_back(n);
            }
        }
    }
    let mut side: Option<usize> = None;
    for (i, &g) in pattern.gains().iter().enumerate() {
        if !in_main[i] && side.is_none_or(|s| g > pattern.gains()[s]) {
            side = Some(i);
        }
    }
    SidelobeReport {
        peak_sidelobe_db: side.map_or(DB_FLOOR, |s| pattern.gain_db(s)),
        sidelobe_direction: side.map(|s| pattern.direction(s)),
        main_lobe_cells: in_main.iter().filter(|&&m| m).count(),
    }
}

fn colormap(v: f64) -> (u8, u8, u8) {
    // dark blue → cyan → yellow → red
    let stops = [(0.0, (20, 20, 90)), (0.35, (30, 150, 200)), (0.7, (240, 220, 60)), (1.0, (200, 30, 30))];
    let v = v.clamp(0.0, 1.0);
    for w in stops.windows(2) {
        let ((a, ca), (b, cb)) = (w[0], w[1]);
        if v <= b {
            let s = (v - a) / (b - a);
            let lerp = |x: u8, y: u8| (x as f64 + s * (y as f64 - x as f64)).round() as u8;
            return (lerp(ca.0, cb.0), lerp(ca.1, cb.1), lerp(ca.2, cb.2));
        }
    }
    stops[3].1
}

const SVG_RANGE_DB: f64 = 40.0;
const SVG_LEVELS: f64 = 48.0;

fn svg_heatmap(pattern: &BeamPattern, title: &str, marker: Option<&Direction>) -> String {
    use std::fmt::Write as _;
    let (nt, np) = (pattern.theta.steps, pattern.phi.steps);
    let cell = (720.0 / np as f64).clamp(1.0, 24.0);
    let (ox, oy) = (60.0, 40.0);
    let (w, h) = (np as f64 * cell, nt as f64 * cell);
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{}" height="{}" shape-rendering="crispEdges">"#,
        w + ox + 80.0,
        h + oy + 50.0
    );
    let _ = writeln!(s, r#"<rect width="100%" height="100%" fill="white"/>"#);
    let _ = writeln!(s, r#"<text x="{ox}" y="24" font-family="sans-serif" font-size="14">{}</text>"#, escape(title));
    let level = |idx: usize| {
        let db = pattern.gain_db(idx).max(-SVG_RANGE_DB);
        ((db + SVG_RANGE_DB) / SVG_RANGE_DB * SVG_LEVELS).round()
    };
    // merge horizontal runs of equal colour to keep the file small
    for it in 0..nt {
        let mut ip = 0;
        while ip < np {
            let lv = level(pattern.index(it, ip));
            let mut end = ip + 1;
            while end < np && level(pattern.index(it, end)) == lv {
                end += 1;
            }
            let (r, g, b) = colormap(lv / SVG_LEVELS);
            let _ = writeln!(
                s,
                r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="rgb({r},{g},{b})"/>"#,
                ox + ip as f64 * cell,
                oy + it as f64 * cell,
                (end - ip) as f64 * cell,
                cell
            );
            ip = end;
        }
    }
    let axis_x = |phi: f64| ox + (phi - pattern.phi.start) / (pattern.phi.end - pattern.phi.start).max(1e-300) * (w - cell) + cell / 2.0;
    let axis_y = |theta: f64| oy + (theta - pattern.theta.start) / (pattern.theta.end - pattern.theta.start).max(1e-300) * (h - cell) + cell / 2.0;
    if let Some(m) = marker {
        let _ = writeln!(
            s,
            r#"<circle cx="{:.2}" cy="{:.2}" r="8" fill="none" stroke="red" stroke-width="2"/>"#,
            axis_x(m.phi.rem_euclid(2.0 * PI)),
            axis_y(m.theta)
        );
    }
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">phi {:.0}..{:.0} deg</text>"#,
        ox,
        oy + h + 20.0,
        pattern.phi.start.to_degrees(),
        pattern.phi.end.to_degrees()
    );
    let _ = writeln!(
        s,
        r#"<text x="{:.1}" y="{:.1}" font-family="sans-serif" font-size="12">theta {:.0}..{:.0} deg (top to bottom); colour 0 to -{SVG_RANGE_DB} dB</text>"#,
        ox,
        oy + h + 38.0,
        pattern.theta.start.to_degrees(),
        pattern.theta.end.to_degrees()
    );
    s.push_str("</svg>\n");
    s
}

fn escape(text: &str) -> String {
    text.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}
