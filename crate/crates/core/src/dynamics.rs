//! Closed-channel elimination, eigenphase sums, and resonance search.
//!
//! At total energy E the channel list splits into open (E >= E_j) and
//! closed sets. Imposing exponential decay in every closed channel
//! reduces the short-range K to the physical open-channel block,
//!
//!   K_phys = K_oo - K_oc (K_cc + tan beta_c)^{-1} K_co,
//!
//! with beta_c the generalized phase of each closed channel at its own
//! epsilon_j = E - E_j. Poles of the eliminated block sweep pi-rises
//! through the eigenphase sum; each rise is an autoionizing resonance,
//! located and fitted as a Lorentzian in d tau / dE with peak height
//! 2 / Gamma.

use crate::error::{Error, Result};
use crate::gqdt;
use nalgebra::{Complex, DMatrix};
use num_complex::Complex64;
use std::f64::consts::PI;

/// One scattering channel for the elimination step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScatteringChannel {
    /// Threshold energy (hartree).
    pub threshold: f64,
    /// Generalized partial wave of the channel.
    pub lambda: Complex64,
}

/// Open/closed split of a channel list at one total energy.
#[derive(Debug, Clone)]
pub struct ChannelPartition {
    pub energy: f64,
    /// Indices of open channels (E >= threshold).
    pub open: Vec<usize>,
    /// Indices of closed channels.
    pub closed: Vec<usize>,
    /// kappa_j = sqrt(2 (E_j - E)) for each closed channel, aligned
    /// with `closed`.
    pub kappas: Vec<f64>,
}

impl ChannelPartition {
    pub fn at(channels: &[ScatteringChannel], energy: f64) -> Self {
        let mut open = Vec::new();
        let mut closed = Vec::new();
        let mut kappas = Vec::new();
        for (j, ch) in channels.iter().enumerate() {
            if energy >= ch.threshold {
                open.push(j);
            } else {
                closed.push(j);
                kappas.push((2.0 * (ch.threshold - energy)).sqrt());
            }
        }
        Self {
            energy,
            open,
            closed,
            kappas,
        }
    }
}

/// Physical open-channel reaction matrix at total energy E.
pub fn eliminate_closed(
    k: &DMatrix<f64>,
    channels: &[ScatteringChannel],
    energy: f64,
) -> Result<DMatrix<f64>> {
    let part = ChannelPartition::at(channels, energy);
    if part.open.is_empty() {
        return Err(Error::Config(format!(
            "no open channels at E = {energy}"
        )));
    }
    let no = part.open.len();
    let nc = part.closed.len();
    let k_oo = DMatrix::from_fn(no, no, |a, b| k[(part.open[a], part.open[b])]);
    if nc == 0 {
        return Ok(k_oo);
    }
    let k_oc = DMatrix::from_fn(no, nc, |a, b| k[(part.open[a], part.closed[b])]);
    let mut d = DMatrix::from_fn(nc, nc, |a, b| k[(part.closed[a], part.closed[b])]);
    for (jc, &j) in part.closed.iter().enumerate() {
        let eps = gqdt::ClosedChannelEnergy::new(energy - channels[j].threshold)
            .expect("closed channel has negative epsilon");
        let beta = gqdt::beta(eps, channels[j].lambda).beta;
        d[(jc, jc)] += beta.tan();
    }
    let k_co = k_oc.transpose();
    let solved = d
        .lu()
        .solve(&k_co)
        .ok_or(Error::SingularElimination(energy))?;
    let k_phys = &k_oo - &k_oc * solved;
    if k_phys.iter().any(|x| !x.is_finite()) {
        return Err(Error::SingularElimination(energy));
    }
    Ok(k_phys)
}

/// S = (1 + iK)(1 - iK)^{-1} from a real symmetric physical K.
pub fn s_matrix(k_phys: &DMatrix<f64>) -> Result<DMatrix<Complex<f64>>> {
    let n = k_phys.nrows();
    let i = Complex::new(0.0, 1.0);
    let kc = k_phys.map(|x| Complex::new(x, 0.0));
    let plus = DMatrix::identity(n, n) + &kc * i;
    let minus = DMatrix::identity(n, n) - &kc * i;
    minus
        .lu()
        .solve(&plus.transpose())
        .map(|m| m.transpose())
        .ok_or(Error::SingularElimination(f64::NAN))
}

/// max |S^dagger S - 1|.
pub fn unitarity_defect(s: &DMatrix<Complex<f64>>) -> f64 {
    let n = s.nrows();
    let probe = s.adjoint() * s - DMatrix::identity(n, n);
    probe.iter().fold(0.0_f64, |m, z| m.max(z.norm()))
}

/// Raw eigenphase sum of one physical K (each term in (-pi/2, pi/2)).
pub fn eigenphase(k_phys: &DMatrix<f64>) -> f64 {
    let sym = 0.5 * (k_phys + k_phys.transpose());
    sym.symmetric_eigen()
        .eigenvalues
        .iter()
        .map(|x| x.atan())
        .sum()
}

/// Unwrap a raw eigenphase grid into a continuous tau(E). Each raw
/// value is defined modulo pi; a fold is trusted only when the
/// adjusted step stays clearly inside the half-period, otherwise the
/// grid is undersampled.
pub fn eigenphase_sum(raw: &[f64]) -> Result<Vec<f64>> {
    const MARGIN: f64 = 0.2;
    let mut out = Vec::with_capacity(raw.len());
    for (i, &t) in raw.iter().enumerate() {
        if i == 0 {
            out.push(t);
            continue;
        }
        let prev = out[i - 1];
        let adjusted = t + PI * ((prev - t) / PI).round();
        if (adjusted - prev).abs() >= PI / 2.0 - MARGIN {
            return Err(Error::Undersampled(format!(
                "eigenphase step {:.3} at grid index {i}",
                adjusted - prev
            )));
        }
        out.push(adjusted);
    }
    Ok(out)
}

/// An energy-independent short-range K over fixed channels; energy
/// dependence enters through the closed-channel elimination.
#[derive(Debug, Clone)]
pub struct EliminationProblem {
    pub k: DMatrix<f64>,
    pub channels: Vec<ScatteringChannel>,
}

impl EliminationProblem {
    pub fn new(k: DMatrix<f64>, channels: Vec<ScatteringChannel>) -> Result<Self> {
        if k.nrows() != channels.len() || !k.is_square() {
            return Err(Error::Config(format!(
                "K is {}x{} but there are {} channels",
                k.nrows(),
                k.ncols(),
                channels.len()
            )));
        }
        Ok(Self { k, channels })
    }

    /// Physical K, retrying once with the documented 1e-12 relative
    /// energy nudge when the elimination lands exactly on a pole.
    pub fn k_phys(&self, energy: f64) -> Result<DMatrix<f64>> {
        match eliminate_closed(&self.k, &self.channels, energy) {
            Err(Error::SingularElimination(_)) => {
                let nudge = 1e-12 * energy.abs().max(1e-6);
                eliminate_closed(&self.k, &self.channels, energy + nudge)
            }
            other => other,
        }
    }

    /// Raw eigenphase sum at one energy.
    pub fn tau_raw(&self, energy: f64) -> Result<f64> {
        Ok(eigenphase(&self.k_phys(energy)?))
    }

    /// d tau / dE by a symmetric difference with pairwise mod-pi
    /// reduction (tau is defined modulo pi branch shifts).
    pub fn tau_slope(&self, energy: f64, h: f64) -> Result<f64> {
        let a = self.tau_raw(energy - h)?;
        let b = self.tau_raw(energy + h)?;
        let mut d = b - a;
        d -= PI * (d / PI).round();
        // the physical rise is positive across a resonance; fold back
        if d < -PI / 4.0 {
            d += PI;
        }
        Ok(d / (2.0 * h))
    }
}

/// One autoionizing resonance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Resonance {
    /// Position U_a (hartree).
    pub position: f64,
    /// Width Gamma_a (hartree), from the fitted peak height 2/Gamma.
    pub width: f64,
    /// Channel-list index of the closed channel it rides on.
    pub parent_channel: usize,
    /// RMS Lorentzian-fit residual relative to the peak height.
    pub fit_quality: f64,
    /// Set when a neighbor closer than 3x the larger width forced a
    /// merged fit.
    pub overlapping: bool,
}

/// Scan controls for the resonance search.
#[derive(Debug, Clone, Copy)]
pub struct SearchSpec {
    /// Base grid points across the window.
    pub scan_points: usize,
    /// Effective-quantum-number ceiling per closed channel; the
    /// unresolved Rydberg pileup within 1/(2 nu_max^2) of a threshold
    /// is excluded.
    pub nu_max: f64,
}

/// Locate and fit autoionizing resonances inside a window.
///
/// The window is split at channel thresholds and at the edges of each
/// channel's unresolved pileup band (nu above nu_max). Inside a
/// segment, channels sitting in their own pileup band are spectators:
/// their Rydberg series is denser than anything resolvable at desk
/// scale, so they are dropped from the elimination there and only the
/// resolvable closed set is searched.
pub fn find_resonances(
    problem: &EliminationProblem,
    window: (f64, f64),
    spec: SearchSpec,
) -> Result<Vec<Resonance>> {
    let (e_lo, e_hi) = window;
    if !(e_lo < e_hi) {
        return Err(Error::Config(format!("bad window ({e_lo}, {e_hi})")));
    }
    let pileup = 0.5 / (spec.nu_max * spec.nu_max);
    let mut cuts = vec![e_lo, e_hi];
    for ch in &problem.channels {
        for edge in [ch.threshold - pileup, ch.threshold] {
            if edge > e_lo && edge < e_hi {
                cuts.push(edge);
            }
        }
    }
    cuts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    cuts.dedup();

    let mut out = Vec::new();
    for seg in cuts.windows(2) {
        let (a, b) = (seg[0], seg[1]);
        if b - a <= 0.0 {
            continue;
        }
        // active set: open throughout, or closed with nu <= nu_max
        let active: Vec<usize> = problem
            .channels
            .iter()
            .enumerate()
            .filter(|(_, ch)| ch.threshold <= a || ch.threshold - pileup >= b)
            .map(|(j, _)| j)
            .collect();
        let has_open = active.iter().any(|&j| problem.channels[j].threshold <= a);
        let has_closed = active.iter().any(|&j| problem.channels[j].threshold >= b);
        if !has_open || !has_closed {
            continue;
        }
        let sub_k = DMatrix::from_fn(active.len(), active.len(), |x, y| {
            problem.k[(active[x], active[y])]
        });
        let sub_channels: Vec<ScatteringChannel> =
            active.iter().map(|&j| problem.channels[j]).collect();
        let sub = EliminationProblem {
            k: sub_k,
            channels: sub_channels,
        };
        let mut found = Vec::new();
        scan_segment(&sub, a, b, &spec, &mut found)?;
        for mut r in found {
            r.parent_channel = active[r.parent_channel];
            out.push(r);
        }
    }
    out.sort_by(|x, y| x.position.partial_cmp(&y.position).unwrap());
    Ok(out)
}

/// Resonances inside one threshold-free segment: the poles of the
/// eliminated block are the roots of det(K_cc + tan beta_c) = 0. The
/// tan poles of each closed channel (beta_j at odd half-integer pi)
/// partition the segment into intervals where the determinant is
/// continuous; sign changes inside each interval are bisected to give
/// candidates, which are then sharpened and Lorentzian-fitted on
/// d tau / dE.
fn scan_segment(
    problem: &EliminationProblem,
    e_lo: f64,
    e_hi: f64,
    spec: &SearchSpec,
    out: &mut Vec<Resonance>,
) -> Result<()> {
    let pad = 1e-12 * (e_hi - e_lo).abs().max(1e-9);
    let (a, b) = (e_lo + pad, e_hi - pad);
    let closed: Vec<usize> = problem
        .channels
        .iter()
        .enumerate()
        .filter(|(_, ch)| ch.threshold >= e_hi)
        .map(|(j, _)| j)
        .collect();
    if closed.is_empty() {
        return Ok(());
    }

    // determinant of the closed-closed block with its tan terms
    let det_d = |energy: f64| -> f64 {
        let nc = closed.len();
        let mut d = DMatrix::from_fn(nc, nc, |x, y| problem.k[(closed[x], closed[y])]);
        for (jc, &j) in closed.iter().enumerate() {
            let eps = gqdt::ClosedChannelEnergy::new(energy - problem.channels[j].threshold)
                .expect("closed channel");
            d[(jc, jc)] += gqdt::beta(eps, problem.channels[j].lambda).beta.tan();
        }
        d.determinant()
    };

    // boundaries: segment edges plus every tan pole inside
    let mut boundaries = vec![a, b];
    for &j in &closed {
        let ch = &problem.channels[j];
        let beta_at = |e: f64| {
            gqdt::beta(
                gqdt::ClosedChannelEnergy::new(e - ch.threshold).expect("closed"),
                ch.lambda,
            )
            .beta
        };
        let (ba, bb) = (beta_at(a), beta_at(b));
        let mut k = (ba / PI - 0.5).ceil() as i64;
        while (k as f64 + 0.5) * PI < bb {
            let target = (k as f64 + 0.5) * PI;
            // bisect the monotone beta for the pole energy
            let (mut lo, mut hi) = (a, b);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if mid == lo || mid == hi {
                    break;
                }
                if beta_at(mid) < target {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            boundaries.push(0.5 * (lo + hi));
            k += 1;
        }
    }
    boundaries.sort_by(|x, y| x.partial_cmp(y).unwrap());
    boundaries.dedup();

    // density floor: a few determinant samples per interval, more when
    // the caller asked for a fine scan
    let mut roots = Vec::new();
    for win in boundaries.windows(2) {
        let (x, y) = (win[0], win[1]);
        let width = y - x;
        if width <= 0.0 {
            continue;
        }
        let n_s = ((width / (b - a)) * spec.scan_points as f64).ceil().max(8.0) as usize;
        let shrink = 1e-4 * width;
        let mut prev_e = x + shrink;
        let mut prev_d = det_d(prev_e);
        for i in 1..=n_s {
            let e = x + shrink + (width - 2.0 * shrink) * i as f64 / n_s as f64;
            let de = det_d(e);
            if prev_d.is_finite() && de.is_finite() && prev_d * de < 0.0 {
                let (mut lo, mut hi) = (prev_e, e);
                let mut flo = prev_d;
                for _ in 0..200 {
                    let mid = 0.5 * (lo + hi);
                    if mid == lo || mid == hi {
                        break;
                    }
                    let fm = det_d(mid);
                    if flo * fm <= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                        flo = fm;
                    }
                }
                roots.push(0.5 * (lo + hi));
            }
            prev_e = e;
            prev_d = de;
        }
    }

    // sharpen each candidate on d tau / dE and fit; a "width"
    // comparable to the segment itself means the determinant root has
    // no residue (decoupled channel) and carries no tau rise
    let mut fitted = Vec::new();
    for &root in &roots {
        let (center, gamma0) = sharpen_peak(problem, root, a, b)?;
        if !(gamma0 > 0.0) || gamma0 >= 0.2 * (b - a) {
            continue;
        }
        let sane = |w: f64| w.is_finite() && w > 0.0 && w < 0.2 * (b - a);
        match fit_lorentzian(problem, center, gamma0, a, b) {
            Ok((position, width, quality)) if sane(width) => fitted.push(Resonance {
                position,
                width,
                parent_channel: attribute_parent(problem, position),
                fit_quality: quality,
                overlapping: false,
            }),
            // degenerate fit: fall back to the peak-rule estimate
            _ => fitted.push(Resonance {
                position: center,
                width: gamma0,
                parent_channel: attribute_parent(problem, center),
                fit_quality: f64::INFINITY,
                overlapping: true,
            }),
        }
    }
    // overlap flags: closer than 3x the larger width
    for i in 0..fitted.len() {
        for j in 0..fitted.len() {
            if i != j {
                let sep = (fitted[i].position - fitted[j].position).abs();
                if sep < 3.0 * fitted[i].width.max(fitted[j].width) {
                    fitted[i].overlapping = true;
                }
            }
        }
    }
    out.extend(fitted);
    Ok(())
}

/// Parabolic sharpening of the d tau / dE maximum near a determinant
/// root; returns (center, width estimate from the 2/Gamma peak rule).
fn sharpen_peak(
    problem: &EliminationProblem,
    root: f64,
    seg_lo: f64,
    seg_hi: f64,
) -> Result<(f64, f64)> {
    let segment_width = seg_hi - seg_lo;
    let mut center = root;
    let wander = 0.05 * segment_width;
    let h0 = (1e-7 * segment_width).max(1e-13 * root.abs().max(1e-6));
    // every slope probe stays inside the segment, where the channel
    // partition this problem was built for is valid
    let probe = |e: f64, h: f64| -> Result<f64> {
        let e = e.clamp(seg_lo + 2.0 * h, seg_hi - 2.0 * h);
        problem.tau_slope(e, h)
    };
    let mut gamma = (2.0 / probe(center, h0)?.max(1e-12)).min(segment_width);
    for _ in 0..4 {
        let h = (gamma / 16.0).max(1e-13 * center.abs().max(1e-6));
        let d = gamma / 8.0;
        let (gl, gc, gr) = (
            probe(center - d, h)?,
            probe(center, h)?,
            probe(center + d, h)?,
        );
        let denom = gl - 2.0 * gc + gr;
        if denom < 0.0 {
            let shift = 0.5 * d * (gl - gr) / denom;
            center += shift.clamp(-d, d);
        }
        center = center.clamp(root - wander, root + wander).clamp(seg_lo, seg_hi);
        let g_best = probe(center, h)?.max(1e-12);
        gamma = (2.0 / g_best).min(segment_width);
    }
    Ok((center, gamma))
}

/// Least-squares Lorentzian b + h / (1 + ((E-U)/(G/2))^2) on the slope
/// samples around a peak; returns (U, Gamma = 2/h, rms/h).
fn fit_lorentzian(
    problem: &EliminationProblem,
    center: f64,
    gamma0: f64,
    seg_lo: f64,
    seg_hi: f64,
) -> Result<(f64, f64, f64)> {
    let n = 13usize;
    let fd = (gamma0 / 16.0).max(1e-13 * center.abs().max(1e-6));
    // asymmetric sampling near segment edges
    let lo = (center - 2.5 * gamma0).max(seg_lo + 2.0 * fd);
    let hi = (center + 2.5 * gamma0).min(seg_hi - 2.0 * fd);
    if !(hi > lo) {
        return Err(Error::Config("fit window collapsed at segment edge".into()));
    }
    let mut es = Vec::with_capacity(n);
    let mut gs = Vec::with_capacity(n);
    for i in 0..n {
        let e = lo + (hi - lo) * i as f64 / (n - 1) as f64;
        es.push(e);
        gs.push(problem.tau_slope(e, fd)?);
    }
    let mut u = center;
    let mut w = 0.5 * gamma0; // half width
    let mut h = gs.iter().cloned().fold(0.0_f64, f64::max);
    let mut b = gs.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0);
    h -= b;
    for _ in 0..60 {
        // Gauss-Newton step on (u, w, h, b)
        let mut jtj = [[0.0_f64; 4]; 4];
        let mut jtr = [0.0_f64; 4];
        for (e, g) in es.iter().zip(&gs) {
            let x = (e - u) / w;
            let den = 1.0 + x * x;
            let model = b + h / den;
            let r = g - model;
            let dmdu = 2.0 * h * x / (w * den * den);
            let dmdw = 2.0 * h * x * x / (w * den * den);
            let dmdh = 1.0 / den;
            let dmdb = 1.0;
            let grad = [dmdu, dmdw, dmdh, dmdb];
            for p in 0..4 {
                jtr[p] += grad[p] * r;
                for q in 0..4 {
                    jtj[p][q] += grad[p] * grad[q];
                }
            }
        }
        // solve the 4x4 normal equations with a small ridge
        let mut m = DMatrix::zeros(4, 4);
        let mut v = nalgebra::DVector::zeros(4);
        for p in 0..4 {
            v[p] = jtr[p];
            for q in 0..4 {
                m[(p, q)] = jtj[p][q];
            }
            m[(p, p)] *= 1.0 + 1e-10;
        }
        let step = match m.lu().solve(&v) {
            Some(s) => s,
            None => break,
        };
        u += step[0].clamp(-w, w);
        w = (w + step[1].clamp(-0.5 * w, 0.5 * w)).abs().max(1e-300);
        h = (h + step[2]).max(1e-300);
        b += step[3];
        if step.iter().map(|x| x.abs()).fold(0.0_f64, f64::max) < 1e-14 * h.max(1.0) {
            break;
        }
    }
    let mut ss = 0.0;
    for (e, g) in es.iter().zip(&gs) {
        let x = (e - u) / w;
        let r = g - b - h / (1.0 + x * x);
        ss += r * r;
    }
    let quality = (ss / n as f64).sqrt() / h;
    Ok((u, 2.0 / h, quality))
}

/// Closest one-channel resonance condition among the closed channels:
/// the parent minimizes |sin(beta_j + atan(K_jj))|.
fn attribute_parent(problem: &EliminationProblem, energy: f64) -> usize {
    let mut best = (f64::INFINITY, 0usize);
    for (j, ch) in problem.channels.iter().enumerate() {
        if energy >= ch.threshold {
            continue;
        }
        let eps = gqdt::ClosedChannelEnergy::new(energy - ch.threshold).unwrap();
        let beta = gqdt::beta(eps, ch.lambda).beta;
        let score = (beta + problem.k[(j, j)].atan()).sin().abs();
        if score < best.0 {
            best = (score, j);
        }
    }
    best.1
}

/// Analytic Feshbach width estimate from a non-diagonal reaction
/// matrix element: Gamma ~ (2 / (pi n^3)) |K|^2.
pub fn width_estimate(k_offdiag: f64, n_eff: f64) -> f64 {
    2.0 / (PI * n_eff.powi(3)) * k_offdiag * k_offdiag
}
