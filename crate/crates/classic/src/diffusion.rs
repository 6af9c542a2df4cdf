//! Navier-Stokes style inpainting lifted to one-hot label channels.
//!
//! Every static class gets its own `[0, 1]` channel. Inside the unknown
//! region each channel evolves by an explicit step mixing the isophote
//! transport term `∇(Δu)·∇⊥u` with plain diffusion `Δu`. The mix follows a
//! linear ramp over the iteration budget: transport dominates the first half
//! and diffusion the second, so the scheme settles into a harmonic fill.
//! Known pixels are Dirichlet data; image borders are reflecting.

use seminpaint_core::{ClassTaxonomy, InpaintMask, LabelMap};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiffusionParams {
    pub dt: f64,
    pub max_iters: usize,
    /// Stop once the largest per-sweep channel change falls below this.
    pub residual_tol: f64,
    /// Weight of the transport term relative to diffusion; 0 gives pure diffusion.
    pub transport_weight: f64,
}

impl Default for DiffusionParams {
    fn default() -> Self {
        Self {
            dt: 0.1,
            max_iters: 2000,
            residual_tol: 1e-4,
            transport_weight: 1.0,
        }
    }
}

impl DiffusionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt <= 0.25) {
            return Err(Error::InvalidDiffusion(format!("dt = {} is not in (0, 0.25]", self.dt)));
        }
        if self.residual_tol.is_nan() || self.residual_tol <= 0.0 {
            return Err(Error::InvalidDiffusion("residual_tol must be positive".into()));
        }
        if !(self.transport_weight >= 0.0 && self.transport_weight.is_finite()) {
            return Err(Error::InvalidDiffusion(
                "transport_weight must be finite and >= 0".into(),
            ));
        }
        if self.max_iters == 0 {
            return Err(Error::InvalidDiffusion("max_iters must be at least 1".into()));
        }
        Ok(())
    }

    /// (transport, diffusion) weights at iteration `k`.
    fn weights(&self, k: usize) -> (f64, f64) {
        let remaining = 1.0 - k as f64 / self.max_iters as f64;
        let transport = self.transport_weight * remaining;
        let diffusion = 1.0 - self.transport_weight.min(1.0) * remaining;
        (transport, diffusion)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DiffusionReport {
    pub map: LabelMap,
    pub iterations: usize,
    pub converged: bool,
    pub residual: f64,
}

/// Per-pixel neighbor indices with reflecting borders: left, right, up, down.
fn neighbors(i: usize, w: usize, h: usize) -> [usize; 4] {
    let (x, y) = (i % w, i / w);
    [
        if x > 0 { i - 1 } else { i },
        if x + 1 < w { i + 1 } else { i },
        if y > 0 { i - w } else { i },
        if y + 1 < h { i + w } else { i },
    ]
}

pub fn inpaint_navier_stokes(
    m: &LabelMap,
    mask: &InpaintMask,
    tax: &ClassTaxonomy,
    params: &DiffusionParams,
) -> Result<LabelMap> {
    Ok(inpaint_navier_stokes_report(m, mask, tax, params)?.map)
}

/// Like [`inpaint_navier_stokes`], also reporting convergence. Running out
/// of iterations is not an error.
pub fn inpaint_navier_stokes_report(
    m: &LabelMap,
    mask: &InpaintMask,
    tax: &ClassTaxonomy,
    params: &DiffusionParams,
) -> Result<DiffusionReport> {
    params.validate()?;
    crate::check_inputs(m, mask)?;
    if mask.is_all_clear() {
        return Ok(DiffusionReport {
            map: m.clone(),
            iterations: 0,
            converged: true,
            residual: 0.0,
        });
    }
    let (w, h) = m.dims();
    let n = w * h;
    let channels = tax.num_static();
    // unknown region: the mask plus any pixel without a static label
    let unknown: Vec<bool> = (0..n).map(|i| mask.data()[i] || !tax.is_static(m.data()[i])).collect();
    if unknown.iter().all(|&u| u) {
        return Err(Error::NoStaticContext);
    }
    let domain: Vec<usize> = (0..n).filter(|&i| unknown[i]).collect();
    let nbrs: Vec<[usize; 4]> = domain.iter().map(|&i| neighbors(i, w, h)).collect();
    // transport needs the Laplacian one pixel beyond the domain
    let mut in_band = unknown.clone();
    for nb in &nbrs {
        for &j in nb {
            in_band[j] = true;
        }
    }
    let band: Vec<usize> = (0..n).filter(|&i| in_band[i]).collect();
    let band_nbrs: Vec<[usize; 4]> = band.iter().map(|&i| neighbors(i, w, h)).collect();

    let mut u = vec![vec![0.0f64; n]; channels];
    for i in 0..n {
        if !unknown[i] {
            let c = tax.static_channel(m.data()[i]).expect("known pixels are static");
            u[c][i] = 1.0;
        }
    }
    // channels absent from the band stay identically zero
    let active: Vec<usize> = (0..channels)
        .filter(|&c| band.iter().any(|&i| u[c][i] != 0.0))
        .collect();

    let mut lap = vec![0.0f64; n];
    let mut next = vec![0.0f64; domain.len()];
    let mut iterations = 0;
    let mut residual = f64::INFINITY;
    let mut converged = false;
    for k in 0..params.max_iters {
        let (wt, wd) = params.weights(k);
        residual = 0.0;
        for &c in &active {
            let uc = &mut u[c];
            if wt > 0.0 {
                for (&i, nb) in band.iter().zip(&band_nbrs) {
                    lap[i] = uc[nb[0]] + uc[nb[1]] + uc[nb[2]] + uc[nb[3]] - 4.0 * uc[i];
                }
            } else {
                for (&i, nb) in domain.iter().zip(&nbrs) {
                    lap[i] = uc[nb[0]] + uc[nb[1]] + uc[nb[2]] + uc[nb[3]] - 4.0 * uc[i];
                }
            }
            for (slot, (&i, nb)) in next.iter_mut().zip(domain.iter().zip(&nbrs)) {
                let mut rate = wd * lap[i];
                if wt > 0.0 {
                    let lx = 0.5 * (lap[nb[1]] - lap[nb[0]]);
                    let ly = 0.5 * (lap[nb[3]] - lap[nb[2]]);
                    let ux = 0.5 * (uc[nb[1]] - uc[nb[0]]);
                    let uy = 0.5 * (uc[nb[3]] - uc[nb[2]]);
                    rate += wt * (-lx * uy + ly * ux);
                }
                *slot = (uc[i] + params.dt * rate).clamp(0.0, 1.0);
            }
            for (&v, &i) in next.iter().zip(&domain) {
                residual = f64::max(residual, (v - uc[i]).abs());
                uc[i] = v;
            }
        }
        iterations = k + 1;
        if residual < params.residual_tol && wd >= wt {
            converged = true;
            break;
        }
    }

    let mut out = m.clone();
    for (i, label) in out.data_mut().iter_mut().enumerate() {
        if !mask.data()[i] {
            continue;
        }
        let mut best = 0;
        for c in 1..channels {
            if u[c][i] > u[best][i] {
                best = c;
            }
        }
        *label = tax.static_ids()[best];
    }
    Ok(DiffusionReport {
        map: out,
        iterations,
        converged,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn carla() -> ClassTaxonomy {
        ClassTaxonomy::builtin("carla9").unwrap()
    }

    #[test]
    fn params_are_validated() {
        let tax = carla();
        let m = LabelMap::filled(4, 4, 1);
        let mask = InpaintMask::from_fn(4, 4, |x, y| x == 1 && y == 1);
        for bad in [
            DiffusionParams {
                dt: 0.3,
                ..Default::default()
            },
            DiffusionParams {
                dt: 0.0,
                ..Default::default()
            },
            DiffusionParams {
                residual_tol: 0.0,
                ..Default::default()
            },
            DiffusionParams {
                transport_weight: -1.0,
                ..Default::default()
            },
        ] {
            assert!(matches!(
                inpaint_navier_stokes(&m, &mask, &tax, &bad),
                Err(Error::InvalidDiffusion(_))
            ));
        }
    }

    #[test]
    fn ramp_weights() {
        let p = DiffusionParams::default();
        assert_eq!(p.weights(0), (1.0, 0.0));
        let (t, d) = p.weights(1000);
        assert!((t - 0.5).abs() < 1e-12 && (d - 0.5).abs() < 1e-12);
        let pure = DiffusionParams {
            transport_weight: 0.0,
            ..p
        };
        assert_eq!(pure.weights(0), (0.0, 1.0));
    }

    #[test]
    fn constant_boundary_gives_constant_fill() {
        let tax = carla();
        let road = tax.id_of("Road").unwrap();
        let car = tax.id_of("Car").unwrap();
        let mut m = LabelMap::filled(40, 30, road);
        let mask = InpaintMask::from_fn(40, 30, |x, y| (8..30).contains(&x) && (5..25).contains(&y));
        for y in 0..30 {
            for x in 0..40 {
                if mask.get(x, y) {
                    m.set(x, y, car);
                }
            }
        }
        for tw in [0.0, 1.0] {
            let params = DiffusionParams {
                transport_weight: tw,
                ..Default::default()
            };
            let out = inpaint_navier_stokes(&m, &mask, &tax, &params).unwrap();
            assert_eq!(out, LabelMap::filled(40, 30, road), "transport weight {tw}");
        }
    }

    #[test]
    fn empty_mask_is_identity() {
        let tax = carla();
        let m = LabelMap::from_fn(9, 7, |x, y| ((x + y) % 9) as u8);
        let out = inpaint_navier_stokes(&m, &InpaintMask::empty(9, 7), &tax, &Default::default()).unwrap();
        assert_eq!(out, m);
    }

    #[test]
    fn left_right_split() {
        let tax = carla();
        let (road, building) = (tax.id_of("Road").unwrap(), tax.id_of("Building").unwrap());
        let m = LabelMap::from_fn(24, 12, |x, _| if x < 12 { road } else { building });
        let mask = InpaintMask::from_fn(24, 12, |x, y| (4..20).contains(&x) && (2..10).contains(&y));
        let params = DiffusionParams {
            transport_weight: 0.0,
            dt: 0.25,
            max_iters: 5000,
            residual_tol: 1e-8,
        };
        let report = inpaint_navier_stokes_report(&m, &mask, &tax, &params).unwrap();
        assert!(report.converged);
        assert_eq!(report.map.get(5, 6), road);
        assert_eq!(report.map.get(18, 6), building);
    }

    #[test]
    fn non_convergence_is_reported() {
        let tax = carla();
        let m = LabelMap::from_fn(30, 30, |x, _| if x < 15 { 1 } else { 3 });
        let mask = InpaintMask::from_fn(30, 30, |x, y| (3..27).contains(&x) && (3..27).contains(&y));
        let params = DiffusionParams {
            max_iters: 3,
            ..Default::default()
        };
        let report = inpaint_navier_stokes_report(&m, &mask, &tax, &params).unwrap();
        assert!(!report.converged);
        assert_eq!(report.iterations, 3);
    }

    #[test]
    fn all_unknown_is_an_error() {
        let tax = carla();
        let m = LabelMap::filled(5, 5, 8);
        let mask = InpaintMask::from_fn(5, 5, |x, _| x < 2);
        assert!(matches!(
            inpaint_navier_stokes(&m, &mask, &tax, &Default::default()),
            Err(Error::NoStaticContext)
        ));
    }
}
