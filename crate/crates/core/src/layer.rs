//! The shock-layer ODE system.
//!
//! Rows of the explicit first-order system, with `ũ = u - s`, `ρ = M/ũ`,
//! `|B⊥|² = B2² + B3²`:
//!
//! ```text
//! η u'   = |B⊥|²/2μe + M u - P + p_t
//! μ v'   = M v - B1 B2/μe - P2*
//! μ w'   = M w - B1 B3/μe - P3*
//! ũ B2'  = ζ2
//! ũ B3'  = ζ3
//! β ũ ζ2' = μe (E3 + ũ B2 - v B1) - χ B1 ζ3 - ζ2/(σ ũ)
//! β ũ ζ3' = μe (-E2 + ũ B3 - w B1) + χ B1 ζ2 - ζ3/(σ ũ)
//! κ_eff T' = H(y)
//! ```
//!
//! `H` is the energy first integral with the viscous stresses eliminated
//! through the momentum rows; see [`LayerSystem::first_integrals`] for the
//! integral itself.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{domain, Result, ShockError};
use crate::state::{
    effective_conductivity, effective_conductivity_slope, radiation_energy, radiation_pressure,
    EosSpec, EquationOfState, FluxConstants, ModelParams, PlasmaState, IDX_B2, IDX_B3, IDX_T,
    IDX_U, IDX_V, IDX_W, IDX_ZETA2, IDX_ZETA3, STATE_DIM,
};

/// An autonomous first-order system whose heteroclinic orbits are shock profiles.
pub trait LayerOde: Sync {
    fn dim(&self) -> usize;

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()>;

    fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        finite_difference_jacobian(self, y)
    }

    /// Whether `y` lies in the region where the system is defined.
    fn admissible(&self, y: &[f64]) -> bool {
        y.iter().all(|c| c.is_finite())
    }

    /// Component used for the section, width and orientation conventions.
    fn primary_component(&self) -> usize {
        0
    }

    /// Relative deviation of each first integral for a state and its derivative.
    fn integral_defects(&self, _y: &[f64], _dy: &[f64]) -> Vec<f64> {
        Vec::new()
    }
}

/// Systems whose dissipation coefficients can be rescaled by a common factor.
pub trait Dissipative: LayerOde + Sized {
    fn with_dissipation_scale(&self, scale: f64) -> Self;
}

/// Central-difference Jacobian with step `1e-6 · max(|y_j|, 1)`.
pub fn finite_difference_jacobian<S: LayerOde + ?Sized>(sys: &S, y: &[f64]) -> Result<DMatrix<f64>> {
    let n = sys.dim();
    let mut jac = DMatrix::zeros(n, n);
    let mut yp = y.to_vec();
    let mut fp = vec![0.0; n];
    let mut fm = vec![0.0; n];
    for j in 0..n {
        let h = 1e-6 * y[j].abs().max(1.0);
        yp[j] = y[j] + h;
        sys.rhs(&yp, &mut fp)?;
        yp[j] = y[j] - h;
        sys.rhs(&yp, &mut fm)?;
        yp[j] = y[j];
        for i in 0..n {
            jac[(i, j)] = (fp[i] - fm[i]) / (2.0 * h);
        }
    }
    Ok(jac)
}

/// The two-fluid shock-layer system for a fixed set of flux constants.
#[derive(Clone, Debug)]
pub struct LayerSystem {
    pub params: ModelParams,
    pub eos: EosSpec,
    pub constants: FluxConstants,
}

/// Closure values shared by the right-hand side and the first integrals.
struct Thermo {
    rel_u: f64,
    rho: f64,
    p_t: f64,
    energy: f64,
    e_rad: f64,
    kappa_eff: f64,
}

impl LayerSystem {
    /// Builds the system; every dissipation coefficient must be positive.
    pub fn new(params: ModelParams, eos: EosSpec, constants: FluxConstants) -> Result<Self> {
        params.validate()?;
        eos.validate()?;
        let positive = [
            ("eta", params.eta),
            ("mu_visc", params.mu_visc),
            ("kappa", params.kappa),
            ("beta", params.beta),
            ("sigma", params.sigma),
        ];
        for (name, value) in positive {
            if !(value > 0.0) {
                return Err(ShockError::SingularMassMatrix(format!(
                    "{name} = {value}; the explicit layer system needs it strictly positive"
                )));
            }
        }
        if !(constants.m > 0.0) {
            return Err(domain(format!("mass flux must be positive, got {}", constants.m)));
        }
        Ok(Self { params, eos, constants })
    }

    fn thermo(&self, s: &PlasmaState) -> Result<Thermo> {
        let rel_u = s.u - self.constants.shock_speed;
        if !(rel_u > 0.0) || !rel_u.is_finite() {
            return Err(domain(format!("u - s must be positive, got {rel_u}")));
        }
        if !(s.t > 0.0) || !s.t.is_finite() {
            return Err(domain(format!("temperature must be positive, got {}", s.t)));
        }
        let rho = self.constants.m / rel_u;
        Ok(Thermo {
            rel_u,
            rho,
            p_t: self.eos.pressure(rho, s.t) + radiation_pressure(s.t, &self.params),
            energy: self.eos.internal_energy(rho, s.t),
            e_rad: radiation_energy(s.t, &self.params),
            kappa_eff: effective_conductivity(s.t, &self.params),
        })
    }

    /// Energy bracket `H(y)` with viscous stresses already eliminated.
    fn energy_bracket(&self, s: &PlasmaState, th: &Thermo) -> f64 {
        let p = &self.params;
        let c = &self.constants;
        let mu_e = p.mu_e;
        let b_perp2 = s.b2 * s.b2 + s.b3 * s.b3;
        c.m * (th.energy + p.phi) + th.rel_u * th.e_rad
            - 0.5 * c.m * (s.u * s.u + s.v * s.v + s.w * s.w)
            - s.u * b_perp2 / (2.0 * mu_e)
            + p.b1 * (s.v * s.b2 + s.w * s.b3) / mu_e
            + c.p * s.u
            + c.p2 * s.v
            + c.p3 * s.w
            + p.beta * (s.zeta2 * s.zeta2 + s.zeta3 * s.zeta3) / (2.0 * mu_e * mu_e)
            + (c.e2 * s.b3 - c.e3 * s.b2) / mu_e
            + c.shock_speed * (b_perp2 - p.b1 * p.b1) / (2.0 * mu_e)
            - c.c
    }

    /// Right-hand side of the layer system.
    pub fn derivative(&self, s: &PlasmaState) -> Result<PlasmaState> {
        let th = self.thermo(s)?;
        let p = &self.params;
        let c = &self.constants;
        let mu_e = p.mu_e;
        let ru = th.rel_u;
        let b_perp2 = s.b2 * s.b2 + s.b3 * s.b3;
        let n2 = mu_e * (c.e3 + ru * s.b2 - s.v * p.b1) - p.chi * p.b1 * s.zeta3 - s.zeta2 / (p.sigma * ru);
        let n3 = mu_e * (-c.e2 + ru * s.b3 - s.w * p.b1) + p.chi * p.b1 * s.zeta2 - s.zeta3 / (p.sigma * ru);
        let d = PlasmaState {
            u: (b_perp2 / (2.0 * mu_e) + c.m * s.u - c.p + th.p_t) / p.eta,
            v: (c.m * s.v - p.b1 * s.b2 / mu_e - c.p2) / p.mu_visc,
            w: (c.m * s.w - p.b1 * s.b3 / mu_e - c.p3) / p.mu_visc,
            b2: s.zeta2 / ru,
            b3: s.zeta3 / ru,
            zeta2: n2 / (p.beta * ru),
            zeta3: n3 / (p.beta * ru),
            t: self.energy_bracket(s, &th) / th.kappa_eff,
        };
        if !d.is_finite() {
            return Err(domain("layer derivative is not finite"));
        }
        Ok(d)
    }

    /// Analytic Jacobian of [`LayerSystem::derivative`].
    pub fn analytic_jacobian(&self, s: &PlasmaState) -> Result<DMatrix<f64>> {
        let th = self.thermo(s)?;
        let p = &self.params;
        let c = &self.constants;
        let mu_e = p.mu_e;
        let ru = th.rel_u;
        let (p_rho, p_temp) = self.eos.pressure_partials(th.rho, s.t);
        let (e_rho, e_temp) = self.eos.energy_partials(th.rho, s.t);
        // dρ/du
        let rho_u = -th.rho / ru;
        let p_t_u = p_rho * rho_u;
        let p_t_t = p_temp + 4.0 * p.a_r * s.t.powi(3) / 3.0;
        let mut j = DMatrix::zeros(STATE_DIM, STATE_DIM);

        j[(IDX_U, IDX_U)] = (c.m + p_t_u) / p.eta;
        j[(IDX_U, IDX_B2)] = s.b2 / (mu_e * p.eta);
        j[(IDX_U, IDX_B3)] = s.b3 / (mu_e * p.eta);
        j[(IDX_U, IDX_T)] = p_t_t / p.eta;

        j[(IDX_V, IDX_V)] = c.m / p.mu_visc;
        j[(IDX_V, IDX_B2)] = -p.b1 / (mu_e * p.mu_visc);
        j[(IDX_W, IDX_W)] = c.m / p.mu_visc;
        j[(IDX_W, IDX_B3)] = -p.b1 / (mu_e * p.mu_visc);

        j[(IDX_B2, IDX_U)] = -s.zeta2 / (ru * ru);
        j[(IDX_B2, IDX_ZETA2)] = 1.0 / ru;
        j[(IDX_B3, IDX_U)] = -s.zeta3 / (ru * ru);
        j[(IDX_B3, IDX_ZETA3)] = 1.0 / ru;

        let n2 = mu_e * (c.e3 + ru * s.b2 - s.v * p.b1) - p.chi * p.b1 * s.zeta3 - s.zeta2 / (p.sigma * ru);
        let n3 = mu_e * (-c.e2 + ru * s.b3 - s.w * p.b1) + p.chi * p.b1 * s.zeta2 - s.zeta3 / (p.sigma * ru);
        let bu = p.beta * ru;
        j[(IDX_ZETA2, IDX_U)] = (mu_e * s.b2 + s.zeta2 / (p.sigma * ru * ru)) / bu - n2 / (bu * ru);
        j[(IDX_ZETA2, IDX_V)] = -mu_e * p.b1 / bu;
        j[(IDX_ZETA2, IDX_B2)] = mu_e / p.beta;
        j[(IDX_ZETA2, IDX_ZETA2)] = -1.0 / (p.sigma * ru * bu);
        j[(IDX_ZETA2, IDX_ZETA3)] = -p.chi * p.b1 / bu;
        j[(IDX_ZETA3, IDX_U)] = (mu_e * s.b3 + s.zeta3 / (p.sigma * ru * ru)) / bu - n3 / (bu * ru);
        j[(IDX_ZETA3, IDX_W)] = -mu_e * p.b1 / bu;
        j[(IDX_ZETA3, IDX_B3)] = mu_e / p.beta;
        j[(IDX_ZETA3, IDX_ZETA2)] = p.chi * p.b1 / bu;
        j[(IDX_ZETA3, IDX_ZETA3)] = -1.0 / (p.sigma * ru * bu);

        let b_perp2 = s.b2 * s.b2 + s.b3 * s.b3;
        let h = self.energy_bracket(s, &th);
        let k = th.kappa_eff;
        let dh = [
            c.m * e_rho * rho_u + th.e_rad - c.m * s.u - b_perp2 / (2.0 * mu_e) + c.p,
            -c.m * s.v + p.b1 * s.b2 / mu_e + c.p2,
            -c.m * s.w + p.b1 * s.b3 / mu_e + c.p3,
            (-s.u * s.b2 + p.b1 * s.v - c.e3 + c.shock_speed * s.b2) / mu_e,
            (-s.u * s.b3 + p.b1 * s.w + c.e2 + c.shock_speed * s.b3) / mu_e,
            p.beta * s.zeta2 / (mu_e * mu_e),
            p.beta * s.zeta3 / (mu_e * mu_e),
            c.m * e_temp + ru * 4.0 * p.a_r * s.t.powi(3),
        ];
        for (col, dh_col) in dh.iter().enumerate() {
            j[(IDX_T, col)] = dh_col / k;
        }
        j[(IDX_T, IDX_T)] = (dh[IDX_T] * k - h * effective_conductivity_slope(s.t, p)) / (k * k);
        Ok(j)
    }

    /// The five integrated conservation laws evaluated at a state and its
    /// derivative, in the order of [`FluxConstants::integrals`]. Along an
    /// exact profile each entry equals the corresponding constant.
    pub fn first_integrals(&self, s: &PlasmaState, d: &PlasmaState) -> Result<[f64; 5]> {
        let th = self.thermo(s)?;
        let p = &self.params;
        let c = &self.constants;
        let mu_e = p.mu_e;
        let b_perp2 = s.b2 * s.b2 + s.b3 * s.b3;
        let tau11 = -th.p_t + p.eta * d.u;
        let tau12 = p.mu_visc * d.v;
        let tau13 = p.mu_visc * d.w;
        let mass = th.rho * th.rel_u;
        let normal = mass * s.u - tau11 + b_perp2 / (2.0 * mu_e);
        let trans2 = mass * s.v - tau12 - p.b1 * s.b2 / mu_e;
        let trans3 = mass * s.w - tau13 - p.b1 * s.b3 / mu_e;
        let energy = mass * (th.energy + p.phi + 0.5 * (s.u * s.u + s.v * s.v + s.w * s.w))
            + th.rel_u * th.e_rad
            - s.u * tau11
            - s.v * tau12
            - s.w * tau13
            + p.beta * (s.zeta2 * s.zeta2 + s.zeta3 * s.zeta3) / (2.0 * mu_e * mu_e)
            - th.kappa_eff * d.t
            + (c.e2 * s.b3 - c.e3 * s.b2) / mu_e
            + c.shock_speed * (b_perp2 - p.b1 * p.b1) / (2.0 * mu_e);
        Ok([mass, normal, trans2, trans3, energy])
    }

    /// Magnitude scale for each first integral: the sum of absolute values of
    /// the terms composing it at `s` (with zero derivatives), floored by the
    /// constant itself.
    pub fn integral_scales(&self, s: &PlasmaState) -> Result<[f64; 5]> {
        let th = self.thermo(s)?;
        let p = &self.params;
        let c = &self.constants;
        let mu_e = p.mu_e;
        let b_perp2 = s.b2 * s.b2 + s.b3 * s.b3;
        let kin = 0.5 * (s.u * s.u + s.v * s.v + s.w * s.w);
        let raw = [
            c.m.abs(),
            (c.m * s.u).abs() + th.p_t.abs() + b_perp2 / (2.0 * mu_e),
            (c.m * s.v).abs() + (p.b1 * s.b2 / mu_e).abs() + c.p.abs(),
            (c.m * s.w).abs() + (p.b1 * s.b3 / mu_e).abs() + c.p.abs(),
            (c.m * (th.energy + p.phi)).abs()
                + c.m * kin
                + (th.rel_u * th.e_rad).abs()
                + (s.u * th.p_t).abs()
                + ((c.e2 * s.b3).abs() + (c.e3 * s.b2).abs()) / mu_e
                + (c.shock_speed * (b_perp2 + p.b1 * p.b1) / (2.0 * mu_e)).abs(),
        ];
        let consts = c.integrals();
        let mut out = [0.0; 5];
        for k in 0..5 {
            out[k] = raw[k].max(consts[k].abs()).max(f64::MIN_POSITIVE);
        }
        Ok(out)
    }

    /// Conduction current `(J1, J2, J3)` reconstructed from the ζ variables:
    /// `J3 = ζ2 / (μe ũ)`, `J2 = -ζ3 / (μe ũ)`, `J1 = 0`.
    pub fn current_density(&self, s: &PlasmaState) -> Result<[f64; 3]> {
        let ru = s.u - self.constants.shock_speed;
        if !(ru > 0.0) {
            return Err(domain("current needs u - s > 0"));
        }
        let mu_e = self.params.mu_e;
        Ok([0.0, -s.zeta3 / (mu_e * ru), s.zeta2 / (mu_e * ru)])
    }

    /// Same system written as `B(y) y' = f(y) + C` and evaluated through
    /// [`general_form_rhs`]. The energy row keeps the stress work terms, so
    /// `B` is not diagonal.
    pub fn general_form(&self) -> GeneralForm {
        let flux_sys = self.clone();
        let visc_sys = self.clone();
        let c = self.constants;
        let mu_e = self.params.mu_e;
        let constant = DVector::from_vec(vec![-c.p, -c.p2, -c.p3, 0.0, 0.0, mu_e * c.e3, -mu_e * c.e2, -c.c]);
        let adm_s = c.shock_speed;
        GeneralForm::new(
            STATE_DIM,
            move |y| flux_sys.general_flux(y),
            move |y| visc_sys.general_viscosity(y),
            0.0,
            constant,
        )
        .with_admissible(move |y| y.iter().all(|v| v.is_finite()) && y[IDX_U] - adm_s > 0.0 && y[IDX_T] > 0.0)
    }

    fn general_flux(&self, y: &[f64]) -> DVector<f64> {
        let p = &self.params;
        let c = &self.constants;
        let mu_e = p.mu_e;
        let (u, v, w, b2, b3, z2, z3, t) = (y[0], y[1], y[2], y[3], y[4], y[5], y[6], y[7]);
        let ru = u - c.shock_speed;
        let rho = c.m / ru;
        let p_t = self.eos.pressure(rho, t) + p.a_r * t * t * t * t / 3.0;
        let u_m = self.eos.internal_energy(rho, t);
        let e_rad = p.a_r * t * t * t * t;
        let bb = b2 * b2 + b3 * b3;
        DVector::from_vec(vec![
            bb / (2.0 * mu_e) + c.m * u + p_t,
            c.m * v - p.b1 * b2 / mu_e,
            c.m * w - p.b1 * b3 / mu_e,
            z2,
            z3,
            mu_e * (ru * b2 - v * p.b1) - p.chi * p.b1 * z3 - z2 / (p.sigma * ru),
            mu_e * (ru * b3 - w * p.b1) + p.chi * p.b1 * z2 - z3 / (p.sigma * ru),
            c.m * (u_m + p.phi + 0.5 * (u * u + v * v + w * w))
                + ru * e_rad
                + u * p_t
                + p.beta * (z2 * z2 + z3 * z3) / (2.0 * mu_e * mu_e)
                + (c.e2 * b3 - c.e3 * b2) / mu_e
                + c.shock_speed * (bb - p.b1 * p.b1) / (2.0 * mu_e),
        ])
    }

    fn general_viscosity(&self, y: &[f64]) -> DMatrix<f64> {
        let p = &self.params;
        let ru = y[IDX_U] - self.constants.shock_speed;
        let mut b = DMatrix::zeros(STATE_DIM, STATE_DIM);
        b[(IDX_U, IDX_U)] = p.eta;
        b[(IDX_V, IDX_V)] = p.mu_visc;
        b[(IDX_W, IDX_W)] = p.mu_visc;
        b[(IDX_B2, IDX_B2)] = ru;
        b[(IDX_B3, IDX_B3)] = ru;
        b[(IDX_ZETA2, IDX_ZETA2)] = p.beta * ru;
        b[(IDX_ZETA3, IDX_ZETA3)] = p.beta * ru;
        b[(IDX_T, IDX_U)] = y[IDX_U] * p.eta;
        b[(IDX_T, IDX_V)] = y[IDX_V] * p.mu_visc;
        b[(IDX_T, IDX_W)] = y[IDX_W] * p.mu_visc;
        b[(IDX_T, IDX_T)] = effective_conductivity(y[IDX_T], p);
        b
    }
}

impl LayerOde for LayerSystem {
    fn dim(&self) -> usize {
        STATE_DIM
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        let s = PlasmaState::from_slice(y)?;
        let d = self.derivative(&s)?;
        dy.copy_from_slice(&d.to_array());
        Ok(())
    }

    fn jacobian(&self, y: &[f64]) -> Result<DMatrix<f64>> {
        self.analytic_jacobian(&PlasmaState::from_slice(y)?)
    }

    fn admissible(&self, y: &[f64]) -> bool {
        y.len() == STATE_DIM
            && y.iter().all(|c| c.is_finite())
            && y[IDX_U] - self.constants.shock_speed > 0.0
            && y[IDX_T] > 0.0
    }

    fn primary_component(&self) -> usize {
        IDX_U
    }

    fn integral_defects(&self, y: &[f64], dy: &[f64]) -> Vec<f64> {
        let (Ok(s), Ok(d)) = (PlasmaState::from_slice(y), PlasmaState::from_slice(dy)) else {
            return vec![f64::INFINITY; 5];
        };
        match (self.first_integrals(&s, &d), self.integral_scales(&s)) {
            (Ok(vals), Ok(scales)) => {
                let consts = self.constants.integrals();
                (0..5).map(|k| (vals[k] - consts[k]).abs() / scales[k]).collect()
            }
            _ => vec![f64::INFINITY; 5],
        }
    }
}

impl Dissipative for LayerSystem {
    /// Multiplies `η, μ, κ, β` and the resistivity `1/σ` by `scale`.
    fn with_dissipation_scale(&self, scale: f64) -> Self {
        let mut out = self.clone();
        out.params.eta *= scale;
        out.params.mu_visc *= scale;
        out.params.kappa *= scale;
        out.params.d_r *= scale;
        out.params.beta *= scale;
        out.params.sigma /= scale;
        out
    }
}

type FluxFn = Arc<dyn Fn(&[f64]) -> DVector<f64> + Send + Sync>;
type ViscFn = Arc<dyn Fn(&[f64]) -> DMatrix<f64> + Send + Sync>;
type AdmissibleFn = Arc<dyn Fn(&[f64]) -> bool + Send + Sync>;

/// Conservation-form layer system `B(y) y' = f(y) - s y + C`.
#[derive(Clone)]
pub struct GeneralForm {
    dim: usize,
    flux: FluxFn,
    visc: ViscFn,
    admissible: Option<AdmissibleFn>,
    pub shock_speed: f64,
    pub constant: DVector<f64>,
    /// Multiplier applied to the viscosity matrix.
    pub visc_scale: f64,
    primary: usize,
}

impl std::fmt::Debug for GeneralForm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GeneralForm")
            .field("dim", &self.dim)
            .field("shock_speed", &self.shock_speed)
            .field("constant", &self.constant)
            .field("visc_scale", &self.visc_scale)
            .finish()
    }
}

/// Condition number above which the viscosity matrix is treated as singular.
pub const MAX_VISCOSITY_CONDITION: f64 = 1e12;

/// `B(y)⁻¹ (f(y) - s y + C)`.
pub fn general_form_rhs(
    y: &[f64],
    flux: impl Fn(&[f64]) -> DVector<f64>,
    visc: impl Fn(&[f64]) -> DMatrix<f64>,
    shock_speed: f64,
    constant: &DVector<f64>,
) -> Result<DVector<f64>> {
    let g = flux(y) - DVector::from_column_slice(y) * shock_speed + constant;
    let b = visc(y);
    let sv = b.clone().singular_values();
    let (smax, smin) = (sv.max(), sv.min());
    let condition = if smin > 0.0 { smax / smin } else { f64::INFINITY };
    if !(condition <= MAX_VISCOSITY_CONDITION) {
        return Err(ShockError::SingularViscosity { condition });
    }
    b.lu().solve(&g).ok_or(ShockError::SingularViscosity { condition })
}

impl GeneralForm {
    pub fn new(
        dim: usize,
        flux: impl Fn(&[f64]) -> DVector<f64> + Send + Sync + 'static,
        visc: impl Fn(&[f64]) -> DMatrix<f64> + Send + Sync + 'static,
        shock_speed: f64,
        constant: DVector<f64>,
    ) -> Self {
        assert_eq!(constant.len(), dim, "constant vector has wrong dimension");
        Self {
            dim,
            flux: Arc::new(flux),
            visc: Arc::new(visc),
            admissible: None,
            shock_speed,
            constant,
            visc_scale: 1.0,
            primary: 0,
        }
    }

    pub fn with_admissible(mut self, f: impl Fn(&[f64]) -> bool + Send + Sync + 'static) -> Self {
        self.admissible = Some(Arc::new(f));
        self
    }

    pub fn with_primary(mut self, component: usize) -> Self {
        self.primary = component;
        self
    }

    pub fn flux(&self, y: &[f64]) -> DVector<f64> {
        (self.flux)(y)
    }

    pub fn viscosity(&self, y: &[f64]) -> DMatrix<f64> {
        (self.visc)(y) * self.visc_scale
    }

    /// `f(y) - s y + C`, which vanishes at rest points.
    pub fn residual(&self, y: &[f64]) -> DVector<f64> {
        (self.flux)(y) - DVector::from_column_slice(y) * self.shock_speed + &self.constant
    }

    pub fn evaluate(&self, y: &[f64]) -> Result<DVector<f64>> {
        general_form_rhs(y, |z| (self.flux)(z), |z| self.viscosity(z), self.shock_speed, &self.constant)
    }
}

impl LayerOde for GeneralForm {
    fn dim(&self) -> usize {
        self.dim
    }

    fn rhs(&self, y: &[f64], dy: &mut [f64]) -> Result<()> {
        if !self.admissible(y) {
            return Err(domain("state outside the admissible region"));
        }
        let v = self.evaluate(y)?;
        dy.copy_from_slice(v.as_slice());
        Ok(())
    }

    fn admissible(&self, y: &[f64]) -> bool {
        y.iter().all(|c| c.is_finite()) && self.admissible.as_ref().is_none_or(|f| f(y))
    }

    fn primary_component(&self) -> usize {
        self.primary
    }

    fn integral_defects(&self, y: &[f64], dy: &[f64]) -> Vec<f64> {
        // B y' - (f - s y) = C along an exact orbit.
        let b = self.viscosity(y);
        let lhs = &b * DVector::from_column_slice(dy) - (self.flux)(y) + DVector::from_column_slice(y) * self.shock_speed;
        let fl = (self.flux)(y);
        (0..self.dim)
            .map(|i| {
                let scale = fl[i].abs().max(self.constant[i].abs()).max((self.shock_speed * y[i]).abs()).max(1e-300);
                (lhs[i] - self.constant[i]).abs() / scale
            })
            .collect()
    }
}

impl Dissipative for GeneralForm {
    fn with_dissipation_scale(&self, scale: f64) -> Self {
        let mut out = self.clone();
        out.visc_scale *= scale;
        out
    }
}

/// Viscous Burgers equation `u_t + (u²/2)_x = ε u_xx` as a one-dimensional
/// layer system for the shock `u_left → u_right` (`u_left > u_right`).
pub fn burgers_embedding(u_left: f64, u_right: f64, viscosity: f64) -> GeneralForm {
    let s = 0.5 * (u_left + u_right);
    let c = -(0.5 * u_left * u_left - s * u_left);
    GeneralForm::new(
        1,
        |y| DVector::from_element(1, 0.5 * y[0] * y[0]),
        move |_| DMatrix::from_element(1, 1, viscosity),
        s,
        DVector::from_element(1, c),
    )
}

/// Closed-form Burgers traveling wave centred at `x = 0`.
pub fn burgers_profile(u_left: f64, u_right: f64, viscosity: f64, x: f64) -> f64 {
    let mean = 0.5 * (u_left + u_right);
    let half = 0.5 * (u_left - u_right);
    mean - half * ((u_left - u_right) * x / (4.0 * viscosity)).tanh()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn magnetized_system() -> LayerSystem {
        let params = ModelParams {
            b1: 0.7,
            eta: 1.3,
            mu_visc: 0.8,
            kappa: 1.1,
            beta: 0.6,
            sigma: 2.0,
            chi: 0.4,
            a_r: 0.05,
            d_r: 0.3,
            phi: 0.2,
            mu_e: 1.2,
            ..ModelParams::default()
        };
        let constants = FluxConstants {
            m: 1.5,
            p: 4.0,
            p2: 0.3,
            p3: -0.2,
            c: 2.5,
            e2: 0.1,
            e3: -0.4,
            shock_speed: 0.0,
        };
        LayerSystem::new(params, EosSpec::ideal_gas(1.0, 5.0 / 3.0), constants).unwrap()
    }

    fn sample_state() -> PlasmaState {
        PlasmaState { u: 1.3, v: 0.2, w: -0.1, b2: 0.5, b3: -0.3, zeta2: 0.07, zeta3: -0.04, t: 0.9 }
    }

    #[test]
    fn rejects_zero_dissipation() {
        let sys = magnetized_system();
        for field in ["eta", "kappa", "beta"] {
            let mut p = sys.params.clone();
            match field {
                "eta" => p.eta = 0.0,
                "kappa" => p.kappa = 0.0,
                _ => p.beta = 0.0,
            }
            let err = LayerSystem::new(p, sys.eos.clone(), sys.constants).unwrap_err();
            assert!(matches!(err, ShockError::SingularMassMatrix(_)), "{field}: {err}");
        }
    }

    #[test]
    fn rhs_rejects_inadmissible_states() {
        let sys = magnetized_system();
        let mut s = sample_state();
        s.u = 0.0;
        assert!(sys.derivative(&s).is_err());
        let mut s = sample_state();
        s.t = -1.0;
        assert!(sys.derivative(&s).is_err());
    }

    #[test]
    fn linear_terms_match_hand_values() {
        let sys = magnetized_system();
        let jac = sys.analytic_jacobian(&sample_state()).unwrap();
        assert_eq!(jac[(IDX_V, IDX_V)], 1.5 / 0.8);
        assert_eq!(jac[(IDX_W, IDX_W)], 1.5 / 0.8);
        assert_eq!(jac[(IDX_V, IDX_B2)], -0.7 / (1.2 * 0.8));
        assert_eq!(jac[(IDX_B2, IDX_ZETA2)], 1.0 / 1.3);
    }

    #[test]
    fn first_integrals_reproduce_constants() {
        let sys = magnetized_system();
        let s = sample_state();
        let d = sys.derivative(&s).unwrap();
        let vals = sys.first_integrals(&s, &d).unwrap();
        let scales = sys.integral_scales(&s).unwrap();
        for (k, (v, c)) in vals.iter().zip(sys.constants.integrals()).enumerate() {
            assert!((v - c).abs() <= 1e-13 * scales[k], "integral {k}: {v} vs {c}");
        }
    }

    #[test]
    fn currents_have_no_normal_component() {
        let sys = magnetized_system();
        let s = sample_state();
        let j = sys.current_density(&s).unwrap();
        assert_eq!(j[0], 0.0);
        let d = sys.derivative(&s).unwrap();
        // μe J3 = dB2/dx and μe J2 = -dB3/dx
        assert!((sys.params.mu_e * j[2] - d.b2).abs() < 1e-15);
        assert!((sys.params.mu_e * j[1] + d.b3).abs() < 1e-15);
    }

    #[test]
    fn general_form_linear_rest_point() {
        // identity viscosity, f(y) = A y, rest point at -(A - sI)^{-1} C
        let a = DMatrix::from_row_slice(2, 2, &[2.0, 1.0, 0.5, 3.0]);
        let a2 = a.clone();
        let c = DVector::from_vec(vec![1.0, -2.0]);
        let s = 0.5;
        let sys = GeneralForm::new(
            2,
            move |y| &a2 * DVector::from_column_slice(y),
            |_| DMatrix::identity(2, 2),
            s,
            c.clone(),
        );
        let shifted = &a - DMatrix::identity(2, 2) * s;
        let rest = -shifted.lu().solve(&c).unwrap();
        let d = sys.evaluate(rest.as_slice()).unwrap();
        assert!(d.amax() < 1e-14);
    }

    #[test]
    fn general_form_singular_viscosity() {
        let err = general_form_rhs(
            &[1.0, 1.0],
            DVector::from_column_slice,
            |_| DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]),
            0.0,
            &DVector::zeros(2),
        )
        .unwrap_err();
        assert!(matches!(err, ShockError::SingularViscosity { .. }));
    }

    #[test]
    fn burgers_closed_form_satisfies_ode() {
        let (ul, ur, eps) = (2.0, 0.5, 0.3);
        let sys = burgers_embedding(ul, ur, eps);
        for &x in &[-2.0, -0.3, 0.0, 0.4, 1.7] {
            let u = burgers_profile(ul, ur, eps, x);
            let h = 1e-5;
            let fd = (burgers_profile(ul, ur, eps, x + h) - burgers_profile(ul, ur, eps, x - h)) / (2.0 * h);
            let d = sys.evaluate(&[u]).unwrap()[0];
            assert!((d - fd).abs() < 1e-8, "x={x}: {d} vs {fd}");
        }
        // slope at the midpoint
        let d = sys.evaluate(&[0.5 * (ul + ur)]).unwrap()[0];
        assert!((d + (ul - ur).powi(2) / (8.0 * eps)).abs() < 1e-14);
    }

    #[test]
    fn dissipation_scaling() {
        let sys = magnetized_system();
        let scaled = sys.with_dissipation_scale(0.5);
        assert_eq!(scaled.params.eta, sys.params.eta * 0.5);
        assert_eq!(scaled.params.sigma, sys.params.sigma * 2.0);
        assert_eq!(scaled.params.chi, sys.params.chi);
    }
}
