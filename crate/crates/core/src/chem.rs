//! Water autoionization chemistry.
//!
//! The only reaction in the channel is `H⁺ + OH⁻ ⇌ ∅` with forward rate `k_f`
//! (recombination) and reverse rate `k_r` (dissociation of water). At every
//! point of the channel the local pair of concentrations therefore obeys
//!
//! ```text
//! dC_H/dt = dC_OH/dt = −k_f·C_H·C_OH + k_r
//! ```
//!
//! which conserves the proton excess `C_H − C_OH` and relaxes to the ion
//! product `C_H·C_OH = k_r/k_f = k_w`.

use crate::error::{Error, Result};

/// Ion product of water at 25 °C, M².
pub const DEFAULT_KW: f64 = 1e-14;

/// Relative tolerance on `k_f·k_w = k_r`.
const CONSISTENCY_TOL: f64 = 1e-6;

/// Transmitted chemical.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Species {
    /// Strong acid, released as H⁺.
    Acid,
    /// Strong base, released as OH⁻.
    Base,
}

impl Species {
    pub fn name(self) -> &'static str {
        match self {
            Species::Acid => "acid",
            Species::Base => "base",
        }
    }
}

impl std::fmt::Display for Species {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for Species {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "acid" | "h" | "h+" => Ok(Species::Acid),
            "base" | "oh" | "oh-" => Ok(Species::Base),
            other => Err(Error::Config(format!("unknown species `{other}`"))),
        }
    }
}

/// Physical constants of the channel (25 °C values).
///
/// Units: diffusion in cm²/s, `k_f` in 1/(M·s), `k_r` in M/s, `k_w` in M²,
/// velocity in cm/s, cross-section in cm².
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelParams {
    pub d_h: f64,
    pub d_oh: f64,
    pub k_f: f64,
    pub k_r: f64,
    pub k_w: f64,
    pub velocity: f64,
    /// Nominal channel cross-section used to turn a 1-D line density
    /// (mol/cm) into a molar concentration.
    pub cross_section: f64,
    pub avogadro: f64,
}

impl Default for ChannelParams {
    fn default() -> Self {
        Self {
            d_h: 9.31e-5,
            d_oh: 5.03e-5,
            k_f: 1.4e11,
            k_r: 1.4e-3,
            k_w: DEFAULT_KW,
            velocity: 0.0,
            cross_section: 1.0,
            avogadro: 6.022e23,
        }
    }
}

impl ChannelParams {
    /// Default constants, validated.
    pub fn new() -> Result<Self> {
        let p = Self::default();
        p.validate()?;
        Ok(p)
    }

    pub fn with_velocity(mut self, velocity: f64) -> Self {
        self.velocity = velocity;
        self
    }

    /// The same channel with the recombination reaction switched off
    /// (`k_f = k_r = 0`). Ions then only diffuse and drift.
    pub fn without_reaction(mut self) -> Self {
        self.k_f = 0.0;
        self.k_r = 0.0;
        self
    }

    /// Whether the recombination reaction is active.
    pub fn reacts(&self) -> bool {
        !(self.k_f == 0.0 && self.k_r == 0.0)
    }

    /// Neutral-water concentration of either ion, `√k_w`.
    pub fn background(&self) -> f64 {
        self.k_w.sqrt()
    }

    pub fn diffusion(&self, species: Species) -> f64 {
        match species {
            Species::Acid => self.d_h,
            Species::Base => self.d_oh,
        }
    }

    pub fn max_diffusion(&self) -> f64 {
        self.d_h.max(self.d_oh)
    }

    /// Checks positivity of all constants and `k_f·k_w ≈ k_r`.
    ///
    /// `k_f = k_r = 0` is accepted as the reaction-free limit.
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("d_h", self.d_h),
            ("d_oh", self.d_oh),
            ("k_w", self.k_w),
            ("cross_section", self.cross_section),
            ("avogadro", self.avogadro),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::InvalidParams(format!(
                    "{name} must be finite and > 0, got {value}"
                )));
            }
        }
        if !self.velocity.is_finite() {
            return Err(Error::InvalidParams("velocity must be finite".into()));
        }
        if self.reacts() {
            for (name, value) in [("k_f", self.k_f), ("k_r", self.k_r)] {
                if !(value.is_finite() && value > 0.0) {
                    return Err(Error::InvalidParams(format!(
                        "{name} must be finite and > 0, got {value}"
                    )));
                }
            }
            let mismatch = (self.k_f * self.k_w - self.k_r).abs() / self.k_r;
            if mismatch > CONSISTENCY_TOL {
                return Err(Error::InvalidParams(format!(
                    "k_f·k_w = {:e} does not match k_r = {:e} (relative mismatch {mismatch:e})",
                    self.k_f * self.k_w,
                    self.k_r
                )));
            }
        }
        Ok(())
    }
}

/// Point-wise concentrations of H⁺ and OH⁻, in M.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IonPair {
    pub c_h: f64,
    pub c_oh: f64,
}

impl IonPair {
    pub fn new(c_h: f64, c_oh: f64) -> Result<Self> {
        let pair = Self { c_h, c_oh };
        if pair.is_valid() {
            Ok(pair)
        } else {
            Err(Error::Domain(format!(
                "ion concentrations must be finite and > 0, got ({c_h:e}, {c_oh:e})"
            )))
        }
    }

    pub fn is_valid(&self) -> bool {
        self.c_h.is_finite() && self.c_oh.is_finite() && self.c_h > 0.0 && self.c_oh > 0.0
    }

    /// Proton excess `c_h − c_oh`, the quantity the reaction conserves.
    pub fn excess(&self) -> f64 {
        self.c_h - self.c_oh
    }

    pub fn ph(&self) -> Result<f64> {
        ph_of(self.c_h)
    }
}

/// `pH = −log₁₀[H⁺]`.
pub fn ph_of(c_h: f64) -> Result<f64> {
    neg_log10(c_h, "H⁺")
}

/// `pOH = −log₁₀[OH⁻]`.
pub fn poh_of(c_oh: f64) -> Result<f64> {
    neg_log10(c_oh, "OH⁻")
}

fn neg_log10(c: f64, ion: &str) -> Result<f64> {
    if c > 0.0 && c.is_finite() {
        Ok(-c.log10())
    } else {
        Err(Error::Domain(format!(
            "{ion} concentration must be finite and > 0, got {c:e}"
        )))
    }
}

/// The unique positive pair with `c_h·c_oh = k_w` and `c_h − c_oh = excess`.
///
/// The minority ion is computed from `2·k_w / (|excess| + √(excess² + 4k_w))`
/// so it keeps full relative precision when it is many orders of magnitude
/// below the majority ion.
pub fn equilibrium_pair(excess: f64, k_w: f64) -> IonPair {
    let (minority, majority) = relaxed_minority(excess.abs(), k_w, None);
    orient(excess, minority, majority)
}

/// Solves the local recombination kinetics exactly over `dt` seconds.
///
/// With the excess `s = c_h − c_oh` fixed, the minority ion `m` obeys the
/// Riccati equation `dm/dt = −k_f·(m − m₊)(m − m₋)`, whose roots are the
/// equilibrium value `m₊ = 2K/(|s| + δ)` and `m₋ = m₊ − δ`, with
/// `K = k_r/k_f` and `δ = √(s² + 4K)`. Writing `u = m − m₊`,
///
/// ```text
/// u(t) = u₀·δ·e^(−k_f·δ·t) / (δ + u₀·(1 − e^(−k_f·δ·t)))
/// ```
///
/// The majority ion is recovered as `m + |s|`, so the excess is preserved up
/// to a single rounding and both outputs stay positive for any `dt ≥ 0`.
pub fn reaction_step_exact(state: IonPair, dt: f64, params: &ChannelParams) -> IonPair {
    if dt <= 0.0 || !params.reacts() {
        return state;
    }
    let s = state.excess();
    let k_eq = params.k_r / params.k_f;
    let m0 = state.c_h.min(state.c_oh);
    let (minority, majority) = relaxed_minority(s.abs(), k_eq, Some((m0, params.k_f * dt)));
    orient(s, minority, majority)
}

/// Returns `(minority, majority)` for excess magnitude `gap`.
///
/// Without `kinetics` this is the equilibrium. With `Some((m0, k_f·dt))` it
/// is the Riccati solution started from minority concentration `m0`.
fn relaxed_minority(gap: f64, k_eq: f64, kinetics: Option<(f64, f64)>) -> (f64, f64) {
    let delta = gap.hypot(2.0 * k_eq.sqrt());
    let m_eq = 2.0 * k_eq / (gap + delta);
    let minority = match kinetics {
        None => m_eq,
        Some((m0, kf_dt)) => {
            let u0 = m0 - m_eq;
            let x = kf_dt * delta;
            let decay = (-x).exp();
            let spent = -(-x).exp_m1();
            m_eq + u0 * delta * decay / (delta + u0 * spent)
        }
    };
    (minority, minority + gap)
}

fn orient(excess: f64, minority: f64, majority: f64) -> IonPair {
    if excess >= 0.0 {
        IonPair {
            c_h: majority,
            c_oh: minority,
        }
    } else {
        IonPair {
            c_h: minority,
            c_oh: majority,
        }
    }
}

/// Net effect of releasing acid and base at the same instant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetRelease {
    /// Dominant species, `None` for exact neutralization.
    pub species: Option<Species>,
    pub moles: f64,
}

/// Simultaneously released H⁺ and OH⁻ neutralize immediately; only the
/// surplus of the dominant species remains.
pub fn net_release(moles_acid: f64, moles_base: f64) -> Result<NetRelease> {
    if !(moles_acid >= 0.0 && moles_base >= 0.0) {
        return Err(Error::Domain(format!(
            "released amounts must be non-negative, got acid {moles_acid}, base {moles_base}"
        )));
    }
    let diff = moles_acid - moles_base;
    let species = if diff > 0.0 {
        Some(Species::Acid)
    } else if diff < 0.0 {
        Some(Species::Base)
    } else {
        None
    };
    Ok(NetRelease {
        species,
        moles: diff.abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs()
    }

    #[test]
    fn ph_values() {
        assert!((ph_of(1e-7).unwrap() - 7.0).abs() < 1e-12);
        assert!((ph_of(0.1).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(ph_of(1.0).unwrap(), 0.0);
        assert!(matches!(ph_of(0.0), Err(Error::Domain(_))));
        assert!(matches!(ph_of(-1e-3), Err(Error::Domain(_))));
        assert!(ph_of(f64::NAN).is_err());
    }

    #[test]
    fn poh_values() {
        assert!((poh_of(1e-7).unwrap() - 7.0).abs() < 1e-12);
        // partner of 0.1 M acid: k_w / 0.1
        assert!((poh_of(DEFAULT_KW / 0.1).unwrap() - 13.0).abs() < 1e-12);
        assert_eq!(poh_of(1.0).unwrap(), 0.0);
        assert!(poh_of(0.0).is_err());
    }

    #[test]
    fn equilibrium_examples() {
        let neutral = equilibrium_pair(0.0, DEFAULT_KW);
        assert!(rel(neutral.c_h, 1e-7) < 1e-12);
        assert!(rel(neutral.c_oh, 1e-7) < 1e-12);

        let basic = equilibrium_pair(-0.1, DEFAULT_KW);
        assert!(rel(basic.c_oh, 0.1) < 1e-11);
        assert!(rel(basic.c_h, 1e-13) < 1e-9);

        let acidic = equilibrium_pair(0.1, DEFAULT_KW);
        assert!(rel(acidic.c_h, 0.1) < 1e-11);
        assert!(rel(acidic.c_oh, 1e-13) < 1e-9);
        assert!((acidic.ph().unwrap() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn default_params_are_consistent() {
        let p = ChannelParams::new().unwrap();
        assert!(rel(p.k_f * 1e-7 * 1e-7, p.k_r) < 1e-12);
        assert!(ChannelParams::default().without_reaction().validate().is_ok());
    }

    #[test]
    fn inconsistent_params_rejected() {
        let base = ChannelParams::default();
        let p = ChannelParams { k_r: 2e-3, ..base };
        assert!(matches!(p.validate(), Err(Error::InvalidParams(_))));
        assert!(ChannelParams { d_h: 0.0, ..base }.validate().is_err());
        assert!(ChannelParams { k_f: 0.0, ..base }.validate().is_err());
    }

    #[test]
    fn reaction_fixed_point() {
        let p = ChannelParams::default();
        let eq = IonPair::new(1e-7, 1e-7).unwrap();
        for dt in [0.0, 1e-9, 1.0, 1e6] {
            let out = reaction_step_exact(eq, dt, &p);
            assert!(rel(out.c_h, 1e-7) < 1e-12, "dt={dt}");
            assert!(rel(out.c_oh, 1e-7) < 1e-12, "dt={dt}");
        }
    }

    #[test]
    fn reaction_neutralizes_equal_amounts() {
        let p = ChannelParams::default();
        let out = reaction_step_exact(IonPair::new(0.1, 0.1).unwrap(), 1.0, &p);
        assert!((out.c_h - 1e-7).abs() < 1e-9);
        assert!((out.c_oh - 1e-7).abs() < 1e-9);
    }

    #[test]
    fn tiny_step_is_identity() {
        let p = ChannelParams::default();
        let s = IonPair::new(1e-3, 1e-9).unwrap();
        let out = reaction_step_exact(s, 1e-12, &p);
        // the state vector barely moves; the minority ion alone moves by
        // (k_f·c_h·c_oh − k_r)·dt ≈ 1.4e-4 relative
        let moved = (out.c_h - s.c_h).hypot(out.c_oh - s.c_oh);
        assert!(moved / s.c_h.hypot(s.c_oh) < 1e-9);
        let rate = p.k_f * s.c_h * s.c_oh - p.k_r;
        assert!(rel(out.c_oh, s.c_oh - rate * 1e-12) < 1e-6);
        let out = reaction_step_exact(s, 1e-20, &p);
        assert!(rel(out.c_h, s.c_h) < 1e-12);
        assert!(rel(out.c_oh, s.c_oh) < 1e-9);
    }

    #[test]
    fn reaction_free_channel_is_identity() {
        let p = ChannelParams::default().without_reaction();
        let s = IonPair::new(0.5, 0.25).unwrap();
        assert_eq!(reaction_step_exact(s, 10.0, &p), s);
    }

    #[test]
    fn net_release_examples() {
        let r = net_release(0.001, 0.0).unwrap();
        assert_eq!(r.species, Some(Species::Acid));
        assert_eq!(r.moles, 0.001);
        let r = net_release(0.002, 0.0005).unwrap();
        assert_eq!(r.species, Some(Species::Acid));
        assert!((r.moles - 0.0015).abs() < 1e-18);
        let r = net_release(0.001, 0.001).unwrap();
        assert_eq!(r.species, None);
        assert_eq!(r.moles, 0.0);
        assert_eq!(net_release(0.0, 0.003).unwrap().species, Some(Species::Base));
        assert!(net_release(-1.0, 0.0).is_err());
    }

    fn log_conc() -> impl Strategy<Value = f64> {
        (-14.0f64..0.0).prop_map(|e| 10f64.powf(e))
    }

    proptest! {
        #[test]
        fn equilibrium_ion_product(e in -1.0f64..1.0, scale in -14i32..0) {
            let excess = e * 10f64.powi(scale);
            let pair = equilibrium_pair(excess, DEFAULT_KW);
            prop_assert!(pair.is_valid());
            prop_assert!(rel(pair.c_h * pair.c_oh, DEFAULT_KW) <= 1e-10);
            let sum = ph_of(pair.c_h).unwrap() + poh_of(pair.c_oh).unwrap();
            prop_assert!((sum - 14.0).abs() <= 1e-9);
        }

        #[test]
        fn reaction_preserves_excess(h in log_conc(), o in log_conc(), dt_exp in -15.0f64..3.0) {
            let p = ChannelParams::default();
            let s0 = IonPair::new(h, o).unwrap();
            let out = reaction_step_exact(s0, 10f64.powf(dt_exp), &p);
            prop_assert!(out.is_valid());
            // floor: one rounding of the largest concentration involved
            let largest = h.max(o).max(out.c_h).max(out.c_oh);
            let drift = (out.excess() - s0.excess()).abs();
            prop_assert!(drift <= 1e-12 * s0.excess().abs() + 2.0 * f64::EPSILON * largest);
        }

        #[test]
        fn reaction_semigroup(h in log_conc(), o in log_conc(), t1 in -13.0f64..1.0, t2 in -13.0f64..1.0) {
            let p = ChannelParams::default();
            let s0 = IonPair::new(h, o).unwrap();
            let (t1, t2) = (10f64.powf(t1), 10f64.powf(t2));
            let two = reaction_step_exact(reaction_step_exact(s0, t1, &p), t2, &p);
            let one = reaction_step_exact(s0, t1 + t2, &p);
            prop_assert!(rel(two.c_h, one.c_h) <= 1e-9, "{:?} vs {:?}", two, one);
            prop_assert!(rel(two.c_oh, one.c_oh) <= 1e-9, "{:?} vs {:?}", two, one);
        }

        #[test]
        fn reaction_converges_to_equilibrium(h in log_conc(), o in log_conc()) {
            let p = ChannelParams::default();
            let s0 = IonPair::new(h, o).unwrap();
            let out = reaction_step_exact(s0, 1e3, &p);
            let eq = equilibrium_pair(s0.excess(), p.k_w);
            prop_assert!(rel(out.c_h, eq.c_h) <= 1e-6);
            prop_assert!(rel(out.c_oh, eq.c_oh) <= 1e-6);
        }
    }
}
