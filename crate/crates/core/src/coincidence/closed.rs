//! Gaussian closed forms for the local and nonlocal coincidence rates.
//!
//! Walk-offs here are the full crystal delays `τ_μ = L(1/u_μ − 1/u_p)`, so
//! the crystal length is already inside `τ` and `Q = γ(τ_i − τ_s)²`.

use serde::Serialize;

use crate::biphoton::GAMMA;
use crate::dispersion::WalkoffPair;
use crate::{Error, Result};

const FOUR_LN2: f64 = 4.0 * std::f64::consts::LN_2;

/// Auxiliary quantities shared by the closed forms for one crystal and pump.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClosedFormContext {
    pub walkoffs: WalkoffPair,
    /// rad/s
    pub sigma_p: f64,
    /// `8 + γσ²(τ_i + τ_s)²`
    pub g: f64,
    /// `2 + γσ²τ_s²`
    pub g_s: f64,
    /// `2 + γσ²τ_i²`
    pub g_i: f64,
    /// `γ(τ_i − τ_s)²`, s²
    pub q: f64,
}

/// Which nonlocal width formula produced a value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum NonlocalForm {
    /// `[8β_s²𝒢_i + Q² + 8β_i²𝒢_s]`, even in each β separately.
    Printed,
    /// Direct Gaussian integration; keeps the `β_s β_i` cross term.
    Rederived,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NonlocalWidth {
    pub fwhm: f64,
    pub form: NonlocalForm,
    pub printed_form: bool,
}

impl ClosedFormContext {
    pub fn new(walkoffs: WalkoffPair, sigma_p: f64) -> Result<Self> {
        if !(sigma_p.is_finite() && sigma_p > 0.0) {
            return Err(Error::validation("pump.sigma", format!("must be > 0, got {sigma_p}")));
        }
        let (ts, ti) = (walkoffs.signal, walkoffs.idler);
        let gs2 = GAMMA * sigma_p * sigma_p;
        Ok(ClosedFormContext {
            walkoffs,
            sigma_p,
            g: 8.0 + gs2 * (ti + ts).powi(2),
            g_s: 2.0 + gs2 * ts * ts,
            g_i: 2.0 + gs2 * ti * ti,
            q: GAMMA * (ti - ts).powi(2),
        })
    }

    /// Same crystal, different pump width.
    pub fn with_sigma(&self, sigma_p: f64) -> Result<Self> {
        Self::new(self.walkoffs, sigma_p)
    }

    /// `Q𝒢 + 16σ²(β_i − β_s)²`, s².
    fn local_denominator(&self, beta_s: f64, beta_i: f64) -> f64 {
        let db = beta_i - beta_s;
        self.q * self.g + 16.0 * self.sigma_p * self.sigma_p * db * db
    }

    /// Normalised HOM rate at delay `τ` from the birefringent delay:
    /// `1 − 𝒫 exp(−2𝒢τ² / (Q𝒢 + 16σ²(β_i − β_s)²))`.
    pub fn hom_rate(&self, tau: f64, beta_s: f64, beta_i: f64) -> Result<f64> {
        let den = self.local_denominator(beta_s, beta_i);
        if !(den > 0.0) {
            return Err(degenerate_width());
        }
        let p = self.visibility(beta_s, beta_i);
        Ok(1.0 - p * (-2.0 * self.g * tau * tau / den).exp())
    }

    /// HOM dip FWHM, `(4 ln2 [Q𝒢 + 16σ²(β_i − β_s)²] / 2𝒢)^½`.
    pub fn fwhm_local(&self, beta_s: f64, beta_i: f64) -> Result<f64> {
        let den = self.local_denominator(beta_s, beta_i);
        if !(den > 0.0) {
            return Err(degenerate_width());
        }
        Ok((FOUR_LN2 * den / (2.0 * self.g)).sqrt())
    }

    /// σ-free limit `(4 ln2 · Q/2)^½`.
    pub fn fwhm_local_cw_limit(&self) -> f64 {
        (FOUR_LN2 * self.q / 2.0).sqrt()
    }

    /// Dip depth `𝒫 = (8Q / (Q𝒢 + 16σ²(β_i − β_s)²))^½`, the ratio of the
    /// swapped-argument overlap to the norm at zero delay.
    pub fn visibility(&self, beta_s: f64, beta_i: f64) -> f64 {
        let db = beta_i - beta_s;
        if self.q == 0.0 {
            // only the pump envelope limits the difference frequency
            return if db == 0.0 { (8.0 / self.g).sqrt() } else { 0.0 };
        }
        (8.0 * self.q / self.local_denominator(beta_s, beta_i)).sqrt().min(1.0)
    }

    /// The commonly quoted nonlocal width, `(4 ln2 [8β_s²𝒢_i + Q² + 8β_i²𝒢_s] / 2Q)^½`.
    /// It is even in each β separately, so it cannot single out `β_i = −β_s`.
    pub fn fwhm_nonlocal_printed(&self, beta_s: f64, beta_i: f64) -> Result<NonlocalWidth> {
        self.require_q()?;
        let bracket = 8.0 * beta_s * beta_s * self.g_i + self.q * self.q + 8.0 * beta_i * beta_i * self.g_s;
        Ok(NonlocalWidth {
            fwhm: (FOUR_LN2 * bracket / (2.0 * self.q)).sqrt(),
            form: NonlocalForm::Printed,
            printed_form: true,
        })
    }

    /// Nonlocal width from Gaussian integration of the two-detector rate:
    ///
    /// ```text
    /// FWHM² = 2 ln2 [Q² + 16(β_s + β_i)² + 8γσ²(τ_i β_s + τ_s β_i)²] / Q
    /// ```
    ///
    /// Differs from the quoted form by `16 β_s β_i (2 + γσ² τ_s τ_i)` in the bracket.
    pub fn fwhm_nonlocal_rederived(&self, beta_s: f64, beta_i: f64) -> Result<NonlocalWidth> {
        self.require_q()?;
        let (ts, ti) = (self.walkoffs.signal, self.walkoffs.idler);
        let mixed = ti * beta_s + ts * beta_i;
        let bracket = self.q * self.q
            + 16.0 * (beta_s + beta_i).powi(2)
            + 8.0 * GAMMA * self.sigma_p * self.sigma_p * mixed * mixed;
        Ok(NonlocalWidth {
            fwhm: (2.0 * std::f64::consts::LN_2 * bracket / self.q).sqrt(),
            form: NonlocalForm::Rederived,
            printed_form: false,
        })
    }

    fn require_q(&self) -> Result<()> {
        if self.q > 0.0 {
            Ok(())
        } else {
            Err(Error::Degenerate("τ_s = τ_i: the nonlocal width is undefined".into()))
        }
    }
}

fn degenerate_width() -> Error {
    Error::Degenerate("τ_s = τ_i and β_s = β_i: the dip has zero width".into())
}
