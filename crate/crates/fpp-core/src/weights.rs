//! Edge-weight laws: finitely many atoms plus optional continuous parts.
//!
//! A law is described by a compact literal, e.g.
//!
//! ```text
//! atoms:0:0.1,1:0.9
//! uniform:0:1
//! exp:1.0
//! shift:1+exp:1.0
//! mix:0.5*atoms:1:1.0+0.5*uniform:1:2
//! ```
//!
//! Atoms are (value, probability) pairs; continuous parts are uniform or
//! (shifted) exponential densities.  CDF, tail probabilities, quantiles and
//! moments all have closed forms, so sampling is exact inverse-CDF
//! transformation of one uniform variate and moments never rely on
//! simulation.

use std::fmt;

use crate::error::{Error, Result};

/// A continuous component of a weight law.
#[derive(Clone, Debug, PartialEq)]
pub enum ContinuousFamily {
    /// Uniform density on [lo, hi], 0 <= lo < hi.
    Uniform { lo: f64, hi: f64 },
    /// Exponential with the given rate, translated by `shift >= 0`:
    /// supported on [shift, inf).
    Exponential { rate: f64, shift: f64 },
}

impl ContinuousFamily {
    fn validate(&self) -> Result<()> {
        match *self {
            ContinuousFamily::Uniform { lo, hi } => {
                if !lo.is_finite() || !hi.is_finite() || lo < 0.0 || lo >= hi {
                    Err(Error::config(format!(
                        "uniform bounds must satisfy 0 <= lo < hi, got [{lo}, {hi}]"
                    )))
                } else {
                    Ok(())
                }
            }
            ContinuousFamily::Exponential { rate, shift } => {
                if !rate.is_finite() || rate <= 0.0 {
                    Err(Error::config(format!("exponential rate must be > 0, got {rate}")))
                } else if !shift.is_finite() || shift < 0.0 {
                    Err(Error::config(format!("shift must be >= 0, got {shift}")))
                } else {
                    Ok(())
                }
            }
        }
    }

    fn cdf(&self, x: f64) -> f64 {
        match *self {
            ContinuousFamily::Uniform { lo, hi } => ((x - lo) / (hi - lo)).clamp(0.0, 1.0),
            ContinuousFamily::Exponential { rate, shift } => {
                if x <= shift {
                    0.0
                } else {
                    -(-rate * (x - shift)).exp_m1()
                }
            }
        }
    }

    fn quantile(&self, t: f64) -> f64 {
        match *self {
            ContinuousFamily::Uniform { lo, hi } => lo + t * (hi - lo),
            ContinuousFamily::Exponential { rate, shift } => shift - (-t).ln_1p() / rate,
        }
    }

    fn lower_end(&self) -> f64 {
        match *self {
            ContinuousFamily::Uniform { lo, .. } => lo,
            ContinuousFamily::Exponential { shift, .. } => shift,
        }
    }

    /// E[X^order] for this component, `order > 0`.
    fn moment(&self, order: f64) -> f64 {
        match *self {
            ContinuousFamily::Uniform { lo, hi } => {
                // Integral of x^order / (hi - lo) over [lo, hi].
                (hi.powf(order + 1.0) - lo.powf(order + 1.0)) / ((order + 1.0) * (hi - lo))
            }
            ContinuousFamily::Exponential { rate, shift } => {
                if shift == 0.0 {
                    statrs::function::gamma::gamma(order + 1.0) / rate.powf(order)
                } else {
                    // E[(shift + Y)^order] for Y ~ Exp(rate), via the
                    // regularized upper incomplete gamma function Q:
                    // exp(rate*shift) * Gamma(order+1) * Q(order+1, rate*shift) / rate^order.
                    let a = order + 1.0;
                    let x = rate * shift;
                    (x + statrs::function::gamma::gamma_ur(a, x).ln()
                        + statrs::function::gamma::ln_gamma(a)
                        - order * rate.ln())
                    .exp()
                }
            }
        }
    }
}

/// A mixed weight law: atom list plus weighted continuous components.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightDistribution {
    /// (value, probability), sorted by value, probabilities > 0.
    atoms: Vec<(f64, f64)>,
    /// (family, mixture mass), masses > 0.
    continuous: Vec<(ContinuousFamily, f64)>,
    /// Moment order used by the heavy-tail check, > 1.
    alpha: f64,
}

const MASS_TOLERANCE: f64 = 1e-9;

impl WeightDistribution {
    pub fn from_parts(
        atoms: Vec<(f64, f64)>,
        continuous: Vec<(ContinuousFamily, f64)>,
    ) -> Result<Self> {
        let mut atoms: Vec<(f64, f64)> = atoms
            .into_iter()
            .filter(|&(_, p)| p != 0.0)
            .collect();
        let continuous: Vec<(ContinuousFamily, f64)> = continuous
            .into_iter()
            .filter(|&(_, w)| w != 0.0)
            .collect();
        for &(v, p) in &atoms {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(format!("atom value must be finite and >= 0, got {v}")));
            }
            if !p.is_finite() || p < 0.0 {
                return Err(Error::config(format!("atom probability must be >= 0, got {p}")));
            }
        }
        for (fam, w) in &continuous {
            fam.validate()?;
            if !w.is_finite() || *w < 0.0 {
                return Err(Error::config(format!("mixture mass must be >= 0, got {w}")));
            }
        }
        atoms.sort_by(|a, b| a.0.total_cmp(&b.0));
        // Merge duplicate atom values so the literal form is canonical.
        let mut merged: Vec<(f64, f64)> = Vec::with_capacity(atoms.len());
        for (v, p) in atoms {
            match merged.last_mut() {
                Some(last) if last.0 == v => last.1 += p,
                _ => merged.push((v, p)),
            }
        }
        let total: f64 = merged.iter().map(|&(_, p)| p).sum::<f64>()
            + continuous.iter().map(|&(_, w)| w).sum::<f64>();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::config(format!(
                "probabilities must sum to 1, got {total}"
            )));
        }
        if merged.is_empty() && continuous.is_empty() {
            return Err(Error::config("distribution has no components".to_string()));
        }
        Ok(WeightDistribution { atoms: merged, continuous, alpha: 2.0 })
    }

    /// Unit mass at a single value.
    pub fn point_mass(v: f64) -> Self {
        WeightDistribution::from_parts(vec![(v, 1.0)], vec![]).expect("point mass is valid")
    }

    pub fn uniform(lo: f64, hi: f64) -> Result<Self> {
        WeightDistribution::from_parts(vec![], vec![(ContinuousFamily::Uniform { lo, hi }, 1.0)])
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        WeightDistribution::from_parts(
            vec![],
            vec![(ContinuousFamily::Exponential { rate, shift: 0.0 }, 1.0)],
        )
    }

    /// Replace the moment order used by the heavy-tail check (default 2).
    pub fn with_alpha(mut self, alpha: f64) -> Result<Self> {
        if !alpha.is_finite() || alpha <= 1.0 {
            return Err(Error::config(format!("moment order alpha must be > 1, got {alpha}")));
        }
        self.alpha = alpha;
        Ok(self)
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn atoms(&self) -> &[(f64, f64)] {
        &self.atoms
    }

    pub fn continuous(&self) -> &[(ContinuousFamily, f64)] {
        &self.continuous
    }

    /// P(X <= x).
    pub fn cdf(&self, x: f64) -> f64 {
        let mut f = 0.0;
        for &(v, p) in &self.atoms {
            if v <= x {
                f += p;
            }
        }
        for &(ref fam, w) in &self.continuous {
            f += w * fam.cdf(x);
        }
        f.min(1.0)
    }

    /// P(X < x), the left limit of the CDF.
    pub fn prob_lt(&self, x: f64) -> f64 {
        let mut f = 0.0;
        for &(v, p) in &self.atoms {
            if v < x {
                f += p;
            }
        }
        for &(ref fam, w) in &self.continuous {
            f += w * fam.cdf(x);
        }
        f.min(1.0)
    }

    /// P(X > x).
    pub fn prob_gt(&self, x: f64) -> f64 {
        (1.0 - self.cdf(x)).max(0.0)
    }

    /// Mass of the atom exactly at `v`, zero if there is none.
    pub fn atom_mass_at(&self, v: f64) -> f64 {
        self.atoms
            .iter()
            .find(|&&(a, _)| a == v)
            .map(|&(_, p)| p)
            .unwrap_or(0.0)
    }

    /// Inverse-CDF sampling: map one uniform variate in [0, 1) to a weight.
    /// Components are laid out in a fixed order (atoms by value, then the
    /// continuous parts), so the map is deterministic and measure-preserving.
    pub fn quantile(&self, u: f64) -> f64 {
        debug_assert!((0.0..1.0).contains(&u), "u = {u} outside [0,1)");
        let mut cum = 0.0;
        for &(v, p) in &self.atoms {
            cum += p;
            if u < cum {
                return v;
            }
        }
        let last = self.continuous.len().saturating_sub(1);
        for (i, &(ref fam, w)) in self.continuous.iter().enumerate() {
            let prev = cum;
            cum += w;
            if u < cum || i == last {
                // Guard against mass-sum rounding: clamp t into [0, 1).
                let t = ((u - prev) / w).clamp(0.0, 1.0 - f64::EPSILON);
                return fam.quantile(t);
            }
        }
        // Only reachable for pure-atom laws when u exceeds the summed mass
        // by rounding slack; return the largest atom.
        self.atoms.last().expect("validated non-empty").0
    }

    /// m_{order} = E[X^order], `order > 0`.  Finite for every supported
    /// family; a non-finite result marks a divergent moment.
    pub fn moment(&self, order: f64) -> Result<f64> {
        if !order.is_finite() || order <= 0.0 {
            return Err(Error::domain(format!("moment order must be > 0, got {order}")));
        }
        let mut m = 0.0;
        for &(v, p) in &self.atoms {
            m += p * v.powf(order);
        }
        for &(ref fam, w) in &self.continuous {
            m += w * fam.moment(order);
        }
        Ok(m)
    }

    pub fn mean(&self) -> f64 {
        self.moment(1.0).expect("order 1 is valid")
    }

    /// Infimum of the support.
    pub fn min_support(&self) -> f64 {
        let a = self.atoms.first().map(|&(v, _)| v).unwrap_or(f64::INFINITY);
        let c = self
            .continuous
            .iter()
            .map(|(f, _)| f.lower_end())
            .fold(f64::INFINITY, f64::min);
        a.min(c)
    }

    /// Parse a distribution literal; see the module documentation for the
    /// grammar.
    pub fn parse(text: &str) -> Result<Self> {
        let text = text.trim();
        if let Some(body) = text.strip_prefix("mix:") {
            let mut terms: Vec<String> = Vec::new();
            // Split on '+', but '+' also appears inside shift components;
            // a new mixture term must start with "<weight>*".
            for seg in body.split('+') {
                let starts_term = seg
                    .split_once('*')
                    .map(|(w, _)| w.parse::<f64>().is_ok())
                    .unwrap_or(false);
                if starts_term {
                    terms.push(seg.to_string());
                } else if let Some(last) = terms.last_mut() {
                    last.push('+');
                    last.push_str(seg);
                } else {
                    return Err(Error::config(format!(
                        "mixture term must look like '<weight>*<dist>', got {seg:?}"
                    )));
                }
            }
            let mut atoms = Vec::new();
            let mut continuous = Vec::new();
            for term in &terms {
                let (w_text, comp_text) = term
                    .split_once('*')
                    .ok_or_else(|| Error::config(format!("missing '*' in mixture term {term:?}")))?;
                let w: f64 = parse_number(w_text)?;
                let comp = parse_component(comp_text)?;
                for (v, p) in comp.atoms {
                    atoms.push((v, w * p));
                }
                if let Some(fam) = comp.continuous {
                    continuous.push((fam, w));
                }
            }
            WeightDistribution::from_parts(atoms, continuous)
        } else {
            let comp = parse_component(text)?;
            let continuous = comp.continuous.map(|f| (f, 1.0)).into_iter().collect();
            WeightDistribution::from_parts(comp.atoms, continuous)
        }
    }
}

impl fmt::Display for WeightDistribution {
    /// Canonical literal form that `parse` accepts back.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let atom_mass: f64 = self.atoms.iter().map(|&(_, p)| p).sum();
        let single_kind =
            (self.atoms.is_empty() as usize) + (self.continuous.is_empty() as usize) == 1;
        let fmt_atoms = |probs_scale: f64| -> String {
            let parts: Vec<String> = self
                .atoms
                .iter()
                .map(|&(v, p)| format!("{v}:{}", p / probs_scale))
                .collect();
            format!("atoms:{}", parts.join(","))
        };
        let fmt_family = |fam: &ContinuousFamily| -> String {
            match *fam {
                ContinuousFamily::Uniform { lo, hi } => format!("uniform:{lo}:{hi}"),
                ContinuousFamily::Exponential { rate, shift } => {
                    if shift == 0.0 {
                        format!("exp:{rate}")
                    } else {
                        format!("shift:{shift}+exp:{rate}")
                    }
                }
            }
        };
        if single_kind && !self.atoms.is_empty() {
            return write!(f, "{}", fmt_atoms(1.0));
        }
        if single_kind && self.continuous.len() == 1 {
            return write!(f, "{}", fmt_family(&self.continuous[0].0));
        }
        let mut parts = Vec::new();
        if !self.atoms.is_empty() {
            parts.push(format!("{atom_mass}*{}", fmt_atoms(atom_mass)));
        }
        for (fam, w) in &self.continuous {
            parts.push(format!("{w}*{}", fmt_family(fam)));
        }
        write!(f, "mix:{}", parts.join("+"))
    }
}

struct Component {
    atoms: Vec<(f64, f64)>,
    continuous: Option<ContinuousFamily>,
}

fn parse_number(text: &str) -> Result<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| Error::config(format!("expected a number, got {text:?}")))
}

fn parse_component(text: &str) -> Result<Component> {
    let text = text.trim();
    if let Some(body) = text.strip_prefix("atoms:") {
        let mut atoms = Vec::new();
        for pair in body.split(',') {
            let (v, p) = pair
                .split_once(':')
                .ok_or_else(|| Error::config(format!("atom must be 'value:prob', got {pair:?}")))?;
            atoms.push((parse_number(v)?, parse_number(p)?));
        }
        Ok(Component { atoms, continuous: None })
    } else if let Some(body) = text.strip_prefix("uniform:") {
        let (a, b) = body
            .split_once(':')
            .ok_or_else(|| Error::config(format!("uniform needs 'lo:hi', got {body:?}")))?;
        Ok(Component {
            atoms: vec![],
            continuous: Some(ContinuousFamily::Uniform {
                lo: parse_number(a)?,
                hi: parse_number(b)?,
            }),
        })
    } else if let Some(body) = text.strip_prefix("exp:") {
        Ok(Component {
            atoms: vec![],
            continuous: Some(ContinuousFamily::Exponential {
                rate: parse_number(body)?,
                shift: 0.0,
            }),
        })
    } else if let Some(body) = text.strip_prefix("shift:") {
        let (s, rest) = body
            .split_once('+')
            .ok_or_else(|| Error::config(format!("shift needs 'shift:<s>+<dist>', got {body:?}")))?;
        let s = parse_number(s)?;
        if s < 0.0 {
            return Err(Error::config(format!("shift must be >= 0, got {s}")));
        }
        let inner = parse_component(rest)?;
        Ok(Component {
            atoms: inner.atoms.into_iter().map(|(v, p)| (v + s, p)).collect(),
            continuous: inner.continuous.map(|fam| match fam {
                ContinuousFamily::Uniform { lo, hi } => {
                    ContinuousFamily::Uniform { lo: lo + s, hi: hi + s }
                }
                ContinuousFamily::Exponential { rate, shift } => {
                    ContinuousFamily::Exponential { rate, shift: shift + s }
                }
            }),
        })
    } else {
        Err(Error::config(format!(
            "unknown distribution literal {text:?} (expected atoms:, uniform:, exp:, shift:, mix:)"
        )))
    }
}

/// Outcome of checking a weight law against the standing assumptions:
/// subcritical atom at zero, a finite moment of order alpha > 1, and (for
/// the flat-edge study) support in [1, inf) with an atom at 1.
#[derive(Clone, Debug)]
pub struct AssumptionReport {
    pub d: usize,
    pub pc: f64,
    /// Mass of the atom at zero.
    pub nu_zero: f64,
    /// nu({0}) < pc?
    pub a1_holds: bool,
    /// pc - nu({0}).
    pub a1_margin: f64,
    pub alpha: f64,
    /// m_{alpha}, the moment of order alpha.
    pub a2_value: f64,
    pub a2_holds: bool,
    /// Support contained in [1, inf)?
    pub b1_holds: bool,
    /// Mass of the atom at one.
    pub b2_q: f64,
    pub min_support: f64,
}

impl fmt::Display for AssumptionReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "subcritical zero atom: {} (nu({{0}}) = {}, pc = {}, margin = {})",
            if self.a1_holds { "holds" } else { "VIOLATED" },
            self.nu_zero,
            self.pc,
            self.a1_margin
        )?;
        writeln!(
            f,
            "finite moment of order {}: {} (value = {})",
            self.alpha,
            if self.a2_holds { "holds" } else { "VIOLATED" },
            self.a2_value
        )?;
        write!(
            f,
            "support in [1, inf): {} (min support = {}); atom at 1: q = {}",
            if self.b1_holds { "holds" } else { "does not hold" },
            self.min_support,
            self.b2_q
        )
    }
}

/// Evaluate the standing assumptions for `dist` in dimension `d`, with
/// `pc` the bond-percolation threshold to compare the zero atom against.
pub fn validate_assumptions(dist: &WeightDistribution, d: usize, pc: f64) -> Result<AssumptionReport> {
    if d < 2 {
        return Err(Error::domain(format!("dimension must be >= 2, got {d}")));
    }
    if !(0.0..=1.0).contains(&pc) || pc == 0.0 {
        return Err(Error::domain(format!("pc must lie in (0, 1], got {pc}")));
    }
    let nu_zero = dist.atom_mass_at(0.0);
    let a2_value = dist.moment(dist.alpha())?;
    let min_support = dist.min_support();
    Ok(AssumptionReport {
        d,
        pc,
        nu_zero,
        a1_holds: nu_zero < pc,
        a1_margin: pc - nu_zero,
        alpha: dist.alpha(),
        a2_value,
        a2_holds: a2_value.is_finite(),
        b1_holds: min_support >= 1.0,
        b2_q: dist.atom_mass_at(1.0),
        min_support,
    })
}

/// Like [`validate_assumptions`] but failing assumptions become errors.
/// Monte Carlo drivers call this before spending any compute.
pub fn require_a1_a2(dist: &WeightDistribution, d: usize, pc: f64) -> Result<AssumptionReport> {
    let report = validate_assumptions(dist, d, pc)?;
    if !report.a1_holds {
        return Err(Error::assumption(format!(
            "atom at zero has mass {} >= pc = {}",
            report.nu_zero, report.pc
        )));
    }
    if !report.a2_holds {
        return Err(Error::assumption(format!(
            "moment of order {} diverges",
            report.alpha
        )));
    }
    Ok(report)
}
