//! Expected payoffs of the Include/Exclude actions for one automaton.
//!
//! The environment is described by the probability mass of a few regions of
//! the input space together with label probabilities inside each region:
//!
//! | region            | mass            | clause without `l` | literal `l` |
//! |-------------------|-----------------|--------------------|-------------|
//! | matched `X'†`     | `theta`         | 1                  | 1           |
//! | false literal `E` | `mass_false`    | 1                  | 0           |
//! | rest of `X'∖X'†`  | `mass_rest - mass_false` | 0         | any         |
//! | outside `X̄'`      | `mass_outside`  | 0                  | any         |
//!
//! `E` lies inside `X'∖X'†`. Any remaining mass is inert (`y = 0`, clause 0).
//! Payoffs score reward as +1, penalty as -1 and inaction as 0, with boosting off.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::automaton::{Action, Event};
use crate::error::{Error, Result};
use crate::feedback::{type_i_probs, type_ii_probs, FeedbackParams};
use crate::rng::{Domain, StreamRng};

const TOL: f64 = 1e-12;

/// Region masses and label probabilities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionModel {
    /// `P(X ∈ X'∖X'†)`.
    pub mass_rest: f64,
    /// `P(X ∈ X̄')`.
    pub mass_outside: f64,
    /// `P(X ∈ X'_j∖X'†_j)`: the clause fires but the literal is 0.
    pub mass_false: f64,
    /// `P(y = 1 | X ∈ X'†)`.
    pub y1_matched: f64,
    /// `P(y = 1 | X ∈ X'∖X'†)`.
    pub y1_rest: f64,
    /// `P(y = 1 | X ∈ X̄')`.
    pub y1_outside: f64,
    /// `P(y = 0 | X ∈ X'_j∖X'†_j)`.
    pub y0_false: f64,
}

impl RegionModel {
    /// The self-balanced regime: `P(X') = P(X̄') = 1/2`, every non-matched
    /// pattern in `X'` fires the clause with the literal false, and labels
    /// are flipped with probability `delta`.
    pub fn balanced(theta: f64, delta: f64) -> Self {
        RegionModel {
            mass_rest: 0.5 - theta,
            mass_outside: 0.5,
            mass_false: 0.5 - theta,
            y1_matched: 1.0 - delta,
            y1_rest: 1.0 - delta,
            y1_outside: delta,
            y0_false: delta,
        }
    }

    /// `P(y = 1 | X ∈ (X'∖X'†)∖E)`, implied by the other fields.
    fn y1_rest_without_false(&self) -> f64 {
        let m = self.mass_rest - self.mass_false;
        if m <= TOL {
            return 0.0;
        }
        (self.y1_rest * self.mass_rest - (1.0 - self.y0_false) * self.mass_false) / m
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffEnvironment {
    /// `P(X ∈ X'†_j)`.
    pub theta: f64,
    /// Label-noise probability.
    pub delta: f64,
    pub s: f64,
    /// Explicit regions; `None` means [`RegionModel::balanced`].
    pub regions: Option<RegionModel>,
}

impl PayoffEnvironment {
    pub fn balanced(theta: f64, delta: f64, s: f64) -> Result<Self> {
        let env = PayoffEnvironment {
            theta,
            delta,
            s,
            regions: None,
        };
        env.validate()?;
        Ok(env)
    }

    pub fn with_regions(theta: f64, s: f64, regions: RegionModel) -> Result<Self> {
        let env = PayoffEnvironment {
            theta,
            delta: 0.0,
            s,
            regions: Some(regions),
        };
        env.validate()?;
        Ok(env)
    }

    pub fn regions(&self) -> RegionModel {
        self.regions
            .unwrap_or_else(|| RegionModel::balanced(self.theta, self.delta))
    }

    pub fn validate(&self) -> Result<()> {
        FeedbackParams::new(self.s, false)?;
        let unit = |name: &str, v: f64| {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::config(format!("{name} must be in [0, 1], got {v}")))
            }
        };
        if !(0.0..=0.5).contains(&self.theta) {
            return Err(Error::config(format!("theta must be in [0, 0.5], got {}", self.theta)));
        }
        if !(0.0..0.5).contains(&self.delta) {
            return Err(Error::config(format!("delta must be in [0, 0.5), got {}", self.delta)));
        }
        let r = self.regions();
        unit("mass_rest", r.mass_rest)?;
        unit("mass_outside", r.mass_outside)?;
        unit("mass_false", r.mass_false)?;
        unit("y1_matched", r.y1_matched)?;
        unit("y1_rest", r.y1_rest)?;
        unit("y1_outside", r.y1_outside)?;
        unit("y0_false", r.y0_false)?;
        if self.theta + r.mass_rest + r.mass_outside > 1.0 + TOL {
            return Err(Error::config("region masses exceed 1"));
        }
        if r.mass_false > r.mass_rest + TOL {
            return Err(Error::config("the false-literal region must lie inside X'∖X'†"));
        }
        let q = r.y1_rest_without_false();
        if !(-TOL..=1.0 + TOL).contains(&q) {
            return Err(Error::config(format!(
                "label probabilities are inconsistent: implied P(y=1) on the rest is {q}"
            )));
        }
        Ok(())
    }
}

/// Expected payoff of Exclude: three Type I terms and the Type II penalty.
pub fn payoff_exclude_full(env: &PayoffEnvironment) -> f64 {
    let r = env.regions();
    let s = env.s;
    r.y1_rest * r.mass_rest / s + r.y1_outside * r.mass_outside / s
        - r.y1_matched * env.theta * (s - 1.0) / s
        - type_ii_term(env)
}

/// Expected payoff of Include; untouched by Type II feedback.
pub fn payoff_include_full(env: &PayoffEnvironment) -> f64 {
    let r = env.regions();
    let s = env.s;
    r.y1_matched * env.theta * (s - 1.0) / s - r.y1_rest * r.mass_rest / s - r.y1_outside * r.mass_outside / s
}

/// The full penalty Exclude collects on false positives.
pub fn type_ii_term(env: &PayoffEnvironment) -> f64 {
    let r = env.regions();
    r.y0_false * r.mass_false
}

pub fn payoff_exclude_balanced(theta: f64, delta: f64, s: f64) -> f64 {
    (1.0 - delta) * (0.5 - theta) / s + delta / (2.0 * s)
        - (1.0 - delta) * theta * (s - 1.0) / s
        - delta * (0.5 - theta)
}

pub fn payoff_include_balanced(theta: f64, delta: f64, s: f64) -> f64 {
    (1.0 - delta) * theta * (s - 1.0) / s - (1.0 - delta) * (0.5 - theta) / s - delta / (2.0 * s)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// Exclude has negative payoff: the literal stays included.
    IncludeEquilibrium,
    /// Exclude has positive payoff: the literal stays excluded.
    ExcludeEquilibrium,
    Boundary,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::IncludeEquilibrium => "IncludeEquilibrium",
            Verdict::ExcludeEquilibrium => "ExcludeEquilibrium",
            Verdict::Boundary => "Boundary",
        }
    }
}

/// Sign of the balanced Exclude payoff. With `delta = 0` this is `theta`
/// against `1/(2s)`.
pub fn nash_check(theta: f64, delta: f64, s: f64) -> Verdict {
    let p = payoff_exclude_balanced(theta, delta, s);
    if p.abs() <= TOL {
        Verdict::Boundary
    } else if p < 0.0 {
        Verdict::IncludeEquilibrium
    } else {
        Verdict::ExcludeEquilibrium
    }
}

/// The balanced Exclude payoff equals `1/(2s) - B` with
/// `B = (1-delta)·theta + delta·(1/2-theta)`, so it is positive exactly when
/// `s < 1/(2B)`. Returns that critical `s` (infinite when `B = 0`).
pub fn s_critical(theta: f64, delta: f64) -> f64 {
    let b = (1.0 - delta) * theta + delta * (0.5 - theta);
    if b <= 0.0 {
        f64::INFINITY
    } else {
        1.0 / (2.0 * b)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub stderr: f64,
    pub trials: u64,
}

const SHARD: u64 = 1 << 16;

/// Simulates `trials` draws of (region, label, feedback event) and scores the
/// event the feedback tables hand to an automaton taking `action`.
pub fn monte_carlo_payoff(env: &PayoffEnvironment, action: Action, trials: u64, seed: u64) -> Result<Estimate> {
    if trials == 0 {
        return Err(Error::NoEstimate("zero trials".into()));
    }
    env.validate()?;
    let params = FeedbackParams::new(env.s, false)?;
    let shards = trials.div_ceil(SHARD);
    let (sum, sum_sq) = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let n = SHARD.min(trials - shard * SHARD);
            let mut rng = StreamRng::new(seed, Domain::MonteCarlo, shard);
            let mut acc = (0.0f64, 0.0f64);
            for _ in 0..n {
                let v = one_trial(env, action, &params, &mut rng);
                acc.0 += v;
                acc.1 += v * v;
            }
            acc
        })
        .reduce(|| (0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let n = trials as f64;
    let mean = sum / n;
    let stderr = if trials > 1 {
        let var = ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0);
        (var / n).sqrt()
    } else {
        0.0
    };
    Ok(Estimate { mean, stderr, trials })
}

fn one_trial(env: &PayoffEnvironment, action: Action, params: &FeedbackParams, rng: &mut StreamRng) -> f64 {
    let r = env.regions();
    let u = rng.unit();
    let v = rng.unit();
    let (clause_base, literal, y) = if u < env.theta {
        (true, true, v < r.y1_matched)
    } else if u < env.theta + r.mass_false {
        (true, false, v >= r.y0_false)
    } else if u < env.theta + r.mass_rest {
        (false, true, v < r.y1_rest_without_false())
    } else if u < env.theta + r.mass_rest + r.mass_outside {
        (false, true, v < r.y1_outside)
    } else {
        return 0.0;
    };
    let clause = clause_base && (literal || action == Action::Exclude);
    let triple = if y {
        type_i_probs(action, literal, clause, params)
    } else {
        type_ii_probs(action, literal, clause)
    };
    match triple.sample(rng) {
        Event::Reward => 1.0,
        Event::Penalty => -1.0,
        Event::Inaction => 0.0,
    }
}

/// One line of a payoff report.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PayoffRow {
    pub theta: f64,
    pub delta: f64,
    pub s: f64,
    pub exclude: f64,
    pub include: f64,
    pub verdict: Verdict,
    pub s_critical: f64,
    pub monte_carlo: Option<(Estimate, Estimate)>,
}

impl PayoffRow {
    pub fn compute(theta: f64, delta: f64, s: f64, mc_trials: Option<(u64, u64)>) -> Result<Self> {
        let env = PayoffEnvironment::balanced(theta, delta, s)?;
        let monte_carlo = match mc_trials {
            Some((trials, seed)) => Some((
                monte_carlo_payoff(&env, Action::Exclude, trials, seed)?,
                monte_carlo_payoff(&env, Action::Include, trials, seed ^ 1)?,
            )),
            None => None,
        };
        Ok(PayoffRow {
            theta,
            delta,
            s,
            exclude: payoff_exclude_balanced(theta, delta, s),
            include: payoff_include_balanced(theta, delta, s),
            verdict: nash_check(theta, delta, s),
            s_critical: s_critical(theta, delta),
            monte_carlo,
        })
    }
}

/// CSV with header. `s_critical` is the largest `s` for which Exclude still
/// pays off.
pub fn report_csv(rows: &[PayoffRow]) -> String {
    let with_mc = rows.iter().any(|r| r.monte_carlo.is_some());
    let mut out = String::from("theta,delta,s,exclude_payoff,include_payoff,verdict,s_critical");
    if with_mc {
        out.push_str(",mc_exclude,mc_exclude_se,mc_include,mc_include_se");
    }
    out.push('\n');
    for r in rows {
        let _ = write!(
            out,
            "{},{},{},{:.9},{:.9},{},{}",
            r.theta,
            r.delta,
            r.s,
            r.exclude,
            r.include,
            r.verdict.as_str(),
            r.s_critical
        );
        if with_mc {
            match r.monte_carlo {
                Some((e, i)) => {
                    let _ = write!(out, ",{:.9},{:.9},{:.9},{:.9}", e.mean, e.stderr, i.mean, i.stderr);
                }
                None => out.push_str(",,,,"),
            }
        }
        out.push('\n');
    }
    out
}
