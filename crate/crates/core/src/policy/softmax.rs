use rand::Rng as _;

use super::{PerPolicyBatch, PolicyParams, SampleResult};
use crate::env::CandidateMenu;
use crate::error::{Error, Result};
use crate::game::{MacroAction, Observation};
use crate::rng::Rng;

/// Raw scores w·f for every menu entry.
pub fn logits(params: &PolicyParams, menu: &CandidateMenu) -> Result<Vec<f64>> {
    if menu.dim() != params.dim() {
        return Err(Error::contract(format!(
            "menu feature dimension {} does not match policy dimension {}",
            menu.dim(),
            params.dim()
        )));
    }
    Ok((0..menu.len())
        .map(|i| {
            menu.features(i)
                .iter()
                .zip(&params.weights)
                .map(|(f, w)| f * w)
                .sum()
        })
        .collect())
}

fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn log_softmax(logits: &[f64], temperature: f64) -> Vec<f64> {
    let scaled: Vec<f64> = logits.iter().map(|l| l / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scaled.iter().map(|s| (s - max).exp()).sum::<f64>().ln();
    scaled.iter().map(|s| s - lse).collect()
}

/// Action probabilities at `temperature`; a one-hot argmax at 0.
pub fn distribution(params: &PolicyParams, menu: &CandidateMenu, temperature: f64) -> Result<Vec<f64>> {
    if menu.is_empty() {
        return Err(Error::EmptyMenu);
    }
    let z = logits(params, menu)?;
    if temperature == 0.0 {
        let mut p = vec![0.0; z.len()];
        p[argmax(&z)] = 1.0;
        return Ok(p);
    }
    Ok(log_softmax(&z, temperature).into_iter().map(f64::exp).collect())
}

fn check_temperature(temperature: f64) -> Result<()> {
    if !(temperature >= 0.0 && temperature.is_finite()) {
        return Err(Error::contract(format!("invalid temperature {temperature}")));
    }
    Ok(())
}

/// `k` independent draws from softmax(w·f / temperature).
///
/// At temperature 0 every draw is the argmax (smallest index on ties) and
/// carries logprob 0.
pub fn sample_k(
    params: &PolicyParams,
    _obs: &Observation,
    menu: &CandidateMenu,
    temperature: f64,
    k: usize,
    rng: &mut Rng,
) -> Result<Vec<SampleResult>> {
    check_temperature(temperature)?;
    if menu.is_empty() {
        return Err(Error::EmptyMenu);
    }
    let z = logits(params, menu)?;
    let stamp = |index: usize, logprob: f64| SampleResult {
        action: menu.action(index),
        logprob,
        sampled_version: params.version,
    };
    if temperature == 0.0 {
        let best = argmax(&z);
        return Ok(vec![stamp(best, 0.0); k]);
    }
    let logp = log_softmax(&z, temperature);
    let probs: Vec<f64> = logp.iter().map(|l| l.exp()).collect();
    Ok((0..k)
        .map(|_| {
            let u: f64 = rng.gen();
            let mut acc = 0.0;
            let mut pick = probs.len() - 1;
            for (i, p) in probs.iter().enumerate() {
                acc += p;
                if u < acc {
                    pick = i;
                    break;
                }
            }
            stamp(pick, logp[pick])
        })
        .collect())
}

/// Exact log π(action) at `temperature`.
pub fn logprob(
    params: &PolicyParams,
    _obs: &Observation,
    menu: &CandidateMenu,
    action: &MacroAction,
    temperature: f64,
) -> Result<f64> {
    check_temperature(temperature)?;
    if !menu.offers(action) {
        return Err(Error::contract(format!("action {} not in menu", action.payload)));
    }
    let z = logits(params, menu)?;
    if temperature == 0.0 {
        return Ok(if argmax(&z) == action.menu_index {
            0.0
        } else {
            f64::NEG_INFINITY
        });
    }
    Ok(log_softmax(&z, temperature)[action.menu_index])
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossReport {
    pub loss: f64,
    pub gradient: Vec<f64>,
    pub groups: usize,
}

/// Temperature at which the training objective is evaluated. Deterministic
/// sampling has no smooth log-probability, so it falls back to 1.
pub(crate) fn loss_temperature(t: f64) -> f64 {
    if t > 0.0 {
        t
    } else {
        1.0
    }
}

/// `L = −mean_g (1/K) Σ_c log π(a_c | o_g) · A_c` and its exact gradient.
///
/// For a linear softmax at temperature τ,
/// `∇ log π(a) = (f_a − Σ_j π_j f_j) / τ`.
pub fn loss(params: &PolicyParams, batch: &PerPolicyBatch) -> Result<LossReport> {
    batch.check_on_policy(params)?;
    let tau = loss_temperature(batch.temperature);
    let dim = params.dim();
    let mut total = 0.0;
    let mut gradient = vec![0.0; dim];
    if batch.groups.is_empty() {
        return Ok(LossReport {
            loss: 0.0,
            gradient,
            groups: 0,
        });
    }
    let mut expected = vec![0.0; dim];
    for group in &batch.groups {
        let menu = &group.menu;
        let logp = log_softmax(&logits(params, menu)?, tau);
        expected.fill(0.0);
        for (j, lp) in logp.iter().enumerate() {
            let p = lp.exp();
            for (e, f) in expected.iter_mut().zip(menu.features(j)) {
                *e += p * f;
            }
        }
        let scale = 1.0 / group.len() as f64;
        for (cand, adv) in group.candidates.iter().zip(&group.advantages) {
            if !menu.offers(&cand.action) {
                return Err(Error::contract(format!(
                    "group {} holds an action its menu never offered",
                    group.key
                )));
            }
            let idx = cand.action.menu_index;
            total += scale * logp[idx] * adv;
            let coef = scale * adv / tau;
            for ((g, f), e) in gradient.iter_mut().zip(menu.features(idx)).zip(&expected) {
                *g += coef * (f - e);
            }
        }
    }
    let n = batch.groups.len() as f64;
    for g in &mut gradient {
        *g = -*g / n;
    }
    Ok(LossReport {
        loss: -total / n,
        gradient,
        groups: batch.groups.len(),
    })
}

/// One gradient-descent step; the input is left untouched.
pub fn update(params: &PolicyParams, batch: &PerPolicyBatch, learning_rate: f64) -> Result<PolicyParams> {
    let report = loss(params, batch)?;
    if report.gradient.iter().any(|g| !g.is_finite()) {
        return Err(Error::NonFinite("gradient".into()));
    }
    let weights = params
        .weights
        .iter()
        .zip(&report.gradient)
        .map(|(w, g)| w - learning_rate * g)
        .collect();
    Ok(PolicyParams {
        policy_id: params.policy_id,
        version: params.version + 1,
        weights,
    })
}
