use rand::Rng;

use super::{ActionId, AgentConfig, Algorithm, QTables, StateIndex, MAX_ACTIONS};
use crate::channel::PathLossDb;
use crate::error::DomainError;
use crate::geometry::Pose;

/// Reward for a step: ten times the path-loss decrease, in dB.
pub fn reward(pl_prev_db: PathLossDb, pl_cur_db: PathLossDb) -> f64 {
    -10.0 * (pl_cur_db.db() - pl_prev_db.db())
}

/// Decaying learning rate `n^(-1/7)`.
pub fn learning_rate(n: u64) -> Result<f64, DomainError> {
    if n == 0 {
        return Err(DomainError::InvalidArgument {
            name: "n",
            value: 0.0,
        });
    }
    let x = n as f64;
    // One Newton step on r⁷ = n so exact seventh powers give exact roots.
    let mut r = libm::pow(x, 1.0 / 7.0);
    let r6 = r * r * r * r * r * r;
    r -= (r6 * r - x) / (7.0 * r6);
    Ok(1.0 / r)
}

fn argmax_lowest(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

/// ε-greedy selection that prefers actions not yet tried in `state`.
///
/// With probability ε the action is uniform over all actions. Otherwise an
/// untried action is picked uniformly if one exists, else the argmax of
/// `q1 + q2` with ties broken uniformly.
pub fn choose_action<R: Rng + ?Sized>(
    state: &StateIndex,
    tables: &QTables,
    cfg: &AgentConfig,
    rng: &mut R,
) -> ActionId {
    let n = cfg.n_actions();
    if cfg.epsilon > 0.0 && rng.random::<f64>() < cfg.epsilon {
        return ActionId(rng.random_range(0..n) as u8);
    }
    let row = tables.row(state);

    let mut candidates = [0u8; MAX_ACTIONS];
    let mut count = 0;
    for a in 0..n {
        if row.visits[a] == 0 {
            candidates[count] = a as u8;
            count += 1;
        }
    }
    if count == 0 {
        let mut best = f64::NEG_INFINITY;
        for a in 0..n {
            let q = row.q1[a] + row.q2[a];
            if q > best {
                best = q;
                count = 0;
            }
            if q == best {
                candidates[count] = a as u8;
                count += 1;
            }
        }
    }
    let pick = if count == 1 {
        0
    } else {
        rng.random_range(0..count)
    };
    ActionId(candidates[pick])
}

/// One learning step on the transition `(s, a, r, s_next)`.
///
/// `s_next = None` marks the end of an episode (no bootstrap). For double Q
/// a fair coin picks which table is updated; the other table evaluates the
/// updated table's greedy action (lowest index on ties).
pub fn update<R: Rng + ?Sized>(
    tables: &mut QTables,
    s: StateIndex,
    a: ActionId,
    r: f64,
    s_next: Option<StateIndex>,
    cfg: &AgentConfig,
    rng: &mut R,
) {
    let n_actions = cfg.n_actions();
    let n = tables.bump_steps();
    let alpha = learning_rate(n).unwrap_or(1.0);
    let i = a.index();

    match cfg.algorithm {
        Algorithm::DoubleQ => {
            let update_first = rng.random_bool(0.5);
            let bootstrap = s_next.map_or(0.0, |sn| {
                let next = tables.row(&sn);
                let (select, evaluate) = if update_first {
                    (&next.q1, &next.q2)
                } else {
                    (&next.q2, &next.q1)
                };
                evaluate[argmax_lowest(&select[..n_actions])]
            });
            let target = r + cfg.gamma * bootstrap;
            let row = tables.row_mut(s);
            let q = if update_first {
                &mut row.q1[i]
            } else {
                &mut row.q2[i]
            };
            *q += alpha * (target - *q);
            row.visits[i] = row.visits[i].saturating_add(1);
        }
        Algorithm::SingleQ => {
            let bootstrap = s_next.map_or(0.0, |sn| {
                let next = tables.row(&sn);
                next.q1[..n_actions]
                    .iter()
                    .copied()
                    .fold(f64::NEG_INFINITY, f64::max)
            });
            let target = r + cfg.gamma * bootstrap;
            let row = tables.row_mut(s);
            row.q1[i] += alpha * (target - row.q1[i]);
            row.visits[i] = row.visits[i].saturating_add(1);
        }
    }
}

/// Rotates the RIS according to `a` for one time step.
pub fn apply_yaw_action(pose: Pose, a: ActionId, cfg: &AgentConfig) -> Pose {
    pose.with_yaw(pose.yaw() + a.yaw_delta(cfg.gamma_d, cfg.t_s))
}
