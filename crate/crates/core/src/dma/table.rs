use crate::channel::LinkGains;
use crate::geometry::CandidatePath;

use super::SystemSnapshot;

/// Precomputed channel terms for every player, candidate and sample offset.
///
/// Utilities read from the table are bitwise identical to
/// [`super::path_utility_se`]: the same distances feed the same channel
/// evaluations, and interference is accumulated in ascending drone order.
#[derive(Debug, Clone)]
pub struct UtilityTable {
    players: Vec<usize>,
    n_cand: usize,
    k: usize,
    noise: f64,
    /// Global ids of each player's own users.
    own: Vec<Vec<usize>>,
    /// Per player, indexed `[c][k][j]`.
    own_gains: Vec<Vec<LinkGains>>,
    /// Per player, the foreign users it can reach within the epoch.
    victims: Vec<Vec<usize>>,
    /// Per player, expected power at its victims, `[c][k][v]`; zero beyond
    /// the interference range.
    power: Vec<Vec<f64>>,
    /// Per global user, `(player, victim column)` in ascending drone order.
    interferers: Vec<Vec<(usize, usize)>>,
}

impl UtilityTable {
    pub fn build(snap: &SystemSnapshot<'_>, angles: &[f64]) -> Self {
        let link = snap.link;
        let cfg = snap.config();
        let kappa = link.interference_range();
        let reach = kappa + cfg.drone_speed * cfg.direction_update_s + 1e-6;
        let k = cfg.path_samples as usize;
        let n_cand = angles.len();
        let players = snap.players();

        let mut owner = Vec::new();
        let mut points = Vec::new();
        let mut own = Vec::with_capacity(players.len());
        for (s, &n) in players.iter().enumerate() {
            let ids: Vec<usize> =
                (points.len()..points.len() + snap.active_users[n].len()).collect();
            points.extend_from_slice(&snap.active_users[n]);
            owner.extend(std::iter::repeat_n(s, ids.len()));
            own.push(ids);
        }

        let mut own_gains = Vec::with_capacity(players.len());
        let mut victims = Vec::with_capacity(players.len());
        let mut power = Vec::with_capacity(players.len());
        let mut interferers = vec![Vec::new(); points.len()];
        for (s, &n) in players.iter().enumerate() {
            let paths: Vec<CandidatePath> = angles.iter().map(|&a| snap.path(n, a)).collect();
            let mut gains = Vec::with_capacity(n_cand * k * own[s].len());
            for p in &paths {
                for sample in &p.samples {
                    gains.extend(
                        own[s]
                            .iter()
                            .map(|&u| link.gains(points[u].distance(sample.1))),
                    );
                }
            }
            own_gains.push(gains);

            let start = snap.poses[n].position;
            let vs: Vec<usize> = (0..points.len())
                .filter(|&u| owner[u] != s && points[u].distance(start) <= reach)
                .collect();
            for (col, &u) in vs.iter().enumerate() {
                interferers[u].push((s, col));
            }
            let mut pw = Vec::with_capacity(n_cand * k * vs.len());
            for p in &paths {
                for sample in &p.samples {
                    pw.extend(vs.iter().map(|&u| {
                        let r = points[u].distance(sample.1);
                        if r <= kappa {
                            link.expected_power(r)
                        } else {
                            0.0
                        }
                    }));
                }
            }
            power.push(pw);
            victims.push(vs);
        }

        UtilityTable {
            players,
            n_cand,
            k,
            noise: link.noise(),
            own,
            own_gains,
            victims,
            power,
            interferers,
        }
    }

    /// Transmitting drones, ascending; a player's slot is its index here.
    pub fn players(&self) -> &[usize] {
        &self.players
    }

    pub fn n_candidates(&self) -> usize {
        self.n_cand
    }

    /// Interference at each own user of `slot` from the other players'
    /// choices, indexed `[k][j]`. `choice[slot]` is ignored.
    pub fn interference(&self, slot: usize, choice: &[usize]) -> Vec<f64> {
        let nq = self.own[slot].len();
        let mut out = vec![0.0; self.k * nq];
        for (j, &u) in self.own[slot].iter().enumerate() {
            for k in 0..self.k {
                let mut sum = 0.0;
                for &(s, col) in &self.interferers[u] {
                    let nv = self.victims[s].len();
                    sum += self.power[s][(choice[s] * self.k + k) * nv + col];
                }
                out[k * nq + j] = sum;
            }
        }
        out
    }

    /// Path utility of `slot` flying candidate `c` under `interference`.
    pub fn utility_with(&self, slot: usize, c: usize, interference: &[f64]) -> f64 {
        let nq = self.own[slot].len();
        let gains = &self.own_gains[slot][c * self.k * nq..(c + 1) * self.k * nq];
        let mut total = 0.0;
        for k in 0..self.k {
            let mut cell = 0.0;
            for j in 0..nq {
                cell += gains[k * nq + j].se(interference[k * nq + j] + self.noise);
            }
            total += cell / nq as f64;
        }
        total / self.k as f64
    }

    pub fn utility(&self, slot: usize, choice: &[usize]) -> f64 {
        self.utility_with(slot, choice[slot], &self.interference(slot, choice))
    }

    /// Best reply of `slot`; earlier entries of `pref` win ties.
    pub fn best_response(&self, slot: usize, choice: &[usize], pref: &[usize]) -> usize {
        let interference = self.interference(slot, choice);
        let mut best = (f64::NEG_INFINITY, pref[0]);
        for &c in pref {
            let u = self.utility_with(slot, c, &interference);
            if u > best.0 {
                best = (u, c);
            }
        }
        best.1
    }
}
