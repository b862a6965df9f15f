//! Per-slot bandwidth allocation inside one cell.

/// `(user id, bandwidth in Hz)` pairs, ordered by user id.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Allocation {
    pub shares: Vec<(usize, f64)>,
}

impl Allocation {
    pub fn is_empty(&self) -> bool {
        self.shares.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.shares.iter().map(|s| s.1).sum()
    }

    pub fn get(&self, user: usize) -> Option<f64> {
        self.shares.iter().find(|s| s.0 == user).map(|s| s.1)
    }
}

/// Splits `bandwidth` evenly between the active users.
pub fn allocate_equal(active: &[usize], bandwidth: f64) -> Allocation {
    if active.is_empty() {
        return Allocation::default();
    }
    let share = bandwidth / active.len() as f64;
    let mut shares: Vec<(usize, f64)> = active.iter().map(|&u| (u, share)).collect();
    shares.sort_by_key(|s| s.0);
    Allocation { shares }
}

/// Gives the whole band to the active user with the best channel quality;
/// the others get zero. Ties go to the lowest user id.
pub fn allocate_cq(quality: &[(usize, f64)], bandwidth: f64) -> Allocation {
    let Some(winner) = quality.iter().copied().reduce(|best, q| {
        if q.1 > best.1 || (q.1 == best.1 && q.0 < best.0) {
            q
        } else {
            best
        }
    }) else {
        return Allocation::default();
    };
    let mut shares: Vec<(usize, f64)> = quality
        .iter()
        .map(|&(u, _)| (u, if u == winner.0 { bandwidth } else { 0.0 }))
        .collect();
    shares.sort_by_key(|s| s.0);
    Allocation { shares }
}
