//! Gated minimum-cost assignment between detections and sensor positions.

use super::FusionError;
use crate::geometry::FieldPoint;
use serde::Serialize;

/// One matched (detection, player) pair with its field distance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MatchPair {
    /// Index into the detections slice passed to [`match_frame`].
    pub detection: usize,
    pub player_id: String,
    pub distance_m: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct AssignmentResult {
    pub pairs: Vec<MatchPair>,
    pub unmatched_detections: Vec<usize>,
    pub unmatched_players: Vec<String>,
}

/// Match detections against sensor positions by minimum total field
/// distance.
///
/// Pairs farther apart than `gate_m` are forbidden. The solver first
/// maximizes the number of feasible matches, then minimizes their total
/// distance (forbidden cells carry a cost larger than any feasible total, so
/// plain cost minimization orders solutions exactly that way). Empty inputs
/// yield an empty result.
pub fn match_frame(
    detections: &[FieldPoint],
    players: &[(String, FieldPoint)],
    gate_m: f64,
) -> Result<AssignmentResult, FusionError> {
    if !gate_m.is_finite() || gate_m <= 0.0 {
        return Err(FusionError::InvalidConfig(format!(
            "gate must be positive, got {gate_m}"
        )));
    }
    let n = detections.len();
    let m = players.len();
    let mut result = AssignmentResult::default();
    if n == 0 || m == 0 {
        result.unmatched_detections = (0..n).collect();
        result.unmatched_players = players.iter().map(|(id, _)| id.clone()).collect();
        return Ok(result);
    }

    let dist = |i: usize, j: usize| {
        let (d, p) = (&detections[i], &players[j].1);
        ((d.x - p.x).powi(2) + (d.y - p.y).powi(2)).sqrt()
    };

    let mut feasible_sum = 0.0;
    for i in 0..n {
        for j in 0..m {
            let c = dist(i, j);
            if c <= gate_m {
                feasible_sum += c;
            }
        }
    }
    let big = feasible_sum + gate_m + 1.0;

    // The solver wants rows <= cols; flip the matrix when players are the
    // smaller side.
    let det_rows = n <= m;
    let (rows, cols) = if det_rows { (n, m) } else { (m, n) };
    let cost: Vec<Vec<f64>> = (0..rows)
        .map(|r| {
            (0..cols)
                .map(|c| {
                    let (i, j) = if det_rows { (r, c) } else { (c, r) };
                    let d = dist(i, j);
                    if d <= gate_m {
                        d
                    } else {
                        big
                    }
                })
                .collect()
        })
        .collect();

    let col_of_row = hungarian_min_cost(&cost);

    let mut det_matched = vec![false; n];
    let mut player_matched = vec![false; m];
    for (r, c) in col_of_row.into_iter().enumerate() {
        let (i, j) = if det_rows { (r, c) } else { (c, r) };
        let d = dist(i, j);
        if d <= gate_m {
            det_matched[i] = true;
            player_matched[j] = true;
            result.pairs.push(MatchPair {
                detection: i,
                player_id: players[j].0.clone(),
                distance_m: d,
            });
        }
    }
    result.pairs.sort_by_key(|p| p.detection);
    result.unmatched_detections = (0..n).filter(|&i| !det_matched[i]).collect();
    result.unmatched_players = (0..m)
        .filter(|&j| !player_matched[j])
        .map(|j| players[j].0.clone())
        .collect();
    Ok(result)
}

/// Minimum-cost assignment for a dense rectangular matrix with
/// `rows <= cols`; returns the column assigned to each row.
///
/// Shortest-augmenting-path formulation with row/column potentials, O(rows^2
/// * cols). All costs must be finite.
fn hungarian_min_cost(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    if n == 0 {
        return Vec::new();
    }
    let m = cost[0].len();
    assert!(n <= m, "solver requires rows <= cols");

    const NONE: usize = usize::MAX;
    let mut u = vec![0.0f64; n]; // row potentials
    let mut v = vec![0.0f64; m + 1]; // column potentials, last is virtual
    let mut row_of_col = vec![NONE; m + 1];

    for i in 0..n {
        row_of_col[m] = i;
        let mut j0 = m;
        let mut min_to = vec![f64::INFINITY; m + 1];
        let mut prev_col = vec![m; m + 1];
        let mut used = vec![false; m + 1];

        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = m;
            for j in 0..m {
                if !used[j] {
                    let reduced = cost[i0][j] - u[i0] - v[j];
                    if reduced < min_to[j] {
                        min_to[j] = reduced;
                        prev_col[j] = j0;
                    }
                    if min_to[j] < delta {
                        delta = min_to[j];
                        j1 = j;
                    }
                }
            }
            for j in 0..=m {
                if used[j] {
                    if row_of_col[j] != NONE {
                        u[row_of_col[j]] += delta;
                    }
                    v[j] -= delta;
                } else {
                    min_to[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == NONE {
                break;
            }
        }
        // augment along the alternating path back to the virtual column
        while j0 != m {
            let j1 = prev_col[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
        }
    }

    let mut col_of_row = vec![NONE; n];
    for j in 0..m {
        if row_of_col[j] != NONE {
            col_of_row[row_of_col[j]] = j;
        }
    }
    debug_assert!(col_of_row.iter().all(|&c| c != NONE));
    col_of_row
}
