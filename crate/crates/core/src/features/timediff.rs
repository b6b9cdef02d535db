//! Global and per-stream gaps between neighbouring packets.

use std::collections::HashMap;
use std::hash::Hash;

/// `[Next_Current_diff, Next_Pre_diff, SNext_Current_diff, SNext_Pre_diff]`.
pub type TimeDiffs = [f64; 4];

/// Gaps for time-ordered records; `keys[i]` selects the local stream of record `i`.
///
/// A gap that needs a missing neighbour (first or last packet) is 0.
pub fn time_diffs<K: Hash + Eq + Clone>(times: &[f64], keys: &[K]) -> Vec<TimeDiffs> {
    assert_eq!(times.len(), keys.len(), "one stream key per record");
    let global = neighbour_gaps(times);

    let mut streams: HashMap<K, Vec<usize>> = HashMap::new();
    for (i, k) in keys.iter().enumerate() {
        streams.entry(k.clone()).or_default().push(i);
    }
    let mut local = vec![[0.0; 2]; times.len()];
    for members in streams.values() {
        let t: Vec<f64> = members.iter().map(|&i| times[i]).collect();
        for (gap, &i) in neighbour_gaps(&t).into_iter().zip(members) {
            local[i] = gap;
        }
    }
    global
        .into_iter()
        .zip(local)
        .map(|(g, l)| [g[0], g[1], l[0], l[1]])
        .collect()
}

/// `[next - current, next - previous]` per position.
fn neighbour_gaps(times: &[f64]) -> Vec<[f64; 2]> {
    let n = times.len();
    (0..n)
        .map(|i| {
            let next = (i + 1 < n).then(|| times[i + 1]);
            let prev = (i > 0).then(|| times[i - 1]);
            let next_cur = next.map_or(0.0, |t| t - times[i]);
            let next_pre = match (next, prev) {
                (Some(n), Some(p)) => n - p,
                _ => 0.0,
            };
            [next_cur, next_pre]
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hand_traced_example() {
        let d = time_diffs(&[1.0, 1.5, 3.0], &[0, 0, 0]);
        assert_eq!(d[1][0], 1.5);
        assert_eq!(d[1][1], 2.0);
        assert_eq!(d[0], [0.5, 0.0, 0.5, 0.0]);
        assert_eq!(d[2], [0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn lone_packet_in_its_stream_has_zero_local_gaps() {
        let d = time_diffs(&[1.0, 2.0, 3.0], &["a", "b", "a"]);
        assert_eq!(d[1], [1.0, 2.0, 0.0, 0.0]);
        assert_eq!(d[0][2], 2.0);
    }

    #[test]
    fn equal_spacing() {
        let times: Vec<f64> = (0..10).map(|i| i as f64 * 0.25).collect();
        let d = time_diffs(&times, &vec![(); 10]);
        for row in &d[1..9] {
            assert_eq!(row[0], 0.25);
            assert_eq!(row[1], 0.5);
        }
    }
}
