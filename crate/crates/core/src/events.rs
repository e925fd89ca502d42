//! Key-event detection over consecutive period pairs, and foreshadow drafts
//! built from detected events.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::compile::compute_ranks;
use crate::data::RankingDataset;
use crate::foreshadow::{Effect, ForeshadowSpec};

pub const DEFAULT_JUMP_THRESHOLD: usize = 3;
pub const DEFAULT_LEAD_PERIODS: f64 = 1.0;

/// Declaration order is the sort order used in detector output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    Overtake,
    NewLeader,
    EntersTopN,
    ExitsTopN,
    RankJump,
}

impl EventKind {
    pub fn as_str(self) -> &'static str {
        match self {
            EventKind::Overtake => "overtake",
            EventKind::NewLeader => "new_leader",
            EventKind::EntersTopN => "enters_top_n",
            EventKind::ExitsTopN => "exits_top_n",
            EventKind::RankJump => "rank_jump",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct KeyEvent {
    pub kind: EventKind,
    pub item_id: String,
    /// Later period of the compared pair; always ≥ 1.
    pub period_index: usize,
    /// Absolute rank change of `item_id` across the pair.
    pub magnitude: usize,
    /// The overtaken item, for overtakes.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub counterpart: Option<String>,
}

impl KeyEvent {
    fn sort_key(&self) -> (usize, EventKind, &str, Option<&str>) {
        (self.period_index, self.kind, &self.item_id, self.counterpart.as_deref())
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EventError {
    #[error("lead_periods must be positive and finite")]
    InvalidLead,
}

/// Scans each consecutive period pair `(p-1, p)` for rank changes.
///
/// * `new_leader`: the item holds rank 1 at `p` but not at `p-1`.
/// * `overtake`: item `a` was below `b` and is now above it, with both in
///   the top `top_n` at `p`. Reported once per swapped pair, on the rising
///   item. `a` may keep its own rank when `b` falls past it.
/// * `enters_top_n` / `exits_top_n`: the item crosses the `top_n` boundary.
/// * `rank_jump`: the rank moves by at least `jump_threshold`.
///
/// Output is sorted by `(period_index, kind, item_id, counterpart)`, which
/// makes it independent of row order in the dataset.
pub fn detect_events(dataset: &RankingDataset, top_n: usize, jump_threshold: usize) -> Vec<KeyEvent> {
    let ids: Vec<&str> = dataset.items().iter().map(|it| it.id.as_str()).collect();
    let ranks: Vec<Vec<usize>> = (0..dataset.period_count())
        .map(|p| compute_ranks(&dataset.column(p), &ids))
        .collect();

    let mut events = Vec::new();
    for p in 1..dataset.period_count() {
        let (before, after) = (&ranks[p - 1], &ranks[p]);
        for (i, &id) in ids.iter().enumerate() {
            let (r0, r1) = (before[i], after[i]);
            let magnitude = r0.abs_diff(r1);
            let mut emit = |kind, counterpart: Option<&str>| {
                events.push(KeyEvent {
                    kind,
                    item_id: id.to_string(),
                    period_index: p,
                    magnitude,
                    counterpart: counterpart.map(str::to_string),
                })
            };
            if r1 == 1 && r0 != 1 {
                emit(EventKind::NewLeader, None);
            }
            if r1 <= top_n {
                for (j, &other) in ids.iter().enumerate() {
                    if before[j] < r0 && after[j] > r1 && after[j] <= top_n {
                        emit(EventKind::Overtake, Some(other));
                    }
                }
            }
            if r0 > top_n && r1 <= top_n {
                emit(EventKind::EntersTopN, None);
            }
            if r0 <= top_n && r1 > top_n {
                emit(EventKind::ExitsTopN, None);
            }
            if magnitude >= jump_threshold.max(1) {
                emit(EventKind::RankJump, None);
            }
        }
    }
    events.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
    events
}

/// The largest float strictly below a positive finite `x`.
fn next_below(x: f64) -> f64 {
    debug_assert!(x > 0.0 && x.is_finite());
    f64::from_bits(x.to_bits() - 1)
}

/// Draft spec that contours the event's item for `lead_periods` before it.
///
/// The draft always validates against the dataset the event came from: its
/// window is nudged by an ulp where float rounding would push
/// `timing + duration` past the event.
pub fn suggest_foreshadow(event: &KeyEvent, lead_periods: f64) -> Result<ForeshadowSpec, EventError> {
    if !(lead_periods.is_finite() && lead_periods > 0.0) {
        return Err(EventError::InvalidLead);
    }
    let target_period = event.period_index as f64;
    let mut timing = (target_period - lead_periods).max(0.0);
    if timing >= target_period {
        timing = next_below(target_period);
    }
    let mut duration = target_period - timing;
    while timing + duration > target_period {
        duration = next_below(duration);
    }
    Ok(ForeshadowSpec {
        id: format!("{}-{}-p{}", event.kind.as_str(), event.item_id, event.period_index),
        effects: vec![Effect::contour()],
        target_items: vec![event.item_id.clone()],
        timing,
        duration,
        target_period,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{parse_dataset, ItemRecord};
    use crate::foreshadow::validate_spec;
    use proptest::prelude::*;

    #[test]
    fn rise_to_top_is_new_leader_and_jump() {
        let ds = parse_dataset("item,category,p0,p1\nA,c,10,1\nB,c,5,2\nC,c,1,20\n").unwrap();
        let ev = detect_events(&ds, 10, 2);
        let kinds: Vec<(EventKind, &str)> = ev.iter().map(|e| (e.kind, e.item_id.as_str())).collect();
        assert_eq!(
            kinds,
            [
                (EventKind::Overtake, "B"),
                (EventKind::Overtake, "C"),
                (EventKind::Overtake, "C"),
                (EventKind::NewLeader, "C"),
                (EventKind::RankJump, "A"),
                (EventKind::RankJump, "C"),
            ]
        );
        // B holds rank 2 while A falls past it.
        assert_eq!((ev[0].magnitude, ev[0].counterpart.as_deref()), (0, Some("A")));
        assert_eq!(ev[3].magnitude, 2);
        assert_eq!(ev[1].counterpart.as_deref(), Some("A"));
        assert!(ev.iter().all(|e| e.period_index == 1));
        assert!(detect_events(&ds, 10, 3).iter().all(|e| e.kind != EventKind::RankJump));
    }

    #[test]
    fn constant_ranks_yield_nothing() {
        let ds = parse_dataset("item,category,p0,p1,p2\nA,c,3,4,5\nB,c,2,3,4\nC,c,1,1,1\n").unwrap();
        assert!(detect_events(&ds, 2, 1).is_empty());
    }

    #[test]
    fn top_n_crossings() {
        let ds = parse_dataset("item,category,p0,p1\nA,c,3,1\nB,c,2,2\nC,c,1,3\n").unwrap();
        let ev = detect_events(&ds, 1, 9);
        let kinds: Vec<(EventKind, &str)> = ev.iter().map(|e| (e.kind, e.item_id.as_str())).collect();
        // B moves 2 -> 2 and stays out; C passes A within top 1 only at p1,
        // and A is not in the top 1 afterwards, so no overtake is counted.
        assert_eq!(
            kinds,
            [
                (EventKind::NewLeader, "C"),
                (EventKind::EntersTopN, "C"),
                (EventKind::ExitsTopN, "A"),
            ]
        );
    }

    #[test]
    fn suggestion_arithmetic() {
        let ev = |p| KeyEvent {
            kind: EventKind::NewLeader,
            item_id: "A".into(),
            period_index: p,
            magnitude: 1,
            counterpart: None,
        };
        let s = suggest_foreshadow(&ev(3), 1.5).unwrap();
        assert_eq!((s.timing, s.duration, s.target_period), (1.5, 1.5, 3.0));
        let s = suggest_foreshadow(&ev(1), 5.0).unwrap();
        assert_eq!((s.timing, s.duration), (0.0, 1.0));
        assert_eq!(s.effects, [Effect::contour()]);
        assert!(suggest_foreshadow(&ev(1), 0.0).is_err());
        let s = suggest_foreshadow(&ev(3), 1e-300).unwrap();
        assert!(s.duration > 0.0 && s.timing + s.duration <= 3.0);
    }

    /// Rule-by-rule oracle: ranks by pairwise counting, no sorting.
    fn oracle(ds: &RankingDataset, top_n: usize, jump: usize) -> Vec<KeyEvent> {
        let n = ds.item_count();
        let id = |i: usize| ds.items()[i].id.clone();
        let rank = |p: usize, i: usize| {
            1 + (0..n)
                .filter(|&j| {
                    ds.value(j, p) > ds.value(i, p) || (ds.value(j, p) == ds.value(i, p) && id(j) < id(i))
                })
                .count()
        };
        let mut out = Vec::new();
        for p in 1..ds.period_count() {
            for i in 0..n {
                let (r0, r1) = (rank(p - 1, i), rank(p, i));
                let ev = |kind, counterpart| KeyEvent {
                    kind,
                    item_id: id(i),
                    period_index: p,
                    magnitude: r0.abs_diff(r1),
                    counterpart,
                };
                if r1 == 1 && r0 != 1 {
                    out.push(ev(EventKind::NewLeader, None));
                }
                for j in 0..n {
                    let was_behind = rank(p - 1, i) > rank(p - 1, j);
                    let now_ahead = rank(p, i) < rank(p, j);
                    if was_behind && now_ahead && rank(p, i) <= top_n && rank(p, j) <= top_n {
                        out.push(ev(EventKind::Overtake, Some(id(j))));
                    }
                }
                if r0 > top_n && r1 <= top_n {
                    out.push(ev(EventKind::EntersTopN, None));
                }
                if r0 <= top_n && r1 > top_n {
                    out.push(ev(EventKind::ExitsTopN, None));
                }
                if r0.abs_diff(r1) >= jump {
                    out.push(ev(EventKind::RankJump, None));
                }
            }
        }
        out.sort_by_key(|e| (e.period_index, e.kind, e.item_id.clone(), e.counterpart.clone()));
        out
    }

    fn arb_dataset() -> impl Strategy<Value = RankingDataset> {
        (2usize..9, 2usize..6).prop_flat_map(|(n, p)| {
            proptest::collection::vec(proptest::collection::vec(0u8..6, p), n).prop_map(move |rows| {
                let items = (0..n).map(|i| ItemRecord::new(format!("i{}", (i * 5) % 9), "c")).collect();
                let periods = (0..p).map(|i| i.to_string()).collect();
                let values = rows.into_iter().map(|r| r.into_iter().map(f64::from).collect()).collect();
                RankingDataset::new(items, periods, values).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn detector_matches_oracle(ds in arb_dataset(), top_n in 1usize..5, jump in 1usize..4) {
            prop_assert_eq!(detect_events(&ds, top_n, jump), oracle(&ds, top_n, jump));
        }

        #[test]
        fn row_order_does_not_matter(ds in arb_dataset(), top_n in 1usize..5) {
            let items: Vec<ItemRecord> = ds.items().iter().rev().cloned().collect();
            let values: Vec<Vec<f64>> = ds.values().iter().rev().cloned().collect();
            let flipped = RankingDataset::new(items, ds.periods().to_vec(), values).unwrap();
            prop_assert_eq!(detect_events(&ds, top_n, 2), detect_events(&flipped, top_n, 2));
        }

        #[test]
        fn suggestions_validate(ds in arb_dataset(), lead in 0.001f64..6.0) {
            for ev in detect_events(&ds, 3, 1) {
                prop_assert!(ev.period_index >= 1);
                let draft = suggest_foreshadow(&ev, lead).unwrap();
                prop_assert_eq!(validate_spec(&draft, &ds), Ok(()));
            }
        }
    }
}
