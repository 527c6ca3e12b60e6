//! Incremental quantization scheduling with rollback-and-split refinement.
//!
//! Tensors are quantized in *fractions* (ordered groups of tensor names).
//! After each fraction is quantized and frozen, a caller-supplied hook
//! retrains the still-floating remainder and reports a validation metric.
//! If the metric degrades by more than a threshold relative to the value
//! before the fraction, the whole attempt is rolled back and retried in
//! smaller pieces: a size-5 fraction splits `[1, 2, 2]`, everything else
//! splits into singletons, recursively.  A singleton that still degrades is
//! committed anyway — there is nothing smaller to try.
//!
//! Every attempt appends one event to the log, carrying the three metric
//! readings (before, after quantization, after retraining) and a digest of
//! every frozen tensor's codes so that freezes can be audited for
//! bit-stability after the fact.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;

use thiserror::Error;

use crate::quant::{apply_fcq, dequantize, quantize_uniform, Bitwidth, QuantError, QuantizedTensor, Scheme};
use crate::tensor::TensorSet;

pub type TensorId = String;

/// Guard against division by zero when the baseline metric is zero.
const METRIC_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum InqError {
    #[error("schedule names unknown tensor {0:?}")]
    UnknownTensor(TensorId),
    #[error("schedule lists tensor {0:?} more than once")]
    DuplicateTensor(TensorId),
    #[error("schedule covers {got} of {expected} tensors")]
    IncompleteSchedule { got: usize, expected: usize },
    #[error("split index {index} exceeds tensor count {count}")]
    SplitOutOfRange { index: usize, count: usize },
    #[error("retrain hook modified frozen tensor {0:?}")]
    HookMutatedFrozen(TensorId),
    #[error(transparent)]
    Quant(#[from] QuantError),
}

/// An ordered partition of tensor names into quantization fractions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FractionSchedule {
    pub fractions: Vec<Vec<TensorId>>,
}

impl FractionSchedule {
    pub fn sizes(&self) -> Vec<usize> {
        self.fractions.iter().map(|f| f.len()).collect()
    }

    pub fn tensor_count(&self) -> usize {
        self.fractions.iter().map(|f| f.len()).sum()
    }
}

/// The default schedule: fraction sizes 1, 2, 3, ... ascending, with the
/// final fraction absorbing whatever remains (18 tensors give
/// `[1, 2, 3, 4, 5, 3]`, 4 give `[1, 2, 1]`).
pub fn default_schedule(names: &[TensorId]) -> FractionSchedule {
    let mut fractions = Vec::new();
    let mut start = 0usize;
    let mut size = 1usize;
    while start < names.len() {
        let take = size.min(names.len() - start);
        fractions.push(names[start..start + take].to_vec());
        start += take;
        size += 1;
    }
    FractionSchedule { fractions }
}

/// Degradation threshold and split behaviour of the refinement loop.
#[derive(Debug, Clone, PartialEq)]
pub struct RefinementPolicy {
    /// Maximum tolerated relative metric increase per fraction.
    pub threshold: f64,
    /// Preferred split for a degraded fraction whose size matches the
    /// pattern's sum; every other size falls back to singletons.
    pub split_pattern: Vec<usize>,
}

impl Default for RefinementPolicy {
    fn default() -> Self {
        Self {
            threshold: 0.10,
            split_pattern: vec![1, 2, 2],
        }
    }
}

impl RefinementPolicy {
    fn split_sizes(&self, len: usize) -> Vec<usize> {
        if self.split_pattern.iter().sum::<usize>() == len {
            self.split_pattern.clone()
        } else {
            vec![1; len]
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FreezeStatus {
    Float,
    Frozen,
}

/// Per-tensor scheduler state.  Once frozen, `snapshot` holds the quantized
/// codes and `frozen_values` the dequantized values the network must keep
/// bit-identical from then on.
#[derive(Debug, Clone, PartialEq)]
pub struct TensorState {
    pub status: FreezeStatus,
    pub scheme: Option<Scheme>,
    pub snapshot: Option<QuantizedTensor>,
    pub frozen_values: Option<Vec<f64>>,
}

impl TensorState {
    fn float() -> Self {
        Self {
            status: FreezeStatus::Float,
            scheme: None,
            snapshot: None,
            frozen_values: None,
        }
    }
}

/// Caller-supplied retraining procedure.
///
/// `retrain` may update any tensor not named in `frozen` (the scheduler
/// verifies frozen tensors bit-for-bit afterwards and errors on mutation);
/// `evaluate` returns the validation metric the degradation test uses.
/// The scheduler calls `evaluate` exactly three times per attempt: before
/// quantizing the fraction, right after quantizing, and after retraining.
pub trait RetrainHook {
    fn retrain(&mut self, weights: &mut TensorSet, frozen: &BTreeSet<TensorId>, steps: usize);
    fn evaluate(&mut self, weights: &TensorSet) -> f64;
}

/// Hook that never retrains and reports a constant zero metric.  With an
/// infinite threshold this reduces the whole run to one-shot quantization.
pub struct NoopHook;

impl RetrainHook for NoopHook {
    fn retrain(&mut self, _: &mut TensorSet, _: &BTreeSet<TensorId>, _: usize) {}

    fn evaluate(&mut self, _: &TensorSet) -> f64 {
        0.0
    }
}

/// Scripted hook for tests and demos: pops pre-recorded metric readings.
pub struct ScriptedHook {
    metrics: VecDeque<f64>,
}

impl ScriptedHook {
    pub fn new(metrics: impl IntoIterator<Item = f64>) -> Self {
        Self {
            metrics: metrics.into_iter().collect(),
        }
    }
}

impl RetrainHook for ScriptedHook {
    fn retrain(&mut self, _: &mut TensorSet, _: &BTreeSet<TensorId>, _: usize) {}

    fn evaluate(&mut self, _: &TensorSet) -> f64 {
        self.metrics.pop_front().expect("scripted metrics exhausted")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EventKind {
    Commit,
    Rollback,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EventAction {
    Committed,
    Split(Vec<usize>),
}

/// One log entry per quantization attempt.
#[derive(Debug, Clone, PartialEq)]
pub struct InqEvent {
    pub kind: EventKind,
    pub tensors: Vec<TensorId>,
    pub metric_before: f64,
    pub metric_quantized: f64,
    pub metric_after: f64,
    pub degradation: f64,
    pub action: EventAction,
    /// FNV-1a digest of every frozen tensor's codes after this event, in
    /// name order.  Lets audits confirm freezes stay bit-identical.
    pub frozen_digests: Vec<(TensorId, u64)>,
}

impl fmt::Display for InqEvent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.kind {
            EventKind::Commit => "commit",
            EventKind::Rollback => "rollback",
        };
        let action = match &self.action {
            EventAction::Committed => "committed".to_string(),
            EventAction::Split(sizes) => format!(
                "split:{}",
                sizes
                    .iter()
                    .map(|s| s.to_string())
                    .collect::<Vec<_>>()
                    .join("+")
            ),
        };
        write!(
            f,
            "event={kind} tensors={} before={:.6e} quantized={:.6e} after={:.6e} degradation={:.6e} action={action}",
            self.tensors.join(","),
            self.metric_before,
            self.metric_quantized,
            self.metric_after,
            self.degradation,
        )
    }
}

/// Final scheduler state: per-tensor freeze records plus the event log.
#[derive(Debug, Clone, PartialEq)]
pub struct InqOutcome {
    pub states: BTreeMap<TensorId, TensorState>,
    pub events: Vec<InqEvent>,
}

impl InqOutcome {
    pub fn all_frozen(&self) -> bool {
        self.states
            .values()
            .all(|s| s.status == FreezeStatus::Frozen)
    }

    pub fn snapshot(&self, name: &str) -> Option<&QuantizedTensor> {
        self.states.get(name).and_then(|s| s.snapshot.as_ref())
    }
}

/// FNV-1a over the little-endian bytes of a tensor's codes.
pub fn code_digest(q: &QuantizedTensor) -> u64 {
    let mut h: u64 = 0xcbf29ce484222325;
    for &code in &q.codes {
        for byte in code.to_le_bytes() {
            h ^= byte as u64;
            h = h.wrapping_mul(0x100000001b3);
        }
    }
    h
}

struct Engine<'a> {
    weights: &'a mut TensorSet,
    hook: &'a mut dyn RetrainHook,
    policy: &'a RefinementPolicy,
    steps: usize,
    states: BTreeMap<TensorId, TensorState>,
    events: Vec<InqEvent>,
}

impl<'a> Engine<'a> {
    fn new(
        weights: &'a mut TensorSet,
        hook: &'a mut dyn RetrainHook,
        policy: &'a RefinementPolicy,
        steps: usize,
    ) -> Self {
        let states = weights
            .names()
            .into_iter()
            .map(|n| (n, TensorState::float()))
            .collect();
        Self {
            weights,
            hook,
            policy,
            steps,
            states,
            events: Vec::new(),
        }
    }

    fn frozen_set(&self) -> BTreeSet<TensorId> {
        self.states
            .iter()
            .filter(|(_, s)| s.status == FreezeStatus::Frozen)
            .map(|(n, _)| n.clone())
            .collect()
    }

    /// Quantizes a tensor from its current float values under `scheme`,
    /// freezes it, and substitutes the dequantized values into the network.
    fn quantize_and_freeze(&mut self, name: &str, scheme: Scheme) -> Result<(), InqError> {
        let tensor = self
            .weights
            .get(name)
            .ok_or_else(|| InqError::UnknownTensor(name.to_string()))?;
        let q = quantize_uniform(tensor, Bitwidth::B8)?;
        let q = match scheme {
            Scheme::Fcq => apply_fcq(&q)?,
            Scheme::Uniform => q,
        };
        let deq = dequantize(&q);
        self.weights
            .get_mut(name)
            .expect("tensor just looked up")
            .values = deq.values.clone();
        self.states.insert(
            name.to_string(),
            TensorState {
                status: FreezeStatus::Frozen,
                scheme: Some(scheme),
                snapshot: Some(q),
                frozen_values: Some(deq.values),
            },
        );
        Ok(())
    }

    fn verify_frozen_untouched(&self) -> Result<(), InqError> {
        for (name, state) in &self.states {
            if state.status != FreezeStatus::Frozen {
                continue;
            }
            let expected = state.frozen_values.as_ref().expect("frozen has values");
            let current = &self.weights.get(name).expect("tensor exists").values;
            let same = expected.len() == current.len()
                && expected
                    .iter()
                    .zip(current)
                    .all(|(a, b)| a.to_bits() == b.to_bits());
            if !same {
                return Err(InqError::HookMutatedFrozen(name.clone()));
            }
        }
        Ok(())
    }

    fn record(
        &mut self,
        kind: EventKind,
        tensors: &[TensorId],
        metrics: (f64, f64, f64, f64),
        action: EventAction,
    ) {
        let frozen_digests = self
            .states
            .iter()
            .filter(|(_, s)| s.status == FreezeStatus::Frozen)
            .map(|(n, s)| (n.clone(), code_digest(s.snapshot.as_ref().expect("frozen"))))
            .collect();
        let (metric_before, metric_quantized, metric_after, degradation) = metrics;
        self.events.push(InqEvent {
            kind,
            tensors: tensors.to_vec(),
            metric_before,
            metric_quantized,
            metric_after,
            degradation,
            action,
            frozen_digests,
        });
    }

    /// One quantize/retrain/check attempt.  Degraded multi-tensor fractions
    /// are rolled back in full (fraction tensors *and* the retrained float
    /// remainder return to the pre-attempt snapshot) and retried split.
    fn attempt(&mut self, fraction: &[TensorId], scheme: Scheme) -> Result<(), InqError> {
        let before = self.hook.evaluate(self.weights);
        let saved = self.weights.clone();

        for name in fraction {
            self.quantize_and_freeze(name, scheme)?;
        }
        let quantized = self.hook.evaluate(self.weights);

        self.hook.retrain(self.weights, &self.frozen_set(), self.steps);
        self.verify_frozen_untouched()?;
        let after = self.hook.evaluate(self.weights);

        let degradation = if after > before {
            (after - before) / before.abs().max(METRIC_FLOOR)
        } else {
            0.0
        };
        let metrics = (before, quantized, after, degradation);

        if degradation > self.policy.threshold && fraction.len() > 1 {
            *self.weights = saved;
            for name in fraction {
                self.states.insert(name.clone(), TensorState::float());
            }
            let split = self.policy.split_sizes(fraction.len());
            self.record(EventKind::Rollback, fraction, metrics, EventAction::Split(split.clone()));
            let mut start = 0usize;
            for size in split {
                self.attempt(&fraction[start..start + size], scheme)?;
                start += size;
            }
        } else {
            self.record(EventKind::Commit, fraction, metrics, EventAction::Committed);
        }
        Ok(())
    }

    /// Quantize-and-freeze with no retraining; used for the final tensor of
    /// a mixed run, where nothing floating is left worth training.  Calls
    /// `evaluate` twice (before, quantized).
    fn freeze_without_retrain(&mut self, name: &str, scheme: Scheme) -> Result<(), InqError> {
        let before = self.hook.evaluate(self.weights);
        self.quantize_and_freeze(name, scheme)?;
        let quantized = self.hook.evaluate(self.weights);
        let degradation = if quantized > before {
            (quantized - before) / before.abs().max(METRIC_FLOOR)
        } else {
            0.0
        };
        self.record(
            EventKind::Commit,
            &[name.to_string()],
            (before, quantized, quantized, degradation),
            EventAction::Committed,
        );
        Ok(())
    }

    fn finish(self) -> InqOutcome {
        InqOutcome {
            states: self.states,
            events: self.events,
        }
    }
}

fn validate_schedule(schedule: &FractionSchedule, weights: &TensorSet) -> Result<(), InqError> {
    let known: BTreeSet<_> = weights.names().into_iter().collect();
    let mut seen = BTreeSet::new();
    for fraction in &schedule.fractions {
        for name in fraction {
            if !known.contains(name) {
                return Err(InqError::UnknownTensor(name.clone()));
            }
            if !seen.insert(name.clone()) {
                return Err(InqError::DuplicateTensor(name.clone()));
            }
        }
    }
    if seen.len() != known.len() {
        return Err(InqError::IncompleteSchedule {
            got: seen.len(),
            expected: known.len(),
        });
    }
    Ok(())
}

/// Runs the incremental schedule over every tensor of `weights` under one
/// scheme.  On success all tensors are frozen, `weights` holds their
/// dequantized values, and the outcome carries snapshots and the event log.
pub fn run_inq(
    weights: &mut TensorSet,
    schedule: &FractionSchedule,
    scheme: Scheme,
    hook: &mut dyn RetrainHook,
    policy: &RefinementPolicy,
    steps: usize,
) -> Result<InqOutcome, InqError> {
    validate_schedule(schedule, weights)?;
    let mut engine = Engine::new(weights, hook, policy, steps);
    for fraction in &schedule.fractions {
        engine.attempt(fraction, scheme)?;
    }
    Ok(engine.finish())
}

/// Mixed-precision run: tensors before `split_index` (in set order) go
/// through FCQ with incremental retraining, tensors from `split_index` to
/// the second-to-last through uniform 8-bit with incremental retraining,
/// and the final tensor is frozen uniform with no retraining at all (with
/// everything else frozen, retraining has nothing left to recover with).
/// `split_index == weights.len()` degenerates to a pure FCQ run.
pub fn mixed_policy_run(
    weights: &mut TensorSet,
    split_index: usize,
    hook: &mut dyn RetrainHook,
    policy: &RefinementPolicy,
    steps: usize,
) -> Result<InqOutcome, InqError> {
    let names = weights.names();
    if split_index > names.len() {
        return Err(InqError::SplitOutOfRange {
            index: split_index,
            count: names.len(),
        });
    }
    let mut engine = Engine::new(weights, hook, policy, steps);

    let prefix = &names[..split_index];
    if !prefix.is_empty() {
        for fraction in &default_schedule(prefix).fractions {
            engine.attempt(fraction, Scheme::Fcq)?;
        }
    }
    if split_index < names.len() {
        let middle = &names[split_index..names.len() - 1];
        if !middle.is_empty() {
            for fraction in &default_schedule(middle).fractions {
                engine.attempt(fraction, Scheme::Uniform)?;
            }
        }
        engine.freeze_without_retrain(&names[names.len() - 1], Scheme::Uniform)?;
    }
    Ok(engine.finish())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fibbinary::is_fibbinary;
    use crate::tensor::Tensor;

    fn names(n: usize) -> Vec<TensorId> {
        (0..n).map(|i| format!("t{i:02}")).collect()
    }

    fn small_set(n: usize) -> TensorSet {
        let tensors = (0..n)
            .map(|i| {
                let vals: Vec<f64> = (0..4).map(|j| ((i * 7 + j * 3) as f64).sin()).collect();
                Tensor::new(format!("t{i:02}"), vec![4], vals).unwrap()
            })
            .collect();
        TensorSet::from_tensors(tensors).unwrap()
    }

    #[test]
    fn default_schedule_sizes() {
        assert_eq!(default_schedule(&names(18)).sizes(), vec![1, 2, 3, 4, 5, 3]);
        assert_eq!(default_schedule(&names(4)).sizes(), vec![1, 2, 1]);
        assert_eq!(default_schedule(&names(1)).sizes(), vec![1]);
        assert_eq!(default_schedule(&names(15)).sizes(), vec![1, 2, 3, 4, 5]);
        assert_eq!(default_schedule(&names(0)).sizes(), Vec::<usize>::new());
        // Partition property: disjoint union in order.
        let sched = default_schedule(&names(18));
        let flat: Vec<_> = sched.fractions.iter().flatten().cloned().collect();
        assert_eq!(flat, names(18));
    }

    #[test]
    fn schedule_validation() {
        let mut set = small_set(3);
        let policy = RefinementPolicy::default();
        let bad = FractionSchedule {
            fractions: vec![vec!["t00".into()], vec!["nope".into()]],
        };
        assert!(matches!(
            run_inq(&mut set, &bad, Scheme::Fcq, &mut NoopHook, &policy, 0),
            Err(InqError::UnknownTensor(_))
        ));
        let dup = FractionSchedule {
            fractions: vec![vec!["t00".into()], vec!["t00".into()]],
        };
        assert!(matches!(
            run_inq(&mut set, &dup, Scheme::Fcq, &mut NoopHook, &policy, 0),
            Err(InqError::DuplicateTensor(_))
        ));
        let short = FractionSchedule {
            fractions: vec![vec!["t00".into()]],
        };
        assert!(matches!(
            run_inq(&mut set, &short, Scheme::Fcq, &mut NoopHook, &policy, 0),
            Err(InqError::IncompleteSchedule { got: 1, expected: 3 })
        ));
    }

    #[test]
    fn noop_run_equals_one_shot_quantization() {
        // With no retraining, incremental quantization must match
        // quantizing every tensor independently in one shot.
        for scheme in [Scheme::Fcq, Scheme::Uniform] {
            let mut set = small_set(7);
            let reference: Vec<QuantizedTensor> = set
                .iter()
                .map(|t| {
                    let q = quantize_uniform(t, Bitwidth::B8).unwrap();
                    match scheme {
                        Scheme::Fcq => apply_fcq(&q).unwrap(),
                        Scheme::Uniform => q,
                    }
                })
                .collect();

            let schedule = default_schedule(&set.names());
            let policy = RefinementPolicy {
                threshold: f64::INFINITY,
                ..Default::default()
            };
            let outcome =
                run_inq(&mut set, &schedule, scheme, &mut NoopHook, &policy, 0).unwrap();

            assert!(outcome.all_frozen());
            for r in &reference {
                let snap = outcome.snapshot(&r.name).unwrap();
                assert_eq!(snap.codes, r.codes, "{}", r.name);
                assert_eq!(snap.params, r.params);
                // The network now holds the dequantized values.
                assert_eq!(set.get(&r.name).unwrap().values, dequantize(r).values);
            }
        }
    }

    #[test]
    fn fcq_run_freezes_fibbinary_codes() {
        let mut set = small_set(7);
        let schedule = default_schedule(&set.names());
        let policy = RefinementPolicy::default();
        let outcome =
            run_inq(&mut set, &schedule, Scheme::Fcq, &mut NoopHook, &policy, 0).unwrap();
        assert!(outcome.all_frozen());
        for state in outcome.states.values() {
            let q = state.snapshot.as_ref().unwrap();
            assert!(q.codes.iter().all(|&c| is_fibbinary(c, 8).unwrap()));
            assert_eq!(state.scheme, Some(Scheme::Fcq));
        }
    }

    #[test]
    fn forced_degradation_splits_five_then_singletons() {
        // 15 tensors -> schedule [1,2,3,4,5].  The script degrades the
        // size-5 fraction (rollback, split 1+2+2) and then the second
        // size-2 sub-fraction (rollback, split 1+1).
        let mut set = small_set(15);
        let schedule = default_schedule(&set.names());
        assert_eq!(schedule.sizes(), vec![1, 2, 3, 4, 5]);

        let mut hook = ScriptedHook::new([
            1.00, 1.05, 1.00, // [t00] commit
            1.00, 1.06, 1.01, // [t01 t02] commit
            1.01, 1.08, 1.02, // [t03..t05] commit
            1.02, 1.10, 1.03, // [t06..t09] commit
            1.03, 1.60, 1.30, // [t10..t14] degraded -> rollback, split 1+2+2
            1.03, 1.07, 1.04, // [t10] commit
            1.04, 1.09, 1.05, // [t11 t12] commit
            1.05, 1.50, 1.30, // [t13 t14] degraded -> rollback, split 1+1
            1.05, 1.20, 1.10, // [t13] commit (singleton, no further split)
            1.10, 1.25, 1.12, // [t14] commit
        ]);
        let policy = RefinementPolicy::default();
        let outcome =
            run_inq(&mut set, &schedule, Scheme::Fcq, &mut hook, &policy, 0).unwrap();

        let shape: Vec<(EventKind, usize, EventAction)> = outcome
            .events
            .iter()
            .map(|e| (e.kind, e.tensors.len(), e.action.clone()))
            .collect();
        use EventAction::*;
        use EventKind::*;
        assert_eq!(
            shape,
            vec![
                (Commit, 1, Committed),
                (Commit, 2, Committed),
                (Commit, 3, Committed),
                (Commit, 4, Committed),
                (Rollback, 5, Split(vec![1, 2, 2])),
                (Commit, 1, Committed),
                (Commit, 2, Committed),
                (Rollback, 2, Split(vec![1, 1])),
                (Commit, 1, Committed),
                (Commit, 1, Committed),
            ]
        );
        assert!(outcome.all_frozen());
        // Attempt count stays within twice the tensor count.
        assert!(outcome.events.len() <= 2 * 15);
        // The rolled-back attempt reports its degradation.
        let expected = (1.30 - 1.03) / 1.03_f64;
        assert!((outcome.events[4].degradation - expected).abs() < 1e-12);
    }

    #[test]
    fn frozen_digests_stay_stable_across_events() {
        let mut set = small_set(8);
        let schedule = default_schedule(&set.names());
        let policy = RefinementPolicy::default();
        let outcome =
            run_inq(&mut set, &schedule, Scheme::Fcq, &mut NoopHook, &policy, 0).unwrap();

        let mut first_seen: BTreeMap<&str, u64> = BTreeMap::new();
        for event in &outcome.events {
            for (name, digest) in &event.frozen_digests {
                match first_seen.get(name.as_str()) {
                    None => {
                        first_seen.insert(name, *digest);
                    }
                    Some(&d) => assert_eq!(d, *digest, "{name} digest drifted"),
                }
            }
        }
        // Every tensor's final snapshot digest matches its first freeze.
        for (name, state) in &outcome.states {
            let q = state.snapshot.as_ref().unwrap();
            assert_eq!(first_seen[name.as_str()], code_digest(q));
        }
    }

    #[test]
    fn mutating_hook_is_detected() {
        struct EvilHook;
        impl RetrainHook for EvilHook {
            fn retrain(&mut self, w: &mut TensorSet, frozen: &BTreeSet<TensorId>, _: usize) {
                if let Some(name) = frozen.iter().next() {
                    w.get_mut(name).unwrap().values[0] += 1.0;
                }
            }
            fn evaluate(&mut self, _: &TensorSet) -> f64 {
                0.0
            }
        }
        let mut set = small_set(3);
        let schedule = default_schedule(&set.names());
        let policy = RefinementPolicy::default();
        assert!(matches!(
            run_inq(&mut set, &schedule, Scheme::Fcq, &mut EvilHook, &policy, 1),
            Err(InqError::HookMutatedFrozen(_))
        ));
    }

    #[test]
    fn mixed_run_schemes_by_position() {
        let mut set = small_set(7);
        let policy = RefinementPolicy::default();
        let outcome = mixed_policy_run(&mut set, 4, &mut NoopHook, &policy, 0).unwrap();
        assert!(outcome.all_frozen());
        let ns = names(7);
        for (i, name) in ns.iter().enumerate() {
            let state = &outcome.states[name];
            let expected = if i < 4 { Scheme::Fcq } else { Scheme::Uniform };
            assert_eq!(state.scheme, Some(expected), "{name}");
            let q = state.snapshot.as_ref().unwrap();
            if i < 4 {
                assert!(q.codes.iter().all(|&c| is_fibbinary(c, 8).unwrap()));
            }
        }
        // Final tensor commits without retraining: metric_after equals
        // metric_quantized on its event.
        let last = outcome.events.last().unwrap();
        assert_eq!(last.tensors, vec!["t06".to_string()]);
        assert_eq!(last.metric_after, last.metric_quantized);
    }

    #[test]
    fn mixed_run_degenerate_splits() {
        // split 0: everything uniform; split == len: pure FCQ.
        let policy = RefinementPolicy::default();

        let mut set = small_set(4);
        let outcome = mixed_policy_run(&mut set, 0, &mut NoopHook, &policy, 0).unwrap();
        assert!(outcome
            .states
            .values()
            .all(|s| s.scheme == Some(Scheme::Uniform)));

        let mut set = small_set(4);
        let outcome = mixed_policy_run(&mut set, 4, &mut NoopHook, &policy, 0).unwrap();
        assert!(outcome.states.values().all(|s| s.scheme == Some(Scheme::Fcq)));

        let mut set = small_set(4);
        assert!(matches!(
            mixed_policy_run(&mut set, 5, &mut NoopHook, &policy, 0),
            Err(InqError::SplitOutOfRange { index: 5, count: 4 })
        ));
    }

    #[test]
    fn rollback_restores_the_float_remainder() {
        // A hook that perturbs the float remainder during the first retrain
        // call; a rollback of that attempt must undo the perturbation.
        struct PerturbHook {
            metrics: VecDeque<f64>,
            calls: usize,
        }
        impl RetrainHook for PerturbHook {
            fn retrain(&mut self, w: &mut TensorSet, frozen: &BTreeSet<TensorId>, _: usize) {
                self.calls += 1;
                if self.calls == 1 {
                    for name in w.names() {
                        if !frozen.contains(&name) {
                            w.get_mut(&name).unwrap().values[0] += 100.0;
                        }
                    }
                }
            }
            fn evaluate(&mut self, _: &TensorSet) -> f64 {
                self.metrics.pop_front().unwrap()
            }
        }
        let mut set = small_set(3);
        let original = set.clone();
        let schedule = FractionSchedule {
            fractions: vec![vec!["t00".into(), "t01".into()], vec!["t02".into()]],
        };
        let mut hook = PerturbHook {
            // Degrade the pair, then accept both singletons and t02.
            metrics: VecDeque::from(vec![
                1.0, 2.0, 9.9, // pair: rollback (perturbs t02 in retrain)
                1.0, 1.5, 1.05, // t00 commit
                1.05, 1.4, 1.1, // t01 commit
                1.1, 1.3, 1.15, // t02 commit
            ]),
            calls: 0,
        };
        let policy = RefinementPolicy::default();
        let outcome = run_inq(&mut set, &schedule, Scheme::Fcq, &mut hook, &policy, 1).unwrap();
        assert_eq!(outcome.events[0].kind, EventKind::Rollback);
        // t02 was +100-perturbed during the rolled-back attempt; the
        // rollback must have restored it, so its eventual quantization
        // derives from the original value range.
        let t02 = set.get("t02").unwrap();
        let max_orig = original
            .get("t02")
            .unwrap()
            .values
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(t02.values.iter().all(|&v| v < max_orig + 1.0));
    }
}
