#![allow(dead_code)]

use proptest::prelude::*;
use proptest::test_runner::TestCaseError;
use rand::Rng;

use tsetlin_core::analysis::{self, Verdict};
use tsetlin_core::automaton::{Action, Event, TaState};
use tsetlin_core::clause::{EvalMode, LiteralVector, PlaneBlock, Polarity};
use tsetlin_core::feedback::{apply_type_i_block, apply_type_ii_block, type_i_probs, type_ii_probs, FeedbackParams};
use tsetlin_core::machine::{
    activation_probability, read_machine, write_machine, Activation, ClauseExpression, MachineConfig, ScalarMachine,
    TsetlinMachine,
};
use tsetlin_core::rng::{Domain, StreamRng, TrainRng};
use tsetlin_core::{BinaryDataset, ClauseTeam};

// ---------- packed / scalar equivalence ----------

pub fn random_config(rng: &mut StreamRng, seed: u64) -> MachineConfig {
    MachineConfig {
        inputs: rng.random_range(1..=8),
        clauses: 2 * rng.random_range(1..=2),
        threshold: rng.random_range(1..=6),
        s: 1.0 + 9.0 * rng.unit().max(1e-3),
        state_bits: rng.random_range(1..=4),
        boost: rng.random(),
        epochs: rng.random_range(1..=5),
        seed,
    }
}

pub fn random_dataset(rng: &mut StreamRng, inputs: usize, rows: usize) -> BinaryDataset {
    let x = (0..rows)
        .map(|_| (0..inputs).map(|_| rng.random_range(0..2u8)).collect())
        .collect();
    let y = (0..rows).map(|_| rng.random_range(0..2usize)).collect();
    BinaryDataset::new(inputs, 2, x, y).unwrap()
}

/// Trains both engines on `configs` random problems; returns the number of
/// configurations whose final states differ.
pub fn fit_mismatches(configs: usize, seed: u64) -> usize {
    let mut gen = StreamRng::new(seed, Domain::Data, 99);
    let mut mismatches = 0;
    for i in 0..configs {
        let cfg = random_config(&mut gen, seed.wrapping_add(i as u64));
        let rows = gen.random_range(1..=100);
        let data = random_dataset(&mut gen, cfg.inputs, rows);
        let mut packed = TsetlinMachine::new(cfg.clone()).unwrap();
        let mut scalar = ScalarMachine::new(cfg.clone()).unwrap();
        assert_eq!(packed.states(), scalar.states());
        packed
            .fit_with(&data, None, &mut TrainRng::new(cfg.seed, 1, cfg.clauses), |_| {})
            .unwrap();
        scalar
            .fit_with(&data, &mut TrainRng::new(cfg.seed, 1, cfg.clauses))
            .unwrap();
        if packed.states() != scalar.states() {
            mismatches += 1;
        }
    }
    mismatches
}

#[derive(Debug, Clone)]
pub struct StepCase {
    pub config: MachineConfig,
    pub states: Vec<Vec<u16>>,
    pub x: Vec<u8>,
    pub y: bool,
    pub stream_seed: u64,
}

pub fn step_case() -> impl Strategy<Value = StepCase> {
    (1usize..=8, 1usize..=2, 1u8..=4, 1u32..=6, 1.05f64..10.0, any::<bool>())
        .prop_flat_map(|(o, half_m, bits, t, s, boost)| {
            let m = 2 * half_m;
            let max = 1u16 << bits;
            (
                Just(MachineConfig {
                    inputs: o,
                    clauses: m,
                    threshold: t,
                    s,
                    state_bits: bits,
                    boost,
                    epochs: 1,
                    seed: 0,
                }),
                prop::collection::vec(prop::collection::vec(0..max, 2 * o), m),
                prop::collection::vec(0u8..2, o),
                any::<bool>(),
                any::<u64>(),
            )
        })
        .prop_map(|(config, states, x, y, stream_seed)| StepCase {
            config,
            states,
            x,
            y,
            stream_seed,
        })
}

pub fn check_step(case: &StepCase) -> Result<(), TestCaseError> {
    let mut packed = TsetlinMachine::from_states(case.config.clone(), &case.states).unwrap();
    let mut scalar = ScalarMachine::from_states(case.config.clone(), &case.states).unwrap();
    let streams: Vec<StreamRng> = (0..case.config.clauses)
        .map(|j| StreamRng::new(case.stream_seed, Domain::Clause, j as u64))
        .collect();
    let x = LiteralVector::new(&case.x);
    for _ in 0..3 {
        let mut a = streams.clone();
        let mut b = streams.clone();
        packed.train_example(&x, case.y, &mut a).unwrap();
        scalar.train_example(&x, case.y, &mut b).unwrap();
        prop_assert_eq!(packed.states(), scalar.states());
    }
    Ok(())
}

// ---------- feedback Monte-Carlo ----------

#[derive(Debug, Clone)]
pub struct CellResult {
    pub label: String,
    pub worst_sigma: f64,
    pub ok: bool,
}

/// Applies one feedback cell `trials` times through the packed engine and
/// compares event frequencies with the table. A cell passes if every event
/// count is within `k` binomial standard deviations; certain and impossible
/// events must match exactly.
pub fn feedback_cells(trials: u32, k: f64, seed: u64) -> Vec<CellResult> {
    let s = 3.9;
    let mut out = Vec::new();
    let mut cell_index = 0;
    for type_i in [true, false] {
        for boost in [false, true] {
            if !type_i && boost {
                continue;
            }
            let params = FeedbackParams::new(s, boost).unwrap();
            for action in [Action::Include, Action::Exclude] {
                for literal in [true, false] {
                    for clause in [true, false] {
                        if action == Action::Include && !literal && clause {
                            continue;
                        }
                        let expected = if type_i {
                            type_i_probs(action, literal, clause, &params)
                        } else {
                            type_ii_probs(action, literal, clause)
                        };
                        let mut rng = StreamRng::new(seed, Domain::MonteCarlo, cell_index);
                        cell_index += 1;
                        let counts = observe_cell(type_i, &params, action, literal, clause, trials, &mut rng);
                        let n = f64::from(trials);
                        let mut worst: f64 = 0.0;
                        let mut ok = true;
                        for (count, p) in [
                            (counts[0], expected.reward),
                            (counts[1], expected.inaction),
                            (counts[2], expected.penalty),
                        ] {
                            let sd = (n * p * (1.0 - p)).sqrt();
                            let dev = (f64::from(count) - n * p).abs();
                            if sd == 0.0 {
                                ok &= dev == 0.0;
                            } else {
                                worst = worst.max(dev / sd);
                                ok &= dev <= k * sd;
                            }
                        }
                        out.push(CellResult {
                            label: format!(
                                "type {} boost={} {:?} literal={} clause={}",
                                if type_i { "I" } else { "II" },
                                boost,
                                action,
                                u8::from(literal),
                                u8::from(clause)
                            ),
                            worst_sigma: worst,
                            ok,
                        });
                    }
                }
            }
        }
    }
    out
}

/// Counts (reward, inaction, penalty) for the automaton guarding `x1`.
fn observe_cell(
    type_i: bool,
    params: &FeedbackParams,
    action: Action,
    literal: bool,
    clause: bool,
    trials: u32,
    rng: &mut StreamRng,
) -> [u32; 3] {
    // two states per side of the boundary keep every step observable
    let start = TaState::new(if action == Action::Include { 5 } else { 2 }, 4);
    let team = ClauseTeam::new(vec![start, TaState::new(3, 4)], Polarity::Positive).unwrap();
    let x = LiteralVector::new(&[u8::from(literal)]);
    let mut counts = [0u32; 3];
    for _ in 0..trials {
        let mut block = PlaneBlock::pack(&team).unwrap();
        if type_i {
            apply_type_i_block(&mut block, &x, clause, params, rng);
        } else {
            apply_type_ii_block(&mut block, &x, clause);
        }
        let after = TaState::new(block.state(0), 4);
        let event = if after == start {
            Event::Inaction
        } else if after == start.apply(Event::Reward) {
            Event::Reward
        } else {
            Event::Penalty
        };
        counts[match event {
            Event::Reward => 0,
            Event::Inaction => 1,
            Event::Penalty => 2,
        }] += 1;
    }
    counts
}

// ---------- payoff oracle ----------

#[derive(Debug, Clone)]
pub struct PayoffPoint {
    pub theta: f64,
    pub delta: f64,
    pub s: f64,
    pub analytic: f64,
    pub mean: f64,
    pub stderr: f64,
    pub action: Action,
}

impl PayoffPoint {
    pub fn z(&self) -> f64 {
        if self.stderr == 0.0 {
            if self.mean == self.analytic {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (self.mean - self.analytic).abs() / self.stderr
        }
    }
}

pub fn payoff_grid() -> Vec<(f64, f64, f64)> {
    let mut grid = Vec::new();
    for &s in &[2.0, 4.0, 10.0] {
        for &theta in &[0.02, 1.0 / (2.0 * s), 0.2, 0.4] {
            for &delta in &[0.0, 0.2] {
                grid.push((theta, delta, s));
            }
        }
    }
    grid
}

pub fn payoff_points(trials: u64, seed: u64) -> Vec<PayoffPoint> {
    let mut out = Vec::new();
    for (i, (theta, delta, s)) in payoff_grid().into_iter().enumerate() {
        let env = analysis::PayoffEnvironment::balanced(theta, delta, s).unwrap();
        for (action, analytic) in [
            (Action::Exclude, analysis::payoff_exclude_balanced(theta, delta, s)),
            (Action::Include, analysis::payoff_include_balanced(theta, delta, s)),
        ] {
            let e = analysis::monte_carlo_payoff(&env, action, trials, seed + 2 * i as u64 + (action == Action::Include) as u64)
                .unwrap();
            out.push(PayoffPoint {
                theta,
                delta,
                s,
                analytic,
                mean: e.mean,
                stderr: e.stderr,
                action,
            });
        }
    }
    out
}

/// `nash_check(θ, 0, s)` flips at `θ = 1/(2s)`: Exclude below, Boundary on
/// it, Include above.
pub fn sign_flip_exact(s_values: &[f64]) -> bool {
    s_values.iter().all(|&s| {
        let b = 1.0 / (2.0 * s);
        analysis::nash_check(b, 0.0, s) == Verdict::Boundary
            && analysis::nash_check(b - 1e-6, 0.0, s) == Verdict::ExcludeEquilibrium
            && analysis::nash_check(b + 1e-6, 0.0, s) == Verdict::IncludeEquilibrium
    })
}

// ---------- structural properties ----------

#[derive(Debug, Clone)]
pub struct MachineCase {
    pub config: MachineConfig,
    pub states: Vec<Vec<u16>>,
    pub x: Vec<u8>,
}

pub fn machine_case() -> impl Strategy<Value = MachineCase> {
    (1usize..=70, 1usize..=4, 1u8..=9, 1u32..=20)
        .prop_flat_map(|(o, half_m, bits, t)| {
            let m = 2 * half_m;
            let max = 1u16 << bits;
            let half = max / 2;
            // bias toward the boundary so clauses include a handful of literals
            let state = prop_oneof![
                3 => 0..half,
                1 => half..max,
            ];
            (
                Just(MachineConfig {
                    inputs: o,
                    clauses: m,
                    threshold: t,
                    s: 3.0,
                    state_bits: bits,
                    boost: false,
                    epochs: 0,
                    seed: 0,
                }),
                prop::collection::vec(prop::collection::vec(state, 2 * o), m),
                prop::collection::vec(0u8..2, o),
            )
        })
        .prop_map(|(config, states, x)| MachineCase { config, states, x })
}

pub fn prop_clause_sum_bounds(c: &MachineCase) -> Result<(), TestCaseError> {
    let tm = TsetlinMachine::from_states(c.config.clone(), &c.states).unwrap();
    let x = LiteralVector::new(&c.x);
    let half = (c.config.clauses / 2) as i32;
    for mode in [EvalMode::Training, EvalMode::Inference] {
        let f = tm.clause_sum(&x, mode).unwrap();
        prop_assert!((-half..=half).contains(&f));
    }
    Ok(())
}

pub fn prop_threshold_at_zero(c: &MachineCase) -> Result<(), TestCaseError> {
    let tm = TsetlinMachine::from_states(c.config.clone(), &c.states).unwrap();
    let x = LiteralVector::new(&c.x);
    let f = tm.clause_sum(&x, EvalMode::Inference).unwrap();
    prop_assert_eq!(tm.predict(&x).unwrap(), f >= 0);
    Ok(())
}

pub fn prop_activation_complement(f: i32, t: u32) -> Result<(), TestCaseError> {
    let p1 = activation_probability(f, t, Activation::TypeI);
    let p2 = activation_probability(f, t, Activation::TypeII);
    prop_assert!((0.0..=1.0).contains(&p1) && (0.0..=1.0).contains(&p2));
    prop_assert!((p1 + p2 - 1.0).abs() < 1e-12);
    let q1 = activation_probability(f.saturating_add(1), t, Activation::TypeI);
    prop_assert!(q1 <= p1);
    Ok(())
}

/// Single-automaton steps: reward then penalty (and the reverse) restore the
/// state away from the ends; a reward at an end changes nothing.
pub fn prop_inverse_and_saturation(value: u16, half: u16) -> Result<(), TestCaseError> {
    let s = TaState::new(value % (2 * half), half);
    let max = 2 * half - 1;
    let r = s.apply(Event::Reward);
    if s.value() == 0 || s.value() == max {
        prop_assert_eq!(r, s);
        prop_assert_eq!(r.apply(Event::Reward), r);
    } else if r.action() == s.action() {
        prop_assert_eq!(r.apply(Event::Penalty), s);
    }
    let p = s.apply(Event::Penalty);
    if p.action() == s.action() {
        prop_assert_eq!(p.apply(Event::Reward), s);
    }
    Ok(())
}

/// Packed counterpart: increment then decrement under one mask restores
/// every automaton that was below the top, and saturated ones stay put.
pub fn prop_packed_inverse(c: &MachineCase, mask_seed: u64) -> Result<(), TestCaseError> {
    let bits = c.config.state_bits;
    let top = (1u16 << bits) - 1;
    let planar = &c.states[0];
    let block = PlaneBlock::from_states(planar, bits, Polarity::Positive).unwrap();
    let mut rng = StreamRng::new(mask_seed, Domain::Data, 0);
    let mask: Vec<u64> = (0..block.word_count()).map(|_| rng.random()).collect();
    let mut b = block.clone();
    b.increment(&mask);
    for (i, (&before, after)) in planar.iter().zip(b.states()).enumerate() {
        let selected = (mask[i / 64] >> (i % 64)) & 1 == 1;
        let expected = if selected { (before + 1).min(top) } else { before };
        prop_assert_eq!(after, expected);
    }
    b.decrement(&mask);
    for (i, (&before, after)) in planar.iter().zip(b.states()).enumerate() {
        let selected = (mask[i / 64] >> (i % 64)) & 1 == 1;
        if !selected || before < top {
            prop_assert_eq!(after, before);
        } else {
            prop_assert_eq!(after, top - 1);
        }
    }
    Ok(())
}

pub fn prop_pack_roundtrip(c: &MachineCase) -> Result<(), TestCaseError> {
    let half = 1u16 << (c.config.state_bits - 1);
    for (j, s) in c.states.iter().enumerate() {
        let team = ClauseTeam::new(
            s.iter().map(|&v| TaState::new(v, half)).collect(),
            Polarity::for_position(j),
        )
        .unwrap();
        let block = PlaneBlock::pack(&team).unwrap();
        prop_assert_eq!(block.unpack(), team.clone());
        let x = LiteralVector::new(&c.x);
        for mode in [EvalMode::Training, EvalMode::Inference] {
            prop_assert_eq!(block.evaluate(&x, mode), team.evaluate(&x, mode).unwrap());
        }
    }
    Ok(())
}

pub fn prop_prune_preserves_predictions(c: &MachineCase) -> Result<(), TestCaseError> {
    let tm = TsetlinMachine::from_states(c.config.clone(), &c.states).unwrap();
    let kept = tm.prune();
    let exprs: Vec<ClauseExpression> = (0..c.config.clauses)
        .map(|j| {
            kept.iter().find(|e| e.clause == j).cloned().unwrap_or(ClauseExpression {
                clause: j,
                polarity: Polarity::for_position(j),
                positive: Default::default(),
                negated: Default::default(),
            })
        })
        .collect();
    let rebuilt = TsetlinMachine::from_expressions(c.config.clone(), &exprs).unwrap();
    let x = LiteralVector::new(&c.x);
    prop_assert_eq!(tm.predict(&x).unwrap(), rebuilt.predict(&x).unwrap());
    // the pruned clause list alone also reproduces the vote
    let f: i32 = kept.iter().filter(|e| e.evaluate(&c.x)).map(|e| e.polarity.sign()).sum();
    prop_assert_eq!(f, tm.clause_sum(&x, EvalMode::Inference).unwrap());
    Ok(())
}

pub fn prop_model_roundtrip(c: &MachineCase) -> Result<(), TestCaseError> {
    let tm = TsetlinMachine::from_states(c.config.clone(), &c.states).unwrap();
    let mut buf = Vec::new();
    write_machine(&tm, &mut buf).unwrap();
    let back = read_machine(&mut buf.as_slice()).unwrap();
    prop_assert_eq!(back.states(), tm.states());
    prop_assert!(back.config().same_model_shape(tm.config()));
    Ok(())
}
