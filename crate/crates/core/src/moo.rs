//! Synthetic SRM design candidates: a closed-form surrogate evaluated at several
//! operating points, searched with NSGA-II.
//!
//! The surrogate maps seven normalized design variables to four objectives per
//! operating point (average torque, torque density, efficiency, torque ripple)
//! plus the machine volume. With `ω = speed/10000`, `I = current/3` and
//! `s(x) = sin(πx)`:
//!
//! ```text
//! volume         = 0.2 + 0.8·D²·L
//! torque         = I·D²·L·(0.4 + 0.6·s(θs)·s(θr))·(1 − 0.5·(θon − θ*)²)
//! torque_density = torque / volume
//! efficiency     = 1 / (1 + 0.3·J² + 0.8·ω^1.5·D²·L + 0.1·(1 − J))
//! ripple         = 0.15 + 0.5·|θoff − θon − 0.35| + 0.35·(1 − s(θr))
//! ```
//!
//! `θ*` is the best turn-on angle of the operating point (0.3, 0.5, 0.7 for A, B, C).

use std::collections::HashSet;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::dataset::{CandidateSet, OperatingPoint, Schema, Sense};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

pub const N_PARAMS: usize = 7;
pub const PARAM_NAMES: [&str; N_PARAMS] = [
    "bore_diameter",
    "stack_length",
    "stator_pole_angle",
    "rotor_pole_angle",
    "current_density",
    "turn_on",
    "turn_off",
];
pub const POINT_OBJECTIVES: [(&str, Sense); 4] = [
    ("torque", Sense::Max),
    ("torque_density", Sense::Max),
    ("efficiency", Sense::Max),
    ("ripple", Sense::Min),
];

/// Seven design variables, each normalized to `[0, 1]`, with `turn_on < turn_off`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DesignParams(pub [f64; N_PARAMS]);

impl DesignParams {
    pub fn new(values: [f64; N_PARAMS]) -> Result<Self> {
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput("design parameters must lie in [0, 1]".into()));
        }
        if !(values[5] < values[6]) {
            return Err(Error::InvalidInput("turn-on angle must precede turn-off angle".into()));
        }
        Ok(Self(values))
    }

    pub fn bore_diameter(&self) -> f64 {
        self.0[0]
    }
    pub fn stack_length(&self) -> f64 {
        self.0[1]
    }
    pub fn stator_pole_angle(&self) -> f64 {
        self.0[2]
    }
    pub fn rotor_pole_angle(&self) -> f64 {
        self.0[3]
    }
    pub fn current_density(&self) -> f64 {
        self.0[4]
    }
    pub fn turn_on(&self) -> f64 {
        self.0[5]
    }
    pub fn turn_off(&self) -> f64 {
        self.0[6]
    }

    /// Clamps into `[0, 1]` and swap-repairs the commutation angles.
    fn repair(mut self) -> Self {
        for v in self.0.iter_mut() {
            *v = v.clamp(0.0, 1.0);
        }
        if self.0[5] > self.0[6] {
            self.0.swap(5, 6);
        }
        if self.0[5] == self.0[6] {
            if self.0[6] < 1.0 {
                self.0[6] = (self.0[6] + 1e-9).min(1.0);
            } else {
                self.0[5] -= 1e-9;
            }
        }
        self
    }

    fn key(&self) -> [u64; N_PARAMS] {
        self.0.map(f64::to_bits)
    }
}

/// Per-operating-point surrogate outputs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointObjectives {
    pub torque: f64,
    pub torque_density: f64,
    pub efficiency: f64,
    pub ripple: f64,
}

#[inline]
fn s(x: f64) -> f64 {
    (PI * x).sin()
}

pub fn volume(p: &DesignParams) -> f64 {
    0.2 + 0.8 * p.bore_diameter().powi(2) * p.stack_length()
}

/// Built-in best turn-on angle for the labelled operating points.
pub fn optimal_turn_on(label: &str) -> Option<f64> {
    match label {
        "A" => Some(0.3),
        "B" => Some(0.5),
        "C" => Some(0.7),
        _ => None,
    }
}

pub fn evaluate_surrogate(p: &DesignParams, op: &OperatingPoint, theta_star: f64) -> PointObjectives {
    let omega = op.speed / 10_000.0;
    let current = op.current / 3.0;
    let d2l = p.bore_diameter().powi(2) * p.stack_length();
    let shape = 0.4 + 0.6 * s(p.stator_pole_angle()) * s(p.rotor_pole_angle());
    let commutation = 1.0 - 0.5 * (p.turn_on() - theta_star).powi(2);
    let torque = current * d2l * shape * commutation;
    let j = p.current_density();
    let efficiency = 1.0 / (1.0 + 0.3 * j * j + 0.8 * omega.powf(1.5) * d2l + 0.1 * (1.0 - j));
    let ripple = 0.15
        + 0.5 * (p.turn_off() - p.turn_on() - 0.35).abs()
        + 0.35 * (1.0 - s(p.rotor_pole_angle()));
    PointObjectives {
        torque,
        torque_density: torque / volume(p),
        efficiency,
        ripple,
    }
}

/// Feasibility limits checked at one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct ConstraintThresholds {
    pub operating_point: String,
    pub min_efficiency: f64,
    pub max_ripple: f64,
}

impl Default for ConstraintThresholds {
    fn default() -> Self {
        Self {
            operating_point: "A".into(),
            min_efficiency: DEFAULT_MIN_EFFICIENCY,
            max_ripple: DEFAULT_MAX_RIPPLE,
        }
    }
}

pub const DEFAULT_MIN_EFFICIENCY: f64 = 0.8;
pub const DEFAULT_MAX_RIPPLE: f64 = 0.4;

#[derive(Debug, Clone, PartialEq)]
pub struct SurrogateProblem {
    pub operating_points: Vec<OperatingPoint>,
    /// Best turn-on angle per operating point.
    pub optimal_turn_on: Vec<f64>,
    pub thresholds: ConstraintThresholds,
}

pub fn default_operating_points() -> Vec<OperatingPoint> {
    vec![
        OperatingPoint::new("A", 0.18, 2000.0, 3.0).expect("valid"),
        OperatingPoint::new("B", 0.08, 5000.0, 2.0).expect("valid"),
        OperatingPoint::new("C", 0.02, 10_000.0, 1.0).expect("valid"),
    ]
}

impl SurrogateProblem {
    pub fn new(operating_points: Vec<OperatingPoint>, optimal_turn_on: Vec<f64>) -> Result<Self> {
        if operating_points.is_empty() || operating_points.len() != optimal_turn_on.len() {
            return Err(Error::InvalidInput(
                "need at least one operating point and one turn-on optimum per point".into(),
            ));
        }
        Ok(Self {
            operating_points,
            optimal_turn_on,
            thresholds: ConstraintThresholds::default(),
        })
    }

    /// Operating points A, B and C: 13 objectives.
    pub fn three_point() -> Self {
        let ops = default_operating_points();
        let stars = ops.iter().map(|op| optimal_turn_on(&op.label).expect("built-in")).collect();
        Self::new(ops, stars).expect("built-in problem")
    }

    /// One of the built-in points only: 5 objectives.
    pub fn single_point(label: &str) -> Result<Self> {
        let op = default_operating_points()
            .into_iter()
            .find(|op| op.label == label)
            .ok_or_else(|| Error::InvalidInput(format!("unknown operating point `{label}` (A|B|C)")))?;
        let mut problem = Self::new(vec![op], vec![optimal_turn_on(label).expect("built-in")])?;
        problem.thresholds.operating_point = label.to_string();
        Ok(problem)
    }

    pub fn objective_count(&self) -> usize {
        POINT_OBJECTIVES.len() * self.operating_points.len() + 1
    }

    pub fn schema(&self) -> Schema {
        let mut objective_columns = Vec::new();
        let mut senses = Vec::new();
        for op in &self.operating_points {
            for (name, sense) in POINT_OBJECTIVES {
                objective_columns.push(format!("{name}_{}", op.label));
                senses.push(sense);
            }
        }
        objective_columns.push("volume".into());
        senses.push(Sense::Min);
        Schema {
            id_column: "id".into(),
            param_columns: PARAM_NAMES.iter().map(|s| s.to_string()).collect(),
            objective_columns,
            senses,
            feasible_column: Some("feasible".into()),
            operating_points: self.operating_points.clone(),
            objectives_per_point: POINT_OBJECTIVES.len(),
            global_objectives: 1,
        }
    }

    /// Objective vector in schema column order.
    pub fn evaluate(&self, p: &DesignParams) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.objective_count());
        for (op, &star) in self.operating_points.iter().zip(&self.optimal_turn_on) {
            let o = evaluate_surrogate(p, op, star);
            out.extend([o.torque, o.torque_density, o.efficiency, o.ripple]);
        }
        out.push(volume(p));
        out
    }

    pub fn senses(&self) -> Vec<Sense> {
        self.schema().senses
    }
}

/// `a` dominates `b`: no worse in every objective and strictly better in one.
pub fn dominates(a: &[f64], b: &[f64], senses: &[Sense]) -> bool {
    let mut strictly = false;
    for ((&x, &y), &sense) in a.iter().zip(b).zip(senses) {
        let (x, y) = match sense {
            Sense::Min => (x, y),
            Sense::Max => (-x, -y),
        };
        if x > y {
            return false;
        }
        if x < y {
            strictly = true;
        }
    }
    strictly
}

/// Fast non-dominated sorting; fronts hold indices in ascending order.
pub fn non_dominated_sort(objs: &[Vec<f64>], senses: &[Sense]) -> Vec<Vec<usize>> {
    let n = objs.len();
    let mut dominated_by_count = vec![0usize; n];
    let mut dominates_list: Vec<Vec<usize>> = vec![Vec::new(); n];
    for i in 0..n {
        for j in (i + 1)..n {
            if dominates(&objs[i], &objs[j], senses) {
                dominates_list[i].push(j);
                dominated_by_count[j] += 1;
            } else if dominates(&objs[j], &objs[i], senses) {
                dominates_list[j].push(i);
                dominated_by_count[i] += 1;
            }
        }
    }
    let mut fronts = Vec::new();
    let mut current: Vec<usize> = (0..n).filter(|&i| dominated_by_count[i] == 0).collect();
    while !current.is_empty() {
        let mut next = Vec::new();
        for &i in &current {
            for &j in &dominates_list[i] {
                dominated_by_count[j] -= 1;
                if dominated_by_count[j] == 0 {
                    next.push(j);
                }
            }
        }
        next.sort_unstable();
        fronts.push(std::mem::replace(&mut current, next));
    }
    fronts
}

/// Normalized neighbor-gap crowding distance within one front.
///
/// Boundary points of every non-constant objective get `+∞`; constant
/// objectives contribute nothing. Fronts of one or two points are all `+∞`.
pub fn crowding_distance(front: &[Vec<f64>]) -> Vec<f64> {
    let n = front.len();
    if n <= 2 {
        return vec![f64::INFINITY; n];
    }
    let m = front[0].len();
    let mut dist = vec![0.0; n];
    let mut order: Vec<usize> = (0..n).collect();
    for k in 0..m {
        order.sort_by(|&a, &b| front[a][k].total_cmp(&front[b][k]).then(a.cmp(&b)));
        let lo = front[order[0]][k];
        let hi = front[order[n - 1]][k];
        let range = hi - lo;
        if !(range > 0.0) {
            continue;
        }
        dist[order[0]] = f64::INFINITY;
        dist[order[n - 1]] = f64::INFINITY;
        for w in 1..n - 1 {
            let gap = front[order[w + 1]][k] - front[order[w - 1]][k];
            dist[order[w]] += gap / range;
        }
    }
    dist
}

#[derive(Debug, Clone, PartialEq)]
pub struct Individual {
    pub params: DesignParams,
    pub objectives: Vec<f64>,
    pub rank: usize,
    pub crowding: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Population {
    pub members: Vec<Individual>,
    pub generation: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Nsga2Config {
    pub pop_size: usize,
    pub generations: usize,
    pub seed: u64,
    pub crossover_prob: f64,
    /// SBX distribution index.
    pub eta_crossover: f64,
    /// Polynomial-mutation distribution index.
    pub eta_mutation: f64,
    /// Per-variable mutation probability.
    pub mutation_prob: f64,
}

impl Nsga2Config {
    pub fn new(pop_size: usize, generations: usize, seed: u64) -> Self {
        Self {
            pop_size,
            generations,
            seed,
            crossover_prob: 0.9,
            eta_crossover: 15.0,
            eta_mutation: 20.0,
            mutation_prob: 1.0 / N_PARAMS as f64,
        }
    }
}

/// Everything one optimization run produced.
#[derive(Debug, Clone)]
pub struct Nsga2Output {
    /// Every distinct evaluated design, in order of first evaluation.
    pub archive: CandidateSet<f64>,
    pub final_population: Population,
}

fn assign_rank_crowding(members: &mut [Individual], senses: &[Sense]) -> Vec<Vec<usize>> {
    let objs: Vec<Vec<f64>> = members.iter().map(|m| m.objectives.clone()).collect();
    let fronts = non_dominated_sort(&objs, senses);
    for (r, front) in fronts.iter().enumerate() {
        let pts: Vec<Vec<f64>> = front.iter().map(|&i| objs[i].clone()).collect();
        for (&i, c) in front.iter().zip(crowding_distance(&pts)) {
            members[i].rank = r;
            members[i].crowding = c;
        }
    }
    fronts
}

fn tournament<'a>(pop: &'a [Individual], rng: &mut ChaCha8Rng) -> &'a Individual {
    let a = &pop[rng.random_range(0..pop.len())];
    let b = &pop[rng.random_range(0..pop.len())];
    if b.rank < a.rank || (b.rank == a.rank && b.crowding > a.crowding) {
        b
    } else {
        a
    }
}

fn sbx_spread(u: f64, beta: f64, eta: f64) -> f64 {
    let alpha = 2.0 - beta.powf(-(eta + 1.0));
    if u <= 1.0 / alpha {
        (u * alpha).powf(1.0 / (eta + 1.0))
    } else {
        (1.0 / (2.0 - u * alpha)).powf(1.0 / (eta + 1.0))
    }
}

/// Bounded simulated binary crossover on `[0, 1]`.
fn sbx(a: &DesignParams, b: &DesignParams, cfg: &Nsga2Config, rng: &mut ChaCha8Rng) -> (DesignParams, DesignParams) {
    let (mut c1, mut c2) = (*a, *b);
    if rng.random::<f64>() > cfg.crossover_prob {
        return (c1, c2);
    }
    for k in 0..N_PARAMS {
        if rng.random::<f64>() > 0.5 {
            continue;
        }
        let (x1, x2) = (a.0[k], b.0[k]);
        if (x1 - x2).abs() <= 1e-14 {
            continue;
        }
        let (y1, y2) = if x1 < x2 { (x1, x2) } else { (x2, x1) };
        let u = rng.random::<f64>();
        let bq1 = sbx_spread(u, 1.0 + 2.0 * y1 / (y2 - y1), cfg.eta_crossover);
        let bq2 = sbx_spread(u, 1.0 + 2.0 * (1.0 - y2) / (y2 - y1), cfg.eta_crossover);
        let lo = (0.5 * ((y1 + y2) - bq1 * (y2 - y1))).clamp(0.0, 1.0);
        let hi = (0.5 * ((y1 + y2) + bq2 * (y2 - y1))).clamp(0.0, 1.0);
        if rng.random::<f64>() <= 0.5 {
            c1.0[k] = hi;
            c2.0[k] = lo;
        } else {
            c1.0[k] = lo;
            c2.0[k] = hi;
        }
    }
    (c1, c2)
}

/// Bounded polynomial mutation on `[0, 1]`.
fn polynomial_mutation(p: &mut DesignParams, cfg: &Nsga2Config, rng: &mut ChaCha8Rng) {
    let pow = 1.0 / (cfg.eta_mutation + 1.0);
    for k in 0..N_PARAMS {
        if rng.random::<f64>() > cfg.mutation_prob {
            continue;
        }
        let y = p.0[k];
        let u = rng.random::<f64>();
        let deltaq = if u <= 0.5 {
            let xy = 1.0 - y;
            let val = 2.0 * u + (1.0 - 2.0 * u) * xy.powf(cfg.eta_mutation + 1.0);
            val.powf(pow) - 1.0
        } else {
            let xy = y;
            let val = 2.0 * (1.0 - u) + 2.0 * (u - 0.5) * xy.powf(cfg.eta_mutation + 1.0);
            1.0 - val.powf(pow)
        };
        p.0[k] = (y + deltaq).clamp(0.0, 1.0);
    }
}

fn random_design(rng: &mut ChaCha8Rng) -> DesignParams {
    let mut v = [0.0; N_PARAMS];
    for x in v.iter_mut() {
        *x = rng.random::<f64>();
    }
    DesignParams(v).repair()
}

struct Archive {
    seen: HashSet<[u64; N_PARAMS]>,
    params: Vec<DesignParams>,
    objectives: Vec<Vec<f64>>,
}

impl Archive {
    fn record(&mut self, p: &DesignParams, objs: &[f64]) {
        if self.seen.insert(p.key()) {
            self.params.push(*p);
            self.objectives.push(objs.to_vec());
        }
    }
}

/// Runs NSGA-II and returns the archive of all distinct evaluated designs with
/// feasibility flags from the problem's thresholds.
pub fn nsga2_run(problem: &SurrogateProblem, cfg: &Nsga2Config) -> Result<Nsga2Output> {
    if cfg.pop_size < 4 || cfg.pop_size % 2 != 0 {
        return Err(Error::InvalidInput(format!(
            "population size must be even and at least 4, got {}",
            cfg.pop_size
        )));
    }
    let senses = problem.senses();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut archive = Archive {
        seen: HashSet::new(),
        params: Vec::new(),
        objectives: Vec::new(),
    };
    let evaluate = |p: DesignParams, archive: &mut Archive| {
        let objectives = problem.evaluate(&p);
        archive.record(&p, &objectives);
        Individual {
            params: p,
            objectives,
            rank: 0,
            crowding: 0.0,
        }
    };

    let mut members: Vec<Individual> = (0..cfg.pop_size)
        .map(|_| {
            let p = random_design(&mut rng);
            evaluate(p, &mut archive)
        })
        .collect();
    assign_rank_crowding(&mut members, &senses);

    for _ in 0..cfg.generations {
        let mut offspring = Vec::with_capacity(cfg.pop_size);
        while offspring.len() < cfg.pop_size {
            let a = tournament(&members, &mut rng).params;
            let b = tournament(&members, &mut rng).params;
            let (mut c1, mut c2) = sbx(&a, &b, cfg, &mut rng);
            polynomial_mutation(&mut c1, cfg, &mut rng);
            polynomial_mutation(&mut c2, cfg, &mut rng);
            offspring.push(evaluate(c1.repair(), &mut archive));
            offspring.push(evaluate(c2.repair(), &mut archive));
        }
        members.extend(offspring);
        let fronts = assign_rank_crowding(&mut members, &senses);
        let mut next = Vec::with_capacity(cfg.pop_size);
        for front in fronts {
            if next.len() + front.len() <= cfg.pop_size {
                next.extend(front.iter().map(|&i| members[i].clone()));
            } else {
                let mut rest = front.clone();
                rest.sort_by(|&a, &b| members[b].crowding.total_cmp(&members[a].crowding).then(a.cmp(&b)));
                let room = cfg.pop_size - next.len();
                next.extend(rest[..room].iter().map(|&i| members[i].clone()));
            }
            if next.len() == cfg.pop_size {
                break;
            }
        }
        members = next;
    }

    let n = archive.params.len();
    let schema = problem.schema();
    let ids = (0..n).map(|i| format!("c{i:04}")).collect();
    let params = Matrix::from_vec(n, N_PARAMS, archive.params.iter().flat_map(|p| p.0).collect());
    let objectives = Matrix::from_vec(n, schema.objective_columns.len(), archive.objectives.concat());
    let set = CandidateSet::new(ids, params, objectives, schema, vec![true; n])?;
    let flags = feasibility(&set, &problem.thresholds)?;
    Ok(Nsga2Output {
        archive: set.with_feasible(flags)?,
        final_population: Population {
            members,
            generation: cfg.generations,
        },
    })
}

/// Archive of every distinct design evaluated by NSGA-II with default operators.
pub fn nsga2_generate(
    problem: &SurrogateProblem,
    pop_size: usize,
    generations: usize,
    seed: u64,
) -> Result<CandidateSet<f64>> {
    nsga2_run(problem, &Nsga2Config::new(pop_size, generations, seed)).map(|o| o.archive)
}

fn feasibility(set: &CandidateSet<f64>, t: &ConstraintThresholds) -> Result<Vec<bool>> {
    let col = |name: String| {
        set.column(&name)
            .ok_or(Error::MissingColumn { column: name })
    };
    let eff = col(format!("efficiency_{}", t.operating_point))?;
    let rip = col(format!("ripple_{}", t.operating_point))?;
    Ok(eff
        .iter()
        .zip(&rip)
        .map(|(&e, &r)| e >= t.min_efficiency && r <= t.max_ripple)
        .collect())
}

/// Keeps candidates meeting every threshold; returns them with `kept / total`.
pub fn constraint_filter(
    set: &CandidateSet<f64>,
    thresholds: &ConstraintThresholds,
) -> Result<(CandidateSet<f64>, f64)> {
    let flags = feasibility(set, thresholds)?;
    let keep: Vec<usize> = (0..set.len()).filter(|&i| flags[i]).collect();
    let ratio = if set.is_empty() {
        0.0
    } else {
        keep.len() as f64 / set.len() as f64
    };
    let kept = set.subset(&keep).with_feasible(vec![true; keep.len()])?;
    Ok((kept, ratio))
}
