//! Runs the invariant suite of the library against one input graph over
//! many boundary sets.

use nalgebra::DMatrix;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::generate::{random_order, rng};
use crate::graph::{augment, is_irreducible, loopless_part, LoopyLaplacian};
use crate::kron::{
    default_order, kron_reduce, kron_reduce_iterative, predict_reduced_topology, reduced_self_loops,
    self_loop_decomposition, KronReduction, Partition, ReducedTopology,
};
use crate::linalg::{self, max_abs_diff, select};
use crate::resistance::{
    effective_resistance, impedance, impedance_from_resistance, perturbed_resistance, resistance_via_reference,
    resistance_via_shift, ReconstructionMode,
};
use crate::spectral::{
    algebraic_connectivity, verify_augmented_interlacing, verify_interlacing, verify_loop_shift_bounds,
};
use crate::tol::Tolerances;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    /// Largest `n` for which every boundary set is tried.
    pub cap: usize,
    /// Upper bound on the number of boundary sets; also the sample size when
    /// enumeration is skipped.
    pub max_sets: usize,
    pub seed: u64,
    /// Random elimination orders checked per boundary set, on top of the
    /// default order.
    pub orders: usize,
    pub tolerances: Tolerances,
    /// Debug aid: perturbs every `q_red` before the closure checks.
    pub corrupt_q_red: bool,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            cap: 20,
            max_sets: 1024,
            seed: 42,
            orders: 3,
            tolerances: Tolerances::default(),
            corrupt_q_red: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PropertyResult {
    pub name: String,
    pub passed: bool,
    pub cases: usize,
    /// Largest measured violation; the property passes when it stays within
    /// `tolerance`.
    pub worst: f64,
    pub tolerance: f64,
    /// `worst - tolerance`.
    pub worst_slack: f64,
    /// First failing case.
    pub failure: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerifyReport {
    pub n: usize,
    pub seed: u64,
    pub exhaustive: bool,
    pub boundary_sets: usize,
    pub passed: bool,
    pub properties: Vec<PropertyResult>,
}

struct Tally {
    name: &'static str,
    tolerance: f64,
    cases: usize,
    worst: f64,
    failure: Option<String>,
}

impl Tally {
    fn new(name: &'static str, tolerance: f64) -> Self {
        Tally {
            name,
            tolerance,
            cases: 0,
            worst: 0.0,
            failure: None,
        }
    }

    fn record(&mut self, measured: f64, context: impl FnOnce() -> String) {
        self.cases += 1;
        let bad = measured.is_nan() || measured > self.tolerance;
        if measured > self.worst || measured.is_nan() {
            self.worst = measured;
        }
        if bad && self.failure.is_none() {
            self.failure = Some(format!("{}: measured {measured:.3e}", context()));
        }
    }

    fn flag(&mut self, ok: bool, context: impl FnOnce() -> String) {
        self.record(if ok { 0.0 } else { 1.0 }, context);
    }

    fn error(&mut self, err: &Error, context: impl FnOnce() -> String) {
        self.cases += 1;
        self.worst = f64::INFINITY;
        if self.failure.is_none() {
            self.failure = Some(format!("{}: {err}", context()));
        }
    }

    fn finish(self) -> PropertyResult {
        PropertyResult {
            name: self.name.to_string(),
            passed: self.failure.is_none(),
            cases: self.cases,
            worst: self.worst,
            tolerance: self.tolerance,
            worst_slack: self.worst - self.tolerance,
            failure: self.failure,
        }
    }
}

struct Suite {
    accompanying: Tally,
    augmentation_commutes: Tally,
    augmented_interlacing: Tally,
    closure: Tally,
    interlacing: Tally,
    loop_monotonicity: Tally,
    loop_shift_bounds: Tally,
    loopless_connectivity: Tally,
    monotonicity: Tally,
    quotient: Tally,
    reconstruction: Tally,
    reduced_loops: Tally,
    resistance_augmentation: Tally,
    resistance_invariance: Tally,
    resistance_routes: Tally,
    resistance_self_loops: Tally,
    self_loop_decomposition: Tally,
    sherman_morrison: Tally,
    topology: Tally,
}

impl Suite {
    fn new(t: &Tolerances) -> Self {
        Suite {
            accompanying: Tally::new("accompanying", t.edge),
            augmentation_commutes: Tally::new("augmentation_commutes", t.quot),
            augmented_interlacing: Tally::new("augmented_interlacing", t.eig_abs),
            closure: Tally::new("closure", t.edge),
            interlacing: Tally::new("interlacing", t.eig_abs),
            loop_monotonicity: Tally::new("loop_monotonicity", t.edge),
            loop_shift_bounds: Tally::new("loop_shift_bounds", t.eig_abs),
            loopless_connectivity: Tally::new("loopless_connectivity", t.eig_abs),
            monotonicity: Tally::new("monotonicity", t.quot),
            quotient: Tally::new("quotient", t.quot),
            reconstruction: Tally::new("reconstruction", t.quot),
            reduced_loops: Tally::new("reduced_loops", t.quot),
            resistance_augmentation: Tally::new("resistance_augmentation", t.quot),
            resistance_invariance: Tally::new("resistance_invariance", t.quot),
            resistance_routes: Tally::new("resistance_routes", t.quot),
            resistance_self_loops: Tally::new("resistance_self_loops", t.quot),
            self_loop_decomposition: Tally::new("self_loop_decomposition", t.quot),
            sherman_morrison: Tally::new("sherman_morrison", t.quot),
            topology: Tally::new("topology", 0.0),
        }
    }

    fn finish(self) -> Vec<PropertyResult> {
        let mut out: Vec<PropertyResult> = [
            self.accompanying,
            self.augmentation_commutes,
            self.augmented_interlacing,
            self.closure,
            self.interlacing,
            self.loop_monotonicity,
            self.loop_shift_bounds,
            self.loopless_connectivity,
            self.monotonicity,
            self.quotient,
            self.reconstruction,
            self.reduced_loops,
            self.resistance_augmentation,
            self.resistance_invariance,
            self.resistance_routes,
            self.resistance_self_loops,
            self.self_loop_decomposition,
            self.sherman_morrison,
            self.topology,
        ]
        .into_iter()
        .map(Tally::finish)
        .collect();
        out.sort_by(|a, b| a.name.cmp(&b.name));
        out
    }
}

fn label(nodes: &[usize]) -> String {
    let inner: Vec<String> = nodes.iter().map(|v| (v + 1).to_string()).collect();
    format!("boundary {{{}}}", inner.join(","))
}

/// Number of boundary sets with `2 <= |α| <= n - 1`, saturating.
fn proper_set_count(n: usize) -> u128 {
    if n < 3 {
        return 0;
    }
    if n >= 127 {
        return u128::MAX;
    }
    (1u128 << n) - (n as u128) - 2
}

fn boundary_sets(n: usize, opts: &VerifyOptions) -> (bool, Vec<Vec<usize>>) {
    let count = proper_set_count(n);
    if n <= opts.cap && count <= opts.max_sets as u128 {
        let sets = (1u64..(1u64 << n))
            .filter(|mask| {
                let k = mask.count_ones() as usize;
                k >= 2 && k < n
            })
            .map(|mask| (0..n).filter(|i| mask & (1 << i) != 0).collect())
            .collect();
        return (true, sets);
    }
    let mut r = rng(opts.seed);
    let sets = (0..opts.max_sets)
        .map(|_| crate::generate::random_partition(&mut r, n).boundary().to_vec())
        .collect();
    (false, sets)
}

/// Checks every named property of the library on `q`.
pub fn verify(q: &LoopyLaplacian, opts: &VerifyOptions) -> Result<VerifyReport> {
    if !is_irreducible(q) {
        return Err(Error::Connectivity("verification needs a connected graph".into()));
    }
    let n = q.n();
    if n < 3 {
        return Err(Error::Dimension(format!(
            "verification needs at least 3 nodes for a proper boundary, got {n}"
        )));
    }
    let t = opts.tolerances;
    let mut s = Suite::new(&t);
    whole_graph_checks(q, &mut s)?;

    let (exhaustive, sets) = boundary_sets(n, opts);
    // Separate stream for orders and perturbations so the boundary sample
    // does not depend on them.
    let mut r = rng(opts.seed.wrapping_add(1));
    for boundary in &sets {
        let p = Partition::new(n, boundary)?;
        let kr = kron_reduce(q, &p)?;
        check_partition(q, &p, &kr, opts, &mut s, &mut r)?;
    }

    let properties = s.finish();
    Ok(VerifyReport {
        n,
        seed: opts.seed,
        exhaustive,
        boundary_sets: sets.len(),
        passed: properties.iter().all(|p| p.passed),
        properties,
    })
}

fn whole_graph_checks(q: &LoopyLaplacian, s: &mut Suite) -> Result<()> {
    let r = effective_resistance(q)?;
    let x = impedance(q)?;
    if q.is_loop_less() {
        for reference in 0..q.n() {
            let via_ref = resistance_via_reference(q, reference)?;
            let rest: Vec<usize> = (0..q.n()).filter(|&i| i != reference).collect();
            s.resistance_routes.record(max_abs_diff(via_ref.entries(), &select(r.entries(), &rest, &rest)), || {
                format!("reference node {}", reference + 1)
            });
        }
        for delta in [1.0, 0.37] {
            let via_shift = resistance_via_shift(q, delta)?;
            s.resistance_routes
                .record(max_abs_diff(via_shift.entries(), r.entries()), || format!("shift {delta}"));
        }
        let rec = impedance_from_resistance(&r, ReconstructionMode::LoopLess)?;
        s.reconstruction.record(max_abs_diff(&rec.matrix, &x), || "L† of the input".into());
    } else {
        let hat = augment(q).laplacian;
        let r_hat = effective_resistance(&hat)?;
        let first: Vec<usize> = (0..q.n()).collect();
        s.resistance_augmentation.record(
            max_abs_diff(&select(r_hat.entries(), &first, &first), r.entries()),
            || "input vs augmented".into(),
        );
        let r_bar = effective_resistance(&loopless_part(q))?;
        let excess = (r.entries() - r_bar.entries()).max();
        s.resistance_self_loops.record(excess.max(0.0), || "R - R̄".into());

        let rec = impedance_from_resistance(&r_hat, ReconstructionMode::AugmentedLoopy)?;
        s.reconstruction
            .record(max_abs_diff(&rec.matrix, &impedance(&hat)?), || "Q̂† of the input".into());
        let rec = impedance_from_resistance(&r_hat, ReconstructionMode::LoopyDirect)?;
        s.reconstruction.record(max_abs_diff(&rec.matrix, &x), || "Q⁻¹ of the input".into());

        let report = verify_augmented_interlacing(q)?;
        s.augmented_interlacing
            .record(report.slack, || format!("eigenvalue index {}", report.worst_index));
    }
    Ok(())
}

fn closure_checks(q: &LoopyLaplacian, p: &Partition, q_red: &DMatrix<f64>, t: &Tolerances, tally: &mut Tally) {
    let ctx = label(p.boundary());
    let m = q_red.nrows();
    let name = |i: usize, j: usize| format!("{ctx}: q_red[{},{}]", p.boundary()[i] + 1, p.boundary()[j] + 1);
    let mut sym = (0.0, 0, 0);
    let mut off = (f64::NEG_INFINITY, 0, 0);
    for i in 0..m {
        for j in 0..m {
            let d = (q_red[(i, j)] - q_red[(j, i)]).abs();
            if d > sym.0 {
                sym = (d, i, j);
            }
            if i != j && q_red[(i, j)] > off.0 {
                off = (q_red[(i, j)], i, j);
            }
        }
    }
    tally.record(sym.0, || format!("{} asymmetric", name(sym.1, sym.2)));
    if m > 1 {
        tally.record(off.0.max(0.0), || format!("{} positive off-diagonal", name(off.1, off.2)));
    }
    let sums = linalg::row_sums(q_red);
    for i in 0..m {
        tally.record((-sums[i]).max(0.0), || format!("{ctx}: row {} sum negative", p.boundary()[i] + 1));
        if q.is_loop_less() {
            tally.record(sums[i].abs(), || format!("{ctx}: row {} sum nonzero for loop-less input", p.boundary()[i] + 1));
        }
    }
    if q.is_strictly_loopy() {
        tally.flag(sums.iter().any(|&v| v > t.edge), || format!("{ctx}: strictly loopy class lost"));
    }
    match LoopyLaplacian::new(q_red.clone()) {
        Ok(l) => tally.flag(is_irreducible(&l), || format!("{ctx}: q_red is reducible")),
        Err(_) => tally.flag(false, || format!("{ctx}: q_red is not a loopy Laplacian")),
    }
}

fn check_partition<R: Rng>(
    q: &LoopyLaplacian,
    p: &Partition,
    kr: &KronReduction,
    opts: &VerifyOptions,
    s: &mut Suite,
    r: &mut R,
) -> Result<()> {
    let t = &opts.tolerances;
    let ctx = label(p.boundary());
    let (outer, inner) = (p.boundary(), p.interior());

    let mut q_red = kr.q_red.entries().clone();
    if opts.corrupt_q_red && q_red.nrows() > 1 {
        q_red[(0, 1)] = 0.5;
        q_red[(1, 0)] = 0.5;
    }
    closure_checks(q, p, &q_red, t, &mut s.closure);

    let min_ac = kr.q_ac.min();
    s.accompanying.record((-min_ac).max(0.0), || format!("{ctx}: negative q_ac entry"));
    if q.is_loop_less() {
        for (c, col) in kr.q_ac.column_iter().enumerate() {
            s.accompanying.record((col.sum() - 1.0).abs(), || {
                format!("{ctx}: q_ac column for node {} does not sum to 1", inner[c] + 1)
            });
        }
    }

    let block = select(q.entries(), outer, outer);
    s.monotonicity
        .record((kr.q_red.entries() - &block).max().max(0.0), || format!("{ctx}: Q_red exceeds Q[α,α]"));

    let mut orders = vec![default_order(p)];
    orders.extend((0..opts.orders).map(|_| random_order(r, p)));
    for (k, order) in orders.iter().enumerate() {
        let it = kron_reduce_iterative(q, p, order)?;
        let diff = max_abs_diff(it.reduction.q_red.entries(), kr.q_red.entries())
            .max(max_abs_diff(&it.reduction.q_ac, &kr.q_ac));
        s.quotient.record(diff, || {
            let o: Vec<String> = order.iter().map(|v| (v + 1).to_string()).collect();
            format!("{ctx}: order [{}]", o.join(","))
        });
        if k == 0 {
            let mut prev = q.self_loops();
            let mut labels: Vec<usize> = (0..q.n()).collect();
            for step in &it.steps {
                let next = step.laplacian.self_loops();
                let removed = labels.iter().position(|&v| v == step.eliminated).expect("label present");
                labels.remove(removed);
                let old: Vec<f64> = (0..prev.len()).filter(|&i| i != removed).map(|i| prev[i]).collect();
                let drop = old.iter().zip(next.iter()).map(|(a, b)| a - b).fold(0.0, f64::max);
                s.loop_monotonicity
                    .record(drop, || format!("{ctx}: eliminating node {}", step.eliminated + 1));
                prev = next;
            }
        }
    }

    let rep = verify_interlacing(q, p)?;
    s.interlacing
        .record(rep.slack.max(0.0), || format!("{ctx}: {} at r = {}", rep.worst_inequality, rep.worst_index));
    let rep = verify_loop_shift_bounds(q, p)?;
    s.loop_shift_bounds
        .record(rep.slack.max(0.0), || format!("{ctx}: {} at r = {}", rep.worst_inequality, rep.worst_index));
    if q.is_loop_less() {
        let gap = algebraic_connectivity(q)? - algebraic_connectivity(&kr.q_red)?;
        s.loopless_connectivity.record(gap.max(0.0), || format!("{ctx}: λ₂(L) > λ₂(L_red)"));
    }

    let predicted = predict_reduced_topology(q, p)?;
    s.topology
        .flag(predicted == ReducedTopology::from_graph(&kr.a_red), || format!("{ctx}: predicted pattern differs"));

    let loops = reduced_self_loops(q, p)?;
    s.reduced_loops.record(
        (loops - linalg::row_sums(kr.q_red.entries())).amax(),
        || format!("{ctx}: loop formula vs row sums"),
    );

    let dec = self_loop_decomposition(q, p)?;
    let mut err = max_abs_diff(&dec.sum(), kr.q_red.entries());
    err = err.max((-dec.s.min()).max(0.0));
    err = err.max(max_abs_diff(&dec.s, &dec.s.transpose()));
    s.self_loop_decomposition.record(err, || format!("{ctx}: decomposition"));

    let r_full = effective_resistance(q)?;
    let r_red = effective_resistance(&kr.q_red)?;
    s.resistance_invariance
        .record(max_abs_diff(r_full.restrict(outer).entries(), r_red.entries()), || ctx.clone());

    if kr.q_red.is_loop_less() {
        let rec = impedance_from_resistance(&r_red, ReconstructionMode::LoopLess)?;
        s.reconstruction
            .record(max_abs_diff(&rec.matrix, &impedance(&kr.q_red)?), || format!("{ctx}: L_red†"));
    } else {
        let hat = augment(q).laplacian;
        let mut nodes = outer.to_vec();
        nodes.push(q.n());
        let r_hat = effective_resistance(&hat)?.restrict(&nodes);
        let rec = impedance_from_resistance(&r_hat, ReconstructionMode::LoopyDirect)?;
        s.reconstruction
            .record(max_abs_diff(&rec.matrix, &impedance(&kr.q_red)?), || format!("{ctx}: Q_red⁻¹"));

        let p_hat = Partition::new(q.n() + 1, &nodes)?;
        let lhs = kron_reduce(&hat, &p_hat)?;
        let rhs = augment(&kr.q_red).laplacian;
        s.augmentation_commutes
            .record(max_abs_diff(lhs.q_red.entries(), rhs.entries()), || ctx.clone());
    }

    if inner.len() >= 2 {
        let a = inner[r.random_range(0..inner.len())];
        let b = loop {
            let b = inner[r.random_range(0..inner.len())];
            if b != a {
                break b;
            }
        };
        let (i, j) = (a.min(b), a.max(b));
        let w = -q.get(i, j);
        let mut deltas = vec![0.5 + r.random::<f64>()];
        if w > t.edge {
            deltas.push(-0.5 * w);
        }
        for delta in deltas {
            sherman_morrison(q, p, kr, i, j, delta, &ctx, &mut s.sherman_morrison)?;
        }
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn sherman_morrison(
    q: &LoopyLaplacian,
    p: &Partition,
    kr: &KronReduction,
    i: usize,
    j: usize,
    delta: f64,
    ctx: &str,
    tally: &mut Tally,
) -> Result<()> {
    let what = || format!("{ctx}: edge ({},{}) changed by {delta:.3}", i + 1, j + 1);
    let updated = match kr.perturb_interior_edge(q, i, j, delta) {
        Ok((updated, _)) => updated,
        Err(Error::Connectivity(_)) => return Ok(()),
        Err(e) => {
            tally.error(&e, what);
            return Ok(());
        }
    };
    let perturbed = crate::kron::check_edge_perturbation(q, i, j, delta)?;
    let fresh = kron_reduce(&perturbed, p)?;
    tally.record(max_abs_diff(updated.entries(), fresh.q_red.entries()), what);
    let predicted = perturbed_resistance(q, p, i, j, delta)?;
    let measured = effective_resistance(&perturbed)?;
    tally.record(max_abs_diff(predicted.entries(), measured.entries()), what);
    Ok(())
}
