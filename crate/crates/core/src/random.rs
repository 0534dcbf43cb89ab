//! Seedable generators for densities, coefficient vectors, marginals and
//! networks, used by property tests and the acceptance suite.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::logic::{Frame, Literal, World};
use crate::network::{joint_density, NodeSpec, PossibilisticNet};
use crate::possibility::Density;

/// A frame with primitives `P0`, `P1`, ….
pub fn frame(n: usize) -> Frame {
    Frame::new((0..n).map(|i| format!("P{i}"))).expect("valid generated frame")
}

/// A value in `[0, 1]` with extra weight on 0, 1 and a few repeated levels
/// so ties and null worlds show up often.
fn value(rng: &mut impl Rng) -> f64 {
    match rng.gen_range(0..10) {
        0 => 0.0,
        1 => 1.0,
        2 => [0.25, 0.5, 0.75][rng.gen_range(0..3)],
        _ => rng.gen(),
    }
}

/// A normalized density: arbitrary values with one world raised to 1.
pub fn density(rng: &mut impl Rng, frame: &Frame) -> Density {
    let mut values: Vec<f64> = (0..frame.world_count()).map(|_| value(rng)).collect();
    let top = rng.gen_range(0..values.len());
    values[top] = 1.0;
    Density::new(frame, values).expect("generated density is valid")
}

/// A density whose values are multiples of `2⁻ᵇⁱᵗˢ`, so sums and
/// differences of values are exact.
pub fn dyadic_density(rng: &mut impl Rng, frame: &Frame, bits: u32) -> Density {
    let scale = f64::from(1u32 << bits);
    let mut values: Vec<f64> = (0..frame.world_count())
        .map(|_| f64::from(rng.gen_range(0..=1u32 << bits)) / scale)
        .collect();
    let top = rng.gen_range(0..values.len());
    values[top] = 1.0;
    Density::new(frame, values).expect("generated density is valid")
}

/// `n` non-negative coefficients summing to `total`, some of them zero.
pub fn coefficients(rng: &mut impl Rng, n: usize, total: f64) -> Vec<f64> {
    if n == 0 {
        return Vec::new();
    }
    let mut weights: Vec<f64> = (0..n)
        .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen() })
        .collect();
    let sum: f64 = weights.iter().sum();
    if sum == 0.0 {
        let i = rng.gen_range(0..n);
        weights[i] = 1.0;
    }
    let sum: f64 = weights.iter().sum();
    weights.iter().map(|w| w / sum * total).collect()
}

/// A marginal of length `n` attaining 1.
pub fn marginal(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    let mut values: Vec<f64> = (0..n).map(|_| value(rng)).collect();
    let top = rng.gen_range(0..n);
    values[top] = 1.0;
    values
}

/// A random net with `1..=max_nodes` binary variables, each with at most
/// `max_parents` parents. Declaration order is shuffled against the causal
/// order; table values have three decimals.
pub fn net(rng: &mut impl Rng, max_nodes: usize, max_parents: usize) -> PossibilisticNet {
    let n = rng.gen_range(1..=max_nodes);
    let f = frame(n);
    let mut causal: Vec<usize> = (0..n).collect();
    causal.shuffle(rng);
    let mut nodes = vec![NodeSpec::root([1.0, 1.0]); n];
    for (pos, &q) in causal.iter().enumerate() {
        let k = rng.gen_range(0..=max_parents.min(pos));
        let parents: Vec<usize> = causal[..pos].choose_multiple(rng, k).copied().collect();
        let rows = (0..1usize << parents.len())
            .map(|_| {
                let other = (value(rng) * 1000.0).round() / 1000.0;
                if rng.gen_bool(0.5) {
                    [1.0, other]
                } else {
                    [other, 1.0]
                }
            })
            .collect();
        nodes[q] = NodeSpec::conditional(parents, rows);
    }
    PossibilisticNet::new(&f, nodes).expect("generated net is valid")
}

/// Literals read off a random world of positive possibility, so the
/// conjunction is satisfiable with `Π(ε) > 0`. Up to `max_literals`
/// distinct variables, in random order.
pub fn satisfiable_evidence(
    rng: &mut impl Rng,
    net: &PossibilisticNet,
    max_literals: usize,
) -> Vec<Literal> {
    let f = net.frame();
    let joint = joint_density(net);
    let possible: Vec<World> = f.worlds().filter(|&w| joint.value(w) > 0.0).collect();
    let world = *possible.choose(rng).expect("a normalized joint has a possible world");
    let mut vars: Vec<usize> = (0..f.len()).collect();
    vars.shuffle(rng);
    let k = rng.gen_range(0..=max_literals.min(f.len()));
    vars[..k]
        .iter()
        .map(|&v| Literal::new(v, f.holds(world, v)))
        .collect()
}
