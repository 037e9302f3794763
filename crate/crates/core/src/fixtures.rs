//! Small hand-built markets with known behavior.
//!
//! Where an example leaves list tails open ("…"), the remaining ids
//! are appended in index order and schools rank any appended applicants after
//! the given ones, also in index order.

use crate::model::{CapacityAllocation, FractionalAssignment, Instance, Matching, PenaltySpec};

/// Appends the missing ids `0..len` to `list` in index order.
fn complete(list: &[usize], len: usize) -> Vec<usize> {
    let mut out = list.to_vec();
    out.extend((0..len).filter(|i| !list.contains(i)));
    out
}

/// Completes priority heads with the remaining applicants of each school.
fn complete_priorities(prefs: &[Vec<usize>], heads: &[Vec<usize>]) -> Vec<Vec<usize>> {
    heads
        .iter()
        .enumerate()
        .map(|(c, head)| {
            let mut list = head.clone();
            list.extend((0..prefs.len()).filter(|s| prefs[*s].contains(&c) && !head.contains(s)));
            list
        })
        .collect()
}

fn build(prefs: Vec<Vec<usize>>, prio: Vec<Vec<usize>>, q: Vec<usize>, budget: usize, pen: PenaltySpec) -> Instance {
    Instance::new(prefs, prio, q, budget, pen, Vec::new()).expect("fixture is consistent")
}

fn point(inst: &Instance, assign: Vec<Option<usize>>) -> FractionalAssignment {
    FractionalAssignment::from_matching(inst, &Matching::new(assign))
}

/// Three schools, four students, one extra seat. `f(0) = 6`, optimum 5.
pub fn one_seat() -> Instance {
    build(
        vec![vec![0, 1, 2], vec![1, 0, 2], vec![0, 2, 1], vec![1, 2, 0]],
        vec![vec![0, 1, 2, 3]; 3],
        vec![1, 1, 2],
        1,
        PenaltySpec::Access,
    )
}

/// Six students, four schools; the two linearizations have different LP bounds.
pub fn linearization_gap() -> Instance {
    build(
        vec![
            vec![2, 3, 0, 1],
            vec![1, 0, 3, 2],
            vec![1, 0, 3, 2],
            vec![0, 2, 1, 3],
            vec![2, 0, 3, 1],
            vec![0, 2, 3, 1],
        ],
        vec![vec![0, 2, 1, 4, 5, 3], vec![3, 0, 5, 4, 1, 2], vec![1, 0, 4, 5, 2, 3], vec![5, 2, 1, 3, 4, 0]],
        vec![1, 1, 2, 2],
        1,
        PenaltySpec::Access,
    )
}

/// Fully-subscribed schools differ between the unconstrained optimum and DA.
pub fn unstable_optimum() -> Instance {
    build(
        vec![vec![0, 3, 2, 1], vec![0, 1, 2, 3], vec![3, 0, 1, 2]],
        vec![vec![1, 0, 2], vec![1, 0, 2], vec![0, 1, 2], vec![2, 0, 1]],
        vec![1; 4],
        0,
        PenaltySpec::Access,
    )
}

/// Unconstrained optimum of [`unstable_optimum`] at `t = 0`.
pub fn unstable_optimum_point() -> (Instance, FractionalAssignment, CapacityAllocation) {
    let inst = unstable_optimum();
    let x = point(&inst, vec![Some(0), Some(1), Some(3)]);
    (inst, x, CapacityAllocation::zero(4))
}

/// Five students, six schools, one extra seat; one comb cut suffices.
pub fn single_cut() -> Instance {
    let heads = [vec![0, 3, 2, 1], vec![0, 1, 2, 3], vec![3, 0, 4, 5], vec![4, 0, 3, 5], vec![3, 4, 5, 0]];
    let prefs: Vec<Vec<usize>> = heads.iter().map(|h| complete(h, 6)).collect();
    let prio = complete_priorities(
        &prefs,
        &[vec![1, 0, 2], vec![1, 0, 2], vec![0, 1, 2], vec![2, 3, 4], vec![3, 2, 4], vec![4]],
    );
    build(prefs, prio, vec![1; 6], 1, PenaltySpec::Access)
}

/// Optimum of the main program of [`single_cut`] without comb rows.
pub fn single_cut_point() -> (Instance, FractionalAssignment, CapacityAllocation) {
    let inst = single_cut();
    let x = point(&inst, vec![Some(0), Some(1), Some(3), Some(4), Some(3)]);
    (inst, x, CapacityAllocation::new(vec![0, 0, 0, 1, 0, 0]))
}

/// Eight students, six schools; the most violated comb has value 0.
pub fn zero_comb() -> Instance {
    let a = vec![5, 0, 1, 2, 3, 4];
    let b = vec![5, 1, 2, 3, 4, 0];
    let tail = [0, 1, 2, 3];
    let low = |head: &[usize]| {
        let mut v = head.to_vec();
        v.extend_from_slice(&tail);
        v
    };
    build(
        vec![
            a.clone(),
            a,
            b.clone(),
            b,
            vec![1, 2, 3, 4, 0, 5],
            vec![2, 1, 3, 4, 0, 5],
            vec![3, 1, 2, 4, 0, 5],
            vec![4, 1, 2, 3, 0, 5],
        ],
        vec![
            (0..8).collect(),
            low(&[4, 5, 6, 7]),
            low(&[5, 4, 6, 7]),
            low(&[6, 5, 4, 7]),
            low(&[6, 5, 4, 7]),
            (0..8).collect(),
        ],
        vec![2, 1, 1, 1, 1, 2],
        0,
        PenaltySpec::Access,
    )
}

pub fn zero_comb_point() -> (Instance, FractionalAssignment, CapacityAllocation) {
    let inst = zero_comb();
    let x = point(&inst, vec![Some(0), Some(0), Some(5), Some(5), Some(1), Some(2), Some(3), Some(4)]);
    (inst, x, CapacityAllocation::zero(6))
}

/// `f` is not lattice submodular here: `f(1,1,0,0,0) + f(0) > f(1,0,0,0,0) + f(0,1,0,0,0)`.
pub fn not_submodular() -> Instance {
    build(
        vec![vec![0, 1, 4, 3, 2], vec![1, 2, 3, 0, 4], vec![1, 4, 3, 0, 2], vec![4, 3, 0]],
        vec![vec![0, 1, 3, 2], vec![1, 2, 0], vec![1, 0, 2], vec![2, 3, 1, 0], vec![3, 2, 0, 1]],
        vec![0, 1, 1, 1, 1],
        2,
        PenaltySpec::Access,
    )
}

/// `f` is not lattice supermodular here: `f(1,1,0,0,0) + f(0) < f(1,0,0,0,0) + f(0,1,0,0,0)`.
pub fn not_supermodular() -> Instance {
    build(
        vec![vec![0, 2, 4, 3, 1], vec![1, 3, 0, 4, 2], vec![2, 3, 4, 0], vec![4]],
        vec![vec![0, 1, 2], vec![0, 1], vec![0, 1, 2], vec![2, 0, 1], vec![3, 1, 2, 0]],
        vec![0, 0, 1, 1, 1],
        2,
        PenaltySpec::Constant(0.0),
    )
}

/// Students `s1 s2 s3 s1' s2'` are ids 0..5, schools `c1 c2 c3 c1' c2'` likewise.
pub fn manipulable() -> Instance {
    let heads = [vec![0], vec![1], vec![0, 1, 2], vec![3], vec![3, 4]];
    let prefs: Vec<Vec<usize>> = heads.iter().map(|h| complete(h, 5)).collect();
    let prio = complete_priorities(&prefs, &[vec![0, 2], vec![1, 2], vec![2], vec![3, 4], vec![4]]);
    build(prefs, prio, vec![1; 5], 1, PenaltySpec::Access)
}

/// [`manipulable`] with student 4 (`s2'`) reporting `c1' ≻ c1 ≻ c2 ≻ c2' ≻ c3`.
pub fn manipulable_misreport() -> Instance {
    manipulable().with_student_prefs(4, vec![3, 0, 1, 4, 2], usize::MAX).expect("same schools listed")
}

/// The non-monotonicity example with eight students and eight schools.
///
/// With `improved`, school 1 ranks student 2 above student 1; student 2 then
/// ends up worse off although their priority went up.
pub fn monotonicity(improved: bool) -> Instance {
    let n = 8;
    let mut prefs = vec![vec![0, 2], vec![1, 2], vec![0, 1], vec![3]];
    for k in 4..n {
        prefs.push(vec![k - 1, k]);
    }
    let mut prio = vec![vec![0, 2], if improved { vec![2, 1] } else { vec![1, 2] }, vec![0, 1]];
    for c in 3..n {
        prio.push((3..n).filter(|&s| prefs[s].contains(&c)).collect());
    }
    build(prefs, prio, vec![1; n], 1, PenaltySpec::Access)
}

/// Every fixture under its file stem.
pub fn all() -> Vec<(&'static str, Instance)> {
    vec![
        ("one_seat", one_seat()),
        ("linearization_gap", linearization_gap()),
        ("unstable_optimum", unstable_optimum()),
        ("single_cut", single_cut()),
        ("zero_comb", zero_comb()),
        ("not_submodular", not_submodular()),
        ("not_supermodular", not_supermodular()),
        ("manipulable", manipulable()),
        ("manipulable_misreport", manipulable_misreport()),
        ("monotonicity", monotonicity(false)),
        ("monotonicity_improved", monotonicity(true)),
    ]
}
