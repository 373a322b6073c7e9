//! P. Hall basis of the free Lie algebra on `m` generators, truncated at
//! bracket length `r`.
//!
//! Indices are 1-based throughout, matching the usual notation `I_1, I_2, …`.
//! Within equal length, elements appear in construction order: left factor
//! ascending, then right factor ascending.

use serde::Serialize;

/// Shape of a Hall element.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum HallKind {
    Generator { generator: usize },
    Bracket { left: usize, right: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct HallElement {
    pub index: usize,
    pub length: usize,
    pub kind: HallKind,
    /// Direct descendant: the generator reached by unrolling right factors.
    pub phi: usize,
    /// Exponent vector over all basis indices (entry `l-1` counts index `l`).
    pub alpha: Vec<u32>,
    /// Generator occurrence counts.
    pub delta: Vec<usize>,
    /// Position of the element's equivalence class in [`HallBasis::classes`].
    pub class_id: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct HallBasis {
    pub m: usize,
    pub r: usize,
    pub elements: Vec<HallElement>,
    /// `level_dims[s-1]` is the number of elements of length at most `s`.
    pub level_dims: Vec<usize>,
    /// Free weight of each index (its bracket length).
    pub free_weights: Vec<usize>,
    /// Equivalence classes (equal `delta`), ordered by smallest index.
    pub classes: Vec<Vec<usize>>,
}

impl HallBasis {
    /// Total number of elements `ñ_r`.
    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn element(&self, j: usize) -> &HallElement {
        &self.elements[j - 1]
    }

    /// Number of elements of length at most `s` (`ñ_s`; zero for `s = 0`).
    pub fn dim_upto(&self, s: usize) -> usize {
        if s == 0 {
            0
        } else {
            self.level_dims[s.min(self.r) - 1]
        }
    }

    /// Human readable bracket, e.g. `[X1,[X1,X2]]`.
    pub fn bracket_string(&self, j: usize) -> String {
        match self.element(j).kind {
            HallKind::Generator { generator } => format!("X{generator}"),
            HallKind::Bracket { left, right } => {
                format!(
                    "[{},{}]",
                    self.bracket_string(left),
                    self.bracket_string(right)
                )
            }
        }
    }

    /// Indices of the given class.
    pub fn class(&self, class_id: usize) -> &[usize] {
        &self.classes[class_id]
    }
}

/// Builds the Hall basis with all elements of length at most `r`.
pub fn build_hall_basis(m: usize, r: usize) -> HallBasis {
    assert!(m >= 1 && r >= 1, "need at least one generator and r >= 1");
    let mut elements: Vec<HallElement> = Vec::new();
    for g in 1..=m {
        let mut delta = vec![0; m];
        delta[g - 1] = 1;
        elements.push(HallElement {
            index: g,
            length: 1,
            kind: HallKind::Generator { generator: g },
            phi: g,
            alpha: Vec::new(),
            delta,
            class_id: 0,
        });
    }
    let mut level_dims = vec![m];
    for len in 2..=r {
        let previous = elements.len();
        let mut fresh = Vec::new();
        for a in 1..=previous {
            for b in (a + 1)..=previous {
                let (ea, eb) = (&elements[a - 1], &elements[b - 1]);
                if ea.length + eb.length != len {
                    continue;
                }
                if let HallKind::Bracket { left, .. } = eb.kind {
                    if left > a {
                        continue;
                    }
                }
                let delta = ea.delta.iter().zip(&eb.delta).map(|(x, y)| x + y).collect();
                fresh.push(HallElement {
                    index: 0,
                    length: len,
                    kind: HallKind::Bracket { left: a, right: b },
                    phi: 0,
                    alpha: Vec::new(),
                    delta,
                    class_id: 0,
                });
            }
        }
        for mut e in fresh {
            e.index = elements.len() + 1;
            elements.push(e);
        }
        level_dims.push(elements.len());
    }
    let total = elements.len();
    for j in 1..=total {
        let (phi, alpha) = decompose_raw(&elements, j, total);
        elements[j - 1].phi = phi;
        elements[j - 1].alpha = alpha;
    }
    let classes = group_classes(&elements);
    for (cid, class) in classes.iter().enumerate() {
        for &j in class {
            elements[j - 1].class_id = cid;
        }
    }
    let free_weights = elements.iter().map(|e| e.length).collect();
    HallBasis {
        m,
        r,
        elements,
        level_dims,
        free_weights,
        classes,
    }
}

fn decompose_raw(elements: &[HallElement], j: usize, total: usize) -> (usize, Vec<u32>) {
    let mut alpha = vec![0u32; total];
    let mut cur = j;
    loop {
        match elements[cur - 1].kind {
            HallKind::Generator { generator } => return (generator, alpha),
            HallKind::Bracket { left, right } => {
                alpha[left - 1] += 1;
                cur = right;
            }
        }
    }
}

fn group_classes(elements: &[HallElement]) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for e in elements {
        match classes
            .iter_mut()
            .find(|c| elements[c[0] - 1].delta == e.delta)
        {
            Some(c) => c.push(e.index),
            None => classes.push(vec![e.index]),
        }
    }
    classes
}

/// Returns `(φ(j), α_j)` from the right-nested expansion of `I_j`.
pub fn hall_decompose(basis: &HallBasis, j: usize) -> (usize, Vec<u32>) {
    let e = basis.element(j);
    (e.phi, e.alpha.clone())
}

/// Equivalence classes ordered by their smallest index.
pub fn equivalence_classes(basis: &HallBasis) -> Vec<Vec<usize>> {
    basis.classes.clone()
}

/// Evaluates bracket `j` on any algebra supplied as generator values plus a
/// bracket operation. Intermediate brackets are memoised.
pub fn evaluate_bracket_with<T: Clone>(
    basis: &HallBasis,
    j: usize,
    generators: &[T],
    bracket: &mut dyn FnMut(&T, &T) -> T,
) -> T {
    let mut cache: Vec<Option<T>> = vec![None; basis.len()];
    eval_rec(basis, j, generators, bracket, &mut cache)
}

/// Evaluates every basis element at once, in index order.
pub fn evaluate_all_with<T: Clone>(
    basis: &HallBasis,
    generators: &[T],
    bracket: &mut dyn FnMut(&T, &T) -> T,
) -> Vec<T> {
    let mut cache: Vec<Option<T>> = vec![None; basis.len()];
    (1..=basis.len())
        .map(|j| eval_rec(basis, j, generators, bracket, &mut cache))
        .collect()
}

fn eval_rec<T: Clone>(
    basis: &HallBasis,
    j: usize,
    generators: &[T],
    bracket: &mut dyn FnMut(&T, &T) -> T,
    cache: &mut Vec<Option<T>>,
) -> T {
    if let Some(v) = &cache[j - 1] {
        return v.clone();
    }
    let value = match basis.element(j).kind {
        HallKind::Generator { generator } => generators[generator - 1].clone(),
        HallKind::Bracket { left, right } => {
            let l = eval_rec(basis, left, generators, bracket, cache);
            let r = eval_rec(basis, right, generators, bracket, cache);
            bracket(&l, &r)
        }
    };
    cache[j - 1] = Some(value.clone());
    value
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_generators_step_three() {
        let b = build_hall_basis(2, 3);
        let names: Vec<String> = (1..=b.len()).map(|j| b.bracket_string(j)).collect();
        assert_eq!(
            names,
            ["X1", "X2", "[X1,X2]", "[X1,[X1,X2]]", "[X2,[X1,X2]]"]
        );
        assert_eq!(b.level_dims, vec![2, 3, 5]);
        assert_eq!(b.classes.len(), 5);
    }

    #[test]
    fn three_generators_step_two() {
        let b = build_hall_basis(3, 2);
        assert_eq!(b.level_dims, vec![3, 6]);
        let names: Vec<String> = (4..=6).map(|j| b.bracket_string(j)).collect();
        assert_eq!(names, ["[X1,X2]", "[X1,X3]", "[X2,X3]"]);
    }

    #[test]
    fn one_generator_has_no_brackets() {
        let b = build_hall_basis(1, 3);
        assert_eq!(b.len(), 1);
        assert_eq!(b.level_dims, vec![1, 1, 1]);
    }

    #[test]
    fn decomposition_examples() {
        let b = build_hall_basis(2, 3);
        assert_eq!(hall_decompose(&b, 1), (1, vec![0; 5]));
        assert_eq!(hall_decompose(&b, 3), (2, vec![1, 0, 0, 0, 0]));
        assert_eq!(hall_decompose(&b, 5), (2, vec![1, 1, 0, 0, 0]));
    }

    #[test]
    fn multi_element_class_at_step_five() {
        let b = build_hall_basis(2, 5);
        let class = b
            .classes
            .iter()
            .find(|c| b.element(c[0]).delta == vec![3, 2])
            .expect("class (3,2) exists");
        let mut names: Vec<String> = class.iter().map(|&j| b.bracket_string(j)).collect();
        names.sort();
        assert_eq!(names, ["[X2,[X1,[X1,[X1,X2]]]]", "[[X1,X2],[X1,[X1,X2]]]"]);
    }
}
