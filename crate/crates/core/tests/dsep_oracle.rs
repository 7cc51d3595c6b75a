//! Every well-formed query on every built-in DAG, checked against an
//! independent moralization test.

use mirelax_core::{d_separated, Dag, Figure, IndependenceQuery, Var, VarSet};

/// `left ⫫ right | given` via the moral graph of the ancestral subgraph.
fn moral_separated(dag: &Dag, left: VarSet, right: VarSet, given: VarSet) -> bool {
    let vars = Var::ALL;
    let idx = |v: Var| vars.iter().position(|&w| w == v).unwrap();
    let n = vars.len();

    // Ancestral closure of all query variables.
    let mut keep = [false; 7];
    let mut stack: Vec<Var> = left.union(right).union(given).iter().collect();
    while let Some(v) = stack.pop() {
        if !keep[idx(v)] {
            keep[idx(v)] = true;
            for &(p, c) in dag.edges() {
                if c == v {
                    stack.push(p);
                }
            }
        }
    }

    let mut adj = vec![vec![false; n]; n];
    let mut link = |a: usize, b: usize| {
        adj[a][b] = true;
        adj[b][a] = true;
    };
    for &(p, c) in dag.edges() {
        if keep[idx(p)] && keep[idx(c)] {
            link(idx(p), idx(c));
        }
    }
    for c in vars {
        if !keep[idx(c)] {
            continue;
        }
        let parents: Vec<usize> = dag
            .edges()
            .iter()
            .filter(|&&(p, ch)| ch == c && keep[idx(p)])
            .map(|&(p, _)| idx(p))
            .collect();
        for (i, &a) in parents.iter().enumerate() {
            for &b in &parents[i + 1..] {
                link(a, b);
            }
        }
    }

    let blocked = |i: usize| given.contains(vars[i]) || !keep[i];
    let mut seen = [false; 7];
    let mut queue: Vec<usize> = left.iter().map(idx).collect();
    for &i in &queue {
        seen[i] = true;
    }
    while let Some(i) = queue.pop() {
        if right.contains(vars[i]) {
            return false;
        }
        for j in 0..n {
            if adj[i][j] && !seen[j] && !blocked(j) {
                seen[j] = true;
                queue.push(j);
            }
        }
    }
    true
}

/// All queries over `nodes` with nonempty, pairwise disjoint left/right/given sets.
fn all_queries(nodes: VarSet) -> Vec<IndependenceQuery> {
    let mut out = Vec::new();
    for code in 0..4usize.pow(7) {
        let (mut l, mut r, mut g) = (VarSet::EMPTY, VarSet::EMPTY, VarSet::EMPTY);
        let digits: Vec<usize> = (0..7).map(|i| code / 4usize.pow(i) % 4).collect();
        if Var::ALL
            .iter()
            .zip(&digits)
            .any(|(&v, &d)| d != 0 && !nodes.contains(v))
        {
            continue;
        }
        for (&v, &d) in Var::ALL.iter().zip(&digits) {
            match d {
                1 => l.insert(v),
                2 => r.insert(v),
                3 => g.insert(v),
                _ => {}
            }
        }
        if let Ok(q) = IndependenceQuery::new(l, r, g) {
            out.push(q);
        }
    }
    out
}

#[test]
fn bayes_ball_agrees_with_moralization() {
    for fig in Figure::ALL {
        let dag = Dag::builtin(fig);
        let queries = all_queries(dag.nodes());
        assert!(queries.len() > 500);
        for q in &queries {
            let fast = d_separated(&dag, q).unwrap();
            let oracle = moral_separated(&dag, q.left(), q.right(), q.given());
            assert_eq!(fast, oracle, "{fig}: {q}");
        }
    }
}

#[test]
fn verdicts_are_symmetric() {
    for fig in Figure::ALL {
        let dag = Dag::builtin(fig);
        for q in all_queries(dag.nodes()) {
            assert_eq!(
                d_separated(&dag, &q).unwrap(),
                d_separated(&dag, &q.swapped()).unwrap(),
                "{fig}: {q}"
            );
        }
    }
}

#[test]
fn extra_edges_only_remove_independencies() {
    let pairs = [
        (Figure::OneA, Figure::OneB),
        (Figure::TwoA, Figure::TwoB),
        (Figure::ThreeA, Figure::ThreeB),
    ];
    for (sparse, dense) in pairs {
        let (a, b) = (Dag::builtin(sparse), Dag::builtin(dense));
        for q in all_queries(a.nodes()) {
            if d_separated(&b, &q).unwrap() {
                assert!(
                    d_separated(&a, &q).unwrap(),
                    "{dense} separates {q} but {sparse} does not"
                );
            }
        }
    }
}
