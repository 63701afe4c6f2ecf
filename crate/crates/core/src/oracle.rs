//! Offline optima: the best indicator-sum reward with full knowledge of
//! the job sequence.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::function::ThresholdFunction;
use crate::model::{Job, Worker};

/// Largest job or worker count accepted by [`offline_optimum_exhaustive`].
pub const EXHAUSTIVE_LIMIT: usize = 8;

/// Bipartite graph with an edge `(i, j)` whenever `f(x_i, p_j) >= α`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeasibilityGraph {
    pub n_jobs: usize,
    pub n_workers: usize,
    /// Adjacency by job position.
    pub adjacency: Vec<Vec<usize>>,
}

impl FeasibilityGraph {
    pub fn build(
        jobs: &[Job],
        workers: &[Worker],
        f: &ThresholdFunction,
        alpha: f64,
    ) -> Result<Self> {
        let mut adjacency = Vec::with_capacity(jobs.len());
        for job in jobs {
            let mut row = Vec::new();
            for (j, worker) in workers.iter().enumerate() {
                if f.eval(job, worker)? >= alpha {
                    row.push(j);
                }
            }
            adjacency.push(row);
        }
        Ok(FeasibilityGraph {
            n_jobs: jobs.len(),
            n_workers: workers.len(),
            adjacency,
        })
    }

    pub fn from_edges(n_jobs: usize, n_workers: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n_jobs];
        for &(i, j) in edges {
            if i >= n_jobs || j >= n_workers {
                return Err(Error::InvalidInstance(format!(
                    "edge ({i}, {j}) outside a {n_jobs} x {n_workers} graph"
                )));
            }
            if !adjacency[i].contains(&j) {
                adjacency[i].push(j);
            }
        }
        Ok(FeasibilityGraph {
            n_jobs,
            n_workers,
            adjacency,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }
}

/// Maximum indicator-sum reward over every partial one-to-one assignment,
/// by direct enumeration. Limited to [`EXHAUSTIVE_LIMIT`] jobs and workers.
pub fn offline_optimum_exhaustive(
    jobs: &[Job],
    workers: &[Worker],
    f: &ThresholdFunction,
    alpha: f64,
) -> Result<usize> {
    if jobs.len() > EXHAUSTIVE_LIMIT || workers.len() > EXHAUSTIVE_LIMIT {
        return Err(Error::TooLarge {
            jobs: jobs.len(),
            workers: workers.len(),
            limit: EXHAUSTIVE_LIMIT,
        });
    }
    let mut values = Vec::with_capacity(jobs.len());
    for job in jobs {
        values.push(
            workers
                .iter()
                .map(|w| f.eval(job, w))
                .collect::<Result<Vec<_>>>()?,
        );
    }

    fn best(values: &[Vec<f64>], alpha: f64, job: usize, used: &mut [bool]) -> usize {
        if job == values.len() {
            return 0;
        }
        // Leave the job unassigned.
        let mut top = best(values, alpha, job + 1, used);
        for worker in 0..used.len() {
            if used[worker] {
                continue;
            }
            used[worker] = true;
            let hit = usize::from(values[job][worker] >= alpha);
            top = top.max(hit + best(values, alpha, job + 1, used));
            used[worker] = false;
        }
        top
    }

    Ok(best(&values, alpha, 0, &mut vec![false; workers.len()]))
}

/// Maximum-cardinality matching size by repeated augmenting-path search.
pub fn offline_optimum_matching(graph: &FeasibilityGraph) -> usize {
    let mut owner: Vec<Option<usize>> = vec![None; graph.n_workers];
    let mut visited = vec![0usize; graph.n_workers];
    let mut size = 0;

    fn augment(
        graph: &FeasibilityGraph,
        job: usize,
        stamp: usize,
        visited: &mut [usize],
        owner: &mut [Option<usize>],
    ) -> bool {
        for &worker in &graph.adjacency[job] {
            if visited[worker] == stamp {
                continue;
            }
            visited[worker] = stamp;
            let free = match owner[worker] {
                None => true,
                Some(other) => augment(graph, other, stamp, visited, owner),
            };
            if free {
                owner[worker] = Some(job);
                return true;
            }
        }
        false
    }

    for job in 0..graph.n_jobs {
        if augment(graph, job, job + 1, &mut visited, &mut owner) {
            size += 1;
        }
    }
    size
}

/// Convenience: build the feasibility graph and match it.
pub fn offline_optimum(
    jobs: &[Job],
    workers: &[Worker],
    f: &ThresholdFunction,
    alpha: f64,
) -> Result<usize> {
    Ok(offline_optimum_matching(&FeasibilityGraph::build(
        jobs, workers, f, alpha,
    )?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::function::{Domain, Table};
    use crate::model::workers_from_rates;
    use proptest::prelude::*;

    fn counterexample() -> (Vec<Job>, Vec<Worker>, ThresholdFunction) {
        let table = Table::from_rows(&[&[0.5, 0.4, 0.7], &[0.08, 0.1, 0.03], &[0.5, 0.4, 0.1]]);
        (
            (1..=3).map(|i| Job::new(i, 0.0)).collect(),
            workers_from_rates(&[0.3, 0.5, 0.7]),
            ThresholdFunction::tabulated(table, Domain::unit()),
        )
    }

    #[test]
    fn counterexample_optimum_is_three() {
        let (jobs, workers, f) = counterexample();
        assert_eq!(
            offline_optimum_exhaustive(&jobs, &workers, &f, 0.1).unwrap(),
            3
        );
        let graph = FeasibilityGraph::build(&jobs, &workers, &f, 0.1).unwrap();
        assert_eq!(offline_optimum_matching(&graph), 3);
    }

    #[test]
    fn first_example_optimum_is_three() {
        let jobs: Vec<Job> = [0.0975, 0.275, 0.9575, 0.4854]
            .iter()
            .enumerate()
            .map(|(i, &x)| Job::new(i + 1, x))
            .collect();
        let workers = workers_from_rates(&[0.4, 0.5, 0.6, 0.7]);
        let f = ThresholdFunction::product(Domain::unit());
        assert_eq!(
            offline_optimum_exhaustive(&jobs, &workers, &f, 0.15).unwrap(),
            3
        );
    }

    #[test]
    fn trivial_graphs() {
        let f = ThresholdFunction::product(Domain::unit());
        assert_eq!(
            offline_optimum_exhaustive(&[], &workers_from_rates(&[0.5]), &f, 0.1).unwrap(),
            0
        );
        let n = 6;
        let edges: Vec<_> = (0..n).flat_map(|i| (0..n).map(move |j| (i, j))).collect();
        let complete = FeasibilityGraph::from_edges(n, n, &edges).unwrap();
        assert_eq!(offline_optimum_matching(&complete), n);
        let empty = FeasibilityGraph::from_edges(n, n, &[]).unwrap();
        assert_eq!(offline_optimum_matching(&empty), 0);
        assert!(FeasibilityGraph::from_edges(2, 2, &[(2, 0)]).is_err());
    }

    #[test]
    fn guard_rejects_large_inputs() {
        let f = ThresholdFunction::product(Domain::unit());
        let jobs: Vec<Job> = (1..=9).map(|i| Job::new(i, 0.5)).collect();
        assert!(matches!(
            offline_optimum_exhaustive(&jobs, &workers_from_rates(&[0.5]), &f, 0.1),
            Err(Error::TooLarge { .. })
        ));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]
        #[test]
        fn matching_agrees_with_enumeration(
            n_jobs in 0usize..=EXHAUSTIVE_LIMIT,
            n_workers in 0usize..=EXHAUSTIVE_LIMIT,
            cells in prop::collection::vec(0u8..10, EXHAUSTIVE_LIMIT * EXHAUSTIVE_LIMIT),
            alpha in 0u8..10,
        ) {
            // Arbitrary tables, order-preserving or not.
            let mut table = Table::default();
            for i in 0..n_jobs {
                for j in 0..n_workers {
                    table.insert(
                        crate::model::JobId(i + 1),
                        crate::model::WorkerId(j + 1),
                        f64::from(cells[i * EXHAUSTIVE_LIMIT + j]),
                    );
                }
            }
            let f = ThresholdFunction::tabulated(table, Domain::unit());
            let jobs: Vec<Job> = (1..=n_jobs).map(|i| Job::new(i, 0.0)).collect();
            let workers = workers_from_rates(&vec![0.5; n_workers]);
            let alpha = f64::from(alpha);
            let graph = FeasibilityGraph::build(&jobs, &workers, &f, alpha).unwrap();
            prop_assert_eq!(
                offline_optimum_matching(&graph),
                offline_optimum_exhaustive(&jobs, &workers, &f, alpha).unwrap()
            );
        }
    }
}
