"""Tests for clause matchings, covering counts and GF(2) surjectivity."""

import itertools

import numpy as np
import pytest
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import maximum_bipartite_matching

from src.core.exceptions import LimitExceededException, MatchingException
from src.core.instances import REFERENCE_DIMER_COVERINGS
from src.services.hypergraph_service import EnsembleParams, InteractionGraph, sample_graph
from src.services.matching_service import (
    Matching,
    adjacency_bits,
    count_clause_assignments,
    count_dimer_coverings,
    gf2_rank,
    gf2_surjective,
    is_clause_coverable,
    iter_dimer_coverings,
    max_clause_matching,
)
from tests.conftest import path_graph


def _cycle(n: int) -> InteractionGraph:
    return InteractionGraph(n, 2, [(i, (i + 1) % n) for i in range(n)])


def _scipy_matching_size(graph: InteractionGraph) -> int:
    if graph.n_clauses == 0:
        return 0
    rows = np.repeat(np.arange(graph.n_clauses), graph.k)
    incidence = csr_matrix(
        (np.ones(rows.size, dtype=np.int8), (rows, graph.clause_array.ravel())),
        shape=(graph.n_clauses, graph.n_qubits),
    )
    return int(np.sum(maximum_bipartite_matching(incidence, perm_type="column") >= 0))


def test_complete_four_is_coverable_nine_ways(complete_four):
    assert is_clause_coverable(complete_four)
    assert count_dimer_coverings(complete_four) == 9
    assert gf2_surjective(complete_four)
    matching = max_clause_matching(complete_four)
    matching.validate(complete_four)
    assert matching.is_dimer_covering(complete_four)


def test_overfull_graph_is_not_coverable():
    graph = InteractionGraph(5, 3, itertools.combinations(range(5), 3))
    assert graph.n_clauses == 10
    assert not is_clause_coverable(graph)
    assert count_dimer_coverings(graph) == 0
    assert not gf2_surjective(graph)
    assert max_clause_matching(graph).size == 5


def test_empty_and_single_clause_graphs():
    empty = InteractionGraph(3, 2)
    assert is_clause_coverable(empty)
    assert count_dimer_coverings(empty) == 1
    assert gf2_surjective(empty)
    single = InteractionGraph(6, 4, [(1, 2, 4, 5)])
    assert count_dimer_coverings(single) == 4
    assert [m.assignment for m in iter_dimer_coverings(single)] == [{0: 1}, {0: 2}, {0: 4}, {0: 5}]


def test_reference_instances(instance_a, instance_b, instance_c):
    for label, graph in (("a", instance_a), ("b", instance_b)):
        assert is_clause_coverable(graph)
        assert count_dimer_coverings(graph) == REFERENCE_DIMER_COVERINGS[label]
        assert max_clause_matching(graph).is_dimer_covering(graph)
    assert not is_clause_coverable(instance_c)
    assert count_dimer_coverings(instance_c) == 0
    assert max_clause_matching(instance_c).size < instance_c.n_clauses


def test_explicit_covering_of_second_instance(instance_b):
    cover = Matching({0: 1, 1: 0, 2: 5, 3: 9, 4: 6, 5: 7, 6: 8, 7: 3, 8: 4, 9: 2})
    cover.validate(instance_b)
    assert cover.size == instance_b.n_clauses


def test_ties_break_towards_lowest_qubit():
    graph = InteractionGraph(4, 3, [(0, 1, 2), (0, 1, 3)])
    assert max_clause_matching(graph).assignment == {0: 0, 1: 1}


@pytest.mark.parametrize(
    "assignment",
    [{0: 5}, {0: 0, 1: 0}, {7: 0}],
)
def test_invalid_matchings_rejected(complete_four, assignment):
    with pytest.raises(MatchingException):
        Matching(assignment).validate(complete_four)


def test_matching_to_dict_uses_string_keys():
    assert Matching({1: 3, 0: 2}).to_dict() == {"0": 2, "1": 3}


def test_iterated_coverings_are_valid_and_counted(instance_a, triangle):
    for graph in (instance_a, triangle):
        coverings = list(iter_dimer_coverings(graph))
        assert len(coverings) == count_dimer_coverings(graph)
        assert len({tuple(sorted(m.assignment.items())) for m in coverings}) == len(coverings)
        for m in coverings:
            m.validate(graph)
            assert m.is_dimer_covering(graph)


def test_assignment_counts():
    assert count_clause_assignments([[0, 1, 2]] * 3, 3) == 6
    assert count_clause_assignments([[0, 1, 2, 3]] * 4, 4) == 24
    assert count_clause_assignments([[0, 1], [1, 2], [0, 2]], 3) == 2
    assert count_clause_assignments([[0, 1]] * 3, 3) == 0


def test_enumeration_limit(override_settings, complete_four):
    override_settings(ENUMERATION_LIMIT=3)
    with pytest.raises(LimitExceededException):
        count_dimer_coverings(complete_four)
    with pytest.raises(LimitExceededException):
        list(iter_dimer_coverings(complete_four))


@pytest.mark.parametrize("seed", range(12))
def test_matching_algorithms_agree(seed):
    graph = sample_graph(EnsembleParams(n_qubits=60, k=3, clause_density=0.85 + 0.01 * seed, seed=seed))
    matching = max_clause_matching(graph)
    matching.validate(graph)
    assert matching.size == _scipy_matching_size(graph)
    assert is_clause_coverable(graph) == (matching.size == graph.n_clauses)


@pytest.mark.parametrize("seed", range(20))
def test_surjective_implies_coverable(seed):
    graph = sample_graph(EnsembleParams(n_qubits=40, k=3, clause_density=0.7 + 0.02 * seed, seed=seed))
    if gf2_surjective(graph):
        assert is_clause_coverable(graph)


def test_rank_across_word_boundary():
    path = path_graph(70)
    assert adjacency_bits(path).shape == (69, 2)
    assert gf2_rank(adjacency_bits(path), 70) == 69

    cycle = _cycle(70)
    # rows of a cycle sum to zero over GF(2)
    assert gf2_rank(adjacency_bits(cycle), 70) == 69
    assert is_clause_coverable(cycle)
    assert not gf2_surjective(cycle)
    assert count_dimer_coverings(_cycle(9)) == 2


def _deficiency_bound(graph: InteractionGraph) -> int:
    """Maximum matching size from the deficiency form of Hall's theorem."""
    worst = 0
    for r in range(1, graph.n_clauses + 1):
        for subset in itertools.combinations(graph.clauses, r):
            neighbours = set().union(*subset)
            worst = max(worst, r - len(neighbours))
    return graph.n_clauses - worst


def _brute_force_matching_size(graph: InteractionGraph) -> int:
    for r in range(graph.n_clauses, 0, -1):
        for subset in itertools.combinations(graph.clauses, r):
            if any(len(set(choice)) == r for choice in itertools.product(*subset)):
                return r
    return 0


@pytest.mark.parametrize("seed", range(40))
def test_matching_size_matches_exhaustive_search(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(3, 9))
    k = 2 if seed % 2 else 3
    potential = list(itertools.combinations(range(n), k))
    m = int(rng.integers(1, min(8, len(potential)) + 1))
    picks = rng.choice(len(potential), size=m, replace=False)
    graph = InteractionGraph(n, k, [potential[i] for i in picks])
    size = max_clause_matching(graph).size
    assert size == _brute_force_matching_size(graph)
    assert size == _deficiency_bound(graph)


def test_three_qubit_path_has_three_coverings():
    assert count_dimer_coverings(path_graph(3)) == 3
    assert count_clause_assignments(path_graph(3).clauses, 3) == 3


@pytest.mark.slow
def test_surjective_implies_coverable_at_scale():
    surjective = 0
    for seed in range(10_000):
        alpha = 0.3 + 0.7 * (seed % 50) / 49
        graph = sample_graph(EnsembleParams(n_qubits=12, k=3, clause_density=alpha, mode="fixed-count", seed=seed))
        if gf2_surjective(graph):
            surjective += 1
            assert is_clause_coverable(graph)
    assert surjective > 0
