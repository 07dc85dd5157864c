import numpy as np
import pytest
from latopt.compiler.hierarchy import build_hierarchy
from latopt.compiler.matching import edge_transforms
from latopt.compiler.parameterization import (
    edge_labels,
    gauss_seidel_sweep,
    greedy_coloring,
    optimize_parameterization,
    parameterization_energy,
    random_origins,
)
from tests.compiler.helpers import grid_graph


def test_perfect_grid_has_zero_energy():
    graph = grid_graph(4, 3)
    graph.origins = graph.x.copy()
    assert parameterization_energy(graph) == 0
    t = edge_labels(graph)
    assert np.all(np.abs(t).sum(axis=1) == 1)


def test_energy_counts_both_sides():
    graph = grid_graph(2, 1)
    graph.origins = np.array([[0.0, 0.0], [1.2, 0.1]])
    # residual p0 - p1 - M t = (-0.2, -0.1) with t = (-1, 0)
    assert parameterization_energy(graph) == pytest.approx(2 * (0.04 + 0.01))


def test_coloring_is_proper():
    graph = grid_graph(5, 4, diagonals=True)
    colors = greedy_coloring(graph)
    assert np.all(colors[graph.edges[:, 0]] != colors[graph.edges[:, 1]])
    assert colors.max() <= 3


def test_frozen_label_sweeps_never_increase_energy():
    graph = grid_graph(5, 5)
    rng = np.random.default_rng(4)
    graph.origins = graph.x + rng.uniform(-0.3, 0.3, graph.x.shape)
    M, _ = edge_transforms(graph)
    t = edge_labels(graph, M)
    colors = greedy_coloring(graph)
    energies = [parameterization_energy(graph, M, t)]
    for _ in range(10):
        gauss_seidel_sweep(graph, M, colors, frozen_labels=t, anchor=False)
        energies.append(parameterization_energy(graph, M, t))
    assert np.all(np.diff(energies) <= 1e-12)
    assert energies[-1] < energies[0]


def test_constant_field_reaches_zero_energy():
    theta = 0.3
    frame = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]])
    graph = grid_graph(6, 6, spacing=0.5, h=1.0, frame=frame)
    result = optimize_parameterization(graph, iterations=20, seed=3)
    assert graph.origins is None
    assert parameterization_energy(result) < 1e-18


def test_random_origins_stay_in_the_local_cell():
    graph = grid_graph(4, 4, h=2.0)
    p = random_origins(graph, np.random.default_rng(0))
    assert np.all(np.abs(p - graph.x) <= 1.0)


def test_seed_determinism():
    graph = grid_graph(5, 4, spacing=0.7)
    a = optimize_parameterization(graph, iterations=5, seed=11)
    b = optimize_parameterization(graph, iterations=5, seed=11)
    c = optimize_parameterization(graph, iterations=5, seed=12)
    assert np.array_equal(a.origins, b.origins)
    assert not np.array_equal(a.origins, c.origins)


def test_given_hierarchy_is_left_untouched():
    graph = grid_graph(6, 6, spacing=0.5)
    hierarchy = build_hierarchy(graph)
    assert hierarchy.depth > 1
    result = optimize_parameterization(graph, iterations=5, seed=1, hierarchy=hierarchy)
    assert all(level.origins is None for level in hierarchy.levels)
    assert hierarchy.levels[0] is graph

    rebuilt = optimize_parameterization(graph, iterations=5, seed=1)
    assert np.array_equal(result.origins, rebuilt.origins)
