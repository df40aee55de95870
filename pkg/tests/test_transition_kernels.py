import numpy as np
import pytest

from errors import ConfigurationError, NumericalError
from growth_model import GraphSnapshot, GrowthSchedule, grow
from transition_kernels import (kernel_csv_rows, kernel_for, lazy_metropolis_kernel, lazy_simple_kernel,
                                path_chain_kernel, resolve_walk, round_kernels, uniform_complete_kernel,
                                verify_kernel)


def test_uniform_complete_kernel():
    k = uniform_complete_kernel(4)
    assert np.allclose(k.entries, 0.25)
    assert not k.lazy
    assert verify_kernel(k)


def test_lazy_simple_on_path3():
    k = lazy_simple_kernel(grow("path", 3))
    assert np.allclose(k.stationary, [0.25, 0.5, 0.25])
    assert k.entries[1, 0] == pytest.approx(0.25)
    assert k.entries[0, 1] == pytest.approx(0.5)
    assert k.lazy and k.reversible and not k.symmetric
    assert verify_kernel(k)


def test_lazy_simple_on_regular_graph_is_symmetric():
    k = lazy_simple_kernel(grow("complete", 5))
    assert k.symmetric
    assert np.allclose(k.stationary, 0.2)


def test_metropolis_star():
    star = GraphSnapshot(4, frozenset({(1, 2), (1, 3), (1, 4)}), "custom")
    k = lazy_metropolis_kernel(star)
    assert k.entries[1, 0] == pytest.approx(1 / 6)
    assert k.entries[1, 1] == pytest.approx(5 / 6)
    assert k.entries[0, 0] == pytest.approx(0.5)
    assert np.allclose(k.stationary, 0.25)
    assert verify_kernel(k)


def test_metropolis_path_matches_chain():
    metro = lazy_metropolis_kernel(grow("path", 5))
    chain = path_chain_kernel(5, 0.75, 0.25)
    assert metro.entries[0, 0] == pytest.approx(0.75)
    assert np.allclose(metro.entries, chain.entries)
    assert np.allclose(metro.stationary, chain.stationary)


def test_path_chain_defaults_equal_lazy_simple():
    chain = path_chain_kernel(6)
    simple = lazy_simple_kernel(grow("path", 6))
    assert chain.simple
    assert np.allclose(chain.entries, simple.entries)
    assert np.allclose(chain.stationary, simple.stationary)


def test_path_chain_stationary_weights():
    k = path_chain_kernel(4, 0.6, 0.2)
    w = np.array([0.5, 1.0, 1.0, 0.5])
    assert np.allclose(k.stationary, w / w.sum())
    assert verify_kernel(k)


@pytest.mark.parametrize("p,q", [(0.2, 0.3), (0.9, 0.6), (1.0, 0.25), (0.5, 0.0)])
def test_path_chain_rejects_bad_parameters(p, q):
    with pytest.raises(ConfigurationError):
        path_chain_kernel(5, p, q)


def test_single_vertex_kernels():
    for walk in ("uniform_complete", "lazy_simple", "lazy_metropolis", "path_chain"):
        family = {"uniform_complete": "complete", "path_chain": "path"}.get(walk, "path")
        k = kernel_for(walk, grow(family, 1))
        assert k.entries.shape == (1, 1)
        assert k.entries[0, 0] == 1.0


def test_resolve_walk_aliases():
    assert resolve_walk("simple") == "lazy_simple"
    assert resolve_walk("metropolis") == "lazy_metropolis"
    assert resolve_walk("uniform") == "uniform_complete"
    with pytest.raises(ConfigurationError):
        resolve_walk("levy")


def test_round_kernels_orders_follow_schedule():
    schedule = GrowthSchedule(kind="linear", horizon=4, C=1.0, initial_order=3)
    orders = [k.order for _, _, k in round_kernels(schedule, "complete", "uniform", 4)]
    assert orders == [4, 5, 6, 7]


def test_round_kernels_reject_family_mismatch():
    schedule = GrowthSchedule(kind="linear", horizon=3)
    with pytest.raises(ConfigurationError):
        list(round_kernels(schedule, "path", "uniform_complete"))
    with pytest.raises(ConfigurationError):
        list(round_kernels(schedule, "complete", "path_chain"))


def test_verify_kernel_catches_bad_flags():
    k = uniform_complete_kernel(3)
    broken = type(k)(order=3, entries=k.entries, stationary=k.stationary, walk_tag="broken",
                     lazy=True, reversible=True, symmetric=True, simple=False)
    with pytest.raises(NumericalError):
        verify_kernel(broken)


def test_kernel_csv_rows():
    header, rows = kernel_csv_rows(path_chain_kernel(3))
    assert header == ["u", "v1", "v2", "v3"]
    assert rows[0][0] == 1
    assert float(rows[1][1]) == pytest.approx(0.25)
