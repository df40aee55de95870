import pytest

from errors import ConfigurationError, RangeError, StructuralError
from growth_model import (GraphSnapshot, GrowthSchedule, boundaries, ceil_steps, degree_profile,
                          edge_growth_constant, grow, growing_sequence, load_edge_list,
                          load_schedule_table, parse_schedule, round_boundaries, validate_growth)


def test_ceil_steps_never_below_one():
    assert ceil_steps(0.2) == 1
    assert ceil_steps(3.0) == 3
    assert ceil_steps(3.0000000000001) == 3
    assert ceil_steps(3.2) == 4


def test_linear_schedule_boundaries():
    schedule = GrowthSchedule(kind="linear", horizon=5, C=1.0)
    assert list(schedule.durations()) == [1, 2, 3, 4, 5]
    assert round_boundaries(schedule, 1) == 0
    assert round_boundaries(schedule, 4) == 6
    assert schedule.total_steps() == 15
    assert list(boundaries(schedule)) == [0, 1, 3, 6, 10, 15]


def test_odd_durations_boundary():
    schedule = GrowthSchedule.from_durations([2 * i - 1 for i in range(1, 6)])
    assert round_boundaries(schedule, 5) == 16


def test_round_beyond_horizon_raises():
    schedule = GrowthSchedule(kind="constant", horizon=3, C=2)
    with pytest.raises(RangeError):
        schedule.duration(4)
    with pytest.raises(RangeError):
        round_boundaries(schedule, 5)


def test_power_schedule_from_gamma():
    schedule = parse_schedule("power:C=1,gamma=0.5", 16, family="path")
    assert schedule.exponent == pytest.approx(1.5)
    assert schedule.duration(4) == 8
    assert schedule.duration(16) == 64


def test_power_schedule_explicit_exponent():
    schedule = parse_schedule("power:C=2,exp=1", 4, family="lollipop")
    assert list(schedule.durations()) == [2, 4, 6, 8]


@pytest.mark.parametrize("text", ["", "linear", "linear:C", "power:C=1", "spiral:C=1",
                                  "constant:C=abc"])
def test_malformed_schedule(text):
    with pytest.raises(ConfigurationError):
        parse_schedule(text, 5)


def test_initial_order_shifts_rounds():
    schedule = parse_schedule("linear:C=1", 4, initial_order=3)
    assert schedule.order_at(1) == 4
    assert schedule.order_at(4) == 7
    assert parse_schedule("linear:C=1", 4).order_at(4) == 4


def test_schedule_table(tmp_path):
    path = tmp_path / "f.tsv"
    path.write_text("# rounds\n1\t3\n2\t1\n3\t4\n")
    assert load_schedule_table(str(path)) == (3, 1, 4)
    schedule = parse_schedule(f"table:{path}", 3)
    assert list(schedule.durations()) == [3, 1, 4]
    with pytest.raises(ConfigurationError):
        parse_schedule(f"table:{path}", 4)


def test_schedule_table_out_of_sequence(tmp_path):
    path = tmp_path / "f.tsv"
    path.write_text("1\t3\n3\t1\n")
    with pytest.raises(ConfigurationError):
        load_schedule_table(str(path))


def test_complete_growth():
    g = grow("complete", 5)
    assert g.order == 5
    assert len(g.edges) == 10
    assert list(g.degrees()) == [4] * 5


def test_path_growth():
    g = grow("path", 4)
    assert g.edge_list() == [(1, 2), (2, 3), (3, 4)]


def test_lollipop_growth():
    g = grow("lollipop", 4)
    assert len(g.edges) == 3
    assert g.is_connected()
    odd = grow("lollipop", 7)
    # odd labels form a clique
    assert {(1, 3), (1, 5), (3, 5), (1, 7), (3, 7), (5, 7)} <= odd.edges


def test_expander_growth_is_seeded():
    a = grow("expander_like", 30, degree=3, graph_seed=4)
    b = grow("expander_like", 30, degree=3, graph_seed=4)
    assert a.edges == b.edges
    assert a.is_connected()
    d_ave, d_min, d_max = degree_profile(a)
    assert d_min >= 3
    assert d_ave == pytest.approx(2 * len(a.edges) / 30)


@pytest.mark.parametrize("family", ["complete", "path", "lollipop", "expander_like"])
def test_every_family_grows_validly(family):
    snapshots = list(growing_sequence(family, 12))
    assert [g.order for g in snapshots] == list(range(1, 13))
    for prev, nxt in zip(snapshots, snapshots[1:]):
        validate_growth(prev, nxt)


def test_start_skips_early_snapshots():
    orders = [g.order for g in growing_sequence("path", 6, start=4)]
    assert orders == [4, 5, 6]


def test_custom_family(edge_file):
    path = edge_file([(1, 2), (2, 3), (1, 4)])
    edges = load_edge_list(path)
    g = grow("custom", 4, edges=edges)
    assert g.edge_list() == [(1, 2), (1, 4), (2, 3)]


def test_custom_family_needs_backward_edge():
    with pytest.raises(StructuralError):
        grow("custom", 3, edges=[(1, 2)])


def test_unknown_family():
    with pytest.raises(ConfigurationError):
        grow("hypercube", 3)


def test_validate_growth_rejects_dropped_edges():
    prev = GraphSnapshot(3, frozenset({(1, 2), (2, 3)}), "custom")
    nxt = GraphSnapshot(4, frozenset({(1, 2), (3, 4)}), "custom")
    with pytest.raises(StructuralError):
        validate_growth(prev, nxt)


def test_edge_growth_constant():
    # |E(i)| = i - 1 on a path: i * (1/(i-2)) peaks at i = 3
    assert edge_growth_constant(growing_sequence("path", 10)) == pytest.approx(3.0)
    assert edge_growth_constant(growing_sequence("complete", 10)) == pytest.approx(6.0)
