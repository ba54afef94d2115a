import json

import networkx as nx
import numpy as np
import pytest

from core.errors import InstanceFormatError, ValidationError
from core.instances import (GenParams, generate, grid_shape, instance_from_dict, instance_to_dict,
                            load_fixture, read_instance, write_instance)


def test_fixture_budget_and_demand(prop2):
    assert prop2.budget == 63
    assert prop2.alpha == pytest.approx(63 / 92)
    assert prop2.total_demand == 513
    assert load_fixture("prop2").key == prop2.key


def test_unknown_fixture():
    with pytest.raises(ValidationError, match="unknown fixture"):
        load_fixture("nope")


def test_generation_is_deterministic():
    a = generate(GenParams(8, alpha=0.4, seed=3))
    b = generate(GenParams(8, alpha=0.4, seed=3))
    assert instance_to_dict(a) == instance_to_dict(b)
    assert a.key == b.key
    c = generate(GenParams(8, alpha=0.4, seed=4))
    assert c.key != a.key


@pytest.mark.parametrize("seed", [0, 1, 2])
def test_generated_instance_protocol(seed):
    params = GenParams(9, alpha=0.25, seed=seed)
    instance = generate(params)
    net = instance.network
    points = np.array(instance.metadata["coordinates"])

    assert len(instance.pairs) == 9 * 8
    for pair in instance.pairs:
        euclid = np.linalg.norm(points[pair.origin] - points[pair.dest])
        assert pair.utility == pytest.approx(2 * euclid)
        assert 10 <= pair.demand <= 300
    for e in net.edges:
        assert e.cost == e.length
        assert e.cost >= 1 and float(e.cost).is_integer()
    assert all(7 <= b <= 13 and float(b).is_integer() for b in net.node_cost)

    graph = nx.Graph([(e.u, e.v) for e in net.edges])
    assert net.n_edges <= 3 * net.n_nodes - 6
    assert nx.check_planarity(graph)[0]
    assert nx.is_connected(graph)


def test_points_sit_in_their_cells():
    params = GenParams(6, seed=5)
    instance = generate(params)
    _, cols = grid_shape(6)
    side = params.cell_side
    for k, (x, y) in enumerate(instance.metadata["coordinates"]):
        r, c = divmod(k, cols)
        assert abs(x - (c + 0.5) * side) <= side / 4
        assert abs(y - (r + 0.5) * side) <= side / 4


def test_grid_shape():
    assert grid_shape(40) == (6, 7)
    assert grid_shape(9) == (3, 3)
    assert grid_shape(2) == (1, 2)


def test_invalid_generator_params():
    with pytest.raises(ValidationError):
        generate(GenParams(1))
    with pytest.raises(ValidationError):
        generate(GenParams(6, deletion_prob=1.0))


def test_round_trip(prop2, tmp_path):
    path = write_instance(prop2, tmp_path / "prop2.json")
    again = read_instance(path)
    assert instance_to_dict(again) == instance_to_dict(prop2)
    assert again.budget == 63
    assert again.key == prop2.key


def test_missing_alpha_names_the_field(prop2, tmp_path):
    doc = instance_to_dict(prop2)
    del doc["alpha"]
    path = tmp_path / "bad.json"
    path.write_text(json.dumps(doc), encoding="utf-8")
    with pytest.raises(InstanceFormatError) as err:
        read_instance(path)
    assert err.value.field == "alpha"


def test_zero_demand_rejected(prop2):
    doc = instance_to_dict(prop2)
    doc["pairs"][0]["demand"] = 0
    with pytest.raises(ValidationError, match="demand"):
        instance_from_dict(doc)


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "format": \n', encoding="utf-8")
    with pytest.raises(InstanceFormatError) as err:
        read_instance(path)
    assert err.value.line is not None


@pytest.mark.parametrize("section, key, value, field", [
    ("nodes", "cost", "cheap", "nodes[0].cost"),
    ("nodes", "id", "one", "nodes[0].id"),
    ("edges", "length", [3], "edges[0].length"),
    ("pairs", "demand", None, "pairs[0].demand"),
    ("pairs", "origin", True, "pairs[0].origin"),
])
def test_non_numeric_field_is_named(prop2, section, key, value, field):
    doc = instance_to_dict(prop2)
    doc[section][0][key] = value
    with pytest.raises(InstanceFormatError) as err:
        instance_from_dict(doc)
    assert err.value.field == field


def test_malformed_sections(prop2):
    doc = instance_to_dict(prop2)
    doc["budget"] = "lots"
    with pytest.raises(InstanceFormatError) as err:
        instance_from_dict(doc)
    assert err.value.field == "budget"

    doc = instance_to_dict(prop2)
    doc["nodes"] = {"1": 8}
    with pytest.raises(InstanceFormatError) as err:
        instance_from_dict(doc)
    assert err.value.field == "nodes"

    doc = instance_to_dict(prop2)
    doc["edges"][0] = [1, 2, 12]
    with pytest.raises(InstanceFormatError) as err:
        instance_from_dict(doc)
    assert err.value.field == "edges[0]"
