from __future__ import annotations

import json

import pytest

from swingbench.exceptions import DisconnectedGraph, ParseError, ValidationError
from swingbench.network import NetworkSpec, laplacian_spectrum
from swingbench.schema import emit_network, parse_network, parse_preset_string
from swingbench.system import OutputKind, assemble


def write_json(path, payload) -> str:
    path.write_text(json.dumps(payload), encoding="utf-8")
    return str(path)


def test_preset_mapping_builds_complete_graph():
    spec = parse_network({"preset": {"kind": "complete", "n": 3, "weight": 1.0}, "inertia": 1, "damping": 1})
    assert spec.n == 3
    assert len(spec.edges) == 3
    assert {edge.b for edge in spec.edges} == {1.0}


def test_explicit_edges_file(tmp_path):
    path = write_json(
        tmp_path / "k3.json",
        {
            "n": 3,
            "edges": [{"i": 0, "j": 1, "b": 1.0}, {"i": 0, "j": 2, "b": 1.0}, {"i": 1, "j": 2, "b": 1.0}],
            "inertia": 2.0,
            "damping": 0.5,
            "kappa": 3.0,
        },
    )
    spec = parse_network(path)
    assert (spec.n, spec.inertia, spec.damping, spec.kappa) == (3, 2.0, 0.5, 3.0)


def test_keyword_overrides_win(tmp_path):
    path = write_json(tmp_path / "net.json", {"n": 2, "edges": [{"i": 0, "j": 1, "b": 1.0}], "inertia": 2.0})
    spec = parse_network(path, inertia=5.0, defaults={"damping": 0.25})
    assert spec.inertia == 5.0
    assert spec.damping == 0.25


def test_zero_susceptance_names_the_edge(tmp_path):
    path = write_json(
        tmp_path / "bad.json",
        {"n": 3, "edges": [{"i": 0, "j": 1, "b": 1.0}, {"i": 1, "j": 2, "b": 0.0}], "inertia": 1, "damping": 1},
    )
    with pytest.raises(ValidationError, match=r"Edge #1 \(1, 2\)"):
        parse_network(path)


def test_two_components_report_lambda2(tmp_path):
    path = write_json(
        tmp_path / "split.json",
        {"n": 4, "edges": [{"i": 0, "j": 1, "b": 1.0}, {"i": 2, "j": 3, "b": 1.0}], "inertia": 1, "damping": 1},
    )
    with pytest.raises(DisconnectedGraph, match="lambda2 estimate"):
        parse_network(path)


def test_malformed_json_reports_line(tmp_path):
    path = tmp_path / "broken.json"
    path.write_text('{\n  "n": 3,\n  "edges": [\n', encoding="utf-8")
    with pytest.raises(ParseError) as excinfo:
        parse_network(str(path))
    assert excinfo.value.line is not None
    assert "line" in str(excinfo.value)


def test_schema_errors_report_field(tmp_path):
    path = write_json(tmp_path / "missing.json", {"n": 2, "edges": [{"i": 0, "j": 1}], "inertia": 1, "damping": 1})
    with pytest.raises(ParseError) as excinfo:
        parse_network(path)
    assert excinfo.value.field == "edges.0.b"


def test_topology_must_be_given_once():
    with pytest.raises(ParseError):
        parse_network({"inertia": 1.0, "damping": 1.0})
    with pytest.raises(ParseError):
        parse_network({"n": 2, "edges": [], "preset": {"kind": "path", "n": 2}})


def test_missing_file():
    with pytest.raises(ParseError, match="not found"):
        parse_network("/nonexistent/net.json")


def test_preset_string_with_weight_range():
    preset = parse_preset_string("erdos-renyi:20,p=0.3,seed=7,weight=0.1..10")
    assert preset.kind == "erdos-renyi"
    assert preset.n == 20
    assert preset.p == 0.3
    assert preset.weight == (0.1, 10.0, 7)

    spec = parse_network("erdos-renyi:20,p=0.3,seed=7,weight=0.1..10", inertia=1.0, damping=1.0)
    assert spec.n == 20
    assert all(0.1 <= edge.b <= 10.0 for edge in spec.edges)


@pytest.mark.parametrize("text", ["hexagon:3", "complete:three", "path:4,colour=red", "from-file:"])
def test_bad_preset_strings(text):
    with pytest.raises(ParseError):
        parse_preset_string(text)


def test_from_file_preset_uses_file_weights(tmp_path):
    topo = write_json(tmp_path / "topo.json", {"n": 3, "edges": [{"i": 0, "j": 1, "b": 2.0}, {"i": 1, "j": 2, "b": 4.0}]})
    spec = parse_network(f"from-file:{topo}", inertia=1.0, damping=1.0)
    assert sorted(edge.b for edge in spec.edges) == [2.0, 4.0]


def test_emit_then_parse_keeps_hash(tmp_path):
    spec = parse_network("erdos-renyi:12,p=0.4,seed=3,weight=0.1..10", inertia=0.7, damping=1.3)
    path = tmp_path / "emitted.json"
    text = emit_network(spec, path)
    assert path.read_text(encoding="utf-8") == text

    again = parse_network(str(path))
    assert again == spec
    assert again.spec_hash() == spec.spec_hash()


def test_bus_tie_round_trips():
    spec = parse_network(
        {"n": 2, "edges": [{"i": 0, "j": 1, "b": 1.0}], "inertia": 1, "damping": 1, "bus_susceptance": 0.5}
    )
    assert isinstance(spec, NetworkSpec)
    assert not spec.has_zero_mode
    assert parse_network(json.loads(emit_network(spec))).spec_hash() == spec.spec_hash()


def test_connectivity_tolerance_stays_with_the_spec():
    payload = {
        "n": 3,
        "edges": [{"i": 0, "j": 1, "b": 1.0}, {"i": 1, "j": 2, "b": 1e-12}],
        "inertia": 1.0,
        "damping": 1.0,
    }
    with pytest.raises(DisconnectedGraph):
        parse_network(payload)

    spec = parse_network(payload, connectivity_rtol=1e-14)
    assert spec.connectivity_rtol == 1e-14
    assert spec.with_parameters(inertia=2.0).connectivity_rtol == 1e-14
    assert laplacian_spectrum(spec).algebraic_connectivity > 0.0
    assert assemble(spec, OutputKind.PHASE).A.shape == (6, 6)
    assert spec == NetworkSpec.from_dict(spec.to_dict())
