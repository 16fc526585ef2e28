import numpy as np

from thermo_formalism.errors import DescriptorError
from thermo_formalism.io import (
    load_document,
    load_job_config,
    parse_job_config,
    system_from_descriptor,
    system_to_descriptor,
)
from thermo_formalism.models import MarkovShiftSystem, TransferMatrix, WeightedShift


def _config(**overrides):
    data = {
        "command": "eval-lambda",
        "system": {"kind": "finite_map", "map": [1, 0], "psi": [1.0, 2.0]},
        "parameters": {"phi": [0.0, 0.0]},
    }
    data.update(overrides)
    return data


def _expect_descriptor_error(data, needle=None):
    try:
        parse_job_config(data)
        assert False, "DescriptorError expected"
    except DescriptorError as exc:
        if needle:
            assert needle in str(exc)


def test_load_document_by_suffix(tmp_path):
    toml_path = tmp_path / "job.toml"
    toml_path.write_text('command = "pressure"\n[system]\nkind = "markov_shift"\nadjacency = [[1]]\n', encoding="utf-8")
    json_path = tmp_path / "job.json"
    json_path.write_text('{"command": "pressure", "system": {"kind": "markov_shift", "adjacency": [[1]]}}', encoding="utf-8")
    yaml_path = tmp_path / "job.yaml"
    yaml_path.write_text("command: pressure\nsystem:\n  kind: markov_shift\n  adjacency: [[1]]\n", encoding="utf-8")

    documents = [load_document(path) for path in (toml_path, json_path, yaml_path)]
    assert documents[0] == documents[1] == documents[2]
    assert load_job_config(yaml_path).command == "pressure"


def test_load_document_rejects_unknown_suffix(tmp_path):
    path = tmp_path / "job.ini"
    path.write_text("command=pressure", encoding="utf-8")
    try:
        load_document(path)
        assert False, "DescriptorError expected"
    except DescriptorError as exc:
        assert ".ini" in str(exc)


def test_parse_job_config_defaults():
    config = parse_job_config(_config())
    assert config.command == "eval-lambda"
    assert config.seed is None
    assert config.output_format == "json"
    assert config.output_path is None
    assert config.timing is False


def test_unknown_keys_are_rejected():
    _expect_descriptor_error(_config(extra=1), "extra")
    _expect_descriptor_error(_config(parameters={"phi": [0.0, 0.0], "gamma": 2}), "gamma")
    _expect_descriptor_error(_config(output={"format": "json", "colour": "red"}), "colour")


def test_command_and_kind_must_match():
    _expect_descriptor_error(_config(command="pressure", parameters={}), "markov_shift")
    _expect_descriptor_error(_config(command="integrate"), "command")


def test_seed_validation():
    shift = {"kind": "markov_shift", "adjacency": [[1, 1], [1, 1]]}
    _expect_descriptor_error({"command": "ruelle-walters", "system": shift}, "seed")
    assert parse_job_config({"command": "ruelle-walters", "system": shift, "seed": 0}).seed == 0
    assert parse_job_config({"command": "ruelle-walters", "system": shift, "seed": 2**64 - 1}).seed == 2**64 - 1
    _expect_descriptor_error({"command": "ruelle-walters", "system": shift, "seed": -1}, "seed")
    _expect_descriptor_error({"command": "ruelle-walters", "system": shift, "seed": 2**64}, "seed")
    _expect_descriptor_error({"command": "ruelle-walters", "system": shift, "seed": True}, "seed")


def test_output_section_validation():
    _expect_descriptor_error(_config(output={"format": "parquet"}), "output.format")
    _expect_descriptor_error(_config(output={"timing": "yes"}), "output.timing")
    config = parse_job_config(_config(output={"format": "csv", "path": "out.csv", "timing": True}))
    assert (config.output_format, config.output_path, config.timing) == ("csv", "out.csv", True)


def test_negative_p_names_the_field():
    descriptor = {"kind": "measure_system", "m": [0.5, 0.5], "beta": [1, 0], "psi": [1.0, 1.0], "p": -1.0}
    try:
        system_from_descriptor(descriptor)
        assert False, "DescriptorError expected"
    except DescriptorError as exc:
        assert "system.p" in str(exc)


def test_system_from_descriptor_rejects_bad_fields():
    bad = [
        {"kind": "finite_map", "map": [0, 2]},
        {"kind": "finite_map", "map": [0.5, 1]},
        {"kind": "finite_map", "map": [1, 0], "psi": [1.0]},
        {"kind": "finite_map", "map": [1, 0], "psi": [1.0, -1.0]},
        {"kind": "markov_shift", "adjacency": [[1, 1]]},
        {"kind": "measure_system", "m": [0.5, 0.5], "beta": [1, 0], "psi": [1.0, 1.0]},
        {"kind": "torus"},
    ]
    for descriptor in bad:
        try:
            system_from_descriptor(descriptor)
            assert False, f"DescriptorError expected for {descriptor}"
        except DescriptorError:
            pass


def test_system_descriptor_round_trip():
    A = system_from_descriptor({"kind": "finite_map", "map": [1, 2, 0], "psi": [0.5, 2.0, 3.0]})
    assert isinstance(A, TransferMatrix)
    assert system_to_descriptor(A) == {"kind": "finite_map", "map": [1, 2, 0], "psi": [0.5, 2.0, 3.0]}

    shift = system_from_descriptor({"kind": "markov_shift", "adjacency": [[1, 1], [1, 0]]})
    assert isinstance(shift, MarkovShiftSystem)
    assert system_to_descriptor(shift) == {"kind": "markov_shift", "adjacency": [[1, 1], [1, 0]]}

    ws = system_from_descriptor(
        {"kind": "measure_system", "m": [0.2, 0.3, 0.5], "beta": [1, 0, 0], "psi": [2.0, 0.5, 1.5], "p": 2}
    )
    assert isinstance(ws, WeightedShift)
    descriptor = system_to_descriptor(ws)
    assert descriptor["p"] == 2.0
    np.testing.assert_allclose(descriptor["m"], [0.2, 0.3, 0.5])
    assert descriptor["beta"] == [1, 0, 0]
