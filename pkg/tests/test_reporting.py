import json
import os

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from finegrain import __version__
from finegrain.harness import GENERATOR_ID, StatEntry, TrialReport
from finegrain.reporting import (
    EmptyResultsError,
    dumps,
    parse_trial_reports,
    read_report,
    write_report,
    write_table,
)

reals = st.floats(allow_nan=False, allow_infinity=False, width=64)
names = st.text(alphabet=st.characters(min_codepoint=32, max_codepoint=0x2FF), max_size=12)

stat_entries = st.builds(StatEntry, names, reals, reals, reals, reals, st.booleans())

trial_reports = st.builds(
    TrialReport,
    seed=st.one_of(st.none(), st.integers(0, 2**63 - 1)),
    alpha=st.one_of(st.none(), reals),
    spec=st.dictionaries(st.sampled_from(["mode", "alpha", "bits"]), st.one_of(st.integers(0, 10**6), names), max_size=3),
    N=st.integers(1, 10**7),
    stats=st.lists(stat_entries, max_size=4).map(tuple),
    generator=st.just(GENERATOR_ID),
    runtime_ms=st.floats(0, 1e7),
    reason=st.one_of(st.none(), names),
)


def _report():
    stats = (StatEntry("R2[-1:1]", 2.0123456789012345, 2.0, 0.0123456789012345, 0.1, True),)
    return TrialReport(3, 2.718281828459045, {"mode": "geom", "bits": 53}, 1000, stats)


def test_same_results_give_identical_bytes(tmp_path):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    write_report([_report()], a, config={"seed": 3})
    write_report([_report()], b, config={"seed": 3})
    assert a.read_bytes() == b.read_bytes()
    assert b"\r" not in a.read_bytes()


def test_report_embeds_config_and_version(tmp_path):
    path = tmp_path / "r.json"
    write_report([_report()], path, config={"seed": 3, "N": 1000})
    doc = read_report(path)
    assert doc["version"] == __version__
    assert doc["config"] == {"N": 1000, "seed": 3}


def test_keys_are_sorted_at_every_level():
    text = dumps({"b": {"z": 1, "a": 2}, "a": [1.5]})
    assert text.index('"a"') < text.index('"b"')
    assert text.index('"a": 2') < text.index('"z": 1')


def test_reals_use_17_significant_digits():
    text = dumps({"x": 0.1, "y": 2.0, "z": 1e-300 / 3})
    assert '"x": 0.10000000000000001' in text
    assert '"y": 2.0' in text
    assert '"z": 3.3333333333333334e-301' in text


def test_numpy_values_serialize_like_python():
    assert dumps({"v": np.float64(0.25), "n": np.int64(7), "a": np.array([0.5])}) == dumps(
        {"v": 0.25, "n": 7, "a": [0.5]}
    )


@pytest.mark.parametrize("empty", [[], ()])
def test_empty_results_error_and_no_file(tmp_path, empty):
    path = tmp_path / "r.json"
    with pytest.raises(EmptyResultsError):
        write_report(empty, path)
    assert not path.exists()
    assert os.listdir(tmp_path) == []


def test_failed_write_leaves_no_artifact(tmp_path):
    path = tmp_path / "r.json"

    class Broken:
        def to_dict(self):
            raise RuntimeError("boom")

    with pytest.raises(RuntimeError):
        write_report([Broken()], path)
    assert os.listdir(tmp_path) == []


def test_missing_directory_surfaces_os_error(tmp_path):
    with pytest.raises(OSError):
        write_report([_report()], tmp_path / "missing" / "r.json")


@given(st.lists(trial_reports, min_size=1, max_size=3))
def test_trial_report_round_trip(reports):
    doc = json.loads(write_report(reports, None))
    assert parse_trial_reports(doc) == reports


def test_table_format(tmp_path):
    path = tmp_path / "t.csv"
    text = write_table(path, ("n", "value", "ok"), [(1, 0.1, True), (2, 0.5, False)], config={"N": 2})
    assert path.read_text() == text
    lines = text.splitlines()
    assert lines[0] == f"# finegrain {__version__}"
    assert json.loads(lines[1][len("# config ") :]) == {"N": 2}
    assert lines[2:] == ["n,value,ok", "1,0.10000000000000001,true", "2,0.5,false"]
