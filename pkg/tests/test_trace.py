import json

import pytest

from engagesim.engine import run
from engagesim.scenario import BUNDLED, load_scenario
from engagesim.trace import (
    TRACE_VERSION,
    TraceError,
    TraceVersionError,
    TruncatedTraceError,
    make_header,
    parse_trace,
    read_trace,
    record_from_dict,
    record_to_dict,
    write_trace,
)


@pytest.fixture(scope="module")
def noisy():
    sc = load_scenario("noisy_room")
    return sc, run(sc, 10)


def test_ten_record_round_trip(tmp_path, noisy):
    sc, recs = noisy
    assert len(recs) == 10
    p = tmp_path / "t.jsonl"
    write_trace(recs, p, make_header(sc))
    tr = read_trace(p)
    assert tr.records == recs
    assert tr.header["scenario_hash"] == sc.hash
    assert tr.header["trace_version"] == TRACE_VERSION


@pytest.mark.parametrize("name", [n for n in BUNDLED if n != "random_crowd"])
def test_every_bundled_scenario_round_trips(name):
    for r in run(load_scenario(name)):
        assert record_from_dict(json.loads(json.dumps(record_to_dict(r)))) == r


def test_records_are_strict_json():
    for r in run(load_scenario("two_agent_engage"), 3):
        text = json.dumps(record_to_dict(r), allow_nan=False)
        assert "Infinity" not in text and "NaN" not in text


def test_unreachable_required_effort_round_trips():
    recs = run(load_scenario("noisy_room"), 1)
    gus = next(p for p in recs[0].politeness if p.sender == "gus")
    assert gus.required_effort < float("inf")
    from dataclasses import replace

    r = replace(recs[0], politeness=[replace(gus, required_effort=float("inf"))])
    d = record_to_dict(r)
    assert d["politeness"][0]["required"] == "inf"
    assert record_from_dict(json.loads(json.dumps(d))) == r


def test_truncated_file_names_last_good_tick(tmp_path, noisy):
    sc, recs = noisy
    p = tmp_path / "t.jsonl"
    write_trace(recs, p, make_header(sc))
    text = p.read_text()
    cut = text[: len(text) - 40]
    with pytest.raises(TruncatedTraceError) as exc:
        parse_trace(cut)
    assert exc.value.last_good_tick == 8
    assert "last good tick 8" in str(exc.value)


def test_missing_final_newline_counts_as_truncation(tmp_path, noisy):
    sc, recs = noisy
    p = tmp_path / "t.jsonl"
    write_trace(recs[:3], p, make_header(sc))
    with pytest.raises(TruncatedTraceError) as exc:
        parse_trace(p.read_text().rstrip("\n"))
    assert exc.value.last_good_tick == 1


def test_version_mismatch_is_rejected():
    head = json.dumps({"type": "header", "format": "engagesim-trace", "trace_version": 99})
    with pytest.raises(TraceVersionError):
        parse_trace(head + "\n")


def test_foreign_file_is_rejected():
    with pytest.raises(TraceError):
        parse_trace('{"hello": 1}\n')
    with pytest.raises(TruncatedTraceError):
        parse_trace("")


def test_header_only_trace_is_empty():
    tr = parse_trace(json.dumps(make_header()) + "\n")
    assert tr.records == []


def test_same_run_gives_identical_bytes(tmp_path):
    for i in range(2):
        sc = load_scenario("group_of_three")
        write_trace(run(sc), tmp_path / f"{i}.jsonl", make_header(sc))
    assert (tmp_path / "0.jsonl").read_bytes() == (tmp_path / "1.jsonl").read_bytes()
