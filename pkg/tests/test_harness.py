import json

import pytest

from csmsim.errors import ParseError
from csmsim.harness import (
    RunConfig,
    builtin_scenarios,
    load_scenario,
    parse_scenario,
    run_scenario,
    trace_to_bytes,
)

MINIMAL = {
    "schema": 1,
    "name": "minimal",
    "steps": [
        {"actor": "host", "op": "granule_delegate", "args": {"granule": 0}},
        {"actor": "host", "op": "rmi_realm_create",
         "args": {"rd": 0, "ipa_width": 20}, "bind": "R", "expect": {"ok": 1}},
    ],
}


def test_parse_minimal():
    scenario = parse_scenario(MINIMAL)
    assert scenario.name == "minimal"
    assert len(scenario.steps) == 2
    assert run_scenario(scenario)[1] == 0


def test_parse_rejects_wrong_schema():
    with pytest.raises(ParseError):
        parse_scenario({"schema": 2, "steps": [{"op": "world_stats"}]})


def test_parse_rejects_unknown_op():
    bad = {"schema": 1, "steps": [{"actor": "host", "op": "rmi_warp_drive"}]}
    with pytest.raises(ParseError, match="unknown op"):
        parse_scenario(bad)


def test_parse_rejects_dangling_alias():
    bad = {"schema": 1, "steps": [
        {"actor": "host", "op": "rmi_realm_activate", "args": {"rd": "@ghost"}}]}
    with pytest.raises(ParseError, match="dangling reference"):
        parse_scenario(bad)


def test_parse_rejects_unbound_actor():
    bad = {"schema": 1, "steps": [
        {"actor": "realm:P", "op": "rsi_csm_create",
         "args": {"base": 0, "size": 1}}]}
    with pytest.raises(ParseError, match="not bound"):
        parse_scenario(bad)


def test_parse_rejects_actor_op_mismatch():
    bad = {"schema": 1, "steps": [
        {"actor": "host", "op": "rsi_csm_create", "args": {"base": 0, "size": 1}}]}
    with pytest.raises(ParseError, match="not callable"):
        parse_scenario(bad)


def test_parse_rejects_malformed_expect():
    bad = {"schema": 1, "steps": [
        {"actor": "host", "op": "world_stats", "expect": {"maybe": 1}}]}
    with pytest.raises(ParseError, match="malformed expect"):
        parse_scenario(bad)


def test_parse_rejects_unknown_policy():
    with pytest.raises(ParseError, match="policy"):
        parse_scenario({"schema": 1, "policy": "chaotic", "steps": MINIMAL["steps"]})


def test_load_scenario_file_errors(tmp_path):
    with pytest.raises(ParseError):
        load_scenario(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ParseError):
        load_scenario(str(bad))


def test_load_scenario_round_trip(tmp_path):
    path = tmp_path / "scenario.json"
    path.write_text(json.dumps(MINIMAL))
    scenario = load_scenario(str(path))
    trace, code = run_scenario(scenario)
    assert code == 0


def test_expectation_mismatch_aborts_with_failure(tmp_path):
    scenario = parse_scenario({
        "schema": 1,
        "steps": [
            {"actor": "host", "op": "granule_delegate", "args": {"granule": 0}},
            {"actor": "host", "op": "rmi_realm_create", "args": {"rd": 0},
             "expect": {"ok": 7}},
            {"actor": "host", "op": "world_stats"},
        ],
    })
    trace, code = run_scenario(scenario)
    assert code == 1
    failed = [e for e in trace if e.get("expectation_failed")]
    assert len(failed) == 1
    assert failed[0]["expectation_failed"] == {"expected": {"ok": 7}, "got": 1}
    # Execution stopped at the mismatch: header + two steps only.
    assert len(trace) == 3


def test_expected_errors_count_as_met():
    scenario = parse_scenario({
        "schema": 1,
        "steps": [
            {"actor": "host", "op": "granule_undelegate", "args": {"granule": 0},
             "expect": {"error": "BadState"}},
        ],
    })
    assert run_scenario(scenario)[1] == 0


def test_builtin_registry_contents():
    registry = builtin_scenarios()
    assert len(registry) >= 11
    for name in ("happy_path", "two_consumers", "dedup_accounting",
                 "attack_impersonation", "attack_fake_csm", "attack_oob_access",
                 "attack_overlap_reserve", "attack_toctou_rd_swap",
                 "attack_host_probe", "attack_double_map", "starving_host"):
        assert name in registry


@pytest.mark.parametrize("name", sorted(builtin_scenarios()))
def test_builtin_runs_clean(name):
    trace, code = run_scenario(builtin_scenarios()[name])
    assert code == 0
    assert all(not e.get("invariants") for e in trace if "invariants" in e)


def test_trace_replay_is_byte_identical():
    scenario = builtin_scenarios()["happy_path"]
    first = trace_to_bytes(run_scenario(scenario)[0])
    second = trace_to_bytes(run_scenario(scenario)[0])
    assert first == second


def test_different_seed_changes_signatures_only():
    scenario = builtin_scenarios()["happy_path"]
    a, code_a = run_scenario(scenario, RunConfig(seed=1))
    b, code_b = run_scenario(scenario, RunConfig(seed=2))
    assert code_a == code_b == 0
    assert trace_to_bytes(a) != trace_to_bytes(b)


def test_trace_file_is_valid_jsonl(tmp_path):
    path = tmp_path / "out.jsonl"
    scenario = builtin_scenarios()["two_consumers"]
    trace, code = run_scenario(scenario, RunConfig(trace_path=str(path)))
    assert code == 0
    lines = path.read_text().splitlines()
    assert len(lines) == len(trace)
    header = json.loads(lines[0])
    assert header["scenario"] == "two_consumers"
    for line in lines[1:]:
        event = json.loads(line)
        assert {"step", "actor", "op", "result"} <= set(event)


def test_happy_path_consumer_reads_provider_bytes():
    trace, code = run_scenario(builtin_scenarios()["happy_path"])
    assert code == 0
    reads = [e for e in trace
             if e.get("op") == "realm_access" and e["args"].get("kind") == "read"]
    payload = bytes.fromhex(reads[0]["result"])
    assert payload == b"hello from provider"
