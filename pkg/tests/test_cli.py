import json

import pytest

from tracekit.cli import EXIT_INPUT, EXIT_OK, main


@pytest.fixture
def run(capsys):
    """Run the CLI, returning (exit code, stdout)."""

    def invoke(*argv):
        code = main([str(a) for a in argv])
        return code, capsys.readouterr().out

    return invoke


@pytest.fixture
def evidence(card_file, trace_files, workloads):
    card = card_file()
    traces = trace_files([workloads.standard(), workloads.standard(base=3_000_000)])
    return card, traces


def test_validate_rejects_short_runs(run, card_file, trace_files, workloads):
    card = card_file()
    (trace,) = trace_files([workloads.standard(n_steps=3)])
    code, out = run("validate", "--card", card, trace)
    assert code == EXIT_INPUT
    report = json.loads(out)
    assert report["ok"] is False


def test_validate_accepts_complete_runs(run, evidence):
    card, traces = evidence
    code, out = run("validate", "--card", card, *traces)
    assert code == EXIT_OK
    assert json.loads(out)["ok"] is True


def test_relaxed_validation(run, card_file, trace_files, workloads):
    card = card_file()
    (trace,) = trace_files([workloads.standard(n_steps=3)])
    code, _ = run("validate", "--relaxed", "--card", card, trace)
    assert code == EXIT_OK


def test_metrics_only(run, evidence):
    card, traces = evidence
    code, out = run("metrics", "--card", card, "--only", "avg_step_time,communication_fraction", *traces)
    assert code == EXIT_OK
    profile = json.loads(out)
    assert [m["key"] for m in profile["metrics"]] == ["avg_step_time", "communication_fraction"]
    assert profile["metrics"][0]["value"] == pytest.approx(0.01)


def test_metrics_table_format(run, evidence):
    card, traces = evidence
    code, out = run("metrics", "--format", "table", "--card", card, "--only", "avg_step_time", *traces)
    assert code == EXIT_OK
    assert "avg_step_time" in out


def test_metrics_unknown_key(run, evidence):
    card, traces = evidence
    code, _ = run("metrics", "--card", card, "--only", "nope", *traces)
    assert code == EXIT_INPUT


def test_missing_card_file(run, tmp_path, evidence):
    _, traces = evidence
    code, _ = run("metrics", "--card", tmp_path / "absent.yaml", *traces)
    assert code == EXIT_INPUT


def test_compare_identical_profiles(run, evidence, tmp_path):
    card, traces = evidence
    first, second = tmp_path / "a.json", tmp_path / "b.json"
    run("metrics", "--card", card, "--out", first, *traces)
    run("metrics", "--card", card, "--out", second, *traces)

    code, out = run("compare", first, second)
    assert code == EXIT_OK
    rows = json.loads(out)["rows"]
    assert rows
    for row in rows:
        (delta,) = row["deltas"]
        assert delta["delta"] == 0
        assert delta["verdict"] == "same"


def test_compare_needs_two_profiles(run, evidence, tmp_path):
    card, traces = evidence
    profile = tmp_path / "a.json"
    run("metrics", "--card", card, "--out", profile, *traces)
    code, _ = run("compare", profile)
    assert code == EXIT_INPUT


def test_whatif(run, evidence):
    card, traces = evidence
    code, out = run("whatif", "--card", card, *traces)
    assert code == EXIT_OK
    result = json.loads(out)
    assert [r["resource"] for r in result["results"]] == ["ScaleOutBandwidth", "ScaleUpBandwidth", "ScaleUpDomainSize"]
    assert result["network"]["scale_up_bandwidth"] == 300.0


def test_whatif_slow_network_override(run, evidence):
    card, traces = evidence
    code, out = run("whatif", "--card", card, "--scale-up-bw", "1", *traces, "--resources", "ScaleUpBandwidth")
    assert code == EXIT_OK
    (result,) = json.loads(out)["results"]
    assert result["utility"] > 40


def test_export_graph(run, evidence, tmp_path):
    card, traces = evidence
    out_path = tmp_path / "graph.json"
    code, _ = run("export-graph", "--card", card, "--out", out_path, *traces)
    assert code == EXIT_OK
    graph = json.loads(out_path.read_text())
    assert graph["groups"] == {"0": [0, 1]}


def test_search_with_table(run, fixtures_dir, tmp_path):
    search = fixtures_dir / "search"
    history = tmp_path / "history.jsonl"
    code, out = run(
        "search",
        "--space", search / "space.yaml",
        "--table", search / "megatron_table.yaml",
        "--proposer", "grid",
        "--budget", "27",
        "--history", history,
    )
    assert code == EXIT_OK
    summary = json.loads(out)
    assert summary["best"]["config"] == {"tp": 4, "dp": 1, "pp": 4}
    assert summary["succeeded"] == 5
    assert len(history.read_text().splitlines()) == 27


def test_search_budget_zero(run, fixtures_dir):
    search = fixtures_dir / "search"
    table = search / "megatron_table.yaml"
    code, _ = run("search", "--space", search / "space.yaml", "--table", table, "--budget", "0")
    assert code == EXIT_INPUT


def test_search_table_executor_needs_a_table(run, fixtures_dir):
    code, _ = run("search", "--space", fixtures_dir / "search" / "space.yaml")
    assert code == EXIT_INPUT


def test_package_entry_and_verify(run, evidence, tmp_path):
    card, traces = evidence
    manifest = tmp_path / "entry.json"
    code, _ = run("package-entry", "--card", card, "--trace", traces[0], "--trace", traces[1], "--out", manifest)
    assert code == EXIT_OK

    code, out = run("package-entry", "--verify", manifest)
    assert code == EXIT_OK
    assert json.loads(out)["ok"] is True

    traces[0].write_text("{}")
    code, out = run("package-entry", "--verify", manifest)
    assert code == EXIT_INPUT
    assert json.loads(out)["problems"] == ["trace rank0.json changed since packaging"]


# golden documents

GOLDEN_METRICS = ("avg_step_time", "communication_fraction", "total_communication_time")


@pytest.fixture
def local_evidence(evidence, tmp_path, monkeypatch):
    """Evidence addressed by relative names, so documents echo stable paths."""
    monkeypatch.chdir(tmp_path)
    card, traces = evidence
    return card.name, [t.name for t in traces]


def test_metrics_document_matches_golden(run, local_evidence, fixtures_dir):
    card, traces = local_evidence
    code, out = run("metrics", "--card", card, "--only", ",".join(GOLDEN_METRICS), *traces)
    assert code == EXIT_OK
    assert out == (fixtures_dir / "golden" / "metrics_profile.json").read_text()


def test_compare_document_matches_golden(run, local_evidence, fixtures_dir):
    card, traces = local_evidence
    for name in ("a.json", "b.json"):
        run("metrics", "--card", card, "--only", ",".join(GOLDEN_METRICS), "--out", name, *traces)
    code, out = run("compare", "a.json", "b.json")
    assert code == EXIT_OK
    assert out == (fixtures_dir / "golden" / "compare.json").read_text()


def test_whatif_document_matches_golden(run, local_evidence, fixtures_dir):
    card, traces = local_evidence
    code, out = run("whatif", "--card", card, "--scale-up-bw", "1", "--scale-out-bw", "1", *traces)
    assert code == EXIT_OK
    assert out == (fixtures_dir / "golden" / "whatif_slow_network.json").read_text()


def test_whatif_latency_takes_a_duration(run, evidence):
    card, traces = evidence
    code, out = run("whatif", "--card", card, "--scale-up-latency", "10us", "--scale-out-latency", "1.5ms", *traces)
    assert code == EXIT_OK
    network = json.loads(out)["network"]
    assert network["scale_up_latency"] == pytest.approx(1e-5)
    assert network["scale_out_latency"] == pytest.approx(1.5e-3)


def test_whatif_rejects_a_malformed_latency(run, evidence):
    card, traces = evidence
    with pytest.raises(SystemExit) as exc:
        run("whatif", "--card", card, "--scale-up-latency", "ten", *traces)
    assert exc.value.code == 2


def test_compare_rejects_documents_that_are_not_profiles(run, evidence, tmp_path):
    card, traces = evidence
    good, bad = tmp_path / "a.json", tmp_path / "bad.json"
    run("metrics", "--card", card, "--out", good, *traces)
    bad.write_text(json.dumps({"metrics": [{"key": "avg_step_time"}]}))
    code, _ = run("compare", good, bad)
    assert code == EXIT_INPUT
