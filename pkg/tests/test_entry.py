import json

import pytest

from tracekit.entry import BenchmarkEntry, package_entry, sha256_file, verify_entry
from tracekit.errors import EntryError


@pytest.fixture
def entry_files(tmp_path, card_file, trace_files, workloads):
    card = card_file()
    traces = trace_files([workloads.standard(), workloads.standard()])
    script = tmp_path / "launch.sh"
    script.write_text("#!/bin/sh\ntorchrun --nproc-per-node 2 train.py\n")
    return card, traces, script


def test_package_and_verify(tmp_path, entry_files):
    card, traces, script = entry_files
    manifest = tmp_path / "entry.json"
    entry = package_entry(card, traces, [script], manifest=manifest)

    data = json.loads(manifest.read_text())
    assert data["version"] == 1
    assert data["card"] == {"path": "card.yaml", "sha256": sha256_file(card)}
    assert [t["path"] for t in data["traces"]] == ["rank0.json", "rank1.json"]
    assert data["profile"] is None
    assert len(entry.records()) == 4
    assert verify_entry(manifest) == []


def test_tampered_trace_is_reported(tmp_path, entry_files):
    card, traces, script = entry_files
    manifest = tmp_path / "entry.json"
    package_entry(card, traces, [script], manifest=manifest)
    traces[1].write_text('{"traceEvents": []}')
    assert verify_entry(manifest) == ["trace rank1.json changed since packaging"]


def test_missing_file_is_reported(tmp_path, entry_files):
    card, traces, script = entry_files
    manifest = tmp_path / "entry.json"
    package_entry(card, traces, [script], manifest=manifest)
    script.unlink()
    assert verify_entry(manifest) == ["script launch.sh is missing"]


def test_manifest_in_a_subdirectory_uses_relative_paths(tmp_path, entry_files):
    card, traces, script = entry_files
    manifest = tmp_path / "entries" / "run1.json"
    package_entry(card, traces, [], manifest=manifest)
    data = json.loads(manifest.read_text())
    assert data["card"]["path"] == "../card.yaml"
    assert verify_entry(manifest) == []


def test_packaging_needs_existing_files_and_a_trace(tmp_path, entry_files):
    card, traces, _ = entry_files
    with pytest.raises(EntryError):
        package_entry(card, [], [], manifest=tmp_path / "entry.json")
    with pytest.raises(EntryError):
        package_entry(card, traces, [tmp_path / "absent.sh"], manifest=tmp_path / "entry.json")


def test_unreadable_manifests(tmp_path):
    with pytest.raises(EntryError):
        verify_entry(tmp_path / "absent.json")
    broken = tmp_path / "broken.json"
    broken.write_text('{"card": {"path": "card.yaml"}}')
    with pytest.raises(EntryError):
        verify_entry(broken)


def test_manifest_round_trip(tmp_path, entry_files):
    card, traces, script = entry_files
    profile = tmp_path / "profile.json"
    profile.write_text("{}\n")
    entry = package_entry(card, traces, [script], profile=profile, manifest=tmp_path / "entry.json")
    again = BenchmarkEntry.from_dict(json.loads(entry.to_json()))
    assert again.to_json() == entry.to_json()
    assert again.profile.path == "profile.json"
