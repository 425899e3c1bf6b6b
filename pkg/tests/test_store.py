import json
import subprocess
import sys

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from bomtrace.canonical import canonical_bytes
from bomtrace.errors import NotFound, RevisionConflict
from bomtrace.ids import is_entity_id
from bomtrace.store import LOG_NAME, Store, WriteOp


def test_put_get_round_trip(tmp_path):
    with Store(tmp_path) as store:
        revision = store.put("bom_" + "1" * 32, "bom", b'{"name":"x"}')
        assert revision == 1
        record = store.get("bom_" + "1" * 32)
        assert record.data == b'{"name":"x"}'
        assert record.kind == "bom"
        assert record.revision == 1


def test_revision_increments_and_conflicts(tmp_path):
    with Store(tmp_path) as store:
        key = "bom_" + "2" * 32
        assert store.put(key, "bom", b"{}") == 1
        assert store.put(key, "bom", b'{"a":1}', expected_revision=1) == 2
        with pytest.raises(RevisionConflict):
            store.put(key, "bom", b"{}", expected_revision=1)
        with pytest.raises(RevisionConflict):
            store.put(key, "bom", b"{}", expected_revision=0)


def test_get_unknown_key(tmp_path):
    with Store(tmp_path) as store:
        with pytest.raises(NotFound):
            store.get("bom_" + "9" * 32)


def test_reopen_preserves_records(tmp_path):
    with Store(tmp_path) as store:
        store.put("ds_" + "a" * 32, "component", b'{"name":"alpha"}')
        store.put("ds_" + "b" * 32, "component", b'{"name":"beta"}')
    with Store(tmp_path) as store:
        assert store.get("ds_" + "a" * 32).data == b'{"name":"alpha"}'
        assert store.record_count == 2


def test_put_many_is_one_transaction(tmp_path):
    with Store(tmp_path) as store:
        store.put_many(
            [
                WriteOp("ds_" + "c" * 32, "component", b"{}", 0),
                WriteOp("ds_" + "d" * 32, "component", b"{}", 0),
            ]
        )
    lines = (tmp_path / LOG_NAME).read_bytes().splitlines()
    assert len(lines) == 1


def test_put_many_conflict_rolls_back_everything(tmp_path):
    with Store(tmp_path) as store:
        store.put("ds_" + "e" * 32, "component", b"{}")
        with pytest.raises(RevisionConflict):
            store.put_many(
                [
                    WriteOp("ds_" + "f" * 32, "component", b"{}", 0),
                    WriteOp("ds_" + "e" * 32, "component", b"{}", 0),
                ]
            )
        assert not store.exists("ds_" + "f" * 32)


def test_torn_tail_discarded(tmp_path):
    with Store(tmp_path) as store:
        store.put("ds_" + "a" * 32, "component", b'{"name":"kept"}')
    with open(tmp_path / LOG_NAME, "ab") as fh:
        fh.write(b'{"writes":[{"key":"half')  # no newline: torn mid-append
    with Store(tmp_path) as store:
        assert store.record_count == 1
        store.put("ds_" + "b" * 32, "component", b"{}")
    with Store(tmp_path) as store:
        assert store.record_count == 2


def test_scan_orders_by_key_and_filters(tmp_path):
    with Store(tmp_path) as store:
        store.put("bom_" + "2" * 32, "bom", canonical_bytes({"name": "HPC Congestion"}))
        store.put("bom_" + "1" * 32, "bom", canonical_bytes({"name": "Other"}))
        store.put("ds_" + "1" * 32, "component", canonical_bytes({"name": "HPC thing"}))
        keys = [r.key for r in store.scan("bom")]
        assert keys == ["bom_" + "1" * 32, "bom_" + "2" * 32]
        hits = store.scan("bom", name_prefix="HPC")
        assert [r.key for r in hits] == ["bom_" + "2" * 32]
        assert store.scan("bol") == []


def _brute_force_referencing(store, kind, component_id):
    hits = []
    for record in store.scan(kind):
        doc = json.loads(record.data.decode("utf-8"))
        found = []

        def walk(node):
            if isinstance(node, str) and is_entity_id(node):
                found.append(node)
            elif isinstance(node, dict):
                for k, v in node.items():
                    walk(k)
                    walk(v)
            elif isinstance(node, list):
                for item in node:
                    walk(item)

        walk(doc)
        if component_id in found:
            hits.append(record.key)
    return hits


def test_referencing_index_matches_brute_force(tmp_path):
    target = "ds_" + "a" * 32
    other = "ds_" + "b" * 32
    with Store(tmp_path) as store:
        store.put(
            "as_" + "1" * 32, "assembly", canonical_bytes({"inputData": [target]})
        )
        store.put(
            "as_" + "2" * 32, "assembly", canonical_bytes({"inputData": [other]})
        )
        store.put(
            "bol_" + "1" * 32, "bol", canonical_bytes({"shadow_items": {target: {}}})
        )
        for kind in ("assembly", "bol", "component"):
            indexed = [r.key for r in store.scan(kind, referencing_component=target)]
            assert indexed == _brute_force_referencing(store, kind, target)


def test_referencing_index_follows_updates(tmp_path):
    target = "ds_" + "a" * 32
    key = "as_" + "1" * 32
    with Store(tmp_path) as store:
        store.put(key, "assembly", canonical_bytes({"inputData": [target]}))
        assert [r.key for r in store.scan("assembly", referencing_component=target)] == [key]
        store.put(key, "assembly", canonical_bytes({"inputData": []}))
        assert store.scan("assembly", referencing_component=target) == []


@settings(max_examples=25, deadline=None)
@given(st.binary(max_size=200))
def test_arbitrary_bytes_round_trip(tmp_path_factory, payload):
    path = tmp_path_factory.mktemp("store")
    with Store(path) as store:
        store.put("ds_" + "0" * 32, "component", payload)
        assert store.get("ds_" + "0" * 32).data == payload
    with Store(path) as store:
        assert store.get("ds_" + "0" * 32).data == payload


def test_thousand_round_trips(tmp_path):
    with Store(tmp_path) as store:
        for i in range(1000):
            key = f"ds_{i:032x}"
            store.put(key, "component", f'{{"n":{i}}}'.encode())
        for i in range(1000):
            assert store.get(f"ds_{i:032x}").data == f'{{"n":{i}}}'.encode()


_CHILD = """
import os, sys
sys.path.insert(0, {src!r})
from bomtrace.store import Store
store = Store(sys.argv[1])
for i in range(20):
    store.put(f"ds_{{i:032x}}", "component", f'{{{{"n":{{i}}}}}}'.encode())
    print(f"ds_{{i:032x}}", flush=True)
os._exit(1)  # simulate a crash: no close, no cleanup
"""


def test_kill_restart_preserves_acknowledged_writes(tmp_path):
    import bomtrace

    src = bomtrace.__file__.rsplit("/bomtrace/", 1)[0]
    script = _CHILD.format(src=src)
    proc = subprocess.run(
        [sys.executable, "-c", script, str(tmp_path / "data")],
        capture_output=True,
        text=True,
        timeout=60,
    )
    assert proc.returncode == 1
    acked = proc.stdout.split()
    assert len(acked) == 20
    with Store(tmp_path / "data") as store:
        for key in acked:
            assert store.get(key).data  # every acknowledged write survived
