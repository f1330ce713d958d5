"""Smoke tests for the python bindings: codec, generator, simulator, analyses."""

import json
import os
import tempfile

import memsim


def test_codec_round_trip():
    rec = memsim.TraceRecord()
    rec.ip = 0x32D6544
    rec.add_src_memory(0x32E8910)
    blob = memsim.encode_record(rec)
    assert len(blob) == 64
    back = memsim.decode_record(blob)
    assert back == rec
    assert back.ip == 0x32D6544
    assert back.src_memory[0] == 0x32E8910


def test_record_capacity_error():
    rec = memsim.TraceRecord()
    for i in range(4):
        rec.add_src_memory(0x1000 + i)
    try:
        rec.add_src_memory(0x2000)
    except memsim.ConfigError:
        pass
    else:
        raise AssertionError("expected ConfigError")


def test_trace_file_round_trip(tmp):
    records = []
    for i in range(100):
        rec = memsim.TraceRecord()
        rec.ip = 0x400000 + 4 * i
        rec.add_src_memory(0x10000 + 64 * i)
        records.append(rec)
    path = os.path.join(tmp, "t.trace.xz")
    memsim.write_trace(path, records)
    assert memsim.read_trace(path) == records

    prefix = os.path.join(tmp, "a.trace.xz")
    suffix = os.path.join(tmp, "b.trace.xz")
    counts = memsim.split_trace(path, 30, prefix, suffix)
    assert counts == (30, 70)
    assert len(memsim.read_trace(prefix)) == 30


def test_pipeline(tmp):
    spec = json.loads(memsim.default_workload_spec_json())
    spec.update(
        tokens=8,
        weight_blocks=64,
        hot_addresses=16,
        one_shot_addresses=8,
        token_period_instructions=2000,
        walk_spacing=20,
    )
    spec["token_array"]["element_count"] = 16
    trace = os.path.join(tmp, "decoder.trace")
    manifest = os.path.join(tmp, "manifest.csv")
    written = memsim.generate_workload(json.dumps(spec), trace, manifest)
    assert written == 8 * 2000
    assert os.path.exists(manifest)

    log = os.path.join(tmp, "log.csv")
    report = memsim.run_simulation(
        trace,
        memsim.default_hierarchy_config_json(),
        warmup_instructions=2000,
        simulation_instructions=14000,
        log_path=log,
    )
    assert report.instructions_retired == 14000
    l1d = report.level("L1D")
    assert l1d is not None
    assert l1d.hits + l1d.misses == l1d.demand_accesses
    assert report.ipc > 0

    # The access log spans warmup and measurement: all 8 tokens are visible.
    counts = memsim.count_accesses(log, "L1D")
    assert counts[spec["weight_base"]] == spec["tokens"]

    summary = memsim.summarize_frequencies(counts, spec["tokens"])
    assert summary["special_addresses"] >= spec["weight_blocks"]

    rows = memsim.stride_table(log, spec["weight_base"], "L1D")
    assert len(rows) == spec["tokens"]
    assert rows[-1][1] is None

    bands = memsim.classify_bands(counts)
    assert len(bands) == 3

    points = memsim.export_scatter(log, 0, 10**9, "L1D")
    assert len(points) == sum(counts.values())


def main():
    test_codec_round_trip()
    test_record_capacity_error()
    with tempfile.TemporaryDirectory() as tmp:
        test_trace_file_round_trip(tmp)
    with tempfile.TemporaryDirectory() as tmp:
        test_pipeline(tmp)
    print("python smoke tests passed")


if __name__ == "__main__":
    main()
