"""Trace-driven cache hierarchy simulator and memory footprint toolkit."""

from memsim._core import (  # noqa: F401
    ConfigError,
    FormatError,
    LevelReport,
    SimReport,
    SimulationError,
    TraceRecord,
    classify_bands,
    count_accesses,
    decode_record,
    default_hierarchy_config_json,
    default_workload_spec_json,
    encode_record,
    export_scatter,
    generate_workload,
    read_trace,
    run_simulation,
    split_trace,
    stride_table,
    summarize_frequencies,
    write_trace,
)
from memsim._core import __version__  # noqa: F401
