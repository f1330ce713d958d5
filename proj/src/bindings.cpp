#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <fstream>
#include <sstream>

#include "memsim/analysis.hpp"
#include "memsim/engine.hpp"
#include "memsim/errors.hpp"
#include "memsim/synth.hpp"
#include "memsim/trace.hpp"

namespace py = pybind11;
using namespace memsim;

namespace {

SimReport py_run_simulation(const std::string& trace_path, const std::string& config_json,
                            uint64_t warmup_instructions, uint64_t simulation_instructions,
                            const std::string& log_path) {
  SimConfig config;
  if (!config_json.empty()) config.hierarchy = hierarchy_config_from_json(config_json);
  config.warmup_instructions = warmup_instructions;
  config.simulation_instructions = simulation_instructions;

  TraceReader reader(trace_path);
  std::ofstream log_file;
  std::unique_ptr<CsvAccessLogger> logger;
  if (!log_path.empty()) {
    log_file.open(log_path);
    if (!log_file) throw FormatError("cannot create " + log_path);
    logger = std::make_unique<CsvAccessLogger>(log_file);
  }
  return run_simulation(reader, config, logger.get());
}

uint64_t py_generate_workload(const std::string& spec_json, const std::string& trace_path,
                              const std::string& manifest_path) {
  WorkloadSpec spec;
  if (!spec_json.empty()) spec = workload_spec_from_json(spec_json);
  TraceWriter writer(trace_path, compression_for_path(trace_path));
  GroundTruth truth =
      generate_decoder_trace(spec, [&](const TraceRecord& rec) { writer.write(rec); });
  writer.finish();
  if (!manifest_path.empty()) {
    std::ofstream out(manifest_path);
    if (!out) throw FormatError("cannot create " + manifest_path);
    write_manifest_csv(truth, out);
  }
  return writer.records_written();
}

FrequencyTable table_from_dict(const std::map<uint64_t, uint64_t>& counts) {
  FrequencyTable table;
  for (const auto& [address, count] : counts) {
    table.counts[address] = count;
    table.total_accesses += count;
  }
  return table;
}

std::optional<LogLevel> optional_level(const std::string& level) {
  if (level.empty()) return std::nullopt;
  return log_level_from_name(level);
}

} // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Trace-driven cache hierarchy simulator and memory footprint toolkit";
  m.attr("__version__") = "0.1.0";

  py::register_exception<FormatError>(m, "FormatError");
  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<SimulationError>(m, "SimulationError");

  py::class_<TraceRecord>(m, "TraceRecord")
      .def(py::init<>())
      .def_readwrite("ip", &TraceRecord::ip)
      .def_readwrite("is_branch", &TraceRecord::is_branch)
      .def_readwrite("branch_taken", &TraceRecord::branch_taken)
      .def_readwrite("dest_registers", &TraceRecord::dest_registers)
      .def_readwrite("src_registers", &TraceRecord::src_registers)
      .def_readwrite("dest_memory", &TraceRecord::dest_memory)
      .def_readwrite("src_memory", &TraceRecord::src_memory)
      .def("add_dest_register", &TraceRecord::add_dest_register)
      .def("add_src_register", &TraceRecord::add_src_register)
      .def("add_dest_memory", &TraceRecord::add_dest_memory)
      .def("add_src_memory", &TraceRecord::add_src_memory)
      .def("__eq__", [](const TraceRecord& a, const TraceRecord& b) { return a == b; })
      .def("__repr__", [](const TraceRecord& r) {
        std::ostringstream out;
        out << "TraceRecord(ip=0x" << std::hex << r.ip << ")";
        return out.str();
      });

  m.def("encode_record", [](const TraceRecord& rec) {
    auto bytes = encode_record(rec);
    return py::bytes(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  });
  m.def("decode_record", [](const py::bytes& data) {
    std::string buf = data;
    return decode_record(
        std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(buf.data()), buf.size()));
  });
  m.def("read_trace", &read_all_records, py::arg("path"));
  m.def("write_trace", &write_all_records, py::arg("path"), py::arg("records"));
  m.def(
      "split_trace",
      [](const std::string& input, uint64_t at, const std::string& prefix,
         const std::string& suffix) {
        SplitResult r = split_trace(input, at, prefix, suffix);
        return py::make_tuple(r.prefix_records, r.suffix_records);
      },
      py::arg("input"), py::arg("at"), py::arg("prefix"), py::arg("suffix"));

  py::class_<LevelReport>(m, "LevelReport")
      .def_readonly("name", &LevelReport::name)
      .def_readonly("demand_accesses", &LevelReport::demand_accesses)
      .def_readonly("hits", &LevelReport::hits)
      .def_readonly("misses", &LevelReport::misses)
      .def_readonly("miss_percentage", &LevelReport::miss_percentage)
      .def_readonly("no_accesses", &LevelReport::no_accesses)
      .def_readonly("prefetches_issued", &LevelReport::prefetches_issued)
      .def_readonly("useful_prefetches", &LevelReport::useful_prefetches);

  py::class_<SimReport>(m, "SimReport")
      .def_readonly("levels", &SimReport::levels)
      .def_readonly("instructions_retired", &SimReport::instructions_retired)
      .def_readonly("cycles_elapsed", &SimReport::cycles_elapsed)
      .def_readonly("ipc", &SimReport::ipc)
      .def_readonly("branches_retired", &SimReport::branches_retired)
      .def_readonly("branches_taken", &SimReport::branches_taken)
      .def("level", [](const SimReport& r, const std::string& name) -> py::object {
        const LevelReport* level = r.level(name);
        return level ? py::cast(*level) : py::none();
      });

  m.def("run_simulation", &py_run_simulation, py::arg("trace"), py::arg("config_json") = "",
        py::arg("warmup_instructions") = 0, py::arg("simulation_instructions") = 0,
        py::arg("log_path") = "");
  m.def("default_hierarchy_config_json",
        [] { return hierarchy_config_to_json(default_hierarchy_config()); });

  m.def("default_workload_spec_json", [] { return workload_spec_to_json(WorkloadSpec{}); });
  m.def("generate_workload", &py_generate_workload, py::arg("spec_json") = "", py::arg("trace"),
        py::arg("manifest") = "");

  m.def(
      "count_accesses",
      [](const std::string& log_path, const std::string& level) {
        auto log = read_access_log(log_path);
        auto table = count_accesses(log, optional_level(level));
        std::map<uint64_t, uint64_t> out(table.counts.begin(), table.counts.end());
        return out;
      },
      py::arg("log_path"), py::arg("level") = "");

  m.def(
      "summarize_frequencies",
      [](const std::map<uint64_t, uint64_t>& counts, uint64_t special_count) {
        auto s = summarize_frequencies(table_from_dict(counts), special_count);
        py::dict out;
        out["special_count"] = s.special_count;
        out["once_addresses"] = s.once_addresses;
        out["special_addresses"] = s.special_addresses;
        out["other_addresses"] = s.other_addresses;
        out["distinct_addresses"] = s.distinct_addresses;
        out["once_percentage"] = s.once_percentage;
        out["special_percentage"] = s.special_percentage;
        out["other_percentage"] = s.other_percentage;
        return out;
      },
      py::arg("counts"), py::arg("special_count"));

  m.def(
      "stride_table",
      [](const std::string& log_path, uint64_t address, const std::string& level) {
        auto log = read_access_log(log_path);
        auto rows = stride_table_for_address(log, address, optional_level(level));
        py::list out;
        for (const auto& row : rows) {
          out.append(py::make_tuple(row.cycle, row.delta_to_next
                                                   ? py::cast(*row.delta_to_next)
                                                   : py::none()));
        }
        return out;
      },
      py::arg("log_path"), py::arg("address"), py::arg("level") = "");

  m.def(
      "classify_bands",
      [](const std::map<uint64_t, uint64_t>& counts, uint64_t granularity) {
        auto bands = classify_bands(table_from_dict(counts), granularity);
        py::list out;
        for (const auto& band : bands) {
          py::dict d;
          d["band_id"] = band.band_id;
          d["low_address"] = band.low_address;
          d["high_address"] = band.high_address;
          d["total_accesses"] = band.total_accesses;
          d["address_count"] = band.address_count;
          out.append(d);
        }
        return out;
      },
      py::arg("counts"), py::arg("granularity") = kDefaultBandGranularity);

  m.def(
      "export_scatter",
      [](const std::string& log_path, uint64_t start, uint64_t end, const std::string& level) {
        auto log = read_access_log(log_path);
        auto points = export_scatter(log, start, end, optional_level(level));
        py::list out;
        for (const auto& point : points) out.append(py::make_tuple(point.cycle, point.address));
        return out;
      },
      py::arg("log_path"), py::arg("start"), py::arg("end"), py::arg("level") = "");
}
