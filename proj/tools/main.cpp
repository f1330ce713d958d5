#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "memsim/analysis.hpp"
#include "memsim/engine.hpp"
#include "memsim/errors.hpp"
#include "memsim/synth.hpp"
#include "memsim/trace.hpp"

namespace {

constexpr const char* kToolVersion = "0.1.0";

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitInput = 2;
constexpr int kExitSimulation = 3;

// Reproducibility sidecar written next to a subcommand's primary output.
// Deliberately timestamp-free so identical invocations produce identical
// files.
void write_run_manifest(const std::string& primary_output, const std::string& subcommand,
                        const std::vector<std::string>& inputs,
                        const std::vector<std::string>& outputs,
                        const nlohmann::json& resolved_config,
                        std::optional<uint64_t> seed = std::nullopt) {
  nlohmann::json j;
  j["tool_version"] = kToolVersion;
  j["subcommand"] = subcommand;
  j["inputs"] = inputs;
  j["outputs"] = outputs;
  j["config"] = resolved_config;
  if (seed)
    j["seed"] = *seed;
  else
    j["seed"] = nullptr;
  std::ofstream out(primary_output + ".run.json");
  out << j.dump(2) << '\n';
}

struct SimulateJob {
  std::string config_path; // empty = built-in defaults
  memsim::SimConfig config;
  std::string report_path;
  std::string log_path;
};

int run_one_simulation(const SimulateJob& job, const std::string& trace_path, std::ostream& text_out) {
  memsim::TraceReader reader(trace_path);

  std::ofstream log_file;
  std::unique_ptr<memsim::CsvAccessLogger> logger;
  if (!job.log_path.empty()) {
    log_file.open(job.log_path);
    if (!log_file) throw memsim::FormatError("cannot create " + job.log_path);
    logger = std::make_unique<memsim::CsvAccessLogger>(log_file);
  }

  memsim::SimReport report = memsim::run_simulation(reader, job.config, logger.get());
  memsim::write_report_text(report, text_out);

  if (!job.report_path.empty()) {
    std::ofstream csv(job.report_path);
    if (!csv) throw memsim::FormatError("cannot create " + job.report_path);
    memsim::write_report_csv(report, csv);

    std::vector<std::string> outputs{job.report_path};
    if (!job.log_path.empty()) outputs.push_back(job.log_path);
    nlohmann::json resolved;
    resolved["hierarchy"] = nlohmann::json::parse(memsim::hierarchy_config_to_json(job.config.hierarchy));
    resolved["warmup_instructions"] = job.config.warmup_instructions;
    resolved["simulation_instructions"] = job.config.simulation_instructions;
    write_run_manifest(job.report_path, "simulate", {trace_path, job.config_path}, outputs, resolved);
  }
  return kExitOk;
}

int cmd_simulate(const std::vector<std::string>& config_paths, uint64_t warmup, uint64_t simulation,
                 const std::string& report_path, const std::string& log_path, unsigned jobs,
                 const std::string& trace_path) {
  std::vector<SimulateJob> queue;
  if (config_paths.empty()) {
    SimulateJob job;
    job.config.warmup_instructions = warmup;
    job.config.simulation_instructions = simulation;
    job.report_path = report_path;
    job.log_path = log_path;
    queue.push_back(std::move(job));
  } else {
    for (const auto& path : config_paths) {
      SimulateJob job;
      job.config_path = path;
      job.config.hierarchy = memsim::hierarchy_config_from_file(path);
      job.config.warmup_instructions = warmup;
      job.config.simulation_instructions = simulation;
      if (config_paths.size() == 1) {
        job.report_path = report_path;
        job.log_path = log_path;
      } else {
        // Fan-out: one report per configuration, named after the config file.
        std::filesystem::path stem = std::filesystem::path(path).stem();
        job.report_path = (std::filesystem::path(path).parent_path() / stem).string() + ".report.csv";
      }
      queue.push_back(std::move(job));
    }
  }

  if (queue.size() == 1) return run_one_simulation(queue[0], trace_path, std::cout);

  // Independent configurations; each job owns its hierarchy and runs
  // single-threaded.
  std::mutex stdout_mutex;
  std::vector<std::thread> workers;
  std::atomic<std::size_t> next{0};
  std::atomic<int> status{kExitOk};
  unsigned parallelism = std::max(1u, jobs);
  for (unsigned w = 0; w < parallelism; ++w) {
    workers.emplace_back([&] {
      for (;;) {
        std::size_t i = next.fetch_add(1);
        if (i >= queue.size()) return;
        std::ostringstream text;
        try {
          text << "== " << (queue[i].config_path.empty() ? "default" : queue[i].config_path)
               << " ==\n";
          run_one_simulation(queue[i], trace_path, text);
        } catch (const std::exception& e) {
          text << "error: " << e.what() << '\n';
          status = kExitSimulation;
        }
        std::lock_guard<std::mutex> lock(stdout_mutex);
        std::cout << text.str();
      }
    });
  }
  for (auto& worker : workers) worker.join();
  return status;
}

int cmd_split(const std::string& input, uint64_t at, const std::string& prefix,
              const std::string& suffix) {
  memsim::SplitResult result = memsim::split_trace(input, at, prefix, suffix);
  std::cout << "prefix: " << result.prefix_records << " records -> " << prefix << '\n'
            << "suffix: " << result.suffix_records << " records -> " << suffix << '\n';
  write_run_manifest(prefix, "split", {input}, {prefix, suffix}, {{"split_at", at}});
  return kExitOk;
}

int cmd_gen(const std::string& spec_path, const std::string& out_path,
            const std::string& manifest_path, std::optional<uint64_t> seed_override) {
  memsim::WorkloadSpec spec;
  if (!spec_path.empty()) spec = memsim::workload_spec_from_file(spec_path);
  if (seed_override) spec.rng_seed = *seed_override;

  memsim::TraceWriter writer(out_path, memsim::compression_for_path(out_path));
  memsim::GroundTruth truth =
      memsim::generate_decoder_trace(spec, [&](const memsim::TraceRecord& rec) { writer.write(rec); });
  writer.finish();

  std::string manifest = manifest_path.empty() ? out_path + ".manifest.csv" : manifest_path;
  std::ofstream manifest_out(manifest);
  if (!manifest_out) throw memsim::FormatError("cannot create " + manifest);
  memsim::write_manifest_csv(truth, manifest_out);

  std::cout << "wrote " << writer.records_written() << " records -> " << out_path << '\n'
            << "manifest -> " << manifest << '\n';
  write_run_manifest(out_path, "gen", {spec_path}, {out_path, manifest},
                     nlohmann::json::parse(memsim::workload_spec_to_json(spec)), spec.rng_seed);
  return kExitOk;
}

std::optional<memsim::LogLevel> parse_level_filter(const std::string& level) {
  if (level.empty()) return std::nullopt;
  return memsim::log_level_from_name(level);
}

template <typename WriteFn>
void write_csv_file(const std::string& path, WriteFn&& write) {
  std::ofstream out(path);
  if (!out) throw memsim::FormatError("cannot create " + path);
  write(out);
}

int cmd_analyze(const std::string& log_path, const std::string& level, const std::string& frequency_out,
                std::optional<uint64_t> summary_count, const std::string& summary_out,
                std::optional<std::string> stride_address, const std::string& stride_out,
                std::optional<uint64_t> bands_granularity, const std::string& bands_out,
                std::optional<uint64_t> scatter_start, std::optional<uint64_t> scatter_end,
                const std::string& scatter_out) {
  auto log = memsim::read_access_log(log_path);
  auto filter = parse_level_filter(level);
  std::vector<std::string> outputs;

  bool did_anything = false;
  memsim::FrequencyTable table;
  bool have_table = false;
  auto ensure_table = [&] {
    if (!have_table) {
      table = memsim::count_accesses(log, filter);
      have_table = true;
    }
  };

  if (!frequency_out.empty()) {
    ensure_table();
    write_csv_file(frequency_out, [&](std::ostream& out) { memsim::write_frequency_csv(table, out); });
    outputs.push_back(frequency_out);
    did_anything = true;
  }
  if (summary_count) {
    ensure_table();
    auto summary = memsim::summarize_frequencies(table, *summary_count);
    if (summary_out.empty()) {
      memsim::write_summary_csv(summary, std::cout);
    } else {
      write_csv_file(summary_out, [&](std::ostream& out) { memsim::write_summary_csv(summary, out); });
      outputs.push_back(summary_out);
    }
    did_anything = true;
  }
  if (stride_address) {
    uint64_t address = std::stoull(*stride_address, nullptr, 0);
    auto rows = memsim::stride_table_for_address(log, address, filter);
    if (stride_out.empty()) {
      memsim::write_stride_csv(rows, std::cout);
    } else {
      write_csv_file(stride_out, [&](std::ostream& out) { memsim::write_stride_csv(rows, out); });
      outputs.push_back(stride_out);
    }
    did_anything = true;
  }
  if (bands_granularity || !bands_out.empty()) {
    ensure_table();
    auto bands =
        memsim::classify_bands(table, bands_granularity.value_or(memsim::kDefaultBandGranularity));
    if (bands_out.empty()) {
      memsim::write_bands_csv(bands, std::cout);
    } else {
      write_csv_file(bands_out, [&](std::ostream& out) { memsim::write_bands_csv(bands, out); });
      outputs.push_back(bands_out);
    }
    did_anything = true;
  }
  if (scatter_start || scatter_end) {
    if (!scatter_start || !scatter_end)
      throw memsim::ConfigError("scatter needs both --scatter-start and --scatter-end");
    auto points = memsim::export_scatter(log, *scatter_start, *scatter_end, filter);
    if (scatter_out.empty()) {
      memsim::write_scatter_csv(points, std::cout);
    } else {
      write_csv_file(scatter_out, [&](std::ostream& out) { memsim::write_scatter_csv(points, out); });
      outputs.push_back(scatter_out);
    }
    did_anything = true;
  }

  if (!did_anything)
    throw memsim::ConfigError(
        "analyze: pick at least one of --frequency, --summary, --stride-address, --bands, --scatter");

  if (!outputs.empty()) {
    nlohmann::json resolved{{"level", level.empty() ? nlohmann::json{} : nlohmann::json{level}}};
    write_run_manifest(outputs.front(), "analyze", {log_path}, outputs, resolved);
  }
  return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Trace-driven cache hierarchy simulator and memory footprint toolkit"};
  app.set_version_flag("--version", kToolVersion);
  app.require_subcommand(1);

  // simulate
  auto* simulate = app.add_subcommand("simulate", "Run a trace through a cache hierarchy");
  std::vector<std::string> config_paths;
  uint64_t warmup = 0, simulation = 0;
  std::string report_path, log_path, trace_path;
  unsigned jobs = 1;
  simulate->add_option("--config", config_paths, "Hierarchy config JSON (repeatable)");
  simulate->add_option("--warmup-instructions", warmup, "Instructions simulated without counting");
  simulate->add_option("--simulation-instructions", simulation, "Instructions counted")->required();
  simulate->add_option("--report", report_path, "Write the machine-readable report CSV here");
  simulate->add_option("--log-accesses", log_path, "Write L1I/L1D/LLC demand-read log CSV here");
  simulate->add_option("--jobs", jobs, "Parallel workers when several configs are given");
  simulate->add_option("trace", trace_path, "Trace file (raw or .xz)")->required();

  // split
  auto* split = app.add_subcommand("split", "Split a trace at an instruction count");
  uint64_t split_at = 0;
  std::string split_input, split_prefix, split_suffix;
  split->add_option("--at", split_at, "Records in the prefix")->required();
  split->add_option("input", split_input, "Input trace")->required();
  split->add_option("prefix", split_prefix, "Output for the first part")->required();
  split->add_option("suffix", split_suffix, "Output for the remainder")->required();

  // gen
  auto* gen = app.add_subcommand("gen", "Generate a synthetic decoder workload trace");
  std::string gen_spec, gen_out, gen_manifest;
  std::optional<uint64_t> gen_seed;
  gen->add_option("--spec", gen_spec, "Workload spec JSON (defaults used when omitted)");
  gen->add_option("--out", gen_out, "Output trace path (.xz enables compression)")->required();
  gen->add_option("--manifest", gen_manifest, "Ground-truth manifest CSV path");
  gen->add_option("--seed", gen_seed, "Override the spec's rng seed");

  // analyze
  auto* analyze = app.add_subcommand("analyze", "Characterize an access log");
  std::string an_log, an_level, an_freq, an_summary_out, an_stride_out, an_bands_out, an_scatter_out;
  std::optional<uint64_t> an_summary_count, an_bands_gran, an_scatter_start, an_scatter_end;
  std::optional<std::string> an_stride_addr;
  analyze->add_option("--log", an_log, "Access log CSV from simulate --log-accesses")->required();
  analyze->add_option("--level", an_level, "Filter to one level: L1I, L1D or LLC");
  analyze->add_option("--frequency", an_freq, "Write per-address access counts CSV here");
  analyze->add_option("--summary", an_summary_count, "Bucket counts around this special count");
  analyze->add_option("--summary-out", an_summary_out, "Summary CSV path (stdout when omitted)");
  analyze->add_option("--stride-address", an_stride_addr, "Cycle stride table for this address");
  analyze->add_option("--stride-out", an_stride_out, "Stride CSV path (stdout when omitted)");
  analyze->add_option("--bands-granularity", an_bands_gran, "Band grouping granularity in bytes");
  analyze->add_option("--bands-out", an_bands_out, "Bands CSV path (stdout when omitted)");
  analyze->add_option("--scatter-start", an_scatter_start, "Scatter window start cycle (inclusive)");
  analyze->add_option("--scatter-end", an_scatter_end, "Scatter window end cycle (exclusive)");
  analyze->add_option("--scatter-out", an_scatter_out, "Scatter CSV path (stdout when omitted)");

  if (argc <= 1) {
    std::cerr << app.help();
    return kExitUsage;
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (simulate->parsed())
      return cmd_simulate(config_paths, warmup, simulation, report_path, log_path, jobs, trace_path);
    if (split->parsed()) return cmd_split(split_input, split_at, split_prefix, split_suffix);
    if (gen->parsed()) return cmd_gen(gen_spec, gen_out, gen_manifest, gen_seed);
    if (analyze->parsed())
      return cmd_analyze(an_log, an_level, an_freq, an_summary_count, an_summary_out, an_stride_addr,
                         an_stride_out, an_bands_gran, an_bands_out, an_scatter_start, an_scatter_end,
                         an_scatter_out);
  } catch (const memsim::TruncatedTraceError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSimulation;
  } catch (const memsim::SimulationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitSimulation;
  } catch (const memsim::FormatError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const memsim::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInput;
  }
  return kExitUsage;
}
