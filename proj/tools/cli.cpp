#include "cli.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "shiftid/errors.hpp"
#include "shiftid/identifier.hpp"
#include "shiftid/io.hpp"
#include "shiftid/simulator.hpp"

namespace shiftid::cli {
namespace {

struct RunConfig {
  double alpha = 0.05;
  std::size_t pca_k = stats::kDefaultPcaComponents;
  std::size_t permutations = 1000;
  std::size_t ref_size = 2000;
  bool no_calibrate = false;
  std::uint64_t seed = 0;
  std::string out;
  std::string format = "json";

  PipelineConfig pipeline() const {
    PipelineConfig config;
    config.detection.alpha = alpha;
    config.detection.pca_k = pca_k;
    config.detection.num_permutations = permutations;
    config.detection.seed = seed;
    config.ref_size = ref_size;
    config.calibrate = !no_calibrate;
    return config;
  }
};

struct SideArgs {
  std::string features;
  std::string outputs;
  std::string labels;
  std::string groups;

  io::BundlePaths paths() const {
    io::BundlePaths p{features, outputs, std::nullopt, std::nullopt};
    if (!labels.empty()) p.labels = labels;
    if (!groups.empty()) p.groups = groups;
    return p;
  }
};

void add_common(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--alpha", rc.alpha, "Significance level")->capture_default_str();
  cmd->add_option("--pca-k", rc.pca_k, "PCA components for MMD")->capture_default_str();
  cmd->add_option("--permutations", rc.permutations, "MMD permutations")->capture_default_str();
  cmd->add_option("--seed", rc.seed, "Master seed")->capture_default_str();
  cmd->add_option("--out", rc.out, "Write machine output here instead of stdout");
  cmd->add_option("--format", rc.format, "Output format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
}

void add_pipeline(CLI::App* cmd, RunConfig& rc) {
  cmd->add_option("--ref-size", rc.ref_size, "Resampled reference size")->capture_default_str();
  cmd->add_flag("--no-calibrate", rc.no_calibrate, "Skip temperature scaling");
}

void add_sides(CLI::App* cmd, SideArgs& ref, SideArgs& test, bool ref_labels_required) {
  cmd->add_option("--ref-features", ref.features, "Reference features (CSV or SHID)")->required();
  cmd->add_option("--ref-outputs", ref.outputs, "Reference softmax outputs CSV")->required();
  auto* labels = cmd->add_option("--ref-labels", ref.labels, "Reference labels CSV");
  if (ref_labels_required) labels->required();
  cmd->add_option("--ref-groups", ref.groups, "Reference group ids CSV");
  cmd->add_option("--test-features", test.features, "Test features (CSV or SHID)")->required();
  cmd->add_option("--test-outputs", test.outputs, "Test softmax outputs CSV")->required();
  cmd->add_option("--test-groups", test.groups, "Test group ids CSV");
}

std::string fmt(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<std::string>& items, char sep) {
  std::string s;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) s += sep;
    s += items[i];
  }
  return s;
}

std::string detection_csv(const DetectionOutcome& d) {
  std::vector<std::string> head{"alpha", "combined_decision", "bbsd_decision", "mmd_decision", "mmd_p_value",
                                "mmd_statistic"};
  std::vector<std::string> row{fmt(d.alpha),          std::string(to_string(d.combined_decision)),
                               std::string(to_string(d.bbsd_decision)), std::string(to_string(d.mmd_decision)),
                               fmt(d.mmd_p_value),    fmt(d.mmd_statistic)};
  for (std::size_t c = 0; c < d.bbsd_p_values.size(); ++c) {
    head.push_back("bbsd_p" + std::to_string(c));
    row.push_back(fmt(d.bbsd_p_values[c]));
  }
  return join(head, ',') + "\n" + join(row, ',') + "\n";
}

std::string report_csv(const ShiftReport& r) {
  std::vector<std::string> head{"verdict", "combined_decision", "mmd_p_value", "post_adjust_mmd_p", "seed"};
  std::vector<std::string> row{std::string(to_string(r.verdict)),
                               std::string(to_string(r.detection.combined_decision)),
                               fmt(r.detection.mmd_p_value),
                               r.post_adjust_mmd_p ? fmt(*r.post_adjust_mmd_p) : "",
                               std::to_string(r.provenance.seeds.master)};
  for (std::size_t c = 0; c < r.detection.bbsd_p_values.size(); ++c) {
    head.push_back("bbsd_p" + std::to_string(c));
    row.push_back(fmt(r.detection.bbsd_p_values[c]));
  }
  for (std::size_t c = 0; c < r.provenance.num_classes; ++c) {
    head.push_back("q_hat" + std::to_string(c));
    row.push_back(r.prevalence_estimate ? fmt(r.prevalence_estimate->q_hat[c]) : "");
  }
  head.emplace_back("flags");
  row.push_back(join(r.flags, ';'));
  return join(head, ',') + "\n" + join(row, ',') + "\n";
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot open '" + path + "' for writing");
  f << text;
  if (!f) throw Error("failed writing '" + path + "'");
}

void emit(const RunConfig& rc, std::ostream& out, const std::string& text) {
  if (rc.out.empty()) {
    out << text;
  } else {
    write_text(rc.out, text);
  }
}

std::pair<DatasetBundle, DatasetBundle> load_sides(const SideArgs& ref, const SideArgs& test) {
  return {io::load_bundle(ref.paths(), "reference"), io::load_bundle(test.paths(), "test")};
}

int verdict_code(Verdict v) {
  switch (v) {
    case Verdict::no_shift: return kExitOk;
    case Verdict::prevalence: return kExitPrevalence;
    case Verdict::covariate: return kExitCovariate;
    case Verdict::mixed: return kExitMixed;
  }
  return kExitInputError;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dataset shift detection and identification"};
  app.require_subcommand(1);

  RunConfig rc;
  SideArgs ref, test;
  std::vector<std::string> spec_paths;
  std::string spec_path;
  std::size_t trials = 200;
  std::size_t threads = 1;
  bool binary = false;

  auto* detect = app.add_subcommand("detect", "Run the Duo detector; exit 0 = no shift, 10 = shift");
  add_common(detect, rc);
  add_sides(detect, ref, test, false);

  auto* identify = app.add_subcommand("identify", "Detect and identify the shift type; exit 0/11/12/13");
  add_common(identify, rc);
  add_pipeline(identify, rc);
  add_sides(identify, ref, test, true);

  auto* simulate = app.add_subcommand("simulate", "Evaluate the pipeline on simulator specs");
  add_common(simulate, rc);
  add_pipeline(simulate, rc);
  simulate->add_option("--spec", spec_paths, "Spec file (TOML or JSON); repeatable")->required();
  simulate->add_option("--trials", trials, "Trials per spec")->capture_default_str();
  simulate->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();

  auto* generate = app.add_subcommand("generate", "Export one simulator draw as reference/test files");
  generate->add_option("--spec", spec_path, "Spec file (TOML or JSON)")->required();
  generate->add_option("--seed", rc.seed, "Draw seed")->capture_default_str();
  generate->add_option("--out", rc.out, "Output prefix")->required();
  generate->add_flag("--binary", binary, "Write features in the SHID binary format");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }

  try {
    if (detect->parsed()) {
      auto [r, t] = load_sides(ref, test);
      auto config = rc.pipeline().detection;
      const auto run = run_duo(r, t, config);
      if (!run.pca_warning.empty()) err << "warning: " << run.pca_warning << "\n";
      nlohmann::json j = to_json(run.outcome);
      j["version"] = kReportVersion;
      j["seed"] = rc.seed;
      emit(rc, out, rc.format == "csv" ? detection_csv(run.outcome) : j.dump(2) + "\n");
      return run.outcome.combined_decision == Decision::shift ? kExitShift : kExitOk;
    }
    if (identify->parsed()) {
      auto [r, t] = load_sides(ref, test);
      const auto report = identify_shift(r, t, rc.pipeline());
      for (const auto& w : report.warnings) err << "warning: " << w << "\n";
      emit(rc, out, rc.format == "csv" ? report_csv(report) : to_json(report).dump(2) + "\n");
      return verdict_code(report.verdict);
    }
    if (simulate->parsed()) {
      const auto config = rc.pipeline();
      std::vector<sim::RateTable> tables;
      for (const auto& path : spec_paths) {
        const auto spec = sim::load_spec(path);
        err << "simulating " << spec.name << " (" << trials << " trials)\n";
        tables.push_back(sim::evaluate(spec, config, {trials, rc.seed, threads}));
      }
      nlohmann::json j = {{"version", kReportVersion}, {"tables", nlohmann::json::array()}};
      for (const auto& t : tables) j["tables"].push_back(sim::to_json(t));
      const std::string json_text = j.dump(2) + "\n";
      const std::string csv_text = sim::rate_tables_csv(tables);
      if (rc.out.empty()) {
        out << (rc.format == "csv" ? csv_text : json_text);
      } else {
        write_text(rc.out + ".csv", csv_text);
        write_text(rc.out + ".json", json_text);
      }
      for (const auto& t : tables) {
        err << t.spec_name << ": truth=" << to_string(t.truth) << " accuracy=" << fmt(t.accuracy.rate)
            << " no_shift=" << fmt(t.verdict_no_shift.rate) << " prevalence=" << fmt(t.verdict_prevalence.rate)
            << " covariate=" << fmt(t.verdict_covariate.rate) << " mixed=" << fmt(t.verdict_mixed.rate)
            << " detect(bbsd/mmd/duo)=" << fmt(t.detect_bbsd.rate) << "/" << fmt(t.detect_mmd.rate) << "/"
            << fmt(t.detect_duo.rate) << "\n";
      }
      return kExitOk;
    }
    if (generate->parsed()) {
      const auto spec = sim::load_spec(spec_path);
      const auto draw = sim::generate(spec, rc.seed);
      const auto format = binary ? io::FeatureFormat::binary : io::FeatureFormat::csv;
      io::save_bundle(draw.ref, rc.out + "_ref", format);
      io::save_bundle(draw.test, rc.out + "_test", format);
      err << "wrote " << spec.name << " draw (truth " << to_string(draw.truth) << ") to " << rc.out << "_*\n";
      return kExitOk;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitInputError;
  }
  return kExitInputError;
}

}  // namespace shiftid::cli
