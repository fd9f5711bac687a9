#include "shiftid/simulator.hpp"

#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "shiftid/errors.hpp"
#include "shiftid/random.hpp"

namespace shiftid::sim {

using nlohmann::json;

namespace {

constexpr double kSameTolerance = 1e-12;

bool differs(const LabelDistribution& a, const LabelDistribution& b) {
  if (a.size() != b.size()) return true;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::abs(a[i] - b[i]) > kSameTolerance) return true;
  }
  return false;
}

RowMatrix matrix_from_json(const json& j, const char* what) {
  if (!j.is_array() || j.empty() || !j.front().is_array()) {
    throw InvalidSpec(std::string(what) + " must be a non-empty array of arrays");
  }
  const auto rows = j.size();
  const auto cols = j.front().size();
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    if (!j[r].is_array() || j[r].size() != cols) throw InvalidSpec(std::string(what) + " rows differ in length");
    for (std::size_t c = 0; c < cols; ++c) {
      if (!j[r][c].is_number()) throw InvalidSpec(std::string(what) + " must hold numbers");
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = j[r][c].get<double>();
    }
  }
  return m;
}

json matrix_to_json(const RowMatrix& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(std::move(row));
  }
  return out;
}

LabelDistribution distribution_from_json(const json& j, const char* what) {
  if (!j.is_array()) throw InvalidSpec(std::string(what) + " must be an array");
  std::vector<double> p;
  for (const auto& v : j) {
    if (!v.is_number()) throw InvalidSpec(std::string(what) + " must hold numbers");
    p.push_back(v.get<double>());
  }
  try {
    LabelDistribution checked(p);  // must already sum to one
    return LabelDistribution::normalized(std::move(p));
  } catch (const ValidationError& e) {
    throw InvalidSpec(std::string(what) + ": " + e.what());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw InvalidSpec(std::string("spec field '") + key + "' has the wrong type");
  }
}

// Draws one side (reference or test) of a scenario.
struct SideDraw {
  RowMatrix features;
  std::vector<int> labels;
  std::vector<std::size_t> subgroups;
  std::vector<GroupId> groups;
};

SideDraw draw_side(const SimSpec& spec, const LabelDistribution& prior, const std::optional<LabelDistribution>& mix,
                   std::size_t n, Rng& rng) {
  SideDraw out;
  const auto d = static_cast<Eigen::Index>(spec.feature_dim);
  out.features.resize(static_cast<Eigen::Index>(n), d);
  out.labels.reserve(n);
  out.subgroups.reserve(n);
  out.groups.reserve(n);
  const double noise = std::sqrt(spec.class_cov_scale);
  const std::size_t groups = n / spec.group_size;
  std::size_t row = 0;
  for (std::size_t g = 0; g < groups; ++g) {
    const auto y = sample_categorical(rng, prior.p());
    const std::size_t s = mix ? sample_categorical(rng, mix->p()) : 0;
    for (std::size_t k = 0; k < spec.group_size; ++k, ++row) {
      auto x = out.features.row(static_cast<Eigen::Index>(row));
      x = spec.class_means.row(static_cast<Eigen::Index>(y));
      if (spec.num_subgroups() > 0) x += spec.subgroup_offsets.row(static_cast<Eigen::Index>(s));
      for (Eigen::Index c = 0; c < d; ++c) x(c) += noise * standard_normal(rng);
      out.labels.push_back(static_cast<int>(y));
      out.subgroups.push_back(s);
      out.groups.push_back(static_cast<GroupId>(g));
    }
  }
  return out;
}

// Bayes posterior of the class-conditional Gaussians under the reference
// prior: the fixed "deployed" classifier.
RowMatrix posteriors(const SimSpec& spec, const RowMatrix& features) {
  const auto c = static_cast<Eigen::Index>(spec.num_classes);
  RowMatrix out(features.rows(), c);
  for (Eigen::Index x = 0; x < features.rows(); ++x) {
    for (Eigen::Index k = 0; k < c; ++k) {
      const double dist = (features.row(x) - spec.class_means.row(k)).squaredNorm();
      out(x, k) = std::log(spec.ref_prior[static_cast<std::size_t>(k)]) - dist / (2.0 * spec.class_cov_scale);
    }
    auto row = out.row(x);
    row = (row.array() - row.maxCoeff()).exp();
    row /= row.sum();
    if (spec.posterior_model == PosteriorModel::tempered) {
      row = row.array().pow(spec.posterior_power);
      row /= row.sum();
    }
  }
  return out;
}

DatasetBundle to_bundle(const SimSpec& spec, SideDraw& side, std::string name, bool with_labels) {
  std::optional<std::vector<GroupId>> groups;
  if (spec.group_size > 1) groups = side.groups;
  RowMatrix probs = posteriors(spec, side.features);
  DatasetBundle bundle{FeatureTable(std::move(side.features), std::move(groups)), OutputTable(std::move(probs)),
                       std::nullopt, std::move(name)};
  if (with_labels) bundle.labels = LabelVector(side.labels, spec.num_classes);
  return bundle;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

json rate_json(const Rate& r) {
  return {{"count", r.count}, {"trials", r.trials}, {"rate", r.rate}, {"wilson_low", r.low}, {"wilson_high", r.high}};
}

// --- TOML subset -----------------------------------------------------------

class TomlReader {
 public:
  explicit TomlReader(std::string_view text) : text_(text) {}

  json parse() {
    json root = json::object();
    json* table = &root;
    while (true) {
      skip_blank_lines();
      if (at_end()) break;
      if (peek() == '[') {
        ++pos_;
        skip_inline_space();
        const auto name = read_key();
        skip_inline_space();
        expect(']');
        table = &root[name];
        if (!table->is_object()) *table = json::object();
      } else {
        const auto key = read_key();
        skip_inline_space();
        expect('=');
        skip_inline_space();
        if (table->contains(key)) fail("duplicate key '" + key + "'");
        (*table)[key] = read_value();
      }
      skip_inline_space();
      skip_comment();
      if (!at_end() && peek() != '\n') fail("unexpected trailing characters");
    }
    return root;
  }

 private:
  bool at_end() const { return pos_ >= text_.size(); }
  char peek() const { return text_[pos_]; }

  [[noreturn]] void fail(const std::string& message) const {
    std::size_t line = 1;
    for (std::size_t i = 0; i < pos_ && i < text_.size(); ++i) line += text_[i] == '\n';
    throw ParseError("spec line " + std::to_string(line) + ": " + message);
  }

  void expect(char c) {
    if (at_end() || peek() != c) fail(std::string("expected '") + c + "'");
    ++pos_;
  }

  void skip_inline_space() {
    while (!at_end() && (peek() == ' ' || peek() == '\t' || peek() == '\r')) ++pos_;
  }

  void skip_comment() {
    if (!at_end() && peek() == '#') {
      while (!at_end() && peek() != '\n') ++pos_;
    }
  }

  void skip_blank_lines() {
    while (!at_end()) {
      skip_inline_space();
      skip_comment();
      if (!at_end() && peek() == '\n') {
        ++pos_;
      } else {
        break;
      }
    }
  }

  std::string read_key() {
    const auto start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '-')) ++pos_;
    if (pos_ == start) fail("expected a key");
    return std::string(text_.substr(start, pos_ - start));
  }

  json read_value() {
    if (at_end()) fail("missing value");
    const char c = peek();
    if (c == '"') return read_string();
    if (c == '[') return read_array();
    if (text_.substr(pos_, 4) == "true") {
      pos_ += 4;
      return true;
    }
    if (text_.substr(pos_, 5) == "false") {
      pos_ += 5;
      return false;
    }
    return read_number();
  }

  json read_string() {
    ++pos_;
    std::string out;
    while (!at_end() && peek() != '"') {
      if (peek() == '\n') fail("unterminated string");
      if (peek() == '\\') {
        ++pos_;
        if (at_end()) fail("unterminated escape");
        const char e = peek();
        out.push_back(e == 'n' ? '\n' : e == 't' ? '\t' : e);
      } else {
        out.push_back(peek());
      }
      ++pos_;
    }
    expect('"');
    return out;
  }

  json read_array() {
    ++pos_;
    json arr = json::array();
    while (true) {
      skip_blank_lines();
      if (at_end()) fail("unterminated array");
      if (peek() == ']') {
        ++pos_;
        return arr;
      }
      arr.push_back(read_value());
      skip_blank_lines();
      if (at_end()) fail("unterminated array");
      if (peek() == ',') {
        ++pos_;
      } else if (peek() != ']') {
        fail("expected ',' or ']' in array");
      }
    }
  }

  json read_number() {
    const auto start = pos_;
    while (!at_end() && (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '.' || peek() == '-' ||
                         peek() == '+' || peek() == '_')) {
      ++pos_;
    }
    std::string token(text_.substr(start, pos_ - start));
    std::erase(token, '_');
    if (token.empty()) fail("expected a value");
    if (token.front() == '+') token.erase(0, 1);
    const bool is_float = token.find_first_of(".eE") != std::string::npos || token == "inf" || token == "nan";
    if (is_float) {
      double v = 0.0;
      auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
      if (ec != std::errc() || ptr != token.data() + token.size()) fail("bad number '" + token + "'");
      return v;
    }
    std::int64_t v = 0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
    if (ec != std::errc() || ptr != token.data() + token.size()) fail("bad value '" + token + "'");
    return v;
  }

  std::string_view text_;
  std::size_t pos_ = 0;
};

}  // namespace

void SimSpec::validate() const {
  if (num_classes < 2) throw InvalidSpec("num_classes must be at least 2");
  if (feature_dim < 1) throw InvalidSpec("feature_dim must be at least 1");
  if (static_cast<std::size_t>(class_means.rows()) != num_classes ||
      static_cast<std::size_t>(class_means.cols()) != feature_dim) {
    throw InvalidSpec("class_means must be num_classes x feature_dim");
  }
  if (!(class_cov_scale > 0.0) || !std::isfinite(class_cov_scale)) throw InvalidSpec("class_cov_scale must be positive");
  if (ref_prior.size() != num_classes || test_prior.size() != num_classes) {
    throw InvalidSpec("priors must have num_classes entries");
  }
  const std::size_t s = num_subgroups();
  if (s > 0) {
    if (static_cast<std::size_t>(subgroup_offsets.cols()) != feature_dim) {
      throw InvalidSpec("subgroup_offsets must have feature_dim columns");
    }
    if (!ref_subgroup_mix || !test_subgroup_mix) throw InvalidSpec("subgroups need both subgroup mixes");
    if (ref_subgroup_mix->size() != s || test_subgroup_mix->size() != s) {
      throw InvalidSpec("subgroup mixes must have one entry per subgroup");
    }
  } else if (ref_subgroup_mix || test_subgroup_mix) {
    throw InvalidSpec("subgroup mixes given without subgroup offsets");
  }
  if (posterior_model == PosteriorModel::tempered && !(posterior_power > 0.0)) {
    throw InvalidSpec("posterior_power must be positive");
  }
  if (group_size < 1) throw InvalidSpec("group_size must be at least 1");
  if (n_ref < 2 || n_test < 2) throw InvalidSpec("n_ref and n_test must be at least 2");
  if (n_ref % group_size != 0 || n_test % group_size != 0) {
    throw InvalidSpec("group_size must divide n_ref and n_test");
  }
}

Verdict ground_truth(const SimSpec& spec) {
  const bool prevalence = differs(spec.ref_prior, spec.test_prior);
  const bool covariate =
      spec.ref_subgroup_mix && spec.test_subgroup_mix && differs(*spec.ref_subgroup_mix, *spec.test_subgroup_mix);
  if (prevalence && covariate) return Verdict::mixed;
  if (prevalence) return Verdict::prevalence;
  if (covariate) return Verdict::covariate;
  return Verdict::no_shift;
}

SimSpec spec_from_json(const json& j) {
  if (!j.is_object()) throw InvalidSpec("spec must be an object");
  SimSpec spec;
  spec.name = get_or<std::string>(j, "name", spec.name);
  spec.num_classes = get_or<std::size_t>(j, "num_classes", 0);
  spec.feature_dim = get_or<std::size_t>(j, "feature_dim", 0);
  if (spec.num_classes < 2 || spec.feature_dim < 1) throw InvalidSpec("num_classes >= 2 and feature_dim >= 1 required");
  const auto c = static_cast<Eigen::Index>(spec.num_classes);
  const auto d = static_cast<Eigen::Index>(spec.feature_dim);

  if (j.contains("class_means")) {
    spec.class_means = matrix_from_json(j.at("class_means"), "class_means");
  } else {
    const double separation = get_or<double>(j, "class_separation", 2.0);
    if (d < c) throw InvalidSpec("class_separation needs feature_dim >= num_classes");
    spec.class_means = RowMatrix::Zero(c, d);
    for (Eigen::Index k = 0; k < c; ++k) spec.class_means(k, k) = separation;
  }
  spec.class_cov_scale = get_or<double>(j, "class_cov_scale", 1.0);

  if (!j.contains("ref_prior") || !j.contains("test_prior")) throw InvalidSpec("ref_prior and test_prior are required");
  spec.ref_prior = distribution_from_json(j.at("ref_prior"), "ref_prior");
  spec.test_prior = distribution_from_json(j.at("test_prior"), "test_prior");
  if (j.contains("ref_subgroup_mix")) spec.ref_subgroup_mix = distribution_from_json(j.at("ref_subgroup_mix"), "ref_subgroup_mix");
  if (j.contains("test_subgroup_mix")) {
    spec.test_subgroup_mix = distribution_from_json(j.at("test_subgroup_mix"), "test_subgroup_mix");
  }

  if (j.contains("subgroup_offsets")) {
    spec.subgroup_offsets = matrix_from_json(j.at("subgroup_offsets"), "subgroup_offsets");
  } else if (j.contains("subgroup_shift")) {
    if (!spec.ref_subgroup_mix) throw InvalidSpec("subgroup_shift needs ref_subgroup_mix");
    const auto s = static_cast<Eigen::Index>(spec.ref_subgroup_mix->size());
    const double shift = get_or<double>(j, "subgroup_shift", 0.0);
    const auto dims = static_cast<Eigen::Index>(get_or<std::size_t>(j, "subgroup_shift_dims", 1));
    if (c + (s - 1) * dims > d) throw InvalidSpec("subgroup shift blocks do not fit in feature_dim");
    spec.subgroup_offsets = RowMatrix::Zero(s, d);
    for (Eigen::Index g = 1; g < s; ++g) spec.subgroup_offsets.row(g).segment(c + (g - 1) * dims, dims).setConstant(shift);
  } else {
    spec.subgroup_offsets = RowMatrix::Zero(0, d);
  }

  const auto model = get_or<std::string>(j, "posterior_model", "exact_bayes");
  if (model == "exact_bayes") {
    spec.posterior_model = PosteriorModel::exact_bayes;
  } else if (model == "tempered") {
    spec.posterior_model = PosteriorModel::tempered;
    spec.posterior_power = get_or<double>(j, "posterior_power", 1.0);
  } else {
    throw InvalidSpec("posterior_model must be exact_bayes or tempered");
  }
  spec.n_ref = get_or<std::size_t>(j, "n_ref", spec.n_ref);
  spec.n_test = get_or<std::size_t>(j, "n_test", spec.n_test);
  spec.group_size = get_or<std::size_t>(j, "group_size", 1);
  spec.validate();
  return spec;
}

json to_json(const SimSpec& spec) {
  json j = {
      {"name", spec.name},
      {"num_classes", spec.num_classes},
      {"feature_dim", spec.feature_dim},
      {"class_means", matrix_to_json(spec.class_means)},
      {"class_cov_scale", spec.class_cov_scale},
      {"ref_prior", spec.ref_prior.p()},
      {"test_prior", spec.test_prior.p()},
      {"posterior_model", spec.posterior_model == PosteriorModel::tempered ? "tempered" : "exact_bayes"},
      {"n_ref", spec.n_ref},
      {"n_test", spec.n_test},
      {"group_size", spec.group_size},
  };
  if (spec.posterior_model == PosteriorModel::tempered) j["posterior_power"] = spec.posterior_power;
  if (spec.num_subgroups() > 0) {
    j["subgroup_offsets"] = matrix_to_json(spec.subgroup_offsets);
    j["ref_subgroup_mix"] = spec.ref_subgroup_mix->p();
    j["test_subgroup_mix"] = spec.test_subgroup_mix->p();
  }
  return j;
}

json parse_toml(std::string_view text) { return TomlReader(text).parse(); }

SimSpec load_spec(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open spec " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  const std::string text = ss.str();
  json j;
  if (path.extension() == ".json") {
    try {
      j = json::parse(text);
    } catch (const json::parse_error& e) {
      throw ParseError(path.string() + ": " + e.what());
    }
  } else {
    j = parse_toml(text);
  }
  if (!j.contains("name")) j["name"] = path.stem().string();
  return spec_from_json(j);
}

SimDraw generate(const SimSpec& spec, std::uint64_t seed) {
  spec.validate();
  Rng ref_rng = make_rng(derive_seed(seed, "ref"));
  Rng test_rng = make_rng(derive_seed(seed, "test"));
  auto ref_side = draw_side(spec, spec.ref_prior, spec.ref_subgroup_mix, spec.n_ref, ref_rng);
  auto test_side = draw_side(spec, spec.test_prior, spec.test_subgroup_mix, spec.n_test, test_rng);
  SimDraw draw;
  draw.test_labels = LabelVector(test_side.labels, spec.num_classes);
  draw.test_subgroups = test_side.subgroups;
  draw.ref = to_bundle(spec, ref_side, spec.name + "/ref", true);
  draw.test = to_bundle(spec, test_side, spec.name + "/test", false);
  draw.truth = ground_truth(spec);
  return draw;
}

Rate wilson_rate(std::size_t count, std::size_t trials, double z) {
  Rate r;
  r.count = count;
  r.trials = trials;
  if (trials == 0) {
    r.high = 1.0;
    return r;
  }
  const double n = static_cast<double>(trials);
  const double p = static_cast<double>(count) / n;
  const double z2 = z * z;
  const double denom = 1.0 + z2 / n;
  const double center = (p + z2 / (2.0 * n)) / denom;
  const double half = z * std::sqrt(p * (1.0 - p) / n + z2 / (4.0 * n * n)) / denom;
  r.rate = p;
  r.low = std::max(0.0, center - half);
  r.high = std::min(1.0, center + half);
  return r;
}

const Rate& RateTable::verdict_rate(Verdict v) const {
  switch (v) {
    case Verdict::no_shift: return verdict_no_shift;
    case Verdict::prevalence: return verdict_prevalence;
    case Verdict::covariate: return verdict_covariate;
    case Verdict::mixed: return verdict_mixed;
  }
  return verdict_no_shift;
}

RateTable evaluate(const SimSpec& spec, const PipelineConfig& config, const EvaluateOptions& options) {
  spec.validate();
  config.validate();
  if (options.trials < 1) throw ValidationError("evaluate: trials must be at least 1");

  std::vector<TrialRecord> records(options.trials);
  auto run_trial = [&](std::size_t t) {
    const std::uint64_t trial_seed = derive_seed(options.seed, static_cast<std::uint64_t>(t));
    const auto draw = generate(spec, derive_seed(trial_seed, "generate"));
    PipelineConfig cfg = config;
    cfg.detection.seed = derive_seed(trial_seed, "pipeline");
    const auto report = identify_shift(draw.ref, draw.test, cfg);
    records[t] = {trial_seed, report.verdict, report.detection.bbsd_decision, report.detection.mmd_decision,
                  report.detection.combined_decision};
  };

  std::size_t threads = options.threads == 0 ? std::max(1u, std::thread::hardware_concurrency()) : options.threads;
  threads = std::min(threads, options.trials);
  if (threads <= 1) {
    for (std::size_t t = 0; t < options.trials; ++t) run_trial(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < options.trials; t = next++) {
          try {
            run_trial(t);
          } catch (...) {
            std::lock_guard lock(failure_mutex);
            if (!failure) failure = std::current_exception();
          }
        }
      });
    }
    pool.clear();
    if (failure) std::rethrow_exception(failure);
  }

  RateTable table;
  table.spec_name = spec.name;
  table.truth = ground_truth(spec);
  table.seed = options.seed;
  table.trials = options.trials;
  table.config = config;
  table.spec = spec;
  std::size_t counts[4] = {0, 0, 0, 0};
  std::size_t bbsd = 0, mmd = 0, duo = 0;
  for (const auto& r : records) {
    ++counts[static_cast<int>(r.verdict)];
    bbsd += r.bbsd == Decision::shift;
    mmd += r.mmd == Decision::shift;
    duo += r.duo == Decision::shift;
  }
  const auto n = options.trials;
  table.verdict_no_shift = wilson_rate(counts[0], n);
  table.verdict_prevalence = wilson_rate(counts[1], n);
  table.verdict_covariate = wilson_rate(counts[2], n);
  table.verdict_mixed = wilson_rate(counts[3], n);
  table.accuracy = wilson_rate(counts[static_cast<int>(table.truth)], n);
  table.detect_bbsd = wilson_rate(bbsd, n);
  table.detect_mmd = wilson_rate(mmd, n);
  table.detect_duo = wilson_rate(duo, n);
  table.records = std::move(records);
  return table;
}

json to_json(const RateTable& table) {
  json trials = json::array();
  for (const auto& r : table.records) {
    trials.push_back({{"seed", r.seed},
                      {"verdict", to_string(r.verdict)},
                      {"bbsd", to_string(r.bbsd)},
                      {"mmd", to_string(r.mmd)},
                      {"duo", to_string(r.duo)}});
  }
  return {
      {"version", kReportVersion},
      {"spec_name", table.spec_name},
      {"truth", to_string(table.truth)},
      {"seed", table.seed},
      {"trials", table.trials},
      {"config",
       {{"alpha", table.config.detection.alpha},
        {"pca_k", table.config.detection.pca_k},
        {"permutations", table.config.detection.num_permutations},
        {"ref_size", table.config.ref_size},
        {"calibrate", table.config.calibrate}}},
      {"spec", to_json(table.spec)},
      {"rates",
       {{"verdict_no_shift", rate_json(table.verdict_no_shift)},
        {"verdict_prevalence", rate_json(table.verdict_prevalence)},
        {"verdict_covariate", rate_json(table.verdict_covariate)},
        {"verdict_mixed", rate_json(table.verdict_mixed)},
        {"accuracy", rate_json(table.accuracy)},
        {"detect_bbsd", rate_json(table.detect_bbsd)},
        {"detect_mmd", rate_json(table.detect_mmd)},
        {"detect_duo", rate_json(table.detect_duo)}}},
      {"per_trial", std::move(trials)},
  };
}

std::string rate_tables_csv(const std::vector<RateTable>& tables) {
  static const char* kMetrics[] = {"verdict_no_shift", "verdict_prevalence", "verdict_covariate", "verdict_mixed",
                                   "accuracy",         "detect_bbsd",        "detect_mmd",        "detect_duo"};
  std::ostringstream os;
  os << "spec,truth,seed,trials,alpha,pca_k,permutations,ref_size,calibrate,n_ref,n_test,num_classes,feature_dim,"
        "group_size";
  for (const char* m : kMetrics) os << ',' << m << "_count," << m << "_rate," << m << "_low," << m << "_high";
  os << '\n';
  for (const auto& t : tables) {
    const Rate* rates[] = {&t.verdict_no_shift, &t.verdict_prevalence, &t.verdict_covariate, &t.verdict_mixed,
                           &t.accuracy,         &t.detect_bbsd,        &t.detect_mmd,        &t.detect_duo};
    os << t.spec_name << ',' << to_string(t.truth) << ',' << t.seed << ',' << t.trials << ','
       << format_double(t.config.detection.alpha) << ',' << t.config.detection.pca_k << ','
       << t.config.detection.num_permutations << ',' << t.config.ref_size << ',' << (t.config.calibrate ? 1 : 0)
       << ',' << t.spec.n_ref << ',' << t.spec.n_test << ',' << t.spec.num_classes << ',' << t.spec.feature_dim
       << ',' << t.spec.group_size;
    for (const Rate* r : rates) {
      os << ',' << r->count << ',' << format_double(r->rate) << ',' << format_double(r->low) << ','
         << format_double(r->high);
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace shiftid::sim
