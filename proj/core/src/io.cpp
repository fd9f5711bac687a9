#include "shiftid/io.hpp"

#include <array>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "shiftid/errors.hpp"

namespace shiftid::io {

namespace fs = std::filesystem;

namespace {

template <typename T>
void put_le(std::string& out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  using U = std::make_unsigned_t<T>;
  U u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) u |= static_cast<U>(static_cast<U>(p[i]) << (8 * i));
  return static_cast<T>(u);
}

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool has_magic(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  std::array<char, 4> head{};
  in.read(head.data(), head.size());
  return in.gcount() == 4 && std::memcmp(head.data(), kMagic, 4) == 0;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    cells.push_back(trim(line.substr(start, pos == std::string_view::npos ? line.npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return cells;
}

struct RawCsv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

RawCsv read_raw_csv(const fs::path& path) {
  const std::string text = slurp(path);
  std::string_view rest(text);
  if (rest.size() >= 3 && static_cast<unsigned char>(rest[0]) == 0xEF &&
      static_cast<unsigned char>(rest[1]) == 0xBB && static_cast<unsigned char>(rest[2]) == 0xBF) {
    rest.remove_prefix(3);  // UTF-8 BOM
  }
  RawCsv raw;
  bool have_header = false;
  std::size_t line_no = 0;
  while (!rest.empty()) {
    auto nl = rest.find('\n');
    std::string_view line = rest.substr(0, nl);
    rest.remove_prefix(nl == std::string_view::npos ? rest.size() : nl + 1);
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_commas(line);
    if (!have_header) {
      for (auto c : cells) raw.header.emplace_back(c);
      have_header = true;
      continue;
    }
    if (cells.size() != raw.header.size()) {
      throw ParseError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                       std::to_string(raw.header.size()) + " fields, got " + std::to_string(cells.size()));
    }
    auto& row = raw.rows.emplace_back();
    row.reserve(cells.size());
    for (auto c : cells) row.emplace_back(c);
  }
  if (!have_header) throw ParseError(path.string() + ": missing header row");
  return raw;
}

double parse_double(std::string_view s, const fs::path& path, std::size_t row) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(path.string() + ": row " + std::to_string(row + 1) + ": not a number: '" + std::string(s) + "'");
  }
  return v;
}

std::int64_t parse_int(std::string_view s, const fs::path& path, std::size_t row) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  std::int64_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw ParseError(path.string() + ": row " + std::to_string(row + 1) + ": not an integer: '" + std::string(s) + "'");
  }
  return v;
}

void check_header(const std::vector<std::string>& header, const std::vector<std::string>& expected,
                  const fs::path& path) {
  if (header != expected) {
    std::string want;
    for (const auto& h : expected) want += (want.empty() ? "" : ",") + h;
    if (want.size() > 40) want = expected.front() + ".." + expected.back();
    throw ParseError(path.string() + ": unexpected header, want " + want);
  }
}

std::vector<std::int64_t> read_int_column(const fs::path& path, const std::string& column) {
  auto raw = read_raw_csv(path);
  check_header(raw.header, {column}, path);
  std::vector<std::int64_t> out;
  out.reserve(raw.rows.size());
  for (std::size_t r = 0; r < raw.rows.size(); ++r) out.push_back(parse_int(raw.rows[r][0], path, r));
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ParseError("cannot write " + path.string());
  out << text;
  if (!out) throw ParseError("write failed: " + path.string());
}

}  // namespace

RowMatrix read_binary(const fs::path& path) {
  const std::string bytes = slurp(path);
  if (bytes.size() < kHeaderBytes) throw ParseError(path.string() + ": truncated header");
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data());
  if (std::memcmp(p, kMagic, 4) != 0) throw ParseError(path.string() + ": bad magic");
  const auto version = get_le<std::uint16_t>(p + 4);
  if (version != kFormatVersion) throw ParseError(path.string() + ": unsupported version " + std::to_string(version));
  const auto dtype = p[6];
  if (dtype != static_cast<unsigned char>(DType::f32) && dtype != static_cast<unsigned char>(DType::f64)) {
    throw ParseError(path.string() + ": unknown dtype code " + std::to_string(dtype));
  }
  if (p[7] != 0) throw ParseError(path.string() + ": reserved byte must be 0");
  const auto rows = get_le<std::uint64_t>(p + 8);
  const auto cols = get_le<std::uint64_t>(p + 16);
  const std::size_t width = dtype == static_cast<unsigned char>(DType::f32) ? 4 : 8;
  if (cols != 0 && rows > (bytes.size() / cols)) throw ParseError(path.string() + ": payload size mismatch");
  if (bytes.size() - kHeaderBytes != rows * cols * width) {
    throw ParseError(path.string() + ": payload size mismatch");
  }
  RowMatrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  const unsigned char* payload = p + kHeaderBytes;
  double* dst = m.data();
  for (std::size_t i = 0; i < rows * cols; ++i) {
    if (width == 4) {
      dst[i] = static_cast<double>(std::bit_cast<float>(get_le<std::uint32_t>(payload + 4 * i)));
    } else {
      dst[i] = std::bit_cast<double>(get_le<std::uint64_t>(payload + 8 * i));
    }
  }
  return m;
}

void write_binary(const fs::path& path, const RowMatrix& values, DType dtype) {
  std::string out;
  const std::size_t n = static_cast<std::size_t>(values.size());
  out.reserve(kHeaderBytes + n * 8);
  out.append(kMagic, 4);
  put_le<std::uint16_t>(out, kFormatVersion);
  out.push_back(static_cast<char>(dtype));
  out.push_back('\0');
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(values.rows()));
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(values.cols()));
  const double* src = values.data();
  for (std::size_t i = 0; i < n; ++i) {
    if (dtype == DType::f32) {
      put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(static_cast<float>(src[i])));
    } else {
      put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(src[i]));
    }
  }
  write_text(path, out);
}

CsvTable read_csv(const fs::path& path) {
  auto raw = read_raw_csv(path);
  CsvTable table;
  table.header = std::move(raw.header);
  table.values.resize(static_cast<Eigen::Index>(raw.rows.size()), static_cast<Eigen::Index>(table.header.size()));
  for (std::size_t r = 0; r < raw.rows.size(); ++r) {
    for (std::size_t c = 0; c < table.header.size(); ++c) {
      table.values(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = parse_double(raw.rows[r][c], path, r);
    }
  }
  return table;
}

void write_csv(const fs::path& path, const std::vector<std::string>& header, const RowMatrix& values) {
  if (header.size() != static_cast<std::size_t>(values.cols())) {
    throw DimensionMismatch("csv header has " + std::to_string(header.size()) + " names for " +
                            std::to_string(values.cols()) + " columns");
  }
  std::ostringstream os;
  os << std::setprecision(17);
  for (std::size_t c = 0; c < header.size(); ++c) os << (c ? "," : "") << header[c];
  os << '\n';
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    for (Eigen::Index c = 0; c < values.cols(); ++c) os << (c ? "," : "") << values(r, c);
    os << '\n';
  }
  write_text(path, os.str());
}

std::vector<std::string> prefixed_header(const std::string& prefix, std::size_t count) {
  std::vector<std::string> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) out.push_back(prefix + std::to_string(i));
  return out;
}

RowMatrix read_matrix(const fs::path& path, const std::string& column_prefix) {
  if (!fs::exists(path)) throw ParseError("no such file: " + path.string());
  if (has_magic(path)) return read_binary(path);
  auto table = read_csv(path);
  check_header(table.header, prefixed_header(column_prefix, table.header.size()), path);
  return std::move(table.values);
}

DatasetBundle load_bundle(const BundlePaths& paths, std::string name) {
  RowMatrix features = read_matrix(paths.features, "f");
  RowMatrix outputs = read_matrix(paths.outputs, "p");
  if (features.rows() != outputs.rows()) {
    throw DimensionMismatch("features have " + std::to_string(features.rows()) + " rows but outputs have " +
                            std::to_string(outputs.rows()));
  }
  std::optional<std::vector<GroupId>> groups;
  if (paths.groups) {
    if (!fs::exists(*paths.groups)) throw ParseError("no such file: " + paths.groups->string());
    groups = read_int_column(*paths.groups, "group");
  }
  DatasetBundle bundle{FeatureTable(std::move(features), std::move(groups)), OutputTable(std::move(outputs)),
                       std::nullopt, std::move(name)};
  if (paths.labels) {
    if (!fs::exists(*paths.labels)) throw ParseError("no such file: " + paths.labels->string());
    auto raw = read_int_column(*paths.labels, "label");
    std::vector<int> labels;
    labels.reserve(raw.size());
    for (auto v : raw) {
      if (v < 0 || static_cast<std::size_t>(v) >= bundle.outputs.num_classes()) {
        throw ValidationError("label " + std::to_string(v) + " outside [0, " +
                              std::to_string(bundle.outputs.num_classes()) + ")");
      }
      labels.push_back(static_cast<int>(v));
    }
    bundle.labels = LabelVector(std::move(labels), bundle.outputs.num_classes());
  }
  bundle.validate();
  return bundle;
}

BundlePaths save_bundle(const DatasetBundle& bundle, const fs::path& prefix, FeatureFormat format) {
  const std::string base = prefix.string();
  BundlePaths paths;
  if (format == FeatureFormat::binary) {
    paths.features = base + "_features.shid";
    write_binary(paths.features, bundle.features.values());
  } else {
    paths.features = base + "_features.csv";
    write_csv(paths.features, prefixed_header("f", bundle.features.cols()), bundle.features.values());
  }
  paths.outputs = base + "_outputs.csv";
  write_csv(paths.outputs, prefixed_header("p", bundle.outputs.num_classes()), bundle.outputs.probs());
  if (bundle.labels) {
    paths.labels = base + "_labels.csv";
    std::string text = "label\n";
    for (int y : bundle.labels->labels()) text += std::to_string(y) + '\n';
    write_text(*paths.labels, text);
  }
  if (bundle.features.group_ids()) {
    paths.groups = base + "_groups.csv";
    std::string text = "group\n";
    for (auto g : *bundle.features.group_ids()) text += std::to_string(g) + '\n';
    write_text(*paths.groups, text);
  }
  return paths;
}

}  // namespace shiftid::io
