#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shiftid/data_model.hpp"

namespace shiftid::io {

// Binary array layout: "SHID" magic, u16 version (1), u8 dtype (1 = f32,
// 2 = f64), u8 reserved (0), u64 rows, u64 cols, then the row-major payload.
// Every integer and value is little-endian; there is no padding.
inline constexpr char kMagic[4] = {'S', 'H', 'I', 'D'};
inline constexpr std::uint16_t kFormatVersion = 1;
inline constexpr std::size_t kHeaderBytes = 4 + 2 + 1 + 1 + 8 + 8;

enum class DType : std::uint8_t { f32 = 1, f64 = 2 };

RowMatrix read_binary(const std::filesystem::path& path);
void write_binary(const std::filesystem::path& path, const RowMatrix& values, DType dtype = DType::f64);

// CSV with a header row; every other row holds one sample.
struct CsvTable {
  std::vector<std::string> header;
  RowMatrix values;
};

CsvTable read_csv(const std::filesystem::path& path);
void write_csv(const std::filesystem::path& path, const std::vector<std::string>& header, const RowMatrix& values);

// Column names used by each file kind: f0.., p0.., label, group.
std::vector<std::string> prefixed_header(const std::string& prefix, std::size_t count);

// Reads a numeric matrix from either format, deciding by the magic bytes.
// CSV headers must equal prefixed_header(prefix, cols).
RowMatrix read_matrix(const std::filesystem::path& path, const std::string& column_prefix);

struct BundlePaths {
  std::filesystem::path features;
  std::filesystem::path outputs;
  std::optional<std::filesystem::path> labels;
  std::optional<std::filesystem::path> groups;
};

DatasetBundle load_bundle(const BundlePaths& paths, std::string name = {});

enum class FeatureFormat { csv, binary };

// Writes features/outputs/labels/groups next to each other as
// <prefix>_features.{csv,shid}, <prefix>_outputs.csv, <prefix>_labels.csv and
// <prefix>_groups.csv (the last two only when present). Returns the paths.
BundlePaths save_bundle(const DatasetBundle& bundle, const std::filesystem::path& prefix,
                        FeatureFormat format = FeatureFormat::csv);

}  // namespace shiftid::io
