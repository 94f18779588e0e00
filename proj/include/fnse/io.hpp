#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "fnse/field.hpp"

namespace fnse {

/// Writes the FNSE-FIELD v1 format: one text header line
///   FNSE-FIELD v1 dim=<d> n=<N> comps=<c> t=<time>
/// followed by little-endian 64-bit floats, row-major over nodes (last axis
/// fastest), component-fastest within a node.
void dump_field(const PeriodicField& field, double time, const std::filesystem::path& path);

struct LoadedField {
  PeriodicField field;
  double time;
};

LoadedField load_field(const std::filesystem::path& path);

/// CSV export of a scalar/vector field for 1-d or 2-d grids: coordinate
/// columns followed by one column per component.
void export_field_csv(const PeriodicField& field, const std::filesystem::path& path);

/// FNV-1a 64-bit hash.
std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xCBF29CE484222325ull);

/// CSV file with a header row and a trailing `# checksum:` line over the
/// data-row bytes, so identical runs produce byte-identical reports.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;

  void row(const std::vector<std::string>& cells);
  /// Finishes the file and returns the checksum; idempotent.
  std::uint64_t finish();

  static std::string format(double v);

 private:
  std::ofstream out_;
  std::uint64_t hash_ = 0xCBF29CE484222325ull;
  std::size_t columns_ = 0;
  bool finished_ = false;
};

/// The `# checksum:` value of a finished CSV, recomputed from its data rows
/// and verified against the trailer.
std::uint64_t read_csv_checksum(const std::filesystem::path& path, bool* matches = nullptr);

}  // namespace fnse
