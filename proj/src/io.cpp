#include "fnse/io.hpp"

#include <cstdio>
#include <cstring>
#include <iomanip>
#include <sstream>
#include <stdexcept>

namespace fnse {

namespace {

void write_le_doubles(std::ostream& out, const double* data, std::size_t count) {
  // x86-64 is little-endian; byte-swapping would go here on big-endian hosts
  out.write(reinterpret_cast<const char*>(data), std::streamsize(count * sizeof(double)));
}

}  // namespace

void dump_field(const PeriodicField& field, double time, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("dump_field: cannot open " + path.string());
  out << "FNSE-FIELD v1 dim=" << field.grid().dim << " n=" << field.grid().n
      << " comps=" << field.comps() << " t=" << std::setprecision(17) << time << "\n";
  std::vector<double> row(static_cast<std::size_t>(field.comps()));
  for (Eigen::Index i = 0; i < field.num_nodes(); ++i) {
    for (int c = 0; c < field.comps(); ++c) row[std::size_t(c)] = field.values()(i, c);
    write_le_doubles(out, row.data(), row.size());
  }
  if (!out) throw std::runtime_error("dump_field: write failed for " + path.string());
}

LoadedField load_field(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_field: cannot open " + path.string());
  std::string header;
  std::getline(in, header);
  int dim = 0, n = 0, comps = 0;
  double time = 0.0;
  if (std::sscanf(header.c_str(), "FNSE-FIELD v1 dim=%d n=%d comps=%d t=%lf", &dim, &n, &comps,
                  &time) != 4)
    throw std::runtime_error("load_field: bad header in " + path.string());
  const PeriodicGrid grid(dim, n);
  Eigen::MatrixXd values(grid.num_nodes(), comps);
  std::vector<double> row(static_cast<std::size_t>(comps));
  for (Eigen::Index i = 0; i < grid.num_nodes(); ++i) {
    in.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size() * sizeof(double)));
    if (!in) throw std::runtime_error("load_field: truncated data in " + path.string());
    for (int c = 0; c < comps; ++c) values(i, c) = row[std::size_t(c)];
  }
  return {PeriodicField(grid, std::move(values)), time};
}

void export_field_csv(const PeriodicField& field, const std::filesystem::path& path) {
  const PeriodicGrid& g = field.grid();
  if (g.dim > 2)
    throw std::invalid_argument("export_field_csv: CSV export covers 1-d and 2-d slices");
  std::vector<std::string> cols;
  for (int a = 0; a < g.dim; ++a) cols.push_back("x" + std::to_string(a + 1));
  for (int c = 0; c < field.comps(); ++c) cols.push_back("c" + std::to_string(c));
  CsvWriter csv(path, cols);
  for (Eigen::Index i = 0; i < g.num_nodes(); ++i) {
    std::vector<std::string> cells;
    const Eigen::VectorXd x = g.node(i);
    for (int a = 0; a < g.dim; ++a) cells.push_back(CsvWriter::format(x[a]));
    for (int c = 0; c < field.comps(); ++c)
      cells.push_back(CsvWriter::format(field.values()(i, c)));
    csv.row(cells);
  }
  csv.finish();
}

std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed) {
  const auto* bytes = static_cast<const unsigned char*>(data);
  std::uint64_t h = seed;
  for (std::size_t i = 0; i < size; ++i) {
    h ^= bytes[i];
    h *= 0x100000001B3ull;
  }
  return h;
}

CsvWriter::CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& columns)
    : out_(path), columns_(columns.size()) {
  if (!out_) throw std::runtime_error("CsvWriter: cannot open " + path.string());
  for (std::size_t i = 0; i < columns.size(); ++i)
    out_ << columns[i] << (i + 1 < columns.size() ? "," : "");
  out_ << "\n";
}

CsvWriter::~CsvWriter() {
  try {
    finish();
  } catch (...) {
  }
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (finished_) throw std::logic_error("CsvWriter: row after finish");
  if (cells.size() != columns_) throw std::invalid_argument("CsvWriter: wrong cell count");
  std::string line;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    line += cells[i];
    if (i + 1 < cells.size()) line += ",";
  }
  line += "\n";
  hash_ = fnv1a64(line.data(), line.size(), hash_);
  out_ << line;
}

std::uint64_t CsvWriter::finish() {
  if (!finished_) {
    finished_ = true;
    std::ostringstream os;
    os << "# checksum: " << std::hex << std::setw(16) << std::setfill('0') << hash_;
    out_ << os.str() << "\n";
    out_.close();
  }
  return hash_;
}

std::string CsvWriter::format(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

std::uint64_t read_csv_checksum(const std::filesystem::path& path, bool* matches) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("read_csv_checksum: cannot open " + path.string());
  std::string line;
  std::getline(in, line);  // header
  std::uint64_t h = 0xCBF29CE484222325ull;
  std::uint64_t trailer = 0;
  bool have_trailer = false;
  while (std::getline(in, line)) {
    if (line.rfind("# checksum:", 0) == 0) {
      trailer = std::stoull(line.substr(11), nullptr, 16);
      have_trailer = true;
      break;
    }
    line += "\n";
    h = fnv1a64(line.data(), line.size(), h);
  }
  if (!have_trailer) throw std::runtime_error("read_csv_checksum: missing trailer in " +
                                              path.string());
  if (matches != nullptr) *matches = trailer == h;
  return trailer;
}

}  // namespace fnse
