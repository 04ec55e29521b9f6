#include "kzsketch/dataset_io.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "kzsketch/error.hpp"

namespace kz {

namespace {

constexpr std::uint16_t kDatasetVersion = 1;
constexpr std::uint16_t kMatrixVersion = 1;

template <typename T>
void put_le(std::vector<std::uint8_t>& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class LeReader {
 public:
  explicit LeReader(const std::vector<std::uint8_t>& b) : b_(b) {}
  template <typename T>
  T get() {
    if (pos_ + sizeof(T) > b_.size())
      throw Error(ErrorCode::Truncated, "unexpected end of file", static_cast<std::uint64_t>(pos_) * 8);
    T v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(static_cast<T>(b_[pos_ + i]) << (8 * i));
    pos_ += sizeof(T);
    return v;
  }
  void expect_magic(const char* magic) {
    if (b_.size() < 4 || std::memcmp(b_.data(), magic, 4) != 0)
      throw Error(ErrorCode::Corrupt, std::string("bad magic, expected ") + magic, 0);
    pos_ = 4;
  }
  std::size_t remaining() const { return b_.size() - pos_; }

 private:
  const std::vector<std::uint8_t>& b_;
  std::size_t pos_ = 0;
};

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == ';' || ch == '\r') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

bool skip_line(const std::string& line) {
  auto first = line.find_first_not_of(" \t\r");
  return first == std::string::npos || line[first] == '#';
}

}  // namespace

std::vector<std::uint8_t> serialize_dataset(const GridDataset& data) {
  data.validate();
  std::vector<std::uint8_t> out{'K', 'Z', 'D', 'S'};
  put_le<std::uint16_t>(out, kDatasetVersion);
  put_le<std::uint64_t>(out, data.n);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(data.d));
  put_le<std::uint64_t>(out, data.delta);
  for (auto c : data.coords) put_le<std::uint64_t>(out, static_cast<std::uint64_t>(c));
  return out;
}

GridDataset deserialize_dataset(const std::vector<std::uint8_t>& bytes) {
  LeReader r(bytes);
  r.expect_magic("KZDS");
  auto version = r.get<std::uint16_t>();
  if (version != kDatasetVersion) throw Error(ErrorCode::Corrupt, "unsupported dataset version");
  auto n = r.get<std::uint64_t>();
  auto d = r.get<std::uint32_t>();
  auto delta = r.get<std::uint64_t>();
  if (d == 0 || r.remaining() / 8 / d < n) throw Error(ErrorCode::Truncated, "dataset payload is truncated");
  GridDataset g(n, d, delta);
  for (auto& c : g.coords) c = static_cast<std::int64_t>(r.get<std::uint64_t>());
  g.validate();
  return g;
}

std::vector<std::uint8_t> read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path);
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot write " + path);
  out << text;
}

void write_dataset(const std::string& path, const GridDataset& data) { write_file(path, serialize_dataset(data)); }

GridDataset read_dataset(const std::string& path) { return deserialize_dataset(read_file(path)); }

GridDataset parse_dataset_csv(const std::string& text, std::uint64_t delta) {
  std::istringstream in(text);
  std::string line;
  GridDataset g;
  g.n = 0;
  std::size_t lineno = 0;
  std::int64_t max_coord = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    auto fields = split_fields(line);
    if (g.n == 0) g.d = fields.size();
    if (fields.size() != g.d)
      throw Error(ErrorCode::DimensionMismatch, "line " + std::to_string(lineno) + " has " +
                                                    std::to_string(fields.size()) + " fields, expected " +
                                                    std::to_string(g.d));
    for (const auto& f : fields) {
      std::int64_t v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": '" + f + "' is not an integer");
      g.coords.push_back(v);
      max_coord = std::max(max_coord, v);
    }
    ++g.n;
  }
  if (g.n == 0) throw Error(ErrorCode::InvalidArgument, "CSV dataset is empty");
  g.delta = delta != 0 ? delta : static_cast<std::uint64_t>(std::max<std::int64_t>(2, max_coord));
  g.validate();
  return g;
}

GridDataset load_dataset(const std::string& path, std::uint64_t delta) {
  auto bytes = read_file(path);
  if (bytes.size() >= 4 && std::memcmp(bytes.data(), "KZDS", 4) == 0) {
    auto g = deserialize_dataset(bytes);
    if (delta != 0 && delta != g.delta) {
      g.delta = delta;
      g.validate();
    }
    return g;
  }
  return parse_dataset_csv(std::string(bytes.begin(), bytes.end()), delta);
}

RealDataset parse_real_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  RealDataset r;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (skip_line(line)) continue;
    auto fields = split_fields(line);
    std::vector<double> row;
    for (const auto& f : fields) {
      double v = 0;
      auto [ptr, ec] = std::from_chars(f.data(), f.data() + f.size(), v);
      if (ec != std::errc() || ptr != f.data() + f.size())
        throw Error(ErrorCode::InvalidArgument, "line " + std::to_string(lineno) + ": '" + f + "' is not a number");
      row.push_back(v);
    }
    r.push_back(row);
  }
  if (r.n == 0) throw Error(ErrorCode::InvalidArgument, "CSV point set is empty");
  r.validate();
  return r;
}

RealDataset load_real_csv(const std::string& path) {
  auto bytes = read_file(path);
  return parse_real_csv(std::string(bytes.begin(), bytes.end()));
}

std::string format_real_csv(const RealDataset& data) {
  std::string out;
  char buf[64];
  for (std::size_t i = 0; i < data.n; ++i) {
    for (std::size_t j = 0; j < data.d; ++j) {
      // Shortest round-trip representation keeps files byte-stable.
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, data.row(i)[j]);
      (void)ec;
      if (j) out.push_back(',');
      out.append(buf, ptr);
    }
    out.push_back('\n');
  }
  return out;
}

std::vector<std::uint8_t> serialize_matrix(const Eigen::MatrixXd& m) {
  std::vector<std::uint8_t> out{'K', 'Z', 'O', 'B'};
  put_le<std::uint16_t>(out, kMatrixVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.rows()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(m.cols()));
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(m(i, j)));
  return out;
}

Eigen::MatrixXd deserialize_matrix(const std::vector<std::uint8_t>& bytes) {
  LeReader r(bytes);
  r.expect_magic("KZOB");
  if (r.get<std::uint16_t>() != kMatrixVersion) throw Error(ErrorCode::Corrupt, "unsupported matrix version");
  auto rows = r.get<std::uint32_t>();
  auto cols = r.get<std::uint32_t>();
  if (r.remaining() / 8 < static_cast<std::uint64_t>(rows) * cols)
    throw Error(ErrorCode::Truncated, "matrix payload is truncated");
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = std::bit_cast<double>(r.get<std::uint64_t>());
  return m;
}

}  // namespace kz
