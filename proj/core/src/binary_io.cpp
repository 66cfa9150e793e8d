#include "freqprint/binary_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <fmt/format.h>

#include "freqprint/error.hpp"

namespace freqprint {

namespace {

template <typename T>
void put_le(std::vector<unsigned char>& out, T value) {
  static_assert(std::is_unsigned_v<T>);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<unsigned char>(value >> (8 * i)));
  }
}

template <typename T>
T get_le(const unsigned char* p) {
  T value = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) value |= static_cast<T>(p[i]) << (8 * i);
  return value;
}

}  // namespace

void BinaryWriter::magic(std::string_view tag) {
  buffer_.insert(buffer_.end(), tag.begin(), tag.end());
}
void BinaryWriter::u32(std::uint32_t v) { put_le(buffer_, v); }
void BinaryWriter::u64(std::uint64_t v) { put_le(buffer_, v); }
void BinaryWriter::i32(std::int32_t v) { put_le(buffer_, static_cast<std::uint32_t>(v)); }
void BinaryWriter::f64(double v) { put_le(buffer_, std::bit_cast<std::uint64_t>(v)); }

void BinaryWriter::str(std::string_view s) {
  u64(s.size());
  buffer_.insert(buffer_.end(), s.begin(), s.end());
}

void BinaryWriter::f64s(std::span<const double> values) {
  u64(values.size());
  for (double v : values) f64(v);
}

void BinaryWriter::matrix(const Eigen::MatrixXd& m) {
  u64(static_cast<std::uint64_t>(m.rows()));
  u64(static_cast<std::uint64_t>(m.cols()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) f64(m(r, c));
  }
}

void BinaryWriter::vector(const Eigen::VectorXd& v) {
  f64s(std::span<const double>(v.data(), static_cast<std::size_t>(v.size())));
}

void BinaryWriter::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot open {} for writing", path.string()));
  out.write(reinterpret_cast<const char*>(buffer_.data()),
            static_cast<std::streamsize>(buffer_.size()));
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write to {} failed", path.string()));
}

BinaryReader BinaryReader::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)),
                                   std::istreambuf_iterator<char>());
  return BinaryReader(std::move(bytes));
}

const unsigned char* BinaryReader::take(std::size_t n) {
  if (buffer_.size() - pos_ < n) {
    throw Error(ErrorCode::FormatError, "artifact truncated");
  }
  const unsigned char* p = buffer_.data() + pos_;
  pos_ += n;
  return p;
}

void BinaryReader::expect_magic(std::string_view tag) {
  const auto* p = take(tag.size());
  if (std::memcmp(p, tag.data(), tag.size()) != 0) {
    throw Error(ErrorCode::FormatError, fmt::format("not a {} artifact", tag));
  }
}

std::uint32_t BinaryReader::u32() { return get_le<std::uint32_t>(take(4)); }
std::uint64_t BinaryReader::u64() { return get_le<std::uint64_t>(take(8)); }
std::int32_t BinaryReader::i32() { return static_cast<std::int32_t>(u32()); }
double BinaryReader::f64() { return std::bit_cast<double>(u64()); }

std::string BinaryReader::str() {
  const auto n = u64();
  const auto* p = take(n);
  return std::string(reinterpret_cast<const char*>(p), n);
}

std::vector<double> BinaryReader::f64s() {
  const auto n = u64();
  if (n > (buffer_.size() - pos_) / 8) throw Error(ErrorCode::FormatError, "artifact truncated");
  std::vector<double> out(n);
  for (auto& v : out) v = f64();
  return out;
}

Eigen::MatrixXd BinaryReader::matrix() {
  const auto rows = u64();
  const auto cols = u64();
  if (cols != 0 && rows > (buffer_.size() - pos_) / 8 / cols) {
    throw Error(ErrorCode::FormatError, "artifact truncated");
  }
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = f64();
  }
  return m;
}

Eigen::VectorXd BinaryReader::vector() {
  const auto values = f64s();
  return Eigen::Map<const Eigen::VectorXd>(values.data(), static_cast<Eigen::Index>(values.size()));
}

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, fmt::format("cannot open {}", path.string()));
  return std::string((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, fmt::format("cannot open {} for writing", path.string()));
  out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
  if (!out) throw Error(ErrorCode::IoError, fmt::format("write to {} failed", path.string()));
}

}  // namespace freqprint
