#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

namespace freqprint {

/// Little-endian byte sink for the versioned model artifacts.
class BinaryWriter {
 public:
  void magic(std::string_view tag);
  void u32(std::uint32_t v);
  void u64(std::uint64_t v);
  void i32(std::int32_t v);
  void f64(double v);
  void str(std::string_view s);
  void f64s(std::span<const double> values);
  void matrix(const Eigen::MatrixXd& m);
  void vector(const Eigen::VectorXd& v);

  const std::vector<unsigned char>& bytes() const noexcept { return buffer_; }
  void save(const std::filesystem::path& path) const;  // throws IoError

 private:
  std::vector<unsigned char> buffer_;
};

class BinaryReader {
 public:
  explicit BinaryReader(std::vector<unsigned char> bytes) : buffer_(std::move(bytes)) {}
  static BinaryReader load(const std::filesystem::path& path);  // throws IoError

  void expect_magic(std::string_view tag);  // throws FormatError
  std::uint32_t u32();
  std::uint64_t u64();
  std::int32_t i32();
  double f64();
  std::string str();
  std::vector<double> f64s();
  Eigen::MatrixXd matrix();
  Eigen::VectorXd vector();
  bool at_end() const noexcept { return pos_ == buffer_.size(); }

 private:
  const unsigned char* take(std::size_t n);

  std::vector<unsigned char> buffer_;
  std::size_t pos_ = 0;
};

/// Whole-file helpers; throw IoError.
std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace freqprint
