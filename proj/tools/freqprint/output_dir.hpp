#pragma once

#include <filesystem>
#include <string_view>
#include <vector>

namespace freqprint::cli {

/// Output directory of one command run. Files written through it are removed
/// again, together with the directory if this run created it, unless commit()
/// is called.
class OutputDir {
 public:
  explicit OutputDir(std::filesystem::path root);
  ~OutputDir();
  OutputDir(const OutputDir&) = delete;
  OutputDir& operator=(const OutputDir&) = delete;

  const std::filesystem::path& root() const noexcept { return root_; }
  std::filesystem::path track(std::string_view name);
  void write(std::string_view name, std::string_view contents);
  void commit() noexcept { committed_ = true; }

 private:
  std::filesystem::path root_;
  bool created_ = false;
  bool committed_ = false;
  std::vector<std::filesystem::path> files_;
};

}  // namespace freqprint::cli
