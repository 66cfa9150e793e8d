#include "output_dir.hpp"

#include <fmt/format.h>

#include "freqprint/binary_io.hpp"
#include "freqprint/error.hpp"

namespace freqprint::cli {

OutputDir::OutputDir(std::filesystem::path root) : root_(std::move(root)) {
  std::error_code ec;
  if (!std::filesystem::exists(root_, ec)) {
    std::filesystem::create_directories(root_, ec);
    if (ec) {
      throw Error(ErrorCode::IoError, fmt::format("cannot create {}: {}", root_.string(), ec.message()));
    }
    created_ = true;
  } else if (!std::filesystem::is_directory(root_, ec)) {
    throw Error(ErrorCode::IoError, fmt::format("{} exists and is not a directory", root_.string()));
  }
}

OutputDir::~OutputDir() {
  if (committed_) return;
  std::error_code ec;
  if (created_) {
    std::filesystem::remove_all(root_, ec);
    return;
  }
  for (const auto& f : files_) std::filesystem::remove_all(f, ec);
}

std::filesystem::path OutputDir::track(std::string_view name) {
  auto path = root_ / std::filesystem::path(name);
  files_.push_back(path);
  return path;
}

void OutputDir::write(std::string_view name, std::string_view contents) {
  write_text_file(track(name), contents);
}

}  // namespace freqprint::cli
