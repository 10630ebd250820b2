#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "treenet/dataset.hpp"

namespace test {

inline treenet::Dataset make_dataset(const std::vector<std::vector<double>>& rows,
                                     const std::vector<treenet::ClassId>& labels,
                                     std::size_t n_classes = 0) {
  if (n_classes == 0) {
    for (auto y : labels) n_classes = std::max<std::size_t>(n_classes, y + 1);
    n_classes = std::max<std::size_t>(n_classes, 2);
  }
  const std::size_t d = rows.at(0).size();
  std::vector<double> values;
  for (const auto& r : rows) values.insert(values.end(), r.begin(), r.end());
  std::vector<std::string> names;
  for (std::size_t k = 0; k < n_classes; ++k) names.push_back("c" + std::to_string(k));
  return treenet::Dataset(treenet::Matrix(rows.size(), d, std::move(values)), labels, names, {});
}

inline std::vector<std::size_t> all_rows(std::size_t n) {
  std::vector<std::size_t> rows(n);
  for (std::size_t i = 0; i < n; ++i) rows[i] = i;
  return rows;
}

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    path_ = std::filesystem::temp_directory_path() /
            ("treenet_" + tag + "_" + std::to_string(std::rand()) + "_" + std::to_string(counter()++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  static int& counter() {
    static int c = 0;
    return c;
  }
  std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

}  // namespace test
