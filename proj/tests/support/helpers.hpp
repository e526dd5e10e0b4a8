#pragma once

// Shared test utilities: scratch directories, relative-error comparison and
// small dataset builders used across the suites.

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ratebench/dataset.hpp"

namespace testutil {

/// Self-deleting scratch directory under the system temp root.
class TempDir {
 public:
  TempDir() {
    std::string tmpl =
        (std::filesystem::temp_directory_path() / "ratebench-test-XXXXXX").string();
    if (!mkdtemp(tmpl.data())) {
      throw std::runtime_error("mkdtemp failed for " + tmpl);
    }
    path_ = tmpl;
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
  std::filesystem::path path_;
};

inline double rel_err(double got, double want) {
  const double scale = std::max({1.0, std::fabs(got), std::fabs(want)});
  return std::fabs(got - want) / scale;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
}

inline ratebench::data::Interaction interaction(const std::string& user,
                                                const std::string& item, double rating,
                                                std::int64_t ts) {
  return {user, item, rating, ts};
}

/// A small hand-built catalog: items i0..i{n-1}, titles "Item <k> (1999)",
/// attributes cycling over three genres.
inline ratebench::data::Catalog small_catalog(std::size_t n) {
  ratebench::data::Catalog catalog;
  const std::vector<std::vector<std::string>> attrs = {
      {"Drama"}, {"Comedy", "Drama"}, {"Action"}};
  for (std::size_t k = 0; k < n; ++k) {
    ratebench::data::ItemMeta meta;
    meta.item_id = "i" + std::to_string(k);
    meta.title = "Item " + std::to_string(k) + " (1999)";
    meta.attributes = attrs[k % attrs.size()];
    catalog.add(meta);
  }
  return catalog;
}

/// Deterministic interaction log over u users and i items; ratings cycle
/// 1..5, timestamps strictly increasing.
inline std::vector<ratebench::data::Interaction> small_log(std::size_t n_users,
                                                           std::size_t n_items,
                                                           std::size_t n_events) {
  std::vector<ratebench::data::Interaction> log;
  log.reserve(n_events);
  for (std::size_t e = 0; e < n_events; ++e) {
    log.push_back({"u" + std::to_string(e % n_users),
                   "i" + std::to_string((e * 7 + e / n_users) % n_items),
                   static_cast<double>(1 + (e * 3) % 5),
                   static_cast<std::int64_t>(1000000 + 60 * e)});
  }
  return log;
}

}  // namespace testutil
