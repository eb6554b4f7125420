#pragma once

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "kimura/common.hpp"
#include "kimura/evolution.hpp"
#include "kimura/grid.hpp"
#include "kimura/metric.hpp"
#include "kimura/montecarlo.hpp"
#include "kimura/spectral.hpp"

namespace kimura::io {

/// 64-bit FNV-1a, printed as 16 hex digits.
inline std::string fnv1a_hex(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ull;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

inline std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Creates parent directories; throws on failure to open.
inline std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot write " + path.string());
  return os;
}

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : os_(open_out(path)) {
    for (std::size_t k = 0; k < header.size(); ++k) os_ << (k ? "," : "") << header[k];
    os_ << '\n';
  }

  void row(std::initializer_list<double> values) {
    bool first = true;
    for (double v : values) {
      os_ << (first ? "" : ",") << fmt(v);
      first = false;
    }
    os_ << '\n';
  }

  void row(const std::vector<double>& values) {
    for (std::size_t k = 0; k < values.size(); ++k) os_ << (k ? "," : "") << fmt(values[k]);
    os_ << '\n';
  }

 private:
  std::ofstream os_;
};

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto os = open_out(path);
  os << j.dump(2) << '\n';
}

/// JSON-safe number: infinities and NaN become strings.
inline nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  if (std::isnan(v)) return "nan";
  return v > 0 ? "inf" : "-inf";
}

inline nlohmann::json number(const ExtendedReal& v) {
  return v.is_infinite() ? nlohmann::json("inf") : nlohmann::json(v.value());
}

/// t, atom0, atom1, total mass, then one column per cell.
inline void write_trajectory(const std::filesystem::path& path, const Trajectory& traj) {
  if (traj.states.empty()) throw Error("write_trajectory: empty trajectory");
  std::vector<std::string> header{"t", "atom0", "atom1", "mass"};
  const auto xs = traj.states.front().grid.centers();
  for (double x : xs) header.push_back("p@" + fmt(x));
  CsvWriter w(path, header);
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const auto& s = traj.states[k];
    std::vector<double> r{traj.times[k], s.atom0, s.atom1, s.total_mass()};
    r.insert(r.end(), s.interior.begin(), s.interior.end());
    w.row(r);
  }
}

/// x, alpha_0, ..., alpha_{J-1} on cell centers.
inline void write_eigenpairs(const std::filesystem::path& path, const SpectralDecomposition& sd) {
  std::vector<std::string> header{"x"};
  for (std::size_t j = 0; j < sd.modes(); ++j) header.push_back("alpha_" + std::to_string(j));
  CsvWriter w(path, header);
  for (std::size_t i = 0; i < sd.grid.size(); ++i) {
    std::vector<double> r{sd.grid.center(i)};
    for (std::size_t j = 0; j < sd.modes(); ++j) r.push_back(sd.alphas[j][i]);
    w.row(r);
  }
}

inline void write_isometry(const std::filesystem::path& path, const IsometryTable& iso) {
  CsvWriter w(path, {"x", "i"});
  for (auto [x, v] : iso.nodes()) w.row({x, v});
}

/// Histogram rows: t, bin_lo, bin_hi, count, density, density_error.
inline void append_histogram(CsvWriter& w, double t, const Histogram& hg) {
  for (std::size_t b = 0; b < hg.counts.size(); ++b)
    w.row({t, hg.edges[b], hg.edges[b + 1], hg.counts[b], hg.density[b], hg.density_error[b]});
}

}  // namespace kimura::io
