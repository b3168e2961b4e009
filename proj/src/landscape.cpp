#include "odm/landscape.hpp"

#include <cstdio>

namespace odm {

namespace {

std::string num(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

void write_profile_csv(const ProfileGrid& grid, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "lambda1,lambda2,value,flag\n";
  for (std::size_t i = 0; i < grid.lambda1.size(); ++i)
    for (std::size_t j = 0; j < grid.lambda2.size(); ++j) {
      const auto r = static_cast<Eigen::Index>(i);
      const auto c = static_cast<Eigen::Index>(j);
      out << num(grid.lambda1[i]) << ',' << num(grid.lambda2[j]) << ',' << num(grid.values(r, c)) << ','
          << (grid.flagged(r, c) ? 1 : 0) << '\n';
    }
  if (!out) throw IoError("write failed for " + path.string());
}

void write_line_csv(const std::vector<LineRow>& rows, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "lambda,J,L\n";
  for (const auto& r : rows) out << num(r.lambda) << ',' << num(r.j) << ',' << num(r.l) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace odm
