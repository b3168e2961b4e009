#include <cstdio>
#include <fstream>

#include "odm/spdg.hpp"

namespace odm {

void write_metrics_csv(const std::vector<MetricRow>& log, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path.string());
  out << "step,J,L,train_error,test_error,grad_norm_theta,grad_norm_v,wall_ms\n";
  char buf[64];
  auto num = [&](double v) {
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  auto opt = [&](const std::optional<double>& v) { return v ? num(*v) : std::string(); };
  for (const auto& r : log)
    out << r.step << ',' << num(r.j) << ',' << (std::isnan(r.l) ? "" : num(r.l)) << ',' << opt(r.train_error) << ','
        << opt(r.test_error) << ',' << num(r.grad_norm_theta) << ',' << (std::isnan(r.grad_norm_v) ? "" : num(r.grad_norm_v))
        << ',' << num(r.wall_ms) << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

}  // namespace odm
