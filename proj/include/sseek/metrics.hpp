#pragma once

#include <cmath>
#include <cstdio>
#include <ostream>
#include <string>
#include <vector>

#include "sseek/common.hpp"

namespace sseek {

// Append-only experiment log: one row per (rep, t) with named metric columns.
struct MetricsRow {
  int rep = 0;
  int t = 0;
  std::vector<double> values;
};

struct MetricsTable {
  std::vector<std::string> columns;  // names of the value columns
  std::vector<MetricsRow> rows;

  void write_csv(std::ostream& out) const {
    out << "t,rep";
    for (const auto& c : columns) out << ',' << c;
    out << '\n';
    char buf[64];
    for (const auto& row : rows) {
      out << row.t << ',' << row.rep;
      for (double v : row.values) {
        std::snprintf(buf, sizeof(buf), "%.10g", v);
        out << ',' << buf;
      }
      out << '\n';
    }
  }
};

// Root-mean-square of error norms across repetitions, per series index.
// `estimates[rep][idx]` is compared against `reference[idx]`.
inline std::vector<double> rmse(const std::vector<std::vector<VectorXd>>& estimates,
                                const std::vector<VectorXd>& reference) {
  if (estimates.empty()) throw invalid_input_error("rmse: no repetitions");
  for (const auto& rep : estimates)
    if (rep.size() != reference.size())
      throw invalid_input_error("rmse: series length mismatch");
  std::vector<double> out(reference.size(), 0.0);
  for (size_t idx = 0; idx < reference.size(); ++idx) {
    double acc = 0.0;
    for (const auto& rep : estimates) {
      if (rep[idx].size() != reference[idx].size())
        throw invalid_input_error("rmse: vector dimension mismatch");
      acc += (rep[idx] - reference[idx]).squaredNorm();
    }
    out[idx] = std::sqrt(acc / static_cast<double>(estimates.size()));
  }
  return out;
}

}  // namespace sseek
