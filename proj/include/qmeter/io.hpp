// Copyright 2026 The qmeter Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// CSV and JSON emission. Numbers go through std::to_chars (shortest
// round-trip form, independent of the global locale) so that identical runs
// produce byte-identical files.

#ifndef QMETER_IO_HPP
#define QMETER_IO_HPP

#include <charconv>
#include <cmath>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qmeter/measure.hpp"
#include "qmeter/seq.hpp"
#include "qmeter/wva.hpp"

namespace qmeter {

inline std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

/// "re" for real values, otherwise "re+imi" / "re-imi".
inline std::string format_complex(cplx z) {
  if (z.imag() == 0.0 || std::abs(z.imag()) <= 1e-15 * std::abs(z.real())) return format_double(z.real());
  std::string out = format_double(z.real());
  if (!std::signbit(z.imag())) out += '+';
  return out + format_double(z.imag()) + "i";
}

using Metadata = std::vector<std::pair<std::string, std::string>>;

inline constexpr double kFridgeFloorMk = 15.0;

inline void write_metadata(std::ostream& os, const Metadata& meta) {
  for (const auto& [k, v] : meta) os << "# " << k << " = " << v << '\n';
}

inline void write_wva_csv(std::ostream& os, const std::vector<SweepRow>& rows, const Metadata& meta,
                          bool with_oracle) {
  write_metadata(os, meta);
  os << "t_s_mk,t_p_mk,scheme,a_w,delta_m,a_w_true,p_m,i_ps,i_th";
  if (with_oracle) os << ",oracle_shift";
  os << '\n';
  for (const auto& row : rows) {
    const WvaReport& r = row.report;
    os << format_double(row.t_s_mk) << ',' << format_double(row.t_p_mk) << ',' << scheme_name(row.scheme) << ','
       << format_complex(r.a_w) << ',' << format_double(r.delta_m) << ',' << format_complex(r.a_w_true) << ','
       << format_double(r.p_m) << ',' << format_double(r.i_ps) << ',' << format_double(r.i_th);
    if (with_oracle) os << ',' << (r.oracle_shift ? format_double(*r.oracle_shift) : std::string("nan"));
    os << '\n';
  }
}

/// One row per step; model_p_up is the model at theta_hat.
inline void write_seq_csv(std::ostream& os, MeasurementScheme scheme, const TrajectoryResult& traj,
                          const ProbabilityRows& model_at_estimate, const Metadata& meta) {
  if (model_at_estimate.size() != traj.tally.counts.size())
    throw DimensionError("write_seq_csv: model rows do not match the tally");
  write_metadata(os, meta);
  os << "step,scheme,count_up,count_down,model_p_up(theta_hat),avg_purity\n";
  for (int i = 0; i < traj.tally.n_s(); ++i) {
    const auto k = static_cast<std::size_t>(i);
    os << (i + 1) << ',' << scheme_name(scheme) << ',' << traj.tally.up(i) << ',' << traj.tally.down(i) << ','
       << format_double(model_at_estimate[k][1]) << ',' << format_double(traj.purity_trace[k + 1]) << '\n';
  }
}

inline nlohmann::ordered_json audit_json(MeasurementScheme scheme, double t_s_mk, double t_p_mk,
                                         const MeasurementAudit& a) {
  nlohmann::ordered_json j;
  j["scheme"] = scheme_name(scheme);
  j["t_s_mk"] = t_s_mk;
  j["t_p_mk"] = t_p_mk;
  j["C"] = a.faithfulness;
  j["ub_dev"] = a.unbiased_deviation;
  j["ni_dev"] = a.noninvasive_deviation;
  return j;
}

inline nlohmann::ordered_json mle_json(const SeqConfig& cfg, const MleResult& m) {
  nlohmann::ordered_json j;
  j["scheme"] = scheme_name(cfg.scheme);
  j["theta_true"] = cfg.theta_true;
  j["theta_hat"] = m.theta_hat;
  j["sigma"] = m.sigma ? nlohmann::ordered_json(*m.sigma) : nlohmann::ordered_json(nullptr);
  j["n_s"] = cfg.n_s;
  j["nu"] = cfg.nu;
  j["seed"] = cfg.seed;
  j["converged"] = m.converged;
  return j;
}

}  // namespace qmeter

#endif  // QMETER_IO_HPP
