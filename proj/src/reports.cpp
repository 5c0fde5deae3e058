#include "gridplace/reports.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "gridplace/errors.hpp"

namespace gridplace {

namespace {

std::ostringstream csv_stream() {
  std::ostringstream out;
  out.precision(17);
  return out;
}

}  // namespace

void write_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream file(tmp, std::ios::binary | std::ios::trunc);
    if (!file) throw Error(ErrorCode::Io, "cannot open " + tmp.string() + " for writing");
    file << content;
    file.flush();
    if (!file) throw Error(ErrorCode::Io, "failed writing " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorCode::Io, "cannot move output into " + path.string());
  }
}

std::string trajectory_csv(const Trajectory& trajectory, const std::vector<std::string>& ids) {
  auto out = csv_stream();
  out << "t";
  for (const auto& id : ids) out << ",omega_" << id;
  out << '\n';
  for (Index k = 0; k < trajectory.times.size(); ++k) {
    out << trajectory.times(k);
    for (Index i = 0; i < trajectory.omega.cols(); ++i) out << ',' << trajectory.omega(k, i);
    out << '\n';
  }
  return out.str();
}

std::string modal_trajectory_csv(const VectorXd& times, const MatrixXd& modal) {
  auto out = csv_stream();
  out << "t";
  for (Index alpha = 0; alpha < modal.cols(); ++alpha) out << ",xi_dot_" << alpha + 1;
  out << '\n';
  for (Index k = 0; k < times.size(); ++k) {
    out << times(k);
    for (Index alpha = 0; alpha < modal.cols(); ++alpha) out << ',' << modal(k, alpha);
    out << '\n';
  }
  return out.str();
}

std::string trajectory_sidecar(const IntegratorSettings& settings, const std::string& fault_id, double delta_p,
                               Index size) {
  nlohmann::json doc;
  doc["format_version"] = kFormatVersion;
  doc["integrator"] = "rk4";
  doc["dt"] = settings.dt;
  doc["horizon"] = settings.horizon;
  doc["fault"] = {{"bus", fault_id}, {"delta_p", delta_p}};
  doc["buses"] = size;
  return doc.dump(2) + "\n";
}

std::optional<double> MeasureRow::discrepancy() const {
  if (!closed || !oracle) return std::nullopt;
  const double scale = std::abs(*closed);
  return scale > 0.0 ? std::abs(*closed - *oracle) / scale : std::abs(*oracle);
}

void sort_rows(std::vector<MeasureRow>& rows) {
  std::stable_sort(rows.begin(), rows.end(), [](const MeasureRow& lhs, const MeasureRow& rhs) {
    if (lhs.measure() != rhs.measure()) return lhs.measure() < rhs.measure();
    return lhs.bus < rhs.bus;
  });
}

std::string measure_csv(const std::vector<MeasureRow>& rows, const std::string& method) {
  auto out = csv_stream();
  const bool closed = method != "oracle";
  const bool oracle = method != "closed";
  out << "bus,delta_p";
  if (closed) out << ",measure_closed";
  if (oracle) out << ",measure_oracle";
  if (closed && oracle) out << ",discrepancy";
  out << '\n';
  for (const auto& row : rows) {
    out << row.bus << ',' << row.delta_p;
    if (closed) out << ',' << row.closed.value_or(NAN);
    if (oracle) out << ',' << row.oracle.value_or(NAN);
    if (closed && oracle) out << ',' << row.discrepancy().value_or(NAN);
    out << '\n';
  }
  return out.str();
}

std::string measure_json(const std::vector<MeasureRow>& rows, const std::string& method) {
  nlohmann::json doc;
  doc["format_version"] = kFormatVersion;
  doc["method"] = method;
  doc["rows"] = nlohmann::json::array();
  for (const auto& row : rows) {
    nlohmann::json item{{"bus", row.bus}, {"delta_p", row.delta_p}, {"measure", row.measure()}, {"method", method}};
    if (row.closed) item["measure_closed"] = *row.closed;
    if (row.oracle) item["measure_oracle"] = *row.oracle;
    if (auto d = row.discrepancy()) item["discrepancy"] = *d;
    doc["rows"].push_back(item);
  }
  return doc.dump(2) + "\n";
}

std::string sensitivity_csv(const std::vector<SensitivityRows>& faults, const std::vector<std::string>& ids) {
  auto out = csv_stream();
  out << "fault,delta_p,bus,rho,alpha_term1,alpha_term2,alpha_total\n";
  for (const auto& f : faults) {
    const auto& rep = f.report;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      const auto k = static_cast<Index>(i);
      out << f.fault << ',' << f.delta_p << ',' << ids[i] << ',' << rep.rho(k) << ',' << rep.alpha.term1(k) << ','
          << rep.alpha.term2(k) << ',' << rep.alpha.total(k) << '\n';
    }
  }
  return out.str();
}

std::string aggregate_csv(const Aggregated& aggregated, const VulnerabilityGradients& gradients,
                          const std::vector<std::string>& ids) {
  auto out = csv_stream();
  out << "bus,rho_agg,alpha_agg,alpha_term1_agg,alpha_term2_agg,dV_dr,dV_da\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto k = static_cast<Index>(i);
    out << ids[i] << ',' << aggregated.rho(k) << ',' << aggregated.alpha(k) << ',' << aggregated.alpha_term1(k)
        << ',' << aggregated.alpha_term2(k) << ',' << gradients.d_r(k) << ',' << gradients.d_a(k) << '\n';
  }
  return out.str();
}

std::string placement_csv(const PlacementResult& placement, const VectorXd& rho_agg, const VectorXd& alpha_agg,
                          const std::vector<std::string>& ids) {
  auto out = csv_stream();
  out << "id,rho_agg,alpha_agg,r,a\n";
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto k = static_cast<Index>(i);
    out << ids[i] << ',' << rho_agg(k) << ',' << alpha_agg(k) << ',' << placement.r(k) << ',' << placement.a(k)
        << '\n';
  }
  return out.str();
}

std::string schema_text() {
  return R"(gridplace output formats (format_version 1)

powerflow.csv     id, theta
spectrum.csv      lambda, u0 .. u{N-1}  (one row per mode, ascending lambda)
measure.csv       bus, delta_p, measure_closed, measure_oracle, discrepancy
                  (columns present according to --method; rows ascending by measure)
measure.json      {format_version, method, rows: [{bus, delta_p, measure, method, ...}]}
sensitivity.csv   fault, delta_p, bus, rho, alpha_term1, alpha_term2, alpha_total
aggregate.csv     bus, rho_agg, alpha_agg, alpha_term1_agg, alpha_term2_agg, dV_dr, dV_da
placement.json    {format_version, algorithm, weighting, ids, r, a, objective_linear,
                   residuals: {sum_r, sum_a, sum_ra}, iterations}
placement.csv     id, rho_agg, alpha_agg, r, a
report.csv        rank, bus_before, measure_before, bus_after, measure_after
report.json       {format_version, mu, g, weighting, before: [{bus, measure}], after: [...],
                   V_before, V_after, reduction_percent, strongest_before, strongest_after}
trajectory.csv    t, omega_<id> ...   (or t, xi_dot_1 .. with --modal)
trajectory.json   {format_version, integrator, dt, horizon, fault: {bus, delta_p}, buses}
)";
}

}  // namespace gridplace
