#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "gridplace/oracle.hpp"
#include "gridplace/placement.hpp"
#include "gridplace/sensitivity.hpp"

namespace gridplace {

inline constexpr const char* kFormatVersion = "1";

// Writes to a temporary file next to `path`, then renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

std::string trajectory_csv(const Trajectory& trajectory, const std::vector<std::string>& ids);
std::string modal_trajectory_csv(const VectorXd& times, const MatrixXd& modal);
std::string trajectory_sidecar(const IntegratorSettings& settings, const std::string& fault_id, double delta_p,
                               Index size);

struct MeasureRow {
  std::string bus;
  double delta_p = 1.0;
  std::optional<double> closed;
  std::optional<double> oracle;

  double measure() const { return closed ? *closed : oracle.value_or(0.0); }
  // |closed - oracle| / |closed| when both are present.
  std::optional<double> discrepancy() const;
};

// Sorts ascending by measure, then by bus id.
void sort_rows(std::vector<MeasureRow>& rows);

std::string measure_csv(const std::vector<MeasureRow>& rows, const std::string& method);
std::string measure_json(const std::vector<MeasureRow>& rows, const std::string& method);

struct SensitivityRows {
  std::string fault;
  double delta_p = 1.0;
  SusceptibilityReport report;
};

std::string sensitivity_csv(const std::vector<SensitivityRows>& faults, const std::vector<std::string>& ids);
std::string aggregate_csv(const Aggregated& aggregated, const VulnerabilityGradients& gradients,
                          const std::vector<std::string>& ids);

std::string placement_csv(const PlacementResult& placement, const VectorXd& rho_agg, const VectorXd& alpha_agg,
                          const std::vector<std::string>& ids);

// Column documentation printed by --schema.
std::string schema_text();

}  // namespace gridplace
