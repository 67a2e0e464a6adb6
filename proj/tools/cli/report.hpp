#pragma once

#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scglove/biasmetrics.hpp"

namespace scglove::cli {

struct TrialAggregate {
  double mean = 0.0;
  /// Population standard deviation.
  double std = 0.0;
  std::size_t n = 0;
};

/// Mean and population std of the effect sizes. Throws InputError when empty.
TrialAggregate aggregate_trials(std::span<const WeatResult> results);
TrialAggregate aggregate_values(std::span<const double> values);

/// Builds the report from per-trial results documents.
nlohmann::json build_report(const std::vector<nlohmann::json>& trials);

/// Aligned table: one row per model (baseline / debiased), one column per spec.
std::string format_report(const nlohmann::json& report);

}  // namespace scglove::cli
