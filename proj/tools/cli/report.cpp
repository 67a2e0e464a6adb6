#include "report.hpp"

#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>

#include "scglove/common.hpp"

namespace scglove::cli {
namespace {

constexpr const char* kBaselineRow = "GloVe";
constexpr const char* kDebiasedRow = "SC-GloVe";

nlohmann::json to_json(const TrialAggregate& a) {
  return {{"mean", a.mean}, {"std", a.std}, {"n", a.n}};
}

std::string cell(const nlohmann::json& agg) {
  if (agg.is_null()) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.3f ± %.3f", agg.at("mean").get<double>(),
                agg.at("std").get<double>());
  return buf;
}

// Display width; "±" is two bytes but one column.
std::size_t width(const std::string& s) {
  std::size_t w = 0;
  for (unsigned char ch : s) w += (ch & 0xC0) != 0x80;
  return w;
}

std::string pad(const std::string& s, std::size_t w) {
  return s + std::string(w > width(s) ? w - width(s) : 0, ' ');
}

}  // namespace

TrialAggregate aggregate_values(std::span<const double> values) {
  if (values.empty()) throw InputError("aggregate_trials needs at least one result");
  TrialAggregate a;
  a.n = values.size();
  for (double v : values) a.mean += v;
  a.mean /= static_cast<double>(a.n);
  double var = 0.0;
  for (double v : values) var += (v - a.mean) * (v - a.mean);
  a.std = std::sqrt(var / static_cast<double>(a.n));
  return a;
}

TrialAggregate aggregate_trials(std::span<const WeatResult> results) {
  std::vector<double> values;
  values.reserve(results.size());
  for (const auto& r : results) values.push_back(r.effect_size);
  return aggregate_values(values);
}

nlohmann::json build_report(const std::vector<nlohmann::json>& trials) {
  if (trials.empty()) throw InputError("no trial results to report");
  std::vector<std::string> spec_names;
  std::map<std::string, std::vector<double>> baseline, debiased, analogy_debiased;
  std::map<std::string, std::size_t> decreased;
  std::vector<double> analogy_baseline;
  nlohmann::json seeds = nlohmann::json::array();

  for (const auto& trial : trials) {
    seeds.push_back(trial.at("seed"));
    for (const auto& spec : trial.at("specs")) {
      const auto name = spec.at("name").get<std::string>();
      if (!baseline.count(name)) spec_names.push_back(name);
      const double before = spec.at("baseline").at("effect_size").get<double>();
      const double after = spec.at("debiased").at("effect_size").get<double>();
      baseline[name].push_back(before);
      debiased[name].push_back(after);
      decreased[name] += after < before;
    }
    const auto& analogy = trial.value("analogy", nlohmann::json());
    if (!analogy.is_null()) {
      analogy_baseline.push_back(analogy.at("baseline").get<double>());
      for (const auto& [name, acc] : analogy.at("debiased").items()) {
        analogy_debiased[name].push_back(acc.get<double>());
      }
    }
  }

  nlohmann::json effect = {{kBaselineRow, nlohmann::json::object()},
                           {kDebiasedRow, nlohmann::json::object()}};
  nlohmann::json per_spec = nlohmann::json::object();
  for (const auto& name : spec_names) {
    effect[kBaselineRow][name] = to_json(aggregate_values(baseline[name]));
    effect[kDebiasedRow][name] = to_json(aggregate_values(debiased[name]));
    per_spec[name] = {{"trials_decreased", decreased[name]}, {"trials", baseline[name].size()}};
  }
  nlohmann::json report = {{"trials", trials.size()},
                           {"seeds", seeds},
                           {"specs", spec_names},
                           {"models", {kBaselineRow, kDebiasedRow}},
                           {"effect_size", effect},
                           {"per_spec", per_spec},
                           {"analogy", nullptr}};
  if (!analogy_baseline.empty()) {
    nlohmann::json analogy = {{kBaselineRow, to_json(aggregate_values(analogy_baseline))},
                              {kDebiasedRow, nlohmann::json::object()}};
    for (const auto& [name, values] : analogy_debiased) {
      analogy[kDebiasedRow][name] = to_json(aggregate_values(values));
    }
    report["analogy"] = analogy;
  }
  return report;
}

std::string format_report(const nlohmann::json& report) {
  const auto specs = report.at("specs").get<std::vector<std::string>>();
  const auto models = report.at("models").get<std::vector<std::string>>();

  std::vector<std::vector<std::string>> table;
  std::vector<std::string> header = {"Model"};
  for (const auto& s : specs) header.push_back(s);
  table.push_back(header);
  for (const auto& m : models) {
    std::vector<std::string> row = {m};
    for (const auto& s : specs) row.push_back(cell(report["effect_size"][m].value(s, nlohmann::json())));
    table.push_back(row);
  }
  std::vector<std::size_t> widths(header.size(), 0);
  for (const auto& row : table) {
    for (std::size_t c = 0; c < row.size(); ++c) widths[c] = std::max(widths[c], width(row[c]));
  }

  std::ostringstream out;
  out << "WEAT effect sizes (mean ± std over " << report.at("trials").get<std::size_t>()
      << " trials)\n\n";
  for (std::size_t r = 0; r < table.size(); ++r) {
    for (std::size_t c = 0; c < table[r].size(); ++c) {
      const bool last = c + 1 == table[r].size();
      out << (c ? "  " : "") << (last ? table[r][c] : pad(table[r][c], widths[c]));
    }
    out << '\n';
    if (r == 0) {
      std::size_t total = 0;
      for (auto w : widths) total += w + 2;
      out << std::string(total - 2, '-') << '\n';
    }
  }

  const auto& analogy = report.at("analogy");
  if (!analogy.is_null()) {
    out << "\nTOP-1 analogy accuracy\n";
    out << "  " << kBaselineRow << ": " << cell(analogy[kBaselineRow]) << '\n';
    for (const auto& [name, agg] : analogy[kDebiasedRow].items()) {
      out << "  " << kDebiasedRow << " (" << name << "): " << cell(agg) << '\n';
    }
  }
  return out.str();
}

}  // namespace scglove::cli
