#pragma once

#include <string>
#include <vector>

#include "probitgp/harness.hpp"
#include "probitgp/mvn.hpp"

namespace probitgp {

/// Shortest round-trip decimal representation, independent of the locale.
std::string format_double(double v);

/// Training CSV with header x1..xq,y and an optional truth_prob column, in any column order.
Dataset read_training_csv(const std::string& path);
/// Holdout CSV with header x1..xq and optional truth_prob and y columns.
std::vector<HoldoutPoint> read_holdout_csv(const std::string& path, std::size_t dim);

void write_training_csv(const std::string& path, const Dataset& data);
void write_holdout_csv(const std::string& path, const std::vector<HoldoutPoint>& holdout);
/// Columns id, probability, std_error; id is the 0-based holdout row.
void write_predictions_csv(const std::string& path, const std::vector<ProbEstimate>& predictions);

/// Applies the keys of a flat JSON object to cfg. Unknown keys and wrongly typed values are
/// validation errors. Recognized keys: method, samples, seed, antithetic, block_size, trunc_tol,
/// alpha, alpha_min, alpha_max, alpha_count, cavi_tol, cavi_max_iter.
void apply_config_json(const std::string& path, RunConfig& cfg);

/// Deterministic metrics document (no timings).
void write_metrics_json(const std::string& path, const MetricsReport& report);
/// Wall-clock timings of a batch run.
void write_timing_json(const std::string& path, const MetricsReport& report);
/// Alpha grid search result: the selected alpha and the full curve.
void write_alpha_fit_json(const std::string& path, const AlphaFit& fit, std::size_t n, const RunConfig& cfg);
/// Single marginal-likelihood estimate.
void write_loglik_json(const std::string& path, double alpha, const ProbEstimate& est, std::size_t n,
                       const RunConfig& cfg, const std::string& method);

}  // namespace probitgp
