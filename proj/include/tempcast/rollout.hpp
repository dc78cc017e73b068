#pragma once

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "tempcast/data.hpp"
#include "tempcast/harmonic.hpp"
#include "tempcast/nets.hpp"

namespace tempcast {

// Maps the current 90-value window to the next 30 values, both standardized.
using Predictor = std::function<std::vector<double>(std::span<const double>)>;

Predictor make_model_predictor(const ModelParams& params);

struct RolloutResult {
    Date seed_start{};                 // first day of the 90-day seed window
    std::vector<double> standardized;  // horizon_days values
    std::vector<double> celsius;
    int iterations = 0;
};

// Repeatedly predicts a block, appends it, and slides the window to the
// newest seq_len values; truncates the final block to horizon_days. Aborts
// with the iteration index if a prediction leaves |z| > 10 or goes
// non-finite.
RolloutResult autoregressive_rollout(const Predictor& predict_block,
                                     std::span<const double> seed_window, int horizon_days,
                                     const Standardizer& standardizer, Date seed_start,
                                     int block_len = 30);

double rmse(std::span<const double> observed, std::span<const double> predicted);
// Pearson correlation; throws NumericError for constant input.
double corr(std::span<const double> observed, std::span<const double> predicted);

struct MetricsReport {
    std::string city;
    std::string model;
    double rmse_c = 0.0;  // deg C
    double corr = 0.0;
    int horizon_days = 0;
};

// Rollout seeded with the first 90 test days, metrics in deg C over the
// horizon (default: the full remaining test span).
MetricsReport evaluate_model(const Predictor& predict_block, const std::string& model_name,
                             const DailySeries& test, const Standardizer& standardizer,
                             std::optional<int> horizon_days = std::nullopt, int seq_len = 90,
                             int block_len = 30);

// Same horizon dates, closed-form baseline predictions.
MetricsReport evaluate_baseline(const HarmonicFit& fit, const DailySeries& test,
                                const Standardizer& standardizer,
                                std::optional<int> horizon_days = std::nullopt, int seq_len = 90);

// Per-day forecast rows for the predictions CSV.
struct ForecastRows {
    std::vector<Date> dates;
    std::vector<double> observed_c;
    std::vector<double> predicted_c;
};

ForecastRows forecast_rows(const DailySeries& test, std::span<const double> predicted_c,
                           int seq_len = 90);

void write_predictions_csv(const ForecastRows& rows, const std::string& model,
                           const std::string& city, const std::filesystem::path& path);

} // namespace tempcast
