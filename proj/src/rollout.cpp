#include "tempcast/rollout.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <stdexcept>

#include "tempcast/errors.hpp"
#include "tempcast/train.hpp"

namespace tempcast {

namespace {

constexpr double kDivergenceBound = 10.0;  // standardized units

} // namespace

Predictor make_model_predictor(const ModelParams& params) {
    return [params](std::span<const double> window) { return predict_window(params, window); };
}

RolloutResult autoregressive_rollout(const Predictor& predict_block,
                                     std::span<const double> seed_window, int horizon_days,
                                     const Standardizer& standardizer, Date seed_start,
                                     int block_len) {
    if (horizon_days < 1) throw std::invalid_argument("rollout: horizon_days must be >= 1");
    if (block_len < 1) throw std::invalid_argument("rollout: block_len must be >= 1");
    if (seed_window.empty()) throw std::invalid_argument("rollout: empty seed window");

    const std::size_t window_len = seed_window.size();
    std::vector<double> buffer(seed_window.begin(), seed_window.end());
    const int iterations = (horizon_days + block_len - 1) / block_len;

    for (int iter = 0; iter < iterations; ++iter) {
        const std::span<const double> window(buffer.data() + buffer.size() - window_len, window_len);
        std::vector<double> block = predict_block(window);
        if (block.size() != static_cast<std::size_t>(block_len))
            throw std::invalid_argument("rollout: predictor returned " + std::to_string(block.size()) +
                                        " values, expected " + std::to_string(block_len));
        for (double z : block)
            if (!std::isfinite(z) || std::abs(z) > kDivergenceBound)
                throw NumericError("rollout diverged at iteration " + std::to_string(iter + 1) + " of " +
                                   std::to_string(iterations) + " (|z| = " + std::to_string(z) + ")");
        buffer.insert(buffer.end(), block.begin(), block.end());
    }

    RolloutResult result;
    result.seed_start = seed_start;
    result.iterations = iterations;
    result.standardized.assign(buffer.begin() + static_cast<std::ptrdiff_t>(window_len),
                               buffer.begin() + static_cast<std::ptrdiff_t>(window_len) + horizon_days);
    result.celsius = standardizer.invert(result.standardized);
    return result;
}

double rmse(std::span<const double> observed, std::span<const double> predicted) {
    return std::sqrt(mse_loss(observed, predicted));
}

double corr(std::span<const double> observed, std::span<const double> predicted) {
    if (observed.size() != predicted.size())
        throw std::invalid_argument("corr: length mismatch " + std::to_string(observed.size()) +
                                    " vs " + std::to_string(predicted.size()));
    if (observed.size() < 2)
        throw std::invalid_argument("corr: need at least 2 samples");
    const auto n = static_cast<double>(observed.size());
    double mean_o = 0.0, mean_p = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        mean_o += observed[i];
        mean_p += predicted[i];
    }
    mean_o /= n;
    mean_p /= n;
    double cov = 0.0, var_o = 0.0, var_p = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        const double d_o = observed[i] - mean_o;
        const double d_p = predicted[i] - mean_p;
        cov += d_o * d_p;
        var_o += d_o * d_o;
        var_p += d_p * d_p;
    }
    if (var_o == 0.0 || var_p == 0.0)
        throw NumericError("corr: undefined for a constant series (zero variance in " +
                           std::string(var_o == 0.0 ? "observed" : "predicted") + " values)");
    return cov / std::sqrt(var_o * var_p);
}

namespace {

int resolve_horizon(const DailySeries& test, std::optional<int> horizon_days, int seq_len) {
    if (test.size() <= static_cast<std::size_t>(seq_len))
        throw InputError("evaluate: test series has " + std::to_string(test.size()) +
                         " days, need more than " + std::to_string(seq_len));
    const int remaining = static_cast<int>(test.size()) - seq_len;
    const int horizon = horizon_days.value_or(remaining);
    if (horizon < 1) throw std::invalid_argument("evaluate: horizon_days must be >= 1");
    if (horizon > remaining)
        throw InputError("evaluate: horizon " + std::to_string(horizon) + " exceeds the " +
                         std::to_string(remaining) + " observed days after the seed window");
    return horizon;
}

MetricsReport metrics_against_test(const DailySeries& test, std::span<const double> predicted_c,
                                   const std::string& model, int seq_len) {
    MetricsReport report;
    report.city = test.city;
    report.model = model;
    report.horizon_days = static_cast<int>(predicted_c.size());
    const std::span<const double> observed(test.temps.data() + seq_len, predicted_c.size());
    report.rmse_c = rmse(observed, predicted_c);
    report.corr = corr(observed, predicted_c);
    return report;
}

} // namespace

MetricsReport evaluate_model(const Predictor& predict_block, const std::string& model_name,
                             const DailySeries& test, const Standardizer& standardizer,
                             std::optional<int> horizon_days, int seq_len, int block_len) {
    const int horizon = resolve_horizon(test, horizon_days, seq_len);
    std::vector<double> seed(static_cast<std::size_t>(seq_len));
    for (int i = 0; i < seq_len; ++i)
        seed[static_cast<std::size_t>(i)] = standardizer.apply(test.temps[static_cast<std::size_t>(i)]);
    const RolloutResult rollout = autoregressive_rollout(predict_block, seed, horizon, standardizer,
                                                         test.start, block_len);
    return metrics_against_test(test, rollout.celsius, model_name, seq_len);
}

MetricsReport evaluate_baseline(const HarmonicFit& fit, const DailySeries& test,
                                const Standardizer& standardizer, std::optional<int> horizon_days,
                                int seq_len) {
    const int horizon = resolve_horizon(test, horizon_days, seq_len);
    std::vector<double> predicted_c(static_cast<std::size_t>(horizon));
    for (int i = 0; i < horizon; ++i) {
        const Date day = test.date_at(static_cast<std::size_t>(seq_len + i));
        const double t = static_cast<double>(days_between(fit.t0, day));
        predicted_c[static_cast<std::size_t>(i)] = standardizer.invert(predict(fit, t));
    }
    return metrics_against_test(test, predicted_c, "baseline", seq_len);
}

ForecastRows forecast_rows(const DailySeries& test, std::span<const double> predicted_c, int seq_len) {
    ForecastRows rows;
    rows.dates.reserve(predicted_c.size());
    rows.observed_c.reserve(predicted_c.size());
    rows.predicted_c.assign(predicted_c.begin(), predicted_c.end());
    for (std::size_t i = 0; i < predicted_c.size(); ++i) {
        const std::size_t idx = static_cast<std::size_t>(seq_len) + i;
        rows.dates.push_back(test.date_at(idx));
        rows.observed_c.push_back(idx < test.size() ? test.temps[idx]
                                                    : std::numeric_limits<double>::quiet_NaN());
    }
    return rows;
}

void write_predictions_csv(const ForecastRows& rows, const std::string& model,
                           const std::string& city, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write predictions CSV: " + path.string());
    out << "date,observed_c,predicted_c,model,city\n";
    char buf[32];
    auto emit = [&](double v) {
        if (std::isnan(v)) return;  // beyond the observed record
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
        out << std::string_view(buf, ptr - buf);
    };
    for (std::size_t i = 0; i < rows.dates.size(); ++i) {
        out << format_date(rows.dates[i]) << ',';
        emit(rows.observed_c[i]);
        out << ',';
        emit(rows.predicted_c[i]);
        out << ',' << model << ',' << city << '\n';
    }
}

} // namespace tempcast
