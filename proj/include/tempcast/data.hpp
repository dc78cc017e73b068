#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "tempcast/dates.hpp"
#include "tempcast/tensor.hpp"

namespace tempcast {

// Daily-mean temperatures on strictly consecutive calendar days.
struct DailySeries {
    std::string city;
    Date start{};
    std::vector<double> temps;  // deg C

    std::size_t size() const { return temps.size(); }
    Date date_at(std::size_t i) const { return start + std::chrono::days{static_cast<long>(i)}; }
    Date end() const { return date_at(temps.empty() ? 0 : temps.size() - 1); }
};

// CSV schema: header `date,t2m_celsius`, ISO dates, one row per consecutive
// day. Gaps, duplicates, non-numeric values and |t| > 80 C are rejected.
DailySeries load_csv(const std::filesystem::path& path);
void write_csv(const DailySeries& series, const std::filesystem::path& path);

struct YearRange {
    int first = 0, last = 0;  // inclusive calendar years
};

struct SplitSpec {
    YearRange train{2008, 2012};
    YearRange val{2013, 2015};
    YearRange test{2016, 2018};

    void validate() const;  // ranges well-formed, disjoint, ordered
};

struct Split {
    DailySeries train, val, test;
};

// Cuts the three year ranges out of the series; the series must cover them.
Split split_series(const DailySeries& series, const SplitSpec& spec);

// Affine map to zero-mean unit-variance units, fitted on the training split
// only (population standard deviation).
struct Standardizer {
    double mu = 0.0;
    double sigma = 1.0;

    double apply(double x) const { return (x - mu) / sigma; }
    double invert(double z) const { return z * sigma + mu; }
    std::vector<double> apply(const std::vector<double>& xs) const;
    std::vector<double> invert(const std::vector<double>& zs) const;
};

Standardizer fit_standardizer(const DailySeries& train);

// Sliding (input, target) windows over one split's standardized values.
// Window k: input [k*stride, k*stride + in_len), target the next out_len.
struct WindowedDataset {
    Tensor inputs;   // [N, in_len]
    Tensor targets;  // [N, out_len]

    std::size_t count() const { return inputs.shape().empty() ? 0 : inputs.shape()[0]; }
};

WindowedDataset make_windows(const std::vector<double>& standardized, int in_len = 90,
                             int out_len = 30, int stride = 1);

// amplitude * cos(omega * i + phase) + gaussian(0, noise_sigma), seeded.
DailySeries synth_generate(double amplitude, double phase, double omega, double noise_sigma,
                           int days, std::uint64_t seed, Date start_date, std::string city);

} // namespace tempcast
