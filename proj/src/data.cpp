#include "tempcast/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

#include "tempcast/errors.hpp"
#include "tempcast/rng.hpp"

namespace tempcast {

namespace {

constexpr double kPlausibleTempLimit = 80.0;  // deg C

std::string strip_cr(std::string line) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return line;
}

double parse_temp(std::string_view text, const std::string& where) {
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw InputError(where + ": non-numeric temperature '" + std::string(text) + "'");
    if (!std::isfinite(value))
        throw InputError(where + ": non-finite temperature");
    if (std::abs(value) > kPlausibleTempLimit)
        throw InputError(where + ": implausible temperature " + std::string(text) + " (|t| > 80 C)");
    return value;
}

} // namespace

DailySeries load_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open CSV file: " + path.string());

    std::string line;
    if (!std::getline(in, line) || strip_cr(line) != "date,t2m_celsius")
        throw InputError(path.string() + ": expected header 'date,t2m_celsius'");

    DailySeries series;
    series.city = path.stem().string();
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        line = strip_cr(line);
        if (line.empty()) continue;
        const std::string where = path.string() + ":" + std::to_string(line_no);
        const auto comma = line.find(',');
        if (comma == std::string::npos) throw InputError(where + ": expected 'date,value'");
        const Date date = parse_date(std::string_view(line).substr(0, comma));
        const double temp = parse_temp(std::string_view(line).substr(comma + 1), where);

        if (series.temps.empty()) {
            series.start = date;
        } else {
            const Date expected = series.date_at(series.temps.size());
            if (date == series.date_at(series.temps.size() - 1))
                throw InputError(where + ": duplicate date " + format_date(date));
            if (date != expected)
                throw InputError(where + ": missing day " + format_date(expected) + " (got " +
                                 format_date(date) + ")");
        }
        series.temps.push_back(temp);
    }
    if (series.temps.empty()) throw InputError(path.string() + ": no data rows");
    return series;
}

void write_csv(const DailySeries& series, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw InputError("cannot write CSV file: " + path.string());
    out << "date,t2m_celsius\n";
    char buf[32];
    for (std::size_t i = 0; i < series.size(); ++i) {
        auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, series.temps[i]);
        out << format_date(series.date_at(i)) << ',' << std::string_view(buf, ptr - buf) << '\n';
    }
}

void SplitSpec::validate() const {
    for (const YearRange& r : {train, val, test})
        if (r.first > r.last) throw InputError("split: year range upside down");
    if (train.last >= val.first || val.last >= test.first)
        throw InputError("split: year ranges must be disjoint and ordered train < val < test");
}

namespace {

DailySeries cut_years(const DailySeries& series, const YearRange& range) {
    const Date from = first_day_of_year(range.first);
    const Date to = first_day_of_year(range.last + 1);  // exclusive
    const long lo = days_between(series.start, from);
    const long hi = days_between(series.start, to);
    if (lo < 0 || hi > static_cast<long>(series.size()))
        throw InputError("split: series " + series.city + " (" + format_date(series.start) + ".." +
                         format_date(series.end()) + ") does not cover " + std::to_string(range.first) +
                         "-" + std::to_string(range.last));
    DailySeries out;
    out.city = series.city;
    out.start = from;
    out.temps.assign(series.temps.begin() + lo, series.temps.begin() + hi);
    return out;
}

} // namespace

Split split_series(const DailySeries& series, const SplitSpec& spec) {
    spec.validate();
    return {cut_years(series, spec.train), cut_years(series, spec.val), cut_years(series, spec.test)};
}

std::vector<double> Standardizer::apply(const std::vector<double>& xs) const {
    std::vector<double> out(xs.size());
    for (std::size_t i = 0; i < xs.size(); ++i) out[i] = apply(xs[i]);
    return out;
}

std::vector<double> Standardizer::invert(const std::vector<double>& zs) const {
    std::vector<double> out(zs.size());
    for (std::size_t i = 0; i < zs.size(); ++i) out[i] = invert(zs[i]);
    return out;
}

Standardizer fit_standardizer(const DailySeries& train) {
    if (train.temps.empty()) throw InputError("standardizer: empty training series");
    const auto n = static_cast<double>(train.size());
    double mean = 0.0;
    for (double v : train.temps) mean += v;
    mean /= n;
    double var = 0.0;
    for (double v : train.temps) var += (v - mean) * (v - mean);
    var /= n;  // population variance
    if (var <= 0.0)
        throw InputError("standardizer: constant training series (sigma = 0) for " + train.city);
    return {mean, std::sqrt(var)};
}

WindowedDataset make_windows(const std::vector<double>& standardized, int in_len, int out_len,
                             int stride) {
    if (in_len < 1 || out_len < 1 || stride < 1)
        throw std::invalid_argument("make_windows: in_len, out_len and stride must be positive");
    const std::size_t window = static_cast<std::size_t>(in_len) + static_cast<std::size_t>(out_len);
    if (standardized.size() < window)
        throw InputError("make_windows: series of " + std::to_string(standardized.size()) +
                         " values is shorter than one " + std::to_string(window) + "-day window");
    const std::size_t n = (standardized.size() - window) / static_cast<std::size_t>(stride) + 1;

    WindowedDataset ds;
    ds.inputs = Tensor::uninitialized({n, static_cast<std::size_t>(in_len)});
    ds.targets = Tensor::uninitialized({n, static_cast<std::size_t>(out_len)});
    for (std::size_t k = 0; k < n; ++k) {
        const std::size_t base = k * static_cast<std::size_t>(stride);
        for (int i = 0; i < in_len; ++i)
            ds.inputs.at(k, static_cast<std::size_t>(i)) = standardized[base + static_cast<std::size_t>(i)];
        for (int i = 0; i < out_len; ++i)
            ds.targets.at(k, static_cast<std::size_t>(i)) =
                standardized[base + static_cast<std::size_t>(in_len + i)];
    }
    return ds;
}

DailySeries synth_generate(double amplitude, double phase, double omega, double noise_sigma,
                           int days, std::uint64_t seed, Date start_date, std::string city) {
    if (days < 1) throw std::invalid_argument("synth_generate: days must be >= 1");
    if (noise_sigma < 0.0) throw std::invalid_argument("synth_generate: noise_sigma must be >= 0");
    Rng rng(seed);
    DailySeries series;
    series.city = std::move(city);
    series.start = start_date;
    series.temps.resize(static_cast<std::size_t>(days));
    for (int i = 0; i < days; ++i)
        series.temps[static_cast<std::size_t>(i)] =
            amplitude * std::cos(omega * i + phase) + noise_sigma * rng.gaussian();
    return series;
}

} // namespace tempcast
