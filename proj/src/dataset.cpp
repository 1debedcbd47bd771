#include "airq/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_map>

#include "airq/error.hpp"

namespace airq::data {

namespace {

constexpr std::array<std::string_view, 6> kPollutantNames = {"no2", "pm10", "o3",
                                                             "pm25", "co", "so2"};

std::string trim(std::string_view s) {
    const char* ws = " \t\r\n\"";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return std::string(s.substr(b, e - b + 1));
}

std::optional<double> parse_number(std::string_view cell) {
    if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
    double value = 0;
    auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    if (ec != std::errc{} || ptr != cell.data() + cell.size()) return std::nullopt;
    if (!std::isfinite(value)) return std::nullopt;
    return value;
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string::size_type start = 0;
    while (true) {
        auto comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

}  // namespace

std::string_view pollutant_name(Pollutant p) {
    return kPollutantNames[static_cast<std::size_t>(p)];
}

std::optional<Pollutant> pollutant_from_name(std::string_view name) {
    for (std::size_t i = 0; i < kPollutantNames.size(); ++i)
        if (kPollutantNames[i] == name) return kAllPollutants[i];
    return std::nullopt;
}

bool is_meteo_feature(std::string_view name) {
    return std::find(kMeteoFeatures.begin(), kMeteoFeatures.end(), name) !=
           kMeteoFeatures.end();
}

std::optional<double> ObservationRecord::field(std::string_view name) const {
    if (auto it = meteo.find(name); it != meteo.end()) return it->second;
    if (auto p = pollutant_from_name(name)) {
        if (auto it = pollutants.find(*p); it != pollutants.end()) return it->second;
        return std::nullopt;
    }
    if (auto it = derived.find(name); it != derived.end()) return it->second;
    return std::nullopt;
}

CsvSchema CsvSchema::defaults() {
    CsvSchema s;
    for (auto f : kMeteoFeatures) s.meteo[std::string(f)] = std::string(f);
    for (auto p : kAllPollutants) s.pollutants[p] = std::string(pollutant_name(p));
    return s;
}

ParseResult parse_csv(const std::filesystem::path& path, const CsvSchema& schema) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open CSV file: " + path.string());

    std::string header_line;
    if (!std::getline(in, header_line))
        throw DataError("missing header row in " + path.string());
    if (header_line.size() >= 3 && header_line.compare(0, 3, "\xEF\xBB\xBF") == 0)
        header_line.erase(0, 3);

    auto header = split_line(header_line);
    std::unordered_map<std::string, std::size_t> col_of;
    for (std::size_t i = 0; i < header.size(); ++i) col_of.emplace(header[i], i);

    auto find_col = [&](const std::string& name) -> std::optional<std::size_t> {
        auto it = col_of.find(name);
        if (it == col_of.end()) return std::nullopt;
        return it->second;
    };

    auto ts_col = find_col(schema.timestamp);
    if (!ts_col)
        throw DataError("timestamp column '" + schema.timestamp + "' not found in " +
                        path.string());
    auto site_col = schema.site.empty() ? std::nullopt : find_col(schema.site);

    ParseResult result;
    struct Bound {
        std::size_t col;
        bool is_pollutant;
        std::string feature;   // canonical name
        Pollutant pollutant{};
    };
    std::vector<Bound> bound;
    for (const auto& [feature, column] : schema.meteo) {
        if (auto c = find_col(column)) {
            bound.push_back({*c, false, feature});
            result.observed_fields.push_back(feature);
        } else if (schema.strict) {
            throw ConfigError("column '" + column + "' for feature '" + feature +
                              "' not found in " + path.string());
        }
    }
    for (const auto& [kind, column] : schema.pollutants) {
        if (auto c = find_col(column)) {
            bound.push_back({*c, true, std::string(pollutant_name(kind)), kind});
            result.observed_fields.push_back(std::string(pollutant_name(kind)));
        } else if (schema.strict) {
            throw ConfigError("column '" + column + "' for pollutant '" +
                              std::string(pollutant_name(kind)) + "' not found in " +
                              path.string());
        }
    }

    std::string default_site = path.stem().string();
    std::string line;
    while (std::getline(in, line)) {
        if (trim(line).empty()) continue;
        auto cells = split_line(line);
        auto cell = [&](std::size_t c) -> std::string_view {
            return c < cells.size() ? std::string_view(cells[c]) : std::string_view{};
        };

        auto stamp = parse_timestamp(cell(*ts_col));
        if (!stamp) {
            ++result.bad_rows;
            continue;
        }
        ObservationRecord rec;
        rec.time = *stamp;
        rec.site = site_col ? std::string(cell(*site_col)) : default_site;
        if (rec.site.empty()) rec.site = default_site;

        for (const auto& b : bound) {
            auto raw = cell(b.col);
            if (raw.empty()) continue;
            auto value = parse_number(raw);
            if (!value) {
                ++result.bad_cells;
                continue;
            }
            if (!b.is_pollutant) {
                // Domain constraints: violations are treated as bad sensor
                // readings and dropped to missing.
                if (b.feature == "wind_direction" && (*value < 0.0 || *value >= 360.0)) {
                    ++result.bad_cells;
                    continue;
                }
                if (b.feature == "humidity" && (*value < 0.0 || *value > 100.0)) {
                    ++result.bad_cells;
                    continue;
                }
                rec.meteo[b.feature] = *value;
            } else {
                rec.pollutants[b.pollutant] = *value;
            }
        }
        result.records.push_back(std::move(rec));
    }
    return result;
}

CleanResult clean(const std::vector<ObservationRecord>& records,
                  const std::vector<std::string>& required) {
    CleanResult out;
    out.records.reserve(records.size());
    for (const auto& rec : records) {
        bool negative = false;
        for (const auto& [kind, value] : rec.pollutants) {
            if (value < 0.0) {
                negative = true;
                break;
            }
        }
        if (negative) {
            ++out.removed_negative;
            continue;
        }
        bool complete = true;
        for (const auto& name : required) {
            if (!rec.field(name)) {
                complete = false;
                break;
            }
        }
        if (!complete) {
            ++out.removed_missing;
            continue;
        }
        out.records.push_back(rec);
    }
    return out;
}

std::vector<std::string> available_meteo(const std::vector<ObservationRecord>& records) {
    std::vector<std::string> out;
    for (auto f : kMeteoFeatures) {
        for (const auto& rec : records) {
            if (rec.meteo.count(f)) {
                out.emplace_back(f);
                break;
            }
        }
    }
    return out;
}

std::vector<Pollutant> available_pollutants(const std::vector<ObservationRecord>& records) {
    std::vector<Pollutant> out;
    for (auto p : kAllPollutants) {
        for (const auto& rec : records) {
            if (rec.pollutants.count(p)) {
                out.push_back(p);
                break;
            }
        }
    }
    return out;
}

std::vector<std::string> available_fields(const std::vector<ObservationRecord>& records) {
    auto out = available_meteo(records);
    for (auto p : available_pollutants(records)) out.emplace_back(pollutant_name(p));
    return out;
}

SupervisedFrame SupervisedFrame::select(const std::vector<Eigen::Index>& idx) const {
    SupervisedFrame out;
    out.feature_names = feature_names;
    out.lag = lag;
    out.inputs.resize(static_cast<Eigen::Index>(idx.size()), inputs.cols());
    out.targets.resize(static_cast<Eigen::Index>(idx.size()));
    for (std::size_t r = 0; r < idx.size(); ++r) {
        out.inputs.row(static_cast<Eigen::Index>(r)) = inputs.row(idx[r]);
        out.targets[static_cast<Eigen::Index>(r)] = targets[idx[r]];
    }
    return out;
}

SupervisedFrame build_frame(const std::vector<ObservationRecord>& records,
                            std::string_view target,
                            const std::vector<std::string>& exogenous,
                            int lag,
                            const std::vector<int>& extra_lags) {
    if (lag < 1) throw DataError("lag must be >= 1");
    for (int l : extra_lags)
        if (l < 1) throw DataError("extra lags must be >= 1");

    // Hour index; duplicate hours keep the first occurrence.
    std::map<HourStamp, const ObservationRecord*> by_hour;
    for (const auto& rec : records) by_hour.emplace(rec.time, &rec);

    std::vector<int> lags;
    lags.push_back(lag);
    lags.insert(lags.end(), extra_lags.begin(), extra_lags.end());

    SupervisedFrame frame;
    frame.lag = lag;
    frame.feature_names = exogenous;
    for (int l : lags)
        frame.feature_names.push_back(std::string(target) + "[t-" + std::to_string(l) + "]");

    const Eigen::Index f = static_cast<Eigen::Index>(frame.feature_names.size());
    std::vector<double> flat;
    std::vector<double> targets;

    for (const auto& [hour, rec] : by_hour) {
        auto y = rec->field(target);
        if (!y) continue;
        std::vector<double> row;
        row.reserve(static_cast<std::size_t>(f));
        bool complete = true;
        for (const auto& name : exogenous) {
            auto v = rec->field(name);
            if (!v) {
                complete = false;
                break;
            }
            row.push_back(*v);
        }
        if (!complete) continue;
        for (int l : lags) {
            auto prev = by_hour.find(hour - l);
            if (prev == by_hour.end()) {
                complete = false;
                break;
            }
            auto v = prev->second->field(target);
            if (!v) {
                complete = false;
                break;
            }
            row.push_back(*v);
        }
        if (!complete) continue;
        flat.insert(flat.end(), row.begin(), row.end());
        targets.push_back(*y);
    }

    const Eigen::Index n = static_cast<Eigen::Index>(targets.size());
    if (n < 2)
        throw DataError("insufficient data: only " + std::to_string(n) +
                        " usable rows after lag join");
    frame.inputs.resize(n, f);
    for (Eigen::Index r = 0; r < n; ++r)
        for (Eigen::Index c = 0; c < f; ++c)
            frame.inputs(r, c) = flat[static_cast<std::size_t>(r * f + c)];
    frame.targets = Eigen::Map<Eigen::VectorXd>(targets.data(), n);
    return frame;
}

NormalizationParams NormalizationParams::identity(std::size_t feature_count) {
    NormalizationParams p;
    p.features.assign(feature_count, MinMax{-1.0, 1.0});
    p.target = MinMax{-1.0, 1.0};
    return p;
}

double apply_norm(double x, const MinMax& m) {
    if (m.max <= m.min) return 0.0;
    return 2.0 * (x - m.min) / (m.max - m.min) - 1.0;
}

double invert_norm(double z, const MinMax& m) {
    if (m.max <= m.min) return m.min;
    return (z + 1.0) * 0.5 * (m.max - m.min) + m.min;
}

NormalizationParams fit_normalization(const SupervisedFrame& frame) {
    if (frame.rows() == 0) throw DataError("cannot fit normalization on an empty frame");
    NormalizationParams p;
    p.features.resize(static_cast<std::size_t>(frame.cols()));
    for (Eigen::Index c = 0; c < frame.cols(); ++c) {
        p.features[static_cast<std::size_t>(c)] =
            MinMax{frame.inputs.col(c).minCoeff(), frame.inputs.col(c).maxCoeff()};
    }
    p.target = MinMax{frame.targets.minCoeff(), frame.targets.maxCoeff()};
    return p;
}

Eigen::MatrixXd apply_normalization(const NormalizationParams& p, const Eigen::MatrixXd& inputs) {
    if (static_cast<std::size_t>(inputs.cols()) != p.features.size())
        throw ConfigError("normalization parameters do not match input width");
    Eigen::MatrixXd out(inputs.rows(), inputs.cols());
    for (Eigen::Index c = 0; c < inputs.cols(); ++c) {
        const auto& m = p.features[static_cast<std::size_t>(c)];
        for (Eigen::Index r = 0; r < inputs.rows(); ++r)
            out(r, c) = apply_norm(inputs(r, c), m);
    }
    return out;
}

Eigen::VectorXd apply_target_norm(const NormalizationParams& p, const Eigen::VectorXd& y) {
    Eigen::VectorXd out(y.size());
    for (Eigen::Index i = 0; i < y.size(); ++i) out[i] = apply_norm(y[i], p.target);
    return out;
}

Eigen::VectorXd invert_target_norm(const NormalizationParams& p, const Eigen::VectorXd& z) {
    Eigen::VectorXd out(z.size());
    for (Eigen::Index i = 0; i < z.size(); ++i) out[i] = invert_norm(z[i], p.target);
    return out;
}

SplitIndices split(std::size_t n, const SplitRatios& ratios, std::uint64_t seed) {
    if (ratios.train < 0 || ratios.validation < 0 || ratios.test < 0)
        throw DataError("split ratios must be non-negative");
    if (ratios.train + ratios.validation + ratios.test > 1.0 + 1e-12)
        throw DataError("split ratios must sum to at most 1");

    std::vector<Eigen::Index> perm(n);
    std::iota(perm.begin(), perm.end(), Eigen::Index{0});
    std::mt19937_64 rng(seed);
    std::shuffle(perm.begin(), perm.end(), rng);

    auto count = [n](double r) {
        return static_cast<std::size_t>(std::llround(r * static_cast<double>(n)));
    };
    const std::size_t n_test = std::min(count(ratios.test), n);
    std::size_t b1 = count(ratios.train);
    std::size_t b2 = count(ratios.train + ratios.validation);
    b2 = std::min(b2, n - n_test);
    b1 = std::min(b1, b2);

    SplitIndices idx;
    idx.seed = seed;
    idx.train.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(b1));
    idx.validation.assign(perm.begin() + static_cast<std::ptrdiff_t>(b1),
                          perm.begin() + static_cast<std::ptrdiff_t>(b2));
    idx.test.assign(perm.end() - static_cast<std::ptrdiff_t>(n_test), perm.end());

    if (ratios.train > 0 && idx.train.empty())
        throw DataError("insufficient data: empty training partition");
    if (ratios.validation > 0 && idx.validation.empty())
        throw DataError("insufficient data: empty validation partition");
    if (ratios.test > 0 && idx.test.empty())
        throw DataError("insufficient data: empty test partition");
    return idx;
}

double quantile(const std::vector<double>& sorted, double p) {
    if (sorted.empty()) return 0.0;
    if (sorted.size() == 1) return sorted.front();
    double h = p * static_cast<double>(sorted.size() - 1);
    auto lo = static_cast<std::size_t>(std::floor(h));
    auto hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::map<std::string, FieldSummary> summarize(const std::vector<ObservationRecord>& records,
                                              const std::vector<std::string>& fields) {
    std::vector<std::string> names = fields;
    if (names.empty()) {
        for (auto f : kMeteoFeatures) names.emplace_back(f);
        for (auto p : kAllPollutants) names.emplace_back(pollutant_name(p));
        for (const auto& rec : records)
            for (const auto& [key, value] : rec.derived)
                if (std::find(names.begin(), names.end(), key) == names.end())
                    names.push_back(key);
    }

    std::map<std::string, FieldSummary> out;
    for (const auto& name : names) {
        FieldSummary s;
        std::vector<double> values;
        for (const auto& rec : records) {
            if (auto v = rec.field(name))
                values.push_back(*v);
            else
                ++s.missing;
        }
        s.present = values.size();
        if (!values.empty()) {
            std::sort(values.begin(), values.end());
            FiveNumber f;
            f.min = values.front();
            f.q1 = quantile(values, 0.25);
            f.median = quantile(values, 0.5);
            f.q3 = quantile(values, 0.75);
            f.max = values.back();
            s.stats = f;
        }
        out[name] = s;
    }
    return out;
}

}  // namespace airq::data
