#include "airq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "airq/aqi.hpp"
#include "airq/error.hpp"

namespace airq::eval {

namespace {

void check_lengths(const Eigen::Ref<const Eigen::VectorXd>& actual,
                   const Eigen::Ref<const Eigen::VectorXd>& predicted) {
    if (actual.size() != predicted.size())
        throw DataError("series length mismatch: " + std::to_string(actual.size()) + " vs " +
                        std::to_string(predicted.size()));
    if (actual.size() == 0) throw DataError("cannot score an empty series");
}

int to_index(double v) {
    const double clamped = std::clamp(v, 0.0, 500.0);
    return static_cast<int>(std::floor(clamped + 0.5));
}

}  // namespace

double rmse(const Eigen::Ref<const Eigen::VectorXd>& actual,
            const Eigen::Ref<const Eigen::VectorXd>& predicted) {
    check_lengths(actual, predicted);
    return std::sqrt((actual - predicted).squaredNorm() / static_cast<double>(actual.size()));
}

MapeResult mape(const Eigen::Ref<const Eigen::VectorXd>& actual,
                const Eigen::Ref<const Eigen::VectorXd>& predicted) {
    check_lengths(actual, predicted);
    MapeResult result;
    double sum = 0.0;
    int kept = 0;
    for (Eigen::Index i = 0; i < actual.size(); ++i) {
        if (std::abs(actual[i]) < 1e-9) {
            ++result.excluded;
            continue;
        }
        sum += std::abs((actual[i] - predicted[i]) / actual[i]);
        ++kept;
    }
    if (kept == 0) throw DataError("MAPE undefined: every target is near zero");
    result.value = 100.0 * sum / kept;
    return result;
}

double band_accuracy(const Eigen::Ref<const Eigen::VectorXd>& actual,
                     const Eigen::Ref<const Eigen::VectorXd>& predicted) {
    check_lengths(actual, predicted);
    Eigen::Index hits = 0;
    for (Eigen::Index i = 0; i < actual.size(); ++i)
        if (aqi::band(to_index(actual[i])) == aqi::band(to_index(predicted[i]))) ++hits;
    return 100.0 * static_cast<double>(hits) / static_cast<double>(actual.size());
}

}  // namespace airq::eval
