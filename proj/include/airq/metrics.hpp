#pragma once

#include <Eigen/Dense>

namespace airq::eval {

/// Root mean squared error over raw (unrounded) values.
double rmse(const Eigen::Ref<const Eigen::VectorXd>& actual,
            const Eigen::Ref<const Eigen::VectorXd>& predicted);

struct MapeResult {
    /// Mean absolute percentage error over the kept pairs, in percent.
    double value = 0.0;
    /// Pairs dropped because |actual| < 1e-9 would blow up the ratio.
    int excluded = 0;
};

MapeResult mape(const Eigen::Ref<const Eigen::VectorXd>& actual,
                const Eigen::Ref<const Eigen::VectorXd>& predicted);

/// Share of pairs (in percent) whose index values fall in the same band.
/// Both series are clamped to [0, 500] and rounded half up before banding.
double band_accuracy(const Eigen::Ref<const Eigen::VectorXd>& actual,
                     const Eigen::Ref<const Eigen::VectorXd>& predicted);

}  // namespace airq::eval
