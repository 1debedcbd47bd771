#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <vector>

#include "airq/dataset.hpp"

namespace airq::linreg {

/// Ordinary least squares fit y = w.x + b.
struct LinearModel {
    Eigen::VectorXd weights;
    double intercept = 0.0;
    std::vector<std::string> feature_names;
    /// True when the design matrix was rank deficient and the minimum-norm
    /// solution was taken instead.
    bool rank_deficient = false;
};

/// Fits by least squares on the raw (unnormalized) frame. Requires more rows
/// than columns; throws DataError otherwise.
LinearModel fit_lr(const data::SupervisedFrame& frame);

/// Applies the model row-wise. Column count must match the fit.
Eigen::VectorXd predict_lr(const LinearModel& model, const Eigen::MatrixXd& inputs);

double predict_lr(const LinearModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

void save_model(const LinearModel& model, const std::filesystem::path& path);
LinearModel load_model(const std::filesystem::path& path);

}  // namespace airq::linreg
