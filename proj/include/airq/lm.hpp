#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "airq/dataset.hpp"
#include "airq/narx.hpp"

namespace airq::lm {

struct TrainConfig {
    double mu0 = 1e-3;        // initial damping
    double beta = 10.0;       // damping multiply/divide factor
    double mu_max = 1e10;     // give up once damping exceeds this
    double grad_tol = 1e-7;   // stop when the gradient norm falls below
    double error_goal = 0.0;  // stop when the half-SSE falls below
    int max_epochs = 1000;
    int val_patience = 6;     // consecutive validation failures before stopping
    std::uint64_t seed = 0;
};

enum class StopReason { Gradient, ErrorGoal, MaxEpochs, Validation, MuOverflow };
std::string_view stop_reason_name(StopReason r);

/// One accepted epoch. `mu` is the damping value carried into the next
/// epoch (i.e. after the post-acceptance division by beta); `mu_used` is the
/// value the accepted solve ran with; `rejections` counts the discarded
/// proposals, each of which multiplied the damping by beta.
struct EpochRecord {
    int epoch = 0;
    double sse = 0;
    double grad_norm = 0;
    double mu_used = 0;
    double mu = 0;
    int rejections = 0;
    std::optional<double> val_sse;
};

struct TrainTrace {
    std::vector<EpochRecord> epochs;
    StopReason stop = StopReason::MaxEpochs;
};

/// Per-sample residuals e_q = target_q - output_q over a frame that is
/// already in normalized space.
Eigen::VectorXd errors(const narx::NarxNetwork& net, const data::SupervisedFrame& frame);

/// Half the sum of squared residuals.
double sse(const Eigen::Ref<const Eigen::VectorXd>& e);

/// N x P matrix of residual derivatives d e_q / d w_p, computed per sample by
/// backpropagation: the output-layer delta is -1 (linear output), hidden
/// deltas chain through the transposed weights scaled by the activation
/// derivative, and each entry is delta_i * o_j (o_j = 1 for bias columns).
Eigen::MatrixXd jacobian(const narx::NarxNetwork& net, const data::SupervisedFrame& frame);

/// Gradient of the half-SSE: J^T e.
Eigen::VectorXd gradient(const Eigen::MatrixXd& jac, const Eigen::VectorXd& e);

/// Damped Gauss-Newton step: solves (J^T J + mu I) dw = -J^T e.
/// Returns nullopt when the system is numerically singular (caller should
/// raise the damping and retry).
std::optional<Eigen::VectorXd> lm_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& e,
                                       double mu);

struct TrainResult {
    narx::NarxNetwork net;
    TrainTrace trace;
};

/// Levenberg-Marquardt training loop. Frames are raw; both are normalized
/// with the network's parameters up front. A proposed step is accepted only
/// when it lowers the error, dividing the damping by beta; a rejected step
/// multiplies it by beta and re-solves with the same Jacobian. Stops on
/// gradient norm, error goal, damping overflow, epoch budget, or
/// `val_patience` consecutive epochs without a new validation best; with
/// validation enabled the returned network carries the validation-best
/// weights. An empty validation frame disables validation stopping.
/// Throws TrainError when the error turns non-finite.
TrainResult train(narx::NarxNetwork net, const data::SupervisedFrame& train_frame,
                  const data::SupervisedFrame& validation_frame, const TrainConfig& config);

/// Trace export: CSV with columns epoch, E, grad_norm, mu, val_E.
void save_trace_csv(const TrainTrace& trace, const std::filesystem::path& path);

}  // namespace airq::lm
