#include "airq/lm.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "airq/error.hpp"
#include "airq/serialize.hpp"

namespace airq::lm {

using data::SupervisedFrame;
using narx::NarxNetwork;

std::string_view stop_reason_name(StopReason r) {
    switch (r) {
        case StopReason::Gradient: return "gradient";
        case StopReason::ErrorGoal: return "error_goal";
        case StopReason::MaxEpochs: return "max_epochs";
        case StopReason::Validation: return "validation";
        case StopReason::MuOverflow: return "mu_overflow";
    }
    return "unknown";
}

Eigen::VectorXd errors(const NarxNetwork& net, const SupervisedFrame& frame) {
    Eigen::VectorXd e(frame.rows());
    for (Eigen::Index q = 0; q < frame.rows(); ++q)
        e[q] = frame.targets[q] - narx::forward(net, frame.inputs.row(q).transpose());
    return e;
}

double sse(const Eigen::Ref<const Eigen::VectorXd>& e) { return 0.5 * e.squaredNorm(); }

Eigen::MatrixXd jacobian(const NarxNetwork& net, const SupervisedFrame& frame) {
    const int layers = net.layer_count();
    const auto sizes = net.topology.layer_sizes();
    const Eigen::Index n = frame.rows();
    const Eigen::Index p = net.topology.parameter_count();
    const bool tanh_hidden = net.topology.hidden_activation == narx::Activation::Tanh;

    Eigen::MatrixXd jac(n, p);
    narx::ForwardCache cache;
    std::vector<Eigen::VectorXd> delta(static_cast<std::size_t>(layers));

    for (Eigen::Index q = 0; q < n; ++q) {
        narx::forward(net, frame.inputs.row(q).transpose(), &cache);

        // Output layer: identity activation, so d e_q / d net^L = -1.
        delta[static_cast<std::size_t>(layers - 1)] = Eigen::VectorXd::Constant(1, -1.0);
        for (int k = layers - 2; k >= 0; --k) {
            Eigen::VectorXd back =
                net.layer_weights(k + 1).transpose() * delta[static_cast<std::size_t>(k) + 1];
            if (tanh_hidden) {
                const auto& o = cache.out[static_cast<std::size_t>(k) + 1];
                back.array() *= (1.0 - o.array().square());
            }
            delta[static_cast<std::size_t>(k)] = std::move(back);
        }

        Eigen::Index off = 0;
        for (int k = 0; k < layers; ++k) {
            const int rows = sizes[static_cast<std::size_t>(k) + 1];
            const int cols = sizes[static_cast<std::size_t>(k)];
            const auto& d = delta[static_cast<std::size_t>(k)];
            const auto& o = cache.out[static_cast<std::size_t>(k)];
            for (int i = 0; i < rows; ++i)
                for (int j = 0; j < cols; ++j) jac(q, off + i * cols + j) = d[i] * o[j];
            for (int i = 0; i < rows; ++i) jac(q, off + rows * cols + i) = d[i];
            off += (cols + 1) * rows;
        }
    }
    return jac;
}

Eigen::VectorXd gradient(const Eigen::MatrixXd& jac, const Eigen::VectorXd& e) {
    return jac.transpose() * e;
}

std::optional<Eigen::VectorXd> lm_step(const Eigen::MatrixXd& jac, const Eigen::VectorXd& e,
                                       double mu) {
    Eigen::MatrixXd a = jac.transpose() * jac;
    a.diagonal().array() += mu;
    const Eigen::VectorXd rhs = -(jac.transpose() * e);
    Eigen::LDLT<Eigen::MatrixXd> ldlt(a);
    if (ldlt.info() != Eigen::Success) return std::nullopt;
    // LDLT solves consistent singular systems without complaint, so inspect
    // the pivots: a collapsed or negative pivot means the damped Hessian lost
    // rank and the caller should raise mu instead of trusting the step.
    const auto& pivots = ldlt.vectorD();
    const double largest = pivots.maxCoeff();
    if (!(largest > 0.0) ||
        pivots.minCoeff() <= largest * 1e-14 * static_cast<double>(a.rows()))
        return std::nullopt;
    Eigen::VectorXd dw = ldlt.solve(rhs);
    if (!dw.allFinite()) return std::nullopt;
    const double residual = (a.selfadjointView<Eigen::Lower>() * dw - rhs).norm();
    if (residual > 1e-8 * std::max(1.0, rhs.norm())) return std::nullopt;
    return dw;
}

TrainResult train(NarxNetwork net, const SupervisedFrame& train_frame,
                  const SupervisedFrame& validation_frame, const TrainConfig& config) {
    if (train_frame.rows() == 0) throw DataError("training frame is empty");
    if (config.beta <= 1.0) throw ConfigError("beta must be > 1");
    if (config.max_epochs < 1) throw ConfigError("max_epochs must be >= 1");

    SupervisedFrame tf;
    tf.inputs = data::apply_normalization(net.norm, train_frame.inputs);
    tf.targets = data::apply_target_norm(net.norm, train_frame.targets);
    tf.feature_names = train_frame.feature_names;
    tf.lag = train_frame.lag;

    const bool validate = validation_frame.rows() > 0;
    SupervisedFrame vf;
    if (validate) {
        vf.inputs = data::apply_normalization(net.norm, validation_frame.inputs);
        vf.targets = data::apply_target_norm(net.norm, validation_frame.targets);
    }

    auto val_error = [&]() -> double { return sse(errors(net, vf)); };

    TrainTrace trace;
    Eigen::VectorXd e = errors(net, tf);
    double error = sse(e);
    if (!std::isfinite(error)) throw TrainError("non-finite training error at epoch 0", 0);

    double mu = config.mu0;
    double best_val = validate ? val_error() : 0.0;
    Eigen::VectorXd best_weights = net.weights;
    int val_streak = 0;

    auto finish = [&](StopReason reason) {
        trace.stop = reason;
        if (validate) net.weights = best_weights;
        return TrainResult{std::move(net), std::move(trace)};
    };

    if (error <= config.error_goal) return finish(StopReason::ErrorGoal);

    for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
        const Eigen::MatrixXd jac = jacobian(net, tf);
        const Eigen::VectorXd grad = gradient(jac, e);
        const double grad_norm = grad.norm();
        if (grad_norm < config.grad_tol) return finish(StopReason::Gradient);

        // Propose steps with the same Jacobian until one lowers the error.
        int rejections = 0;
        double mu_used = mu;
        bool accepted = false;
        Eigen::VectorXd e_new;
        double error_new = 0;
        while (!accepted) {
            auto dw = lm_step(jac, e, mu);
            if (dw) {
                NarxNetwork candidate = net;
                candidate.weights += *dw;
                e_new = errors(candidate, tf);
                error_new = sse(e_new);
                // A non-finite candidate error means the step overshot; treat
                // it as a rejection so a larger mu can shrink the step.
                if (std::isfinite(error_new) && error_new < error) {
                    net.weights = candidate.weights;
                    mu_used = mu;
                    accepted = true;
                    break;
                }
            }
            ++rejections;
            mu *= config.beta;
            if (mu > config.mu_max) return finish(StopReason::MuOverflow);
        }
        e = std::move(e_new);
        error = error_new;
        mu = std::max(mu / config.beta, std::numeric_limits<double>::min());

        EpochRecord rec;
        rec.epoch = epoch;
        rec.sse = error;
        rec.grad_norm = grad_norm;
        rec.mu_used = mu_used;
        rec.mu = mu;
        rec.rejections = rejections;

        if (validate) {
            const double ve = val_error();
            rec.val_sse = ve;
            if (ve < best_val) {
                best_val = ve;
                best_weights = net.weights;
                val_streak = 0;
            } else {
                ++val_streak;
            }
        }
        trace.epochs.push_back(rec);

        if (validate && val_streak >= config.val_patience) return finish(StopReason::Validation);
        if (error <= config.error_goal) return finish(StopReason::ErrorGoal);
    }
    return finish(StopReason::MaxEpochs);
}

void save_trace_csv(const TrainTrace& trace, const std::filesystem::path& path) {
    std::ostringstream out;
    out << "epoch,E,grad_norm,mu,val_E\n";
    for (const auto& rec : trace.epochs) {
        out << rec.epoch << ',' << serialize::format_double(rec.sse) << ','
            << serialize::format_double(rec.grad_norm) << ','
            << serialize::format_double(rec.mu) << ',';
        if (rec.val_sse) out << serialize::format_double(*rec.val_sse);
        out << '\n';
    }
    serialize::write_text_atomic(out.str(), path);
}

}  // namespace airq::lm
