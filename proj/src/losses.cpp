#include "prefab/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "prefab/error.hpp"

namespace prefab::loss {

void Cutpoints::validate() const {
    if (!(c0 < c1))
        throw Error(ErrorKind::InvalidArgument,
                    "cutpoints must satisfy c0 < c1 (got " + std::to_string(c0) + ", " + std::to_string(c1) + ")");
}

double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

double log_sigmoid(double x) {
    if (x >= 0.0) return -std::log1p(std::exp(-x));
    return x - std::log1p(std::exp(x));
}

double bce_prob(double p_ij) { return sigmoid(p_ij); }

double bce_loss(double p_i, double p_j, int y) {
    const double p = p_j - p_i;
    return -(y * log_sigmoid(p) + (1 - y) * log_sigmoid(-p));
}

PairGrad bce_grad(double p_i, double p_j, int y) {
    const double g = sigmoid(p_j - p_i) - y;
    return {-g, g};
}

OceProbs oce_probs(double p, const Cutpoints& cuts) {
    cuts.validate();
    return {sigmoid(cuts.c0 - p), sigmoid(cuts.c1 - p) * sigmoid(p - cuts.c0) * -std::expm1(cuts.c0 - cuts.c1),
            sigmoid(p - cuts.c1)};
}

double oce_log_prob(double p, int cls, const Cutpoints& cuts) {
    cuts.validate();
    switch (cls) {
        case 0: return log_sigmoid(cuts.c0 - p);
        case 1: return log_sigmoid(cuts.c1 - p) + log_sigmoid(p - cuts.c0) + std::log(-std::expm1(cuts.c0 - cuts.c1));
        case 2: return log_sigmoid(p - cuts.c1);
        default: throw Error(ErrorKind::InvalidArgument, "OCE class must be 0, 1 or 2");
    }
}

LossValue oce_loss(double p_i, double p_j, int cls, const Cutpoints& cuts) {
    static const double kMaxLoss = -std::log(kProbFloor);
    const double nll = -oce_log_prob(p_j - p_i, cls, cuts);
    if (nll > kMaxLoss) return {kMaxLoss, true};
    return {nll, false};
}

PairGrad oce_grad(double p_i, double p_j, int cls, const Cutpoints& cuts) {
    const double p = p_j - p_i;
    double g = 0.0;
    switch (cls) {
        case 0: g = sigmoid(p - cuts.c0); break;
        case 1: g = sigmoid(p - cuts.c1) - sigmoid(cuts.c0 - p); break;
        case 2: g = -sigmoid(cuts.c1 - p); break;
        default: throw Error(ErrorKind::InvalidArgument, "OCE class must be 0, 1 or 2");
    }
    return {-g, g};
}

double cross_entropy(std::span<const double> q, int c) {
    if (c < 0 || static_cast<std::size_t>(c) >= q.size())
        throw Error(ErrorKind::DimensionMismatch,
                    "aux label " + std::to_string(c) + " outside distribution of size " + std::to_string(q.size()));
    return -std::log(std::max(q[static_cast<std::size_t>(c)], kProbFloor));
}

void softmax(std::span<double> logits) {
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (auto& v : logits) {
        v = std::exp(v - m);
        sum += v;
    }
    for (auto& v : logits) v /= sum;
}

double cross_entropy_logits(std::span<const double> logits, int c, std::span<double> grad) {
    if (c < 0 || static_cast<std::size_t>(c) >= logits.size() || grad.size() != logits.size())
        throw Error(ErrorKind::DimensionMismatch, "aux label / logits size mismatch");
    const double m = *std::max_element(logits.begin(), logits.end());
    double sum = 0.0;
    for (std::size_t k = 0; k < logits.size(); ++k) sum += std::exp(logits[k] - m);
    const double lse = m + std::log(sum);
    for (std::size_t k = 0; k < logits.size(); ++k) grad[k] = std::exp(logits[k] - lse);
    grad[static_cast<std::size_t>(c)] -= 1.0;
    return lse - logits[static_cast<std::size_t>(c)];
}

double total_loss(std::span<const BatchItem> batch, const Cutpoints& cuts, double alpha) {
    cuts.validate();
    if (batch.empty()) return 0.0;
    double sum = 0.0;
    for (const auto& item : batch) {
        double l = oce_loss(item.p_i, item.p_j, item.cls, cuts).value;
        if (!item.q_i.empty() || !item.q_j.empty()) {
            if (item.q_i.size() != item.q_j.size())
                throw Error(ErrorKind::DimensionMismatch, "aux distributions differ in size: " +
                                                              std::to_string(item.q_i.size()) + " vs " +
                                                              std::to_string(item.q_j.size()));
            l += alpha * (cross_entropy(item.q_i, item.aux) + cross_entropy(item.q_j, item.aux));
        }
        sum += l;
    }
    return sum / static_cast<double>(batch.size());
}

}  // namespace prefab::loss
