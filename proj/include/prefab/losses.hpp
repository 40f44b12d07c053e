#pragma once

#include <span>
#include <vector>

namespace prefab::loss {

/// Fixed ordinal thresholds on the latent difference p_ij = p_j - p_i.
struct Cutpoints {
    double c0 = -1.0;
    double c1 = 1.0;

    void validate() const;  // throws InvalidArgument unless c0 < c1
};

/// Probabilities below this are clamped before taking the log.
inline constexpr double kProbFloor = 1e-300;

double sigmoid(double x);
/// log σ(x) without overflow or cancellation for any finite x.
double log_sigmoid(double x);

/// Pairwise logistic (RankNet) probability that j is preferred over i.
double bce_prob(double p_ij);
/// y = 1 means segment j is preferred.
double bce_loss(double p_i, double p_j, int y);

struct OceProbs {
    double p0;  // decrease  (class 0)
    double p1;  // no change (class 1)
    double p2;  // increase  (class 2)
};

OceProbs oce_probs(double p_ij, const Cutpoints& cuts);
/// log P(class | p_ij). The middle class is evaluated as
/// log σ(c1 - p) + log σ(p - c0) + log(1 - e^{c0 - c1}), which never cancels.
double oce_log_prob(double p_ij, int cls, const Cutpoints& cuts);

struct LossValue {
    double value = 0.0;
    bool clamped = false;  // the class probability underflowed kProbFloor
};

LossValue oce_loss(double p_i, double p_j, int cls, const Cutpoints& cuts);

/// Partial derivatives of a pairwise loss with respect to both utilities.
struct PairGrad {
    double d_pi = 0.0;
    double d_pj = 0.0;
};

PairGrad bce_grad(double p_i, double p_j, int y);
PairGrad oce_grad(double p_i, double p_j, int cls, const Cutpoints& cuts);

/// -log q_c on a probability vector (clamped at kProbFloor).
double cross_entropy(std::span<const double> q, int c);
/// Softmax in place, max-shifted.
void softmax(std::span<double> logits);
/// -log softmax(logits)_c and its gradient (softmax - onehot) written to `grad`.
double cross_entropy_logits(std::span<const double> logits, int c, std::span<double> grad);

struct BatchItem {
    double p_i = 0.0;
    double p_j = 0.0;
    int cls = 1;  // OCE class 0/1/2
    std::vector<double> q_i;
    std::vector<double> q_j;
    int aux = 0;  // trend-cluster label
};

/// Mean over the batch of OCE(y_ij, p_ij) + alpha * (CE(c, q_i) + CE(c, q_j)).
/// Items with empty q vectors contribute no auxiliary term.
double total_loss(std::span<const BatchItem> batch, const Cutpoints& cuts, double alpha);

}  // namespace prefab::loss
