#include "selftrack/affinity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace selftrack {

std::string FeatureSet::name() const {
  std::string out;
  auto add = [&](const char* part) {
    if (!out.empty()) out += '+';
    out += part;
  };
  if (iou_dm) add("iou");
  if (distance) add("dist");
  if (product) add("iou*dist");
  return out.empty() ? "bias" : out;
}

FeatureSet FeatureSet::parse(const std::string& text) {
  FeatureSet set{false, false, false};
  if (text == "bias") return set;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, '+')) {
    if (part == "iou") {
      set.iou_dm = true;
    } else if (part == "dist") {
      set.distance = true;
    } else if (part == "iou*dist") {
      set.product = true;
    } else {
      throw std::invalid_argument("unknown feature '" + part + "' (expected iou, dist, iou*dist)");
    }
  }
  return set;
}

std::vector<double> make_features(const FeatureSet& set, const PairCues& cues) {
  std::vector<double> f;
  f.reserve(set.size());
  f.push_back(1.0);
  if (set.iou_dm) f.push_back(cues.iou_dm);
  if (set.distance) f.push_back(cues.distance);
  if (set.product) f.push_back(cues.iou_dm * cues.distance);
  return f;
}

void AffinityConfig::validate() const {
  if (!(t_low >= 0.0 && t_low < t_high && t_high <= 1.0)) {
    throw std::invalid_argument("affinity thresholds must satisfy 0 <= t_low < t_high <= 1");
  }
}

int label_for(double iou_dm, const AffinityConfig& config) {
  if (iou_dm > config.t_high) return 1;
  if (iou_dm < config.t_low) return 0;
  return -1;
}

std::vector<LabeledPair> generate_labels(const MatchTable& table, const AffinityConfig& config) {
  config.validate();
  std::vector<LabeledPair> out;
  for (const auto& [pair, value] : table.entries()) {
    const int label = label_for(value, config);
    if (label >= 0) out.push_back({pair.first, pair.second, label});
  }
  return out;
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

namespace {

// log(1 + exp(z)) without overflow
double softplus(double z) { return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

// Solves A x = b for symmetric positive definite A (row-major, n x n).
std::vector<double> cholesky_solve(std::vector<double> a, std::vector<double> b, std::size_t n) {
  for (std::size_t j = 0; j < n; ++j) {
    double d = a[j * n + j];
    for (std::size_t k = 0; k < j; ++k) d -= a[j * n + k] * a[j * n + k];
    if (!(d > 0.0)) throw std::runtime_error("logistic fit: Hessian is not positive definite");
    d = std::sqrt(d);
    a[j * n + j] = d;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a[i * n + j];
      for (std::size_t k = 0; k < j; ++k) s -= a[i * n + k] * a[j * n + k];
      a[i * n + j] = s / d;
    }
  }
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) b[i] -= a[i * n + k] * b[k];
    b[i] /= a[i * n + i];
  }
  for (std::size_t i = n; i-- > 0;) {
    for (std::size_t k = i + 1; k < n; ++k) b[i] -= a[k * n + i] * b[k];
    b[i] /= a[i * n + i];
  }
  return b;
}

}  // namespace

LogisticFit fit_logistic(std::span<const std::vector<double>> features, std::span<const int> labels,
                         const FeatureSet& set, const LogisticOptions& options) {
  if (features.size() != labels.size()) throw std::invalid_argument("logistic fit: one label per feature vector");
  const std::size_t dim = set.size();
  std::size_t positives = 0;
  for (std::size_t i = 0; i < features.size(); ++i) {
    if (features[i].size() != dim) {
      throw std::invalid_argument("logistic fit: feature vector " + std::to_string(i) + " has length " +
                                  std::to_string(features[i].size()) + ", expected " + std::to_string(dim));
    }
    for (double v : features[i]) {
      if (!std::isfinite(v)) throw std::invalid_argument("logistic fit: non-finite feature");
    }
    if (labels[i] != 0 && labels[i] != 1) throw std::invalid_argument("logistic fit: labels must be 0 or 1");
    positives += labels[i];
  }
  if (positives == 0 || positives == labels.size()) {
    throw std::invalid_argument("logistic fit needs both classes; got " + std::to_string(positives) + " same and " +
                                std::to_string(labels.size() - positives) + " different examples");
  }
  const double inv_n = 1.0 / static_cast<double>(features.size());

  auto loss = [&](const std::vector<double>& beta) {
    double total = 0.0;
    for (std::size_t i = 0; i < features.size(); ++i) {
      const double z = dot(beta, features[i]);
      total += softplus(z) - labels[i] * z;
    }
    double reg = 0.0;
    for (std::size_t j = 1; j < dim; ++j) reg += beta[j] * beta[j];
    return total * inv_n + 0.5 * options.l2 * reg;
  };

  LogisticFit fit;
  fit.model.features = set;
  std::vector<double>& beta = fit.model.beta;
  beta.assign(dim, 0.0);
  double current = loss(beta);
  fit.loss_trace.push_back(current);

  std::vector<double> grad(dim);
  std::vector<double> hess(dim * dim);
  for (int iter = 0; iter < options.max_iterations; ++iter) {
    std::fill(grad.begin(), grad.end(), 0.0);
    std::fill(hess.begin(), hess.end(), 0.0);
    for (std::size_t i = 0; i < features.size(); ++i) {
      const auto& f = features[i];
      const double p = sigmoid(dot(beta, f));
      const double r = (p - labels[i]) * inv_n;
      const double w = p * (1.0 - p) * inv_n;
      for (std::size_t a = 0; a < dim; ++a) {
        grad[a] += r * f[a];
        for (std::size_t b = 0; b <= a; ++b) hess[a * dim + b] += w * f[a] * f[b];
      }
    }
    for (std::size_t a = 0; a < dim; ++a) {
      for (std::size_t b = 0; b < a; ++b) hess[b * dim + a] = hess[a * dim + b];
      if (a > 0) {
        grad[a] += options.l2 * beta[a];
        hess[a * dim + a] += options.l2;
      }
      hess[a * dim + a] += 1e-12;
    }
    std::vector<double> neg(dim);
    for (std::size_t a = 0; a < dim; ++a) neg[a] = -grad[a];
    const std::vector<double> step = cholesky_solve(hess, neg, dim);
    const double decrement = -dot(grad, step);
    if (decrement < options.tolerance) break;

    double t = 1.0;
    std::vector<double> trial(dim);
    bool accepted = false;
    for (int halving = 0; halving < 60; ++halving, t *= 0.5) {
      for (std::size_t a = 0; a < dim; ++a) trial[a] = beta[a] + t * step[a];
      const double value = loss(trial);
      if (value <= current - 1e-4 * t * decrement) {
        beta = trial;
        current = value;
        accepted = true;
        break;
      }
    }
    if (!accepted) break;
    fit.loss_trace.push_back(current);
  }
  return fit;
}

double predict_p_same(const AffinityModel& model, std::span<const double> features) {
  if (features.size() != model.beta.size()) {
    throw std::invalid_argument("feature vector has length " + std::to_string(features.size()) + ", model expects " +
                                std::to_string(model.beta.size()));
  }
  return sigmoid(dot(model.beta, features));
}

double predict_p_same(const AffinityModel& model, const PairCues& cues) {
  return predict_p_same(model, make_features(model.features, cues));
}

double edge_cost(double p_same, double epsilon) {
  const double p = std::clamp(p_same, epsilon, 1.0 - epsilon);
  return logit(p);
}

MulticutInstance assemble_costs(const MulticutInstance& instance, std::span<const int> frames,
                                const AffinityModel& nearby, const AffinityModel& lifted,
                                std::span<const PairCues> regular_cues, std::span<const PairCues> lifted_cues,
                                double epsilon) {
  if (frames.size() != instance.num_nodes()) throw std::invalid_argument("assemble_costs: one frame per node");
  if (regular_cues.size() != instance.num_edges()) {
    throw std::invalid_argument("assemble_costs: missing features for regular edges (" +
                                std::to_string(regular_cues.size()) + " of " + std::to_string(instance.num_edges()) +
                                ")");
  }
  if (lifted_cues.size() != instance.num_lifted_edges()) {
    throw std::invalid_argument("assemble_costs: missing features for lifted edges (" +
                                std::to_string(lifted_cues.size()) + " of " +
                                std::to_string(instance.num_lifted_edges()) + ")");
  }
  if (instance.num_lifted_edges() > 0 && (lifted.features.iou_dm || lifted.features.product)) {
    throw std::invalid_argument("assemble_costs: the lifted model may only use the latent distance");
  }
  const double same_frame = edge_cost(0.0, epsilon);
  std::vector<double> regular(instance.num_edges());
  for (std::size_t i = 0; i < regular.size(); ++i) {
    const Edge& e = instance.edges()[i];
    regular[i] = frames[e.u] == frames[e.v] ? same_frame
                                            : edge_cost(predict_p_same(nearby, regular_cues[i]), epsilon);
  }
  std::vector<double> lifted_costs(instance.num_lifted_edges());
  for (std::size_t i = 0; i < lifted_costs.size(); ++i) {
    lifted_costs[i] = edge_cost(predict_p_same(lifted, lifted_cues[i]), epsilon);
  }
  return instance.with_costs(regular, lifted_costs);
}

}  // namespace selftrack
