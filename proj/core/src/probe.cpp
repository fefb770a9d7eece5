// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#include "probesearch/probe.hpp"

#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "probesearch/errors.hpp"
#include "probesearch/metrics.hpp"

namespace probesearch {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

double softplus(double z) { return std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z))); }

struct Standardizer {
  std::vector<double> mean;
  std::vector<double> std;
};

Standardizer fit_standardizer(const ProbeDataset& data, bool enabled) {
  const auto d = static_cast<std::size_t>(data.activation_dim);
  if (!enabled) return {};
  Standardizer s{std::vector<double>(d, 0.0), std::vector<double>(d, 0.0)};
  const double n = static_cast<double>(data.size());
  for (const auto& e : data.examples) {
    for (std::size_t j = 0; j < d; ++j) s.mean[j] += e.features[j];
  }
  for (double& m : s.mean) m /= n;
  for (const auto& e : data.examples) {
    for (std::size_t j = 0; j < d; ++j) {
      const double c = e.features[j] - s.mean[j];
      s.std[j] += c * c;
    }
  }
  for (double& v : s.std) {
    v = std::sqrt(v / n);
    if (!(v > 1e-12)) v = 1.0;  // constant feature
  }
  return s;
}

LinearObjective make_objective(const ProbeDataset& data, const Standardizer& s, double l2_lambda) {
  if (data.examples.empty()) throw DatasetError("empty training set");
  if (!data.has_both_labels()) throw DatasetError("training set needs both labels");
  const auto d = static_cast<std::size_t>(data.activation_dim);
  std::vector<double> x;
  x.reserve(data.size() * d);
  std::vector<int> y;
  y.reserve(data.size());
  for (const auto& e : data.examples) {
    if (e.features.size() != d) throw DatasetError("example dimension does not match the dataset");
    for (std::size_t j = 0; j < d; ++j) {
      x.push_back(s.mean.empty() ? e.features[j] : (e.features[j] - s.mean[j]) / s.std[j]);
    }
    y.push_back(e.label);
  }
  return LinearObjective(std::move(x), data.size(), d, std::move(y), l2_lambda);
}

LinearProbe make_probe(ProbeKind kind, const ProbeDataset& data, Standardizer s, const Eigen::VectorXd& w, double b,
                       const TrainHyper& hyper, int epochs, double loss) {
  LinearProbe probe;
  probe.weights.assign(w.data(), w.data() + w.size());
  probe.bias = b;
  probe.feat_mean = std::move(s.mean);
  probe.feat_std = std::move(s.std);
  probe.kind = kind;
  probe.layer = data.layer;
  probe.rep_kind = data.rep_kind;
  probe.train_meta = TrainMeta{epochs, hyper.learning_rate, hyper.l2_lambda, loss};
  return probe;
}

void validate_hyper(const TrainHyper& hyper) {
  if (!(hyper.learning_rate > 0.0)) throw std::invalid_argument("learning_rate must be > 0");
  if (hyper.l2_lambda < 0.0) throw std::invalid_argument("l2_lambda must be >= 0");
  if (hyper.max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
}

}  // namespace

std::string_view to_string(ProbeKind kind) { return kind == ProbeKind::kLinearSvm ? "svm" : "lr"; }

ProbeKind parse_probe_kind(std::string_view text) {
  if (text == "lr") return ProbeKind::kLogisticRegression;
  if (text == "svm") return ProbeKind::kLinearSvm;
  throw std::invalid_argument("unknown probe kind: " + std::string(text));
}

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double LinearProbe::logit(std::span<const double> x) const {
  if (x.size() != weights.size()) {
    throw std::invalid_argument("probe expects dimension " + std::to_string(weights.size()) + ", got " +
                                std::to_string(x.size()));
  }
  double z = bias;
  const bool standardized = !feat_mean.empty();
  for (std::size_t j = 0; j < x.size(); ++j) {
    const double v = standardized ? (x[j] - feat_mean[j]) / feat_std[j] : x[j];
    z += weights[j] * v;
  }
  return z;
}

double LinearProbe::logit(std::span<const float> x) const {
  std::vector<double> widened(x.begin(), x.end());
  return logit(std::span<const double>(widened));
}

double LinearProbe::probability(std::span<const float> x) const { return sigmoid(logit(x)); }

double ProbeMetrics::auc() const {
  if (!auc_roc) throw UndefinedMetricError("AUC undefined on a single-class evaluation set");
  return *auc_roc;
}

LinearObjective::LinearObjective(std::vector<double> features, std::size_t rows, std::size_t cols,
                                 std::vector<int> labels, double l2_lambda)
    : features_(std::move(features)), rows_(rows), cols_(cols), labels_(std::move(labels)), l2_lambda_(l2_lambda) {
  if (features_.size() != rows_ * cols_) throw std::invalid_argument("feature buffer does not match rows*cols");
  if (labels_.size() != rows_) throw std::invalid_argument("one label per row required");
  if (rows_ == 0) throw std::invalid_argument("objective needs at least one row");
}

double LinearObjective::bce_loss(std::span<const double> w, double b) const {
  ConstMatrixMap x(features_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  ConstVectorMap wv(w.data(), static_cast<Eigen::Index>(w.size()));
  const Eigen::VectorXd z = (x * wv).array() + b;
  double loss = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) loss += softplus(z[static_cast<Eigen::Index>(i)]) - labels_[i] * z[static_cast<Eigen::Index>(i)];
  return loss / static_cast<double>(rows_) + 0.5 * l2_lambda_ * wv.squaredNorm();
}

LinearObjective::Gradient LinearObjective::bce_gradient(std::span<const double> w, double b) const {
  ConstMatrixMap x(features_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  ConstVectorMap wv(w.data(), static_cast<Eigen::Index>(w.size()));
  Eigen::VectorXd residual = (x * wv).array() + b;
  for (Eigen::Index i = 0; i < residual.size(); ++i) residual[i] = sigmoid(residual[i]) - labels_[static_cast<std::size_t>(i)];
  const double n = static_cast<double>(rows_);
  const Eigen::VectorXd gw = x.transpose() * residual / n + l2_lambda_ * wv;
  return Gradient{std::vector<double>(gw.data(), gw.data() + gw.size()), residual.sum() / n};
}

double LinearObjective::hinge_loss(std::span<const double> w, double b) const {
  ConstMatrixMap x(features_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  ConstVectorMap wv(w.data(), static_cast<Eigen::Index>(w.size()));
  const Eigen::VectorXd f = (x * wv).array() + b;
  double loss = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    const double y = labels_[i] == 1 ? 1.0 : -1.0;
    loss += std::max(0.0, 1.0 - y * f[static_cast<Eigen::Index>(i)]);
  }
  return loss / static_cast<double>(rows_) + 0.5 * l2_lambda_ * wv.squaredNorm();
}

LinearObjective::Gradient LinearObjective::hinge_subgradient(std::span<const double> w, double b) const {
  ConstMatrixMap x(features_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_));
  ConstVectorMap wv(w.data(), static_cast<Eigen::Index>(w.size()));
  const Eigen::VectorXd f = (x * wv).array() + b;
  Eigen::VectorXd coeff = Eigen::VectorXd::Zero(f.size());
  for (Eigen::Index i = 0; i < f.size(); ++i) {
    const double y = labels_[static_cast<std::size_t>(i)] == 1 ? 1.0 : -1.0;
    if (y * f[i] < 1.0) coeff[i] = -y;
  }
  const double n = static_cast<double>(rows_);
  const Eigen::VectorXd gw = x.transpose() * coeff / n + l2_lambda_ * wv;
  return Gradient{std::vector<double>(gw.data(), gw.data() + gw.size()), coeff.sum() / n};
}

LinearProbe train_logistic_regression(const ProbeDataset& train, const TrainHyper& hyper) {
  validate_hyper(hyper);
  Standardizer s = fit_standardizer(train, hyper.standardize);
  const LinearObjective objective = make_objective(train, s, hyper.l2_lambda);

  std::vector<double> w(objective.cols(), 0.0);
  double b = 0.0;
  double loss = objective.bce_loss(w, b);
  int epoch = 0;
  while (epoch < hyper.max_epochs) {
    ++epoch;
    const LinearObjective::Gradient g = objective.bce_gradient(w, b);
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= hyper.learning_rate * g.weights[j];
    b -= hyper.learning_rate * g.bias;
    const double next = objective.bce_loss(w, b);
    if (!std::isfinite(next)) {
      throw DivergenceError("logistic regression loss became non-finite at epoch " + std::to_string(epoch), epoch);
    }
    const double decrease = loss - next;
    loss = next;
    if (decrease < hyper.tolerance) break;
  }
  return make_probe(ProbeKind::kLogisticRegression, train, std::move(s),
                    Eigen::Map<const Eigen::VectorXd>(w.data(), static_cast<Eigen::Index>(w.size())), b, hyper,
                    epoch, loss);
}

LinearProbe train_linear_svm(const ProbeDataset& train, const TrainHyper& hyper) {
  validate_hyper(hyper);
  Standardizer s = fit_standardizer(train, hyper.standardize);
  const LinearObjective objective = make_objective(train, s, hyper.l2_lambda);

  std::vector<double> w(objective.cols(), 0.0);
  double b = 0.0;
  std::vector<double> best_w = w;
  double best_b = b;
  double best_loss = objective.hinge_loss(w, b);
  for (int epoch = 1; epoch <= hyper.max_epochs; ++epoch) {
    const LinearObjective::Gradient g = objective.hinge_subgradient(w, b);
    const double step = hyper.learning_rate / std::sqrt(static_cast<double>(epoch));
    for (std::size_t j = 0; j < w.size(); ++j) w[j] -= step * g.weights[j];
    b -= step * g.bias;
    const double loss = objective.hinge_loss(w, b);
    if (!std::isfinite(loss)) {
      throw DivergenceError("linear SVM loss became non-finite at epoch " + std::to_string(epoch), epoch);
    }
    if (loss < best_loss) {
      best_loss = loss;
      best_w = w;
      best_b = b;
    }
  }
  return make_probe(ProbeKind::kLinearSvm, train, std::move(s),
                    Eigen::Map<const Eigen::VectorXd>(best_w.data(), static_cast<Eigen::Index>(best_w.size())),
                    best_b, hyper, hyper.max_epochs, best_loss);
}

LinearProbe train_probe(ProbeKind kind, const ProbeDataset& train, const TrainHyper& hyper) {
  return kind == ProbeKind::kLinearSvm ? train_linear_svm(train, hyper) : train_logistic_regression(train, hyper);
}

ProbeMetrics evaluate_classifier(const LinearProbe& probe, const ProbeDataset& test) {
  if (test.examples.empty()) throw std::invalid_argument("empty evaluation set");
  std::vector<double> scores;
  std::vector<int> predictions;
  std::vector<int> labels;
  scores.reserve(test.size());
  for (const auto& e : test.examples) {
    const double z = probe.logit(e.features);
    scores.push_back(z);
    predictions.push_back(sigmoid(z) >= 0.5 ? 1 : 0);
    labels.push_back(e.label);
  }
  ProbeMetrics m;
  m.accuracy = accuracy(predictions, labels);
  m.f1 = f1_score(predictions, labels);
  if (test.has_both_labels()) m.auc_roc = auc_roc(scores, labels);
  return m;
}

void save_probe(const LinearProbe& probe, std::ostream& out) {
  using ojson = nlohmann::ordered_json;
  ojson j{{"version", 1},
          {"kind", to_string(probe.kind)},
          {"layer", probe.layer},
          {"rep_kind", to_string(probe.rep_kind)},
          {"dim", probe.dim()},
          {"w", probe.weights},
          {"b", probe.bias},
          {"feat_mean", probe.feat_mean},
          {"feat_std", probe.feat_std},
          {"train_meta",
           {{"epochs", probe.train_meta.epochs},
            {"learning_rate", probe.train_meta.learning_rate},
            {"l2_lambda", probe.train_meta.l2_lambda},
            {"final_loss", probe.train_meta.final_loss}}}};
  out << j.dump() << '\n';
}

LinearProbe load_probe(std::istream& in) {
  nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw DatasetError("probe file is not a JSON object");
  try {
    if (j.at("version").get<int>() != 1) throw DatasetError("unsupported probe file version");
    LinearProbe p;
    p.kind = parse_probe_kind(j.at("kind").get<std::string>());
    p.layer = j.at("layer").get<int>();
    p.rep_kind = parse_rep_kind(j.at("rep_kind").get<std::string>());
    p.weights = j.at("w").get<std::vector<double>>();
    p.bias = j.at("b").get<double>();
    p.feat_mean = j.value("feat_mean", std::vector<double>{});
    p.feat_std = j.value("feat_std", std::vector<double>{});
    if (j.at("dim").get<int>() != p.dim()) throw DatasetError("probe dim does not match its weights");
    if (!p.feat_mean.empty() && (p.feat_mean.size() != p.weights.size() || p.feat_std.size() != p.weights.size())) {
      throw DatasetError("standardization vectors do not match the probe dimension");
    }
    for (double v : p.weights) {
      if (!std::isfinite(v)) throw DatasetError("non-finite probe weight");
    }
    if (auto meta = j.find("train_meta"); meta != j.end()) {
      p.train_meta.epochs = meta->value("epochs", 0);
      p.train_meta.learning_rate = meta->value("learning_rate", 0.0);
      p.train_meta.l2_lambda = meta->value("l2_lambda", 0.0);
      p.train_meta.final_loss = meta->value("final_loss", 0.0);
    }
    return p;
  } catch (const nlohmann::json::exception& e) {
    throw DatasetError(std::string("bad probe file: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw DatasetError(std::string("bad probe file: ") + e.what());
  }
}

void save_probe_file(const LinearProbe& probe, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw DatasetError("cannot write probe file " + path);
  save_probe(probe, out);
}

LinearProbe load_probe_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DatasetError("cannot open probe file " + path);
  return load_probe(in);
}

}  // namespace probesearch
