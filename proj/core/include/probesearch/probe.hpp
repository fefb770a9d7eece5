// Copyright (C) 2026 The probesearch Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "probesearch/dataset.hpp"
#include "probesearch/protocol.hpp"

namespace probesearch {

enum class ProbeKind { kLogisticRegression, kLinearSvm };

std::string_view to_string(ProbeKind kind);  // "lr" | "svm"
ProbeKind parse_probe_kind(std::string_view text);

struct TrainHyper {
  double learning_rate = 0.1;
  double l2_lambda = 1e-4;
  int max_epochs = 2000;
  // Logistic regression stops once an epoch lowers the loss by less than this.
  double tolerance = 1e-8;
  bool standardize = true;
};

struct TrainMeta {
  int epochs = 0;
  double learning_rate = 0.0;
  double l2_lambda = 0.0;
  double final_loss = 0.0;
};

// Affine scorer w^T x~ + b over standardized features x~ = (x - mean) / std.
// With empty feat_mean/feat_std the raw features are used. Immutable after
// training and safe to share.
struct LinearProbe {
  std::vector<double> weights;
  double bias = 0.0;
  std::vector<double> feat_mean;
  std::vector<double> feat_std;
  ProbeKind kind = ProbeKind::kLogisticRegression;
  int layer = 0;
  RepKind rep_kind = RepKind::kHidden;
  TrainMeta train_meta;

  int dim() const { return static_cast<int>(weights.size()); }

  // Throws std::invalid_argument on a dimension mismatch.
  double logit(std::span<const float> x) const;
  double logit(std::span<const double> x) const;
  double probability(std::span<const float> x) const;
};

double sigmoid(double z);

struct ProbeMetrics {
  double accuracy = 0.0;
  double f1 = 0.0;
  // Absent when the evaluation set holds a single class.
  std::optional<double> auc_roc;

  // Throws UndefinedMetricError when auc_roc is absent.
  double auc() const;
};

// Row-major design matrix with 0/1 labels, used by the trainers and exposed
// so the loss and gradient can be checked independently.
class LinearObjective {
 public:
  LinearObjective(std::vector<double> features, std::size_t rows, std::size_t cols, std::vector<int> labels,
                  double l2_lambda);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  struct Gradient {
    std::vector<double> weights;
    double bias = 0.0;
  };

  // Mean binary cross-entropy + (lambda/2)|w|^2.
  double bce_loss(std::span<const double> w, double b) const;
  Gradient bce_gradient(std::span<const double> w, double b) const;

  // Mean hinge loss on labels mapped to {-1, +1} + (lambda/2)|w|^2.
  double hinge_loss(std::span<const double> w, double b) const;
  // Subgradient; equals the gradient wherever no margin sits exactly at 1.
  Gradient hinge_subgradient(std::span<const double> w, double b) const;

 private:
  std::vector<double> features_;
  std::size_t rows_;
  std::size_t cols_;
  std::vector<int> labels_;
  double l2_lambda_;
};

// Full-batch gradient descent on BCE + L2 from zero initialization.
// Throws DatasetError when the training set lacks a label and
// DivergenceError on a non-finite loss.
LinearProbe train_logistic_regression(const ProbeDataset& train, const TrainHyper& hyper = {});

// Subgradient descent on L2-regularized hinge loss with step
// learning_rate / sqrt(epoch); returns the iterate with the lowest objective.
LinearProbe train_linear_svm(const ProbeDataset& train, const TrainHyper& hyper = {});

LinearProbe train_probe(ProbeKind kind, const ProbeDataset& train, const TrainHyper& hyper = {});

// Accuracy at probability threshold 0.5, positive-class F1, rank AUC.
ProbeMetrics evaluate_classifier(const LinearProbe& probe, const ProbeDataset& test);

void save_probe(const LinearProbe& probe, std::ostream& out);
LinearProbe load_probe(std::istream& in);
void save_probe_file(const LinearProbe& probe, const std::string& path);
LinearProbe load_probe_file(const std::string& path);

}  // namespace probesearch
