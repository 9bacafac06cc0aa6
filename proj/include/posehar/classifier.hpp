#pragma once

// Multivariate sequence classifier: a temporal convolution branch (conv -> batch norm
// -> ReLU blocks, masked global average pooling) in parallel with an LSTM branch with
// masked softmax attention over time, concatenated into dropout + affine + softmax.

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>

#include "posehar/error.hpp"
#include "posehar/random.hpp"

namespace posehar {

struct ConvBlockSpec {
  int filters = 64;
  int kernel = 8;
  friend bool operator==(const ConvBlockSpec&, const ConvBlockSpec&) = default;
};

struct ClassifierConfig {
  std::vector<ConvBlockSpec> conv_blocks = {{64, 8}, {128, 5}, {64, 3}};
  int recurrent_units = 32;
  bool attention = true;
  double dropout = 0.5;
  int classes = 2;
  int channels = 0;
  double lr = 1e-3;
  int batch = 16;
  int max_epochs = 200;
  int patience = 20;
  /// Inverse-frequency class weights in the loss.
  bool class_weights = false;
  double bn_momentum = 0.9;
  double bn_eps = 1e-5;
  std::uint64_t seed = 0;

  void validate() const;
  friend bool operator==(const ClassifierConfig&, const ClassifierConfig&) = default;
};

struct ConvParams {
  /// filters x (kernel * in_channels); column k*in + c holds tap k of channel c.
  Eigen::MatrixXd weight;
  Eigen::VectorXd bias;
  Eigen::VectorXd gamma;
  Eigen::VectorXd beta;
};

/// Trainable parameters (or a gradient with the same layout).
struct Parameters {
  std::vector<ConvParams> conv;
  /// 4H x C, 4H x H, 4H; gate order input, forget, cell, output.
  Eigen::MatrixXd lstm_input;
  Eigen::MatrixXd lstm_recurrent;
  Eigen::VectorXd lstm_bias;
  Eigen::VectorXd attention;
  Eigen::MatrixXd dense_weight;
  Eigen::VectorXd dense_bias;

  /// Calls f(name, data, size) for every parameter tensor in a fixed order.
  template <typename F>
  void visit(F&& f) {
    visit_impl(*this, f);
  }
  template <typename F>
  void visit(F&& f) const {
    visit_impl(*this, f);
  }

  Parameters zeros_like() const;
  std::size_t size() const;

private:
  template <typename Self, typename F>
  static void visit_impl(Self& self, F& f) {
    for (std::size_t i = 0; i < self.conv.size(); ++i) {
      const std::string p = "conv" + std::to_string(i) + ".";
      f(p + "weight", self.conv[i].weight.data(), self.conv[i].weight.size());
      f(p + "bias", self.conv[i].bias.data(), self.conv[i].bias.size());
      f(p + "gamma", self.conv[i].gamma.data(), self.conv[i].gamma.size());
      f(p + "beta", self.conv[i].beta.data(), self.conv[i].beta.size());
    }
    f(std::string("lstm.input"), self.lstm_input.data(), self.lstm_input.size());
    f(std::string("lstm.recurrent"), self.lstm_recurrent.data(), self.lstm_recurrent.size());
    f(std::string("lstm.bias"), self.lstm_bias.data(), self.lstm_bias.size());
    f(std::string("attention"), self.attention.data(), self.attention.size());
    f(std::string("dense.weight"), self.dense_weight.data(), self.dense_weight.size());
    f(std::string("dense.bias"), self.dense_bias.data(), self.dense_bias.size());
  }
};

struct BatchNormStats {
  Eigen::VectorXd mean;
  Eigen::VectorXd var;
};

struct ClassifierModel {
  static constexpr std::uint32_t kVersion = 1;

  ClassifierConfig config;
  Parameters params;
  std::vector<BatchNormStats> running;
  /// Per-channel input standardization applied on valid steps.
  Eigen::VectorXd input_mean;
  Eigen::VectorXd input_scale;
  /// Free-form metadata (label names, pipeline mode, ...), stored as JSON text.
  std::string metadata;
};

/// Deterministic initialization from config.seed. Input standardization is identity.
ClassifierModel init_model(const ClassifierConfig& config);

/// One labelled multivariate series, channels x T.
struct SeriesExample {
  Eigen::MatrixXd values;
  int label = 0;
};

/// Zero-padded batch. `series` is channels x (batch * max_length); column b*max_length+t
/// holds step t of sample b. Steps t >= lengths[b] are padding.
struct PaddedBatch {
  Eigen::MatrixXd series;
  std::vector<int> lengths;
  std::vector<int> labels;
  int max_length = 0;

  int size() const noexcept { return static_cast<int>(lengths.size()); }
  int channels() const noexcept { return static_cast<int>(series.rows()); }
  bool valid(int b, int t) const noexcept { return t < lengths[static_cast<std::size_t>(b)]; }
};

/// Pads to the longest member, or to `min_length` if larger.
PaddedBatch make_batch(std::span<const SeriesExample* const> examples, int min_length = 0);
PaddedBatch make_batch(const std::vector<SeriesExample>& examples, int min_length = 0);

enum class Phase { Train, Eval };

struct ForwardResult {
  /// batch x classes, rows sum to 1.
  Eigen::MatrixXd probabilities;
  /// batch x max_length attention weights (zero on padding); empty when attention is off.
  Eigen::MatrixXd attention;
};

/// Eval phase uses running batch-norm statistics and no dropout. Train phase uses
/// batch statistics and draws the dropout mask from `dropout_rng` (required then).
ForwardResult forward(const ClassifierModel& model, const PaddedBatch& batch, Phase phase = Phase::Eval,
                      Rng* dropout_rng = nullptr);

struct LossAndGradient {
  double loss = 0.0;
  /// Samples whose train-phase argmax matches the label.
  int correct = 0;
  Parameters gradient;
  /// Batch statistics of every conv block, for updating running averages.
  std::vector<BatchNormStats> batch_stats;
};

/// Mean (optionally class-weighted) cross-entropy in the train phase and its gradient
/// w.r.t. every parameter. Throws NonFiniteLoss.
LossAndGradient loss_and_grad(const ClassifierModel& model, const PaddedBatch& batch, Rng& dropout_rng,
                              std::span<const double> class_weights = {});

struct EpochRecord {
  int epoch = 0;
  /// Train-phase (dropout, batch statistics) loss and accuracy averaged over the epoch.
  double train_loss = 0.0;
  double train_accuracy = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  bool improved = false;
};

struct TrainResult {
  ClassifierModel model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Adam mini-batch training with early stopping on validation accuracy; returns the
/// best-on-validation weights. Throws Diverged on a non-finite loss.
TrainResult train(const ClassifierConfig& config, const std::vector<SeriesExample>& train_set,
                  const std::vector<SeriesExample>& val_set);

struct Prediction {
  int label = 0;
  Eigen::VectorXd probabilities;
};

/// Index of the largest entry; ties go to the lowest index.
int argmax(const Eigen::Ref<const Eigen::VectorXd>& p);

Prediction predict(const ClassifierModel& model, const Eigen::MatrixXd& series);
std::vector<Prediction> predict_all(const ClassifierModel& model, const std::vector<SeriesExample>& examples,
                                    int batch_size = 32);

/// Cross-entropy and accuracy in the eval phase.
std::pair<double, double> evaluate_loss_accuracy(const ClassifierModel& model,
                                                 const std::vector<SeriesExample>& examples, int batch_size = 32);

void save_model(const ClassifierModel& model, std::ostream& out);
ClassifierModel load_model(std::istream& in);
void save_model(const ClassifierModel& model, const std::string& path);
ClassifierModel load_model(const std::string& path);

}  // namespace posehar
