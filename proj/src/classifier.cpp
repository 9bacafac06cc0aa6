#include "posehar/classifier.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>

#include "posehar/binary_io.hpp"

namespace posehar {

void ClassifierConfig::validate() const {
  if (conv_blocks.empty()) throw Error(Errc::InvalidConfig, "at least one convolution block is required");
  for (const auto& b : conv_blocks)
    if (b.kernel < 1 || b.filters < 1) throw Error(Errc::InvalidConfig, "conv kernel widths and filters must be >= 1");
  if (recurrent_units < 1) throw Error(Errc::InvalidConfig, "recurrent_units must be >= 1");
  if (!(dropout >= 0.0 && dropout < 1.0)) throw Error(Errc::InvalidConfig, "dropout must lie in [0,1)");
  if (classes < 2) throw Error(Errc::InvalidConfig, "classes must be >= 2");
  if (channels < 1) throw Error(Errc::InvalidConfig, "channels must be >= 1");
  if (!(lr > 0)) throw Error(Errc::InvalidConfig, "lr must be > 0");
  if (batch < 1) throw Error(Errc::InvalidConfig, "batch must be >= 1");
  if (max_epochs < 1) throw Error(Errc::InvalidConfig, "max_epochs must be >= 1");
  if (patience < 0) throw Error(Errc::InvalidConfig, "patience must be >= 0");
}

Parameters Parameters::zeros_like() const {
  Parameters z;
  for (const auto& c : conv)
    z.conv.push_back({Eigen::MatrixXd::Zero(c.weight.rows(), c.weight.cols()), Eigen::VectorXd::Zero(c.bias.size()),
                      Eigen::VectorXd::Zero(c.gamma.size()), Eigen::VectorXd::Zero(c.beta.size())});
  z.lstm_input = Eigen::MatrixXd::Zero(lstm_input.rows(), lstm_input.cols());
  z.lstm_recurrent = Eigen::MatrixXd::Zero(lstm_recurrent.rows(), lstm_recurrent.cols());
  z.lstm_bias = Eigen::VectorXd::Zero(lstm_bias.size());
  z.attention = Eigen::VectorXd::Zero(attention.size());
  z.dense_weight = Eigen::MatrixXd::Zero(dense_weight.rows(), dense_weight.cols());
  z.dense_bias = Eigen::VectorXd::Zero(dense_bias.size());
  return z;
}

std::size_t Parameters::size() const {
  std::size_t n = 0;
  visit([&](const std::string&, const double*, Eigen::Index k) { n += static_cast<std::size_t>(k); });
  return n;
}

ClassifierModel init_model(const ClassifierConfig& config) {
  config.validate();
  ClassifierModel model;
  model.config = config;
  Rng rng(derive_seed(config.seed, 0));
  std::normal_distribution<double> gauss(0.0, 1.0);
  auto uniform = [&](Eigen::Index rows, Eigen::Index cols, double bound) {
    std::uniform_real_distribution<double> uni(-bound, bound);
    Eigen::MatrixXd m(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j)
      for (Eigen::Index i = 0; i < rows; ++i) m(i, j) = uni(rng);
    return m;
  };

  int in = config.channels;
  for (const auto& spec : config.conv_blocks) {
    ConvParams c;
    const double std_he = std::sqrt(2.0 / (static_cast<double>(in) * spec.kernel));
    c.weight.resize(spec.filters, static_cast<Eigen::Index>(spec.kernel) * in);
    for (Eigen::Index j = 0; j < c.weight.cols(); ++j)
      for (Eigen::Index i = 0; i < c.weight.rows(); ++i) c.weight(i, j) = std_he * gauss(rng);
    c.bias = Eigen::VectorXd::Zero(spec.filters);
    c.gamma = Eigen::VectorXd::Ones(spec.filters);
    c.beta = Eigen::VectorXd::Zero(spec.filters);
    model.params.conv.push_back(std::move(c));
    model.running.push_back({Eigen::VectorXd::Zero(spec.filters), Eigen::VectorXd::Ones(spec.filters)});
    in = spec.filters;
  }

  const int H = config.recurrent_units;
  const double bound = 1.0 / std::sqrt(static_cast<double>(H));
  model.params.lstm_input = uniform(4 * H, config.channels, bound);
  model.params.lstm_recurrent = uniform(4 * H, H, bound);
  model.params.lstm_bias = Eigen::VectorXd::Zero(4 * H);
  model.params.lstm_bias.segment(H, H).setOnes();
  model.params.attention = uniform(H, 1, bound);

  const int D = config.conv_blocks.back().filters + H;
  const double glorot = std::sqrt(6.0 / static_cast<double>(D + config.classes));
  model.params.dense_weight = uniform(config.classes, D, glorot);
  model.params.dense_bias = Eigen::VectorXd::Zero(config.classes);

  model.input_mean = Eigen::VectorXd::Zero(config.channels);
  model.input_scale = Eigen::VectorXd::Ones(config.channels);
  return model;
}

PaddedBatch make_batch(std::span<const SeriesExample* const> examples, int min_length) {
  if (examples.empty()) throw Error(Errc::ShapeMismatch, "empty batch");
  PaddedBatch batch;
  const auto C = examples.front()->values.rows();
  int T = min_length;
  for (const auto* e : examples) {
    if (e->values.rows() != C) throw Error(Errc::ShapeMismatch, "examples disagree on channel count");
    if (e->values.cols() < 1) throw Error(Errc::ShapeMismatch, "empty series");
    T = std::max(T, static_cast<int>(e->values.cols()));
  }
  batch.max_length = T;
  batch.series = Eigen::MatrixXd::Zero(C, static_cast<Eigen::Index>(examples.size()) * T);
  for (std::size_t b = 0; b < examples.size(); ++b) {
    const auto& v = examples[b]->values;
    batch.series.block(0, static_cast<Eigen::Index>(b) * T, C, v.cols()) = v;
    batch.lengths.push_back(static_cast<int>(v.cols()));
    batch.labels.push_back(examples[b]->label);
  }
  return batch;
}

PaddedBatch make_batch(const std::vector<SeriesExample>& examples, int min_length) {
  std::vector<const SeriesExample*> ptrs;
  ptrs.reserve(examples.size());
  for (const auto& e : examples) ptrs.push_back(&e);
  return make_batch(std::span<const SeriesExample* const>(ptrs), min_length);
}

namespace {

struct BlockCache {
  Eigen::MatrixXd cols;
  Eigen::MatrixXd xhat;
  Eigen::VectorXd inv_std;
  Eigen::MatrixXd out;
};

struct Cache {
  int B = 0;
  int T = 0;
  int steps = 0;  // longest valid length
  Eigen::RowVectorXd mask;
  Eigen::MatrixXd input;
  std::vector<BlockCache> blocks;
  std::vector<BatchNormStats> stats;
  Eigen::MatrixXd pooled;
  Eigen::MatrixXd gates;
  Eigen::MatrixXd cell_tanh;
  Eigen::MatrixXd cell;
  Eigen::MatrixXd hidden;
  Eigen::MatrixXd attention;
  Eigen::MatrixXd context;
  Eigen::MatrixXd features;
  Eigen::MatrixXd drop;
  Eigen::MatrixXd logits;
  Eigen::MatrixXd probs;
};

// Rows k*Cin + c of the result hold input channel c shifted by tap k (same padding).
Eigen::MatrixXd im2col(const Eigen::MatrixXd& x, int B, int T, int K) {
  const auto Cin = x.rows();
  const int left = (K - 1) / 2;
  Eigen::MatrixXd cols = Eigen::MatrixXd::Zero(K * Cin, static_cast<Eigen::Index>(B) * T);
  for (int k = 0; k < K; ++k) {
    const int shift = k - left;
    const int t0 = std::max(0, -shift);
    const int t1 = std::min(T, T - shift);
    if (t1 <= t0) continue;
    for (int b = 0; b < B; ++b)
      cols.block(k * Cin, static_cast<Eigen::Index>(b) * T + t0, Cin, t1 - t0) =
          x.block(0, static_cast<Eigen::Index>(b) * T + t0 + shift, Cin, t1 - t0);
  }
  return cols;
}

Eigen::MatrixXd col2im(const Eigen::MatrixXd& dcols, Eigen::Index Cin, int B, int T, int K) {
  const int left = (K - 1) / 2;
  Eigen::MatrixXd dx = Eigen::MatrixXd::Zero(Cin, static_cast<Eigen::Index>(B) * T);
  for (int k = 0; k < K; ++k) {
    const int shift = k - left;
    const int t0 = std::max(0, -shift);
    const int t1 = std::min(T, T - shift);
    if (t1 <= t0) continue;
    for (int b = 0; b < B; ++b)
      dx.block(0, static_cast<Eigen::Index>(b) * T + t0 + shift, Cin, t1 - t0) +=
          dcols.block(k * Cin, static_cast<Eigen::Index>(b) * T + t0, Cin, t1 - t0);
  }
  return dx;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

Eigen::Index col(int b, int t, int T) { return static_cast<Eigen::Index>(b) * T + t; }

void run_forward(const ClassifierModel& model, const PaddedBatch& batch, Phase phase, Rng* dropout_rng, Cache& c) {
  const auto& cfg = model.config;
  const auto& P = model.params;
  if (batch.channels() != cfg.channels)
    throw Error(Errc::ShapeMismatch, "input has " + std::to_string(batch.channels()) + " channels, model expects " +
                                         std::to_string(cfg.channels));
  if (phase == Phase::Train && cfg.dropout > 0 && dropout_rng == nullptr)
    throw Error(Errc::InvalidConfig, "train-phase forward needs a dropout generator");

  const int B = batch.size();
  const int T = batch.max_length;
  const Eigen::Index N = static_cast<Eigen::Index>(B) * T;
  c.B = B;
  c.T = T;
  c.steps = *std::max_element(batch.lengths.begin(), batch.lengths.end());
  c.mask = Eigen::RowVectorXd::Zero(N);
  for (int b = 0; b < B; ++b) c.mask.segment(col(b, 0, T), batch.lengths[static_cast<std::size_t>(b)]).setOnes();
  const double n_valid = c.mask.sum();

  c.input = ((batch.series.colwise() - model.input_mean).array().colwise() / model.input_scale.array()).matrix();
  c.input.array().rowwise() *= c.mask.array();

  // Convolution branch.
  c.blocks.assign(cfg.conv_blocks.size(), {});
  c.stats.assign(cfg.conv_blocks.size(), {});
  const Eigen::MatrixXd* x = &c.input;
  for (std::size_t k = 0; k < cfg.conv_blocks.size(); ++k) {
    auto& bc = c.blocks[k];
    const auto& cp = P.conv[k];
    bc.cols = im2col(*x, B, T, cfg.conv_blocks[k].kernel);
    Eigen::MatrixXd pre = cp.weight * bc.cols;
    pre.colwise() += cp.bias;
    Eigen::VectorXd mean, var;
    if (phase == Phase::Train) {
      mean = (pre * c.mask.transpose()) / n_valid;
      pre.colwise() -= mean;
      var = (pre.array().square().matrix() * c.mask.transpose()) / n_valid;
    } else {
      mean = model.running[k].mean;
      var = model.running[k].var;
      pre.colwise() -= mean;
    }
    bc.inv_std = (var.array() + cfg.bn_eps).rsqrt().matrix();
    bc.xhat = pre.array().colwise() * bc.inv_std.array();
    Eigen::ArrayXXd y = (bc.xhat.array().colwise() * cp.gamma.array()).colwise() + cp.beta.array();
    bc.out = y.max(0.0).rowwise() * c.mask.array();
    c.stats[k] = {std::move(mean), std::move(var)};
    x = &bc.out;
  }
  const auto F = c.blocks.back().out.rows();
  c.pooled.resize(F, B);
  for (int b = 0; b < B; ++b) {
    const int len = batch.lengths[static_cast<std::size_t>(b)];
    c.pooled.col(b) = c.blocks.back().out.block(0, col(b, 0, T), F, len).rowwise().sum() / len;
  }

  // Recurrent branch.
  const int H = cfg.recurrent_units;
  Eigen::MatrixXd gx = P.lstm_input * c.input;
  gx.colwise() += P.lstm_bias;
  c.gates = Eigen::MatrixXd::Zero(4 * H, N);
  c.cell = Eigen::MatrixXd::Zero(H, N);
  c.cell_tanh = Eigen::MatrixXd::Zero(H, N);
  c.hidden = Eigen::MatrixXd::Zero(H, N);
  Eigen::MatrixXd h_prev = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd c_prev = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd a(4 * H, B);
  for (int t = 0; t < c.steps; ++t) {
    for (int b = 0; b < B; ++b) a.col(b) = gx.col(col(b, t, T));
    a.noalias() += P.lstm_recurrent * h_prev;
    for (int b = 0; b < B; ++b) {
      const Eigen::Index j = col(b, t, T);
      for (int u = 0; u < H; ++u) {
        const double i_g = sigmoid(a(u, b));
        const double f_g = sigmoid(a(H + u, b));
        const double g_g = std::tanh(a(2 * H + u, b));
        const double o_g = sigmoid(a(3 * H + u, b));
        const double cv = f_g * c_prev(u, b) + i_g * g_g;
        const double ct = std::tanh(cv);
        c.gates(u, j) = i_g;
        c.gates(H + u, j) = f_g;
        c.gates(2 * H + u, j) = g_g;
        c.gates(3 * H + u, j) = o_g;
        c.cell(u, j) = cv;
        c.cell_tanh(u, j) = ct;
        c.hidden(u, j) = o_g * ct;
        c_prev(u, b) = cv;
        h_prev(u, b) = o_g * ct;
      }
    }
  }

  c.context.resize(H, B);
  c.attention.resize(0, 0);
  if (cfg.attention) {
    c.attention = Eigen::MatrixXd::Zero(B, T);
    for (int b = 0; b < B; ++b) {
      const int len = batch.lengths[static_cast<std::size_t>(b)];
      const auto hb = c.hidden.block(0, col(b, 0, T), H, len);
      Eigen::VectorXd s = hb.transpose() * P.attention;
      s.array() -= s.maxCoeff();
      s = s.array().exp().matrix();
      s /= s.sum();
      c.attention.row(b).head(len) = s.transpose();
      c.context.col(b) = hb * s;
    }
  } else {
    for (int b = 0; b < B; ++b) c.context.col(b) = c.hidden.col(col(b, batch.lengths[static_cast<std::size_t>(b)] - 1, T));
  }

  // Head.
  const auto D = F + H;
  c.features.resize(D, B);
  c.features.topRows(F) = c.pooled;
  c.features.bottomRows(H) = c.context;
  c.drop = Eigen::MatrixXd::Ones(D, B);
  if (phase == Phase::Train && cfg.dropout > 0) {
    std::bernoulli_distribution keep(1.0 - cfg.dropout);
    const double scale = 1.0 / (1.0 - cfg.dropout);
    for (Eigen::Index j = 0; j < B; ++j)
      for (Eigen::Index i = 0; i < D; ++i) c.drop(i, j) = keep(*dropout_rng) ? scale : 0.0;
  }
  c.logits = P.dense_weight * c.features.cwiseProduct(c.drop);
  c.logits.colwise() += P.dense_bias;
  c.probs.resize(c.logits.rows(), B);
  for (int b = 0; b < B; ++b) {
    Eigen::VectorXd z = c.logits.col(b);
    z.array() -= z.maxCoeff();
    z = z.array().exp().matrix();
    c.probs.col(b) = z / z.sum();
  }
}

double log_prob(const Cache& c, int cls, int b) {
  const auto z = c.logits.col(b);
  const double mx = z.maxCoeff();
  return z(cls) - mx - std::log((z.array() - mx).exp().sum());
}

}  // namespace

ForwardResult forward(const ClassifierModel& model, const PaddedBatch& batch, Phase phase, Rng* dropout_rng) {
  Cache c;
  run_forward(model, batch, phase, dropout_rng, c);
  return {c.probs.transpose(), c.attention};
}

LossAndGradient loss_and_grad(const ClassifierModel& model, const PaddedBatch& batch, Rng& dropout_rng,
                              std::span<const double> class_weights) {
  const auto& cfg = model.config;
  const auto& P = model.params;
  Cache c;
  run_forward(model, batch, Phase::Train, &dropout_rng, c);
  const int B = c.B;
  const int T = c.T;
  const int H = cfg.recurrent_units;
  const Eigen::Index N = static_cast<Eigen::Index>(B) * T;

  LossAndGradient out;
  out.gradient = P.zeros_like();
  auto& G = out.gradient;

  // Cross-entropy.
  Eigen::VectorXd w(B);
  for (int b = 0; b < B; ++b) {
    const int y = batch.labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= cfg.classes) throw Error(Errc::ShapeMismatch, "label " + std::to_string(y) + " out of range");
    w(b) = class_weights.empty() ? 1.0 : class_weights[static_cast<std::size_t>(y)];
  }
  const double w_total = w.sum();
  double loss = 0.0;
  for (int b = 0; b < B; ++b) loss -= w(b) * log_prob(c, batch.labels[static_cast<std::size_t>(b)], b);
  loss /= w_total;
  if (!std::isfinite(loss)) throw Error(Errc::NonFiniteLoss, "cross-entropy is not finite");
  out.loss = loss;
  for (int b = 0; b < B; ++b) out.correct += argmax(c.probs.col(b)) == batch.labels[static_cast<std::size_t>(b)] ? 1 : 0;

  Eigen::MatrixXd dlogits = c.probs;
  for (int b = 0; b < B; ++b) {
    dlogits(batch.labels[static_cast<std::size_t>(b)], b) -= 1.0;
    dlogits.col(b) *= w(b) / w_total;
  }
  const Eigen::MatrixXd dropped = c.features.cwiseProduct(c.drop);
  G.dense_weight = dlogits * dropped.transpose();
  G.dense_bias = dlogits.rowwise().sum();
  const Eigen::MatrixXd dfeat = (P.dense_weight.transpose() * dlogits).cwiseProduct(c.drop);
  const auto F = c.pooled.rows();
  const Eigen::MatrixXd dpooled = dfeat.topRows(F);
  const Eigen::MatrixXd dcontext = dfeat.bottomRows(H);

  // Attention / readout.
  Eigen::MatrixXd dhidden = Eigen::MatrixXd::Zero(H, N);
  for (int b = 0; b < B; ++b) {
    const int len = batch.lengths[static_cast<std::size_t>(b)];
    if (cfg.attention) {
      const auto hb = c.hidden.block(0, col(b, 0, T), H, len);
      const Eigen::VectorXd alpha = c.attention.row(b).head(len).transpose();
      const Eigen::VectorXd dalpha = hb.transpose() * dcontext.col(b);
      const Eigen::VectorXd ds = alpha.cwiseProduct((dalpha.array() - alpha.dot(dalpha)).matrix());
      dhidden.block(0, col(b, 0, T), H, len) += dcontext.col(b) * alpha.transpose() + P.attention * ds.transpose();
      G.attention += hb * ds;
    } else {
      dhidden.col(col(b, len - 1, T)) += dcontext.col(b);
    }
  }

  // LSTM, backpropagation through time.
  Eigen::MatrixXd dgates = Eigen::MatrixXd::Zero(4 * H, N);
  Eigen::MatrixXd dh_next = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd dc_next = Eigen::MatrixXd::Zero(H, B);
  Eigen::MatrixXd da(4 * H, B);
  for (int t = c.steps - 1; t >= 0; --t) {
    da.setZero();
    for (int b = 0; b < B; ++b) {
      if (!batch.valid(b, t)) {
        dh_next.col(b).setZero();
        dc_next.col(b).setZero();
        continue;
      }
      const Eigen::Index j = col(b, t, T);
      for (int u = 0; u < H; ++u) {
        const double i_g = c.gates(u, j);
        const double f_g = c.gates(H + u, j);
        const double g_g = c.gates(2 * H + u, j);
        const double o_g = c.gates(3 * H + u, j);
        const double ct = c.cell_tanh(u, j);
        const double c_prev = t > 0 ? c.cell(u, j - 1) : 0.0;
        const double dh = dhidden(u, j) + dh_next(u, b);
        const double dc = dc_next(u, b) + dh * o_g * (1.0 - ct * ct);
        da(u, b) = dc * g_g * i_g * (1.0 - i_g);
        da(H + u, b) = dc * c_prev * f_g * (1.0 - f_g);
        da(2 * H + u, b) = dc * i_g * (1.0 - g_g * g_g);
        da(3 * H + u, b) = dh * ct * o_g * (1.0 - o_g);
        dc_next(u, b) = dc * f_g;
      }
      dgates.col(j) = da.col(b);
    }
    dh_next.noalias() = P.lstm_recurrent.transpose() * da;
  }
  Eigen::MatrixXd h_shift = Eigen::MatrixXd::Zero(H, N);
  for (int b = 0; b < B; ++b) {
    const int len = batch.lengths[static_cast<std::size_t>(b)];
    if (len > 1) h_shift.block(0, col(b, 1, T), H, len - 1) = c.hidden.block(0, col(b, 0, T), H, len - 1);
  }
  G.lstm_input = dgates * c.input.transpose();
  G.lstm_recurrent = dgates * h_shift.transpose();
  G.lstm_bias = dgates.rowwise().sum();

  // Convolution branch.
  Eigen::MatrixXd dout = Eigen::MatrixXd::Zero(F, N);
  for (int b = 0; b < B; ++b) {
    const int len = batch.lengths[static_cast<std::size_t>(b)];
    dout.block(0, col(b, 0, T), F, len) = (dpooled.col(b) / len).replicate(1, len);
  }
  const double n_valid = c.mask.sum();
  for (int k = static_cast<int>(cfg.conv_blocks.size()) - 1; k >= 0; --k) {
    const auto& bc = c.blocks[static_cast<std::size_t>(k)];
    const auto& cp = P.conv[static_cast<std::size_t>(k)];
    auto& gk = G.conv[static_cast<std::size_t>(k)];
    const Eigen::MatrixXd dy = (bc.out.array() > 0.0).cast<double>() * dout.array();
    gk.gamma = (dy.cwiseProduct(bc.xhat)).rowwise().sum();
    gk.beta = dy.rowwise().sum();
    const Eigen::MatrixXd dxhat = dy.array().colwise() * cp.gamma.array();
    const Eigen::VectorXd sum_dxhat = dxhat.rowwise().sum();
    const Eigen::VectorXd sum_dxhat_xhat = dxhat.cwiseProduct(bc.xhat).rowwise().sum();
    Eigen::MatrixXd dpre = (n_valid * dxhat.array() - bc.xhat.array().colwise() * sum_dxhat_xhat.array()).colwise() -
                           sum_dxhat.array();
    dpre.array().colwise() *= (bc.inv_std / n_valid).array();
    dpre.array().rowwise() *= c.mask.array();
    gk.weight = dpre * bc.cols.transpose();
    gk.bias = dpre.rowwise().sum();
    if (k > 0) {
      dout = col2im(cp.weight.transpose() * dpre, c.blocks[static_cast<std::size_t>(k - 1)].out.rows(), B, T,
                    cfg.conv_blocks[static_cast<std::size_t>(k)].kernel);
      dout.array().rowwise() *= c.mask.array();
    }
  }
  out.batch_stats = std::move(c.stats);
  return out;
}

int argmax(const Eigen::Ref<const Eigen::VectorXd>& p) {
  int best = 0;
  for (Eigen::Index i = 1; i < p.size(); ++i)
    if (p(i) > p(best)) best = static_cast<int>(i);
  return best;
}

Prediction predict(const ClassifierModel& model, const Eigen::MatrixXd& series) {
  const SeriesExample e{series, 0};
  const SeriesExample* ptr = &e;
  const auto result = forward(model, make_batch(std::span<const SeriesExample* const>(&ptr, 1)));
  Prediction p;
  p.probabilities = result.probabilities.row(0).transpose();
  p.label = argmax(p.probabilities);
  return p;
}

std::vector<Prediction> predict_all(const ClassifierModel& model, const std::vector<SeriesExample>& examples,
                                    int batch_size) {
  std::vector<Prediction> out;
  out.reserve(examples.size());
  std::vector<const SeriesExample*> chunk;
  for (std::size_t i = 0; i < examples.size(); i += static_cast<std::size_t>(batch_size)) {
    chunk.clear();
    for (std::size_t j = i; j < std::min(examples.size(), i + static_cast<std::size_t>(batch_size)); ++j)
      chunk.push_back(&examples[j]);
    const auto r = forward(model, make_batch(std::span<const SeriesExample* const>(chunk)));
    for (Eigen::Index b = 0; b < r.probabilities.rows(); ++b) {
      Prediction p;
      p.probabilities = r.probabilities.row(b).transpose();
      p.label = argmax(p.probabilities);
      out.push_back(std::move(p));
    }
  }
  return out;
}

std::pair<double, double> evaluate_loss_accuracy(const ClassifierModel& model,
                                                 const std::vector<SeriesExample>& examples, int batch_size) {
  if (examples.empty()) return {0.0, 0.0};
  const auto preds = predict_all(model, examples, batch_size);
  double loss = 0.0;
  int correct = 0;
  for (std::size_t i = 0; i < examples.size(); ++i) {
    const double p = preds[i].probabilities(examples[i].label);
    loss -= std::log(std::max(p, std::numeric_limits<double>::min()));
    correct += preds[i].label == examples[i].label ? 1 : 0;
  }
  const auto n = static_cast<double>(examples.size());
  return {loss / n, correct / n};
}

namespace {

void fit_standardization(ClassifierModel& model, const std::vector<SeriesExample>& data) {
  const auto C = model.config.channels;
  Eigen::VectorXd sum = Eigen::VectorXd::Zero(C);
  Eigen::VectorXd sq = Eigen::VectorXd::Zero(C);
  double n = 0;
  for (const auto& e : data) {
    sum += e.values.rowwise().sum();
    n += static_cast<double>(e.values.cols());
  }
  const Eigen::VectorXd mean = sum / n;
  for (const auto& e : data) sq += (e.values.colwise() - mean).array().square().matrix().rowwise().sum();
  Eigen::VectorXd scale = (sq / n).cwiseSqrt();
  for (Eigen::Index i = 0; i < C; ++i)
    if (!(scale(i) > 1e-8)) scale(i) = 1.0;
  model.input_mean = mean;
  model.input_scale = scale;
}

struct Adam {
  double lr;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  long step = 0;
  Parameters m;
  Parameters v;

  Adam(const Parameters& like, double lr_) : lr(lr_), m(like.zeros_like()), v(like.zeros_like()) {}

  void update(Parameters& params, const Parameters& grad) {
    ++step;
    const double c1 = 1.0 - std::pow(beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(beta2, static_cast<double>(step));
    std::vector<std::pair<double*, Eigen::Index>> p, g, mm, vv;
    auto collect = [](auto& list) {
      return [&list](const std::string&, auto* data, Eigen::Index n) { list.emplace_back(const_cast<double*>(data), n); };
    };
    params.visit(collect(p));
    grad.visit(collect(g));
    m.visit(collect(mm));
    v.visit(collect(vv));
    for (std::size_t k = 0; k < p.size(); ++k) {
      Eigen::Map<Eigen::ArrayXd> P(p[k].first, p[k].second), Gr(g[k].first, g[k].second),
          M(mm[k].first, mm[k].second), V(vv[k].first, vv[k].second);
      M = beta1 * M + (1.0 - beta1) * Gr;
      V = beta2 * V + (1.0 - beta2) * Gr.square();
      P -= lr * (M / c1) / ((V / c2).sqrt() + eps);
    }
  }
};

bool finite(const Parameters& p) {
  bool ok = true;
  p.visit([&](const std::string&, const double* d, Eigen::Index n) {
    ok = ok && Eigen::Map<const Eigen::ArrayXd>(d, n).allFinite();
  });
  return ok;
}

}  // namespace

TrainResult train(const ClassifierConfig& config, const std::vector<SeriesExample>& train_set,
                  const std::vector<SeriesExample>& val_set) {
  config.validate();
  if (train_set.empty() || val_set.empty())
    throw Error(Errc::InsufficientData, "training and validation sets must be non-empty");
  for (const auto* set : {&train_set, &val_set})
    for (const auto& e : *set)
      if (e.values.rows() != config.channels)
        throw Error(Errc::ShapeMismatch, "series channel count does not match config");

  TrainResult result;
  ClassifierModel model = init_model(config);
  fit_standardization(model, train_set);

  std::vector<double> class_weights;
  if (config.class_weights) {
    std::vector<double> counts(static_cast<std::size_t>(config.classes), 0.0);
    for (const auto& e : train_set) counts[static_cast<std::size_t>(e.label)] += 1.0;
    for (double n : counts)
      class_weights.push_back(n > 0 ? static_cast<double>(train_set.size()) / (config.classes * n) : 0.0);
  }

  Adam adam(model.params, config.lr);
  Rng shuffle_rng(derive_seed(config.seed, 1));
  Rng dropout_rng(derive_seed(config.seed, 2));
  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  ClassifierModel best = model;
  double best_acc = -1.0;
  double best_loss = std::numeric_limits<double>::infinity();
  int stale = 0;
  const double momentum = config.bn_momentum;

  for (int epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_sum = 0.0;
    int correct = 0;
    for (std::size_t i = 0; i < order.size(); i += static_cast<std::size_t>(config.batch)) {
      std::vector<const SeriesExample*> members;
      for (std::size_t j = i; j < std::min(order.size(), i + static_cast<std::size_t>(config.batch)); ++j)
        members.push_back(&train_set[order[j]]);
      const PaddedBatch batch = make_batch(std::span<const SeriesExample* const>(members));
      LossAndGradient lg;
      try {
        lg = loss_and_grad(model, batch, dropout_rng, class_weights);
      } catch (const Error& e) {
        if (e.code() == Errc::NonFiniteLoss)
          throw Error(Errc::Diverged, "loss became non-finite at epoch " + std::to_string(epoch));
        throw;
      }
      adam.update(model.params, lg.gradient);
      if (!finite(model.params))
        throw Error(Errc::Diverged, "parameters became non-finite at epoch " + std::to_string(epoch));
      for (std::size_t k = 0; k < model.running.size(); ++k) {
        model.running[k].mean = momentum * model.running[k].mean + (1.0 - momentum) * lg.batch_stats[k].mean;
        model.running[k].var = momentum * model.running[k].var + (1.0 - momentum) * lg.batch_stats[k].var;
      }
      loss_sum += lg.loss * static_cast<double>(members.size());
      correct += lg.correct;
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = loss_sum / static_cast<double>(train_set.size());
    rec.train_accuracy = correct / static_cast<double>(train_set.size());
    std::tie(rec.val_loss, rec.val_accuracy) = evaluate_loss_accuracy(model, val_set);
    if (!std::isfinite(rec.val_loss) || !std::isfinite(rec.train_loss))
      throw Error(Errc::Diverged, "loss became non-finite at epoch " + std::to_string(epoch));
    rec.improved = rec.val_accuracy > best_acc || (rec.val_accuracy == best_acc && rec.val_loss < best_loss);
    result.history.push_back(rec);
    if (rec.improved) {
      best_acc = rec.val_accuracy;
      best_loss = rec.val_loss;
      best = model;
      result.best_epoch = epoch;
      stale = 0;
    } else if (++stale > config.patience) {
      break;
    }
  }
  result.model = std::move(best);
  return result;
}

// ---------------------------------------------------------------------------
// Model file. Layout is documented in docs/formats.md.

namespace {
constexpr char kModelMagic[9] = "PXHCLSF\0";
}

void save_model(const ClassifierModel& model, std::ostream& out) {
  const auto& cfg = model.config;
  binio::write_bytes(out, kModelMagic, 8);
  binio::write_u32(out, ClassifierModel::kVersion);
  binio::write_string(out, model.metadata);
  binio::write_u32(out, static_cast<std::uint32_t>(cfg.conv_blocks.size()));
  for (const auto& b : cfg.conv_blocks) {
    binio::write_i32(out, b.filters);
    binio::write_i32(out, b.kernel);
  }
  binio::write_i32(out, cfg.recurrent_units);
  binio::write_u32(out, cfg.attention ? 1u : 0u);
  binio::write_f64(out, cfg.dropout);
  binio::write_i32(out, cfg.classes);
  binio::write_i32(out, cfg.channels);
  binio::write_f64(out, cfg.lr);
  binio::write_i32(out, cfg.batch);
  binio::write_i32(out, cfg.max_epochs);
  binio::write_i32(out, cfg.patience);
  binio::write_u32(out, cfg.class_weights ? 1u : 0u);
  binio::write_f64(out, cfg.bn_momentum);
  binio::write_f64(out, cfg.bn_eps);
  binio::write_u64(out, cfg.seed);
  binio::write_matrix(out, model.input_mean);
  binio::write_matrix(out, model.input_scale);
  model.params.visit([&](const std::string& name, const double* data, Eigen::Index n) {
    binio::write_string(out, name);
    binio::write_u64(out, static_cast<std::uint64_t>(n));
    binio::write_bytes(out, data, sizeof(double) * static_cast<std::size_t>(n));
  });
  for (const auto& s : model.running) {
    binio::write_matrix(out, s.mean);
    binio::write_matrix(out, s.var);
  }
  if (!out) throw Error(Errc::IoError, "failed writing classifier model");
}

ClassifierModel load_model(std::istream& in) {
  binio::expect_magic(in, kModelMagic);
  const auto version = binio::read_u32(in);
  if (version != ClassifierModel::kVersion)
    throw Error(Errc::ParseError, "unsupported model version " + std::to_string(version));
  const std::string metadata = binio::read_string(in);
  ClassifierConfig cfg;
  cfg.conv_blocks.clear();
  const auto n_blocks = binio::read_u32(in);
  if (n_blocks > 64) throw Error(Errc::ParseError, "implausible block count in model file");
  for (std::uint32_t i = 0; i < n_blocks; ++i) {
    ConvBlockSpec b;
    b.filters = binio::read_i32(in);
    b.kernel = binio::read_i32(in);
    cfg.conv_blocks.push_back(b);
  }
  cfg.recurrent_units = binio::read_i32(in);
  cfg.attention = binio::read_u32(in) != 0;
  cfg.dropout = binio::read_f64(in);
  cfg.classes = binio::read_i32(in);
  cfg.channels = binio::read_i32(in);
  cfg.lr = binio::read_f64(in);
  cfg.batch = binio::read_i32(in);
  cfg.max_epochs = binio::read_i32(in);
  cfg.patience = binio::read_i32(in);
  cfg.class_weights = binio::read_u32(in) != 0;
  cfg.bn_momentum = binio::read_f64(in);
  cfg.bn_eps = binio::read_f64(in);
  cfg.seed = binio::read_u64(in);
  try {
    cfg.validate();
  } catch (const Error& e) {
    throw Error(Errc::ParseError, std::string("invalid config in model file: ") + e.what());
  }

  ClassifierModel model = init_model(cfg);
  model.metadata = metadata;
  model.input_mean = binio::read_matrix(in);
  model.input_scale = binio::read_matrix(in);
  if (model.input_mean.size() != cfg.channels || model.input_scale.size() != cfg.channels)
    throw Error(Errc::ParseError, "bad standardization block in model file");
  model.params.visit([&](const std::string& name, double* data, Eigen::Index n) {
    const std::string stored = binio::read_string(in);
    const auto count = binio::read_u64(in);
    if (stored != name || count != static_cast<std::uint64_t>(n))
      throw Error(Errc::ParseError, "parameter '" + stored + "' does not match expected '" + name + "'");
    binio::read_bytes(in, data, sizeof(double) * static_cast<std::size_t>(n));
  });
  for (auto& s : model.running) {
    s.mean = binio::read_matrix(in);
    s.var = binio::read_matrix(in);
  }
  return model;
}

void save_model(const ClassifierModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::IoError, "cannot open '" + path + "' for writing");
  save_model(model, out);
}

ClassifierModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(Errc::IoError, "cannot open '" + path + "'");
  return load_model(in);
}

}  // namespace posehar
