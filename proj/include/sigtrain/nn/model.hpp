#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sigtrain/nn/layers.hpp"
#include "sigtrain/types.hpp"

namespace sigtrain::nn {

// Network shape. The full-size configuration is the default; the reduced
// sizes used by gradient checks and smoke runs only shrink these numbers.
struct CldnnSpec {
  int n_classes = 0;
  int input_len = 1024;
  int conv_channels = 50;
  int kernel = 8;
  int head_hidden = 256;

  void validate() const {
    if (n_classes < 2) throw ConfigError("CldnnSpec: n_classes must be >= 2");
    if (input_len < kernel) throw ConfigError("CldnnSpec: input_len must cover the kernel");
    if (conv_channels < 1 || kernel < 1 || head_hidden < 1)
      throw ConfigError("CldnnSpec: layer sizes must be positive");
  }

  int concat_channels() const { return 2 * conv_channels; }
  int flat_features() const { return input_len * n_classes; }

  bool operator==(const CldnnSpec&) const = default;
};

// Convolutional-recurrent classifier over (2, input_len) IQ observations:
// three conv/relu/batchnorm blocks, channel concat of blocks 1 and 3, an
// LSTM with hidden size n_classes across time, then a dense/relu/batchnorm
// head into softmax classes. Batches are (2, batch*input_len) sample-major.
template <typename S>
class Cldnn {
public:
  Cldnn(const CldnnSpec& spec, std::uint64_t seed) : spec_(spec) {
    spec_.validate();
    constexpr std::uint64_t kTagInit = 0x6e6e696e6974ULL;  // "nninit"
    Rng root(seed, {kTagInit});
    conv1_.init(2, spec_.conv_channels, spec_.kernel, root.fork(1));
    bn1_.init(spec_.conv_channels);
    conv2_.init(spec_.conv_channels, spec_.conv_channels, spec_.kernel, root.fork(2));
    bn2_.init(spec_.conv_channels);
    conv3_.init(spec_.conv_channels, spec_.conv_channels, spec_.kernel, root.fork(3));
    bn3_.init(spec_.conv_channels);
    lstm_.init(spec_.concat_channels(), spec_.n_classes, root.fork(4));
    fc1_.init(spec_.flat_features(), spec_.head_hidden, root.fork(5));
    bnh_.init(spec_.head_hidden);
    fc2_.init(spec_.head_hidden, spec_.n_classes, root.fork(6));
  }

  const CldnnSpec& spec() const { return spec_; }

  // Class probabilities, one column per sample.
  Mat<S> forward(const Mat<S>& x, int batch, bool train) {
    const int L = spec_.input_len;
    if (x.rows() != 2 || x.cols() != static_cast<Eigen::Index>(batch) * L)
      throw ConfigError("Cldnn::forward: batch shape mismatch");
    batch_ = batch;

    const Mat<S> a1 = bn1_.forward(relu1_.forward(conv1_.forward(x, batch, L)), train);
    const Mat<S> a2 = bn2_.forward(relu2_.forward(conv2_.forward(a1, batch, L)), train);
    const Mat<S> a3 = bn3_.forward(relu3_.forward(conv3_.forward(a2, batch, L)), train);

    Mat<S> cat(spec_.concat_channels(), a1.cols());
    cat.topRows(spec_.conv_channels) = a1;
    cat.bottomRows(spec_.conv_channels) = a3;

    const Mat<S> hseq = lstm_.forward(cat, batch, L);
    const Mat<S> flat = flatten(hseq, batch);
    const Mat<S> f1 = bnh_.forward(reluh_.forward(fc1_.forward(flat)), train);
    return ce_.forward(fc2_.forward(f1));
  }

  // Mean cross-entropy of the last forward pass against labels.
  double loss(const std::vector<int>& labels) const { return ce_.loss(labels); }

  // Backpropagates from the last train-mode forward pass, accumulating
  // gradients for every parameter.
  void backward(const std::vector<int>& labels) {
    const int C = spec_.conv_channels;
    Mat<S> d = fc2_.backward(ce_.backward(labels));
    d = bnh_.backward(d);
    d = reluh_.backward(d);
    d = fc1_.backward(d);
    d = lstm_.backward(unflatten(d, batch_));

    Mat<S> da3 = d.bottomRows(C);
    Mat<S> da1 = d.topRows(C);
    {
      Mat<S> g = bn3_.backward(da3);
      g = relu3_.backward(g);
      g = conv3_.backward(g);
      g = bn2_.backward(g);
      g = relu2_.backward(g);
      da1 += conv2_.backward(g);
    }
    Mat<S> g = bn1_.backward(da1);
    g = relu1_.backward(g);
    conv1_.backward(g);
  }

  void zero_grad() {
    conv1_.zero_grad();
    bn1_.zero_grad();
    conv2_.zero_grad();
    bn2_.zero_grad();
    conv3_.zero_grad();
    bn3_.zero_grad();
    lstm_.zero_grad();
    fc1_.zero_grad();
    bnh_.zero_grad();
    fc2_.zero_grad();
  }

  // Trainable tensors in a fixed order shared by the optimizer, checkpoints
  // and any diff tooling.
  std::vector<ParamView<S>> params() {
    std::vector<ParamView<S>> out;
    add(out, conv1_.w, conv1_.dw);
    add(out, conv1_.b, conv1_.db);
    add(out, bn1_.gamma, bn1_.dgamma);
    add(out, bn1_.beta, bn1_.dbeta);
    add(out, conv2_.w, conv2_.dw);
    add(out, conv2_.b, conv2_.db);
    add(out, bn2_.gamma, bn2_.dgamma);
    add(out, bn2_.beta, bn2_.dbeta);
    add(out, conv3_.w, conv3_.dw);
    add(out, conv3_.b, conv3_.db);
    add(out, bn3_.gamma, bn3_.dgamma);
    add(out, bn3_.beta, bn3_.dbeta);
    add(out, lstm_.wx, lstm_.dwx);
    add(out, lstm_.wh, lstm_.dwh);
    add(out, lstm_.b, lstm_.db);
    add(out, fc1_.w, fc1_.dw);
    add(out, fc1_.b, fc1_.db);
    add(out, bnh_.gamma, bnh_.dgamma);
    add(out, bnh_.beta, bnh_.dbeta);
    add(out, fc2_.w, fc2_.dw);
    add(out, fc2_.b, fc2_.db);
    return out;
  }

  // Batch-norm running statistics: saved and restored with the weights but
  // never touched by the optimizer.
  std::vector<ParamView<S>> buffers() {
    std::vector<ParamView<S>> out;
    for (auto* bn : {&bn1_, &bn2_, &bn3_, &bnh_}) {
      out.push_back({bn->run_mean.data(), nullptr, bn->run_mean.size()});
      out.push_back({bn->run_var.data(), nullptr, bn->run_var.size()});
    }
    return out;
  }

  std::size_t parameter_count() {
    std::size_t n = 0;
    for (const auto& p : params()) n += static_cast<std::size_t>(p.size);
    return n;
  }

private:
  template <typename A, typename B>
  static void add(std::vector<ParamView<S>>& out, A& value, B& grad) {
    out.push_back({value.data(), grad.data(), value.size()});
  }

  // (H, batch*len) hidden sequence -> (len*H, batch), feature index t*H + j.
  Mat<S> flatten(const Mat<S>& hseq, int batch) const {
    const int H = spec_.n_classes;
    const int L = spec_.input_len;
    Mat<S> out(static_cast<Eigen::Index>(L) * H, batch);
    for (int b = 0; b < batch; ++b)
      for (int t = 0; t < L; ++t)
        out.col(b).segment(static_cast<Eigen::Index>(t) * H, H) =
            hseq.col(static_cast<Eigen::Index>(b) * L + t);
    return out;
  }

  Mat<S> unflatten(const Mat<S>& flat, int batch) const {
    const int H = spec_.n_classes;
    const int L = spec_.input_len;
    Mat<S> out(H, static_cast<Eigen::Index>(batch) * L);
    for (int b = 0; b < batch; ++b)
      for (int t = 0; t < L; ++t)
        out.col(static_cast<Eigen::Index>(b) * L + t) =
            flat.col(b).segment(static_cast<Eigen::Index>(t) * H, H);
    return out;
  }

  CldnnSpec spec_;
  int batch_ = 0;

  Conv1dSame<S> conv1_, conv2_, conv3_;
  BatchNorm1d<S> bn1_, bn2_, bn3_, bnh_;
  Relu<S> relu1_, relu2_, relu3_, reluh_;
  Lstm<S> lstm_;
  Dense<S> fc1_, fc2_;
  SoftmaxCe<S> ce_;
};

}  // namespace sigtrain::nn
