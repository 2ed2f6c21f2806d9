#ifndef GRIDRES_NN_HPP_
#define GRIDRES_NN_HPP_

#include <random>
#include <vector>

namespace gridres {

// Fully connected network, tanh hidden layers, linear output. Parameters live
// in one flat vector: per layer W (out x in, row major) followed by b.
class Mlp {
 public:
  Mlp() = default;
  explicit Mlp(std::vector<int> sizes);

  // activations of every layer, input first
  struct Tape {
    std::vector<std::vector<double>> act;
  };

  std::vector<double> forward(const std::vector<double>& x, Tape* tape = nullptr) const;
  // accumulates dL/dparams into grad given dL/doutput
  void backward(const Tape& tape, const std::vector<double>& grad_out,
                std::vector<double>& grad) const;

  // orthogonal rows/columns scaled by gain, zero biases
  void init_orthogonal(std::mt19937_64& rng, double hidden_gain, double output_gain);

  int input_dim() const { return sizes_.front(); }
  int output_dim() const { return sizes_.back(); }
  const std::vector<int>& sizes() const { return sizes_; }
  size_t num_params() const { return params_.size(); }
  std::vector<double>& params() { return params_; }
  const std::vector<double>& params() const { return params_; }

 private:
  std::vector<int> sizes_;
  std::vector<size_t> offsets_;  // start of each layer's W
  std::vector<double> params_;
};

class Adam {
 public:
  Adam() = default;
  Adam(size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);
  void step(std::vector<double>& params, const std::vector<double>& grad);
  double learning_rate() const { return lr_; }

 private:
  double lr_ = 1e-3, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
  long t_ = 0;
  std::vector<double> m_, v_;
};

}  // namespace gridres

#endif  // GRIDRES_NN_HPP_
