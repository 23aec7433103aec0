#pragma once

#include "gaitrec/nn/tensor.hpp"

namespace gaitrec::nn {

// Standard LSTM cell with input/forget/candidate/output gates. The cell owns
// its parameters; callers drive the unroll and own the (h, c) state.
//
// Gate pre-activations are packed [i | f | g | o] along the trailing axis.
class LstmCell {
 public:
  LstmCell(std::size_t input_dim, std::size_t units, Rng& rng);

  std::size_t input_dim() const { return input_dim_; }
  std::size_t units() const { return units_; }

  struct StepCache {
    Tensor gates;          // B x 4U, post-activation
    Tensor cell;           // B x U, c_t
    Tensor cell_tanh;      // B x U, tanh(c_t)
    const Tensor* x = nullptr;       // borrowed: step input
    const Tensor* h_prev = nullptr;  // borrowed: previous hidden state
    const Tensor* c_prev = nullptr;  // borrowed: previous cell state
  };

  // h/c are B x units; x is B x input_dim. Zero state tensors start a sequence.
  void step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev, Tensor* h_out,
            Tensor* c_out, StepCache* cache) const;

  struct Grads {
    Tensor d_wx, d_wh, d_b;
    void init(const LstmCell& cell);
    bool empty() const { return d_wx.empty(); }
  };

  // Accumulates parameter gradients into `grads` (init()ed by the caller) and
  // returns gradients w.r.t. the step inputs.
  void backward_step(const StepCache& cache, const Tensor& dh, const Tensor& dc, Tensor* dx,
                     Tensor* dh_prev, Tensor* dc_prev, Grads* grads) const;

  std::vector<Tensor*> params() { return {&wx_, &wh_, &b_}; }
  std::vector<const Tensor*> params() const { return {&wx_, &wh_, &b_}; }

 private:
  std::size_t input_dim_, units_;
  Tensor wx_;  // [input_dim, 4*units]
  Tensor wh_;  // [units, 4*units]
  Tensor b_;   // [4*units], forget-gate slice initialized to 1
};

}  // namespace gaitrec::nn
