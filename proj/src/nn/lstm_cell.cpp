#include "gaitrec/nn/lstm_cell.hpp"

#include "gaitrec/nn/layers.hpp"

#include <cmath>

#include "eigen_support.hpp"

namespace gaitrec::nn {

namespace {
inline double sigmoid(double v) { return 1.0 / (1.0 + std::exp(-v)); }
}

LstmCell::LstmCell(std::size_t input_dim, std::size_t units, Rng& rng)
    : input_dim_(input_dim),
      units_(units),
      wx_({input_dim, 4 * units}),
      wh_({units, 4 * units}),
      b_({4 * units}) {
  require(input_dim >= 1 && units >= 1, "lstm_cell dimensions must be >= 1");
  glorot_fill(wx_, input_dim, units, rng);
  glorot_fill(wh_, units, units, rng);
  for (std::size_t j = units; j < 2 * units; ++j) b_[j] = 1.0;  // forget gate
}

void LstmCell::step(const Tensor& x, const Tensor& h_prev, const Tensor& c_prev, Tensor* h_out,
                    Tensor* c_out, StepCache* cache) const {
  require(x.ndim() == 2 && x.dim(1) == input_dim_,
          "lstm_cell: input must be Bx" + std::to_string(input_dim_));
  const std::size_t batch = x.dim(0);
  require(h_prev.shape() == Shape({batch, units_}) && c_prev.shape() == Shape({batch, units_}),
          "lstm_cell: state must be Bx" + std::to_string(units_));

  Tensor gates({batch, 4 * units_});
  auto z = as_matrix(gates, batch, 4 * units_);
  z.noalias() = as_matrix(x, batch, input_dim_) * as_matrix(wx_, input_dim_, 4 * units_);
  z.noalias() += as_matrix(h_prev, batch, units_) * as_matrix(wh_, units_, 4 * units_);
  z.rowwise() += Eigen::Map<const Eigen::RowVectorXd>(b_.data(), static_cast<Eigen::Index>(4 * units_));

  *h_out = Tensor({batch, units_});
  *c_out = Tensor({batch, units_});
  Tensor cell_tanh({batch, units_});
  double* g = gates.data();
  double* h = h_out->data();
  double* c = c_out->data();
  double* ct = cell_tanh.data();
  const double* cp = c_prev.data();
  for (std::size_t r = 0; r < batch; ++r) {
    double* zr = g + r * 4 * units_;
    for (std::size_t j = 0; j < units_; ++j) {
      const double gi = sigmoid(zr[j]);
      const double gf = sigmoid(zr[units_ + j]);
      const double gg = std::tanh(zr[2 * units_ + j]);
      const double go = sigmoid(zr[3 * units_ + j]);
      zr[j] = gi;
      zr[units_ + j] = gf;
      zr[2 * units_ + j] = gg;
      zr[3 * units_ + j] = go;
      const double cv = gf * cp[r * units_ + j] + gi * gg;
      const double tv = std::tanh(cv);
      c[r * units_ + j] = cv;
      ct[r * units_ + j] = tv;
      h[r * units_ + j] = go * tv;
    }
  }
  if (cache) {
    cache->gates = std::move(gates);
    cache->cell = *c_out;
    cache->cell_tanh = std::move(cell_tanh);
    cache->x = &x;
    cache->h_prev = &h_prev;
    cache->c_prev = &c_prev;
  }
}

void LstmCell::Grads::init(const LstmCell& cell) {
  d_wx = Tensor({cell.input_dim_, 4 * cell.units_});
  d_wh = Tensor({cell.units_, 4 * cell.units_});
  d_b = Tensor({4 * cell.units_});
}

void LstmCell::backward_step(const StepCache& cache, const Tensor& dh, const Tensor& dc,
                             Tensor* dx, Tensor* dh_prev, Tensor* dc_prev, Grads* grads) const {
  require(cache.x && cache.h_prev && cache.c_prev, "lstm_cell backward needs a step cache");
  const std::size_t batch = dh.dim(0);

  // Pre-activation gradients, packed like the gates.
  Tensor dz({batch, 4 * units_});
  if (dc_prev->empty()) *dc_prev = Tensor({batch, units_});
  const double* gv = cache.gates.data();
  const double* ct = cache.cell_tanh.data();
  const double* cp = cache.c_prev->data();
  const double* dhv = dh.data();
  const double* dcv = dc.data();
  double* dzv = dz.data();
  double* dcp = dc_prev->data();
  for (std::size_t r = 0; r < batch; ++r) {
    const double* zr = gv + r * 4 * units_;
    double* dzr = dzv + r * 4 * units_;
    for (std::size_t j = 0; j < units_; ++j) {
      const double gi = zr[j];
      const double gf = zr[units_ + j];
      const double gg = zr[2 * units_ + j];
      const double go = zr[3 * units_ + j];
      const double tv = ct[r * units_ + j];
      const double dht = dhv[r * units_ + j];
      const double dct = dht * go * (1.0 - tv * tv) + dcv[r * units_ + j];
      dzr[j] = dct * gg * gi * (1.0 - gi);
      dzr[units_ + j] = dct * cp[r * units_ + j] * gf * (1.0 - gf);
      dzr[2 * units_ + j] = dct * gi * (1.0 - gg * gg);
      dzr[3 * units_ + j] = dht * tv * go * (1.0 - go);
      dcp[r * units_ + j] = dct * gf;
    }
  }

  auto dzm = as_matrix(dz, batch, 4 * units_);
  if (grads) {
    as_matrix(grads->d_wx, input_dim_, 4 * units_).noalias() +=
        as_matrix(*cache.x, batch, input_dim_).transpose() * dzm;
    as_matrix(grads->d_wh, units_, 4 * units_).noalias() +=
        as_matrix(*cache.h_prev, batch, units_).transpose() * dzm;
    Eigen::Map<Eigen::RowVectorXd>(grads->d_b.data(), static_cast<Eigen::Index>(4 * units_)) +=
        dzm.colwise().sum();
  }
  if (dx) {
    *dx = Tensor({batch, input_dim_});
    as_matrix(*dx, batch, input_dim_).noalias() =
        dzm * as_matrix(wx_, input_dim_, 4 * units_).transpose();
  }
  if (dh_prev) {
    *dh_prev = Tensor({batch, units_});
    as_matrix(*dh_prev, batch, units_).noalias() =
        dzm * as_matrix(wh_, units_, 4 * units_).transpose();
  }
}

}  // namespace gaitrec::nn
