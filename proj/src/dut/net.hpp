#pragma once

// Internal: templated forward/backward for the DUT network. The float
// instantiation runs the quantized evaluation path on the dequantized int8
// weights; the double instantiation runs on the shadow weights for training
// and sensitivity gradients. Both share the same structure so the two paths
// cannot drift apart.

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "rift/dut/model.hpp"
#include "rift/kernels/kernels.hpp"

namespace rift::dut {

template <typename Real>
struct WeightPtrs {
  std::array<const Real*, kNumGroups> g{};
  const Real* operator[](GroupKind k) const {
    return g[static_cast<int>(k)];
  }
};

inline WeightPtrs<float> deq_view(const QuantizedModel& m) {
  WeightPtrs<float> w;
  for (int i = 0; i < kNumGroups; ++i) w.g[i] = m.groups[i].deq.data();
  return w;
}

inline WeightPtrs<double> shadow_view(const QuantizedModel& m) {
  WeightPtrs<double> w;
  for (int i = 0; i < kNumGroups; ++i)
    w.g[i] = m.groups[i].float_weights.data();
  return w;
}

template <typename Real>
struct NetCache {
  struct Block {
    std::vector<Real> x_in, y1, xhat1, q, k, v, probs, ctx, x1, y2, xhat2, z,
        gact;
    std::vector<Real> rstd1, rstd2;
  };
  std::vector<Block> blocks;
  std::vector<Real> x0;  // B*T x d input activations
  std::vector<Real> x_final, yf, xhatf, rstdf;
  std::vector<Real> pooled, logits, probs_out;
  std::size_t batch = 0;

  void resize(const ArchConfig& a, std::size_t B) {
    batch = B;
    const std::size_t R = B * static_cast<std::size_t>(a.seq_len);
    const std::size_t d = static_cast<std::size_t>(a.d_model);
    const std::size_t F = static_cast<std::size_t>(a.ffn_hidden);
    const std::size_t H = static_cast<std::size_t>(a.n_heads);
    const std::size_t T = static_cast<std::size_t>(a.seq_len);
    blocks.resize(static_cast<std::size_t>(a.n_blocks));
    x0.resize(R * d);
    for (auto& bl : blocks) {
      bl.x_in.resize(R * d);
      bl.y1.resize(R * d);
      bl.xhat1.resize(R * d);
      bl.q.resize(R * d);
      bl.k.resize(R * d);
      bl.v.resize(R * d);
      bl.probs.resize(B * H * T * T);
      bl.ctx.resize(R * d);
      bl.x1.resize(R * d);
      bl.y2.resize(R * d);
      bl.xhat2.resize(R * d);
      bl.z.resize(R * F);
      bl.gact.resize(R * F);
      bl.rstd1.resize(R);
      bl.rstd2.resize(R);
    }
    x_final.resize(R * d);
    yf.resize(R * d);
    xhatf.resize(R * d);
    rstdf.resize(R);
    pooled.resize(B * d);
    logits.resize(B * static_cast<std::size_t>(a.n_classes));
    probs_out.resize(B * static_cast<std::size_t>(a.n_classes));
  }
};

inline constexpr double kLnEps = 1e-5;
inline constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
inline constexpr double kGeluA = 0.044715;

template <typename Real>
inline Real gelu(Real z) {
  const Real u = static_cast<Real>(kGeluC) *
                 (z + static_cast<Real>(kGeluA) * z * z * z);
  return static_cast<Real>(0.5) * z * (static_cast<Real>(1) + std::tanh(u));
}

inline double gelu_grad(double z) {
  const double u = kGeluC * (z + kGeluA * z * z * z);
  const double t = std::tanh(u);
  return 0.5 * (1.0 + t) +
         0.5 * z * (1.0 - t * t) * kGeluC * (1.0 + 3.0 * kGeluA * z * z);
}

template <typename Real>
void layer_norm_forward(const Real* x, const Real* gamma, const Real* beta,
                        std::size_t rows, std::size_t d, Real* y, Real* xhat,
                        Real* rstd) {
  for (std::size_t r = 0; r < rows; ++r) {
    const Real* row = x + r * d;
    Real mu = 0;
    for (std::size_t j = 0; j < d; ++j) mu += row[j];
    mu /= static_cast<Real>(d);
    Real var = 0;
    for (std::size_t j = 0; j < d; ++j) {
      const Real delta = row[j] - mu;
      var += delta * delta;
    }
    var /= static_cast<Real>(d);
    const Real rs =
        static_cast<Real>(1) / std::sqrt(var + static_cast<Real>(kLnEps));
    rstd[r] = rs;
    Real* yrow = y + r * d;
    Real* xrow = xhat + r * d;
    for (std::size_t j = 0; j < d; ++j) {
      const Real xh = (row[j] - mu) * rs;
      xrow[j] = xh;
      yrow[j] = gamma[j] * xh + beta[j];
    }
  }
}

// dx is accumulated (+=); dgamma/dbeta are accumulated as well.
inline void layer_norm_backward(const double* dy, const double* xhat,
                                const double* rstd, const double* gamma,
                                std::size_t rows, std::size_t d, double* dx,
                                double* dgamma, double* dbeta) {
  std::vector<double> dxhat(d);
  for (std::size_t r = 0; r < rows; ++r) {
    const double* dyrow = dy + r * d;
    const double* xrow = xhat + r * d;
    double m1 = 0, m2 = 0;
    for (std::size_t j = 0; j < d; ++j) {
      dgamma[j] += dyrow[j] * xrow[j];
      dbeta[j] += dyrow[j];
      const double dxh = dyrow[j] * gamma[j];
      dxhat[j] = dxh;
      m1 += dxh;
      m2 += dxh * xrow[j];
    }
    m1 /= static_cast<double>(d);
    m2 /= static_cast<double>(d);
    double* dxrow = dx + r * d;
    const double rs = rstd[r];
    for (std::size_t j = 0; j < d; ++j)
      dxrow[j] += rs * (dxhat[j] - m1 - xrow[j] * m2);
  }
}

// Runs the network on cache.x0 (batch of B samples); fills all cache fields
// through logits.
template <typename Real>
void net_forward(const ArchConfig& a, const WeightPtrs<Real>& W,
                 NetCache<Real>& c, std::size_t B) {
  const std::size_t T = static_cast<std::size_t>(a.seq_len);
  const std::size_t d = static_cast<std::size_t>(a.d_model);
  const std::size_t H = static_cast<std::size_t>(a.n_heads);
  const std::size_t dh = d / H;
  const std::size_t F = static_cast<std::size_t>(a.ffn_hidden);
  const std::size_t C = static_cast<std::size_t>(a.n_classes);
  const std::size_t R = B * T;
  const std::size_t NB = static_cast<std::size_t>(a.n_blocks);

  const Real inv_sqrt_dh =
      static_cast<Real>(1) / std::sqrt(static_cast<Real>(dh));

  std::vector<Real> qh(T * dh), kh(T * dh), vh(T * dh), ctxh(T * dh);

  const Real* cur = c.x0.data();
  for (std::size_t b = 0; b < NB; ++b) {
    auto& bl = c.blocks[b];
    std::copy(cur, cur + R * d, bl.x_in.begin());

    const Real* gamma1 = W[GroupKind::kNormScale] + (2 * b) * d;
    const Real* beta1 = W[GroupKind::kNormBias] + (2 * b) * d;
    layer_norm_forward(bl.x_in.data(), gamma1, beta1, R, d, bl.y1.data(),
                       bl.xhat1.data(), bl.rstd1.data());

    const Real* wq = W[GroupKind::kAttnQ] + b * d * d;
    const Real* wk = W[GroupKind::kAttnK] + b * d * d;
    const Real* wv = W[GroupKind::kAttnV] + b * d * d;
    const Real* wo = W[GroupKind::kAttnO] + b * d * d;
    kern::gemm_nn(bl.y1.data(), wq, bl.q.data(), R, d, d);
    kern::gemm_nn(bl.y1.data(), wk, bl.k.data(), R, d, d);
    kern::gemm_nn(bl.y1.data(), wv, bl.v.data(), R, d, d);

    for (std::size_t s = 0; s < B; ++s) {
      for (std::size_t h = 0; h < H; ++h) {
        for (std::size_t t = 0; t < T; ++t) {
          const std::size_t src = (s * T + t) * d + h * dh;
          for (std::size_t j = 0; j < dh; ++j) {
            qh[t * dh + j] = bl.q[src + j];
            kh[t * dh + j] = bl.k[src + j];
            vh[t * dh + j] = bl.v[src + j];
          }
        }
        Real* probs = bl.probs.data() + (s * H + h) * T * T;
        kern::gemm_nt(qh.data(), kh.data(), probs, T, dh, T);
        for (std::size_t t = 0; t < T; ++t) {
          Real* row = probs + t * T;
          Real mx = row[0] * inv_sqrt_dh;
          for (std::size_t u = 0; u < T; ++u) {
            row[u] *= inv_sqrt_dh;
            if (row[u] > mx) mx = row[u];
          }
          Real sum = 0;
          for (std::size_t u = 0; u < T; ++u) {
            row[u] = std::exp(row[u] - mx);
            sum += row[u];
          }
          const Real inv = static_cast<Real>(1) / sum;
          for (std::size_t u = 0; u < T; ++u) row[u] *= inv;
        }
        kern::gemm_nn(probs, vh.data(), ctxh.data(), T, T, dh);
        for (std::size_t t = 0; t < T; ++t) {
          const std::size_t dst = (s * T + t) * d + h * dh;
          for (std::size_t j = 0; j < dh; ++j) bl.ctx[dst + j] = ctxh[t * dh + j];
        }
      }
    }

    kern::gemm_nn(bl.ctx.data(), wo, bl.x1.data(), R, d, d);
    for (std::size_t i = 0; i < R * d; ++i) bl.x1[i] += bl.x_in[i];

    const Real* gamma2 = W[GroupKind::kNormScale] + (2 * b + 1) * d;
    const Real* beta2 = W[GroupKind::kNormBias] + (2 * b + 1) * d;
    layer_norm_forward(bl.x1.data(), gamma2, beta2, R, d, bl.y2.data(),
                       bl.xhat2.data(), bl.rstd2.data());

    const Real* wfi = W[GroupKind::kFfnIn] + b * d * F;
    const Real* wfo = W[GroupKind::kFfnOut] + b * F * d;
    kern::gemm_nn(bl.y2.data(), wfi, bl.z.data(), R, d, F);
    for (std::size_t i = 0; i < R * F; ++i) bl.gact[i] = gelu(bl.z[i]);

    Real* out = (b + 1 < NB) ? c.blocks[b + 1].x_in.data() : c.x_final.data();
    // write FFN output then add the residual; out may alias nothing else
    kern::gemm_nn(bl.gact.data(), wfo, out, R, F, d);
    for (std::size_t i = 0; i < R * d; ++i) out[i] += bl.x1[i];
    cur = out;
  }
  if (NB == 0) std::copy(cur, cur + R * d, c.x_final.begin());
  else {
    // x_final was the last block's output target; blocks[b+1].x_in path
    // copies happen at loop entry, so nothing to do here.
  }

  const std::size_t nf = static_cast<std::size_t>(2 * a.n_blocks);
  const Real* gammaf = W[GroupKind::kNormScale] + nf * d;
  const Real* betaf = W[GroupKind::kNormBias] + nf * d;
  layer_norm_forward(c.x_final.data(), gammaf, betaf, R, d, c.yf.data(),
                     c.xhatf.data(), c.rstdf.data());

  const Real invT = static_cast<Real>(1) / static_cast<Real>(T);
  for (std::size_t s = 0; s < B; ++s) {
    Real* prow = c.pooled.data() + s * d;
    for (std::size_t j = 0; j < d; ++j) prow[j] = 0;
    for (std::size_t t = 0; t < T; ++t) {
      const Real* yrow = c.yf.data() + (s * T + t) * d;
      for (std::size_t j = 0; j < d; ++j) prow[j] += yrow[j];
    }
    for (std::size_t j = 0; j < d; ++j) prow[j] *= invT;
  }

  kern::gemm_nn(c.pooled.data(), W[GroupKind::kClassifier], c.logits.data(), B,
                d, C);
}

struct LossStats {
  double loss = 0.0;
  double accuracy = 0.0;
  std::size_t correct = 0;
};

// Computes mean cross-entropy + exact accuracy from cache.logits, filling
// cache.probs_out. Argmax ties go to the lowest class index.
template <typename Real>
LossStats net_loss(const ArchConfig& a, NetCache<Real>& c,
                   const std::int32_t* labels, std::size_t B) {
  const std::size_t C = static_cast<std::size_t>(a.n_classes);
  LossStats out;
  double loss = 0.0;
  for (std::size_t s = 0; s < B; ++s) {
    const Real* row = c.logits.data() + s * C;
    std::size_t best = 0;
    Real mx = row[0];
    for (std::size_t j = 1; j < C; ++j) {
      if (row[j] > mx) {
        mx = row[j];
        best = j;
      }
    }
    double sum = 0.0;
    for (std::size_t j = 0; j < C; ++j)
      sum += std::exp(static_cast<double>(row[j]) - static_cast<double>(mx));
    const double logsum = std::log(sum) + static_cast<double>(mx);
    const auto label = static_cast<std::size_t>(labels[s]);
    loss += logsum - static_cast<double>(row[label]);
    const double inv = 1.0 / sum;
    Real* prow = c.probs_out.data() + s * C;
    for (std::size_t j = 0; j < C; ++j)
      prow[j] = static_cast<Real>(
          std::exp(static_cast<double>(row[j]) - static_cast<double>(mx)) * inv);
    if (best == label) ++out.correct;
  }
  out.loss = loss / static_cast<double>(B);
  out.accuracy = static_cast<double>(out.correct) / static_cast<double>(B);
  return out;
}

// Reverse pass over a double-precision forward cache. grad must be sized
// n_params and zero-initialized; gradients land at the model's flat offsets.
void net_backward(const QuantizedModel& m, const WeightPtrs<double>& W,
                  const NetCache<double>& c, const std::int32_t* labels,
                  std::size_t B, double loss_scale, std::vector<double>& grad);

// Fills cache.x0 from dataset rows (optionally a subset given by indices).
template <typename Real>
void load_inputs(const ArchConfig& a, const RepDataset& data,
                 const std::size_t* indices, std::size_t B,
                 NetCache<Real>& c) {
  const std::size_t dim = static_cast<std::size_t>(a.feature_dim());
  for (std::size_t s = 0; s < B; ++s) {
    const std::size_t src = indices ? indices[s] : s;
    const float* f = data.sample(src);
    Real* dst = c.x0.data() + s * dim;
    for (std::size_t j = 0; j < dim; ++j) dst[j] = static_cast<Real>(f[j]);
  }
}

}  // namespace rift::dut
