#pragma once

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gazegrade/error.hpp"
#include "gazegrade/features.hpp"
#include "gazegrade/rng.hpp"
#include "gazegrade/types.hpp"

namespace gazegrade::nn {

// Parameters are float in production; double instantiations exist so the
// finite-difference gradient oracle is not drowned by rounding error.

template <typename T>
struct Param {
  std::vector<T> v;
  std::vector<T> g;
  int rows = 0;  // conv: out_ch x (in_ch*kernel); dense: out x in; bias: out x 1
  int cols = 0;

  void init(int r, int c) {
    rows = r;
    cols = c;
    v.assign(static_cast<std::size_t>(r) * c, T(0));
    g.assign(v.size(), T(0));
  }
};

struct ModelConfig {
  int seq_len = 1000;  // nominal_rate * window size
  int in_channels = 2;
  int stem_channels = 16;
  std::vector<int> block_channels = {16, 32, 64};
  int kernel = 7;
  int scalar_hidden = 16;
  int fusion_hidden = 64;
  std::uint64_t seed = 0;

  int embedding_dim() const { return block_channels.back(); }
  int fused_dim() const { return embedding_dim() + 3 * scalar_hidden; }

  void validate() const {
    if (seq_len < 1) fail(ErrorCategory::config, "seq_len must be positive");
    if (in_channels < 1) fail(ErrorCategory::config, "in_channels must be positive");
    if (kernel < 1 || kernel % 2 == 0)
      fail(ErrorCategory::config, "kernel size must be odd and positive");
    if (block_channels.empty()) fail(ErrorCategory::config, "need at least one residual block");
    for (int w : block_channels)
      if (w < 1) fail(ErrorCategory::config, "block width must be positive");
    if (stem_channels != block_channels.front())
      fail(ErrorCategory::config,
           "stem width must match the first block width (identity skip)");
    if (scalar_hidden < 1 || fusion_hidden < 1)
      fail(ErrorCategory::config, "mlp widths must be positive");
  }
};

// Convolution with "same" output length: out_len = ceil(in_len / stride),
// zero padding split left/right.
template <typename T>
struct Conv1d {
  int in_ch = 0, out_ch = 0, kernel = 1, stride = 1;
  Param<T> w, b;

  void init(int ic, int oc, int k, int s) {
    in_ch = ic;
    out_ch = oc;
    kernel = k;
    stride = s;
    w.init(oc, ic * k);
    b.init(oc, 1);
  }
  int out_len(int in_len) const { return (in_len + stride - 1) / stride; }
  int pad_left(int in_len) const {
    int total = std::max((out_len(in_len) - 1) * stride + kernel - in_len, 0);
    return total / 2;
  }
};

template <typename T>
struct Dense {
  int in = 0, out = 0;
  Param<T> w, b;

  void init(int i, int o) {
    in = i;
    out = o;
    w.init(o, i);
    b.init(o, 1);
  }
};

template <typename T>
struct Model {
  ModelConfig cfg;
  Conv1d<T> stem;
  struct ResBlock {
    Conv1d<T> c1, c2;
  };
  std::vector<ResBlock> blocks;
  std::vector<Conv1d<T>> transitions;  // stride-2, between consecutive blocks
  struct ScalarMlp {
    Dense<T> d1, d2;
  };
  std::array<ScalarMlp, 3> scalars;  // afd, fc, aed streams
  Dense<T> fuse1, fuse2;

  // Stable enumeration order; checkpoint tensor names come from here.
  template <typename F>
  void for_each_param(F&& f) {
    f("stem.w", stem.w);
    f("stem.b", stem.b);
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      std::string p = "block" + std::to_string(i);
      f(p + ".c1.w", blocks[i].c1.w);
      f(p + ".c1.b", blocks[i].c1.b);
      f(p + ".c2.w", blocks[i].c2.w);
      f(p + ".c2.b", blocks[i].c2.b);
      if (i + 1 < blocks.size()) {
        std::string t = "trans" + std::to_string(i);
        f(t + ".w", transitions[i].w);
        f(t + ".b", transitions[i].b);
      }
    }
    for (std::size_t s = 0; s < scalars.size(); ++s) {
      std::string p = "scalar" + std::to_string(s);
      f(p + ".d1.w", scalars[s].d1.w);
      f(p + ".d1.b", scalars[s].d1.b);
      f(p + ".d2.w", scalars[s].d2.w);
      f(p + ".d2.b", scalars[s].d2.b);
    }
    f("fuse1.w", fuse1.w);
    f("fuse1.b", fuse1.b);
    f("fuse2.w", fuse2.w);
    f("fuse2.b", fuse2.b);
  }

  template <typename F>
  void for_each_param(F&& f) const {
    const_cast<Model*>(this)->for_each_param(
        [&](const std::string& n, Param<T>& p) { f(n, static_cast<const Param<T>&>(p)); });
  }

  std::size_t param_count() const {
    std::size_t n = 0;
    for_each_param([&](const std::string&, const Param<T>& p) { n += p.v.size(); });
    return n;
  }

  void zero_grad() {
    for_each_param([](const std::string&, Param<T>& p) {
      std::fill(p.g.begin(), p.g.end(), T(0));
    });
  }
};

template <typename T = float>
Model<T> init_model(const ModelConfig& cfg) {
  cfg.validate();
  Model<T> m;
  m.cfg = cfg;
  m.stem.init(cfg.in_channels, cfg.stem_channels, cfg.kernel, 1);
  m.blocks.resize(cfg.block_channels.size());
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    int w = cfg.block_channels[i];
    m.blocks[i].c1.init(w, w, cfg.kernel, 1);
    m.blocks[i].c2.init(w, w, cfg.kernel, 1);
  }
  m.transitions.resize(m.blocks.size() - 1);
  for (std::size_t i = 0; i + 1 < m.blocks.size(); ++i)
    m.transitions[i].init(cfg.block_channels[i], cfg.block_channels[i + 1], cfg.kernel, 2);
  for (auto& s : m.scalars) {
    s.d1.init(1, cfg.scalar_hidden);
    s.d2.init(cfg.scalar_hidden, cfg.scalar_hidden);
  }
  m.fuse1.init(cfg.fused_dim(), cfg.fusion_hidden);
  m.fuse2.init(cfg.fusion_hidden, 2);

  // Fan-in-scaled uniform weights, zero biases. Fan-in is the weight row
  // length for both conv (in_ch*kernel) and dense (in) layers.
  Rng rng(derive_seed(cfg.seed, 0x1));
  m.for_each_param([&](const std::string& name, Param<T>& p) {
    if (name.ends_with(".b")) return;
    double bound = 1.0 / std::sqrt(static_cast<double>(p.cols));
    for (auto& x : p.v) x = static_cast<T>(rng.uniform(-bound, bound));
  });
  return m;
}

// Zeroing the classifier head makes both logits identically 0, so the
// softmax is exactly (0.5, 0.5) for any input. Used as the untrained
// reference point.
template <typename T>
void make_symmetric_head(Model<T>& m) {
  std::fill(m.fuse2.w.v.begin(), m.fuse2.w.v.end(), T(0));
  std::fill(m.fuse2.b.v.begin(), m.fuse2.b.v.end(), T(0));
}

// One training batch in dense layout: seq is [item][channel][time],
// scalars are [item][afd, fc, aed], labels use -1 for "unknown".
template <typename T>
struct Batch {
  int n = 0;
  int seq_len = 0;
  std::vector<T> seq;
  std::vector<T> scalars;
  std::vector<int> labels;
};

template <typename T>
Batch<T> make_batch(std::span<const WindowFeatures> fs, std::span<const std::size_t> idx) {
  Batch<T> b;
  b.n = static_cast<int>(idx.size());
  if (b.n == 0) return b;
  b.seq_len = fs[idx[0]].seq_len;
  b.seq.resize(static_cast<std::size_t>(b.n) * 2 * b.seq_len);
  b.scalars.resize(static_cast<std::size_t>(b.n) * 3);
  b.labels.resize(static_cast<std::size_t>(b.n));
  for (int i = 0; i < b.n; ++i) {
    const WindowFeatures& f = fs[idx[static_cast<std::size_t>(i)]];
    if (f.seq_len != b.seq_len)
      fail(ErrorCategory::validation, "mixed sequence lengths in one batch");
    T* dst = b.seq.data() + static_cast<std::size_t>(i) * 2 * b.seq_len;
    for (std::size_t k = 0; k < f.gaze_seq.size(); ++k) dst[k] = static_cast<T>(f.gaze_seq[k]);
    b.scalars[static_cast<std::size_t>(i) * 3 + 0] = static_cast<T>(f.afd_ms);
    b.scalars[static_cast<std::size_t>(i) * 3 + 1] = static_cast<T>(f.fc);
    b.scalars[static_cast<std::size_t>(i) * 3 + 2] = static_cast<T>(f.aed);
    b.labels[static_cast<std::size_t>(i)] = static_cast<int>(f.label);
  }
  return b;
}

template <typename T>
Batch<T> make_batch(std::span<const WindowFeatures> fs) {
  std::vector<std::size_t> idx(fs.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  return make_batch<T>(fs, idx);
}

namespace detail {

template <typename T>
using Mat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic>;
template <typename T>
using MapMat = Eigen::Map<Mat<T>>;
template <typename T>
using MapCMat = Eigen::Map<const Mat<T>>;
template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapRowMat = Eigen::Map<RowMat<T>>;
template <typename T>
using MapCRowMat = Eigen::Map<const RowMat<T>>;

}  // namespace detail

template <typename T>
struct ConvWs {
  int batch = 0, in_len = 0, out_len = 0;
  std::vector<T> col;   // (in_ch*kernel) x (batch*out_len), column-major
  std::vector<T> gemm;  // out_ch x (batch*out_len), column-major
  std::vector<T> y;     // [item][out_ch][t], pre-activation
  std::vector<T> dy;
  std::vector<T> dcol;
};

template <typename T>
struct DenseWs {
  std::vector<T> x;  // saved input, n x in row-major
  std::vector<T> y;  // n x out row-major, pre-activation
  std::vector<T> dy;
  std::vector<T> dx;
};

template <typename T>
struct Workspace {
  int batch = 0;
  ConvWs<T> stem;
  std::vector<T> stem_act;
  struct BlockWs {
    ConvWs<T> c1, c2;
    std::vector<T> act1, out;
    std::vector<T> d_act1, d_out, d_in;
  };
  std::vector<BlockWs> blocks;
  std::vector<ConvWs<T>> trans;
  std::vector<std::vector<T>> trans_act;
  std::vector<T> gap;  // n x embed row-major
  struct MlpWs {
    DenseWs<T> d1, d2;
    std::vector<T> a1, a2;  // post-relu
  };
  std::array<MlpWs, 3> scalars;
  std::vector<T> fused;  // n x fused_dim
  DenseWs<T> fuse1;
  std::vector<T> fuse1_act;
  DenseWs<T> fuse2;
  std::vector<T> probs;    // n x 2
  std::vector<T> dlogits;  // n x 2
};

namespace detail {

template <typename T>
void conv_forward(const Conv1d<T>& c, const std::vector<T>& x, int batch, int in_len,
                  ConvWs<T>& ws) {
  const int Lout = c.out_len(in_len);
  const int K = c.in_ch * c.kernel;
  const int pad = c.pad_left(in_len);
  ws.batch = batch;
  ws.in_len = in_len;
  ws.out_len = Lout;
  const std::size_t ncols = static_cast<std::size_t>(batch) * Lout;
  ws.col.resize(static_cast<std::size_t>(K) * ncols);
  for (int b = 0; b < batch; ++b) {
    const T* xb = x.data() + static_cast<std::size_t>(b) * c.in_ch * in_len;
    for (int t = 0; t < Lout; ++t) {
      T* colp = ws.col.data() + (static_cast<std::size_t>(b) * Lout + t) * K;
      const int t0 = t * c.stride - pad;
      for (int ci = 0; ci < c.in_ch; ++ci) {
        const T* xp = xb + static_cast<std::size_t>(ci) * in_len;
        T* cp = colp + ci * c.kernel;
        for (int k = 0; k < c.kernel; ++k) {
          const int ti = t0 + k;
          cp[k] = (ti >= 0 && ti < in_len) ? xp[ti] : T(0);
        }
      }
    }
  }

  ws.gemm.resize(static_cast<std::size_t>(c.out_ch) * ncols);
  MapCMat<T> colm(ws.col.data(), K, static_cast<Eigen::Index>(ncols));
  MapCRowMat<T> wm(c.w.v.data(), c.out_ch, K);
  MapMat<T> ym(ws.gemm.data(), c.out_ch, static_cast<Eigen::Index>(ncols));
  ym.noalias() = wm * colm;

  ws.y.resize(static_cast<std::size_t>(batch) * c.out_ch * Lout);
  for (int b = 0; b < batch; ++b)
    for (int oc = 0; oc < c.out_ch; ++oc) {
      T* yp = ws.y.data() + (static_cast<std::size_t>(b) * c.out_ch + oc) * Lout;
      const T* gp = ws.gemm.data() + static_cast<std::size_t>(b) * Lout * c.out_ch + oc;
      const T bias = c.b.v[static_cast<std::size_t>(oc)];
      for (int t = 0; t < Lout; ++t) yp[t] = gp[static_cast<std::size_t>(t) * c.out_ch] + bias;
    }
}

// dy is [item][out_ch][t]; accumulates parameter gradients and, when dx is
// non-null, overwrites it with the input gradient.
template <typename T>
void conv_backward(Conv1d<T>& c, ConvWs<T>& ws, const std::vector<T>& dy, std::vector<T>* dx) {
  const int batch = ws.batch, Lout = ws.out_len, Lin = ws.in_len;
  const int K = c.in_ch * c.kernel;
  const int pad = c.pad_left(Lin);
  const std::size_t ncols = static_cast<std::size_t>(batch) * Lout;

  // regroup dy into the gemm layout: (oc, b*Lout + t)
  ws.gemm.resize(static_cast<std::size_t>(c.out_ch) * ncols);
  for (int b = 0; b < batch; ++b)
    for (int oc = 0; oc < c.out_ch; ++oc) {
      const T* dp = dy.data() + (static_cast<std::size_t>(b) * c.out_ch + oc) * Lout;
      T* gp = ws.gemm.data() + static_cast<std::size_t>(b) * Lout * c.out_ch + oc;
      for (int t = 0; t < Lout; ++t) gp[static_cast<std::size_t>(t) * c.out_ch] = dp[t];
    }

  MapCMat<T> dym(ws.gemm.data(), c.out_ch, static_cast<Eigen::Index>(ncols));
  MapCMat<T> colm(ws.col.data(), K, static_cast<Eigen::Index>(ncols));
  MapRowMat<T> dwm(c.w.g.data(), c.out_ch, K);
  dwm.noalias() += dym * colm.transpose();
  Eigen::Map<Eigen::Matrix<T, Eigen::Dynamic, 1>> dbm(c.b.g.data(), c.out_ch);
  dbm.noalias() += dym.rowwise().sum();

  if (!dx) return;
  ws.dcol.resize(static_cast<std::size_t>(K) * ncols);
  MapCRowMat<T> wm(c.w.v.data(), c.out_ch, K);
  MapMat<T> dcolm(ws.dcol.data(), K, static_cast<Eigen::Index>(ncols));
  dcolm.noalias() = wm.transpose() * dym;

  dx->assign(static_cast<std::size_t>(batch) * c.in_ch * Lin, T(0));
  for (int b = 0; b < batch; ++b) {
    T* xb = dx->data() + static_cast<std::size_t>(b) * c.in_ch * Lin;
    for (int t = 0; t < Lout; ++t) {
      const T* colp = ws.dcol.data() + (static_cast<std::size_t>(b) * Lout + t) * K;
      const int t0 = t * c.stride - pad;
      for (int ci = 0; ci < c.in_ch; ++ci) {
        T* xp = xb + static_cast<std::size_t>(ci) * Lin;
        const T* cp = colp + ci * c.kernel;
        for (int k = 0; k < c.kernel; ++k) {
          const int ti = t0 + k;
          if (ti >= 0 && ti < Lin) xp[ti] += cp[k];
        }
      }
    }
  }
}

template <typename T>
void dense_forward(const Dense<T>& d, const std::vector<T>& x, int n, DenseWs<T>& ws) {
  ws.x = x;
  ws.y.resize(static_cast<std::size_t>(n) * d.out);
  MapCRowMat<T> xm(x.data(), n, d.in);
  MapCRowMat<T> wm(d.w.v.data(), d.out, d.in);
  MapRowMat<T> ym(ws.y.data(), n, d.out);
  ym.noalias() = xm * wm.transpose();
  Eigen::Map<const Eigen::Matrix<T, 1, Eigen::Dynamic>> bv(d.b.v.data(), d.out);
  ym.rowwise() += bv;
}

template <typename T>
void dense_backward(Dense<T>& d, DenseWs<T>& ws, const std::vector<T>& dy, int n) {
  MapCRowMat<T> dym(dy.data(), n, d.out);
  MapCRowMat<T> xm(ws.x.data(), n, d.in);
  MapRowMat<T> dwm(d.w.g.data(), d.out, d.in);
  dwm.noalias() += dym.transpose() * xm;
  Eigen::Map<Eigen::Matrix<T, 1, Eigen::Dynamic>> dbm(d.b.g.data(), d.out);
  dbm.noalias() += dym.colwise().sum();
  ws.dx.resize(static_cast<std::size_t>(n) * d.in);
  MapCRowMat<T> wm(d.w.v.data(), d.out, d.in);
  MapRowMat<T> dxm(ws.dx.data(), n, d.in);
  dxm.noalias() = dym * wm;
}

template <typename T>
void relu(const std::vector<T>& x, std::vector<T>& y) {
  y.resize(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > T(0) ? x[i] : T(0);
}

// In-place mask of an upstream gradient by the post-activation values.
template <typename T>
void relu_backward(const std::vector<T>& act, std::vector<T>& grad) {
  for (std::size_t i = 0; i < act.size(); ++i)
    if (!(act[i] > T(0))) grad[i] = T(0);
}

}  // namespace detail

template <typename T>
void forward(const Model<T>& m, const Batch<T>& batch, Workspace<T>& ws) {
  const ModelConfig& cfg = m.cfg;
  if (batch.n <= 0) fail(ErrorCategory::validation, "forward: empty batch");
  if (batch.seq_len != cfg.seq_len)
    fail(ErrorCategory::validation,
         "forward: sequence length " + std::to_string(batch.seq_len) +
             " does not match model input length " + std::to_string(cfg.seq_len));
  const int n = batch.n;
  ws.batch = n;
  ws.blocks.resize(m.blocks.size());
  ws.trans.resize(m.transitions.size());
  ws.trans_act.resize(m.transitions.size());

  detail::conv_forward(m.stem, batch.seq, n, cfg.seq_len, ws.stem);
  detail::relu(ws.stem.y, ws.stem_act);

  const std::vector<T>* in = &ws.stem_act;
  int len = cfg.seq_len;
  for (std::size_t i = 0; i < m.blocks.size(); ++i) {
    auto& bws = ws.blocks[i];
    detail::conv_forward(m.blocks[i].c1, *in, n, len, bws.c1);
    detail::relu(bws.c1.y, bws.act1);
    detail::conv_forward(m.blocks[i].c2, bws.act1, n, len, bws.c2);
    bws.out.resize(bws.c2.y.size());
    for (std::size_t k = 0; k < bws.out.size(); ++k) {
      T s = bws.c2.y[k] + (*in)[k];  // identity skip
      bws.out[k] = s > T(0) ? s : T(0);
    }
    in = &bws.out;
    if (i < m.transitions.size()) {
      detail::conv_forward(m.transitions[i], *in, n, len, ws.trans[i]);
      detail::relu(ws.trans[i].y, ws.trans_act[i]);
      in = &ws.trans_act[i];
      len = m.transitions[i].out_len(len);
    }
  }

  const int embed = cfg.embedding_dim();
  ws.gap.resize(static_cast<std::size_t>(n) * embed);
  const T inv_len = T(1) / static_cast<T>(len);
  for (int b = 0; b < n; ++b)
    for (int c = 0; c < embed; ++c) {
      const T* p = in->data() + (static_cast<std::size_t>(b) * embed + c) * len;
      T s = T(0);
      for (int t = 0; t < len; ++t) s += p[t];
      ws.gap[static_cast<std::size_t>(b) * embed + c] = s * inv_len;
    }

  for (int s = 0; s < 3; ++s) {
    auto& sws = ws.scalars[static_cast<std::size_t>(s)];
    std::vector<T> x(static_cast<std::size_t>(n));
    for (int b = 0; b < n; ++b) x[static_cast<std::size_t>(b)] = batch.scalars[static_cast<std::size_t>(b) * 3 + s];
    detail::dense_forward(m.scalars[static_cast<std::size_t>(s)].d1, x, n, sws.d1);
    detail::relu(sws.d1.y, sws.a1);
    detail::dense_forward(m.scalars[static_cast<std::size_t>(s)].d2, sws.a1, n, sws.d2);
    detail::relu(sws.d2.y, sws.a2);
  }

  const int fdim = cfg.fused_dim();
  const int h = cfg.scalar_hidden;
  ws.fused.resize(static_cast<std::size_t>(n) * fdim);
  for (int b = 0; b < n; ++b) {
    T* dst = ws.fused.data() + static_cast<std::size_t>(b) * fdim;
    std::copy_n(ws.gap.data() + static_cast<std::size_t>(b) * embed, embed, dst);
    for (int s = 0; s < 3; ++s)
      std::copy_n(ws.scalars[static_cast<std::size_t>(s)].a2.data() + static_cast<std::size_t>(b) * h, h,
                  dst + embed + s * h);
  }

  detail::dense_forward(m.fuse1, ws.fused, n, ws.fuse1);
  detail::relu(ws.fuse1.y, ws.fuse1_act);
  detail::dense_forward(m.fuse2, ws.fuse1_act, n, ws.fuse2);

  ws.probs.resize(static_cast<std::size_t>(n) * 2);
  for (int b = 0; b < n; ++b) {
    const T* lg = ws.fuse2.y.data() + static_cast<std::size_t>(b) * 2;
    T mx = std::max(lg[0], lg[1]);
    T e0 = std::exp(lg[0] - mx), e1 = std::exp(lg[1] - mx);
    T z = e0 + e1;
    ws.probs[static_cast<std::size_t>(b) * 2 + 0] = e0 / z;
    ws.probs[static_cast<std::size_t>(b) * 2 + 1] = e1 / z;
  }
}

// Mean 2-class cross-entropy plus full backward pass; gradients accumulate
// into Param::g (call zero_grad first for a fresh batch).
template <typename T>
double loss_and_gradients(Model<T>& m, const Batch<T>& batch, Workspace<T>& ws) {
  forward(m, batch, ws);
  const int n = batch.n;

  double loss = 0;
  ws.dlogits.resize(static_cast<std::size_t>(n) * 2);
  const T invn = T(1) / static_cast<T>(n);
  for (int b = 0; b < n; ++b) {
    int label = batch.labels[static_cast<std::size_t>(b)];
    if (label != 0 && label != 1)
      fail(ErrorCategory::validation, "loss: unlabeled item at batch index " + std::to_string(b));
    double p = static_cast<double>(ws.probs[static_cast<std::size_t>(b) * 2 + label]);
    double item = -std::log(p);
    if (!std::isfinite(item))
      fail(ErrorCategory::numeric, "non-finite loss at batch index " + std::to_string(b));
    loss += item;
    for (int c = 0; c < 2; ++c) {
      T y = (c == label) ? T(1) : T(0);
      ws.dlogits[static_cast<std::size_t>(b) * 2 + c] =
          (ws.probs[static_cast<std::size_t>(b) * 2 + c] - y) * invn;
    }
  }
  loss /= n;

  const ModelConfig& cfg = m.cfg;
  const int embed = cfg.embedding_dim();
  const int h = cfg.scalar_hidden;
  const int fdim = cfg.fused_dim();

  detail::dense_backward(m.fuse2, ws.fuse2, ws.dlogits, n);
  detail::relu_backward(ws.fuse1_act, ws.fuse2.dx);
  detail::dense_backward(m.fuse1, ws.fuse1, ws.fuse2.dx, n);

  // split the fused gradient back into gap + scalar streams
  std::vector<T>& d_fused = ws.fuse1.dx;
  std::vector<T> d_gap(static_cast<std::size_t>(n) * embed);
  for (int b = 0; b < n; ++b) {
    const T* src = d_fused.data() + static_cast<std::size_t>(b) * fdim;
    std::copy_n(src, embed, d_gap.data() + static_cast<std::size_t>(b) * embed);
  }
  for (int s = 0; s < 3; ++s) {
    auto& sws = ws.scalars[static_cast<std::size_t>(s)];
    std::vector<T> d_a2(static_cast<std::size_t>(n) * h);
    for (int b = 0; b < n; ++b)
      std::copy_n(d_fused.data() + static_cast<std::size_t>(b) * fdim + embed + s * h, h,
                  d_a2.data() + static_cast<std::size_t>(b) * h);
    detail::relu_backward(sws.a2, d_a2);
    detail::dense_backward(m.scalars[static_cast<std::size_t>(s)].d2, sws.d2, d_a2, n);
    detail::relu_backward(sws.a1, sws.d2.dx);
    detail::dense_backward(m.scalars[static_cast<std::size_t>(s)].d1, sws.d1, sws.d2.dx, n);
    // input gradient of the scalar stream is not needed
  }

  // trunk backward, mirroring the forward stage order
  int last_len = cfg.seq_len;
  for (const auto& t : m.transitions) last_len = t.out_len(last_len);

  std::vector<T>* d_out = &ws.blocks.back().d_out;
  d_out->resize(static_cast<std::size_t>(n) * embed * last_len);
  const T inv_last = T(1) / static_cast<T>(last_len);
  for (int b = 0; b < n; ++b)
    for (int c = 0; c < embed; ++c) {
      T g = d_gap[static_cast<std::size_t>(b) * embed + c] * inv_last;
      T* p = d_out->data() + (static_cast<std::size_t>(b) * embed + c) * last_len;
      for (int t = 0; t < last_len; ++t) p[t] = g;
    }

  for (std::size_t ri = m.blocks.size(); ri-- > 0;) {
    auto& bws = ws.blocks[ri];
    // d_out currently holds dL/d(block output)
    detail::relu_backward(bws.out, *d_out);  // now dL/d(sum)
    detail::conv_backward(m.blocks[ri].c2, bws.c2, *d_out, &bws.d_act1);
    detail::relu_backward(bws.act1, bws.d_act1);
    detail::conv_backward(m.blocks[ri].c1, bws.c1, bws.d_act1, &bws.d_in);
    // skip branch adds the sum gradient straight to the block input
    for (std::size_t k = 0; k < bws.d_in.size(); ++k) bws.d_in[k] += (*d_out)[k];

    if (ri == 0) {
      detail::relu_backward(ws.stem_act, bws.d_in);
      detail::conv_backward(m.stem, ws.stem, bws.d_in, static_cast<std::vector<T>*>(nullptr));
    } else {
      auto& tws = ws.trans[ri - 1];
      detail::relu_backward(ws.trans_act[ri - 1], bws.d_in);
      detail::conv_backward(m.transitions[ri - 1], tws, bws.d_in,
                            &ws.blocks[ri - 1].d_out);
      d_out = &ws.blocks[ri - 1].d_out;
    }
  }

  return loss;
}

// Expert-class probability per batch item.
template <typename T>
std::vector<double> predict_scores(const Model<T>& m, std::span<const WindowFeatures> fs,
                                   Workspace<T>& ws, int chunk = 256) {
  std::vector<double> out;
  out.reserve(fs.size());
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < fs.size(); i += static_cast<std::size_t>(chunk)) {
    std::size_t hi = std::min(fs.size(), i + static_cast<std::size_t>(chunk));
    idx.clear();
    for (std::size_t k = i; k < hi; ++k) idx.push_back(k);
    Batch<T> b = make_batch<T>(fs, idx);
    forward(m, b, ws);
    for (int k = 0; k < b.n; ++k)
      out.push_back(static_cast<double>(ws.probs[static_cast<std::size_t>(k) * 2 + 1]));
  }
  return out;
}

template <typename T>
double predict_expertise(const Model<T>& m, const WindowFeatures& w) {
  Workspace<T> ws;
  std::array<WindowFeatures, 1> one{w};
  return predict_scores(m, std::span<const WindowFeatures>(one), ws).front();
}

}  // namespace gazegrade::nn
