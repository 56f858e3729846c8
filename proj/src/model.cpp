#include "neuroscan/model.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

#include "neuroscan/error.hpp"
#include "neuroscan/layers.hpp"
#include "neuroscan/rng.hpp"

namespace neuroscan {

namespace {

Tensor reshaped(Tensor t, std::vector<size_t> dims) {
  if (Tensor::numel(dims) != t.size())
    raise(ErrorCode::shape_error, "reshape: element count mismatch");
  t.shape = std::move(dims);
  return t;
}

Tensor shape_tensor(const std::vector<size_t>& dims) {
  Tensor t({dims.size()});
  for (size_t i = 0; i < dims.size(); ++i) t[i] = static_cast<double>(dims[i]);
  return t;
}

std::vector<size_t> shape_from_tensor(const Tensor& t) {
  std::vector<size_t> dims(t.size());
  for (size_t i = 0; i < t.size(); ++i) dims[i] = static_cast<size_t>(t[i]);
  return dims;
}

void accumulate(Tensor& dst, const Tensor& src) {
  if (!dst.same_shape(src))
    raise(ErrorCode::shape_error, "gradient accumulate: shape mismatch");
  for (size_t i = 0; i < dst.size(); ++i) dst[i] += src[i];
}

}  // namespace

Tensor Tape::pop() {
  if (saved.empty())
    raise(ErrorCode::state_error, "tape: backward without matching forward");
  Tensor t = std::move(saved.back());
  saved.pop_back();
  return t;
}

Grads::Grads(const std::vector<Param>& params) {
  entries_.reserve(params.size());
  for (const Param& p : params) {
    index_.emplace(p.name, entries_.size());
    entries_.emplace_back(p.name, Tensor(p.value->shape));
  }
}

Tensor& Grads::at(const std::string& name) {
  auto it = index_.find(name);
  if (it == index_.end())
    raise(ErrorCode::state_error, "missing gradient for parameter: " + name);
  return entries_[it->second].second;
}

const Tensor& Grads::at(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end())
    raise(ErrorCode::state_error, "missing gradient for parameter: " + name);
  return entries_[it->second].second;
}

void Grads::zero() {
  for (auto& [name, t] : entries_) t.fill(0.0);
}

void Grads::add(const Grads& other) {
  if (other.entries_.size() != entries_.size())
    raise(ErrorCode::state_error, "gradient reduce: layout mismatch");
  for (size_t i = 0; i < entries_.size(); ++i)
    accumulate(entries_[i].second, other.entries_[i].second);
}

// ---------------------------------------------------------------------------
// Modules
// ---------------------------------------------------------------------------

namespace {

class Conv2dLayer final : public Module {
 public:
  Conv2dLayer(std::string name, size_t in_c, size_t out_c, size_t kernel,
              int padding)
      : name_(std::move(name)),
        padding_(padding),
        weight_({out_c, in_c, kernel, kernel}),
        bias_({out_c}) {}

  Tensor forward(const Tensor& x, Tape& tape) const override {
    require_rank(x, 3, "conv layer: input");
    Tensor x4 = reshaped(Tensor(x), {1, x.dim(0), x.dim(1), x.dim(2)});
    Tensor y = conv2d_forward(x4, weight_, bias_, 1, padding_);
    tape.push(std::move(x4));
    const std::vector<size_t> out_shape{y.dim(1), y.dim(2), y.dim(3)};
    return reshaped(std::move(y), out_shape);
  }

  Tensor backward(const Tensor& grad, Tape& tape, Grads& grads) const override {
    Tensor x4 = tape.pop();
    Tensor g4 = reshaped(Tensor(grad), {1, grad.dim(0), grad.dim(1), grad.dim(2)});
    Conv2dGrads g = conv2d_backward(x4, weight_, g4, 1, padding_);
    accumulate(grads.at(name_ + ".weight"), g.weights);
    accumulate(grads.at(name_ + ".bias"), g.bias);
    return reshaped(std::move(g.input),
                    {x4.dim(1), x4.dim(2), x4.dim(3)});
  }

  void collect_params(std::vector<Param>& out) override {
    out.push_back({name_ + ".weight", &weight_});
    out.push_back({name_ + ".bias", &bias_});
  }

 private:
  std::string name_;
  int padding_;
  Tensor weight_, bias_;
};

class ReluLayer final : public Module {
 public:
  Tensor forward(const Tensor& x, Tape& tape) const override {
    Tensor y = relu_forward(x);
    tape.push(Tensor(x));
    return y;
  }
  Tensor backward(const Tensor& grad, Tape& tape, Grads&) const override {
    Tensor x = tape.pop();
    return relu_backward(x, grad);
  }
  void collect_params(std::vector<Param>&) override {}
};

class MaxPoolLayer final : public Module {
 public:
  Tensor forward(const Tensor& x, Tape& tape) const override {
    require_rank(x, 3, "maxpool layer: input");
    Tensor x4 = reshaped(Tensor(x), {1, x.dim(0), x.dim(1), x.dim(2)});
    PoolResult r = maxpool2x2_forward(x4);
    tape.push(shape_tensor(x4.shape));
    Tensor am({r.argmax.size()});
    for (size_t i = 0; i < r.argmax.size(); ++i)
      am[i] = static_cast<double>(r.argmax[i]);
    tape.push(std::move(am));
    const std::vector<size_t> out_shape{r.output.dim(1), r.output.dim(2),
                                        r.output.dim(3)};
    return reshaped(std::move(r.output), out_shape);
  }

  Tensor backward(const Tensor& grad, Tape& tape, Grads&) const override {
    Tensor am = tape.pop();
    std::vector<size_t> in_shape = shape_from_tensor(tape.pop());
    std::vector<size_t> argmax(am.size());
    for (size_t i = 0; i < am.size(); ++i)
      argmax[i] = static_cast<size_t>(am[i]);
    Tensor g4 = reshaped(Tensor(grad), {1, grad.dim(0), grad.dim(1), grad.dim(2)});
    Tensor gin = maxpool2x2_backward(argmax, g4, in_shape);
    return reshaped(std::move(gin), {in_shape[1], in_shape[2], in_shape[3]});
  }

  void collect_params(std::vector<Param>&) override {}
};

class FlattenLayer final : public Module {
 public:
  Tensor forward(const Tensor& x, Tape& tape) const override {
    tape.push(shape_tensor(x.shape));
    return reshaped(Tensor(x), {x.size()});
  }
  Tensor backward(const Tensor& grad, Tape& tape, Grads&) const override {
    return reshaped(Tensor(grad), shape_from_tensor(tape.pop()));
  }
  void collect_params(std::vector<Param>&) override {}
};

class DenseLayer final : public Module {
 public:
  DenseLayer(std::string name, size_t in_dim, size_t out_dim)
      : name_(std::move(name)), weight_({out_dim, in_dim}), bias_({out_dim}) {}

  Tensor forward(const Tensor& x, Tape& tape) const override {
    Tensor y = dense_forward(x, weight_, bias_);
    tape.push(Tensor(x));
    return y;
  }

  Tensor backward(const Tensor& grad, Tape& tape, Grads& grads) const override {
    Tensor x = tape.pop();
    DenseGrads g = dense_backward(x, weight_, grad);
    accumulate(grads.at(name_ + ".weight"), g.weights);
    accumulate(grads.at(name_ + ".bias"), g.bias);
    return std::move(g.input);
  }

  void collect_params(std::vector<Param>& out) override {
    out.push_back({name_ + ".weight", &weight_});
    out.push_back({name_ + ".bias", &bias_});
  }

 private:
  std::string name_;
  Tensor weight_, bias_;
};

class LayerNormLayer final : public Module {
 public:
  LayerNormLayer(std::string name, size_t dim)
      : name_(std::move(name)), gamma_({dim}), beta_({dim}) {}

  Tensor forward(const Tensor& x, Tape& tape) const override {
    Tensor y = layernorm_forward(x, gamma_, beta_);
    tape.push(Tensor(x));
    return y;
  }

  Tensor backward(const Tensor& grad, Tape& tape, Grads& grads) const override {
    Tensor x = tape.pop();
    LayerNormGrads g = layernorm_backward(x, gamma_, beta_, grad);
    accumulate(grads.at(name_ + ".gamma"), g.gamma);
    accumulate(grads.at(name_ + ".beta"), g.beta);
    return std::move(g.input);
  }

  void collect_params(std::vector<Param>& out) override {
    out.push_back({name_ + ".gamma", &gamma_});
    out.push_back({name_ + ".beta", &beta_});
  }

 private:
  std::string name_;
  Tensor gamma_, beta_;
};

class SoftmaxLayer final : public Module {
 public:
  Tensor forward(const Tensor& x, Tape& tape) const override {
    Tensor p = softmax(x);
    tape.push(Tensor(p));
    return p;
  }
  Tensor backward(const Tensor& grad, Tape& tape, Grads&) const override {
    Tensor p = tape.pop();
    return softmax_backward(p, grad);
  }
  void collect_params(std::vector<Param>&) override {}
};

class PatchifyLayer final : public Module {
 public:
  explicit PatchifyLayer(int patch) : patch_(patch) {}

  Tensor forward(const Tensor& x, Tape& tape) const override {
    tape.push(shape_tensor(x.shape));
    return patchify(x, patch_);
  }

  Tensor backward(const Tensor& grad, Tape& tape, Grads&) const override {
    std::vector<size_t> in_shape = shape_from_tensor(tape.pop());
    Tensor gin(in_shape);
    const int w = static_cast<int>(in_shape[2]);
    const int grid = w / patch_;
    size_t row = 0;
    for (int py = 0; py < grid; ++py)
      for (int px = 0; px < grid; ++px, ++row) {
        size_t col = 0;
        for (int dy = 0; dy < patch_; ++dy)
          for (int dx = 0; dx < patch_; ++dx, ++col)
            gin.data[static_cast<size_t>(py * patch_ + dy) * w +
                     (px * patch_ + dx)] = grad.at2(row, col);
      }
    return gin;
  }

  void collect_params(std::vector<Param>&) override {}

 private:
  int patch_;
};

class AddPositionalLayer final : public Module {
 public:
  AddPositionalLayer(std::string name, size_t tokens, size_t embed)
      : name_(std::move(name)), table_({tokens, embed}) {}

  Tensor forward(const Tensor& x, Tape&) const override {
    if (!x.same_shape(table_))
      raise(ErrorCode::shape_error, "positional embedding: token grid mismatch");
    Tensor y = x;
    for (size_t i = 0; i < y.size(); ++i) y[i] += table_[i];
    return y;
  }

  Tensor backward(const Tensor& grad, Tape&, Grads& grads) const override {
    accumulate(grads.at(name_ + ".table"), grad);
    return grad;
  }

  void collect_params(std::vector<Param>& out) override {
    // ".table" initializes to zero: the offsets are bias-like and a
    // fan-in-scaled init only injects start-up noise.
    out.push_back({name_ + ".table", &table_});
  }

 private:
  std::string name_;
  Tensor table_;
};

class MeanPoolLayer final : public Module {
 public:
  Tensor forward(const Tensor& x, Tape& tape) const override {
    require_rank(x, 2, "mean pool: input");
    tape.push(shape_tensor(x.shape));
    const size_t s = x.dim(0), e = x.dim(1);
    Tensor out({e});
    for (size_t i = 0; i < s; ++i)
      for (size_t j = 0; j < e; ++j) out[j] += x.at2(i, j);
    for (size_t j = 0; j < e; ++j) out[j] /= static_cast<double>(s);
    return out;
  }

  Tensor backward(const Tensor& grad, Tape& tape, Grads&) const override {
    std::vector<size_t> in_shape = shape_from_tensor(tape.pop());
    Tensor g(in_shape);
    const double inv = 1.0 / static_cast<double>(in_shape[0]);
    for (size_t i = 0; i < in_shape[0]; ++i)
      for (size_t j = 0; j < in_shape[1]; ++j) g.at2(i, j) = grad[j] * inv;
    return g;
  }

  void collect_params(std::vector<Param>&) override {}
};

// Reused per-thread score/gradient buffers: the S x S matrices are the one
// allocation large enough that churning them per head costs real time.
struct AttentionScratch {
  Tensor scores;
  Tensor dprobs;
};

void ensure_shape(Tensor& t, size_t rows, size_t cols) {
  t.shape = {rows, cols};
  t.data.assign(rows * cols, 0.0);
}

class SelfAttentionLayer final : public Module {
 public:
  SelfAttentionLayer(std::string name, size_t embed, size_t heads)
      : name_(std::move(name)),
        embed_(embed),
        heads_(heads),
        wq_({embed, embed}), bq_({embed}),
        wk_({embed, embed}), bk_({embed}),
        wv_({embed, embed}), bv_({embed}),
        wo_({embed, embed}), bo_({embed}) {
    if (embed % heads != 0)
      raise(ErrorCode::invalid_argument,
            "attention: embed_dim must be divisible by num_heads");
  }

  Tensor forward(const Tensor& x, Tape& tape) const override {
    require_rank(x, 2, "attention: input");
    Tensor q = dense_forward(x, wq_, bq_);
    Tensor k = dense_forward(x, wk_, bk_);
    Tensor v = dense_forward(x, wv_, bv_);

    const size_t s = x.dim(0);
    const size_t hd = embed_ / heads_;
    Tensor mixed({s, embed_});
    Tensor kt({hd, s});
    AttentionScratch& scratch = thread_scratch();
    for (size_t h = 0; h < heads_; ++h) {
      const size_t off = h * hd;
      head_transpose(k, off, hd, kt);
      const Tensor& probs = head_probs(q, kt, off, hd, scratch.scores);
      if (tape.hooks && tape.hooks->on_attention)
        tape.hooks->on_attention(name_, probs);
      // mixed_h = probs * v_h, as rank-1 updates over the head slice.
      for (size_t i = 0; i < s; ++i) {
        const double* ai = probs.data.data() + i * s;
        double* mi = mixed.data.data() + i * embed_ + off;
        for (size_t j = 0; j < s; ++j) {
          const double a = ai[j];
          const double* vj = v.data.data() + j * embed_ + off;
          for (size_t d = 0; d < hd; ++d) mi[d] += a * vj[d];
        }
      }
      // The probabilities go on the tape; each worker finishes a sample's
      // backward before its next forward, so at most one sample's matrices
      // are alive per thread.
      tape.push(Tensor(probs));
    }
    Tensor y = dense_forward(mixed, wo_, bo_);
    tape.push(Tensor(x));
    tape.push(std::move(q));
    tape.push(std::move(k));
    tape.push(std::move(v));
    tape.push(std::move(mixed));
    return y;
  }

  Tensor backward(const Tensor& grad, Tape& tape, Grads& grads) const override {
    Tensor mixed = tape.pop();
    Tensor v = tape.pop();
    Tensor k = tape.pop();
    Tensor q = tape.pop();
    Tensor x = tape.pop();

    DenseGrads go = dense_backward(mixed, wo_, grad);
    accumulate(grads.at(name_ + ".proj.weight"), go.weights);
    accumulate(grads.at(name_ + ".proj.bias"), go.bias);
    const Tensor& gmix = go.input;

    const size_t s = x.dim(0);
    const size_t hd = embed_ / heads_;
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
    Tensor dq(q.shape), dk(k.shape), dv(v.shape);
    Tensor vt({hd, s});
    Tensor dkt({hd, s}), dvt({hd, s});
    AttentionScratch& scratch = thread_scratch();
    // Heads pop in reverse push order; their gradient slices are disjoint,
    // so the iteration order does not matter.
    for (size_t hr = heads_; hr-- > 0;) {
      const size_t h = hr;
      const size_t off = h * hd;
      head_transpose(v, off, hd, vt);
      dkt.fill(0.0);
      dvt.fill(0.0);
      const Tensor probs = tape.pop();
      if (probs.shape != std::vector<size_t>{s, s})
        raise(ErrorCode::state_error, "attention: tape out of sync");

      ensure_shape(scratch.dprobs, s, s);
      Tensor& d_probs = scratch.dprobs;
      for (size_t i = 0; i < s; ++i) {
        const double* gi = gmix.data.data() + i * embed_ + off;
        const double* ai = probs.data.data() + i * s;
        double* dpi = d_probs.data.data() + i * s;
        for (size_t d = 0; d < hd; ++d) {
          const double gid = gi[d];
          const double* vd = vt.data.data() + d * s;
          double* dvd = dvt.data.data() + d * s;
          for (size_t j = 0; j < s; ++j) {
            dpi[j] += gid * vd[j];
            dvd[j] += gid * ai[j];
          }
        }
      }
      softmax_backward_inplace(probs, d_probs);
      const Tensor& d_scores = d_probs;
      for (size_t i = 0; i < s; ++i) {
        const double* dsi = d_scores.data.data() + i * s;
        double* dqi = dq.data.data() + i * embed_ + off;
        for (size_t j = 0; j < s; ++j) {
          const double ds = dsi[j] * inv_sqrt;
          const double* kj = k.data.data() + j * embed_ + off;
          for (size_t d = 0; d < hd; ++d) dqi[d] += ds * kj[d];
        }
        const double* qi = q.data.data() + i * embed_ + off;
        for (size_t d = 0; d < hd; ++d) {
          double* dkd = dkt.data.data() + d * s;
          const double qid = qi[d] * inv_sqrt;
          for (size_t j = 0; j < s; ++j) dkd[j] += dsi[j] * qid;
        }
      }
      // Scatter the transposed head gradients back into S x E layout.
      for (size_t d = 0; d < hd; ++d) {
        const double* dkd = dkt.data.data() + d * s;
        const double* dvd = dvt.data.data() + d * s;
        for (size_t j = 0; j < s; ++j) {
          dk.data[j * embed_ + off + d] = dkd[j];
          dv.data[j * embed_ + off + d] = dvd[j];
        }
      }
    }

    DenseGrads gq = dense_backward(x, wq_, dq);
    DenseGrads gk = dense_backward(x, wk_, dk);
    DenseGrads gv = dense_backward(x, wv_, dv);
    accumulate(grads.at(name_ + ".query.weight"), gq.weights);
    accumulate(grads.at(name_ + ".query.bias"), gq.bias);
    accumulate(grads.at(name_ + ".key.weight"), gk.weights);
    accumulate(grads.at(name_ + ".key.bias"), gk.bias);
    accumulate(grads.at(name_ + ".value.weight"), gv.weights);
    accumulate(grads.at(name_ + ".value.bias"), gv.bias);

    Tensor gx = std::move(gq.input);
    accumulate(gx, gk.input);
    accumulate(gx, gv.input);
    return gx;
  }

  void collect_params(std::vector<Param>& out) override {
    out.push_back({name_ + ".query.weight", &wq_});
    out.push_back({name_ + ".query.bias", &bq_});
    out.push_back({name_ + ".key.weight", &wk_});
    out.push_back({name_ + ".key.bias", &bk_});
    out.push_back({name_ + ".value.weight", &wv_});
    out.push_back({name_ + ".value.bias", &bv_});
    out.push_back({name_ + ".proj.weight", &wo_});
    out.push_back({name_ + ".proj.bias", &bo_});
  }

 private:
  static AttentionScratch& thread_scratch() {
    static thread_local AttentionScratch scratch;
    return scratch;
  }

  // Column slice [off, off+hd) of a S x E tensor, transposed to hd x S so
  // attention inner loops run along contiguous memory.
  void head_transpose(const Tensor& m, size_t off, size_t hd,
                      Tensor& out) const {
    const size_t s = m.dim(0);
    for (size_t j = 0; j < s; ++j) {
      const double* row = m.data.data() + j * embed_ + off;
      for (size_t d = 0; d < hd; ++d) out.data[d * s + j] = row[d];
    }
  }

  const Tensor& head_probs(const Tensor& q, const Tensor& kt, size_t off,
                           size_t hd, Tensor& scores) const {
    const size_t s = q.dim(0);
    const double inv_sqrt = 1.0 / std::sqrt(static_cast<double>(hd));
    ensure_shape(scores, s, s);
    for (size_t i = 0; i < s; ++i) {
      const double* qi = q.data.data() + i * embed_ + off;
      double* si = scores.data.data() + i * s;
      for (size_t d = 0; d < hd; ++d) {
        const double qid = qi[d] * inv_sqrt;
        const double* kd = kt.data.data() + d * s;
        for (size_t j = 0; j < s; ++j) si[j] += qid * kd[j];
      }
    }
    softmax_inplace(scores);
    return scores;
  }

  std::string name_;
  size_t embed_, heads_;
  Tensor wq_, bq_, wk_, bk_, wv_, bv_, wo_, bo_;
};

class TransformerBlock final : public Module {
 public:
  TransformerBlock(const std::string& name, size_t embed, size_t heads,
                   size_t mlp_hidden)
      : ln1_(name + ".ln1", embed),
        attn_(name + ".attn", embed, heads),
        ln2_(name + ".ln2", embed),
        mlp1_(name + ".mlp1", embed, mlp_hidden),
        mlp2_(name + ".mlp2", mlp_hidden, embed) {}

  Tensor forward(const Tensor& x, Tape& tape) const override {
    Tensor n1 = ln1_.forward(x, tape);
    Tensor a = attn_.forward(n1, tape);
    Tensor r1 = x;
    for (size_t i = 0; i < r1.size(); ++i) r1[i] += a[i];
    Tensor n2 = ln2_.forward(r1, tape);
    Tensor h = mlp1_.forward(n2, tape);
    Tensor hr = relu_.forward(h, tape);
    Tensor m = mlp2_.forward(hr, tape);
    for (size_t i = 0; i < m.size(); ++i) m[i] += r1[i];
    return m;
  }

  Tensor backward(const Tensor& grad, Tape& tape, Grads& grads) const override {
    Tensor gm = mlp2_.backward(grad, tape, grads);
    Tensor gh = relu_.backward(gm, tape, grads);
    Tensor gn2 = mlp1_.backward(gh, tape, grads);
    Tensor gr1 = ln2_.backward(gn2, tape, grads);
    accumulate(gr1, grad);  // residual around the MLP
    Tensor gn1 = attn_.backward(gr1, tape, grads);
    Tensor gx = ln1_.backward(gn1, tape, grads);
    accumulate(gx, gr1);  // residual around the attention
    return gx;
  }

  void collect_params(std::vector<Param>& out) override {
    ln1_.collect_params(out);
    attn_.collect_params(out);
    ln2_.collect_params(out);
    mlp1_.collect_params(out);
    mlp2_.collect_params(out);
  }

 private:
  LayerNormLayer ln1_;
  SelfAttentionLayer attn_;
  LayerNormLayer ln2_;
  DenseLayer mlp1_;
  ReluLayer relu_;
  DenseLayer mlp2_;
};

}  // namespace

void init_params(std::vector<Param>& params, uint64_t seed) {
  for (Param& p : params) {
    Tensor& t = *p.value;
    const auto ends_with = [&](const char* suffix) {
      const std::string s(suffix);
      return p.name.size() >= s.size() &&
             p.name.compare(p.name.size() - s.size(), s.size(), s) == 0;
    };
    if (ends_with(".gamma")) {
      t.fill(1.0);
    } else if (ends_with(".bias") || ends_with(".beta") ||
               ends_with(".table")) {
      t.fill(0.0);
    } else {
      size_t fan_in = 1;
      if (t.rank() == 4)
        fan_in = t.dim(1) * t.dim(2) * t.dim(3);
      else if (t.rank() == 2)
        fan_in = t.dim(1);
      const double limit = std::sqrt(6.0 / static_cast<double>(fan_in));
      SplitMix64 rng(derive_seed(seed, "init/" + p.name));
      for (double& v : t.data) v = rng.next_uniform(-limit, limit);
    }
  }
}

std::unique_ptr<Module> make_conv2d(const std::string& name, size_t in_c,
                                    size_t out_c, size_t kernel, int padding) {
  return std::make_unique<Conv2dLayer>(name, in_c, out_c, kernel, padding);
}
std::unique_ptr<Module> make_relu() { return std::make_unique<ReluLayer>(); }
std::unique_ptr<Module> make_maxpool2x2() {
  return std::make_unique<MaxPoolLayer>();
}
std::unique_ptr<Module> make_flatten() {
  return std::make_unique<FlattenLayer>();
}
std::unique_ptr<Module> make_dense(const std::string& name, size_t in_dim,
                                   size_t out_dim) {
  return std::make_unique<DenseLayer>(name, in_dim, out_dim);
}
std::unique_ptr<Module> make_layernorm(const std::string& name, size_t dim) {
  return std::make_unique<LayerNormLayer>(name, dim);
}
std::unique_ptr<Module> make_softmax() {
  return std::make_unique<SoftmaxLayer>();
}
std::unique_ptr<Module> make_patchify(int patch) {
  return std::make_unique<PatchifyLayer>(patch);
}
std::unique_ptr<Module> make_positional(const std::string& name, size_t tokens,
                                        size_t embed) {
  return std::make_unique<AddPositionalLayer>(name, tokens, embed);
}
std::unique_ptr<Module> make_self_attention(const std::string& name,
                                            size_t embed, size_t heads) {
  return std::make_unique<SelfAttentionLayer>(name, embed, heads);
}
std::unique_ptr<Module> make_transformer_block(const std::string& name,
                                               size_t embed, size_t heads,
                                               size_t mlp_hidden) {
  return std::make_unique<TransformerBlock>(name, embed, heads, mlp_hidden);
}
std::unique_ptr<Module> make_mean_pool() {
  return std::make_unique<MeanPoolLayer>();
}

Tensor Model::forward(const Tensor& x, Tape& tape) const {
  Tensor cur = x;
  for (const auto& m : stack) cur = m->forward(cur, tape);
  return cur;
}

Tensor Model::backward(const Tensor& grad, Tape& tape, Grads& grads) const {
  Tensor cur = grad;
  for (auto it = stack.rbegin(); it != stack.rend(); ++it)
    cur = (*it)->backward(cur, tape, grads);
  return cur;
}

Tensor Model::run(const Tensor& x, ForwardHooks* hooks) const {
  Tape tape;
  tape.hooks = hooks;
  return forward(x, tape);
}

Model build_mini_cnn(size_t num_classes, int input_size, uint64_t seed) {
  if (num_classes < 1)
    raise(ErrorCode::invalid_argument, "mini_cnn: num_classes must be >= 1");
  if (input_size < 4)
    raise(ErrorCode::invalid_argument, "mini_cnn: input_size must be >= 4");

  Model m;
  m.arch_id = "mini_cnn(input=" + std::to_string(input_size) +
              ",classes=" + std::to_string(num_classes) + ")";
  m.input_shape = {1, static_cast<size_t>(input_size),
                   static_cast<size_t>(input_size)};
  m.num_classes = num_classes;

  const size_t half = static_cast<size_t>(input_size) / 2;
  const size_t quarter = half / 2;
  const size_t flat = 16 * quarter * quarter;

  m.stack.push_back(std::make_unique<Conv2dLayer>("conv1", 1, 8, 3, 1));
  m.stack.push_back(std::make_unique<ReluLayer>());
  m.stack.push_back(std::make_unique<MaxPoolLayer>());
  m.stack.push_back(std::make_unique<Conv2dLayer>("conv2", 8, 16, 3, 1));
  m.stack.push_back(std::make_unique<ReluLayer>());
  m.stack.push_back(std::make_unique<MaxPoolLayer>());
  m.stack.push_back(std::make_unique<FlattenLayer>());
  m.stack.push_back(std::make_unique<DenseLayer>("fc1", flat, 64));
  m.stack.push_back(std::make_unique<ReluLayer>());
  m.stack.push_back(std::make_unique<DenseLayer>("head", 64, num_classes));
  m.stack.push_back(std::make_unique<SoftmaxLayer>());

  for (auto& layer : m.stack) layer->collect_params(m.params);
  init_params(m.params, seed);
  return m;
}

Model build_toy_vit(const ViTConfig& config, size_t num_classes,
                    uint64_t seed) {
  if (num_classes < 1)
    raise(ErrorCode::invalid_argument, "toy_vit: num_classes must be >= 1");
  if (config.patch_size < 1 || config.image_size % config.patch_size != 0)
    raise(ErrorCode::invalid_argument,
          "toy_vit: image_size must be divisible by patch_size");
  if (config.embed_dim < 1 || config.num_heads < 1 ||
      config.embed_dim % config.num_heads != 0)
    raise(ErrorCode::invalid_argument,
          "toy_vit: embed_dim must be divisible by num_heads");
  if (config.transformer_layers < 1 || config.mlp_hidden < 1)
    raise(ErrorCode::invalid_argument, "toy_vit: bad layer sizes");

  const size_t tokens = static_cast<size_t>(config.num_patches());
  const size_t patch_len =
      static_cast<size_t>(config.patch_size) * config.patch_size;
  const size_t embed = static_cast<size_t>(config.embed_dim);

  Model m;
  m.arch_id = "toy_vit(image=" + std::to_string(config.image_size) +
              ",patch=" + std::to_string(config.patch_size) +
              ",embed=" + std::to_string(config.embed_dim) +
              ",heads=" + std::to_string(config.num_heads) +
              ",layers=" + std::to_string(config.transformer_layers) +
              ",mlp=" + std::to_string(config.mlp_hidden) +
              ",classes=" + std::to_string(num_classes) + ")";
  m.input_shape = {1, static_cast<size_t>(config.image_size),
                   static_cast<size_t>(config.image_size)};
  m.num_classes = num_classes;

  m.stack.push_back(std::make_unique<PatchifyLayer>(config.patch_size));
  m.stack.push_back(std::make_unique<DenseLayer>("patch_embed", patch_len, embed));
  m.stack.push_back(std::make_unique<AddPositionalLayer>("pos_embed", tokens, embed));
  for (int b = 0; b < config.transformer_layers; ++b)
    m.stack.push_back(std::make_unique<TransformerBlock>(
        "block" + std::to_string(b), embed,
        static_cast<size_t>(config.num_heads),
        static_cast<size_t>(config.mlp_hidden)));
  // The residual stream is unnormalized; without this closing norm the head
  // sees depth-scaled activations and the first epochs start far off.
  m.stack.push_back(std::make_unique<LayerNormLayer>("final_norm", embed));
  m.stack.push_back(std::make_unique<MeanPoolLayer>());
  m.stack.push_back(std::make_unique<DenseLayer>("head", embed, num_classes));
  m.stack.push_back(std::make_unique<SoftmaxLayer>());

  for (auto& layer : m.stack) layer->collect_params(m.params);
  init_params(m.params, seed);
  return m;
}

// ---------------------------------------------------------------------------
// Optimizers
// ---------------------------------------------------------------------------

Optimizer::Optimizer(OptimizerKind kind, double learning_rate)
    : kind_(kind), lr_(learning_rate) {
  if (learning_rate <= 0.0)
    raise(ErrorCode::invalid_argument, "optimizer: learning_rate must be > 0");
}

void Optimizer::step(const std::vector<Param>& params, const Grads& grads) {
  constexpr double kBeta1 = 0.9, kBeta2 = 0.999, kEps = 1e-8;
  if (kind_ == OptimizerKind::adam && m_.empty()) {
    for (const Param& p : params) {
      m_.emplace_back(p.value->shape);
      v_.emplace_back(p.value->shape);
    }
  }
  ++t_;
  const double bc1 = 1.0 - std::pow(kBeta1, static_cast<double>(t_));
  const double bc2 = 1.0 - std::pow(kBeta2, static_cast<double>(t_));
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Tensor& theta = *params[pi].value;
    const Tensor& g = grads.at(params[pi].name);
    if (!theta.same_shape(g))
      raise(ErrorCode::state_error, "optimizer: gradient shape mismatch for " +
                                        params[pi].name);
    if (kind_ == OptimizerKind::sgd) {
      for (size_t i = 0; i < theta.size(); ++i) theta[i] -= lr_ * g[i];
    } else {
      Tensor& m = m_[pi];
      Tensor& v = v_[pi];
      for (size_t i = 0; i < theta.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g[i] * g[i];
        const double mhat = m[i] / bc1;
        const double vhat = v[i] / bc2;
        theta[i] -= lr_ * mhat / (std::sqrt(vhat) + kEps);
      }
    }
  }
}

// ---------------------------------------------------------------------------
// Training
// ---------------------------------------------------------------------------

namespace {

Tensor image_tensor(const Image& img) {
  if (img.channels != 1)
    raise(ErrorCode::shape_error, "model input: expects single-channel images");
  Tensor t({1, static_cast<size_t>(img.height), static_cast<size_t>(img.width)});
  t.data = img.data;
  return t;
}

constexpr size_t kGradSlots = 8;
constexpr double kProbFloor = 1e-12;

}  // namespace

size_t argmax_index(const std::vector<double>& values) {
  size_t best = 0;
  for (size_t i = 1; i < values.size(); ++i)
    if (values[i] > values[best]) best = i;
  return best;
}

std::vector<EpochStats> train(Model& model, const LabeledSet& train_set,
                              const TrainConfig& config) {
  if (config.epochs < 1 || config.batch_size < 1)
    raise(ErrorCode::invalid_argument,
          "train: epochs and batch_size must be >= 1");
  if (config.learning_rate <= 0.0)
    raise(ErrorCode::invalid_argument, "train: learning_rate must be > 0");
  if (train_set.samples.empty())
    raise(ErrorCode::invalid_argument, "train: empty training set");

  // Pre-flight before any parameter update.
  for (const Sample& s : train_set.samples) {
    if (s.image.channels != 1 ||
        static_cast<size_t>(s.image.height) != model.input_shape[1] ||
        static_cast<size_t>(s.image.width) != model.input_shape[2])
      raise(ErrorCode::shape_error,
            "train: sample shape does not match model input " +
                shape_string(model.input_shape));
    if (s.label < 0 || static_cast<size_t>(s.label) >= model.num_classes)
      raise(ErrorCode::invalid_argument, "train: label out of range");
  }

  Optimizer opt(config.optimizer, config.learning_rate);
  const size_t n = train_set.samples.size();
  const size_t batch = static_cast<size_t>(config.batch_size);

  std::vector<Grads> slot_grads;
  slot_grads.reserve(kGradSlots);
  for (size_t s = 0; s < kGradSlots; ++s) slot_grads.emplace_back(model.params);
  Grads total(model.params);

  std::vector<EpochStats> history;
  history.reserve(static_cast<size_t>(config.epochs));

  std::vector<size_t> order(n);
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), 0);
    SplitMix64 rng(derive_seed(config.seed, "epoch",
                               static_cast<uint64_t>(epoch)));
    fisher_yates(order, rng);

    double epoch_loss = 0.0;
    size_t epoch_correct = 0;

    for (size_t start = 0; start < n; start += batch) {
      const size_t bsize = std::min(batch, n - start);
      const double inv_b = 1.0 / static_cast<double>(bsize);

      std::vector<double> slot_loss(kGradSlots, 0.0);
      std::vector<size_t> slot_correct(kGradSlots, 0);
      std::vector<std::exception_ptr> slot_error(kGradSlots);

      auto run_slot = [&](size_t slot) {
        try {
          Grads& g = slot_grads[slot];
          for (size_t p = slot; p < bsize; p += kGradSlots) {
            const Sample& sample = train_set.samples[order[start + p]];
            Tape tape;
            Tensor probs = model.forward(image_tensor(sample.image), tape);
            const size_t label = static_cast<size_t>(sample.label);
            slot_loss[slot] -= std::log(std::max(probs[label], kProbFloor));
            size_t pred = 0;
            for (size_t c = 1; c < probs.size(); ++c)
              if (probs[c] > probs[pred]) pred = c;
            if (pred == label) slot_correct[slot]++;

            Tensor dprobs(probs.shape);
            dprobs[label] = (probs[label] < kProbFloor)
                                ? 0.0
                                : -inv_b / std::max(probs[label], kProbFloor);
            model.backward(dprobs, tape, g);
          }
        } catch (...) {
          slot_error[slot] = std::current_exception();
        }
      };

      for (Grads& g : slot_grads) g.zero();
      {
        // Fixed slot partition, reduced in slot order below; the thread
        // count only affects scheduling, never the arithmetic.
        const size_t workers = std::min<size_t>(
            kGradSlots, std::max(1u, std::thread::hardware_concurrency()));
        std::vector<std::thread> threads;
        threads.reserve(workers);
        for (size_t w = 0; w < workers; ++w)
          threads.emplace_back([&, w] {
            for (size_t slot = w; slot < kGradSlots; slot += workers)
              run_slot(slot);
          });
        for (auto& t : threads) t.join();
      }
      for (const auto& err : slot_error)
        if (err) std::rethrow_exception(err);

      total.zero();
      for (const Grads& g : slot_grads) total.add(g);
      opt.step(model.params, total);

      for (size_t s = 0; s < kGradSlots; ++s) {
        epoch_loss += slot_loss[s];
        epoch_correct += slot_correct[s];
      }
    }

    history.push_back({epoch_loss / static_cast<double>(n),
                       static_cast<double>(epoch_correct) /
                           static_cast<double>(n)});
  }
  return history;
}

std::vector<double> predict(const Model& model, const Image& img) {
  if (img.channels != 1 ||
      static_cast<size_t>(img.height) != model.input_shape[1] ||
      static_cast<size_t>(img.width) != model.input_shape[2])
    raise(ErrorCode::shape_error,
          "predict: image shape does not match model input " +
              shape_string(model.input_shape));
  Tensor probs = model.run(image_tensor(img));
  return probs.data;
}

}  // namespace neuroscan
