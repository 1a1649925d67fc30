#include "ppgad/nn.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "ppgad/detectors.hpp"
#include "ppgad/error.hpp"
#include "ppgad/rng.hpp"

namespace ppgad::nn {

// ---------------------------------------------------------------------------
// Architecture

void ArchitectureSpec::validate() const {
  if (kernel == 0 || channels == 0 || latent_dim == 0 || n_classes < 2) {
    throw ConfigError("architecture: kernel, channels, latent_dim must be >= 1, classes >= 2");
  }
  if (input_len < kernel) {
    throw ConfigError("architecture: input length " + std::to_string(input_len) +
                      " shorter than kernel " + std::to_string(kernel));
  }
  std::size_t len = head_len();
  for (std::size_t j = 0; j < blocks; ++j) {
    if (len < 2) {
      throw ConfigError("architecture: block " + std::to_string(j) + " input length " +
                        std::to_string(len) + " cannot be pooled");
    }
    len /= 2;
  }
}

std::vector<std::size_t> ArchitectureSpec::block_lengths() const {
  std::vector<std::size_t> out{head_len()};
  for (std::size_t j = 0; j < blocks; ++j) out.push_back(out.back() / 2);
  return out;
}

std::size_t ArchitectureSpec::flat_len() const { return channels * block_lengths().back(); }

std::size_t ArchitectureSpec::parameter_count() const {
  const std::size_t head = channels * kernel + channels;
  const std::size_t conv = channels * channels * kernel + channels;
  const std::size_t latent = latent_dim * flat_len() + latent_dim;
  const std::size_t out = n_classes * latent_dim + n_classes;
  return head + 2 * blocks * conv + latent + out;
}

ModelParams::ModelParams(const ArchitectureSpec& spec) : spec_(spec) {
  spec_.validate();
  const std::size_t c = spec.channels;
  const std::size_t k = spec.kernel;
  std::size_t offset = 0;
  auto add = [&](std::string name, std::vector<std::size_t> shape) {
    std::size_t n = 1;
    for (std::size_t s : shape) n *= s;
    tensors_.push_back({std::move(name), std::move(shape), offset, n});
    offset += n;
  };
  add("head.kernel", {c, 1, k});
  add("head.bias", {c});
  for (std::size_t j = 0; j < spec.blocks; ++j) {
    for (int conv = 1; conv <= 2; ++conv) {
      const std::string base = "block" + std::to_string(j) + ".conv" + std::to_string(conv);
      add(base + ".kernel", {c, c, k});
      add(base + ".bias", {c});
    }
  }
  add("latent.kernel", {spec.latent_dim, spec.flat_len()});
  add("latent.bias", {spec.latent_dim});
  add("output.kernel", {spec.n_classes, spec.latent_dim});
  add("output.bias", {spec.n_classes});
  values_.assign(offset, 0.0);
}

std::span<double> ModelParams::tensor(std::size_t i) {
  const auto& t = tensors_.at(i);
  return std::span<double>(values_).subspan(t.offset, t.size);
}

std::span<const double> ModelParams::tensor(std::size_t i) const {
  const auto& t = tensors_.at(i);
  return std::span<const double>(values_).subspan(t.offset, t.size);
}

std::span<const double> ModelParams::tensor(const std::string& name) const {
  for (std::size_t i = 0; i < tensors_.size(); ++i) {
    if (tensors_[i].name == name) return tensor(i);
  }
  throw ContractViolation("no tensor named '" + name + "'");
}

ModelParams init_params(const ArchitectureSpec& spec, std::uint64_t seed) {
  ModelParams p(spec);
  Rng rng(seed);
  for (std::size_t i = 0; i < p.tensors().size(); ++i) {
    const TensorInfo& t = p.tensors()[i];
    if (t.shape.size() == 1) continue;  // biases stay zero
    double fan_in = 0.0;
    double fan_out = 0.0;
    if (t.shape.size() == 3) {  // [out][in][kernel]
      fan_in = static_cast<double>(t.shape[1] * t.shape[2]);
      fan_out = static_cast<double>(t.shape[0] * t.shape[2]);
    } else {  // [out][in]
      fan_in = static_cast<double>(t.shape[1]);
      fan_out = static_cast<double>(t.shape[0]);
    }
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    for (double& w : p.tensor(i)) w = rng.uniform(-limit, limit);
  }
  return p;
}

std::vector<LayerShape> layer_shapes(const ArchitectureSpec& spec) {
  spec.validate();
  std::vector<LayerShape> out;
  const auto lens = spec.block_lengths();
  out.push_back({"head", lens[0], spec.channels});
  for (std::size_t j = 0; j < spec.blocks; ++j) {
    const std::string b = "block" + std::to_string(j);
    out.push_back({b + ".conv1", lens[j], spec.channels});
    out.push_back({b + ".conv2", lens[j], spec.channels});
    out.push_back({b + ".pool", lens[j + 1], spec.channels});
  }
  out.push_back({"flatten", spec.flat_len(), 1});
  out.push_back({"latent", spec.latent_dim, 1});
  out.push_back({"output", spec.n_classes, 1});
  return out;
}

// ---------------------------------------------------------------------------
// Kernels. Activations are stored channel-major: x[c * len + t].

namespace {

struct ConvGeometry {
  std::size_t in_ch;
  std::size_t in_len;
  std::size_t out_ch;
  std::size_t out_len;
  std::size_t kernel;
  std::ptrdiff_t pad_left;

  // Output positions t for which input index t + k - pad_left is in range.
  std::pair<std::ptrdiff_t, std::ptrdiff_t> range(std::size_t k) const {
    const auto kk = static_cast<std::ptrdiff_t>(k);
    const std::ptrdiff_t lo = std::max<std::ptrdiff_t>(0, pad_left - kk);
    const std::ptrdiff_t hi = std::min<std::ptrdiff_t>(
        static_cast<std::ptrdiff_t>(out_len), static_cast<std::ptrdiff_t>(in_len) + pad_left - kk);
    return {lo, hi};
  }
};

ConvGeometry valid_conv(std::size_t in_ch, std::size_t in_len, std::size_t out_ch,
                        std::size_t kernel) {
  return {in_ch, in_len, out_ch, in_len - kernel + 1, kernel, 0};
}

// Same padding with the extra pad (even kernels) on the right.
ConvGeometry same_conv(std::size_t ch, std::size_t len, std::size_t kernel) {
  return {ch, len, ch, len, kernel, static_cast<std::ptrdiff_t>((kernel - 1) / 2)};
}

void conv_forward(const ConvGeometry& g, const double* in, const double* w, const double* b,
                  double* out) {
  for (std::size_t o = 0; o < g.out_ch; ++o) {
    double* y = out + o * g.out_len;
    std::fill(y, y + g.out_len, b[o]);
    for (std::size_t i = 0; i < g.in_ch; ++i) {
      const double* x = in + i * g.in_len;
      const double* wk = w + (o * g.in_ch + i) * g.kernel;
      for (std::size_t k = 0; k < g.kernel; ++k) {
        const auto [lo, hi] = g.range(k);
        const double wv = wk[k];
        const double* src = x + (lo + static_cast<std::ptrdiff_t>(k) - g.pad_left);
        double* dst = y + lo;
        const std::ptrdiff_t n = hi - lo;
        for (std::ptrdiff_t t = 0; t < n; ++t) dst[t] += wv * src[t];
      }
    }
  }
}

// Accumulates kernel/bias gradients; writes the input gradient when
// `grad_in` is non-null (it must be zeroed by the caller).
void conv_backward(const ConvGeometry& g, const double* in, const double* w,
                   const double* grad_out, double* grad_w, double* grad_b, double* grad_in) {
  for (std::size_t o = 0; o < g.out_ch; ++o) {
    const double* go = grad_out + o * g.out_len;
    double sb = 0.0;
    for (std::size_t t = 0; t < g.out_len; ++t) sb += go[t];
    grad_b[o] += sb;
    for (std::size_t i = 0; i < g.in_ch; ++i) {
      const double* x = in + i * g.in_len;
      const double* wk = w + (o * g.in_ch + i) * g.kernel;
      double* gwk = grad_w + (o * g.in_ch + i) * g.kernel;
      double* gx = grad_in != nullptr ? grad_in + i * g.in_len : nullptr;
      for (std::size_t k = 0; k < g.kernel; ++k) {
        const auto [lo, hi] = g.range(k);
        const std::ptrdiff_t n = hi - lo;
        const std::ptrdiff_t shift = lo + static_cast<std::ptrdiff_t>(k) - g.pad_left;
        const double* src = x + shift;
        const double* gsrc = go + lo;
        double acc = 0.0;
        for (std::ptrdiff_t t = 0; t < n; ++t) acc += gsrc[t] * src[t];
        gwk[k] += acc;
        if (gx != nullptr) {
          const double wv = wk[k];
          double* dst = gx + shift;
          for (std::ptrdiff_t t = 0; t < n; ++t) dst[t] += wv * gsrc[t];
        }
      }
    }
  }
}

inline double elu(double z) { return z > 0.0 ? z : std::expm1(z); }

struct BlockCache {
  std::size_t len = 0;
  std::vector<double> z1, a1, z2, a2, pooled;
  std::vector<std::size_t> argmax;
};

struct Workspace {
  std::vector<double> head;
  std::vector<BlockCache> blocks;
  std::vector<double> latent_pre, latent, logits, probs;
  // Backward scratch.
  std::vector<double> g_a, g_b, g_c;
};

struct Offsets {
  std::size_t head_w, head_b;
  std::vector<std::size_t> conv_w, conv_b;  // 2 per block
  std::size_t latent_w, latent_b, out_w, out_b;
};

Offsets offsets_of(const ModelParams& p) {
  const auto& t = p.tensors();
  Offsets o{};
  std::size_t i = 0;
  o.head_w = t[i++].offset;
  o.head_b = t[i++].offset;
  for (std::size_t j = 0; j < 2 * p.spec().blocks; ++j) {
    o.conv_w.push_back(t[i++].offset);
    o.conv_b.push_back(t[i++].offset);
  }
  o.latent_w = t[i++].offset;
  o.latent_b = t[i++].offset;
  o.out_w = t[i++].offset;
  o.out_b = t[i++].offset;
  return o;
}

void check_input(const ArchitectureSpec& spec, std::size_t len) {
  if (len != spec.input_len) {
    throw ContractViolation("network expects windows of length " + std::to_string(spec.input_len) +
                            ", got " + std::to_string(len));
  }
}

// Runs the encoder and, when `classify` is set, the classifier head.
void run_forward(const ModelParams& params, const Offsets& off, std::span<const double> x,
                 Workspace& ws, bool classify) {
  const ArchitectureSpec& s = params.spec();
  check_input(s, x.size());
  const double* w = params.values().data();
  const std::size_t c = s.channels;

  const auto head_g = valid_conv(1, s.input_len, c, s.kernel);
  ws.head.resize(c * head_g.out_len);
  conv_forward(head_g, x.data(), w + off.head_w, w + off.head_b, ws.head.data());

  ws.blocks.resize(s.blocks);
  const double* block_in = ws.head.data();
  std::size_t len = head_g.out_len;
  for (std::size_t j = 0; j < s.blocks; ++j) {
    BlockCache& bc = ws.blocks[j];
    bc.len = len;
    const std::size_t n = c * len;
    const auto g = same_conv(c, len, s.kernel);
    bc.z1.resize(n);
    bc.a1.resize(n);
    bc.z2.resize(n);
    bc.a2.resize(n);
    conv_forward(g, block_in, w + off.conv_w[2 * j], w + off.conv_b[2 * j], bc.z1.data());
    for (std::size_t i = 0; i < n; ++i) bc.a1[i] = elu(bc.z1[i]);
    conv_forward(g, bc.a1.data(), w + off.conv_w[2 * j + 1], w + off.conv_b[2 * j + 1],
                 bc.z2.data());
    for (std::size_t i = 0; i < n; ++i) bc.a2[i] = elu(bc.z2[i]);

    const std::size_t plen = len / 2;
    bc.pooled.resize(c * plen);
    bc.argmax.resize(c * plen);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double* src = bc.a2.data() + ch * len;
      for (std::size_t t = 0; t < plen; ++t) {
        // Ties go to the first element.
        const std::size_t pick = src[2 * t + 1] > src[2 * t] ? 2 * t + 1 : 2 * t;
        bc.pooled[ch * plen + t] = src[pick];
        bc.argmax[ch * plen + t] = ch * len + pick;
      }
    }
    block_in = bc.pooled.data();
    len = plen;
  }

  const std::size_t flat = c * len;
  const std::size_t d = s.latent_dim;
  ws.latent_pre.resize(d);
  ws.latent.resize(d);
  for (std::size_t r = 0; r < d; ++r) {
    const double* row = w + off.latent_w + r * flat;
    double acc = w[off.latent_b + r];
    for (std::size_t f = 0; f < flat; ++f) acc += row[f] * block_in[f];
    ws.latent_pre[r] = acc;
    ws.latent[r] = acc > 0.0 ? acc : 0.0;
  }
  if (!classify) return;

  const std::size_t nc = s.n_classes;
  ws.logits.resize(nc);
  ws.probs.resize(nc);
  for (std::size_t r = 0; r < nc; ++r) {
    const double* row = w + off.out_w + r * d;
    double acc = w[off.out_b + r];
    for (std::size_t q = 0; q < d; ++q) acc += row[q] * ws.latent[q];
    ws.logits[r] = acc;
  }
  const double mx = *std::max_element(ws.logits.begin(), ws.logits.end());
  double total = 0.0;
  for (std::size_t r = 0; r < nc; ++r) {
    ws.probs[r] = std::exp(ws.logits[r] - mx);
    total += ws.probs[r];
  }
  for (double& p : ws.probs) p /= total;
}

constexpr double kProbFloor = 1e-12;

// -log p(label), evaluated via log-softmax, with the probability floor.
double sample_loss(const Workspace& ws, int label) {
  const double mx = *std::max_element(ws.logits.begin(), ws.logits.end());
  double total = 0.0;
  for (double z : ws.logits) total += std::exp(z - mx);
  const double nll = -(ws.logits[static_cast<std::size_t>(label)] - mx - std::log(total));
  return std::min(nll, -std::log(kProbFloor));
}

// Adds scale * d(loss)/d(params) for one forward-cached sample.
void run_backward(const ModelParams& params, const Offsets& off, std::span<const double> x,
                  Workspace& ws, int label, double scale, double* grad) {
  const ArchitectureSpec& s = params.spec();
  const double* w = params.values().data();
  const std::size_t c = s.channels;
  const std::size_t d = s.latent_dim;
  const std::size_t nc = s.n_classes;

  const auto lbl = static_cast<std::size_t>(label);
  if (ws.probs[lbl] < kProbFloor) return;  // floored loss is flat here

  // Softmax + cross-entropy.
  std::vector<double> g_logits(nc);
  for (std::size_t r = 0; r < nc; ++r) {
    g_logits[r] = scale * (ws.probs[r] - (r == lbl ? 1.0 : 0.0));
  }

  // Output dense.
  std::vector<double> g_latent(d, 0.0);
  for (std::size_t r = 0; r < nc; ++r) {
    const double gr = g_logits[r];
    grad[off.out_b + r] += gr;
    double* gw = grad + off.out_w + r * d;
    const double* row = w + off.out_w + r * d;
    for (std::size_t q = 0; q < d; ++q) {
      gw[q] += gr * ws.latent[q];
      g_latent[q] += row[q] * gr;
    }
  }

  // ReLU + latent dense.
  const std::size_t last_len = s.blocks > 0 ? ws.blocks.back().len / 2 : s.head_len();
  const std::size_t flat = c * last_len;
  const double* flat_in = s.blocks > 0 ? ws.blocks.back().pooled.data() : ws.head.data();
  std::vector<double>& g_flat = ws.g_a;
  g_flat.assign(flat, 0.0);
  for (std::size_t r = 0; r < d; ++r) {
    if (!(ws.latent_pre[r] > 0.0)) continue;
    const double gr = g_latent[r];
    if (gr == 0.0) continue;
    grad[off.latent_b + r] += gr;
    double* gw = grad + off.latent_w + r * flat;
    const double* row = w + off.latent_w + r * flat;
    for (std::size_t f = 0; f < flat; ++f) {
      gw[f] += gr * flat_in[f];
      g_flat[f] += row[f] * gr;
    }
  }

  // Blocks, last to first. `g_out` holds the gradient w.r.t. the block's
  // pooled output on entry and w.r.t. the block's input on exit.
  std::vector<double>* g_out = &ws.g_a;
  std::vector<double>* g_mid = &ws.g_b;
  std::vector<double>* g_in = &ws.g_c;
  for (std::size_t jj = s.blocks; jj-- > 0;) {
    BlockCache& bc = ws.blocks[jj];
    const std::size_t n = c * bc.len;
    const auto g = same_conv(c, bc.len, s.kernel);
    const double* block_in = jj == 0 ? ws.head.data() : ws.blocks[jj - 1].pooled.data();

    // Un-pool into the gradient of a2, then through ELU to z2.
    g_mid->assign(n, 0.0);
    for (std::size_t i = 0; i < bc.argmax.size(); ++i) (*g_mid)[bc.argmax[i]] = (*g_out)[i];
    for (std::size_t i = 0; i < n; ++i) {
      if (!(bc.z2[i] > 0.0)) (*g_mid)[i] *= bc.a2[i] + 1.0;
    }
    g_in->assign(n, 0.0);
    conv_backward(g, bc.a1.data(), w + off.conv_w[2 * jj + 1], g_mid->data(),
                  grad + off.conv_w[2 * jj + 1], grad + off.conv_b[2 * jj + 1], g_in->data());
    // Through ELU to z1.
    for (std::size_t i = 0; i < n; ++i) {
      if (!(bc.z1[i] > 0.0)) (*g_in)[i] *= bc.a1[i] + 1.0;
    }
    g_out->assign(n, 0.0);
    conv_backward(g, block_in, w + off.conv_w[2 * jj], g_in->data(), grad + off.conv_w[2 * jj],
                  grad + off.conv_b[2 * jj], g_out->data());
  }

  // Head conv has no activation and needs no input gradient.
  const auto head_g = valid_conv(1, s.input_len, c, s.kernel);
  conv_backward(head_g, x.data(), w + off.head_w, g_out->data(), grad + off.head_w,
                grad + off.head_b, nullptr);
}

}  // namespace

// ---------------------------------------------------------------------------
// Public forward / backward

std::vector<LayerShape> traced_shapes(const ModelParams& params, std::span<const double> input) {
  Workspace ws;
  run_forward(params, offsets_of(params), input, ws, true);
  const std::size_t c = params.spec().channels;
  std::vector<LayerShape> out;
  out.push_back({"head", ws.head.size() / c, c});
  for (std::size_t j = 0; j < ws.blocks.size(); ++j) {
    const std::string b = "block" + std::to_string(j);
    out.push_back({b + ".conv1", ws.blocks[j].a1.size() / c, c});
    out.push_back({b + ".conv2", ws.blocks[j].a2.size() / c, c});
    out.push_back({b + ".pool", ws.blocks[j].pooled.size() / c, c});
  }
  const std::size_t flat =
      ws.blocks.empty() ? ws.head.size() : ws.blocks.back().pooled.size();
  out.push_back({"flatten", flat, 1});
  out.push_back({"latent", ws.latent.size(), 1});
  out.push_back({"output", ws.logits.size(), 1});
  return out;
}

ForwardOutput forward(const ModelParams& params, const std::vector<Window>& batch) {
  const Offsets off = offsets_of(params);
  Workspace ws;
  ForwardOutput out;
  for (const Window& w : batch) {
    run_forward(params, off, w.values, ws, true);
    out.latents.push_back(ws.latent);
    out.logits.push_back(ws.logits);
    out.probs.push_back(ws.probs);
  }
  return out;
}

double cross_entropy_loss(const std::vector<std::vector<double>>& probs,
                          const std::vector<augment::TransformClass>& labels) {
  if (probs.size() != labels.size()) {
    throw ContractViolation("cross_entropy_loss: " + std::to_string(probs.size()) +
                            " predictions for " + std::to_string(labels.size()) + " labels");
  }
  if (probs.empty()) return 0.0;
  double total = 0.0;
  for (std::size_t i = 0; i < probs.size(); ++i) {
    const auto idx = static_cast<std::size_t>(augment::class_index(labels[i]));
    if (idx >= probs[i].size()) throw ContractViolation("cross_entropy_loss: label out of range");
    total += -std::log(std::max(probs[i][idx], kProbFloor));
  }
  return total / static_cast<double>(probs.size());
}

LossAndGradient loss_and_gradient(const ModelParams& params,
                                  std::span<const std::span<const double>> inputs,
                                  std::span<const int> class_indices,
                                  std::vector<std::vector<double>>* probs_out) {
  if (inputs.size() != class_indices.size()) {
    throw ContractViolation("loss_and_gradient: inputs and labels differ in length");
  }
  LossAndGradient result{0.0, ModelParams(params.spec())};
  if (inputs.empty()) return result;
  const Offsets off = offsets_of(params);
  Workspace ws;
  const double scale = 1.0 / static_cast<double>(inputs.size());
  double* grad = result.gradient.values().data();
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const int label = class_indices[i];
    if (label < 0 || static_cast<std::size_t>(label) >= params.spec().n_classes) {
      throw ContractViolation("loss_and_gradient: class index out of range");
    }
    run_forward(params, off, inputs[i], ws, true);
    result.loss += sample_loss(ws, label);
    if (probs_out != nullptr) probs_out->push_back(ws.probs);
    run_backward(params, off, inputs[i], ws, label, scale, grad);
  }
  result.loss *= scale;
  return result;
}

LossAndGradient backward(const ModelParams& params, const std::vector<Window>& batch,
                         const std::vector<augment::TransformClass>& labels) {
  if (batch.size() != labels.size()) {
    throw ContractViolation("backward: batch and labels differ in length");
  }
  std::vector<std::span<const double>> inputs;
  std::vector<int> idx;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    inputs.emplace_back(batch[i].values);
    idx.push_back(augment::class_index(labels[i]));
  }
  return loss_and_gradient(params, inputs, idx);
}

// ---------------------------------------------------------------------------
// Optimizer

double adam_learning_rate(const AdamHyper& hyper, std::uint64_t step) {
  return hyper.learning_rate / (1.0 + hyper.decay * static_cast<double>(step));
}

void adam_step(ModelParams& params, const ModelParams& grads, AdamState& state,
               const AdamHyper& hyper) {
  if (!(grads.spec() == params.spec())) throw ContractViolation("adam_step: shape mismatch");
  const std::size_t n = params.size();
  if (state.m.empty()) {
    state.m.assign(n, 0.0);
    state.v.assign(n, 0.0);
  }
  if (state.m.size() != n || state.v.size() != n) {
    throw ContractViolation("adam_step: optimizer state does not match parameters");
  }
  const double lr = adam_learning_rate(hyper, state.step);
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(hyper.beta1, t);
  const double c2 = 1.0 - std::pow(hyper.beta2, t);
  auto p = params.values();
  auto g = grads.values();
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = hyper.beta1 * state.m[i] + (1.0 - hyper.beta1) * g[i];
    state.v[i] = hyper.beta2 * state.v[i] + (1.0 - hyper.beta2) * g[i] * g[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    p[i] -= lr * m_hat / (std::sqrt(v_hat) + hyper.epsilon);
  }
}

// ---------------------------------------------------------------------------
// Training

void TrainConfig::validate() const {
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
    throw ConfigError("training: learning rate must be positive");
  }
  if (!(decay >= 0.0) || !std::isfinite(decay)) throw ConfigError("training: decay must be >= 0");
  if (batch_size == 0) throw ConfigError("training: batch size must be >= 1");
  if (repeats == 0) throw ConfigError("training: repeats must be >= 1");
}

namespace {

double macro_ovr_auc(const std::vector<std::vector<double>>& probs, const std::vector<int>& labels,
                     std::size_t n_classes) {
  double total = 0.0;
  std::size_t counted = 0;
  for (std::size_t c = 0; c < n_classes; ++c) {
    std::vector<double> pos;
    std::vector<double> neg;
    for (std::size_t i = 0; i < probs.size(); ++i) {
      (static_cast<std::size_t>(labels[i]) == c ? pos : neg).push_back(probs[i][c]);
    }
    if (pos.empty() || neg.empty()) continue;
    total += detectors::auc(neg, pos);
    ++counted;
  }
  return counted == 0 ? 0.0 : total / static_cast<double>(counted);
}

void check_dataset(const std::vector<augment::LabeledWindow>& dataset,
                   const ArchitectureSpec& spec) {
  if (dataset.empty()) throw ContractViolation("pretext dataset is empty");
  std::vector<std::size_t> counts(spec.n_classes, 0);
  for (const auto& lw : dataset) {
    check_input(spec, lw.window.values.size());
    const auto idx = static_cast<std::size_t>(augment::class_index(lw.label));
    if (idx >= spec.n_classes) throw ContractViolation("pretext label out of range");
    ++counts[idx];
  }
  if (std::adjacent_find(counts.begin(), counts.end(), std::not_equal_to<>()) != counts.end()) {
    throw ContractViolation("pretext dataset is not class-balanced");
  }
}

}  // namespace

TrainResult train_pretext(const std::vector<augment::LabeledWindow>& dataset,
                          const ArchitectureSpec& spec, const TrainConfig& config,
                          const EpochCallback& on_epoch) {
  config.validate();
  spec.validate();
  check_dataset(dataset, spec);

  TrainResult result{init_params(spec, Rng::derive(config.seed, "init")), {}};
  Rng shuffler(Rng::derive(config.seed, "shuffle"));
  AdamState state;
  const AdamHyper hyper{config.learning_rate, config.decay};

  std::vector<std::size_t> order(dataset.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::span<const double>> inputs;
  std::vector<int> labels;
  std::vector<std::vector<double>> epoch_probs;
  std::vector<int> epoch_labels;

  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffler.shuffle(std::span<std::size_t>(order));
    epoch_probs.clear();
    epoch_labels.clear();
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const std::size_t end = std::min(order.size(), start + config.batch_size);
      inputs.clear();
      labels.clear();
      for (std::size_t i = start; i < end; ++i) {
        const auto& lw = dataset[order[i]];
        inputs.emplace_back(lw.window.values);
        labels.push_back(augment::class_index(lw.label));
      }
      auto lg = loss_and_gradient(result.params, inputs, labels, &epoch_probs);
      loss_sum += lg.loss * static_cast<double>(end - start);
      epoch_labels.insert(epoch_labels.end(), labels.begin(), labels.end());
      adam_step(result.params, lg.gradient, state, hyper);
    }
    EpochStats stats{epoch + 1, loss_sum / static_cast<double>(order.size()),
                     macro_ovr_auc(epoch_probs, epoch_labels, spec.n_classes)};
    result.trace.push_back(stats);
    if (on_epoch) on_epoch(stats);
  }
  return result;
}

double pretext_auc(const ModelParams& params,
                   const std::vector<augment::LabeledWindow>& dataset) {
  if (dataset.empty()) throw EvaluationError("pretext_auc: empty dataset");
  const Offsets off = offsets_of(params);
  Workspace ws;
  std::vector<std::vector<double>> probs;
  std::vector<int> labels;
  for (const auto& lw : dataset) {
    run_forward(params, off, lw.window.values, ws, true);
    probs.push_back(ws.probs);
    labels.push_back(augment::class_index(lw.label));
  }
  return macro_ovr_auc(probs, labels, params.spec().n_classes);
}

std::vector<double> encode(const ModelParams& params, std::span<const double> input) {
  Workspace ws;
  run_forward(params, offsets_of(params), input, ws, false);
  return ws.latent;
}

std::vector<std::vector<double>> encode(const ModelParams& params,
                                        const std::vector<Window>& windows) {
  const Offsets off = offsets_of(params);
  Workspace ws;
  std::vector<std::vector<double>> out;
  out.reserve(windows.size());
  for (const Window& w : windows) {
    run_forward(params, off, w.values, ws, false);
    out.push_back(ws.latent);
  }
  return out;
}

}  // namespace ppgad::nn
