#include "emorec/net.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

namespace emorec::net {

namespace {

double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

void require(bool ok, const std::string& what) {
    if (!ok) throw DimensionMismatchError(what);
}

std::string dims(std::size_t a, std::size_t b) { return std::to_string(a) + " vs " + std::to_string(b); }

void glorot(Tensor& t, std::size_t fan_in, std::size_t fan_out, Rng& rng) {
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (auto& v : t.values) v = rng.uniform(-limit, limit);
}

void init_dense(DenseParams& p, Rng& rng) {
    glorot(p.weight, p.in(), p.out(), rng);
    p.bias.fill(0.0);
}

}  // namespace

Tensor::Tensor(std::vector<std::size_t> dims) : shape(std::move(dims)) {
    const std::size_t n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
    values.assign(n, 0.0);
}

bool Tensor::all_finite() const {
    return std::all_of(values.begin(), values.end(), [](double v) { return std::isfinite(v); });
}

void Tensor::fill(double v) { std::fill(values.begin(), values.end(), v); }

DenseParams DenseParams::zeros(std::size_t in, std::size_t out) { return {Tensor({out, in}), Tensor({out})}; }

LstmParams LstmParams::zeros(std::size_t input, std::size_t hidden) {
    return {Tensor({4 * hidden, input}), Tensor({4 * hidden, hidden}), Tensor({4 * hidden})};
}

void ModelConfig::validate() const {
    if (lstm_hidden == 0 || fusion_width == 0) throw ValidationError("layer widths must be positive");
    if ((include_personality && personality_width == 0) || (include_stimulus && stimulus_width == 0) ||
        (include_environment && environment_width == 0))
        throw ValidationError("branch widths must be positive");
    if (!(dropout_rate >= 0.0 && dropout_rate < 1.0))
        throw ValidationError("dropout_rate must lie in [0, 1), got " + std::to_string(dropout_rate));
}

std::size_t ModelConfig::fused_width() const {
    return lstm_hidden + (include_personality ? personality_width : 0) + (include_stimulus ? stimulus_width : 0) +
           (include_environment ? environment_width : 0);
}

ModelParams ModelParams::zeros(const ModelConfig& cfg) {
    cfg.validate();
    ModelParams p;
    p.lstm = LstmParams::zeros(features::kChannels, cfg.lstm_hidden);
    if (cfg.include_personality) p.personality = DenseParams::zeros(features::kTraitCount, cfg.personality_width);
    if (cfg.include_stimulus) p.stimulus = DenseParams::zeros(kEmotionCount, cfg.stimulus_width);
    if (cfg.include_environment) p.environment = DenseParams::zeros(features::kEnvCount, cfg.environment_width);
    p.fusion = DenseParams::zeros(cfg.fused_width(), cfg.fusion_width);
    p.output = DenseParams::zeros(cfg.fusion_width, kClassCount);
    return p;
}

std::size_t ModelParams::count() const {
    std::size_t n = 0;
    for_each([&](std::string_view, const Tensor& t) { n += t.size(); });
    return n;
}

Model init_model(const ModelConfig& cfg, std::uint64_t seed) {
    Model m{cfg, ModelParams::zeros(cfg)};
    auto rng = Rng::substream(seed, "init");
    auto& lstm = m.params.lstm;
    const std::size_t h = cfg.lstm_hidden;
    glorot(lstm.w_input, lstm.input(), h, rng);
    glorot(lstm.w_hidden, h, h, rng);
    lstm.bias.fill(0.0);
    for (std::size_t k = 0; k < h; ++k) lstm.bias.values[h + k] = 1.0;
    if (m.params.personality) init_dense(*m.params.personality, rng);
    if (m.params.stimulus) init_dense(*m.params.stimulus, rng);
    if (m.params.environment) init_dense(*m.params.environment, rng);
    init_dense(m.params.fusion, rng);
    init_dense(m.params.output, rng);
    return m;
}

std::size_t branch_parameter_count(const ModelConfig& cfg, std::size_t branch_width, std::size_t input_width) {
    return input_width * branch_width + branch_width + branch_width * cfg.fusion_width;
}

// --- layers ----------------------------------------------------------------

LstmCache lstm_forward(const LstmParams& p, std::span<const double> seq, std::size_t steps) {
    const std::size_t in = p.input(), hid = p.hidden();
    require(p.w_input.rows() == 4 * hid && p.w_hidden.rows() == 4 * hid && p.bias.size() == 4 * hid,
            "LSTM parameter shapes are inconsistent");
    require(seq.size() == steps * in, "LSTM input has " + std::to_string(seq.size()) + " values, expected " +
                                          std::to_string(steps * in));

    LstmCache c;
    c.steps = steps;
    c.input = in;
    c.hidden = hid;
    c.x.assign(seq.begin(), seq.end());
    c.gates.assign(steps * 4 * hid, 0.0);
    c.c.assign((steps + 1) * hid, 0.0);
    c.h.assign((steps + 1) * hid, 0.0);
    c.tanh_c.assign(steps * hid, 0.0);

    std::vector<double> z(4 * hid);
    for (std::size_t t = 0; t < steps; ++t) {
        const double* x = c.x.data() + t * in;
        const double* h_prev = c.h.data() + t * hid;
        for (std::size_t r = 0; r < 4 * hid; ++r) {
            double s = p.bias.values[r];
            const double* wi = p.w_input.values.data() + r * in;
            for (std::size_t k = 0; k < in; ++k) s += wi[k] * x[k];
            const double* wh = p.w_hidden.values.data() + r * hid;
            for (std::size_t k = 0; k < hid; ++k) s += wh[k] * h_prev[k];
            z[r] = s;
        }
        double* g = c.gates.data() + t * 4 * hid;
        for (std::size_t k = 0; k < hid; ++k) {
            g[k] = sigmoid(z[k]);
            g[hid + k] = sigmoid(z[hid + k]);
            g[2 * hid + k] = std::tanh(z[2 * hid + k]);
            g[3 * hid + k] = sigmoid(z[3 * hid + k]);
        }
        const double* c_prev = c.c.data() + t * hid;
        double* c_now = c.c.data() + (t + 1) * hid;
        double* h_now = c.h.data() + (t + 1) * hid;
        double* tc = c.tanh_c.data() + t * hid;
        for (std::size_t k = 0; k < hid; ++k) {
            c_now[k] = g[hid + k] * c_prev[k] + g[k] * g[2 * hid + k];
            tc[k] = std::tanh(c_now[k]);
            h_now[k] = g[3 * hid + k] * tc[k];
        }
    }
    return c;
}

void lstm_backward(const LstmParams& p, const LstmCache& cache, std::span<const double> d_final, LstmParams& grad,
                   std::span<double> d_input) {
    const std::size_t in = cache.input, hid = cache.hidden, steps = cache.steps;
    require(d_final.size() == hid, "LSTM output gradient size " + dims(d_final.size(), hid));
    require(d_input.empty() || d_input.size() == steps * in, "LSTM input gradient buffer has the wrong size");
    require(grad.w_input.size() == p.w_input.size() && grad.w_hidden.size() == p.w_hidden.size(),
            "LSTM gradient shapes are inconsistent");

    std::vector<double> dh(d_final.begin(), d_final.end());
    std::vector<double> dc(hid, 0.0), dz(4 * hid), dh_prev(hid);
    for (std::size_t t = steps; t-- > 0;) {
        const double* g = cache.gates.data() + t * 4 * hid;
        const double* tc = cache.tanh_c.data() + t * hid;
        const double* c_prev = cache.c.data() + t * hid;
        for (std::size_t k = 0; k < hid; ++k) {
            const double ig = g[k], fg = g[hid + k], cg = g[2 * hid + k], og = g[3 * hid + k];
            const double d_o = dh[k] * tc[k];
            const double d_c = dc[k] + dh[k] * og * (1.0 - tc[k] * tc[k]);
            dz[k] = d_c * cg * ig * (1.0 - ig);
            dz[hid + k] = d_c * c_prev[k] * fg * (1.0 - fg);
            dz[2 * hid + k] = d_c * ig * (1.0 - cg * cg);
            dz[3 * hid + k] = d_o * og * (1.0 - og);
            dc[k] = d_c * fg;
        }
        const double* x = cache.x.data() + t * in;
        const double* h_prev = cache.h.data() + t * hid;
        std::fill(dh_prev.begin(), dh_prev.end(), 0.0);
        double* dx = d_input.empty() ? nullptr : d_input.data() + t * in;
        if (dx) std::fill(dx, dx + in, 0.0);
        for (std::size_t r = 0; r < 4 * hid; ++r) {
            const double d = dz[r];
            grad.bias.values[r] += d;
            if (d == 0.0) continue;
            double* gwi = grad.w_input.values.data() + r * in;
            const double* wi = p.w_input.values.data() + r * in;
            for (std::size_t k = 0; k < in; ++k) gwi[k] += d * x[k];
            if (dx)
                for (std::size_t k = 0; k < in; ++k) dx[k] += d * wi[k];
            double* gwh = grad.w_hidden.values.data() + r * hid;
            const double* wh = p.w_hidden.values.data() + r * hid;
            for (std::size_t k = 0; k < hid; ++k) {
                gwh[k] += d * h_prev[k];
                dh_prev[k] += d * wh[k];
            }
        }
        dh.swap(dh_prev);
    }
}

std::vector<double> dense_forward(const DenseParams& p, std::span<const double> x, Activation act) {
    require(x.size() == p.in(), "dense input size " + dims(x.size(), p.in()));
    require(p.bias.size() == p.out(), "dense bias size " + dims(p.bias.size(), p.out()));
    std::vector<double> y(p.out());
    for (std::size_t j = 0; j < p.out(); ++j) {
        double s = p.bias.values[j];
        const double* w = p.weight.values.data() + j * p.in();
        for (std::size_t i = 0; i < x.size(); ++i) s += w[i] * x[i];
        y[j] = act == Activation::Relu ? std::max(0.0, s) : s;
    }
    return y;
}

void dense_backward(const DenseParams& p, std::span<const double> x, std::span<const double> y,
                    std::span<const double> dy, Activation act, DenseParams& grad, std::span<double> dx) {
    require(x.size() == p.in() && y.size() == p.out() && dy.size() == p.out(), "dense backward shapes mismatch");
    require(dx.empty() || dx.size() == p.in(), "dense input gradient size " + dims(dx.size(), p.in()));
    if (!dx.empty()) std::fill(dx.begin(), dx.end(), 0.0);
    for (std::size_t j = 0; j < p.out(); ++j) {
        const double d = act == Activation::Relu && y[j] <= 0.0 ? 0.0 : dy[j];
        grad.bias.values[j] += d;
        if (d == 0.0) continue;
        double* gw = grad.weight.values.data() + j * p.in();
        const double* w = p.weight.values.data() + j * p.in();
        for (std::size_t i = 0; i < p.in(); ++i) {
            gw[i] += d * x[i];
            if (!dx.empty()) dx[i] += d * w[i];
        }
    }
}

std::array<double, kClassCount> softmax(std::span<const double> logits) {
    require(logits.size() == kClassCount, "softmax expects 3 logits, got " + std::to_string(logits.size()));
    const double m = std::max({logits[0], logits[1], logits[2]});
    std::array<double, kClassCount> p{};
    double sum = 0.0;
    for (std::size_t c = 0; c < kClassCount; ++c) sum += p[c] = std::exp(logits[c] - m);
    for (auto& v : p) v /= sum;
    return p;
}

// --- fused model -----------------------------------------------------------

ForwardPass fused_forward(const Model& model, const features::FeatureRecord& record, const ForwardOptions& opts) {
    const auto& cfg = model.config;
    const auto& P = model.params;
    const bool train = opts.mode == Mode::Train;
    const bool noisy = train && opts.noise_sigma > 0.0;
    const bool drop = train && cfg.dropout_rate > 0.0;
    if ((noisy || drop) && opts.rng == nullptr)
        throw ValidationError("train-mode forward pass needs a random stream");
    require(P.personality.has_value() == cfg.include_personality && P.stimulus.has_value() == cfg.include_stimulus &&
                P.environment.has_value() == cfg.include_environment,
            "model parameters do not match the configured branches");
    require(P.lstm.input() == features::kChannels,
            "LSTM expects " + std::to_string(P.lstm.input()) + " channels, record has " +
                std::to_string(features::kChannels));

    ForwardPass f;
    f.lstm = lstm_forward(P.lstm, record.sequence.values, features::kSteps);
    const auto h = f.lstm.final_hidden();
    f.fused.assign(h.begin(), h.end());

    if (P.personality) {
        auto traits = noisy ? dataset::perturb_traits(record.personality, opts.noise_sigma, *opts.rng)
                            : record.personality;
        f.personality_in.assign(traits.traits.begin(), traits.traits.end());
        f.personality_out = dense_forward(*P.personality, f.personality_in, Activation::Relu);
        f.fused.insert(f.fused.end(), f.personality_out.begin(), f.personality_out.end());
    }
    if (P.stimulus) {
        f.stimulus_in.assign(record.stimulus.begin(), record.stimulus.end());
        f.stimulus_out = dense_forward(*P.stimulus, f.stimulus_in, Activation::Relu);
        f.fused.insert(f.fused.end(), f.stimulus_out.begin(), f.stimulus_out.end());
    }
    if (P.environment) {
        f.environment_in.assign(record.environment.begin(), record.environment.end());
        if (noisy)
            for (auto& v : f.environment_in) v += opts.rng->normal(0.0, opts.noise_sigma);
        f.environment_out = dense_forward(*P.environment, f.environment_in, Activation::Relu);
        f.fused.insert(f.fused.end(), f.environment_out.begin(), f.environment_out.end());
    }

    f.fusion_out = dense_forward(P.fusion, f.fused, Activation::Relu);
    f.dropped = f.fusion_out;
    if (drop) {
        const double keep = 1.0 - cfg.dropout_rate;
        f.dropout_mask.resize(f.fusion_out.size());
        for (std::size_t k = 0; k < f.dropout_mask.size(); ++k) {
            f.dropout_mask[k] = opts.rng->uniform() < keep ? 1.0 / keep : 0.0;
            f.dropped[k] *= f.dropout_mask[k];
        }
    }
    f.logits = dense_forward(P.output, f.dropped, Activation::Identity);
    f.probs = softmax(f.logits);
    for (double p : f.probs)
        if (!std::isfinite(p)) throw NumericError("non-finite class probability in forward pass");
    f.valid = true;
    return f;
}

double loss_weighted_ce(std::span<const double> probs, ClassBin label, const dataset::ClassWeights& weights) {
    const double p = probs[index_of(label)];
    return -weights[label] * std::log(std::max(p, 1e-12));
}

void backward(const Model& model, const ForwardPass& pass, ClassBin label, const dataset::ClassWeights& weights,
              ModelParams& grad) {
    if (!pass.valid) throw ValidationError("backward called without a forward cache");
    const auto& P = model.params;
    const std::size_t y = index_of(label);

    std::array<double, kClassCount> d_logits{};
    // Below the floor the loss is constant in the logits.
    if (pass.probs[y] >= 1e-12) {
        const double w = weights[label];
        for (std::size_t c = 0; c < kClassCount; ++c) d_logits[c] = w * (pass.probs[c] - (c == y ? 1.0 : 0.0));
    }

    std::vector<double> d_dropped(pass.dropped.size());
    dense_backward(P.output, pass.dropped, pass.logits, d_logits, Activation::Identity, grad.output, d_dropped);
    if (!pass.dropout_mask.empty())
        for (std::size_t k = 0; k < d_dropped.size(); ++k) d_dropped[k] *= pass.dropout_mask[k];

    std::vector<double> d_fused(pass.fused.size());
    dense_backward(P.fusion, pass.fused, pass.fusion_out, d_dropped, Activation::Relu, grad.fusion, d_fused);

    std::size_t off = 0;
    const std::span<const double> df(d_fused);
    const std::size_t hid = P.lstm.hidden();
    lstm_backward(P.lstm, pass.lstm, df.subspan(off, hid), grad.lstm);
    off += hid;
    auto branch = [&](const std::optional<DenseParams>& p, std::optional<DenseParams>& g,
                      const std::vector<double>& in, const std::vector<double>& out) {
        if (!p) return;
        dense_backward(*p, in, out, df.subspan(off, out.size()), Activation::Relu, *g);
        off += out.size();
    };
    branch(P.personality, grad.personality, pass.personality_in, pass.personality_out);
    branch(P.stimulus, grad.stimulus, pass.stimulus_in, pass.stimulus_out);
    branch(P.environment, grad.environment, pass.environment_in, pass.environment_out);
}

ClassBin argmax_class(std::span<const double> probs) {
    std::size_t best = 0;
    for (std::size_t c = 1; c < probs.size() && c < kClassCount; ++c)
        if (probs[c] > probs[best]) best = c;
    return bin_from_index(best);
}

}  // namespace emorec::net
