#include "nll/mlp.hpp"

#include "nll/rng.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace nll {

std::vector<std::size_t> MlpParams::layer_sizes() const {
    std::vector<std::size_t> sizes;
    if (layers.empty()) return sizes;
    sizes.push_back(input_dim());
    for (const auto& l : layers) sizes.push_back(static_cast<std::size_t>(l.weight.rows()));
    return sizes;
}

std::size_t MlpParams::num_params() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
}

std::vector<double> MlpParams::flatten() const {
    std::vector<double> out;
    out.reserve(num_params());
    for (const auto& l : layers) {
        out.insert(out.end(), l.weight.data(), l.weight.data() + l.weight.size());
        out.insert(out.end(), l.bias.data(), l.bias.data() + l.bias.size());
    }
    return out;
}

void MlpParams::unflatten(std::span<const double> values) {
    if (values.size() != num_params()) throw DomainError("unflatten: parameter count mismatch");
    std::size_t off = 0;
    for (auto& l : layers) {
        std::copy_n(values.data() + off, l.weight.size(), l.weight.data());
        off += static_cast<std::size_t>(l.weight.size());
        std::copy_n(values.data() + off, l.bias.size(), l.bias.data());
        off += static_cast<std::size_t>(l.bias.size());
    }
}

MlpParams MlpParams::zeros_like() const {
    MlpParams z;
    z.layers.reserve(layers.size());
    for (const auto& l : layers)
        z.layers.push_back({Eigen::MatrixXd::Zero(l.weight.rows(), l.weight.cols()),
                            Eigen::VectorXd::Zero(l.bias.size())});
    return z;
}

bool MlpParams::operator==(const MlpParams& other) const {
    if (layers.size() != other.layers.size()) return false;
    for (std::size_t i = 0; i < layers.size(); ++i) {
        const auto& a = layers[i];
        const auto& b = other.layers[i];
        if (a.weight.rows() != b.weight.rows() || a.weight.cols() != b.weight.cols() ||
            a.bias.size() != b.bias.size())
            return false;
        if (std::memcmp(a.weight.data(), b.weight.data(), sizeof(double) * a.weight.size()) != 0 ||
            std::memcmp(a.bias.data(), b.bias.data(), sizeof(double) * a.bias.size()) != 0)
            return false;
    }
    return true;
}

MlpParams init_params(std::span<const std::size_t> layer_sizes, std::uint64_t seed) {
    if (layer_sizes.size() < 2) throw DomainError("init_params needs at least 2 layer sizes");
    for (std::size_t s : layer_sizes)
        if (s == 0) throw DomainError("init_params: layer size 0");
    if (layer_sizes.back() < 2) throw DomainError("init_params: need at least 2 output classes");
    Rng rng(derive_seed(seed, {stream::kInit}));
    MlpParams params;
    for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
        const auto fan_in = static_cast<Eigen::Index>(layer_sizes[l]);
        const auto fan_out = static_cast<Eigen::Index>(layer_sizes[l + 1]);
        const double bound = std::sqrt(6.0 / static_cast<double>(fan_in));
        DenseLayer layer{Eigen::MatrixXd(fan_out, fan_in), Eigen::VectorXd::Zero(fan_out)};
        for (Eigen::Index r = 0; r < fan_out; ++r)
            for (Eigen::Index c = 0; c < fan_in; ++c) layer.weight(r, c) = bound * (2.0 * uniform01(rng) - 1.0);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

namespace {

struct ForwardCache {
    std::vector<Eigen::MatrixXd> pre;   // pre-activation per layer
    std::vector<Eigen::MatrixXd> post;  // post[0] = input, post[l + 1] = relu(pre[l])
};

void check_input(const MlpParams& params, Eigen::Index rows) {
    if (params.layers.empty()) throw DomainError("network has no layers");
    if (static_cast<std::size_t>(rows) != params.input_dim())
        throw DomainError("input dimension " + std::to_string(rows) + " does not match network input " +
                          std::to_string(params.input_dim()));
}

ForwardCache forward_cached(const MlpParams& params, const Eigen::MatrixXd& inputs) {
    check_input(params, inputs.rows());
    ForwardCache cache;
    cache.post.push_back(inputs);
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Eigen::MatrixXd z = layer.weight * cache.post.back();
        z.colwise() += layer.bias;
        if (l + 1 < params.layers.size()) cache.post.push_back(z.cwiseMax(0.0));
        cache.pre.push_back(std::move(z));
    }
    return cache;
}

void backprop(const MlpParams& params, const ForwardCache& cache, Eigen::MatrixXd delta, MlpGrads& grads) {
    for (std::size_t l = params.layers.size(); l-- > 0;) {
        grads.layers[l].weight.noalias() += delta * cache.post[l].transpose();
        grads.layers[l].bias.noalias() += delta.rowwise().sum();
        if (l == 0) break;
        Eigen::MatrixXd prev = params.layers[l].weight.transpose() * delta;
        prev.array() *= (cache.pre[l - 1].array() > 0.0).cast<double>();
        delta = std::move(prev);
    }
}

}  // namespace

Eigen::MatrixXd forward_batch(const MlpParams& params, const Eigen::MatrixXd& inputs) {
    check_input(params, inputs.rows());
    Eigen::MatrixXd a = inputs;
    for (std::size_t l = 0; l < params.layers.size(); ++l) {
        const auto& layer = params.layers[l];
        Eigen::MatrixXd z = layer.weight * a;
        z.colwise() += layer.bias;
        if (l + 1 < params.layers.size()) z = z.cwiseMax(0.0);
        a = std::move(z);
    }
    return a;
}

std::vector<double> forward(const MlpParams& params, std::span<const double> x) {
    const Eigen::Map<const Eigen::MatrixXd> col(x.data(), static_cast<Eigen::Index>(x.size()), 1);
    const Eigen::MatrixXd z = forward_batch(params, col);
    return {z.data(), z.data() + z.size()};
}

std::size_t argmax(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

std::pair<ProbDist, std::size_t> predict(const MlpParams& params, std::span<const double> x) {
    const auto logits = forward(params, x);
    return {softmax(logits), argmax(logits)};
}

std::vector<int> predict_classes(const MlpParams& params, const Eigen::MatrixXd& inputs) {
    const Eigen::MatrixXd z = forward_batch(params, inputs);
    std::vector<int> out(static_cast<std::size_t>(z.cols()));
    const auto k = static_cast<std::size_t>(z.rows());
    for (Eigen::Index b = 0; b < z.cols(); ++b)
        out[static_cast<std::size_t>(b)] = static_cast<int>(argmax({z.data() + b * z.rows(), k}));
    return out;
}

BackwardResult backward_batch(const MlpParams& params, std::span<const Eigen::MatrixXd> views,
                              std::span<const int> labels, std::span<const LossSpec> losses,
                              std::span<const std::uint8_t> loss_index) {
    if (views.empty()) throw DomainError("backward needs at least one view");
    if (losses.empty()) throw DomainError("backward needs at least one loss");
    const Eigen::Index batch = views[0].cols();
    if (static_cast<std::size_t>(batch) != labels.size())
        throw DomainError("backward: label count does not match batch size");
    if (!loss_index.empty() && loss_index.size() != labels.size())
        throw DomainError("backward: loss_index length does not match batch size");
    for (const auto& v : views)
        if (v.cols() != batch || v.rows() != views[0].rows()) throw DomainError("backward: view shape mismatch");
    for (const auto& spec : losses) {
        spec.validate();
        if (static_cast<std::size_t>(spec.views()) > views.size())
            throw DomainError(std::string(to_string(spec.kind)) + " needs " + std::to_string(spec.views()) +
                              " views, got " + std::to_string(views.size()));
    }

    std::vector<ForwardCache> caches;
    caches.reserve(views.size());
    for (const auto& v : views) caches.push_back(forward_cached(params, v));

    const auto k = static_cast<Eigen::Index>(params.output_dim());
    std::vector<Eigen::MatrixXd> deltas(views.size(), Eigen::MatrixXd::Zero(k, batch));
    const double inv_batch = 1.0 / static_cast<double>(batch);
    double total = 0.0;
    std::vector<std::span<const double>> logit_cols(views.size());
    std::vector<std::span<double>> grad_cols(views.size());
    for (Eigen::Index b = 0; b < batch; ++b) {
        const std::size_t which = loss_index.empty() ? 0 : loss_index[static_cast<std::size_t>(b)];
        if (which >= losses.size()) throw DomainError("backward: loss_index out of range");
        const LossSpec& spec = losses[which];
        const auto nv = static_cast<std::size_t>(spec.views());
        for (std::size_t v = 0; v < nv; ++v) {
            logit_cols[v] = {caches[v].pre.back().data() + b * k, static_cast<std::size_t>(k)};
            grad_cols[v] = {deltas[v].data() + b * k, static_cast<std::size_t>(k)};
        }
        const int label = labels[static_cast<std::size_t>(b)];
        if (label < 0 || label >= k) throw DomainError("backward: label out of range");
        total += loss_kernel(spec, static_cast<std::size_t>(label), std::span(logit_cols).first(nv),
                             std::span(grad_cols).first(nv));
    }
    if (!std::isfinite(total)) throw NumericError("batch loss is not finite");

    BackwardResult result{total * inv_batch, params.zeros_like()};
    for (std::size_t v = 0; v < views.size(); ++v) {
        deltas[v] *= inv_batch;
        backprop(params, caches[v], std::move(deltas[v]), result.grads);
    }
    return result;
}

BackwardResult backward(const MlpParams& params, std::span<const std::vector<double>> views, int label,
                        const LossSpec& loss) {
    if (views.size() != static_cast<std::size_t>(loss.views()))
        throw DomainError(std::string(to_string(loss.kind)) + " expects " + std::to_string(loss.views()) +
                          " views, got " + std::to_string(views.size()));
    std::vector<Eigen::MatrixXd> cols;
    for (const auto& v : views)
        cols.push_back(Eigen::Map<const Eigen::MatrixXd>(v.data(), static_cast<Eigen::Index>(v.size()), 1));
    const int labels[] = {label};
    const LossSpec specs[] = {loss};
    return backward_batch(params, cols, labels, specs);
}

namespace {

constexpr std::array<char, 5> kMagic = {'N', 'L', 'L', 'B', '1'};

template <typename T>
T to_little(T v) {
    if constexpr (std::endian::native == std::endian::big) {
        auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
        std::reverse(bytes.begin(), bytes.end());
        return std::bit_cast<T>(bytes);
    }
    return v;
}

void put_u64(std::ostream& out, std::uint64_t v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void put_f64(std::ostream& out, double v) {
    v = to_little(v);
    out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("checkpoint truncated");
    return to_little(v);
}

double get_f64(std::istream& in) {
    double v = 0;
    if (!in.read(reinterpret_cast<char*>(&v), sizeof v)) throw std::runtime_error("checkpoint truncated");
    return to_little(v);
}

}  // namespace

void save_checkpoint(std::ostream& out, const MlpParams& params) {
    out.write(kMagic.data(), kMagic.size());
    put_u64(out, params.layers.size());
    for (const auto& l : params.layers) {
        put_u64(out, static_cast<std::uint64_t>(l.weight.rows()));
        put_u64(out, static_cast<std::uint64_t>(l.weight.cols()));
        for (Eigen::Index r = 0; r < l.weight.rows(); ++r)
            for (Eigen::Index c = 0; c < l.weight.cols(); ++c) put_f64(out, l.weight(r, c));
        put_u64(out, static_cast<std::uint64_t>(l.bias.size()));
        for (Eigen::Index i = 0; i < l.bias.size(); ++i) put_f64(out, l.bias(i));
    }
}

void save_checkpoint(const std::string& path, const MlpParams& params) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
    save_checkpoint(out, params);
    if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

MlpParams load_checkpoint(std::istream& in) {
    std::array<char, 5> magic{};
    if (!in.read(magic.data(), magic.size()) || magic != kMagic)
        throw std::runtime_error("not an NLLB1 checkpoint");
    const auto n_layers = get_u64(in);
    if (n_layers == 0 || n_layers > 1024) throw std::runtime_error("checkpoint: implausible layer count");
    MlpParams params;
    for (std::uint64_t i = 0; i < n_layers; ++i) {
        const auto rows = static_cast<Eigen::Index>(get_u64(in));
        const auto cols = static_cast<Eigen::Index>(get_u64(in));
        if (rows <= 0 || cols <= 0 || rows > (1 << 20) || cols > (1 << 20))
            throw std::runtime_error("checkpoint: implausible layer shape");
        if (!params.layers.empty() && params.layers.back().weight.rows() != cols)
            throw std::runtime_error("checkpoint: incompatible consecutive layers");
        DenseLayer layer{Eigen::MatrixXd(rows, cols), Eigen::VectorXd(rows)};
        for (Eigen::Index r = 0; r < rows; ++r)
            for (Eigen::Index c = 0; c < cols; ++c) layer.weight(r, c) = get_f64(in);
        if (static_cast<Eigen::Index>(get_u64(in)) != rows) throw std::runtime_error("checkpoint: bias length mismatch");
        for (Eigen::Index r = 0; r < rows; ++r) layer.bias(r) = get_f64(in);
        params.layers.push_back(std::move(layer));
    }
    return params;
}

MlpParams load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return load_checkpoint(in);
}

}  // namespace nll
