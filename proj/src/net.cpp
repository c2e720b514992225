#include "cgarom/net.hpp"

#include <cmath>
#include <unordered_map>

#include "cgarom/errors.hpp"

namespace cgarom {

Tensor& ParameterSet::add(const std::string& name, std::size_t rows, std::size_t cols) {
    if (has(name)) throw UsageError("duplicate parameter name: " + name);
    entries_.push_back({name, Tensor(rows, cols)});
    return entries_.back().value;
}

std::size_t ParameterSet::find(const std::string& name) const {
    for (std::size_t i = 0; i < entries_.size(); ++i)
        if (entries_[i].name == name) return i;
    throw UsageError("unknown parameter name: " + name);
}

Tensor& ParameterSet::at(const std::string& name) { return entries_[find(name)].value; }
const Tensor& ParameterSet::at(const std::string& name) const { return entries_[find(name)].value; }

bool ParameterSet::has(const std::string& name) const {
    for (const Entry& e : entries_)
        if (e.name == name) return true;
    return false;
}

std::size_t ParameterSet::total_size() const {
    std::size_t n = 0;
    for (const Entry& e : entries_) n += e.value.size();
    return n;
}

std::vector<double> ParameterSet::flatten() const {
    std::vector<double> flat;
    flat.reserve(total_size());
    for (const Entry& e : entries_)
        flat.insert(flat.end(), e.value.data(), e.value.data() + e.value.size());
    return flat;
}

void ParameterSet::unflatten(const std::vector<double>& flat) {
    if (flat.size() != total_size())
        throw DimensionError("unflatten: expected " + std::to_string(total_size()) +
                             " values, got " + std::to_string(flat.size()));
    std::size_t off = 0;
    for (Entry& e : entries_) {
        for (std::size_t i = 0; i < e.value.size(); ++i) e.value[i] = flat[off + i];
        off += e.value.size();
    }
}

GradientSet::GradientSet(const ParameterSet& params) {
    grads_.reserve(params.count());
    for (std::size_t i = 0; i < params.count(); ++i)
        grads_.emplace_back(params.tensor(i).rows(), params.tensor(i).cols());
}

void GradientSet::zero() {
    for (Tensor& g : grads_) g.fill(0.0);
}

void GradientSet::scale(double factor) {
    for (Tensor& g : grads_)
        for (std::size_t j = 0; j < g.size(); ++j) g[j] *= factor;
}

void GradientSet::add_scaled(const GradientSet& other, double factor) {
    if (other.grads_.size() != grads_.size()) throw DimensionError("add_scaled: gradient set mismatch");
    for (std::size_t i = 0; i < grads_.size(); ++i) {
        Tensor& g = grads_[i];
        const Tensor& o = other.grads_[i];
        for (std::size_t j = 0; j < g.size(); ++j) g[j] += factor * o[j];
    }
}

namespace {

struct LayerShape {
    std::string w_name, b_name;
    std::size_t in, out;
};

std::vector<LayerShape> layer_shapes(const NetSpec& spec, const std::string& prefix) {
    std::vector<LayerShape> layers;
    if (spec.in == 0 || spec.out == 0 || spec.depth == 0)
        throw UsageError("net spec requires in, out and depth > 0: " + prefix);
    if (spec.kind == NetKind::dense) {
        if (spec.depth > 1 && spec.width == 0)
            throw UsageError("dense net with depth > 1 requires width > 0: " + prefix);
        for (std::size_t k = 0; k < spec.depth; ++k) {
            std::size_t in = k == 0 ? spec.in : spec.width;
            std::size_t out = k + 1 == spec.depth ? spec.out : spec.width;
            std::string base = prefix + ".l" + std::to_string(k);
            layers.push_back({base + ".W", base + ".b", in, out});
        }
    } else {
        if (spec.width == 0) throw UsageError("rdense net requires width > 0: " + prefix);
        layers.push_back({prefix + ".in.W", prefix + ".in.b", spec.in, spec.width});
        for (std::size_t k = 0; k < spec.depth; ++k) {
            std::string base = prefix + ".blk" + std::to_string(k);
            layers.push_back({base + ".W", base + ".b", spec.width, spec.width});
        }
        layers.push_back({prefix + ".out.W", prefix + ".out.b", spec.width, spec.out});
    }
    return layers;
}

} // namespace

std::vector<std::string> net_param_names(const NetSpec& spec, const std::string& prefix) {
    std::vector<std::string> names;
    for (const LayerShape& l : layer_shapes(spec, prefix)) {
        names.push_back(l.w_name);
        names.push_back(l.b_name);
    }
    return names;
}

void add_net_params(ParameterSet& params, const NetSpec& spec, const std::string& prefix) {
    for (const LayerShape& l : layer_shapes(spec, prefix)) {
        params.add(l.w_name, l.in, l.out);
        params.add(l.b_name, 1, l.out);
    }
}

void init_net_params(ParameterSet& params, const NetSpec& spec, const std::string& prefix, Rng& rng) {
    for (const LayerShape& l : layer_shapes(spec, prefix)) {
        Tensor& W = params.at(l.w_name);
        double limit = std::sqrt(6.0 / double(l.in + l.out));
        for (std::size_t i = 0; i < W.size(); ++i) W[i] = rng.uniform(-limit, limit);
        params.at(l.b_name).fill(0.0);
    }
}

int net_forward(Tape& tape, const NetSpec& spec, const ParameterSet& params,
                const std::string& prefix, int input) {
    std::vector<LayerShape> layers = layer_shapes(spec, prefix);
    int h = input;
    if (spec.kind == NetKind::dense) {
        for (std::size_t k = 0; k < layers.size(); ++k) {
            h = tape.add_row(tape.matmul(h, tape.param(&params.at(layers[k].w_name))),
                             tape.param(&params.at(layers[k].b_name)));
            if (k + 1 < layers.size()) h = tape.activation(h, spec.activation);
        }
        return h;
    }
    // rdense: layers = [input adapter, blocks..., output adapter]
    h = tape.add_row(tape.matmul(h, tape.param(&params.at(layers.front().w_name))),
                     tape.param(&params.at(layers.front().b_name)));
    for (std::size_t k = 1; k + 1 < layers.size(); ++k) {
        int t = tape.add_row(tape.matmul(h, tape.param(&params.at(layers[k].w_name))),
                             tape.param(&params.at(layers[k].b_name)));
        h = tape.add(h, tape.activation(t, spec.activation));
    }
    return tape.add_row(tape.matmul(h, tape.param(&params.at(layers.back().w_name))),
                        tape.param(&params.at(layers.back().b_name)));
}

Tensor net_eval(const NetSpec& spec, const ParameterSet& params, const std::string& prefix,
                const Tensor& input) {
    Tape tape;
    int out = net_forward(tape, spec, params, prefix, tape.constant_ref(&input));
    return tape.value(out);
}

AdamState::AdamState(const ParameterSet& params)
    : m_(params.total_size(), 0.0), v_(params.total_size(), 0.0) {}

void AdamState::step(ParameterSet& params, GradientSet& grads, const AdamConfig& config) {
    if (params.total_size() != m_.size()) throw DimensionError("adam: parameter count changed");
    ++step_;
    double bc1 = 1.0 - std::pow(config.beta1, double(step_));
    double bc2 = 1.0 - std::pow(config.beta2, double(step_));
    std::size_t off = 0;
    for (std::size_t i = 0; i < params.count(); ++i) {
        Tensor& p = params.tensor(i);
        Tensor& g = grads.tensor(i);
        for (std::size_t j = 0; j < p.size(); ++j) {
            double gj = g[j];
            m_[off] = config.beta1 * m_[off] + (1.0 - config.beta1) * gj;
            v_[off] = config.beta2 * v_[off] + (1.0 - config.beta2) * gj * gj;
            double mhat = m_[off] / bc1;
            double vhat = v_[off] / bc2;
            p[j] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
            ++off;
        }
    }
    grads.zero();
}

void AdamState::restore(std::size_t step, std::vector<double> m, std::vector<double> v) {
    if (m.size() != m_.size() || v.size() != v_.size())
        throw DimensionError("adam restore: moment size mismatch");
    step_ = step;
    m_ = std::move(m);
    v_ = std::move(v);
}

double max_rel_grad_error(ParameterSet& params,
                          const std::function<double()>& loss_value,
                          const std::function<void(GradientSet&)>& loss_grad,
                          double h) {
    GradientSet analytic(params);
    analytic.zero();
    loss_grad(analytic);

    double worst = 0.0;
    for (std::size_t i = 0; i < params.count(); ++i) {
        Tensor& p = params.tensor(i);
        for (std::size_t j = 0; j < p.size(); ++j) {
            double saved = p[j];
            p[j] = saved + h;
            double fp = loss_value();
            p[j] = saved - h;
            double fm = loss_value();
            p[j] = saved;
            double numeric = (fp - fm) / (2.0 * h);
            double rel = std::abs(analytic.tensor(i)[j] - numeric) /
                         std::max(1e-8, std::abs(numeric));
            if (rel > worst) worst = rel;
        }
    }
    return worst;
}

void accumulate_param_grads(const Tape& tape, const ParameterSet& params, GradientSet& grads) {
    // Match leaf nodes back to parameters by storage address.
    std::unordered_map<const Tensor*, std::size_t> index;
    for (std::size_t i = 0; i < params.count(); ++i) index[&params.tensor(i)] = i;
    for (std::size_t id = 0; id < tape.node_count(); ++id) {
        // Leaf params are the only nodes whose value pointer is a parameter.
        const Tensor& g = tape.grad(int(id));
        if (g.size() == 0) continue;
        auto it = index.find(&tape.value(int(id)));
        if (it == index.end()) continue;
        Tensor& acc = grads.tensor(it->second);
        for (std::size_t k = 0; k < g.size(); ++k) acc[k] += g[k];
    }
}

double grad_check(const NetSpec& spec, ParameterSet& params, const std::string& prefix,
                  const Tensor& input, double h) {
    auto loss_value = [&]() {
        Tape tape;
        int out = net_forward(tape, spec, params, prefix, tape.constant_ref(&input));
        return tape.value(tape.sum_all(out)).item();
    };
    auto loss_grad = [&](GradientSet& grads) {
        Tape tape;
        int in_node = tape.constant_ref(&input);
        int out = net_forward(tape, spec, params, prefix, in_node);
        int loss = tape.sum_all(out);
        tape.backward(loss);
        accumulate_param_grads(tape, params, grads);
    };
    return max_rel_grad_error(params, loss_value, loss_grad, h);
}

} // namespace cgarom
