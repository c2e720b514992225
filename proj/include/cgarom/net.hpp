#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <vector>

#include "cgarom/rng.hpp"
#include "cgarom/tape.hpp"
#include "cgarom/tensor.hpp"

namespace cgarom {

enum class NetKind { dense, rdense };

// dense: `depth` affine layers, hidden width `width`, activation after every
// layer except the last. depth = 1 is a single affine map in -> out.
// rdense: affine input adapter to `width`, `depth` residual blocks
// h <- h + act(W h + b), affine output adapter to `out`.
struct NetSpec {
    NetKind kind = NetKind::dense;
    std::size_t in = 0;
    std::size_t out = 0;
    std::size_t width = 0;
    std::size_t depth = 1;
    Act activation = Act::tanh;
};

// Named parameter tensors in fixed insertion order. The order defines the
// layout of checkpoints, optimizer state, and gradient accumulators.
class ParameterSet {
public:
    Tensor& add(const std::string& name, std::size_t rows, std::size_t cols);
    Tensor& at(const std::string& name);
    const Tensor& at(const std::string& name) const;
    bool has(const std::string& name) const;

    std::size_t count() const { return entries_.size(); }
    const std::string& name(std::size_t i) const { return entries_[i].name; }
    Tensor& tensor(std::size_t i) { return entries_[i].value; }
    const Tensor& tensor(std::size_t i) const { return entries_[i].value; }

    // Total number of scalar parameters.
    std::size_t total_size() const;

    // Concatenation of all tensors in declared order.
    std::vector<double> flatten() const;
    // Inverse of flatten(); throws DimensionError on size mismatch.
    void unflatten(const std::vector<double>& flat);

private:
    struct Entry {
        std::string name;
        Tensor value;
    };
    std::vector<Entry> entries_;
    std::size_t find(const std::string& name) const;
};

// Gradient accumulators parallel to a ParameterSet.
class GradientSet {
public:
    explicit GradientSet(const ParameterSet& params);
    Tensor& tensor(std::size_t i) { return grads_[i]; }
    const Tensor& tensor(std::size_t i) const { return grads_[i]; }
    std::size_t count() const { return grads_.size(); }
    void zero();
    void add_scaled(const GradientSet& other, double factor);
    void scale(double factor);

private:
    std::vector<Tensor> grads_;
};

// Parameter names used by net_forward for a net stored under `prefix`.
std::vector<std::string> net_param_names(const NetSpec& spec, const std::string& prefix);

// Allocates the parameter tensors for `spec` under `prefix`. Weight tensors
// are (fan_in x fan_out) so forward is X * W + b on row-major batches.
void add_net_params(ParameterSet& params, const NetSpec& spec, const std::string& prefix);

// Glorot-uniform weights, zero biases, in declared parameter order.
void init_net_params(ParameterSet& params, const NetSpec& spec, const std::string& prefix, Rng& rng);

// Builds the forward pass on the tape; `input` is a node of width spec.in.
// Returns the output node (batch x spec.out). Final layer is always affine.
int net_forward(Tape& tape, const NetSpec& spec, const ParameterSet& params,
                const std::string& prefix, int input);

// Plain forward evaluation without a tape.
Tensor net_eval(const NetSpec& spec, const ParameterSet& params, const std::string& prefix,
                const Tensor& input);

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Adam with bias correction. Moments are stored flat in parameter order.
class AdamState {
public:
    explicit AdamState(const ParameterSet& params);

    // One update step; zeroes `grads` afterwards.
    void step(ParameterSet& params, GradientSet& grads, const AdamConfig& config);

    std::size_t step_count() const { return step_; }
    const std::vector<double>& m() const { return m_; }
    const std::vector<double>& v() const { return v_; }
    void restore(std::size_t step, std::vector<double> m, std::vector<double> v);

private:
    std::size_t step_ = 0;
    std::vector<double> m_, v_;
};

// Adds the tape's parameter-leaf gradients into `grads`, matching leaves to
// `params` slots by storage address. Call after tape.backward().
void accumulate_param_grads(const Tape& tape, const ParameterSet& params, GradientSet& grads);

// Max relative error between analytic gradients and central finite
// differences with step h over every parameter entry:
//   max |analytic - numeric| / max(1e-8, |numeric|).
// `loss_value` evaluates the scalar loss at the current parameters;
// `loss_grad` writes analytic gradients into its argument (zeroed first).
double max_rel_grad_error(ParameterSet& params,
                          const std::function<double()>& loss_value,
                          const std::function<void(GradientSet&)>& loss_grad,
                          double h = 1e-5);

// Gradient check of sum(net(input)) w.r.t. the net parameters.
double grad_check(const NetSpec& spec, ParameterSet& params, const std::string& prefix,
                  const Tensor& input, double h = 1e-5);

} // namespace cgarom
