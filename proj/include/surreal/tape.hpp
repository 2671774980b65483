#pragma once

// Reverse-mode differentiation over layer-level primitives.
//
// Each recorded node owns one output slot and a backward closure that reads
// the output adjoint and accumulates into the adjoints of its inputs. Slots
// hold either complex feature maps in chart coordinates (adjoint = two
// planes, d/dlog r and d/dtheta) or real arrays. Parameter leaves copy the
// parameter value in; backward() adds their adjoints to Param::grad.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "surreal/params.hpp"
#include "surreal/tensor.hpp"

namespace surreal {

class Tape;

struct Value {
    int id = -1;
    bool valid() const { return id >= 0; }
};

// Receives the tape and the node's own output value.
using BackwardFn = std::function<void(Tape&, Value)>;

class Tape {
public:
    enum class Kind { complex, real };

    explicit Tape(bool training = true) : training_(training) {}

    bool training() const { return training_; }

    Value constant(ChartBatch value);
    Value constant(RealBatch value);
    /// Leaf holding a copy of p's value, shaped (1, [size,1,1]).
    Value parameter(Param& p);

    Value record(std::string op, ChartBatch value, std::vector<Value> inputs, BackwardFn backward);
    Value record(std::string op, RealBatch value, std::vector<Value> inputs, BackwardFn backward);

    Kind kind(Value v) const;
    const ChartBatch& chart(Value v) const;
    const RealBatch& real(Value v) const;
    bool requires_grad(Value v) const;

    // Adjoint buffers, allocated (zeroed) on first access.
    std::span<double> grad(Value v);
    std::span<double> grad_logr(Value v);
    std::span<double> grad_theta(Value v);
    bool has_grad(Value v) const;

    /// Seeds d(loss)/d(loss) = seed, runs every recorded node in reverse and
    /// accumulates parameter gradients. loss must be a scalar real value.
    void backward(Value loss, double seed = 1.0);

    /// Prefix added to names of nodes recorded from now on.
    void set_scope(std::string scope) { scope_ = std::move(scope); }

    std::size_t node_count() const { return nodes_.size(); }
    const std::string& node_name(std::size_t i) const { return nodes_[i].name; }
    Value node_output(std::size_t i) const { return {nodes_[i].output}; }
    /// Name of the first node whose output contains NaN/inf, or "".
    std::string first_nonfinite() const;

    /// When on, backward() records the wall time of every node's closure.
    void profile(bool on) { profile_ = on; }
    const std::vector<double>& node_seconds() const { return node_seconds_; }

    // Discrete-branch signature, used to detect non-smooth neighbourhoods.
    void record_kinks(bool on) { record_kinks_ = on; }
    bool recording_kinks() const { return record_kinks_; }
    void note_kinks(std::span<const std::uint64_t> hashes);
    void note_kink(std::uint64_t v);
    std::uint64_t signature() const { return signature_; }

private:
    struct Slot {
        Kind kind = Kind::real;
        ChartBatch chart;
        RealBatch real;
        std::vector<double> adj_a;
        std::vector<double> adj_b;
        Param* param = nullptr;
        bool requires_grad = false;
    };
    struct Node {
        std::string name;
        std::vector<int> inputs;
        int output = -1;
        BackwardFn backward;
    };

    Slot& slot(Value v);
    const Slot& slot(Value v) const;
    bool any_requires_grad(const std::vector<Value>& inputs) const;

    bool training_;
    std::vector<Slot> slots_;
    std::vector<Node> nodes_;
    std::string scope_;
    bool record_kinks_ = false;
    bool profile_ = false;
    std::vector<double> node_seconds_;
    std::uint64_t signature_ = 0;
};

}  // namespace surreal
