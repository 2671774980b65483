#include "surreal/tape.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>

#include "surreal/kernels.hpp"

namespace surreal {

Tape::Slot& Tape::slot(Value v) {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= slots_.size()) throw std::out_of_range("invalid tape value");
    return slots_[v.id];
}

const Tape::Slot& Tape::slot(Value v) const {
    if (v.id < 0 || static_cast<std::size_t>(v.id) >= slots_.size()) throw std::out_of_range("invalid tape value");
    return slots_[v.id];
}

bool Tape::any_requires_grad(const std::vector<Value>& inputs) const {
    for (auto v : inputs)
        if (slot(v).requires_grad) return true;
    return false;
}

Value Tape::constant(ChartBatch value) {
    Slot s;
    s.kind = Kind::complex;
    s.chart = std::move(value);
    slots_.push_back(std::move(s));
    return {static_cast<int>(slots_.size()) - 1};
}

Value Tape::constant(RealBatch value) {
    Slot s;
    s.kind = Kind::real;
    s.real = std::move(value);
    slots_.push_back(std::move(s));
    return {static_cast<int>(slots_.size()) - 1};
}

Value Tape::parameter(Param& p) {
    Slot s;
    s.kind = Kind::real;
    s.real = RealBatch(1, {p.size(), 1, 1});
    s.real.data = p.value;
    s.param = &p;
    s.requires_grad = p.learns();
    slots_.push_back(std::move(s));
    return {static_cast<int>(slots_.size()) - 1};
}

Value Tape::record(std::string op, ChartBatch value, std::vector<Value> inputs, BackwardFn backward) {
    Slot s;
    s.kind = Kind::complex;
    s.chart = std::move(value);
    s.requires_grad = any_requires_grad(inputs);
    slots_.push_back(std::move(s));
    const int id = static_cast<int>(slots_.size()) - 1;
    Node n{scope_.empty() ? op : scope_ + "/" + op, {}, id, std::move(backward)};
    for (auto v : inputs) n.inputs.push_back(v.id);
    nodes_.push_back(std::move(n));
    return {id};
}

Value Tape::record(std::string op, RealBatch value, std::vector<Value> inputs, BackwardFn backward) {
    Slot s;
    s.kind = Kind::real;
    s.real = std::move(value);
    s.requires_grad = any_requires_grad(inputs);
    slots_.push_back(std::move(s));
    const int id = static_cast<int>(slots_.size()) - 1;
    Node n{scope_.empty() ? op : scope_ + "/" + op, {}, id, std::move(backward)};
    for (auto v : inputs) n.inputs.push_back(v.id);
    nodes_.push_back(std::move(n));
    return {id};
}

Tape::Kind Tape::kind(Value v) const { return slot(v).kind; }

const ChartBatch& Tape::chart(Value v) const {
    const auto& s = slot(v);
    if (s.kind != Kind::complex) throw std::invalid_argument("expected a complex value on the tape");
    return s.chart;
}

const RealBatch& Tape::real(Value v) const {
    const auto& s = slot(v);
    if (s.kind != Kind::real) throw std::invalid_argument("expected a real value on the tape");
    return s.real;
}

bool Tape::requires_grad(Value v) const { return slot(v).requires_grad; }

std::span<double> Tape::grad(Value v) {
    auto& s = slot(v);
    if (s.kind != Kind::real) throw std::invalid_argument("grad() on a complex value");
    if (s.adj_a.size() != s.real.size()) s.adj_a.assign(s.real.size(), 0.0);
    return s.adj_a;
}

std::span<double> Tape::grad_logr(Value v) {
    auto& s = slot(v);
    if (s.kind != Kind::complex) throw std::invalid_argument("grad_logr() on a real value");
    if (s.adj_a.size() != s.chart.size()) s.adj_a.assign(s.chart.size(), 0.0);
    return s.adj_a;
}

std::span<double> Tape::grad_theta(Value v) {
    auto& s = slot(v);
    if (s.kind != Kind::complex) throw std::invalid_argument("grad_theta() on a real value");
    if (s.adj_b.size() != s.chart.size()) s.adj_b.assign(s.chart.size(), 0.0);
    return s.adj_b;
}

bool Tape::has_grad(Value v) const { return !slot(v).adj_a.empty() || !slot(v).adj_b.empty(); }

void Tape::backward(Value loss, double seed) {
    if (nodes_.empty()) throw std::logic_error("backward called before forward");
    const auto& ls = slot(loss);
    if (ls.kind != Kind::real || ls.real.size() != 1) throw std::invalid_argument("backward: loss must be a real scalar");
    grad(loss)[0] += seed;
    if (profile_) node_seconds_.assign(nodes_.size(), 0.0);

    for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) {
        const Slot& out = slots_[it->output];
        if (!out.requires_grad) continue;
        if (out.adj_a.empty() && out.adj_b.empty()) continue;
        // Materialise both planes of complex adjoints before the closure runs.
        if (out.kind == Kind::complex) {
            grad_logr({it->output});
            grad_theta({it->output});
        }
        if (!profile_) {
            it->backward(*this, Value{it->output});
            continue;
        }
        const auto start = std::chrono::steady_clock::now();
        it->backward(*this, Value{it->output});
        node_seconds_[static_cast<std::size_t>(nodes_.rend() - it) - 1] =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    }

    for (auto& s : slots_) {
        if (s.param == nullptr || !s.param->learns() || s.adj_a.empty()) continue;
        for (std::size_t k = 0; k < s.adj_a.size(); ++k) s.param->grad[k] += s.adj_a[k];
    }
}

std::string Tape::first_nonfinite() const {
    for (const auto& n : nodes_) {
        const auto& s = slots_[n.output];
        auto bad = [](const std::vector<double>& xs) {
            for (double x : xs)
                if (!std::isfinite(x)) return true;
            return false;
        };
        if (s.kind == Kind::real ? bad(s.real.data) : (bad(s.chart.logr) || bad(s.chart.theta))) return n.name;
    }
    return {};
}

void Tape::note_kinks(std::span<const std::uint64_t> hashes) {
    for (auto h : hashes) signature_ = kernels::kink_mix(signature_, h);
}

void Tape::note_kink(std::uint64_t v) { signature_ = kernels::kink_mix(signature_, v); }

}  // namespace surreal
