#include "surreal/params.hpp"

#include <algorithm>
#include <stdexcept>

namespace surreal {

Param& ParamStore::add(const std::string& name, std::vector<std::size_t> shape, std::vector<double> init,
                       bool trainable) {
    if (index_.contains(name)) throw std::invalid_argument("duplicate parameter name: " + name);
    std::size_t count = 1;
    for (auto d : shape) count *= d;
    if (init.size() != count) throw std::invalid_argument("parameter " + name + ": initial value has wrong size");
    auto p = std::make_unique<Param>();
    p->name = name;
    p->shape = std::move(shape);
    p->value = std::move(init);
    p->grad.assign(count, 0.0);
    p->m.assign(count, 0.0);
    p->v.assign(count, 0.0);
    p->trainable = trainable;
    index_[name] = params_.size();
    params_.push_back(std::move(p));
    return *params_.back();
}

Param& ParamStore::at(const std::string& name) {
    if (auto* p = find(name)) return *p;
    throw std::out_of_range("unknown parameter: " + name);
}

const Param& ParamStore::at(const std::string& name) const {
    if (const auto* p = find(name)) return *p;
    throw std::out_of_range("unknown parameter: " + name);
}

Param* ParamStore::find(const std::string& name) {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
}

const Param* ParamStore::find(const std::string& name) const {
    auto it = index_.find(name);
    return it == index_.end() ? nullptr : params_[it->second].get();
}

std::vector<Param*> ParamStore::all() {
    std::vector<Param*> out;
    for (auto& p : params_) out.push_back(p.get());
    return out;
}

std::vector<const Param*> ParamStore::all() const {
    std::vector<const Param*> out;
    for (const auto& p : params_) out.push_back(p.get());
    return out;
}

void ParamStore::zero_grad() {
    for (auto& p : params_) std::fill(p->grad.begin(), p->grad.end(), 0.0);
}

std::size_t ParamStore::trainable_count() const {
    std::size_t n = 0;
    for (const auto& p : params_)
        if (p->trainable) n += p->size();
    return n;
}

std::size_t ParamStore::buffer_count() const {
    std::size_t n = 0;
    for (const auto& p : params_)
        if (!p->trainable) n += p->size();
    return n;
}

}  // namespace surreal
