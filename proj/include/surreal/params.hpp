#pragma once

#include <cstddef>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace surreal {

struct Param {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> value;
    std::vector<double> grad;
    // Adam moments.
    std::vector<double> m;
    std::vector<double> v;
    // Buffers (batch-norm running statistics) are stored but never optimised.
    bool trainable = true;
    // Frozen parameters keep their value and receive no gradient.
    bool frozen = false;

    bool learns() const { return trainable && !frozen; }
    std::size_t size() const { return value.size(); }
};

/// Named parameters in insertion order. Addresses are stable.
class ParamStore {
public:
    Param& add(const std::string& name, std::vector<std::size_t> shape, std::vector<double> init,
               bool trainable = true);

    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    Param* find(const std::string& name);
    const Param* find(const std::string& name) const;

    std::vector<Param*> all();
    std::vector<const Param*> all() const;

    void zero_grad();
    std::size_t trainable_count() const;
    std::size_t buffer_count() const;

    long adam_step = 0;

private:
    std::vector<std::unique_ptr<Param>> params_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace surreal
