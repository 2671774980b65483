#include "surreal/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <stdexcept>

namespace surreal {

namespace {

constexpr std::uint32_t kVersion = 1;

class Writer {
public:
    void bytes(const void* p, std::size_t n) {
        const auto* b = static_cast<const std::uint8_t*>(p);
        out.insert(out.end(), b, b + n);
    }
    void u32(std::uint32_t v) {
        for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void u64(std::uint64_t v) {
        for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
    }
    void f64(double d) { u64(std::bit_cast<std::uint64_t>(d)); }
    void str(const std::string& s) {
        u32(static_cast<std::uint32_t>(s.size()));
        bytes(s.data(), s.size());
    }

    std::vector<std::uint8_t> out;
};

class Reader {
public:
    explicit Reader(std::span<const std::uint8_t> in) : in_(in) {}

    void need(std::size_t n) const {
        if (in_.size() - at_ < n) throw std::runtime_error("truncated checkpoint");
    }
    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in_[at_ + i]) << (8 * i);
        at_ += 4;
        return v;
    }
    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(in_[at_ + i]) << (8 * i);
        at_ += 8;
        return v;
    }
    double f64() { return std::bit_cast<double>(u64()); }
    std::string str() {
        const std::size_t n = u32();
        need(n);
        std::string s(reinterpret_cast<const char*>(in_.data() + at_), n);
        at_ += n;
        return s;
    }
    bool done() const { return at_ == in_.size(); }

private:
    std::span<const std::uint8_t> in_;
    std::size_t at_ = 0;
};

std::string model_text(const ArchConfig& a) {
    return "input_c = " + std::to_string(a.input.c) + "\ninput_h = " + std::to_string(a.input.h) +
           "\ninput_w = " + std::to_string(a.input.w) + "\nclasses = " + std::to_string(a.classes) + "\n";
}

std::size_t take_size(KeyValues& kv, const std::string& key) {
    auto it = kv.find(key);
    if (it == kv.end()) throw std::runtime_error("checkpoint config lacks " + key);
    const std::size_t v = std::stoul(it->second);
    kv.erase(it);
    return v;
}

}  // namespace

std::vector<std::uint8_t> encode_checkpoint(const Model& model, const RunConfig& run, const ArchConfig& arch,
                                            std::size_t epochs_completed) {
    Writer w;
    w.bytes("SRCK", 4);
    w.u32(kVersion);
    w.str(run.to_text() + model_text(arch));
    w.u64(epochs_completed);
    w.u64(static_cast<std::uint64_t>(model.params().adam_step));
    const auto params = model.params().all();
    w.u32(static_cast<std::uint32_t>(params.size()));
    for (const auto* p : params) {
        w.str(p->name);
        w.u32(p->trainable ? 1 : 0);
        w.u32(static_cast<std::uint32_t>(p->shape.size()));
        for (auto d : p->shape) w.u32(static_cast<std::uint32_t>(d));
        for (double v : p->value) w.f64(v);
        for (double v : p->m) w.f64(v);
        for (double v : p->v) w.f64(v);
    }
    return std::move(w.out);
}

LoadedCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || std::memcmp(bytes.data(), "SRCK", 4) != 0) throw std::runtime_error("not a checkpoint file");
    Reader r(bytes.subspan(4));
    if (const auto version = r.u32(); version != kVersion) {
        throw std::runtime_error("unsupported checkpoint version " + std::to_string(version));
    }
    KeyValues kv = parse_key_values(r.str());
    Shape input;
    input.c = take_size(kv, "input_c");
    input.h = take_size(kv, "input_h");
    input.w = take_size(kv, "input_w");
    const std::size_t classes = take_size(kv, "classes");
    const RunConfig run = apply_key_values(kv);
    const ArchConfig arch = run.arch_config(input, classes);

    LoadedCheckpoint out{run, arch, 0, build_model(arch)};
    out.epochs_completed = r.u64();
    out.model.params().adam_step = static_cast<long>(r.u64());
    const std::size_t count = r.u32();
    if (count != out.model.params().all().size()) throw std::runtime_error("checkpoint parameter count mismatch");
    for (std::size_t k = 0; k < count; ++k) {
        const std::string name = r.str();
        Param* p = out.model.params().find(name);
        if (!p) throw std::runtime_error("checkpoint has unknown parameter " + name);
        r.u32();
        std::vector<std::size_t> shape(r.u32());
        for (auto& d : shape) d = r.u32();
        if (shape != p->shape) throw std::runtime_error("checkpoint shape mismatch for " + name);
        for (auto& v : p->value) v = r.f64();
        for (auto& v : p->m) v = r.f64();
        for (auto& v : p->v) v = r.f64();
    }
    if (!r.done()) throw std::runtime_error("trailing bytes in checkpoint");
    return out;
}

void save_checkpoint(const std::filesystem::path& path, const Model& model, const RunConfig& run,
                     const ArchConfig& arch, std::size_t epochs_completed) {
    const auto bytes = encode_checkpoint(model, run, arch, epochs_completed);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

LoadedCheckpoint load_checkpoint(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_checkpoint(bytes);
}

}  // namespace surreal
