#include "surreal/data.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <random>
#include <stdexcept>

namespace surreal {

std::span<const std::complex<float>> Dataset::raw(std::size_t i) const {
    return std::span<const std::complex<float>>(values).subspan(i * shape.size(), shape.size());
}

ComplexTensor Dataset::sample(std::size_t i) const {
    ComplexTensor t(shape);
    const auto r = raw(i);
    for (std::size_t k = 0; k < r.size(); ++k) t.data[k] = to_polar({r[k].real(), r[k].imag()});
    return t;
}

ChartBatch Dataset::batch(std::span<const std::size_t> indices) const {
    ChartBatch out(indices.size(), shape);
    for (std::size_t b = 0; b < indices.size(); ++b) {
        const auto r = raw(indices[b]);
        for (std::size_t k = 0; k < r.size(); ++k) {
            const PolarComplex p = to_polar({r[k].real(), r[k].imag()});
            out.logr[out.offset(b) + k] = std::log(p.magnitude);
            out.theta[out.offset(b) + k] = p.phase;
        }
    }
    return out;
}

std::vector<std::uint32_t> Dataset::batch_labels(std::span<const std::size_t> indices) const {
    std::vector<std::uint32_t> out;
    out.reserve(indices.size());
    for (auto i : indices) out.push_back(labels[i]);
    return out;
}

void Dataset::push(const ComplexTensor& t, std::uint32_t label) {
    if (t.shape != shape) throw std::invalid_argument("dataset: sample shape " + t.shape.str() + " vs " + shape.str());
    labels.push_back(label);
    for (const auto& p : t.data) {
        const auto z = from_polar(p);
        values.emplace_back(static_cast<float>(z.re), static_cast<float>(z.im));
    }
}

void Dataset::push(std::span<const std::complex<double>> v, std::uint32_t label) {
    if (v.size() != shape.size()) throw std::invalid_argument("dataset: sample has wrong element count");
    labels.push_back(label);
    for (const auto& z : v) values.emplace_back(static_cast<float>(z.real()), static_cast<float>(z.imag()));
}

Modulation parse_modulation(const std::string& name) {
    if (name == "BPSK" || name == "bpsk") return Modulation::bpsk;
    if (name == "QPSK" || name == "qpsk") return Modulation::qpsk;
    if (name == "PSK8" || name == "psk8" || name == "8PSK") return Modulation::psk8;
    if (name == "PAM4" || name == "pam4") return Modulation::pam4;
    throw std::invalid_argument("unknown modulation '" + name + "'");
}

std::string modulation_name(Modulation m) {
    switch (m) {
        case Modulation::bpsk: return "BPSK";
        case Modulation::qpsk: return "QPSK";
        case Modulation::psk8: return "PSK8";
        case Modulation::pam4: return "PAM4";
    }
    return "?";
}

std::vector<std::complex<double>> constellation(Modulation m) {
    std::vector<std::complex<double>> pts;
    switch (m) {
        case Modulation::bpsk: pts = {{1.0, 0.0}, {-1.0, 0.0}}; break;
        case Modulation::qpsk:
            for (int k = 0; k < 4; ++k) pts.push_back(std::polar(1.0, kPi / 4 + k * kPi / 2));
            break;
        case Modulation::psk8:
            for (int k = 0; k < 8; ++k) pts.push_back(std::polar(1.0, k * kPi / 4));
            break;
        case Modulation::pam4: {
            const double s = 1.0 / std::sqrt(5.0);
            pts = {{-3 * s, 0.0}, {-s, 0.0}, {s, 0.0}, {3 * s, 0.0}};
            break;
        }
    }
    return pts;
}

double raised_cosine(double t, double rolloff) {
    if (t == 0.0) return 1.0;
    const double x = 2.0 * rolloff * t;
    const double sinc = std::sin(kPi * t) / (kPi * t);
    if (std::abs(std::abs(x) - 1.0) < 1e-12) return kPi / 4.0 * std::sin(kPi / (2 * rolloff)) / (kPi / (2 * rolloff));
    return sinc * std::cos(kPi * rolloff * t) / (1.0 - x * x);
}

Dataset gen_modulation(const ModulationSpec& spec) {
    if (spec.length < 16) throw std::invalid_argument("modulation: length must be at least 16");
    if (spec.classes.empty()) throw std::invalid_argument("modulation: empty class set");
    if (std::isnan(spec.snr_db) || spec.snr_db == -std::numeric_limits<double>::infinity()) {
        throw std::invalid_argument("modulation: SNR must be finite or +inf");
    }
    const std::size_t sps = spec.samples_per_symbol;
    const auto half_span = static_cast<long>(spec.span_symbols / 2);
    std::vector<double> taps;
    for (long m = -half_span * static_cast<long>(sps); m <= half_span * static_cast<long>(sps); ++m) {
        taps.push_back(raised_cosine(static_cast<double>(m) / static_cast<double>(sps), spec.rolloff));
    }
    const long tap_offset = half_span * static_cast<long>(sps);

    Dataset out;
    out.shape = {1, 1, spec.length};
    out.num_classes = static_cast<std::uint32_t>(spec.classes.size());
    std::mt19937_64 rng(spec.seed);
    const bool noisy = std::isfinite(spec.snr_db);
    const double noise_std = noisy ? std::sqrt(std::pow(10.0, -spec.snr_db / 10.0) / 2.0) : 0.0;
    std::normal_distribution<double> normal(0.0, 1.0);

    // Symbols k in [first, last] influence the kept window [0, length).
    const long first = -half_span;
    const long last = static_cast<long>((spec.length - 1) / sps) + half_span;
    std::vector<std::complex<double>> symbols(static_cast<std::size_t>(last - first + 1));
    std::vector<std::complex<double>> signal(spec.length);

    for (std::size_t cls = 0; cls < spec.classes.size(); ++cls) {
        const auto points = constellation(spec.classes[cls]);
        std::uniform_int_distribution<std::size_t> pick(0, points.size() - 1);
        for (std::size_t s = 0; s < spec.per_class; ++s) {
            for (auto& sym : symbols) sym = points[pick(rng)];
            for (std::size_t i = 0; i < spec.length; ++i) {
                std::complex<double> acc{0.0, 0.0};
                for (long k = first; k <= last; ++k) {
                    const long m = static_cast<long>(i) - k * static_cast<long>(sps) + tap_offset;
                    if (m < 0 || m >= static_cast<long>(taps.size())) continue;
                    acc += symbols[static_cast<std::size_t>(k - first)] * taps[static_cast<std::size_t>(m)];
                }
                signal[i] = acc;
            }
            double power = 0.0;
            for (const auto& z : signal) power += std::norm(z);
            power /= static_cast<double>(spec.length);
            const double gain = power > 0.0 ? 1.0 / std::sqrt(power) : 1.0;
            for (auto& z : signal) {
                z *= gain;
                if (noisy) z += std::complex<double>(noise_std * normal(rng), noise_std * normal(rng));
            }
            out.push(signal, static_cast<std::uint32_t>(cls));
        }
    }
    return out;
}

Dataset gen_blobs(const BlobSpec& spec) {
    if (spec.height < 16 || spec.width < 16) throw std::invalid_argument("blobs: size must be at least 16x16");
    if (spec.classes == 0) throw std::invalid_argument("blobs: need at least one class");
    Dataset out;
    out.shape = {1, spec.height, spec.width};
    out.num_classes = static_cast<std::uint32_t>(spec.classes);

    const double H = static_cast<double>(spec.height), W = static_cast<double>(spec.width);
    std::mt19937_64 layout(spec.layout_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<std::vector<std::complex<double>>> templates;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        std::vector<std::complex<double>> t(spec.height * spec.width, {0.05, 0.0});
        const double ramp_y = (unit(layout) - 0.5) * kPi / 4.0;
        const double ramp_x = (unit(layout) - 0.5) * kPi / 4.0;
        const double offset = (unit(layout) - 0.5) * kTwoPi;
        for (int blob = 0; blob < 3; ++blob) {
            const double cy = (0.2 + 0.6 * unit(layout)) * H;
            const double cx = (0.2 + 0.6 * unit(layout)) * W;
            const double sigma = (0.06 + 0.08 * unit(layout)) * std::min(H, W);
            const double amp = 0.5 + unit(layout);
            for (std::size_t y = 0; y < spec.height; ++y)
                for (std::size_t x = 0; x < spec.width; ++x) {
                    const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
                    t[y * spec.width + x] += amp * std::exp(-(dy * dy + dx * dx) / (2.0 * sigma * sigma));
                }
        }
        for (std::size_t y = 0; y < spec.height; ++y)
            for (std::size_t x = 0; x < spec.width; ++x) {
                t[y * spec.width + x] *= std::polar(1.0, offset + ramp_y * static_cast<double>(y) +
                                                             ramp_x * static_cast<double>(x));
            }
        templates.push_back(std::move(t));
    }

    std::mt19937_64 rng(spec.seed);
    std::normal_distribution<double> normal(0.0, spec.noise / std::sqrt(2.0));
    std::vector<std::complex<double>> sample;
    for (std::size_t c = 0; c < spec.classes; ++c) {
        for (std::size_t s = 0; s < spec.per_class; ++s) {
            sample = templates[c];
            if (spec.noise > 0.0)
                for (auto& z : sample) z += std::complex<double>(normal(rng), normal(rng));
            out.push(sample, static_cast<std::uint32_t>(c));
        }
    }
    return out;
}

Augmented augment_scale(const Dataset& data, const AugmentSpec& spec) {
    if (!(spec.min_scale > 0.0) || spec.max_scale < spec.min_scale || spec.max_angle < spec.min_angle) {
        throw std::invalid_argument("augment_scale: invalid range");
    }
    Augmented out;
    out.data.shape = data.shape;
    out.data.num_classes = data.num_classes;
    std::mt19937_64 rng(spec.seed);
    std::uniform_real_distribution<double> log_scale(std::log(spec.min_scale), std::log(spec.max_scale));
    std::uniform_real_distribution<double> angle(spec.min_angle, spec.max_angle);
    for (std::size_t i = 0; i < data.size(); ++i) {
        const double ls = spec.min_scale == spec.max_scale ? std::log(spec.min_scale) : log_scale(rng);
        const double a = spec.min_angle == spec.max_angle ? spec.min_angle : angle(rng);
        const GroupElement g{std::exp(ls), wrap_phase(a)};
        out.draws.push_back(g);
        if (g.scale == 1.0 && g.angle == 0.0) {
            out.data.labels.push_back(data.labels[i]);
            const auto r = data.raw(i);
            out.data.values.insert(out.data.values.end(), r.begin(), r.end());
            continue;
        }
        ComplexTensor t = data.sample(i);
        for (auto& p : t.data) p = act(g, p);
        out.data.push(t, data.labels[i]);
    }
    return out;
}

namespace {

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_f32(std::vector<std::uint8_t>& out, float f) {
    std::uint32_t bits;
    static_assert(sizeof(bits) == sizeof(f));
    std::memcpy(&bits, &f, sizeof(f));
    put_u32(out, bits);
}

std::uint32_t get_u32(std::span<const std::uint8_t> in, std::size_t at) {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(in[at + i]) << (8 * i);
    return v;
}

float get_f32(std::span<const std::uint8_t> in, std::size_t at) {
    const std::uint32_t bits = get_u32(in, at);
    float f;
    std::memcpy(&f, &bits, sizeof(f));
    return f;
}

std::uint32_t checked_u32(std::size_t v, const char* what) {
    if (v > std::numeric_limits<std::uint32_t>::max()) throw std::invalid_argument(std::string(what) + " too large");
    return static_cast<std::uint32_t>(v);
}

}  // namespace

std::size_t cvds_file_size(std::size_t n, Shape shape) {
    return kCvdsHeaderBytes + n * (4 + 8 * shape.size()) + 4;
}

std::vector<std::uint8_t> encode_cvds(const Dataset& data) {
    if (data.values.size() != data.size() * data.shape.size()) throw std::invalid_argument("dataset payload size mismatch");
    std::vector<std::uint8_t> out;
    out.reserve(cvds_file_size(data.size(), data.shape));
    out.insert(out.end(), {'C', 'V', 'D', 'S'});
    put_u32(out, checked_u32(data.size(), "sample count"));
    put_u32(out, checked_u32(data.shape.c, "channels"));
    put_u32(out, checked_u32(data.shape.h, "height"));
    put_u32(out, checked_u32(data.shape.w, "width"));
    const std::size_t per = data.shape.size();
    for (std::size_t i = 0; i < data.size(); ++i) {
        if (data.labels[i] >= data.num_classes) throw std::invalid_argument("label exceeds class count");
        put_u32(out, data.labels[i]);
        for (std::size_t k = 0; k < per; ++k) {
            put_f32(out, data.values[i * per + k].real());
            put_f32(out, data.values[i * per + k].imag());
        }
    }
    put_u32(out, data.num_classes);
    return out;
}

Dataset decode_cvds(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4 || bytes[0] != 'C' || bytes[1] != 'V' || bytes[2] != 'D' || bytes[3] != 'S') {
        throw std::runtime_error("not a CVDS file");
    }
    if (bytes.size() < kCvdsHeaderBytes + 4) throw std::runtime_error("truncated dataset");
    Dataset d;
    const std::size_t n = get_u32(bytes, 4);
    d.shape = {get_u32(bytes, 8), get_u32(bytes, 12), get_u32(bytes, 16)};
    if (bytes.size() != cvds_file_size(n, d.shape)) throw std::runtime_error("truncated dataset");
    const std::size_t per = d.shape.size();
    std::size_t at = kCvdsHeaderBytes;
    d.labels.reserve(n);
    d.values.reserve(n * per);
    for (std::size_t i = 0; i < n; ++i) {
        d.labels.push_back(get_u32(bytes, at));
        at += 4;
        for (std::size_t k = 0; k < per; ++k, at += 8) d.values.emplace_back(get_f32(bytes, at), get_f32(bytes, at + 4));
    }
    d.num_classes = get_u32(bytes, at);
    for (auto l : d.labels)
        if (l >= d.num_classes) throw std::runtime_error("label exceeds declared class count");
    return d;
}

void write_cvds(const std::filesystem::path& path, const Dataset& data) {
    const auto bytes = encode_cvds(data);
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open " + path.string() + " for writing");
    f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!f) throw std::runtime_error("write failed: " + path.string());
}

Dataset read_cvds(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
    return decode_cvds(bytes);
}

}  // namespace surreal
