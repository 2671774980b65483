#include "surreal/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace surreal {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
    T out{};
    const auto* end = text.data() + text.size();
    const auto [ptr, ec] = std::from_chars(text.data(), end, out);
    if (ec != std::errc() || ptr != end) throw std::invalid_argument("config: bad value for " + key + ": '" + text + "'");
    return out;
}

bool parse_bool(const std::string& key, const std::string& text) {
    if (text == "true" || text == "1" || text == "yes") return true;
    if (text == "false" || text == "0" || text == "no") return false;
    throw std::invalid_argument("config: bad boolean for " + key + ": '" + text + "'");
}

std::string format_double(double v) {
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

}  // namespace

void RunConfig::validate() const {
    parse_arch(arch);
    parse_preset(preset);
    parse_optimizer(optimizer);
    if (batch == 0) throw std::invalid_argument("batch must be positive");
    if (!(lr > 0.0)) throw std::invalid_argument("lr must be positive");
    if (dist_sets == 0) throw std::invalid_argument("dist_sets must be positive");
    if (!(logit_init >= 0.0) || !std::isfinite(logit_init)) throw std::invalid_argument("logit_init must be finite and >= 0");
    optimizer_config().validate();
}

std::string RunConfig::to_text() const {
    std::ostringstream os;
    os << "arch = " << arch << "\n";
    os << "dataset = " << dataset << "\n";
    os << "test_dataset = " << test_dataset << "\n";
    os << "out_dir = " << out_dir << "\n";
    os << "epochs = " << epochs << "\n";
    os << "batch = " << batch << "\n";
    os << "lr = " << format_double(lr) << "\n";
    os << "seed = " << seed << "\n";
    os << "optimizer = " << optimizer << "\n";
    if (clip_norm) os << "clip_norm = " << format_double(*clip_norm) << "\n";
    os << "preset = " << preset << "\n";
    os << "tr_rank = " << tr_rank << "\n";
    os << "dist_sets = " << dist_sets << "\n";
    os << "trelu = " << (trelu ? "true" : "false") << "\n";
    os << "logit_init = " << format_double(logit_init) << "\n";
    return os.str();
}

OptimizerConfig RunConfig::optimizer_config() const {
    OptimizerConfig o;
    o.kind = parse_optimizer(optimizer);
    o.lr = lr;
    o.clip_norm = clip_norm;
    return o;
}

ArchConfig RunConfig::arch_config(Shape input, std::size_t classes) const {
    ArchConfig a;
    a.arch = parse_arch(arch);
    a.input = input;
    a.classes = classes;
    a.preset = parse_preset(preset);
    a.tr_rank = tr_rank;
    a.dist_sets = dist_sets;
    a.use_trelu = trelu;
    a.logit_init = logit_init;
    a.seed = seed;
    return a;
}

KeyValues parse_key_values(std::string_view text) {
    KeyValues out;
    std::size_t line_no = 0;
    while (!text.empty()) {
        const auto nl = text.find('\n');
        std::string_view line = text.substr(0, nl);
        text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) {
            throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected key = value");
        }
        const auto key = trim(line.substr(0, eq));
        if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
        out[std::string(key)] = std::string(trim(line.substr(eq + 1)));
    }
    return out;
}

RunConfig apply_key_values(const KeyValues& entries, RunConfig c) {
    for (const auto& [key, value] : entries) {
        if (key == "arch") c.arch = value;
        else if (key == "dataset") c.dataset = value;
        else if (key == "test_dataset") c.test_dataset = value;
        else if (key == "out_dir") c.out_dir = value;
        else if (key == "epochs") c.epochs = parse_number<std::size_t>(key, value);
        else if (key == "batch") c.batch = parse_number<std::size_t>(key, value);
        else if (key == "lr") c.lr = parse_number<double>(key, value);
        else if (key == "seed") c.seed = parse_number<std::uint64_t>(key, value);
        else if (key == "optimizer") c.optimizer = value;
        else if (key == "clip_norm") c.clip_norm = parse_number<double>(key, value);
        else if (key == "preset") c.preset = value;
        else if (key == "tr_rank") c.tr_rank = parse_number<std::size_t>(key, value);
        else if (key == "dist_sets") c.dist_sets = parse_number<std::size_t>(key, value);
        else if (key == "trelu") c.trelu = parse_bool(key, value);
        else if (key == "logit_init") c.logit_init = parse_number<double>(key, value);
        else throw std::invalid_argument("config: unknown key '" + key + "'");
    }
    return c;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open " + path.string());
    std::stringstream ss;
    ss << f.rdbuf();
    return apply_key_values(parse_key_values(ss.str()));
}

}  // namespace surreal
