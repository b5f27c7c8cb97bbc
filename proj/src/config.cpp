#include "ssdm/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "ssdm/errors.hpp"

namespace ssdm {

namespace {

using nlohmann::json;

void reject_unknown(const json& obj, const std::set<std::string>& known, const std::string& where) {
    for (auto it = obj.begin(); it != obj.end(); ++it)
        if (!known.count(it.key())) throw MalformedInput("unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read(const json& obj, const char* key, T& out) {
    if (!obj.contains(key)) return;
    try {
        out = obj.at(key).get<T>();
    } catch (const json::exception& e) {
        throw MalformedInput(std::string("bad value for '") + key + "': " + e.what());
    }
}

std::string format_id(double v) {
    std::ostringstream s;
    s << v;
    return s.str();
}

void read_target(const json& t, const std::filesystem::path& base_dir, ExperimentConfig& cfg) {
    if (!t.is_object()) throw MalformedInput("'target' must be an object");
    reject_unknown(t, {"binary_p", "alphabet", "pmf", "pairs", "file", "id"}, "target");
    const int forms = t.contains("binary_p") + t.contains("pmf") + t.contains("pairs") + t.contains("file");
    if (forms != 1) throw MalformedInput("target needs exactly one of binary_p, alphabet+pmf, pairs, file");
    if (t.contains("binary_p")) {
        double p = 0.0;
        read(t, "binary_p", p);
        cfg.target = binary_target(p);
        cfg.target_id = "binary-" + format_id(p);
    } else if (t.contains("pmf")) {
        std::vector<double> alphabet, pmf;
        read(t, "pmf", pmf);
        if (t.contains("alphabet")) {
            read(t, "alphabet", alphabet);
        } else {
            for (std::size_t k = 0; k < pmf.size(); ++k) alphabet.push_back(static_cast<double>(k));
        }
        cfg.target = build_target(alphabet, pmf);
        cfg.target_id = "pmf-" + std::to_string(pmf.size());
    } else if (t.contains("pairs")) {
        std::vector<std::pair<double, double>> pairs;
        read(t, "pairs", pairs);
        std::vector<double> alphabet, pmf;
        for (auto [a, p] : pairs) {
            alphabet.push_back(a);
            pmf.push_back(p);
        }
        cfg.target = build_target(alphabet, pmf);
        cfg.target_id = "pmf-" + std::to_string(pmf.size());
    } else {
        std::string file;
        read(t, "file", file);
        std::filesystem::path path(file);
        if (path.is_relative()) path = base_dir / path;
        cfg.target = load_target(path);
        cfg.target_id = std::filesystem::path(file).stem().string();
    }
    read(t, "id", cfg.target_id);
}

} // namespace

std::size_t rows_for_rate(const SectionLayout& layout, double rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) throw MalformedInput("rate must be positive and finite");
    const double bits = static_cast<double>(layout.message_bits());
    // Slack keeps exact ratios such as 2048 / 0.5 from rounding up.
    const double rows = std::ceil(bits / rate - 1e-9);
    return std::max<std::size_t>(1, static_cast<std::size_t>(rows));
}

std::size_t ExperimentConfig::num_rows() const { return rows_for_rate(layout(), rate); }

void ExperimentConfig::validate() const {
    layout().validate();
    for (double r : rate_grid())
        if (!(r > 0.0) || !std::isfinite(r)) throw MalformedInput("rates must be positive and finite");
    for (std::size_t b : section_sizes) SectionLayout{b, sections}.validate();
    if (trials < 1) throw MalformedInput("trials must be at least 1");
    if (!(success_ser >= 0.0 && success_ser <= 1.0)) throw MalformedInput("success_ser must lie in [0, 1]");
    gamp.validate();
    if (!(coupled_damping > 0.0 && coupled_damping <= 1.0)) throw MalformedInput("coupled_damping must lie in (0, 1]");
    se.validate();
    if (op == OperatorKind::SpatiallyCoupled) {
        coupling.validate();
        if (sections % coupling.block_cols != 0)
            throw MalformedInput("sections must be a multiple of coupling.block_cols");
    }
    if (op == OperatorKind::Explicit) throw MalformedInput("experiments draw their operators; 'explicit' is not allowed");
    num_rows();
}

ExperimentConfig parse_config(const std::string& json_text, const std::filesystem::path& base_dir) {
    json doc;
    try {
        doc = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw MalformedInput(std::string("config is not valid JSON: ") + e.what());
    }
    if (!doc.is_object()) throw MalformedInput("config must be a JSON object");
    reject_unknown(doc,
                   {"target", "section_size", "sections", "rate", "operator", "coupling", "gamp", "se", "trials",
                    "seed", "rates", "section_sizes", "share_operator", "success_ser", "workers", "coupled_damping"},
                   "config");
    ExperimentConfig cfg;
    if (doc.contains("target")) read_target(doc["target"], base_dir, cfg);
    read(doc, "section_size", cfg.section_size);
    read(doc, "sections", cfg.sections);
    read(doc, "rate", cfg.rate);
    if (doc.contains("operator")) {
        std::string name;
        read(doc, "operator", name);
        cfg.op = parse_operator_kind(name);
    }
    if (doc.contains("coupling")) {
        const json& c = doc["coupling"];
        reject_unknown(c, {"block_rows", "block_cols", "backward", "forward", "seed_rate", "strength"}, "coupling");
        read(c, "block_rows", cfg.coupling.block_rows);
        read(c, "block_cols", cfg.coupling.block_cols);
        read(c, "backward", cfg.coupling.backward);
        read(c, "forward", cfg.coupling.forward);
        read(c, "seed_rate", cfg.coupling.seed_rate);
        read(c, "strength", cfg.coupling.strength);
    }
    if (doc.contains("gamp")) {
        const json& g = doc["gamp"];
        reject_unknown(g, {"t_max", "convergence_tol", "damping", "prior_mean_init", "eta_floor"}, "gamp");
        read(g, "t_max", cfg.gamp.t_max);
        read(g, "convergence_tol", cfg.gamp.convergence_tol);
        read(g, "damping", cfg.gamp.damping);
        read(g, "prior_mean_init", cfg.gamp.prior_mean_init);
        read(g, "eta_floor", cfg.gamp.eta_floor);
    }
    if (doc.contains("se")) {
        const json& s = doc["se"];
        reject_unknown(s, {"mc_samples", "max_iters", "fp_tol", "success_threshold", "seed"}, "se");
        read(s, "mc_samples", cfg.se.mc_samples);
        read(s, "max_iters", cfg.se.max_iters);
        read(s, "fp_tol", cfg.se.fp_tol);
        read(s, "success_threshold", cfg.se.success_threshold);
        read(s, "seed", cfg.se.seed);
    }
    read(doc, "trials", cfg.trials);
    read(doc, "seed", cfg.seed);
    read(doc, "rates", cfg.rates);
    read(doc, "section_sizes", cfg.section_sizes);
    read(doc, "share_operator", cfg.share_operator);
    read(doc, "success_ser", cfg.success_ser);
    read(doc, "coupled_damping", cfg.coupled_damping);
    read(doc, "workers", cfg.workers);
    cfg.validate();
    return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MalformedInput("cannot open config file " + path.string());
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), path.parent_path());
}

std::size_t resolve_workers(std::size_t requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("SSDM_WORKERS")) {
        char* end = nullptr;
        const unsigned long v = std::strtoul(env, &end, 10);
        if (end != env && *end == '\0' && v > 0) return v;
        throw MalformedInput(std::string("SSDM_WORKERS must be a positive integer, got '") + env + "'");
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

} // namespace ssdm
