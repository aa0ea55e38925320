#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "curvcrit/io.hpp"

namespace curvcrit {

/// Every tunable of a run, with documented defaults. lambda = 0 and
/// lambda_max = 0 mean "auto": resolve to lambda_star/4 once the thresholds
/// are known.
struct RunConfig {
    int N = 3;
    double q = 1.5;
    double lambda = 0.0;
    double r = 1.0;
    double delta = 1.0;
    int n = 17;
    std::vector<double> lengths; // empty means N unit lengths

    double tol = 1e-8;
    double dedup_tol = 1e-3;
    int k = 2;
    int seeds_per_sphere = 3;
    int max_iter = 200000;

    double lambda_max = 0.0;
    double factor = 2.0;
    int steps = 9;

    std::string out = "out";
    std::uint64_t seed = 12345;

    int sobolev_starts = 3;
    int sobolev_max_iter = 50000;

    std::vector<double> resolved_lengths() const {
        if (lengths.empty()) return std::vector<double>(static_cast<std::size_t>(N), 1.0);
        return lengths;
    }
};

/// Parses key=value text (one pair per line, '#' comments). Unknown keys are
/// rejected by name; later duplicates win.
inline RunConfig parse_config(const std::string& text) {
    RunConfig cfg;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string::npos) eol = text.size();
        std::string line = text.substr(pos, eol - pos);
        pos = eol + 1;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) throw ConfigError("expected key=value, got: " + line);
        const std::string key = trim(line.substr(0, eq));
        const std::string val = trim(line.substr(eq + 1));
        if (key == "N") cfg.N = static_cast<int>(parse_int(val, key));
        else if (key == "q") cfg.q = parse_double(val, key);
        else if (key == "lambda") cfg.lambda = parse_double(val, key);
        else if (key == "r") cfg.r = parse_double(val, key);
        else if (key == "delta") cfg.delta = parse_double(val, key);
        else if (key == "n") cfg.n = static_cast<int>(parse_int(val, key));
        else if (key == "lengths") {
            cfg.lengths.clear();
            for (const std::string& part : split(val, ','))
                cfg.lengths.push_back(parse_double(part, key));
        } else if (key == "tol") cfg.tol = parse_double(val, key);
        else if (key == "dedup_tol") cfg.dedup_tol = parse_double(val, key);
        else if (key == "k") cfg.k = static_cast<int>(parse_int(val, key));
        else if (key == "seeds_per_sphere") cfg.seeds_per_sphere = static_cast<int>(parse_int(val, key));
        else if (key == "max_iter") cfg.max_iter = static_cast<int>(parse_int(val, key));
        else if (key == "lambda_max") cfg.lambda_max = parse_double(val, key);
        else if (key == "factor") cfg.factor = parse_double(val, key);
        else if (key == "steps") cfg.steps = static_cast<int>(parse_int(val, key));
        else if (key == "out") cfg.out = val;
        else if (key == "seed") cfg.seed = parse_uint(val, key);
        else if (key == "sobolev_starts") cfg.sobolev_starts = static_cast<int>(parse_int(val, key));
        else if (key == "sobolev_max_iter") cfg.sobolev_max_iter = static_cast<int>(parse_int(val, key));
        else throw ConfigError("unknown config key: " + key);
    }
    return cfg;
}

/// Canonical serialization; parse_config(serialize_config(c)) reproduces
/// every field exactly.
inline std::string serialize_config(const RunConfig& cfg) {
    std::string s;
    s += "N = " + std::to_string(cfg.N) + "\n";
    s += "q = " + fmt17(cfg.q) + "\n";
    s += "lambda = " + fmt17(cfg.lambda) + "\n";
    s += "r = " + fmt17(cfg.r) + "\n";
    s += "delta = " + fmt17(cfg.delta) + "\n";
    s += "n = " + std::to_string(cfg.n) + "\n";
    std::string lens;
    const auto L = cfg.resolved_lengths();
    for (std::size_t i = 0; i < L.size(); ++i) lens += (i ? "," : "") + fmt17(L[i]);
    s += "lengths = " + lens + "\n";
    s += "tol = " + fmt17(cfg.tol) + "\n";
    s += "dedup_tol = " + fmt17(cfg.dedup_tol) + "\n";
    s += "k = " + std::to_string(cfg.k) + "\n";
    s += "seeds_per_sphere = " + std::to_string(cfg.seeds_per_sphere) + "\n";
    s += "max_iter = " + std::to_string(cfg.max_iter) + "\n";
    s += "lambda_max = " + fmt17(cfg.lambda_max) + "\n";
    s += "factor = " + fmt17(cfg.factor) + "\n";
    s += "steps = " + std::to_string(cfg.steps) + "\n";
    s += "out = " + cfg.out + "\n";
    s += "seed = " + std::to_string(cfg.seed) + "\n";
    s += "sobolev_starts = " + std::to_string(cfg.sobolev_starts) + "\n";
    s += "sobolev_max_iter = " + std::to_string(cfg.sobolev_max_iter) + "\n";
    return s;
}

/// Range validation with the offending key in the message.
inline void validate_config(const RunConfig& cfg) {
    if (cfg.N < 3) throw ConfigError("N must be >= 3");
    if (!(cfg.q > 1.0 && cfg.q < 2.0)) throw ConfigError("q must lie in (1,2)");
    if (cfg.lambda < 0.0) throw ConfigError("lambda must be >= 0 (0 means auto)");
    if (cfg.r < 0.0) throw ConfigError("r must be >= 0");
    if (!(cfg.delta > 0.0)) throw ConfigError("delta must be > 0");
    if (cfg.n < 3) throw ConfigError("n must be >= 3");
    if (!cfg.lengths.empty() && static_cast<int>(cfg.lengths.size()) != cfg.N)
        throw ConfigError("lengths must list exactly N values");
    if (!(cfg.tol > 0.0)) throw ConfigError("tol must be > 0");
    if (cfg.dedup_tol < 0.0) throw ConfigError("dedup_tol must be >= 0");
    if (cfg.k < 1) throw ConfigError("k must be >= 1");
    if (cfg.seeds_per_sphere < 1) throw ConfigError("seeds_per_sphere must be >= 1");
    if (cfg.max_iter < 1) throw ConfigError("max_iter must be >= 1");
    if (cfg.lambda_max < 0.0) throw ConfigError("lambda_max must be >= 0 (0 means auto)");
    if (!(cfg.factor > 1.0)) throw ConfigError("factor must be > 1");
    if (cfg.steps < 1) throw ConfigError("steps must be >= 1");
    if (cfg.out.empty()) throw ConfigError("out must not be empty");
    if (cfg.sobolev_starts < 1) throw ConfigError("sobolev_starts must be >= 1");
    if (cfg.sobolev_max_iter < 1) throw ConfigError("sobolev_max_iter must be >= 1");
}

} // namespace curvcrit
