#include "bursty/cli_io.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>
#include <unistd.h>

#include <openssl/evp.h>

#include "bursty/bessel_fpt.hpp"
#include "bursty/errors.hpp"

namespace bursty {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

const char* model_name(Model m) { return m == Model::Simple ? "simple" : "complex"; }

Model parse_model(const std::string& s) {
    if (s == "simple") return Model::Simple;
    if (s == "complex") return Model::Complex;
    throw ValidationError("unknown model '" + s + "' (expected simple or complex)");
}

void reject_unknown(const json& j, const char* where, std::initializer_list<const char*> keys) {
    if (!j.is_object()) throw ValidationError(std::string(where) + " must be a JSON object");
    const std::set<std::string> known(keys.begin(), keys.end());
    for (const auto& [k, v] : j.items()) {
        if (!known.count(k)) throw ValidationError(std::string("unknown key '") + k + "' in " + where);
    }
}

template <class T>
void read_field(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config field '") + key + "': " + e.what());
    }
}

template <class T>
void read_optional(const json& j, const char* key, std::optional<T>& out) {
    if (!j.contains(key)) return;
    if (j.at(key).is_null()) {
        out.reset();
        return;
    }
    T v{};
    read_field(j, key, v);
    out = v;
}

template <class T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

json stop_json(const StopRule& s) {
    switch (s.kind) {
        case StopRule::Kind::Bursts: return {{"bursts", s.bursts}};
        case StopRule::Kind::Time: return {{"t_s_max", s.t_s_max}};
        case StopRule::Kind::Steps: return {{"steps", s.steps}};
    }
    return {};
}

StopRule stop_from(const json& j, double threshold) {
    reject_unknown(j, "sim.stop", {"bursts", "t_s_max", "steps"});
    if (j.size() != 1) throw ValidationError("sim.stop needs exactly one of bursts, t_s_max, steps");
    if (j.contains("bursts")) return StopRule::after_bursts(j.at("bursts").get<std::uint64_t>(), threshold);
    if (j.contains("t_s_max")) return StopRule::at_time(j.at("t_s_max").get<double>());
    return StopRule::after_steps(j.at("steps").get<std::uint64_t>());
}

std::string hex(const unsigned char* data, std::size_t n) {
    static const char* digits = "0123456789abcdef";
    std::string out(2 * n, '0');
    for (std::size_t i = 0; i < n; ++i) {
        out[2 * i] = digits[data[i] >> 4];
        out[2 * i + 1] = digits[data[i] & 15];
    }
    return out;
}

class Sha256 {
public:
    Sha256() : ctx_(EVP_MD_CTX_new()) {
        if (ctx_ == nullptr || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) {
            EVP_MD_CTX_free(ctx_);
            throw IoError("cannot initialise SHA-256");
        }
    }
    ~Sha256() { EVP_MD_CTX_free(ctx_); }
    Sha256(const Sha256&) = delete;
    Sha256& operator=(const Sha256&) = delete;

    void update(const void* data, std::size_t n) { EVP_DigestUpdate(ctx_, data, n); }
    std::string hex_digest() {
        unsigned char md[EVP_MAX_MD_SIZE];
        unsigned int len = 0;
        EVP_DigestFinal_ex(ctx_, md, &len);
        return hex(md, len);
    }

private:
    EVP_MD_CTX* ctx_;
};

std::string format_double(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_double(std::string_view s, const fs::path& file, std::size_t line) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw IoError(file.string() + ":" + std::to_string(line) + ": malformed number '" + std::string(s) + "'");
    }
    return v;
}

std::string trim(std::string s) {
    const auto a = s.find_first_not_of(" \t\r");
    const auto b = s.find_last_not_of(" \t\r");
    return a == std::string::npos ? std::string() : s.substr(a, b - a + 1);
}

double sigma_of(const RunConfig& c) { return c.model == Model::Simple ? c.simple.sigma_t_sq : c.complex.sigma_t_sq; }

double resolve_t_min(double t_min, const RunConfig& c) { return t_min > 0.0 ? t_min : c.sim.kappa * c.sim.kappa; }

using Comments = std::vector<std::pair<std::string, std::string>>;

Comments base_comments(const RunConfig& c, const std::string& time_unit) {
    return {{"config_hash", config_hash(c)}, {"time_unit", time_unit}};
}

json fit_json(const PowerLawFit& f) {
    return {{"alpha", f.alpha}, {"stderr", f.stderr_alpha}, {"prefactor", f.prefactor}, {"lo", f.lo},
            {"hi", f.hi},       {"r_squared", f.r_squared}, {"points", f.points}};
}

// Fit that reports failure in the summary instead of aborting the run.
template <class Fn>
json try_fit(Fn&& fn) {
    try {
        return fit_json(fn());
    } catch (const ValidationError& e) {
        return {{"error", e.what()}};
    }
}

std::pair<double, double> fit_range(double lo, double hi) {
    if (lo >= hi) return {0.0, std::numeric_limits<double>::infinity()};
    return {lo, hi};
}

void write_scatter(const fs::path& file, const Comments& comments, const std::vector<ScatterBin>& bins) {
    std::vector<Column> cols{{"x_lo", {}}, {"x_hi", {}}, {"x", {}}, {"y_mean", {}}, {"y_std", {}}, {"count", {}}};
    for (const auto& b : bins) {
        cols[0].values.push_back(b.x_lo);
        cols[1].values.push_back(b.x_hi);
        cols[2].values.push_back(b.x_center);
        cols[3].values.push_back(b.y_mean);
        cols[4].values.push_back(b.y_std);
        cols[5].values.push_back(static_cast<double>(b.count));
    }
    write_csv(file, comments, cols);
}

json meta_common(const RunConfig& c) {
    json j;
    j["config_hash"] = config_hash(c);
    j["config"] = c;
    j["config"].erase("output");
    return j;
}

}  // namespace

void RunConfig::validate() const {
    static const std::set<std::string> subcommands{"simulate", "analyze", "fpt", "returns"};
    if (!subcommands.count(subcommand)) throw ValidationError("unknown subcommand '" + subcommand + "'");
    simple.validate();
    complex.validate();
    return_params().validate();
    sim.validate();
    if (!(sample_dt > 0.0) || !(filter_window >= sample_dt)) {
        throw ValidationError("returns: need sample_dt > 0 and filter_window >= sample_dt");
    }
    if (realizations == 0) throw ValidationError("realizations must be at least 1");
    if (!std::isfinite(threshold)) throw ValidationError("threshold must be finite");
    if (analysis.bins_per_decade < 1) throw ValidationError("bins_per_decade must be positive");
    if (analysis.t_min < 0.0 || fpt.t_min < 0.0) throw ValidationError("t_min must be non-negative");
    if (fpt.points < 2) throw ValidationError("fpt.points must be at least 2");
    if (fpt.k_terms == 0) throw ValidationError("fpt.k_terms must be positive");
    if (output.empty()) throw ValidationError("output directory must be set");
}

ReturnModelParams RunConfig::return_params() const {
    ReturnModelParams p;
    p.complex = complex;
    p.r0_bar = r0_bar;
    p.tau_s = complex.sigma_t_sq * tau_seconds;
    p.lambda2 = lambda2;
    return p;
}

void to_json(json& j, const RunConfig& c) {
    const auto& a = c.analysis;
    const auto& f = c.fpt;
    j = json{
        {"subcommand", c.subcommand},
        {"model", model_name(c.model)},
        {"simple",
         {{"eta", c.simple.eta},
          {"lambda", c.simple.lambda},
          {"x_min", c.simple.x_min},
          {"m", c.simple.m},
          {"sigma_t_sq", c.simple.sigma_t_sq}}},
        {"complex",
         {{"eta", c.complex.eta},
          {"lambda", c.complex.lambda},
          {"epsilon", c.complex.epsilon},
          {"x_max_cap", c.complex.x_max_cap},
          {"sigma_t_sq", c.complex.sigma_t_sq}}},
        {"returns",
         {{"r0_bar", c.r0_bar},
          {"tau_seconds", c.tau_seconds},
          {"lambda2", c.lambda2},
          {"sample_dt", c.sample_dt},
          {"filter_window", c.filter_window},
          {"noise_seed", c.noise_seed}}},
        {"sim",
         {{"kappa", c.sim.kappa},
          {"x0", c.sim.x0},
          {"burn_in", c.sim.burn_in},
          {"seed", c.sim.seed},
          {"max_steps", c.sim.max_steps},
          {"x_ceiling", c.sim.x_ceiling},
          {"realizations", c.realizations},
          {"stop", stop_json(c.sim.stop)}}},
        {"threshold", c.threshold},
        {"analysis",
         {{"bins_per_decade", a.bins_per_decade},
          {"t_min", a.t_min},
          {"eta", optional_json(a.eta)},
          {"lambda", optional_json(a.lambda)},
          {"peak_vs_duration", {a.peak_vs_duration_lo, a.peak_vs_duration_hi}},
          {"size_vs_duration", {a.size_vs_duration_lo, a.size_vs_duration_hi}},
          {"size_vs_peak", {a.size_vs_peak_lo, a.size_vs_peak_hi}},
          {"min_bin_count", a.min_bin_count},
          {"psd_grid_points", a.psd_grid_points},
          {"psd_segments", a.psd_segments},
          {"psd_fit", {a.psd_fit_lo, a.psd_fit_hi}}}},
        {"fpt",
         {{"nu", optional_json(f.nu)},
          {"h_y", optional_json(f.h_y)},
          {"t_min", f.t_min},
          {"t_lo", f.t_lo},
          {"t_hi", f.t_hi},
          {"points", f.points},
          {"k_terms", f.k_terms}}},
        {"input", c.input},
        {"output", c.output},
    };
}

void from_json(const json& j, RunConfig& c) {
    reject_unknown(j, "config",
                   {"subcommand", "model", "simple", "complex", "returns", "sim", "threshold", "analysis", "fpt",
                    "input", "output"});
    read_field(j, "subcommand", c.subcommand);
    if (j.contains("model")) c.model = parse_model(j.at("model").get<std::string>());
    read_field(j, "threshold", c.threshold);
    read_field(j, "input", c.input);
    read_field(j, "output", c.output);
    if (j.contains("simple")) {
        const auto& s = j.at("simple");
        reject_unknown(s, "simple", {"eta", "lambda", "x_min", "m", "sigma_t_sq"});
        read_field(s, "eta", c.simple.eta);
        read_field(s, "lambda", c.simple.lambda);
        read_field(s, "x_min", c.simple.x_min);
        read_field(s, "m", c.simple.m);
        read_field(s, "sigma_t_sq", c.simple.sigma_t_sq);
    }
    if (j.contains("complex")) {
        const auto& s = j.at("complex");
        reject_unknown(s, "complex", {"eta", "lambda", "epsilon", "x_max_cap", "sigma_t_sq"});
        read_field(s, "eta", c.complex.eta);
        read_field(s, "lambda", c.complex.lambda);
        read_field(s, "epsilon", c.complex.epsilon);
        read_field(s, "x_max_cap", c.complex.x_max_cap);
        read_field(s, "sigma_t_sq", c.complex.sigma_t_sq);
    }
    if (j.contains("returns")) {
        const auto& s = j.at("returns");
        reject_unknown(s, "returns", {"r0_bar", "tau_seconds", "lambda2", "sample_dt", "filter_window", "noise_seed"});
        read_field(s, "r0_bar", c.r0_bar);
        read_field(s, "tau_seconds", c.tau_seconds);
        read_field(s, "lambda2", c.lambda2);
        read_field(s, "sample_dt", c.sample_dt);
        read_field(s, "filter_window", c.filter_window);
        read_field(s, "noise_seed", c.noise_seed);
    }
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        reject_unknown(s, "sim", {"kappa", "x0", "burn_in", "seed", "max_steps", "x_ceiling", "realizations", "stop"});
        read_field(s, "kappa", c.sim.kappa);
        read_field(s, "x0", c.sim.x0);
        read_field(s, "burn_in", c.sim.burn_in);
        read_field(s, "seed", c.sim.seed);
        read_field(s, "max_steps", c.sim.max_steps);
        read_field(s, "x_ceiling", c.sim.x_ceiling);
        read_field(s, "realizations", c.realizations);
        if (s.contains("stop")) {
            try {
                c.sim.stop = stop_from(s.at("stop"), c.threshold);
            } catch (const json::exception& e) {
                throw ValidationError(std::string("sim.stop: ") + e.what());
            }
        }
    }
    if (c.sim.stop.kind == StopRule::Kind::Bursts) c.sim.stop.threshold = c.threshold;
    if (j.contains("analysis")) {
        const auto& s = j.at("analysis");
        reject_unknown(s, "analysis",
                       {"bins_per_decade", "t_min", "eta", "lambda", "peak_vs_duration", "size_vs_duration",
                        "size_vs_peak", "min_bin_count", "psd_grid_points", "psd_segments", "psd_fit"});
        auto& a = c.analysis;
        read_field(s, "bins_per_decade", a.bins_per_decade);
        read_field(s, "t_min", a.t_min);
        read_optional(s, "eta", a.eta);
        read_optional(s, "lambda", a.lambda);
        auto range = [&](const char* key, double& lo, double& hi) {
            std::array<double, 2> r{lo, hi};
            read_field(s, key, r);
            lo = r[0];
            hi = r[1];
        };
        range("peak_vs_duration", a.peak_vs_duration_lo, a.peak_vs_duration_hi);
        range("size_vs_duration", a.size_vs_duration_lo, a.size_vs_duration_hi);
        range("size_vs_peak", a.size_vs_peak_lo, a.size_vs_peak_hi);
        range("psd_fit", a.psd_fit_lo, a.psd_fit_hi);
        read_field(s, "min_bin_count", a.min_bin_count);
        read_field(s, "psd_grid_points", a.psd_grid_points);
        read_field(s, "psd_segments", a.psd_segments);
    }
    if (j.contains("fpt")) {
        const auto& s = j.at("fpt");
        reject_unknown(s, "fpt", {"nu", "h_y", "t_min", "t_lo", "t_hi", "points", "k_terms"});
        read_optional(s, "nu", c.fpt.nu);
        read_optional(s, "h_y", c.fpt.h_y);
        read_field(s, "t_min", c.fpt.t_min);
        read_field(s, "t_lo", c.fpt.t_lo);
        read_field(s, "t_hi", c.fpt.t_hi);
        read_field(s, "points", c.fpt.points);
        read_field(s, "k_terms", c.fpt.k_terms);
    }
}

std::string config_hash(const RunConfig& c) {
    json j = c;
    j.erase("output");
    const std::string text = j.dump();
    Sha256 sha;
    sha.update(text.data(), text.size());
    return sha.hex_digest().substr(0, 16);
}

RunConfig load_config(const fs::path& file) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open config " + file.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw IoError("cannot parse config " + file.string() + ": " + e.what());
    }
    return j.get<RunConfig>();
}

void save_config(const RunConfig& c, const fs::path& file) { write_json(file, json(c)); }

std::string file_checksum(const fs::path& file) {
    std::ifstream in(file, std::ios::binary);
    if (!in) throw IoError("cannot open " + file.string());
    Sha256 sha;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        sha.update(buf, static_cast<std::size_t>(in.gcount()));
    }
    return sha.hex_digest();
}

InputSeries read_series(const fs::path& file, double sigma_t_sq) {
    std::ifstream in(file);
    if (!in) throw IoError("cannot open input " + file.string());
    InputSeries out;
    double scale = 1.0;
    bool have_header = false;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        const auto comma = s.find(',');
        if (comma == std::string::npos || s.find(',', comma + 1) != std::string::npos) {
            throw IoError(file.string() + ":" + std::to_string(lineno) + ": expected two comma-separated columns");
        }
        if (!have_header) {
            out.time_column = trim(s.substr(0, comma));
            if (out.time_column == "t_s") {
                scale = 1.0;
            } else if (out.time_column == "t" || out.time_column == "t_seconds") {
                scale = sigma_t_sq;
            } else {
                throw IoError(file.string() + ":" + std::to_string(lineno) +
                              ": first column must be t_s, t or t_seconds, got '" + out.time_column + "'");
            }
            have_header = true;
            continue;
        }
        const double t = parse_double(std::string_view(s).substr(0, comma), file, lineno) * scale;
        const double x = parse_double(std::string_view(s).substr(comma + 1), file, lineno);
        if (!out.t_s.empty() && !(t > out.t_s.back())) {
            throw IoError(file.string() + ":" + std::to_string(lineno) + ": time must be strictly increasing");
        }
        out.t_s.push_back(t);
        out.x.push_back(x);
    }
    if (!have_header) throw IoError(file.string() + ": missing header row");
    return out;
}

void write_csv(const fs::path& file, const Comments& comments, const std::vector<Column>& columns) {
    if (columns.empty()) throw ValidationError("write_csv: no columns");
    const std::size_t n = columns.front().values.size();
    for (const auto& c : columns) {
        if (c.values.size() != n) throw ValidationError("write_csv: columns differ in length");
    }
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    for (const auto& [k, v] : comments) out << "# " << k << '=' << v << '\n';
    for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << columns[i].name;
    out << '\n';
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t i = 0; i < columns.size(); ++i) out << (i ? "," : "") << format_double(columns[i].values[r]);
        out << '\n';
    }
    if (!out) throw IoError("write failed for " + file.string());
}

void write_json(const fs::path& file, const json& j) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw IoError("cannot write " + file.string());
    out << j.dump(2) << '\n';
    if (!out) throw IoError("write failed for " + file.string());
}

RunResult run_simulate(const RunConfig& cfg) {
    cfg.validate();
    const fs::path dir(cfg.output);
    const double sigma = sigma_of(cfg);
    const std::string fingerprint = cfg.model == Model::Simple ? cfg.simple.fingerprint() : cfg.complex.fingerprint();

    struct Outcome {
        std::string file;
        SimStats stats;
        std::size_t bursts = 0;
        std::exception_ptr error;
    };
    std::vector<Outcome> outcomes(cfg.realizations);
    for (std::size_t r = 0; r < cfg.realizations; ++r) {
        outcomes[r].file = cfg.realizations == 1 ? "path.csv" : "path_" + std::to_string(r) + ".csv";
    }

    auto run_one = [&](std::size_t r) {
        Outcome& o = outcomes[r];
        SimConfig sc = cfg.sim;
        sc.seed = cfg.sim.seed + r;
        std::ofstream out(dir / o.file, std::ios::binary);
        if (!out) throw IoError("cannot write " + (dir / o.file).string());
        Comments comments = base_comments(cfg, "t_s scaled time (seconds = t_s / sigma_t_sq)");
        comments.emplace_back("sigma_t_sq", format_double(sigma));
        comments.emplace_back("model", fingerprint);
        comments.emplace_back("seed", std::to_string(sc.seed));
        comments.emplace_back("kappa", format_double(sc.kappa));
        for (const auto& [k, v] : comments) out << "# " << k << '=' << v << '\n';
        out << "t_s,x\n";
        BurstDetector detector(cfg.threshold);
        auto sink = [&](double t, double x) {
            out << format_double(t) << ',' << format_double(x) << '\n';
            detector.push(t, x);
        };
        o.stats = cfg.model == Model::Simple ? integrate(cfg.simple, sc, sink) : integrate(cfg.complex, sc, sink);
        o.bursts = detector.take().size();
        out.close();
        if (!out) throw IoError("write failed for " + (dir / o.file).string());

        json meta = meta_common(cfg);
        meta["model"] = fingerprint;
        meta["seed"] = sc.seed;
        meta["kappa"] = sc.kappa;
        meta["generator"] = kGeneratorName;
        meta["steps"] = o.stats.steps;
        meta["samples"] = o.stats.samples;
        meta["bursts_detected"] = o.bursts;
        meta["t_s_end"] = o.stats.t_end;
        meta["columns"] = {{"t_s", "scaled time"}, {"x", "signal value"}};
        write_json(dir / (o.file + ".meta.json"), meta);
    };

    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t r = next++; r < cfg.realizations; r = next++) {
            try {
                run_one(r);
            } catch (...) {
                outcomes[r].error = std::current_exception();
            }
        }
    };
    const std::size_t threads =
        std::min<std::size_t>(cfg.realizations, std::max(1u, std::thread::hardware_concurrency()));
    std::vector<std::thread> pool;
    for (std::size_t i = 1; i < threads; ++i) pool.emplace_back(worker);
    worker();
    for (auto& t : pool) t.join();
    for (const auto& o : outcomes) {
        if (o.error) std::rethrow_exception(o.error);
    }

    RunResult res;
    std::size_t total = 0;
    json runs = json::array();
    for (const auto& o : outcomes) {
        res.files.push_back(o.file);
        res.files.push_back(o.file + ".meta.json");
        total += o.bursts;
        runs.push_back({{"file", o.file},
                        {"steps", o.stats.steps},
                        {"samples", o.stats.samples},
                        {"bursts", o.bursts},
                        {"t_s_end", o.stats.t_end}});
    }
    res.summary = {{"subcommand", "simulate"}, {"model", model_name(cfg.model)}, {"bursts", total}, {"runs", runs}};
    return res;
}

RunResult run_analyze(const RunConfig& cfg) {
    cfg.validate();
    if (cfg.input.empty()) throw ValidationError("analyze needs an input file");
    const fs::path dir(cfg.output);
    const double sigma = sigma_of(cfg);
    const InputSeries series = read_series(cfg.input, sigma);
    if (series.t_s.size() < 2) throw ValidationError("input series needs at least two samples");
    const auto& a = cfg.analysis;
    const BurstSequence bursts = detect_bursts(series.t_s, series.x, cfg.threshold);

    Comments comments = base_comments(cfg, "t_s scaled time (seconds = t_s / sigma_t_sq)");
    comments.emplace_back("sigma_t_sq", format_double(sigma));
    comments.emplace_back("threshold", format_double(cfg.threshold));
    comments.emplace_back("input_time_column", series.time_column);

    RunResult res;
    json fits;
    {
        std::vector<Column> cols{{"t_start", {}}, {"t_end", {}}, {"duration", {}}, {"peak", {}}, {"size", {}}};
        for (const auto& b : bursts.bursts()) {
            cols[0].values.push_back(b.t_start);
            cols[1].values.push_back(b.t_end);
            cols[2].values.push_back(b.duration);
            cols[3].values.push_back(b.peak);
            cols[4].values.push_back(b.size);
        }
        write_csv(dir / "bursts.csv", comments, cols);
        res.files.push_back("bursts.csv");
    }

    const double t_min = resolve_t_min(a.t_min, cfg);
    const auto durations = bursts.durations();
    const std::size_t above = static_cast<std::size_t>(
        std::count_if(durations.begin(), durations.end(), [&](double d) { return d >= t_min; }));
    json duration_summary = {{"t_min", t_min}, {"bursts_at_or_above_t_min", above}};
    if (above >= 10) {
        const LogHistogram hist = log_binned_density_from(durations, t_min, a.bins_per_decade);
        std::vector<Column> cols{{"t_lo", {}}, {"t_hi", {}}, {"t", {}}, {"density", {}}, {"count", {}}};
        for (std::size_t i = 0; i < hist.bins(); ++i) {
            cols[0].values.push_back(hist.edges[i]);
            cols[1].values.push_back(hist.edges[i + 1]);
            cols[2].values.push_back(hist.center(i));
            cols[3].values.push_back(hist.density[i]);
            cols[4].values.push_back(hist.counts[i]);
        }
        Comments hc = comments;
        hc.emplace_back("t_min", format_double(t_min));
        if (a.eta && a.lambda) {
            const BesselIndex idx = index_from(*a.eta, *a.lambda);
            const double h_y = lamperti(cfg.threshold, *a.eta);
            const FptSpec spec{idx.nu, h_y, t_min, kDefaultTermCap};
            const BurstDurationSeries ser(spec);
            const BurstDurationClosed clo(spec);
            Column cs{"series", {}};
            Column cc{"closed", {}};
            for (std::size_t i = 0; i < hist.bins(); ++i) {
                const double lo = hist.edges[i];
                const double hi = hist.edges[i + 1];
                cs.values.push_back((ser.survival(lo) - ser.survival(hi)) / (hi - lo));
                cc.values.push_back((clo.survival(lo) - clo.survival(hi)) / (hi - lo));
            }
            cols.push_back(std::move(cs));
            cols.push_back(std::move(cc));
            hc.emplace_back("nu", format_double(idx.nu));
            hc.emplace_back("h_y", format_double(h_y));
            hc.emplace_back("overlay", "bin averages of the analytic densities");
            duration_summary["nu"] = idx.nu;
            duration_summary["h_y"] = h_y;
            duration_summary["crossover_time"] = crossover_time(idx.nu, h_y);
        }
        write_csv(dir / "duration_pdf.csv", hc, cols);
        res.files.push_back("duration_pdf.csv");
    }

    auto scatter = [&](const char* name, const std::vector<double>& x, const std::vector<double>& y, double lo,
                       double hi) {
        if (x.size() < 100) {
            fits[name] = {{"error", "fewer than 100 bursts"}};
            return;
        }
        const auto bins = binned_scatter(x, y, a.bins_per_decade);
        write_scatter(dir / (std::string(name) + ".csv"), comments, bins);
        res.files.push_back(std::string(name) + ".csv");
        const auto [flo, fhi] = fit_range(lo, hi);
        fits[name] = try_fit([&] { return fit_scatter(bins, flo, fhi, a.min_bin_count); });
    };
    scatter("peak_vs_duration", durations, bursts.peaks(), a.peak_vs_duration_lo, a.peak_vs_duration_hi);
    scatter("size_vs_duration", durations, bursts.sizes(), a.size_vs_duration_lo, a.size_vs_duration_hi);
    scatter("size_vs_peak", bursts.peaks(), bursts.sizes(), a.size_vs_peak_lo, a.size_vs_peak_hi);

    PsdOptions opt;
    opt.grid_points = a.psd_grid_points;
    opt.segments = a.psd_segments;
    opt.fit_lo = a.psd_fit_lo;
    opt.fit_hi = a.psd_fit_hi;
    opt.bins_per_decade = a.bins_per_decade;
    json psd_summary;
    try {
        const Spectrum spec = psd_estimate(series.t_s, series.x, opt);
        Comments pc = base_comments(cfg, "frequency in 1/t_s (scaled)");
        write_csv(dir / "psd.csv", pc, {{"f", spec.freq}, {"S", spec.power}});
        res.files.push_back("psd.csv");
        psd_summary = {{"beta", spec.beta}, {"fit", fit_json(spec.fit)}, {"sample_dt", spec.sample_dt}};
    } catch (const ValidationError& e) {
        psd_summary = {{"error", e.what()}};
    }

    res.summary = {{"subcommand", "analyze"},
                   {"input", cfg.input},
                   {"samples", series.t_s.size()},
                   {"bursts", bursts.size()},
                   {"threshold", cfg.threshold},
                   {"durations", duration_summary},
                   {"fits", fits},
                   {"psd", psd_summary}};
    return res;
}

RunResult run_fpt(const RunConfig& cfg) {
    cfg.validate();
    const fs::path dir(cfg.output);
    const auto& f = cfg.fpt;
    const double nu = f.nu ? *f.nu : index_from(cfg.simple.eta, cfg.simple.lambda).nu;
    const double h_y = f.h_y ? *f.h_y : lamperti(cfg.threshold, cfg.simple.eta);
    const double t_min = resolve_t_min(f.t_min, cfg);
    const FptSpec spec{nu, h_y, t_min, f.k_terms};
    spec.validate();
    const double t_lo = f.t_lo > 0.0 ? f.t_lo : t_min;
    const double t_hi = f.t_hi > 0.0 ? f.t_hi : 10.0 * crossover_time(nu, h_y);
    if (t_lo < t_min) {
        throw ValidationError("fpt grid starts at t=" + format_double(t_lo) + ", below t_min=" + format_double(t_min) +
                              "; the density is only defined for t >= t_min");
    }
    if (!(t_hi > t_lo)) throw ValidationError("fpt grid needs t_hi > t_lo");

    const BurstDurationSeries ser(spec);
    const BurstDurationClosed clo(spec);
    std::vector<double> t(f.points);
    const double step = std::log(t_hi / t_lo) / static_cast<double>(f.points - 1);
    for (std::size_t i = 0; i < f.points; ++i) t[i] = t_lo * std::exp(step * static_cast<double>(i));
    t.back() = t_hi;
    std::vector<double> ps(t.size());
    std::vector<double> pc(t.size());
    double max_dev = 0.0;
    for (std::size_t i = 0; i < t.size(); ++i) {
        ps[i] = ser.pdf(t[i]);
        pc[i] = clo.pdf(t[i]);
        max_dev = std::max(max_dev, std::abs(pc[i] / ps[i] - 1.0));
    }

    RunResult res;
    auto emit = [&](const std::string& name, const std::vector<double>& p, double c, const char* which) {
        Comments cm = base_comments(cfg, "t scaled time");
        cm.emplace_back("pdf", which);
        cm.emplace_back("nu", format_double(nu));
        cm.emplace_back("h_y", format_double(h_y));
        cm.emplace_back("t_min", format_double(t_min));
        cm.emplace_back("k_terms", std::to_string(f.k_terms));
        cm.emplace_back("C", format_double(c));
        write_csv(dir / name, cm, {{"t", t}, {"p", p}});
        json meta = meta_common(cfg);
        meta.update({{"pdf", which}, {"nu", nu}, {"h_y", h_y}, {"t_min", t_min}, {"k_terms", f.k_terms}, {"C", c}});
        write_json(dir / (name + ".meta.json"), meta);
        res.files.push_back(name);
        res.files.push_back(name + ".meta.json");
    };
    emit("fpt_series.csv", ps, ser.normalization(), "series");
    emit("fpt_closed.csv", pc, clo.normalization(), "closed");
    res.summary = {{"subcommand", "fpt"},
                   {"nu", nu},
                   {"h_y", h_y},
                   {"t_min", t_min},
                   {"crossover_time", crossover_time(nu, h_y)},
                   {"series_terms", ser.terms()},
                   {"series_normalization", ser.normalization()},
                   {"closed_normalization", clo.normalization()},
                   {"max_relative_deviation", max_dev}};
    return res;
}

RunResult run_returns(const RunConfig& cfg) {
    cfg.validate();
    const fs::path dir(cfg.output);
    const ReturnModelParams p = cfg.return_params();
    const ReturnSeries series = simulate_returns(p, cfg.sim, cfg.noise_seed, cfg.sample_dt);
    const FilteredSeries filtered = filtered_abs_returns(series, cfg.filter_window);
    const BurstSequence bursts = detect_bursts(filtered.t_seconds, filtered.value, cfg.threshold);

    json meta = meta_common(cfg);
    meta.update({{"model", p.fingerprint()},
                 {"sde_seed", series.sde_seed},
                 {"noise_seed", series.noise_seed},
                 {"generator", kGeneratorName},
                 {"noise_generator", kKeyedGeneratorName},
                 {"sample_dt", cfg.sample_dt},
                 {"tau_s", p.tau_s}});

    Comments cm = base_comments(cfg, "t_seconds real time");
    cm.emplace_back("sde_seed", std::to_string(series.sde_seed));
    cm.emplace_back("noise_seed", std::to_string(series.noise_seed));
    write_csv(dir / "returns.csv", cm, {{"t_seconds", series.t_seconds}, {"r", series.r}});
    write_json(dir / "returns.csv.meta.json", meta);

    Comments fc = cm;
    fc.emplace_back("filter_window_seconds", format_double(cfg.filter_window));
    fc.emplace_back("normalized_by_mean_abs_r", format_double(filtered.scale));
    write_csv(dir / "filtered.csv", fc, {{"t_seconds", filtered.t_seconds}, {"abs_r_smoothed", filtered.value}});
    meta["filter_window"] = cfg.filter_window;
    meta["mean_abs_r"] = filtered.scale;
    write_json(dir / "filtered.csv.meta.json", meta);

    RunResult res;
    res.files = {"returns.csv", "returns.csv.meta.json", "filtered.csv", "filtered.csv.meta.json"};
    res.summary = {{"subcommand", "returns"},
                   {"intervals", series.r.size()},
                   {"mean_abs_r", filtered.scale},
                   {"filtered_samples", filtered.value.size()},
                   {"bursts", bursts.size()},
                   {"threshold", cfg.threshold}};
    return res;
}

RunResult execute(const RunConfig& cfg) {
    cfg.validate();
    const fs::path dir(cfg.output);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());

    RunResult res;
    if (cfg.subcommand == "simulate") {
        res = run_simulate(cfg);
    } else if (cfg.subcommand == "analyze") {
        res = run_analyze(cfg);
    } else if (cfg.subcommand == "fpt") {
        res = run_fpt(cfg);
    } else {
        res = run_returns(cfg);
    }
    const std::string hash = config_hash(cfg);
    res.summary["config_hash"] = hash;
    save_config(cfg, dir / "config.json");
    write_json(dir / "summary.json", res.summary);
    res.files.push_back("summary.json");

    json files = json::object();
    for (const auto& f : res.files) files[f] = file_checksum(dir / f);
    write_json(dir / "manifest.json", {{"config_hash", hash}, {"files", files}});
    res.files.push_back("config.json");
    res.files.push_back("manifest.json");
    return res;
}

VerifyReport verify_run(const fs::path& output_dir) {
    RunConfig cfg = load_config(output_dir / "config.json");
    std::ifstream min(output_dir / "manifest.json");
    if (!min) throw IoError("cannot open " + (output_dir / "manifest.json").string());
    json manifest;
    try {
        min >> manifest;
    } catch (const json::parse_error& e) {
        throw IoError(std::string("cannot parse manifest: ") + e.what());
    }

    const fs::path scratch = fs::temp_directory_path() /
                             ("bursty-verify-" + config_hash(cfg) + "-" + std::to_string(::getpid()));
    fs::remove_all(scratch);
    cfg.output = scratch.string();
    VerifyReport report;
    try {
        execute(cfg);
        std::ifstream fresh_in(scratch / "manifest.json");
        json fresh;
        fresh_in >> fresh;
        const json& expected = manifest.at("files");
        const json& actual = fresh.at("files");
        for (const auto& [name, sum] : expected.items()) {
            const fs::path stored = output_dir / name;
            const bool stored_ok = fs::exists(stored) && file_checksum(stored) == sum.get<std::string>();
            if (!stored_ok || !actual.contains(name) || actual.at(name) != sum) report.mismatched.push_back(name);
        }
        for (const auto& [name, sum] : actual.items()) {
            if (!expected.contains(name)) report.mismatched.push_back(name);
        }
    } catch (...) {
        fs::remove_all(scratch);
        throw;
    }
    fs::remove_all(scratch);
    report.identical = report.mismatched.empty();
    return report;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const NumericalError*>(&e)) return 4;
    if (dynamic_cast<const IoError*>(&e) || dynamic_cast<const fs::filesystem_error*>(&e)) return 3;
    if (dynamic_cast<const ValidationError*>(&e) || dynamic_cast<const DomainError*>(&e) ||
        dynamic_cast<const std::invalid_argument*>(&e) || dynamic_cast<const std::domain_error*>(&e) ||
        dynamic_cast<const json::exception*>(&e)) {
        return 2;
    }
    return 4;
}

const char* csv_formats_help() {
    return R"(Output files (all CSV files start with '# key=value' comment lines holding
config_hash, time_unit and run parameters, followed by one header row):
  simulate  path.csv               t_s,x          scaled time, signal value
            path.csv.meta.json     parameters, seed, kappa, generator, step count
  analyze   bursts.csv             t_start,t_end,duration,peak,size   (scaled time)
            duration_pdf.csv       t_lo,t_hi,t,density,count[,series,closed]
                                   series/closed: bin averages of the analytic
                                   densities, present when analysis.eta and
                                   analysis.lambda are set
            peak_vs_duration.csv   x_lo,x_hi,x,y_mean,y_std,count
            size_vs_duration.csv   x_lo,x_hi,x,y_mean,y_std,count
            size_vs_peak.csv       x_lo,x_hi,x,y_mean,y_std,count
            psd.csv                f,S            frequency in 1/t_s, power
  fpt       fpt_series.csv         t,p            scaled time, density
            fpt_closed.csv         t,p
  returns   returns.csv            t_seconds,r    real time, one-minute return
            filtered.csv           t_seconds,abs_r_smoothed
                                   trailing moving average of |r| divided by
                                   the mean |r|
Every run also writes config.json (re-executable), summary.json and
manifest.json (SHA-256 of each artifact).
Input for analyze: CSV with header t_s,x (scaled time) or t,x / t_seconds,x
(seconds, converted with sigma_t_sq of the selected model).
Exit codes: 0 success, 2 validation, 3 I/O, 4 numerical failure or a
verification mismatch.)";
}

}  // namespace bursty
