// bursty: simulate bursty SDE signals, analyse bursts, tabulate duration
// densities and generate modulated return series.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "bursty/cli_io.hpp"
#include "bursty/errors.hpp"

namespace {

struct Overrides {
    std::string config;
    std::string out;
    std::optional<std::string> model;
    std::optional<double> eta, lambda, kappa, threshold, t_max, t_min, x0, burn_in;
    std::optional<std::uint64_t> seed, bursts, steps, noise_seed;
    std::optional<std::size_t> realizations;
    std::optional<std::string> input;
    bool verify = false;
};

void add_common(CLI::App* sub, Overrides& o) {
    sub->add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
    sub->add_option("-o,--out", o.out, "output directory");
    sub->add_option("--model", o.model, "simple or complex")->check(CLI::IsMember({"simple", "complex"}));
    sub->add_option("--eta", o.eta, "multiplicative exponent eta (analyze: overlay parameters)");
    sub->add_option("--lambda", o.lambda, "power-law exponent lambda");
    sub->add_option("--threshold", o.threshold, "burst threshold h");
    sub->add_flag("--verify", o.verify, "re-run into a scratch directory and compare checksums");
}

void add_sim(CLI::App* sub, Overrides& o) {
    sub->add_option("--kappa", o.kappa, "step-size parameter kappa");
    sub->add_option("--seed", o.seed, "seed of the SDE noise");
    sub->add_option("--x0", o.x0, "initial value");
    sub->add_option("--burn-in", o.burn_in, "scaled time discarded before recording");
    auto* b = sub->add_option("--bursts", o.bursts, "stop after this many bursts above the threshold");
    auto* t = sub->add_option("--t-max", o.t_max, "stop at this scaled time");
    auto* s = sub->add_option("--steps", o.steps, "stop after this many steps");
    b->excludes(t)->excludes(s);
    t->excludes(s);
}

bursty::RunConfig build_config(const std::string& subcommand, const Overrides& o) {
    bursty::RunConfig c = o.config.empty() ? bursty::RunConfig{} : bursty::load_config(o.config);
    c.subcommand = subcommand;
    if (!o.out.empty()) c.output = o.out;
    if (o.model) c.model = *o.model == "simple" ? bursty::Model::Simple : bursty::Model::Complex;
    auto set_model = [&](auto field, double v) {
        if (c.model == bursty::Model::Simple) {
            c.simple.*field.first = v;
        } else {
            c.complex.*field.second = v;
        }
    };
    if (o.eta) set_model(std::pair{&bursty::SdeParams::eta, &bursty::ComplexSdeParams::eta}, *o.eta);
    if (o.lambda) set_model(std::pair{&bursty::SdeParams::lambda, &bursty::ComplexSdeParams::lambda}, *o.lambda);
    if (subcommand == "analyze") {
        if (o.eta) c.analysis.eta = *o.eta;
        if (o.lambda) c.analysis.lambda = *o.lambda;
    }
    if (o.threshold) c.threshold = *o.threshold;
    if (o.kappa) c.sim.kappa = *o.kappa;
    if (o.seed) c.sim.seed = *o.seed;
    if (o.x0) c.sim.x0 = *o.x0;
    if (o.burn_in) c.sim.burn_in = *o.burn_in;
    if (o.bursts) c.sim.stop = bursty::StopRule::after_bursts(*o.bursts, c.threshold);
    if (o.t_max) c.sim.stop = bursty::StopRule::at_time(*o.t_max);
    if (o.steps) c.sim.stop = bursty::StopRule::after_steps(*o.steps);
    if (c.sim.stop.kind == bursty::StopRule::Kind::Bursts) c.sim.stop.threshold = c.threshold;
    if (o.realizations) c.realizations = *o.realizations;
    if (o.noise_seed) c.noise_seed = *o.noise_seed;
    if (o.input) c.input = *o.input;
    if (o.t_min) {
        c.analysis.t_min = *o.t_min;
        c.fpt.t_min = *o.t_min;
    }
    return c;
}

int report_verify(const std::string& dir) {
    const bursty::VerifyReport r = bursty::verify_run(dir);
    if (r.identical) {
        std::printf("verify: %s reproduced bit for bit\n", dir.c_str());
        return 0;
    }
    std::printf("verify: %s differs in", dir.c_str());
    for (const auto& f : r.mismatched) std::printf(" %s", f.c_str());
    std::printf("\n");
    return 4;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Bursty SDE signals: simulation, burst statistics and first-passage densities"};
    app.footer(bursty::csv_formats_help());
    app.require_subcommand(1);

    Overrides o;
    std::string verify_dir;
    std::optional<double> fpt_nu, fpt_hy;

    auto* sim = app.add_subcommand("simulate", "integrate the SDE and write the sampled path");
    add_common(sim, o);
    add_sim(sim, o);
    sim->add_option("--realizations", o.realizations, "independent runs with seeds seed, seed+1, ...");

    auto* ana = app.add_subcommand("analyze", "burst statistics, duration density, scatter laws and spectrum");
    add_common(ana, o);
    ana->add_option("-i,--input", o.input, "CSV series with header t_s,x or t_seconds,x");
    ana->add_option("--t-min", o.t_min, "lower duration cutoff in scaled time (default kappa^2)");

    auto* fpt = app.add_subcommand("fpt", "tabulate the analytic burst duration densities");
    add_common(fpt, o);
    fpt->add_option("--kappa", o.kappa, "kappa, sets the default t_min = kappa^2");
    fpt->add_option("--t-min", o.t_min, "lower duration cutoff in scaled time");
    fpt->add_option("--nu", fpt_nu, "Bessel index (default from eta and lambda)");
    fpt->add_option("--h-y", fpt_hy, "threshold in Lamperti coordinates");

    auto* ret = app.add_subcommand("returns", "double stochastic return series and its filtered |r|");
    add_common(ret, o);
    add_sim(ret, o);
    ret->add_option("--noise-seed", o.noise_seed, "seed of the q-Gaussian draws");

    auto* ver = app.add_subcommand("verify", "re-run a finished output directory and compare checksums");
    ver->add_option("dir", verify_dir, "output directory holding config.json and manifest.json")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        if (ver->parsed()) return report_verify(verify_dir);
        CLI::App* chosen = app.get_subcommands().front();
        bursty::RunConfig cfg = build_config(chosen->get_name(), o);
        if (fpt_nu) cfg.fpt.nu = *fpt_nu;
        if (fpt_hy) cfg.fpt.h_y = *fpt_hy;
        const bursty::RunResult res = bursty::execute(cfg);
        std::cout << res.summary.dump(2) << '\n';
        if (o.verify) return report_verify(cfg.output);
        return 0;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "bursty: %s\n", e.what());
        return bursty::exit_code_for(e);
    }
}
