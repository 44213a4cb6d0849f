// polylin: run experiment grids over the baseline, PolyLin and MRPolyLin
// protocols and write a CSV or JSON report. Exit status is 0 when every row
// matches the sequential iteration, 1 when some row does not, 2 on usage or
// configuration errors.

#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "polylin/bench.hpp"

namespace {

using polylin::ConfigError;
using polylin::ExperimentConfig;

struct Overrides {
    std::optional<std::string> strategy;
    std::optional<std::size_t> N;
    std::optional<std::size_t> m;
    std::optional<std::size_t> n;
    std::optional<std::size_t> ell;
    std::optional<std::size_t> P;
    std::optional<std::size_t> K;
    std::optional<double> beta1;
    std::optional<double> beta2;
    std::optional<double> compute_rate;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> problem_seed;
    std::optional<double> rho;
    std::optional<std::string> cast;
    std::optional<std::string> backend;
    std::optional<std::string> points;
    std::optional<std::string> straggler;
    std::optional<double> shift;
    std::optional<double> rate;
    std::optional<double> fail_prob;
    std::vector<std::size_t> failed_workers;
    std::optional<double> epsilon;
    std::optional<std::string> out;
    std::optional<std::string> format;
    bool no_pad = false;
};

void apply(const Overrides& o, ExperimentConfig& cfg) {
    nlohmann::json patch = nlohmann::json::object();
    if (o.backend) patch["backend"] = *o.backend;
    if (o.points) patch["points"] = *o.points;
    if (o.format) patch["format"] = *o.format;
    if (!patch.empty()) {
        const ExperimentConfig parsed = ExperimentConfig::from_json(patch);
        if (o.backend) cfg.backend = parsed.backend;
        if (o.points) cfg.points = parsed.points;
        if (o.format) cfg.format = parsed.format;
    }
    if (o.out) cfg.output = *o.out;
    if (o.no_pad) cfg.pad = false;
    if (o.epsilon) cfg.epsilon = *o.epsilon;

    if (o.N || o.rho || o.problem_seed || o.cast) {
        if (!cfg.generator) throw ConfigError("--N, --rho, --problem-seed and --cast need a generated problem");
        if (o.N) cfg.generator->N = *o.N;
        if (o.rho) cfg.generator->target_rho = *o.rho;
        if (o.problem_seed) cfg.generator->seed = *o.problem_seed;
        if (o.cast) cfg.generator->cast = polylin::parse_cast(*o.cast);
    }

    if (o.beta1) cfg.beta1 = *o.beta1;
    if (o.beta2) cfg.beta2 = *o.beta2;
    if (o.compute_rate) cfg.compute_rate = *o.compute_rate;
    if (o.seed) cfg.seeds = {*o.seed};
    if (o.straggler) cfg.straggler.kind = polylin::parse_straggler_kind(*o.straggler);
    if (o.shift) cfg.straggler.shift = *o.shift;
    if (o.rate) cfg.straggler.rate = *o.rate;
    if (o.fail_prob) cfg.straggler.fail_prob = *o.fail_prob;
    if (!o.failed_workers.empty()) cfg.straggler.failed_workers = {o.failed_workers.begin(), o.failed_workers.end()};

    if (o.strategy) {
        // A one-off run replaces the configured grid.
        nlohmann::json entry = {{"strategy", *o.strategy}};
        entry["m"] = o.m.value_or(2);
        entry["n"] = o.n.value_or(4);
        entry["ell"] = o.ell.value_or(1);
        if (!o.P) throw ConfigError("--strategy needs --P");
        entry["P"] = *o.P;
        entry["K"] = o.K.value_or(0);
        cfg.grid = polylin::expand_strategy_entry(entry);
    } else {
        for (auto& p : cfg.grid) {
            if (o.m) p.m = *o.m;
            if (o.n) p.n = *o.n;
            if (o.ell) p.ell = *o.ell;
            if (o.P) p.P = *o.P;
            if (o.K) p.K = *o.K;
        }
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Coded distributed iterative solver: experiment runner"};
    std::string config_path;
    Overrides o;
    bool print_config = false;

    app.add_option("--config", config_path, "JSON experiment config")->check(CLI::ExistingFile);
    app.add_option("--strategy", o.strategy, "baseline | polylin | mrpolylin (replaces the config grid)");
    app.add_option("--N", o.N, "generated problem dimension");
    app.add_option("--m", o.m, "split factor");
    app.add_option("--n", o.n, "iteration count");
    app.add_option("--ell", o.ell, "MRPolyLin phase count");
    app.add_option("--P", o.P, "worker count");
    app.add_option("--K", o.K, "responders per round (default: derived)");
    app.add_option("--beta1", o.beta1, "cost per communication round");
    app.add_option("--beta2", o.beta2, "cost per scalar word");
    app.add_option("--compute-rate", o.compute_rate, "simulated seconds per multiply");
    app.add_option("--seed", o.seed, "cluster RNG seed");
    app.add_option("--problem-seed", o.problem_seed, "generator RNG seed");
    app.add_option("--rho", o.rho, "target spectral radius of the generated A");
    app.add_option("--cast", o.cast, "raw | jacobi | gd");
    app.add_option("--backend", o.backend, "exact | float");
    app.add_option("--points", o.points, "default | chebyshev evaluation points");
    app.add_option("--straggler", o.straggler, "none | shifted_exponential | fail");
    app.add_option("--shift", o.shift, "shifted exponential: minimum delay");
    app.add_option("--rate", o.rate, "shifted exponential: rate");
    app.add_option("--fail-prob", o.fail_prob, "fail: per-round failure probability");
    app.add_option("--fail-workers", o.failed_workers, "workers that never respond");
    app.add_option("--epsilon", o.epsilon, "choose n from the error bound for this target error");
    app.add_flag("--no-pad", o.no_pad, "reject dimensions that need zero padding");
    app.add_option("--out", o.out, "report path ('-' for stdout)");
    app.add_option("--format", o.format, "csv | json");
    app.add_flag("--print-config", print_config, "print the resolved config and exit");

    CLI11_PARSE(app, argc, argv);

    try {
        ExperimentConfig cfg;
        if (!config_path.empty()) {
            std::ifstream in(config_path);
            nlohmann::json j;
            try {
                in >> j;
            } catch (const nlohmann::json::exception& e) {
                throw ConfigError(config_path + ": " + e.what());
            }
            cfg = ExperimentConfig::from_json(j);
        }
        apply(o, cfg);
        if (print_config) {
            std::cout << cfg.to_json().dump(2) << '\n';
            return 0;
        }

        const auto rows = polylin::run_experiment(cfg);
        polylin::emit_report(rows, cfg.format, cfg.output);

        std::size_t failed = 0;
        for (const auto& r : rows)
            if (!r.oracle_pass) ++failed;
        if (failed > 0) {
            std::cerr << failed << " of " << rows.size() << " rows differ from the sequential iteration\n";
            return 1;
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
