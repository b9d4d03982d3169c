#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "mlenkf/cli.hpp"
#include "mlenkf/config.hpp"
#include "mlenkf/kernels.hpp"

int main(int argc, char** argv) {
    CLI::App app{"Multilevel ensemble Kalman filtering for the stochastic heat equation"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "run a convergence study and write CSV output");
    std::string config_path, out_dir, example, method, solver, eps, realizations, seed, n_ref, jobs;
    run->add_option("--config", config_path, "key = value configuration file")->required();
    run->add_option("--out", out_dir, "output directory")->required();
    run->add_option("--example", example, "1 | 2");
    run->add_option("--method", method, "enkf | mlenkf");
    run->add_option("--solver", solver, "exact | expeuler");
    run->add_option("--eps", eps, "comma-separated target accuracies");
    run->add_option("--realizations", realizations, "filter realizations per epsilon");
    run->add_option("--seed", seed, "master seed");
    run->add_option("--n-ref", n_ref, "reference truncation dimension");
    run->add_option("--jobs", jobs, "concurrent realizations");

    auto* verify = app.add_subcommand("verify", "run the property checks");
    std::uint64_t verify_seed = mlenkf::VerifyOptions{}.seed;
    std::string fault;
    verify->add_option("--seed", verify_seed, "seed for the statistical checks");
    verify->add_option("--inject-fault", fault, "positive-part: corrupt positive_part (self-test)")
        ->check(CLI::IsMember({"positive-part"}));

    auto* slope = app.add_subcommand("slope", "fit MSE-vs-cost slopes from results.csv");
    std::string in_path;
    slope->add_option("--in", in_path, "results.csv")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) {
            mlenkf::ExperimentOptions options = mlenkf::load_config(config_path);
            const std::pair<const char*, const std::string*> overrides[] = {
                {"example", &example}, {"method", &method}, {"solver", &solver},
                {"eps", &eps},         {"realizations", &realizations}, {"seed", &seed},
                {"n_ref", &n_ref},     {"jobs", &jobs}};
            for (const auto& [key, value] : overrides) {
                if (!value->empty()) mlenkf::apply_setting(options, key, *value);
            }
            std::cerr << "kernels: " << mlenkf::kernels::isa_name(mlenkf::kernels::active().isa) << '\n';
            mlenkf::run_command(options, out_dir, std::cerr);
            return 0;
        }
        if (*verify) {
            mlenkf::VerifyOptions options;
            options.seed = verify_seed;
            options.inject_positive_part_fault = fault == "positive-part";
            return mlenkf::verify_command(options, std::cout);
        }
        std::ifstream in(in_path);
        if (!in) {
            std::cerr << "error: cannot open " << in_path << '\n';
            return 1;
        }
        mlenkf::slope_command(in, std::cout);
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
