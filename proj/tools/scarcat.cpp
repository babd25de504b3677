#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <Eigen/Core>

#include "scarcat/errors.hpp"
#include "scarcat/parallel.hpp"
#include "scarcat/scenarios.hpp"

int main(int argc, char **argv) {
    CLI::App app{"Scar and cat-state diagnostics for spin chains"};
    std::string command, config_path;
    app.add_option("command", command, "scarcheck | evolve | omega | fcs | quantumness | spectrum | dualcheck | u1check | catreport")
        ->required()
        ->check(CLI::IsMember(scarcat::command_names()));
    app.add_option("config", config_path, "INI configuration file")->required();
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    // Results must not depend on the thread count, so Eigen stays serial.
    Eigen::setNbThreads(1);
    if (const char *env = std::getenv("SCARCAT_THREADS")) {
        try {
            const int n = std::stoi(env);
            if (n < 1) throw std::invalid_argument(env);
            scarcat::detail::set_thread_count(n);
        } catch (const std::exception &) {
            std::cerr << "error: SCARCAT_THREADS must be a positive integer\n";
            return 2;
        }
    }

    try {
        const auto config = scarcat::load_config(config_path);
        std::cout << command << ": " << scarcat::run_command(command, config) << "\n";
        return 0;
    } catch (const scarcat::InvalidArgument &e) {
        std::cerr << "invalid argument: " << e.what() << "\n";
        return 2;
    } catch (const scarcat::ConvergenceError &e) {
        std::cerr << "convergence failure: " << e.what() << "\n";
        return 3;
    } catch (const scarcat::InvariantViolation &e) {
        std::cerr << "invariant violation: " << e.what() << "\n";
        return 4;
    }
}
