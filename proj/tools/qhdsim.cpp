#include <cstdio>
#include <string>
#include <vector>

#include "qhd/cli.hpp"

int main(int argc, char** argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    // allow `qhdsim run ...` as sugar for `--mode run`
    if (!args.empty() && !args[0].empty() && args[0][0] != '-') {
        args[0] = "--mode=" + args[0];
    }
    try {
        const qhd::RunConfig config = qhd::parse_config(args);
        return qhd::run_main(config);
    } catch (const qhd::ConfigError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 1;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
}
