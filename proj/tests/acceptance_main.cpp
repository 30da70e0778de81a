// Validation suite runner: one pass/fail line per criterion, nonzero exit on
// any failure. The same checks back the CLI `validate` subcommand.
#include <cstdio>
#include <cstdlib>
#include <cstring>

#include "sfde/validate.hpp"

int main(int argc, char** argv) {
    sfde::ValidateOptions opt;
    for (int i = 1; i < argc; ++i) {
        if (std::strcmp(argv[i], "--n-paths") == 0 && i + 1 < argc)
            opt.n_paths_override = std::strtoull(argv[++i], nullptr, 10);
        else if (std::strcmp(argv[i], "--seed") == 0 && i + 1 < argc)
            opt.seed = std::strtoull(argv[++i], nullptr, 10);
        else if (std::strcmp(argv[i], "--threads") == 0 && i + 1 < argc)
            opt.threads = std::atoi(argv[++i]);
    }

    auto results = sfde::run_acceptance(opt);
    for (const auto& r : results) {
        std::printf("%s  %-34s observed=%-13.6g allowed=%-13.6g %s\n",
                    r.pass ? "PASS" : "FAIL", r.id.c_str(), r.observed, r.allowed,
                    r.detail.c_str());
    }
    return sfde::all_passed(results) ? 0 : 1;
}
