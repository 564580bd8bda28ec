#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace kypher::cli {

// Counters observed by one invocation; the basis of the verbose output and
// the cold/warm checks.
struct RunStats {
    std::uint64_t imports = 0;
    std::uint64_t index_builds = 0;
    std::uint64_t fresh_hits = 0;
    std::uint64_t rows_out = 0;
};

// Runs one query invocation. `args` excludes the program name. Returns the
// process exit code: 0 success, 1 usage, 2 parse/semantic, 3 I/O, 4 cache
// corruption. Results go to `out` unless -o names a file; diagnostics go to
// `err` as a single line per failure.
int run(const std::vector<std::string>& args, RunStats* stats, std::ostream& out,
        std::ostream& err);

// main() adapter around run().
int run_main(int argc, char** argv);

std::string usage();

// Cache directory resolution: --cache flag, then KYPHER_GRAPH_CACHE, then
// ~/.kypher/graph-cache.
std::string default_cache_path();

} // namespace kypher::cli
