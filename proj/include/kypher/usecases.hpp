#pragma once

#include "kypher/ast.hpp"
#include "kypher/oracle.hpp"

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace kypher {

// One canned query of the regression corpus: the seven production-shaped
// queries (name counting, class instance counting, film slice ranking,
// coauthor networks, identifier mapping, infobox extraction).
struct UseCase {
    struct Input {
        std::string file;  // corpus file name, or a prior query's output
        bool from_output = false;
        std::optional<std::string> alias;
    };

    std::string key;   // stable slug, e.g. "first-names"
    std::string title; // report row label, e.g. "First names"
    std::vector<Input> inputs;
    std::string match;
    std::vector<std::string> opts;
    std::optional<std::string> where;
    std::string ret;
    std::optional<std::string> order;
    std::optional<std::uint64_t> limit;
    std::string output; // output file name
};

const std::vector<UseCase>& use_cases();

// Resolves a use case against a corpus directory (and the directory holding
// chained outputs) into CLI arguments and a parsed QuerySpec.
std::vector<std::string> usecase_argv(const UseCase& uc, const std::string& corpus_dir,
                                      const std::string& out_dir, const std::string& cache_path,
                                      bool verbose = false);
QuerySpec usecase_spec(const UseCase& uc, const std::string& corpus_dir,
                       const std::string& out_dir);

// Loads the spec's inputs into oracle graphs, keyed by graph name.
std::map<std::string, OracleGraph> load_oracle_graphs(const QuerySpec& spec);

// Compares an engine result file against the oracle. Order-insensitive
// multiset equality; under a limit, validates the sorted-prefix contract
// (size, key sequence, per-key membership) against the unlimited oracle
// result. Returns a description of the first difference, or nothing.
std::optional<std::string> compare_with_oracle(const QuerySpec& spec,
                                               const std::map<std::string, OracleGraph>& graphs,
                                               const std::string& result_file);

struct UsecaseReport {
    struct Entry {
        std::string title;
        double cold_seconds = 0;
        double warm_seconds = 0;
        std::uint64_t rows = 0;
        bool oracle_checked = false;
        bool ok = true;
        std::string detail;
    };
    std::vector<Entry> entries;
};

// Runs all use cases through the CLI twice (cold cache, then warm),
// optionally checking each result against the oracle. Chained inputs use
// the outputs of earlier queries.
UsecaseReport run_usecases(const std::string& corpus_dir, const std::string& out_dir,
                           const std::string& cache_path, bool check_oracle, std::ostream& log);

std::string format_report(const UsecaseReport& report);     // human-readable table
std::string format_report_tsv(const UsecaseReport& report); // machine-readable

} // namespace kypher
