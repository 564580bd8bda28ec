#include "kypher/cli.hpp"

#include "kypher/cache.hpp"
#include "kypher/error.hpp"
#include "kypher/executor.hpp"
#include "kypher/io.hpp"
#include "kypher/parser.hpp"
#include "kypher/planner.hpp"

#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;

namespace kypher::cli {

namespace {

struct Invocation {
    std::vector<InputSpec> inputs;
    std::optional<std::string> match_text;
    std::vector<std::string> opt_texts;
    std::optional<std::string> where_text;
    std::optional<std::string> return_text;
    std::optional<std::string> order_text;
    std::optional<std::uint64_t> limit;
    std::optional<std::string> output;
    std::optional<std::string> cache_path;
    std::optional<std::string> graph_dir;
    bool explain = false;
    bool verbose = false;
    bool help = false;
};

Invocation parse_args(const std::vector<std::string>& args) {
    Invocation inv;
    auto value_of = [&args](std::size_t& i, const std::string& flag) -> const std::string& {
        if (i + 1 >= args.size()) throw UsageError(flag + " needs a value");
        return args[++i];
    };

    for (std::size_t i = 0; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "-i" || a == "--input-file") {
            inv.inputs.push_back(InputSpec{value_of(i, a), std::nullopt, ""});
        } else if (a == "--as") {
            if (inv.inputs.empty()) throw UsageError("--as must follow an -i input");
            if (inv.inputs.back().alias) throw UsageError("input already has an alias");
            inv.inputs.back().alias = value_of(i, a);
        } else if (a == "--match") {
            inv.match_text = value_of(i, a);
        } else if (a == "--opt") {
            inv.opt_texts.push_back(value_of(i, a));
        } else if (a == "--where") {
            inv.where_text = value_of(i, a);
        } else if (a == "--return") {
            inv.return_text = value_of(i, a);
        } else if (a == "--order-by") {
            inv.order_text = value_of(i, a);
        } else if (a == "--limit") {
            const std::string& text = value_of(i, a);
            std::uint64_t n = 0;
            auto [p, ec] = std::from_chars(text.data(), text.data() + text.size(), n);
            if (ec != std::errc() || p != text.data() + text.size())
                throw UsageError("--limit needs a non-negative integer, got '" + text + "'");
            inv.limit = n;
        } else if (a == "-o" || a == "--out") {
            inv.output = value_of(i, a);
        } else if (a == "--cache") {
            inv.cache_path = value_of(i, a);
        } else if (a == "--graph-dir") {
            inv.graph_dir = value_of(i, a);
        } else if (a == "--explain") {
            inv.explain = true;
        } else if (a == "--verbose") {
            inv.verbose = true;
        } else if (a == "-h" || a == "--help") {
            inv.help = true;
        } else {
            throw UsageError("unknown flag '" + a + "'");
        }
    }
    return inv;
}

// Bare input names resolve through --graph-dir, then through graphs already
// in the cache; anything with a path separator or an existing file is a
// plain path.
std::string resolve_input(const InputSpec& input, const std::optional<std::string>& graph_dir,
                          const GraphCache& cache) {
    const std::string& given = input.path;
    if (fs::exists(given)) return given;
    bool bare = given.find('/') == std::string::npos;
    if (bare && graph_dir) {
        for (const char* suffix : {"", ".tsv", ".tsv.gz", ".kgtk", ".kgtk.gz"}) {
            fs::path candidate = fs::path(*graph_dir) / (given + suffix);
            if (fs::exists(candidate)) return candidate.string();
        }
    }
    if (bare) {
        std::string name = input.alias.value_or(given);
        if (cache.find(name)) return ""; // cached graph, no source needed here
    }
    throw IoError("input '" + given + "' not found");
}

void write_results(QueryResult& result, const std::optional<std::string>& output,
                   std::ostream& out, RunStats& stats) {
    ColumnSchema schema = ColumnSchema::from_columns(result.columns, false);
    Row row;
    if (!output || *output == "-") {
        EdgeWriter writer = EdgeWriter::to_stream(out, schema);
        while (result.rows->next(row)) writer.write(row);
        stats.rows_out = writer.close();
        return;
    }
    // stage next to the target so the suffix (and gzip choice) is preserved
    // and failures never leave a partial result behind
    fs::path target(*output);
    fs::path part = target.parent_path() / (".kypher-part-" + target.filename().string());
    try {
        EdgeWriter writer = EdgeWriter::open_path(part.string(), schema);
        while (result.rows->next(row)) writer.write(row);
        stats.rows_out = writer.close();
        fs::rename(part, target);
    } catch (...) {
        std::error_code ec;
        fs::remove(part, ec);
        throw;
    }
}

int run_checked(const std::vector<std::string>& args, RunStats* stats_out, std::ostream& out,
                std::ostream& err) {
    Invocation inv = parse_args(args);
    if (inv.help) {
        out << usage();
        return 0;
    }
    if (inv.inputs.empty()) throw UsageError("at least one -i input is required");
    if (!inv.match_text) throw UsageError("--match is required");

    std::string cache_path = inv.cache_path ? *inv.cache_path : default_cache_path();
    GraphCache cache = GraphCache::open(cache_path);
    RunStats stats;

    // import or refresh every input
    for (InputSpec& input : inv.inputs) {
        std::string path = resolve_input(input, inv.graph_dir, cache);
        CacheStats before = cache.stats();
        GraphDescriptor desc;
        if (path.empty()) {
            input.name = input.alias.value_or(input.path);
            desc = cache.ensure_fresh(input.name);
        } else {
            input.path = path;
            desc = cache.import_graph(path, input.alias);
            input.name = desc.name;
        }
        bool rebuilt = cache.stats().imports > before.imports;
        if (inv.verbose)
            err << "kypher: graph " << desc.name << (rebuilt ? " imported (" : " cached (")
                << desc.edge_count << " edges)\n";
    }

    // default return list: every match variable, in binding order
    std::string return_text;
    if (inv.return_text) {
        return_text = *inv.return_text;
    } else {
        QuerySpec probe;
        probe.match = parse_match(*inv.match_text);
        for (const std::string& var : bound_variables(probe)) {
            if (!return_text.empty()) return_text += ", ";
            return_text += var;
        }
        if (return_text.empty()) throw UsageError("--return is required for variable-free patterns");
    }

    QuerySpec spec = assemble_query(inv.inputs, *inv.match_text, inv.opt_texts, inv.where_text,
                                    return_text, inv.order_text, inv.limit);
    ResolvedQuery resolved = bind_graphs(spec, cache);
    LogicalPlan plan = compile(resolved);
    for (const std::string& warning : plan.warnings) err << "kypher: warning: " << warning << "\n";

    if (inv.explain) {
        out << explain(plan);
        return 0;
    }

    for (const auto& [graph, column] : required_indexes(plan)) {
        CacheStats before = cache.stats();
        cache.ensure_index(graph, column);
        if (inv.verbose && cache.stats().index_builds > before.index_builds)
            err << "kypher: built index " << graph << "." << column << "\n";
    }

    QueryResult result = execute(plan, cache);
    write_results(result, inv.output, out, stats);

    stats.imports = cache.stats().imports;
    stats.index_builds = cache.stats().index_builds;
    stats.fresh_hits = cache.stats().fresh_hits;
    if (inv.verbose)
        err << "kypher: imports=" << stats.imports << " index_builds=" << stats.index_builds
            << " rows=" << stats.rows_out << "\n";
    if (stats_out) *stats_out = stats;
    return 0;
}

} // namespace

std::string usage() {
    return "usage: kypher -i FILE [--as NAME] [-i FILE ...] --match PATTERN\n"
           "              [--opt PATTERN ...] [--where EXPR] [--return ITEMS]\n"
           "              [--order-by KEYS] [--limit N] [-o FILE]\n"
           "              [--cache DIR] [--graph-dir DIR] [--explain] [--verbose]\n"
           "\n"
           "Executes a Kypher pattern query over KGTK TSV edge files through a\n"
           "persistent, auto-indexing graph cache. Inputs are file paths, or bare\n"
           "graph names resolved against --graph-dir or the cache. Output is KGTK\n"
           "TSV on standard output, or to -o FILE (.gz compresses).\n"
           "\n"
           "The cache directory comes from --cache, else $KYPHER_GRAPH_CACHE, else\n"
           "~/.kypher/graph-cache.\n";
}

std::string default_cache_path() {
    if (const char* env = std::getenv("KYPHER_GRAPH_CACHE"); env && *env) return env;
    const char* home = std::getenv("HOME");
    fs::path base = home && *home ? fs::path(home) : fs::temp_directory_path();
    return (base / ".kypher" / "graph-cache").string();
}

int run(const std::vector<std::string>& args, RunStats* stats, std::ostream& out,
        std::ostream& err) {
    try {
        return run_checked(args, stats, out, err);
    } catch (const UsageError& e) {
        err << "kypher: " << e.what() << "\n" << usage();
        return e.exit_code();
    } catch (const Error& e) {
        err << "kypher: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        err << "kypher: " << e.what() << "\n";
        return static_cast<int>(ErrorCode::Io);
    }
}

int run_main(int argc, char** argv) {
    std::vector<std::string> args(argv + 1, argv + argc);
    return run(args, nullptr, std::cout, std::cerr);
}

} // namespace kypher::cli
