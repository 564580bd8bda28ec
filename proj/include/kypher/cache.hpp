#pragma once

#include "kypher/io.hpp"
#include "kypher/schema.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace kypher {

// Derives a graph name from a file path: strip directories, one trailing
// .gz, then one more extension ("labels.tsv.gz" -> "labels").
std::string graph_name_from_path(const std::string& path);

// Change-detection state of an imported source file. size/mtime are the fast
// check; the content hash is authoritative.
struct Fingerprint {
    std::uint64_t size = 0;
    std::int64_t mtime_ns = 0;
    std::string sha256;

    bool operator==(const Fingerprint&) const = default;
};

struct GraphDescriptor {
    std::string name;
    std::string source_path;
    Fingerprint fingerprint;
    std::vector<std::string> columns;
    std::set<std::string> indexes;
    std::uint64_t edge_count = 0;
    std::string table_stem; // basename of the backing table files
};

// Mutation counters, exposed for the verbose CLI mode and the cold/warm
// acceptance checks.
struct CacheStats {
    std::uint64_t imports = 0;       // table (re)builds
    std::uint64_t index_builds = 0;  // index file (re)builds
    std::uint64_t fresh_hits = 0;    // freshness checks answered without a rebuild
    std::uint64_t hashes = 0;        // full content hashes computed
};

// Read access to one stored graph table. Handles are cheap to copy around a
// single execution; each handle owns its file descriptors, so concurrent
// executions do not share state.
class TableHandle {
public:
    const ColumnSchema& schema() const;
    std::uint64_t edge_count() const;
    const std::string& graph_name() const;

    // Streaming scan over canonicalized cell texts.
    EdgeReader scan() const;

    bool has_index(const std::string& column) const;

    // Row ids whose `column` cell equals `cell_text` (canonical form),
    // ascending. Requires an index on the column.
    std::vector<std::uint64_t> lookup(const std::string& column, const std::string& cell_text) const;

    // Random access to one row's canonical cell texts.
    void fetch(std::uint64_t row_id, std::vector<std::string>& out) const;

private:
    friend class GraphCache;
    struct Impl;
    std::shared_ptr<Impl> impl_;
};

// Persistent, portable store of imported graphs under one directory:
// catalog.json plus <stem>.tbl / <stem>.off / <stem>.<n>.idx per graph.
// Readers take a shared lock on the directory; importing and indexing take
// an exclusive lock.
class GraphCache {
public:
    // Creates an empty cache at a fresh path, loads an existing one
    // otherwise. A path holding anything that is not a kypher cache raises
    // CorruptionError; a corrupt catalog is never silently reset.
    static GraphCache open(const std::string& path);

    GraphCache(GraphCache&&) noexcept;
    GraphCache& operator=(GraphCache&&) noexcept;
    ~GraphCache();

    const std::string& path() const;
    std::vector<std::string> names() const;
    std::optional<GraphDescriptor> find(const std::string& name) const;

    // Imports `file` under `alias` (default: basename stem). A second import
    // of an unchanged file is a no-op returning the existing descriptor.
    // Imports are atomic: on failure the previous table and catalog survive.
    GraphDescriptor import_graph(const std::string& file, std::optional<std::string> alias = {});

    // Re-checks the source fingerprint and re-imports (rebuilding all
    // existing indexes) when the content changed.
    GraphDescriptor ensure_fresh(const std::string& name);

    // Idempotently creates a persistent equality index.
    void ensure_index(const std::string& name, const std::string& column);

    TableHandle table(const std::string& name) const;

    const CacheStats& stats() const;

private:
    struct Impl;
    explicit GraphCache(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

} // namespace kypher
