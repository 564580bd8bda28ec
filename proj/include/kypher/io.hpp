#pragma once

#include "kypher/schema.hpp"

#include <iosfwd>
#include <memory>
#include <string>

namespace kypher {

// Streaming reader for KGTK TSV edge files. Holds one record at a time;
// memory use does not depend on file length. Paths are opened through zlib,
// which passes plain files through untouched and inflates gzip transparently
// (detected by magic bytes, not just the .gz suffix).
class EdgeReader {
public:
    // `require_roles`: reject headers missing node1/label/node2.
    static EdgeReader open_path(const std::string& path, bool require_roles = true);
    static EdgeReader from_stream(std::istream& in, bool require_roles = true);

    EdgeReader(EdgeReader&&) noexcept;
    EdgeReader& operator=(EdgeReader&&) noexcept;
    ~EdgeReader();

    const ColumnSchema& schema() const;

    // Fills `out` with the next record; false at end of input. Throws
    // ParseError (with the 1-based line number) on malformed rows.
    bool next(Record& out);

    // Raw variant: canonicalized cell texts instead of parsed values.
    bool next_raw(std::vector<std::string>& out);

    std::uint64_t line_number() const;

private:
    struct Impl;
    explicit EdgeReader(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

// Streaming writer producing LF-terminated canonical KGTK TSV. A path ending
// in .gz is gzip-compressed; "-" writes to standard output.
class EdgeWriter {
public:
    static EdgeWriter open_path(const std::string& path, const ColumnSchema& schema);
    static EdgeWriter to_stream(std::ostream& out, const ColumnSchema& schema);

    EdgeWriter(EdgeWriter&&) noexcept;
    EdgeWriter& operator=(EdgeWriter&&) noexcept;
    ~EdgeWriter();

    void write(const Record& row);
    void write_raw(const std::vector<std::string>& cells);

    // Flushes and closes; returns the number of data rows written.
    std::uint64_t close();

private:
    struct Impl;
    explicit EdgeWriter(std::unique_ptr<Impl> impl);
    std::unique_ptr<Impl> impl_;
};

} // namespace kypher
