#include "kypher/io.hpp"

#include "kypher/error.hpp"

#include <zlib.h>

#include <cstring>
#include <istream>
#include <ostream>
#include <set>

namespace kypher {

ColumnSchema ColumnSchema::from_columns(std::vector<std::string> columns, bool require_roles) {
    ColumnSchema s;
    s.columns = std::move(columns);
    std::set<std::string> seen;
    for (std::size_t i = 0; i < s.columns.size(); ++i) {
        const std::string& name = s.columns[i];
        if (!seen.insert(name).second)
            throw SemanticError("duplicate column name in header: " + name);
        if (name == "node1") s.node1 = static_cast<int>(i);
        else if (name == "label") s.label = static_cast<int>(i);
        else if (name == "node2") s.node2 = static_cast<int>(i);
        else if (name == "id") s.id = static_cast<int>(i);
    }
    if (require_roles && (s.node1 < 0 || s.label < 0 || s.node2 < 0)) {
        std::string missing;
        if (s.node1 < 0) missing += " node1";
        if (s.label < 0) missing += " label";
        if (s.node2 < 0) missing += " node2";
        throw SemanticError("edge file header is missing required column(s):" + missing);
    }
    return s;
}

int ColumnSchema::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    return -1;
}

namespace {

// Buffered line source; implementations differ only in how bytes arrive.
class LineSource {
public:
    virtual ~LineSource() = default;

    // Strips the trailing LF and an optional CR. False at end of input.
    bool getline(std::string& line) {
        line.clear();
        while (true) {
            if (pos_ == len_) {
                if (!fill()) break;
            }
            const char* nl = static_cast<const char*>(std::memchr(buf_ + pos_, '\n', len_ - pos_));
            if (nl) {
                line.append(buf_ + pos_, nl);
                pos_ = static_cast<std::size_t>(nl - buf_) + 1;
                if (!line.empty() && line.back() == '\r') line.pop_back();
                return true;
            }
            line.append(buf_ + pos_, buf_ + len_);
            pos_ = len_;
        }
        if (line.empty()) return false;
        if (line.back() == '\r') line.pop_back();
        return true;
    }

protected:
    virtual bool fill() = 0;

    char buf_[1 << 16];
    std::size_t pos_ = 0;
    std::size_t len_ = 0;
};

class GzFileSource final : public LineSource {
public:
    explicit GzFileSource(const std::string& path) : path_(path) {
        file_ = gzopen(path.c_str(), "rb");
        if (!file_) throw IoError("cannot open " + path);
        gzbuffer(file_, 1 << 17);
    }
    ~GzFileSource() override {
        if (file_) gzclose(file_);
    }

private:
    bool fill() override {
        int n = gzread(file_, buf_, sizeof buf_);
        if (n < 0) {
            int errnum = 0;
            const char* msg = gzerror(file_, &errnum);
            throw IoError("read error on " + path_ + ": " + (msg ? msg : "unknown"));
        }
        pos_ = 0;
        len_ = static_cast<std::size_t>(n);
        return len_ > 0;
    }

    std::string path_;
    gzFile file_ = nullptr;
};

// std::istream source with gzip detection by magic bytes.
class StreamSource final : public LineSource {
public:
    explicit StreamSource(std::istream& in) : in_(in) {
        int c0 = in_.peek();
        if (c0 == 0x1f) {
            gzip_ = true;
            std::memset(&z_, 0, sizeof z_);
            if (inflateInit2(&z_, 16 + MAX_WBITS) != Z_OK)
                throw IoError("inflateInit failed");
        }
    }
    ~StreamSource() override {
        if (gzip_) inflateEnd(&z_);
    }

private:
    bool fill() override {
        pos_ = 0;
        if (!gzip_) {
            in_.read(buf_, sizeof buf_);
            len_ = static_cast<std::size_t>(in_.gcount());
            return len_ > 0;
        }
        while (true) {
            if (z_.avail_in == 0 && !in_eof_) {
                in_.read(in_buf_, sizeof in_buf_);
                z_.avail_in = static_cast<uInt>(in_.gcount());
                z_.next_in = reinterpret_cast<Bytef*>(in_buf_);
                if (z_.avail_in == 0) in_eof_ = true;
            }
            z_.avail_out = sizeof buf_;
            z_.next_out = reinterpret_cast<Bytef*>(buf_);
            int rc = inflate(&z_, Z_NO_FLUSH);
            if (rc != Z_OK && rc != Z_STREAM_END && rc != Z_BUF_ERROR)
                throw IoError("gzip stream is corrupt");
            len_ = sizeof buf_ - z_.avail_out;
            if (len_ > 0) return true;
            if (rc == Z_STREAM_END || (in_eof_ && z_.avail_in == 0)) return false;
        }
    }

    std::istream& in_;
    bool gzip_ = false;
    bool in_eof_ = false;
    z_stream z_{};
    char in_buf_[1 << 16];
};

void split_tabs(const std::string& line, std::vector<std::string>& out) {
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.emplace_back(line, start);
            return;
        }
        out.emplace_back(line, start, tab - start);
        start = tab + 1;
    }
}

} // namespace

struct EdgeReader::Impl {
    std::unique_ptr<LineSource> source;
    ColumnSchema schema;
    std::uint64_t line = 0;
    std::string linebuf;
    std::vector<std::string> cells;
    std::string origin;

    void read_header(bool require_roles) {
        if (!source->getline(linebuf))
            throw SemanticError("empty edge file" + origin_suffix());
        ++line;
        split_tabs(linebuf, cells);
        schema = ColumnSchema::from_columns(cells, require_roles);
    }

    std::string origin_suffix() const { return origin.empty() ? "" : " in " + origin; }

    bool next_cells() {
        if (!source->getline(linebuf)) return false;
        ++line;
        split_tabs(linebuf, cells);
        if (cells.size() != schema.size())
            throw ParseError("line " + std::to_string(line) + origin_suffix() + ": expected " +
                             std::to_string(schema.size()) + " columns, found " +
                             std::to_string(cells.size()));
        return true;
    }
};

EdgeReader::EdgeReader(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
EdgeReader::EdgeReader(EdgeReader&&) noexcept = default;
EdgeReader& EdgeReader::operator=(EdgeReader&&) noexcept = default;
EdgeReader::~EdgeReader() = default;

EdgeReader EdgeReader::open_path(const std::string& path, bool require_roles) {
    auto impl = std::make_unique<Impl>();
    impl->source = std::make_unique<GzFileSource>(path);
    impl->origin = path;
    impl->read_header(require_roles);
    return EdgeReader(std::move(impl));
}

EdgeReader EdgeReader::from_stream(std::istream& in, bool require_roles) {
    auto impl = std::make_unique<Impl>();
    impl->source = std::make_unique<StreamSource>(in);
    impl->read_header(require_roles);
    return EdgeReader(std::move(impl));
}

const ColumnSchema& EdgeReader::schema() const { return impl_->schema; }
std::uint64_t EdgeReader::line_number() const { return impl_->line; }

bool EdgeReader::next(Record& out) {
    if (!impl_->next_cells()) return false;
    out.clear();
    out.reserve(impl_->cells.size());
    try {
        for (const std::string& cell : impl_->cells) out.push_back(Value::parse(cell));
    } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(impl_->line) + impl_->origin_suffix() + ": " +
                         e.what());
    }
    return true;
}

bool EdgeReader::next_raw(std::vector<std::string>& out) {
    if (!impl_->next_cells()) return false;
    out.clear();
    out.reserve(impl_->cells.size());
    try {
        for (const std::string& cell : impl_->cells) out.push_back(Value::parse(cell).format());
    } catch (const ParseError& e) {
        throw ParseError("line " + std::to_string(impl_->line) + impl_->origin_suffix() + ": " +
                         e.what());
    }
    return true;
}

namespace {

class Sink {
public:
    virtual ~Sink() = default;
    virtual void write(const char* data, std::size_t n) = 0;
    virtual void finish() = 0;
};

class GzSink final : public Sink {
public:
    explicit GzSink(const std::string& path) : path_(path) {
        file_ = gzopen(path.c_str(), "wb");
        if (!file_) throw IoError("cannot create " + path);
        gzbuffer(file_, 1 << 17);
    }
    ~GzSink() override {
        if (file_) gzclose(file_);
    }
    void write(const char* data, std::size_t n) override {
        if (n && gzwrite(file_, data, static_cast<unsigned>(n)) == 0)
            throw IoError("write error on " + path_);
    }
    void finish() override {
        int rc = gzclose(file_);
        file_ = nullptr;
        if (rc != Z_OK) throw IoError("close failed on " + path_);
    }

private:
    std::string path_;
    gzFile file_ = nullptr;
};

class FileSink final : public Sink {
public:
    explicit FileSink(const std::string& path) : path_(path) {
        file_ = std::fopen(path.c_str(), "wb");
        if (!file_) throw IoError("cannot create " + path);
    }
    ~FileSink() override {
        if (file_) std::fclose(file_);
    }
    void write(const char* data, std::size_t n) override {
        if (std::fwrite(data, 1, n, file_) != n) throw IoError("write error on " + path_);
    }
    void finish() override {
        int rc = std::fclose(file_);
        file_ = nullptr;
        if (rc != 0) throw IoError("close failed on " + path_);
    }

private:
    std::string path_;
    std::FILE* file_ = nullptr;
};

class OstreamSink final : public Sink {
public:
    explicit OstreamSink(std::ostream& out) : out_(out) {}
    void write(const char* data, std::size_t n) override {
        out_.write(data, static_cast<std::streamsize>(n));
        if (!out_) throw IoError("write error on output stream");
    }
    void finish() override {
        out_.flush();
        if (!out_) throw IoError("flush failed on output stream");
    }

private:
    std::ostream& out_;
};

bool has_gz_suffix(const std::string& path) {
    return path.size() > 3 && path.compare(path.size() - 3, 3, ".gz") == 0;
}

} // namespace

struct EdgeWriter::Impl {
    std::unique_ptr<Sink> sink;
    std::size_t arity = 0;
    std::uint64_t rows = 0;
    std::string buf;
    bool closed = false;

    void header(const ColumnSchema& schema) {
        arity = schema.size();
        for (std::size_t i = 0; i < schema.columns.size(); ++i) {
            if (i) buf.push_back('\t');
            buf.append(schema.columns[i]);
        }
        buf.push_back('\n');
    }

    void maybe_flush() {
        if (buf.size() >= (1 << 16)) {
            sink->write(buf.data(), buf.size());
            buf.clear();
        }
    }

    std::uint64_t close() {
        if (!closed) {
            sink->write(buf.data(), buf.size());
            buf.clear();
            sink->finish();
            closed = true;
        }
        return rows;
    }
};

EdgeWriter::EdgeWriter(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
EdgeWriter::EdgeWriter(EdgeWriter&&) noexcept = default;
EdgeWriter& EdgeWriter::operator=(EdgeWriter&&) noexcept = default;

EdgeWriter::~EdgeWriter() {
    // Destruction without close() flushes but swallows errors; call close()
    // to observe them.
    if (impl_ && !impl_->closed) {
        try {
            impl_->close();
        } catch (...) {
        }
    }
}

EdgeWriter EdgeWriter::open_path(const std::string& path, const ColumnSchema& schema) {
    auto impl = std::make_unique<Impl>();
    if (path == "-")
        throw IoError("use to_stream for standard output");
    if (has_gz_suffix(path))
        impl->sink = std::make_unique<GzSink>(path);
    else
        impl->sink = std::make_unique<FileSink>(path);
    impl->header(schema);
    return EdgeWriter(std::move(impl));
}

EdgeWriter EdgeWriter::to_stream(std::ostream& out, const ColumnSchema& schema) {
    auto impl = std::make_unique<Impl>();
    impl->sink = std::make_unique<OstreamSink>(out);
    impl->header(schema);
    return EdgeWriter(std::move(impl));
}

void EdgeWriter::write(const Record& row) {
    if (row.size() != impl_->arity)
        throw SemanticError("row arity " + std::to_string(row.size()) +
                            " does not match schema arity " + std::to_string(impl_->arity));
    for (std::size_t i = 0; i < row.size(); ++i) {
        if (i) impl_->buf.push_back('\t');
        impl_->buf.append(row[i].format());
    }
    impl_->buf.push_back('\n');
    ++impl_->rows;
    impl_->maybe_flush();
}

void EdgeWriter::write_raw(const std::vector<std::string>& cells) {
    if (cells.size() != impl_->arity)
        throw SemanticError("row arity " + std::to_string(cells.size()) +
                            " does not match schema arity " + std::to_string(impl_->arity));
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (i) impl_->buf.push_back('\t');
        impl_->buf.append(cells[i]);
    }
    impl_->buf.push_back('\n');
    ++impl_->rows;
    impl_->maybe_flush();
}

std::uint64_t EdgeWriter::close() { return impl_->close(); }

} // namespace kypher
