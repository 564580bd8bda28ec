#include "kypher/cache.hpp"

#include "kypher/error.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fcntl.h>
#include <filesystem>
#include <fstream>
#include <sys/file.h>
#include <sys/stat.h>
#include <unistd.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace kypher {

namespace {

constexpr int kCatalogVersion = 1;
constexpr char kOffMagic[8] = {'K', 'Y', 'O', 'F', 'F', '1', 0, 0};
constexpr char kIdxMagic[8] = {'K', 'Y', 'I', 'D', 'X', '1', 0, 0};

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path + " for hashing");
    EVP_MD_CTX* ctx = EVP_MD_CTX_new();
    EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        if (in.gcount() > 0) EVP_DigestUpdate(ctx, buf, static_cast<std::size_t>(in.gcount()));
    }
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx, digest, &len);
    EVP_MD_CTX_free(ctx);
    static const char* hex = "0123456789abcdef";
    std::string out;
    out.reserve(len * 2);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xf]);
    }
    return out;
}

struct StatInfo {
    std::uint64_t size;
    std::int64_t mtime_ns;
};

std::optional<StatInfo> stat_file(const std::string& path) {
    struct ::stat st{};
    if (::stat(path.c_str(), &st) != 0) return std::nullopt;
    return StatInfo{static_cast<std::uint64_t>(st.st_size),
                    static_cast<std::int64_t>(st.st_mtim.tv_sec) * 1000000000 + st.st_mtim.tv_nsec};
}

void write_u64(std::string& out, std::uint64_t v) {
    char b[8];
    std::memcpy(b, &v, 8);
    out.append(b, 8);
}

// pread-based accessor shared by the offsets and index files.
class RandomFile {
public:
    explicit RandomFile(const std::string& path) : path_(path) {
        fd_ = ::open(path.c_str(), O_RDONLY);
        if (fd_ < 0) throw IoError("cannot open " + path);
    }
    ~RandomFile() {
        if (fd_ >= 0) ::close(fd_);
    }
    RandomFile(const RandomFile&) = delete;
    RandomFile& operator=(const RandomFile&) = delete;

    void read_at(std::uint64_t off, void* buf, std::size_t n) const {
        std::size_t done = 0;
        while (done < n) {
            ssize_t r = ::pread(fd_, static_cast<char*>(buf) + done, n - done,
                                static_cast<off_t>(off + done));
            if (r < 0) throw IoError("read error on " + path_);
            if (r == 0) throw CorruptionError("truncated cache file " + path_);
            done += static_cast<std::size_t>(r);
        }
    }

    std::uint64_t u64_at(std::uint64_t off) const {
        std::uint64_t v;
        read_at(off, &v, 8);
        return v;
    }

    std::uint64_t size() const {
        struct ::stat st{};
        if (::fstat(fd_, &st) != 0) throw IoError("stat failed on " + path_);
        return static_cast<std::uint64_t>(st.st_size);
    }

private:
    std::string path_;
    int fd_ = -1;
};

void atomic_write(const fs::path& path, const std::string& data) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        out.write(data.data(), static_cast<std::streamsize>(data.size()));
        out.flush();
        if (!out) throw IoError("cannot write " + tmp.string());
    }
    fs::rename(tmp, path);
}

// Directory-level advisory lock. Shared for reads, exclusive for mutations.
class DirLock {
public:
    explicit DirLock(const fs::path& dir) {
        fd_ = ::open((dir / ".lock").c_str(), O_CREAT | O_RDWR, 0644);
        if (fd_ < 0) throw IoError("cannot create lock file in " + dir.string());
        ::flock(fd_, LOCK_SH);
    }
    ~DirLock() {
        if (fd_ >= 0) ::close(fd_);
    }

    void exclusive() { ::flock(fd_, LOCK_EX); }
    void shared() { ::flock(fd_, LOCK_SH); }

private:
    int fd_ = -1;
};

// Holds the exclusive lock for one mutation, restoring shared mode after.
class WriterScope {
public:
    explicit WriterScope(DirLock& lock) : lock_(lock) { lock_.exclusive(); }
    ~WriterScope() { lock_.shared(); }

private:
    DirLock& lock_;
};

} // namespace

struct TableHandle::Impl {
    std::string name;
    fs::path dir;
    std::string stem;
    ColumnSchema schema;
    std::uint64_t edge_count = 0;
    std::set<std::string> indexed;

    std::unique_ptr<RandomFile> offsets; // lazy
    std::unique_ptr<RandomFile> table;   // lazy, for random row access
    // column -> opened index
    std::map<std::string, std::unique_ptr<RandomFile>> index_files;

    fs::path table_path() const { return dir / (stem + ".tbl"); }
    fs::path offsets_path() const { return dir / (stem + ".off"); }
    fs::path index_path(const std::string& column) const {
        int i = schema.index_of(column);
        return dir / (stem + "." + std::to_string(i) + ".idx");
    }

    RandomFile& offsets_file() {
        if (!offsets) {
            offsets = std::make_unique<RandomFile>(offsets_path().string());
            char magic[8];
            offsets->read_at(0, magic, 8);
            if (std::memcmp(magic, kOffMagic, 8) != 0)
                throw CorruptionError("bad offsets file " + offsets_path().string());
        }
        return *offsets;
    }

    RandomFile& table_file() {
        if (!table) table = std::make_unique<RandomFile>(table_path().string());
        return *table;
    }

    RandomFile& index_file(const std::string& column) {
        auto it = index_files.find(column);
        if (it == index_files.end()) {
            auto file = std::make_unique<RandomFile>(index_path(column).string());
            char magic[8];
            file->read_at(0, magic, 8);
            if (std::memcmp(magic, kIdxMagic, 8) != 0)
                throw CorruptionError("bad index file " + index_path(column).string());
            it = index_files.emplace(column, std::move(file)).first;
        }
        return *it->second;
    }
};

const ColumnSchema& TableHandle::schema() const { return impl_->schema; }
std::uint64_t TableHandle::edge_count() const { return impl_->edge_count; }
const std::string& TableHandle::graph_name() const { return impl_->name; }

EdgeReader TableHandle::scan() const {
    return EdgeReader::open_path(impl_->table_path().string(), false);
}

bool TableHandle::has_index(const std::string& column) const {
    return impl_->indexed.count(column) > 0;
}

// Index layout: magic, u64 column-index, u64 entry count, u64 distinct
// count, entry blob, directory of u64 entry offsets, trailing u64 directory
// offset. Entries are (u32 len, bytes, u64 count, count * u64 row id) sorted
// by value bytes.
std::vector<std::uint64_t> TableHandle::lookup(const std::string& column,
                                               const std::string& cell_text) const {
    RandomFile& f = impl_->index_file(column);
    std::uint64_t distinct = f.u64_at(24);
    std::uint64_t dir_off = f.u64_at(f.size() - 8);

    std::string probe;
    std::uint64_t lo = 0, hi = distinct;
    while (lo < hi) {
        std::uint64_t mid = lo + (hi - lo) / 2;
        std::uint64_t entry_off = f.u64_at(dir_off + mid * 8);
        std::uint32_t vlen;
        f.read_at(entry_off, &vlen, 4);
        probe.resize(vlen);
        if (vlen) f.read_at(entry_off + 4, probe.data(), vlen);
        int cmp = probe.compare(cell_text);
        if (cmp < 0) {
            lo = mid + 1;
        } else if (cmp > 0) {
            hi = mid;
        } else {
            std::uint64_t count = f.u64_at(entry_off + 4 + vlen);
            std::vector<std::uint64_t> rows(count);
            if (count) f.read_at(entry_off + 12 + vlen, rows.data(), count * 8);
            return rows;
        }
    }
    return {};
}

void TableHandle::fetch(std::uint64_t row_id, std::vector<std::string>& out) const {
    RandomFile& offs = impl_->offsets_file();
    std::uint64_t count = offs.u64_at(8);
    if (row_id >= count)
        throw CorruptionError("row id out of range in table " + impl_->name);
    std::uint64_t begin = offs.u64_at(16 + row_id * 8);
    std::uint64_t end = offs.u64_at(16 + (row_id + 1) * 8);
    std::string line(end - begin, '\0');
    impl_->table_file().read_at(begin, line.data(), line.size());
    while (!line.empty() && (line.back() == '\n' || line.back() == '\r')) line.pop_back();
    out.clear();
    std::size_t start = 0;
    while (true) {
        std::size_t tab = line.find('\t', start);
        if (tab == std::string::npos) {
            out.emplace_back(line, start);
            break;
        }
        out.emplace_back(line, start, tab - start);
        start = tab + 1;
    }
    if (out.size() != impl_->schema.size())
        throw CorruptionError("malformed stored row in table " + impl_->name);
}

struct GraphCache::Impl {
    fs::path dir;
    std::map<std::string, GraphDescriptor> catalog;
    std::uint64_t next_stem = 1;
    CacheStats stats;
    std::unique_ptr<DirLock> lock;

    fs::path catalog_path() const { return dir / "catalog.json"; }

    void load_catalog() {
        std::ifstream in(catalog_path());
        json doc;
        try {
            doc = json::parse(in);
        } catch (const json::exception& e) {
            throw CorruptionError("corrupt cache catalog " + catalog_path().string() + ": " +
                                  e.what());
        }
        try {
            if (doc.at("version").get<int>() != kCatalogVersion)
                throw CorruptionError("unsupported cache version in " + catalog_path().string());
            next_stem = doc.at("next_stem").get<std::uint64_t>();
            for (const json& g : doc.at("graphs")) {
                GraphDescriptor d;
                d.name = g.at("name").get<std::string>();
                d.source_path = g.at("source").get<std::string>();
                d.fingerprint.size = g.at("size").get<std::uint64_t>();
                d.fingerprint.mtime_ns = g.at("mtime_ns").get<std::int64_t>();
                d.fingerprint.sha256 = g.at("sha256").get<std::string>();
                d.columns = g.at("columns").get<std::vector<std::string>>();
                for (const json& c : g.at("indexes")) d.indexes.insert(c.get<std::string>());
                d.edge_count = g.at("edges").get<std::uint64_t>();
                d.table_stem = g.at("stem").get<std::string>();
                if (!fs::exists(dir / (d.table_stem + ".tbl")))
                    throw CorruptionError("cache table missing for graph '" + d.name + "' in " +
                                          dir.string());
                catalog.emplace(d.name, std::move(d));
            }
        } catch (const json::exception& e) {
            throw CorruptionError("corrupt cache catalog " + catalog_path().string() + ": " +
                                  e.what());
        }
    }

    void store_catalog() {
        json graphs = json::array();
        for (const auto& [name, d] : catalog) {
            json g;
            g["name"] = d.name;
            g["source"] = d.source_path;
            g["size"] = d.fingerprint.size;
            g["mtime_ns"] = d.fingerprint.mtime_ns;
            g["sha256"] = d.fingerprint.sha256;
            g["columns"] = d.columns;
            g["indexes"] = std::vector<std::string>(d.indexes.begin(), d.indexes.end());
            g["edges"] = d.edge_count;
            g["stem"] = d.table_stem;
            graphs.push_back(std::move(g));
        }
        json doc;
        doc["version"] = kCatalogVersion;
        doc["next_stem"] = next_stem;
        doc["graphs"] = std::move(graphs);
        atomic_write(catalog_path(), doc.dump(2));
    }

    // Removes table files no descriptor references (left by interrupted
    // imports of fresh graphs).
    void collect_orphans() {
        std::set<std::string> live;
        for (const auto& [name, d] : catalog) live.insert(d.table_stem);
        std::vector<fs::path> doomed;
        for (const auto& entry : fs::directory_iterator(dir)) {
            std::string fn = entry.path().filename().string();
            if (fn.rfind("g", 0) != 0) continue;
            std::string stem = fn.substr(0, fn.find('.'));
            if (!live.count(stem)) doomed.push_back(entry.path());
        }
        for (const fs::path& p : doomed) fs::remove(p);
    }

    Fingerprint fingerprint(const std::string& path) {
        auto st = stat_file(path);
        if (!st) throw IoError("cannot stat " + path);
        ++stats.hashes;
        return Fingerprint{st->size, st->mtime_ns, sha256_file(path)};
    }

    // Streams the source into <stem>.tbl/.off under temp names, then renames
    // both. Throws without touching the live table on any failure.
    std::pair<std::uint64_t, std::vector<std::string>> build_table(const std::string& file,
                                                                   const std::string& stem) {
        fs::path tbl = dir / (stem + ".tbl");
        fs::path off = dir / (stem + ".off");
        fs::path tbl_tmp = dir / (stem + ".tbl.build");
        fs::path off_tmp = dir / (stem + ".off.build");

        std::vector<std::string> columns;
        std::uint64_t rows = 0;
        try {
            EdgeReader reader = EdgeReader::open_path(file, true);
            columns = reader.schema().columns;
            ColumnSchema schema = reader.schema();

            std::FILE* tf = std::fopen(tbl_tmp.c_str(), "wb");
            if (!tf) throw IoError("cannot create " + tbl_tmp.string());
            std::FILE* of = std::fopen(off_tmp.c_str(), "wb");
            if (!of) {
                std::fclose(tf);
                throw IoError("cannot create " + off_tmp.string());
            }

            std::string line;
            std::string offsets;
            offsets.append(kOffMagic, 8);
            write_u64(offsets, 0); // row count patched below
            std::uint64_t pos = 0;

            auto put = [&](std::FILE* f, const std::string& data, const fs::path& p) {
                if (std::fwrite(data.data(), 1, data.size(), f) != data.size())
                    throw IoError("write error on " + p.string());
            };

            // header line
            line.clear();
            for (std::size_t i = 0; i < columns.size(); ++i) {
                if (i) line.push_back('\t');
                line.append(columns[i]);
            }
            line.push_back('\n');
            put(tf, line, tbl_tmp);
            pos = line.size();

            std::vector<std::string> cells;
            std::string offbuf;
            try {
                while (reader.next_raw(cells)) {
                    write_u64(offbuf, pos);
                    line.clear();
                    for (std::size_t i = 0; i < cells.size(); ++i) {
                        if (i) line.push_back('\t');
                        line.append(cells[i]);
                    }
                    line.push_back('\n');
                    put(tf, line, tbl_tmp);
                    pos += line.size();
                    ++rows;
                    if (offbuf.size() >= (1 << 16)) {
                        offsets.append(offbuf);
                        offbuf.clear();
                    }
                }
            } catch (...) {
                std::fclose(tf);
                std::fclose(of);
                throw;
            }
            write_u64(offbuf, pos); // end sentinel
            offsets.append(offbuf);
            std::memcpy(offsets.data() + 8, &rows, 8);

            bool ok = std::fwrite(offsets.data(), 1, offsets.size(), of) == offsets.size();
            ok = (std::fclose(of) == 0) && ok;
            ok = (std::fclose(tf) == 0) && ok;
            if (!ok) throw IoError("write error building table for " + file);

            fs::rename(tbl_tmp, tbl);
            fs::rename(off_tmp, off);
        } catch (...) {
            std::error_code ec;
            fs::remove(tbl_tmp, ec);
            fs::remove(off_tmp, ec);
            throw;
        }
        return {rows, columns};
    }

    void build_index(const GraphDescriptor& d, const std::string& column) {
        ColumnSchema schema = ColumnSchema::from_columns(d.columns, false);
        int col = schema.index_of(column);
        if (col < 0)
            throw SemanticError("graph '" + d.name + "' has no column '" + column + "'");

        std::vector<std::pair<std::string, std::uint64_t>> entries;
        entries.reserve(d.edge_count);
        EdgeReader reader = EdgeReader::open_path((dir / (d.table_stem + ".tbl")).string(), false);
        std::vector<std::string> cells;
        std::uint64_t row = 0;
        while (reader.next_raw(cells)) entries.emplace_back(cells[col], row++);
        std::sort(entries.begin(), entries.end());

        std::string blob;
        blob.append(kIdxMagic, 8);
        write_u64(blob, static_cast<std::uint64_t>(col));
        write_u64(blob, entries.size());
        std::vector<std::uint64_t> directory;
        std::size_t distinct_pos = blob.size();
        write_u64(blob, 0); // distinct count patched below

        std::size_t i = 0;
        while (i < entries.size()) {
            std::size_t j = i;
            while (j < entries.size() && entries[j].first == entries[i].first) ++j;
            directory.push_back(blob.size());
            std::uint32_t vlen = static_cast<std::uint32_t>(entries[i].first.size());
            blob.append(reinterpret_cast<const char*>(&vlen), 4);
            blob.append(entries[i].first);
            write_u64(blob, j - i);
            for (std::size_t k = i; k < j; ++k) write_u64(blob, entries[k].second);
            i = j;
        }
        std::uint64_t dcount = directory.size();
        std::memcpy(blob.data() + distinct_pos, &dcount, 8);
        std::uint64_t dir_off = blob.size();
        for (std::uint64_t off : directory) write_u64(blob, off);
        write_u64(blob, dir_off);

        fs::path idx = dir / (d.table_stem + "." + std::to_string(col) + ".idx");
        atomic_write(idx, blob);
        ++stats.index_builds;
    }

    GraphDescriptor& require(const std::string& name) {
        auto it = catalog.find(name);
        if (it == catalog.end()) throw SemanticError("no graph named '" + name + "' in cache");
        return it->second;
    }

    GraphDescriptor do_import(const std::string& file, const std::string& name,
                              GraphDescriptor* existing, Fingerprint fp) {
        WriterScope writer(*lock);
        std::string stem = existing ? existing->table_stem : "g" + std::to_string(next_stem);
        std::set<std::string> rebuild = existing ? existing->indexes : std::set<std::string>{};

        auto [rows, columns] = build_table(file, stem);
        ++stats.imports;

        GraphDescriptor d;
        d.name = name;
        d.source_path = file;
        d.fingerprint = fp;
        d.columns = columns;
        d.edge_count = rows;
        d.table_stem = stem;

        // Previously indexed columns that survive the (possibly changed)
        // schema are rebuilt; vanished columns are dropped.
        ColumnSchema schema = ColumnSchema::from_columns(columns, false);
        for (const std::string& col : rebuild) {
            if (schema.has_column(col)) {
                build_index(d, col);
                d.indexes.insert(col);
            }
        }

        if (!existing) ++next_stem;
        catalog[name] = d;
        store_catalog();
        collect_orphans();
        return d;
    }
};

GraphCache::GraphCache(std::unique_ptr<Impl> impl) : impl_(std::move(impl)) {}
GraphCache::GraphCache(GraphCache&&) noexcept = default;
GraphCache& GraphCache::operator=(GraphCache&&) noexcept = default;
GraphCache::~GraphCache() = default;

GraphCache GraphCache::open(const std::string& path) {
    auto impl = std::make_unique<Impl>();
    impl->dir = fs::path(path);

    std::error_code ec;
    auto status = fs::status(impl->dir, ec);
    if (fs::exists(status) && !fs::is_directory(status))
        throw CorruptionError(path + " exists and is not a graph cache directory");

    if (!fs::exists(status)) {
        fs::create_directories(impl->dir, ec);
        if (ec) throw IoError("cannot create cache directory " + path);
    }

    impl->lock = std::make_unique<DirLock>(impl->dir);
    if (fs::exists(impl->catalog_path())) {
        impl->load_catalog();
    } else {
        // Refuse to adopt a non-empty foreign directory.
        for (const auto& entry : fs::directory_iterator(impl->dir)) {
            std::string fn = entry.path().filename().string();
            if (fn == ".lock") continue;
            throw CorruptionError(path + " is not empty and has no cache catalog");
        }
        WriterScope writer(*impl->lock);
        impl->store_catalog();
    }
    return GraphCache(std::move(impl));
}

const std::string& GraphCache::path() const {
    static thread_local std::string p;
    p = impl_->dir.string();
    return p;
}

std::vector<std::string> GraphCache::names() const {
    std::vector<std::string> out;
    out.reserve(impl_->catalog.size());
    for (const auto& [name, d] : impl_->catalog) out.push_back(name);
    return out;
}

std::optional<GraphDescriptor> GraphCache::find(const std::string& name) const {
    auto it = impl_->catalog.find(name);
    if (it == impl_->catalog.end()) return std::nullopt;
    return it->second;
}

std::string graph_name_from_path(const std::string& path) {
    std::string base = fs::path(path).filename().string();
    auto strip = [&](const std::string& s) {
        std::size_t dot = s.rfind('.');
        return dot == std::string::npos || dot == 0 ? s : s.substr(0, dot);
    };
    if (base.size() > 3 && base.compare(base.size() - 3, 3, ".gz") == 0)
        base = base.substr(0, base.size() - 3);
    return strip(base);
}

GraphDescriptor GraphCache::import_graph(const std::string& file,
                                         std::optional<std::string> alias) {
    std::string name = alias ? *alias : name_from_path(file);
    if (name.empty()) throw UsageError("cannot derive a graph name from '" + file + "'");

    auto it = impl_->catalog.find(name);
    if (it != impl_->catalog.end()) {
        fs::path stored = fs::weakly_canonical(it->second.source_path);
        fs::path incoming = fs::weakly_canonical(file);
        if (stored != incoming)
            throw SemanticError("graph name '" + name + "' is already bound to " +
                                it->second.source_path);
        return ensure_fresh(name);
    }

    auto st = stat_file(file);
    if (!st) throw IoError("cannot read input file " + file);
    Fingerprint fp = impl_->fingerprint(file);
    return impl_->do_import(file, name, nullptr, fp);
}

GraphDescriptor GraphCache::ensure_fresh(const std::string& name) {
    GraphDescriptor& d = impl_->require(name);
    auto st = stat_file(d.source_path);
    if (!st)
        throw IoError("source file for graph '" + name + "' is gone: " + d.source_path);

    if (st->size == d.fingerprint.size && st->mtime_ns == d.fingerprint.mtime_ns) {
        ++impl_->stats.fresh_hits;
        return d;
    }
    Fingerprint fp = impl_->fingerprint(d.source_path);
    if (fp.sha256 == d.fingerprint.sha256) {
        // touched but unchanged: remember the new stat pair
        WriterScope writer(*impl_->lock);
        d.fingerprint = fp;
        impl_->store_catalog();
        ++impl_->stats.fresh_hits;
        return d;
    }
    GraphDescriptor* existing = &d;
    return impl_->do_import(d.source_path, name, existing, fp);
}

void GraphCache::ensure_index(const std::string& name, const std::string& column) {
    GraphDescriptor& d = impl_->require(name);
    ColumnSchema schema = ColumnSchema::from_columns(d.columns, false);
    if (!schema.has_column(column))
        throw SemanticError("graph '" + name + "' has no column '" + column + "'");
    int col = schema.index_of(column);
    if (d.indexes.count(column) &&
        fs::exists(impl_->dir / (d.table_stem + "." + std::to_string(col) + ".idx")))
        return;
    WriterScope writer(*impl_->lock);
    impl_->build_index(d, column);
    d.indexes.insert(column);
    impl_->store_catalog();
}

TableHandle GraphCache::table(const std::string& name) const {
    const GraphDescriptor& d = impl_->require(name);
    auto impl = std::make_shared<TableHandle::Impl>();
    impl->name = d.name;
    impl->dir = impl_->dir;
    impl->stem = d.table_stem;
    impl->schema = ColumnSchema::from_columns(d.columns, false);
    impl->edge_count = d.edge_count;
    impl->indexed = d.indexes;
    TableHandle h;
    h.impl_ = std::move(impl);
    return h;
}

const CacheStats& GraphCache::stats() const { return impl_->stats; }

} // namespace kypher
