#include "kypher/executor.hpp"

#include "kypher/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <functional>
#include <optional>
#include <unordered_map>
#include <unordered_set>

namespace kypher {

namespace {

int column_index(const std::vector<std::string>& columns, const std::string& name) {
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name) return static_cast<int>(i);
    throw SemanticError("unresolved column '" + name + "' in execution plan");
}

Value bool_value(bool b) { return Value::integer(b ? 1 : 0); }

Value eval_cast(const Value& v, CastType type) {
    if (v.is_empty()) return Value();
    switch (type) {
    case CastType::Integer: {
        if (v.is_number()) {
            if (v.is_integer()) return v;
            double d = std::trunc(v.as_double());
            if (d < -9.2e18 || d > 9.2e18) return Value();
            return Value::integer(static_cast<std::int64_t>(d));
        }
        try {
            Value n = Value::parse(v.content());
            return n.is_number() ? eval_cast(n, CastType::Integer) : Value();
        } catch (const Error&) {
            return Value();
        }
    }
    case CastType::Float: {
        if (v.is_number()) return v;
        try {
            Value n = Value::parse(v.content());
            return n.is_number() ? n : Value();
        } catch (const Error&) {
            return Value();
        }
    }
    case CastType::String:
        return Value::string(v.content());
    }
    return Value();
}

// Expression compiled against a fixed column layout.
class CompiledExpr {
public:
    CompiledExpr() = default;
    CompiledExpr(const ExprPtr& expr, const std::vector<std::string>& columns) {
        root_ = build(expr, columns);
    }

    Value eval(const Row& row) const { return root_(row); }
    bool test(const Row& row) const { return truthy(root_(row)); }

private:
    using Fn = std::function<Value(const Row&)>;

    static Fn build(const ExprPtr& e, const std::vector<std::string>& columns) {
        switch (e->kind) {
        case Expr::Kind::Var: {
            int idx = column_index(columns, e->name);
            return [idx](const Row& row) { return row[static_cast<std::size_t>(idx)]; };
        }
        case Expr::Kind::Literal: {
            Value v = e->literal;
            return [v](const Row&) { return v; };
        }
        case Expr::Kind::Cmp: {
            Fn l = build(e->left, columns), r = build(e->right, columns);
            CmpOp op = e->cmp;
            return [l, r, op](const Row& row) {
                Value a = l(row), b = r(row);
                if (a.is_empty() || b.is_empty()) return bool_value(false);
                auto c = compare(a, b);
                switch (op) {
                case CmpOp::Lt: return bool_value(c < 0);
                case CmpOp::Le: return bool_value(c <= 0);
                case CmpOp::Gt: return bool_value(c > 0);
                case CmpOp::Ge: return bool_value(c >= 0);
                case CmpOp::Eq: return bool_value(c == 0);
                case CmpOp::Ne: return bool_value(c != 0);
                }
                return bool_value(false);
            };
        }
        case Expr::Kind::And: {
            Fn l = build(e->left, columns), r = build(e->right, columns);
            return [l, r](const Row& row) {
                if (!truthy(l(row))) return bool_value(false);
                return bool_value(truthy(r(row)));
            };
        }
        case Expr::Kind::Or: {
            Fn l = build(e->left, columns), r = build(e->right, columns);
            return [l, r](const Row& row) {
                if (truthy(l(row))) return bool_value(true);
                return bool_value(truthy(r(row)));
            };
        }
        case Expr::Kind::Not: {
            Fn l = build(e->left, columns);
            return [l](const Row& row) { return bool_value(!truthy(l(row))); };
        }
        case Expr::Kind::Cast: {
            Fn l = build(e->left, columns);
            CastType t = e->cast_type;
            return [l, t](const Row& row) { return eval_cast(l(row), t); };
        }
        case Expr::Kind::Count:
            throw SemanticError("aggregate in scalar position");
        }
        throw SemanticError("unreachable expression kind");
    }

    Fn root_;
};

// Length-prefixed concatenation; unambiguous across multi-column keys.
void append_key_part(std::string& key, const std::string& part) {
    std::uint32_t n = static_cast<std::uint32_t>(part.size());
    key.append(reinterpret_cast<const char*>(&n), 4);
    key.append(part);
}

std::string row_key(const Row& row, const std::vector<int>& cols) {
    std::string key;
    for (int c : cols) append_key_part(key, row[static_cast<std::size_t>(c)].format());
    return key;
}

// ---------------------------------------------------------------------------
// Scan
// ---------------------------------------------------------------------------

// Raw-cell predicate for a scan: constant constraints plus intra-row
// equalities, all on canonical cell text.
struct ScanPredicate {
    std::vector<std::pair<int, std::string>> equals; // cell index -> text
    std::vector<std::pair<int, int>> same;           // cell index pairs

    bool matches(const std::vector<std::string>& cells) const {
        for (const auto& [idx, text] : equals)
            if (cells[static_cast<std::size_t>(idx)] != text) return false;
        for (const auto& [a, b] : same)
            if (cells[static_cast<std::size_t>(a)] != cells[static_cast<std::size_t>(b)])
                return false;
        return true;
    }
};

struct ScanShape {
    TableHandle table;
    ScanPredicate predicate;
    std::vector<int> output_cells; // table cell index per output column

    static ScanShape make(const PlanNode& node, const GraphCache& cache) {
        ScanShape shape{cache.table(node.graph), {}, {}};
        const ColumnSchema& schema = shape.table.schema();
        auto cell_of = [&schema, &node](const std::string& column) {
            int idx = schema.index_of(column);
            if (idx < 0)
                throw SemanticError("graph '" + node.graph + "' has no column '" + column + "'");
            return idx;
        };
        for (const PlanNode::Constraint& c : node.constraints)
            shape.predicate.equals.emplace_back(cell_of(c.column), c.value.format());
        for (const auto& [a, b] : node.self_eq)
            shape.predicate.same.emplace_back(cell_of(a), cell_of(b));
        for (const std::string& var : node.columns) {
            auto bind = std::find_if(node.binds.begin(), node.binds.end(),
                                     [&var](const auto& p) { return p.first == var; });
            if (bind == node.binds.end())
                throw SemanticError("scan output variable '" + var + "' has no binding");
            shape.output_cells.push_back(cell_of(bind->second));
        }
        return shape;
    }

    void emit(const std::vector<std::string>& cells, Row& out) const {
        out.clear();
        out.reserve(output_cells.size());
        for (int idx : output_cells) out.push_back(Value::parse(cells[static_cast<std::size_t>(idx)]));
    }
};

class FullScanSource final : public RowSource {
public:
    FullScanSource(ScanShape shape) : shape_(std::move(shape)), reader_(shape_.table.scan()) {}

    bool next(Row& out) override {
        while (reader_.next_raw(cells_)) {
            if (!shape_.predicate.matches(cells_)) continue;
            shape_.emit(cells_, out);
            return true;
        }
        return false;
    }

private:
    ScanShape shape_;
    EdgeReader reader_;
    std::vector<std::string> cells_;
};

class IndexScanSource final : public RowSource {
public:
    IndexScanSource(ScanShape shape, const std::string& column, const std::string& text)
        : shape_(std::move(shape)) {
        rows_ = shape_.table.lookup(column, text);
    }

    bool next(Row& out) override {
        while (pos_ < rows_.size()) {
            shape_.table.fetch(rows_[pos_++], cells_);
            if (!shape_.predicate.matches(cells_)) continue;
            shape_.emit(cells_, out);
            return true;
        }
        return false;
    }

private:
    ScanShape shape_;
    std::vector<std::uint64_t> rows_;
    std::size_t pos_ = 0;
    std::vector<std::string> cells_;
};

// ---------------------------------------------------------------------------
// Joins
// ---------------------------------------------------------------------------

class HashJoinSource final : public RowSource {
public:
    // Probes left rows against a hash of the right child; output is the
    // probe row followed by the kept right columns. With `outer`, probe rows
    // without a match survive padded with Empty.
    HashJoinSource(std::unique_ptr<RowSource> probe, std::unique_ptr<RowSource> build,
                   std::vector<int> probe_keys, std::vector<int> build_keys,
                   std::vector<int> build_keep, bool outer)
        : probe_(std::move(probe)), build_(std::move(build)), probe_keys_(std::move(probe_keys)),
          build_keys_(std::move(build_keys)), build_keep_(std::move(build_keep)), outer_(outer) {}

    bool next(Row& out) override {
        if (!built_) {
            Row row;
            while (build_->next(row)) {
                Row kept;
                kept.reserve(build_keep_.size());
                for (int c : build_keep_) kept.push_back(row[static_cast<std::size_t>(c)]);
                table_[row_key(row, build_keys_)].push_back(std::move(kept));
            }
            built_ = true;
        }
        while (true) {
            if (hits_) {
                if (hit_pos_ < hits_->size()) {
                    out = current_;
                    const Row& kept = (*hits_)[hit_pos_++];
                    out.insert(out.end(), kept.begin(), kept.end());
                    return true;
                }
                hits_ = nullptr;
            }
            if (!probe_->next(current_)) return false;
            auto it = table_.find(row_key(current_, probe_keys_));
            if (it != table_.end()) {
                hits_ = &it->second;
                hit_pos_ = 0;
            } else if (outer_) {
                out = current_;
                out.resize(current_.size() + build_keep_.size()); // Empty padding
                return true;
            }
        }
    }

private:
    std::unique_ptr<RowSource> probe_, build_;
    std::vector<int> probe_keys_, build_keys_, build_keep_;
    bool outer_;
    bool built_ = false;
    std::unordered_map<std::string, std::vector<Row>> table_;
    Row current_;
    const std::vector<Row>* hits_ = nullptr;
    std::size_t hit_pos_ = 0;
};

// Probes the right-hand scan's index once per left row.
class IndexNestedLoopSource final : public RowSource {
public:
    IndexNestedLoopSource(std::unique_ptr<RowSource> left, ScanShape right,
                          std::vector<int> left_keys, std::vector<int> right_key_cells,
                          std::string lookup_column, int lookup_key_pos,
                          std::vector<int> right_keep_cells)
        : left_(std::move(left)), right_(std::move(right)), left_keys_(std::move(left_keys)),
          right_key_cells_(std::move(right_key_cells)), lookup_column_(std::move(lookup_column)),
          lookup_key_pos_(lookup_key_pos), right_keep_cells_(std::move(right_keep_cells)) {}

    bool next(Row& out) override {
        while (true) {
            while (pos_ < rows_.size()) {
                right_.table.fetch(rows_[pos_++], cells_);
                if (!right_.predicate.matches(cells_)) continue;
                bool consistent = true;
                for (std::size_t k = 0; k < left_keys_.size(); ++k) {
                    const std::string& left_text =
                        current_[static_cast<std::size_t>(left_keys_[k])].format();
                    if (cells_[static_cast<std::size_t>(right_key_cells_[k])] != left_text) {
                        consistent = false;
                        break;
                    }
                }
                if (!consistent) continue;
                out = current_;
                for (int c : right_keep_cells_)
                    out.push_back(Value::parse(cells_[static_cast<std::size_t>(c)]));
                return true;
            }
            if (!left_->next(current_)) return false;
            rows_ = right_.table.lookup(
                lookup_column_, current_[static_cast<std::size_t>(left_keys_[static_cast<std::size_t>(
                                             lookup_key_pos_)])].format());
            pos_ = 0;
        }
    }

private:
    std::unique_ptr<RowSource> left_;
    ScanShape right_;
    std::vector<int> left_keys_;
    std::vector<int> right_key_cells_;
    std::string lookup_column_;
    int lookup_key_pos_;
    std::vector<int> right_keep_cells_;
    Row current_;
    std::vector<std::uint64_t> rows_;
    std::size_t pos_ = 0;
    std::vector<std::string> cells_;
};

// ---------------------------------------------------------------------------
// Filter / Project / Aggregate / Distinct / Sort / Limit
// ---------------------------------------------------------------------------

class FilterSource final : public RowSource {
public:
    FilterSource(std::unique_ptr<RowSource> child, CompiledExpr predicate)
        : child_(std::move(child)), predicate_(std::move(predicate)) {}

    bool next(Row& out) override {
        while (child_->next(out))
            if (predicate_.test(out)) return true;
        return false;
    }

private:
    std::unique_ptr<RowSource> child_;
    CompiledExpr predicate_;
};

class ProjectSource final : public RowSource {
public:
    ProjectSource(std::unique_ptr<RowSource> child, std::vector<CompiledExpr> items)
        : child_(std::move(child)), items_(std::move(items)) {}

    bool next(Row& out) override {
        if (!child_->next(buf_)) return false;
        out.clear();
        out.reserve(items_.size());
        for (const CompiledExpr& item : items_) out.push_back(item.eval(buf_));
        return true;
    }

private:
    std::unique_ptr<RowSource> child_;
    std::vector<CompiledExpr> items_;
    Row buf_;
};

class AggregateSource final : public RowSource {
public:
    AggregateSource(std::unique_ptr<RowSource> child, const PlanNode& node,
                    const std::vector<std::string>& child_columns)
        : child_(std::move(child)) {
        for (const PlanNode::Item& item : node.items) {
            Slot slot;
            slot.expr = CompiledExpr(item.expr, child_columns);
            slot.aggregate = item.aggregate;
            slot.count_distinct = item.count_distinct;
            slots_.push_back(std::move(slot));
        }
    }

    bool next(Row& out) override {
        if (!materialized_) materialize();
        if (pos_ >= groups_.size()) return false;
        const Group& g = groups_[pos_++];
        out.clear();
        std::size_t key_i = 0, agg_i = 0;
        for (const Slot& slot : slots_) {
            if (slot.aggregate) {
                const AggState& st = g.aggs[agg_i++];
                out.push_back(Value::integer(static_cast<std::int64_t>(
                    slot.count_distinct ? st.distinct.size() : st.count)));
            } else {
                out.push_back(g.keys[key_i++]);
            }
        }
        return true;
    }

private:
    struct AggState {
        std::uint64_t count = 0;
        std::unordered_set<std::string> distinct;
    };
    struct Group {
        std::vector<Value> keys;
        std::vector<AggState> aggs;
    };
    struct Slot {
        CompiledExpr expr;
        bool aggregate = false;
        bool count_distinct = false;
    };

    void materialize() {
        materialized_ = true;
        std::size_t n_aggs = 0;
        for (const Slot& s : slots_)
            if (s.aggregate) ++n_aggs;
        bool grouped = n_aggs < slots_.size();

        Row row;
        std::unordered_map<std::string, std::size_t> index;
        while (child_->next(row)) {
            std::string key;
            std::vector<Value> key_values;
            for (const Slot& s : slots_) {
                if (s.aggregate) continue;
                key_values.push_back(s.expr.eval(row));
                append_key_part(key, key_values.back().format());
            }
            auto [it, fresh] = index.emplace(key, groups_.size());
            if (fresh) {
                Group g;
                g.keys = std::move(key_values);
                g.aggs.resize(n_aggs);
                groups_.push_back(std::move(g));
            }
            Group& g = groups_[it->second];
            std::size_t agg_i = 0;
            for (const Slot& s : slots_) {
                if (!s.aggregate) continue;
                Value v = s.expr.eval(row);
                AggState& st = g.aggs[agg_i++];
                if (!v.is_empty()) {
                    if (s.count_distinct) st.distinct.insert(v.format());
                    else ++st.count;
                }
            }
        }
        // a query of nothing but aggregates yields one row over empty input
        if (groups_.empty() && !grouped) {
            Group g;
            g.aggs.resize(n_aggs);
            groups_.push_back(std::move(g));
        }
    }

    std::unique_ptr<RowSource> child_;
    std::vector<Slot> slots_;
    bool materialized_ = false;
    std::vector<Group> groups_;
    std::size_t pos_ = 0;
};

class DistinctSource final : public RowSource {
public:
    explicit DistinctSource(std::unique_ptr<RowSource> child) : child_(std::move(child)) {}

    bool next(Row& out) override {
        while (child_->next(out)) {
            std::string key;
            for (const Value& v : out) append_key_part(key, v.format());
            if (seen_.insert(std::move(key)).second) return true;
        }
        return false;
    }

private:
    std::unique_ptr<RowSource> child_;
    std::unordered_set<std::string> seen_;
};

class SortSource final : public RowSource {
public:
    SortSource(std::unique_ptr<RowSource> child, const PlanNode& node,
               const std::vector<std::string>& child_columns)
        : child_(std::move(child)) {
        for (const PlanNode::SortKey& key : node.sort_keys) {
            keys_.emplace_back(CompiledExpr(key.expr, child_columns), key.descending);
        }
    }

    bool next(Row& out) override {
        if (!sorted_) {
            Row row;
            std::vector<Row> key_rows;
            while (child_->next(row)) {
                Row keys;
                keys.reserve(keys_.size());
                for (const auto& [expr, desc] : keys_) keys.push_back(expr.eval(row));
                rows_.push_back(std::move(row));
                key_rows.push_back(std::move(keys));
            }
            std::vector<std::size_t> order(rows_.size());
            for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                for (std::size_t k = 0; k < keys_.size(); ++k) {
                    auto c = compare(key_rows[a][k], key_rows[b][k]);
                    if (c == 0) continue;
                    return keys_[k].second ? c > 0 : c < 0;
                }
                return false;
            });
            std::vector<Row> sorted;
            sorted.reserve(rows_.size());
            for (std::size_t i : order) sorted.push_back(std::move(rows_[i]));
            rows_ = std::move(sorted);
            sorted_ = true;
        }
        if (pos_ >= rows_.size()) return false;
        out = std::move(rows_[pos_++]);
        return true;
    }

private:
    std::unique_ptr<RowSource> child_;
    std::vector<std::pair<CompiledExpr, bool>> keys_;
    bool sorted_ = false;
    std::vector<Row> rows_;
    std::size_t pos_ = 0;
};

class LimitSource final : public RowSource {
public:
    LimitSource(std::unique_ptr<RowSource> child, std::uint64_t n)
        : child_(std::move(child)), remaining_(n) {}

    bool next(Row& out) override {
        if (remaining_ == 0) return false;
        if (!child_->next(out)) return false;
        --remaining_;
        return true;
    }

private:
    std::unique_ptr<RowSource> child_;
    std::uint64_t remaining_;
};

class TrimSource final : public RowSource {
public:
    TrimSource(std::unique_ptr<RowSource> child, std::size_t width)
        : child_(std::move(child)), width_(width) {}

    bool next(Row& out) override {
        if (!child_->next(out)) return false;
        out.resize(width_);
        return true;
    }

private:
    std::unique_ptr<RowSource> child_;
    std::size_t width_;
};

// ---------------------------------------------------------------------------
// Plan -> sources
// ---------------------------------------------------------------------------

struct Builder {
    const GraphCache& cache;
    const ExecOptions& options;

    double estimate(const PlanNode* node) const {
        switch (node->op) {
        case PlanNode::Op::Scan: {
            double e = static_cast<double>(node->table_rows);
            for (std::size_t i = 0; i < node->constraints.size(); ++i) e /= 4.0;
            return e + 1.0;
        }
        case PlanNode::Op::Filter: return estimate(node->left.get()) / 2.0 + 1.0;
        case PlanNode::Op::Join:
        case PlanNode::Op::LeftOuterJoin:
            return std::max(estimate(node->left.get()), estimate(node->right.get()));
        default: return node->left ? estimate(node->left.get()) : 1.0;
        }
    }

    std::unique_ptr<RowSource> build_scan(const PlanNode& node) const {
        ScanShape shape = ScanShape::make(node, cache);
        // index-backed equality scan when any constrained column has one
        for (const PlanNode::Constraint& c : node.constraints) {
            if (shape.table.has_index(c.column))
                return std::make_unique<IndexScanSource>(std::move(shape), c.column,
                                                         c.value.format());
        }
        return std::make_unique<FullScanSource>(std::move(shape));
    }

    // Index nested-loop applies when the right child is a bare scan with an
    // index on one join column.
    std::unique_ptr<RowSource> try_index_join(const PlanNode& node) const {
        const PlanNode& right = *node.right;
        if (right.op != PlanNode::Op::Scan || node.join_vars.empty()) return nullptr;

        ScanShape shape = ScanShape::make(right, cache);
        const ColumnSchema& schema = shape.table.schema();

        std::vector<int> left_keys, right_key_cells, right_keep_cells;
        int lookup_pos = -1;
        std::string lookup_column;
        for (std::size_t k = 0; k < node.join_vars.size(); ++k) {
            const std::string& var = node.join_vars[k];
            left_keys.push_back(column_index(node.left->columns, var));
            auto bind = std::find_if(right.binds.begin(), right.binds.end(),
                                     [&var](const auto& p) { return p.first == var; });
            if (bind == right.binds.end()) return nullptr;
            right_key_cells.push_back(schema.index_of(bind->second));
            if (lookup_pos < 0 && shape.table.has_index(bind->second)) {
                lookup_pos = static_cast<int>(k);
                lookup_column = bind->second;
            }
        }
        if (lookup_pos < 0) return nullptr;

        for (const std::string& col : node.columns) {
            if (std::find(node.left->columns.begin(), node.left->columns.end(), col) !=
                node.left->columns.end())
                continue;
            auto bind = std::find_if(right.binds.begin(), right.binds.end(),
                                     [&col](const auto& p) { return p.first == col; });
            if (bind == right.binds.end()) return nullptr;
            right_keep_cells.push_back(schema.index_of(bind->second));
        }

        return std::make_unique<IndexNestedLoopSource>(
            build(*node.left), std::move(shape), std::move(left_keys), std::move(right_key_cells),
            std::move(lookup_column), lookup_pos, std::move(right_keep_cells));
    }

    std::unique_ptr<RowSource> build_join(const PlanNode& node) const {
        bool outer = node.op == PlanNode::Op::LeftOuterJoin;
        if (!outer) {
            bool want_inl = options.join_mode == ExecOptions::JoinMode::IndexNestedLoop;
            if (options.join_mode == ExecOptions::JoinMode::Auto)
                want_inl = estimate(node.left.get()) * 8.0 <
                           static_cast<double>(std::max<std::uint64_t>(node.right->table_rows, 1));
            if (want_inl) {
                if (auto src = try_index_join(node)) return src;
            }
        }

        std::vector<int> left_keys, right_keys, right_keep;
        for (const std::string& var : node.join_vars) {
            left_keys.push_back(column_index(node.left->columns, var));
            right_keys.push_back(column_index(node.right->columns, var));
        }
        for (std::size_t i = 0; i < node.right->columns.size(); ++i) {
            const std::string& col = node.right->columns[i];
            if (std::find(node.join_vars.begin(), node.join_vars.end(), col) ==
                node.join_vars.end())
                right_keep.push_back(static_cast<int>(i));
        }

        // inner joins build the smaller side; outer joins must build right
        bool build_left = !outer && estimate(node.left.get()) < estimate(node.right.get());
        if (build_left)
            return std::make_unique<SwappedHashJoin>(build(*node.right), build(*node.left),
                                                     std::move(right_keys), std::move(left_keys),
                                                     std::move(right_keep));
        return std::make_unique<HashJoinSource>(build(*node.left), build(*node.right),
                                                std::move(left_keys), std::move(right_keys),
                                                std::move(right_keep), outer);
    }

    // Hash join that builds on the left child: probe rows come from the
    // right, output stays left ++ right\join.
    class SwappedHashJoin final : public RowSource {
    public:
        SwappedHashJoin(std::unique_ptr<RowSource> probe_right, std::unique_ptr<RowSource> build_left,
                        std::vector<int> probe_keys, std::vector<int> build_keys,
                        std::vector<int> probe_keep)
            : probe_(std::move(probe_right)), build_(std::move(build_left)),
              probe_keys_(std::move(probe_keys)), build_keys_(std::move(build_keys)),
              probe_keep_(std::move(probe_keep)) {}

        bool next(Row& out) override {
            if (!built_) {
                Row row;
                while (build_->next(row)) table_[row_key(row, build_keys_)].push_back(row);
                built_ = true;
            }
            while (true) {
                if (hits_) {
                    if (hit_pos_ < hits_->size()) {
                        out = (*hits_)[hit_pos_++];
                        for (int c : probe_keep_) out.push_back(current_[static_cast<std::size_t>(c)]);
                        return true;
                    }
                    hits_ = nullptr;
                }
                if (!probe_->next(current_)) return false;
                auto it = table_.find(row_key(current_, probe_keys_));
                if (it != table_.end()) {
                    hits_ = &it->second;
                    hit_pos_ = 0;
                }
            }
        }

    private:
        std::unique_ptr<RowSource> probe_, build_;
        std::vector<int> probe_keys_, build_keys_, probe_keep_;
        bool built_ = false;
        std::unordered_map<std::string, std::vector<Row>> table_;
        Row current_;
        const std::vector<Row>* hits_ = nullptr;
        std::size_t hit_pos_ = 0;
    };

    std::unique_ptr<RowSource> build(const PlanNode& node) const {
        switch (node.op) {
        case PlanNode::Op::Scan:
            return build_scan(node);
        case PlanNode::Op::Join:
        case PlanNode::Op::LeftOuterJoin:
            return build_join(node);
        case PlanNode::Op::Filter:
            return std::make_unique<FilterSource>(build(*node.left),
                                                  CompiledExpr(node.predicate, node.left->columns));
        case PlanNode::Op::Project: {
            std::vector<CompiledExpr> items;
            for (const PlanNode::Item& item : node.items)
                items.emplace_back(item.expr, node.left->columns);
            return std::make_unique<ProjectSource>(build(*node.left), std::move(items));
        }
        case PlanNode::Op::Aggregate:
            return std::make_unique<AggregateSource>(build(*node.left), node, node.left->columns);
        case PlanNode::Op::Distinct:
            return std::make_unique<DistinctSource>(build(*node.left));
        case PlanNode::Op::Sort:
            return std::make_unique<SortSource>(build(*node.left), node, node.left->columns);
        case PlanNode::Op::Limit:
            return std::make_unique<LimitSource>(build(*node.left), node.limit);
        }
        throw SemanticError("unreachable plan operator");
    }
};

} // namespace

bool truthy(const Value& v) { return v.is_number() && v.as_double() != 0.0; }

Value evaluate(const ExprPtr& expr, const Row& row, const std::vector<std::string>& columns) {
    return CompiledExpr(expr, columns).eval(row);
}

QueryResult execute(const LogicalPlan& plan, const GraphCache& cache, const ExecOptions& options) {
    Builder builder{cache, options};
    QueryResult result;
    result.columns = plan.output_columns;
    auto rows = builder.build(*plan.root);
    if (plan.root->columns.size() > plan.output_columns.size())
        rows = std::make_unique<TrimSource>(std::move(rows), plan.output_columns.size());
    result.rows = std::move(rows);
    return result;
}

} // namespace kypher
