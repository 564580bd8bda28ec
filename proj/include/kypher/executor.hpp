#pragma once

#include "kypher/cache.hpp"
#include "kypher/plan.hpp"

#include <memory>
#include <string>
#include <vector>

namespace kypher {

using Row = std::vector<Value>;

// Pull-based row stream. Implementations materialize only where the
// operator requires it (sort, aggregate, distinct, hash-join build side).
class RowSource {
public:
    virtual ~RowSource() = default;
    virtual bool next(Row& out) = 0;
};

struct ExecOptions {
    enum class JoinMode { Auto, Hash, IndexNestedLoop };
    // Auto picks per join from size estimates; the forced modes exist for
    // the differential suite. IndexNestedLoop falls back to hash when the
    // join is not index-eligible.
    JoinMode join_mode = JoinMode::Auto;
};

struct QueryResult {
    std::vector<std::string> columns; // the return aliases, in order
    std::unique_ptr<RowSource> rows;
};

// Evaluates a compiled plan against the cache. Scans use indexes when
// present and fall back to filtered full scans otherwise.
QueryResult execute(const LogicalPlan& plan, const GraphCache& cache,
                    const ExecOptions& options = {});

// Scalar evaluation of an expression against one row; variables resolve by
// column name. Comparisons yield Number(0/1); any comparison involving
// Empty is false; failures (bad casts) yield Empty.
Value evaluate(const ExprPtr& expr, const Row& row, const std::vector<std::string>& columns);

// Empty/zero are falsy, non-zero numbers truthy, text never satisfies a
// filter.
bool truthy(const Value& v);

} // namespace kypher
