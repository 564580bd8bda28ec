#pragma once

#include "kypher/value.hpp"

#include <string>
#include <vector>

namespace kypher {

// One edge-file row: a Value per schema column.
using Record = std::vector<Value>;

// Ordered column list plus resolved positions of the KGTK roles. Role
// resolution is by exact, case-sensitive name. Query outputs may omit roles;
// files read as graphs must carry node1, label and node2.
struct ColumnSchema {
    std::vector<std::string> columns;
    int node1 = -1;
    int label = -1;
    int node2 = -1;
    int id = -1;

    // Validates name uniqueness and resolves roles. When `require_roles` is
    // set, missing node1/label/node2 is a schema error.
    static ColumnSchema from_columns(std::vector<std::string> columns, bool require_roles);

    std::size_t size() const { return columns.size(); }
    bool has_column(const std::string& name) const { return index_of(name) >= 0; }
    int index_of(const std::string& name) const;

    bool operator==(const ColumnSchema& o) const { return columns == o.columns; }
};

} // namespace kypher
