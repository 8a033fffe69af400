#pragma once

#include <string>

#include "mot/graph.hpp"
#include "mot/types.hpp"

namespace motcli {

/// Rectangular CSV of decimal floats. Throws mot::Error(InvalidInput) with
/// the file name plus 1-based row/column of the offending cell. `skip_header`
/// drops the first line unparsed.
mot::Matrix read_csv_matrix(const std::string& path, bool skip_header = false);

/// Single-column (or single-row) CSV of decimal floats.
mot::Vec read_csv_vector(const std::string& path);

/// Graph JSON: {"n": int, "edges": [[i,j],...], "weights": [...]?,
/// "self_loops": bool?}. Validates the resulting topology.
mot::GraphTopology read_graph_json(const std::string& path);

} // namespace motcli
