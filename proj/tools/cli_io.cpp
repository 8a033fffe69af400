#include "cli_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

namespace motcli {

namespace {

using mot::Error;
using mot::ErrorCode;

std::ifstream open_or_throw(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw Error(ErrorCode::InvalidInput, "cannot open '" + path + "'");
    return in;
}

double parse_cell(const std::string& cell, const std::string& path, std::size_t row,
                  std::size_t col) {
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    while (first != last && (*first == ' ' || *first == '\t'))
        ++first;
    while (last != first && (last[-1] == ' ' || last[-1] == '\t' || last[-1] == '\r'))
        --last;
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(first, last, value);
    if (ec != std::errc{} || ptr != last || first == last)
        throw Error(ErrorCode::InvalidInput, path + ": cell at row " + std::to_string(row) +
                                                 ", column " + std::to_string(col) +
                                                 " is not a decimal number");
    return value;
}

std::vector<std::vector<double>> read_csv_rows(const std::string& path, bool skip_header) {
    std::ifstream in = open_or_throw(path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (skip_header && lineno == 1)
            continue;
        // Ignore blank lines (covers trailing newlines).
        bool blank = true;
        for (char c : line)
            if (c != ' ' && c != '\t' && c != '\r')
                blank = false;
        if (blank)
            continue;
        std::vector<double> row;
        std::stringstream cells(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(cells, cell, ',')) {
            ++col;
            row.push_back(parse_cell(cell, path, lineno, col));
        }
        if (!rows.empty() && row.size() != rows.front().size())
            throw Error(ErrorCode::InvalidInput,
                        path + ": row " + std::to_string(lineno) + " has " +
                            std::to_string(row.size()) + " cells, expected " +
                            std::to_string(rows.front().size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty())
        throw Error(ErrorCode::InvalidInput, path + ": no data rows");
    return rows;
}

} // namespace

mot::Matrix read_csv_matrix(const std::string& path, bool skip_header) {
    const auto rows = read_csv_rows(path, skip_header);
    mot::Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j)
            m(i, j) = rows[i][j];
    return m;
}

mot::Vec read_csv_vector(const std::string& path) {
    const auto rows = read_csv_rows(path, false);
    mot::Vec v;
    if (rows.size() == 1) {
        v = rows.front();
    } else {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            if (rows[i].size() != 1)
                throw Error(ErrorCode::InvalidInput,
                            path + ": expected a single column or a single row of numbers");
            v.push_back(rows[i][0]);
        }
    }
    return v;
}

mot::GraphTopology read_graph_json(const std::string& path) {
    std::ifstream in = open_or_throw(path);
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInput, path + ": " + e.what());
    }

    mot::GraphTopology g;
    try {
        g.n = doc.at("n").get<std::size_t>();
        for (const auto& e : doc.at("edges")) {
            if (!e.is_array() || e.size() != 2)
                throw Error(ErrorCode::InvalidInput, path + ": edges must be [i, j] pairs");
            g.edges.emplace_back(e.at(0).get<std::size_t>(), e.at(1).get<std::size_t>());
        }
        if (doc.contains("weights"))
            g.edge_weights = doc.at("weights").get<mot::Vec>();
        if (doc.contains("self_loops"))
            g.self_loops_added = doc.at("self_loops").get<bool>();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::InvalidInput, path + ": " + e.what());
    }
    g.validate();
    return g;
}

} // namespace motcli
