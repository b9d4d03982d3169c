#include "mlenkf/csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "mlenkf/errors.hpp"

namespace mlenkf {

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    ensure(ec == std::errc(), "format_double: conversion failed");
    return std::string(buf, ptr);
}

std::string results_row(const RunRecord& r) {
    std::string row;
    row += method_name(r.method);
    row += ',' + std::to_string(r.example) + ',';
    row += solver_name(r.solver);
    row += ',' + format_double(r.epsilon) + ',' + std::to_string(r.L) + ',' + format_double(r.cost_units) +
           ',' + format_double(r.wall_seconds) + ',' + format_double(r.mse) + ',' +
           std::to_string(r.realizations) + '\n';
    return row;
}

std::string results_csv(const std::vector<RunRecord>& records) {
    std::string out = std::string(kResultsHeader) + '\n';
    for (const auto& r : records) out += results_row(r);
    return out;
}

std::string schedule_csv(const std::vector<Schedule>& schedules, const LevelHierarchy& hierarchy) {
    std::string out = "method,epsilon,level,M,N,J\n";
    for (const auto& s : schedules) {
        for (std::size_t i = 0; i < s.M.size(); ++i) {
            const int level = s.method == Method::enkf ? s.L : static_cast<int>(i);
            out += std::string(method_name(s.method)) + ',' + format_double(s.epsilon) + ',' +
                   std::to_string(level) + ',' + std::to_string(s.M[i]) + ',' +
                   std::to_string(hierarchy.modes(level)) + ',' +
                   std::to_string(hierarchy.substeps(level)) + '\n';
        }
    }
    return out;
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

template <class T>
T cell_value(const std::string& cell, std::size_t line_no) {
    T value{};
    const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), value);
    require(ec == std::errc() && ptr == cell.data() + cell.size() && !cell.empty(),
            "results.csv line " + std::to_string(line_no) + ": bad number '" + cell + "'");
    return value;
}

}  // namespace

std::vector<RunRecord> parse_results_csv(std::istream& in) {
    std::string line;
    require(static_cast<bool>(std::getline(in, line)), "results.csv: empty input");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    require(line == kResultsHeader, "results.csv: unexpected header '" + line + "'");
    std::vector<RunRecord> records;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line);
        require(cells.size() == 9, "results.csv line " + std::to_string(line_no) + ": expected 9 fields");
        RunRecord r;
        r.method = parse_method(cells[0]);
        r.example = cell_value<int>(cells[1], line_no);
        r.solver = parse_solver(cells[2]);
        r.epsilon = cell_value<double>(cells[3], line_no);
        r.L = cell_value<int>(cells[4], line_no);
        r.cost_units = cell_value<double>(cells[5], line_no);
        r.wall_seconds = cell_value<double>(cells[6], line_no);
        r.mse = cell_value<double>(cells[7], line_no);
        r.realizations = cell_value<std::size_t>(cells[8], line_no);
        records.push_back(r);
    }
    return records;
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    require(static_cast<bool>(out), "cannot write " + path.string());
    out << text;
    out.flush();
    require(static_cast<bool>(out), "failed while writing " + path.string());
}

}  // namespace mlenkf
