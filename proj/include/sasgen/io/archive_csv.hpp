#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sasgen/qd/archive.hpp>

namespace sasgen::io {

/// Archive snapshot row: cell coordinates, measures, objective, parameters.
struct ArchiveRow {
    int cell_i = 0, cell_j = 0;
    Eigen::VectorXd m;
    double objective = 0.0;
    Eigen::VectorXd theta;
};

inline std::string format_g9(double v)
{
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

/// Writes the archive as CSV: header row, then one row per occupied cell in
/// cell-index order; floats carry 9 significant digits.
inline void write_archive_csv(const qd::Archive& archive, const std::string& path)
{
    std::ofstream os(path);
    if (!os)
        throw std::runtime_error("write_archive_csv: cannot open " + path);
    int param_dim = 0;
    for (int idx : archive.occupied_cells()) {
        param_dim = static_cast<int>(archive.cell(idx)->theta.size());
        break;
    }
    os << "cell_i,cell_j,measure_0,measure_1,objective";
    for (int i = 0; i < param_dim; i++)
        os << ",theta_" << i;
    os << "\n";
    for (int idx : archive.occupied_cells()) {
        const auto& e = *archive.cell(idx);
        const auto c = qd::cell_coords(archive.spec(), e.m);
        os << c[0] << "," << c[1];
        for (Eigen::Index i = 0; i < e.m.size(); i++)
            os << "," << format_g9(e.m[i]);
        os << "," << format_g9(e.f);
        for (Eigen::Index i = 0; i < e.theta.size(); i++)
            os << "," << format_g9(e.theta[i]);
        os << "\n";
    }
}

inline std::vector<ArchiveRow> read_archive_csv(const std::string& path)
{
    std::ifstream is(path);
    if (!is)
        throw std::runtime_error("read_archive_csv: cannot open " + path);
    std::string header;
    if (!std::getline(is, header))
        throw std::runtime_error("read_archive_csv: empty file " + path);
    if (header.rfind("cell_i,cell_j,measure_0,measure_1,objective", 0) != 0)
        throw std::runtime_error("read_archive_csv: unexpected header in " + path);

    std::vector<ArchiveRow> rows;
    std::string line;
    while (std::getline(is, line)) {
        if (line.empty())
            continue;
        std::vector<std::string> parts;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ','))
            parts.push_back(tok);
        if (parts.size() < 5)
            throw std::runtime_error("read_archive_csv: malformed row in " + path);
        ArchiveRow r;
        r.cell_i = std::stoi(parts[0]);
        r.cell_j = std::stoi(parts[1]);
        r.m.resize(2);
        r.m[0] = std::stod(parts[2]);
        r.m[1] = std::stod(parts[3]);
        r.objective = std::stod(parts[4]);
        r.theta.resize(static_cast<Eigen::Index>(parts.size()) - 5);
        for (std::size_t i = 5; i < parts.size(); i++)
            r.theta[static_cast<Eigen::Index>(i - 5)] = std::stod(parts[i]);
        rows.push_back(std::move(r));
    }
    return rows;
}

} // namespace sasgen::io
