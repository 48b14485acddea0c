#pragma once

#include <algorithm>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <sasgen/io/archive_csv.hpp>

namespace sasgen::io {

/// Renders an archive CSV as a portable pixmap: one pixel block per cell,
/// objective color-mapped over [0, cap], empty cells on a dark background.
/// Axes metadata goes into a sidecar text file next to the image.
struct HeatmapOptions {
    int bins_i = 0;        // 0: inferred from the largest cell index
    int bins_j = 0;
    double cap = 0.0;      // 0: maximum objective in the file
    int block = 4;         // pixels per cell
    std::string axis_note; // written into the sidecar
};

namespace detail {

    inline void color_map(double t, unsigned char* rgb)
    {
        t = std::clamp(t, 0.0, 1.0);
        // Dark blue through magenta to yellow.
        const double r = std::clamp(1.5 * t, 0.0, 1.0);
        const double g = std::clamp(1.8 * (t - 0.45), 0.0, 1.0);
        const double b = std::clamp(1.0 - 1.2 * t + 0.4 * t * t, 0.1, 1.0);
        rgb[0] = static_cast<unsigned char>(30 + 225 * r);
        rgb[1] = static_cast<unsigned char>(20 + 235 * g);
        rgb[2] = static_cast<unsigned char>(60 + 195 * b * (1.0 - 0.8 * t));
    }

} // namespace detail

inline void write_heatmap(const std::vector<ArchiveRow>& rows, const std::string& image_path,
    HeatmapOptions opt = {})
{
    int bi = opt.bins_i, bj = opt.bins_j;
    if (bi <= 0 || bj <= 0) {
        for (const auto& r : rows) {
            bi = std::max(bi, r.cell_i + 1);
            bj = std::max(bj, r.cell_j + 1);
        }
        bi = std::max(bi, 1);
        bj = std::max(bj, 1);
    }
    double cap = opt.cap;
    if (cap <= 0.0) {
        for (const auto& r : rows)
            cap = std::max(cap, r.objective);
        if (cap <= 0.0)
            cap = 1.0;
    }

    std::vector<double> value(static_cast<std::size_t>(bi) * bj, -1.0);
    for (const auto& r : rows) {
        if (r.cell_i < 0 || r.cell_i >= bi || r.cell_j < 0 || r.cell_j >= bj)
            throw std::runtime_error("write_heatmap: cell index outside the raster");
        value[static_cast<std::size_t>(r.cell_i) * bj + r.cell_j] = r.objective;
    }

    const int W = bj * opt.block, H = bi * opt.block;
    std::ofstream os(image_path, std::ios::binary);
    if (!os)
        throw std::runtime_error("write_heatmap: cannot open " + image_path);
    os << "P6\n" << W << " " << H << "\n255\n";
    std::vector<unsigned char> row(static_cast<std::size_t>(W) * 3);
    for (int y = 0; y < H; y++) {
        // Row 0 of the image is the highest cell_i so the first measure
        // increases upward.
        const int ci = bi - 1 - y / opt.block;
        for (int x = 0; x < W; x++) {
            const int cj = x / opt.block;
            unsigned char* px = &row[static_cast<std::size_t>(x) * 3];
            const double v = value[static_cast<std::size_t>(ci) * bj + cj];
            if (v < 0.0) {
                px[0] = px[1] = px[2] = 38;
            }
            else {
                detail::color_map(v / cap, px);
            }
        }
        os.write(reinterpret_cast<const char*>(row.data()), static_cast<std::streamsize>(row.size()));
    }

    std::ofstream side(image_path + ".txt");
    side << "rows: measure_0 cells (bottom row of image = cell 0), bins = " << bi << "\n";
    side << "cols: measure_1 cells (left column = cell 0), bins = " << bj << "\n";
    side << "color: objective over [0, " << format_g9(cap) << "], empty cells dark gray\n";
    side << "block: " << opt.block << " px per cell\n";
    if (!opt.axis_note.empty())
        side << opt.axis_note << "\n";
}

} // namespace sasgen::io
