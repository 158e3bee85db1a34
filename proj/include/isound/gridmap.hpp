#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "isound/csv.hpp"
#include "isound/dataset.hpp"
#include "isound/errors.hpp"

namespace isound {

// Rasterized 2-D field over the slab lattice. Cell (i, j) sits at
// origin + spacing * (i, j); mask marks sampled cells.
template <typename T>
struct GridMap {
    int nx = 0;
    int ny = 0;
    double spacing_cm = 0.0;
    Position origin;
    std::vector<T> cells;
    std::vector<std::uint8_t> mask;

    T& at(int ix, int iy) { return cells[static_cast<std::size_t>(iy) * nx + ix]; }
    const T& at(int ix, int iy) const { return cells[static_cast<std::size_t>(iy) * nx + ix]; }
    bool sampled(int ix, int iy) const {
        return mask[static_cast<std::size_t>(iy) * nx + ix] != 0;
    }
};

using ScalarMap = GridMap<double>;
using LabelMap = GridMap<int>;

namespace gridmap_detail {

template <typename T>
GridMap<T> rasterize_impl(const Dataset& ds, std::span<const T> values) {
    if (values.size() != ds.recordings.size())
        throw data_error("rasterize: values not row-aligned with the dataset");
    const auto [nx, ny] = grid_dims(ds);
    GridMap<T> map;
    map.nx = nx;
    map.ny = ny;
    map.spacing_cm = ds.spacing_cm;
    map.origin = ds.origin;
    map.cells.assign(static_cast<std::size_t>(nx) * ny, T{});
    map.mask.assign(static_cast<std::size_t>(nx) * ny, 0);
    std::vector<std::string> owner(static_cast<std::size_t>(nx) * ny);
    for (std::size_t r = 0; r < ds.recordings.size(); ++r) {
        const auto& rec = ds.recordings[r];
        const auto [i, j] = lattice_cell(rec.position, ds.origin, ds.spacing_cm, rec.id);
        const std::size_t cell = static_cast<std::size_t>(j) * nx + static_cast<std::size_t>(i);
        if (map.mask[cell])
            throw data_error("rasterize: ids '" + owner[cell] + "' and '" + rec.id +
                             "' land in the same cell");
        map.cells[cell] = values[r];
        map.mask[cell] = 1;
        owner[cell] = rec.id;
    }
    return map;
}

} // namespace gridmap_detail

inline ScalarMap rasterize(const Dataset& ds, std::span<const double> values) {
    return gridmap_detail::rasterize_impl<double>(ds, values);
}

inline LabelMap rasterize_labels(const Dataset& ds, std::span<const int> labels) {
    return gridmap_detail::rasterize_impl<int>(ds, labels);
}

// Min-max scales the sampled cells to [0, 1], then applies gamma. A constant
// map becomes all 0.5.
inline ScalarMap normalize_map(ScalarMap map, double gamma = 1.0) {
    if (gamma <= 0.0) throw data_error("normalize_map: gamma must be positive");
    double lo = 0.0, hi = 0.0;
    bool any = false;
    for (std::size_t c = 0; c < map.cells.size(); ++c) {
        if (!map.mask[c]) continue;
        if (!any || map.cells[c] < lo) lo = any ? std::min(lo, map.cells[c]) : map.cells[c];
        hi = any ? std::max(hi, map.cells[c]) : map.cells[c];
        any = true;
    }
    if (!any) throw data_error("normalize_map: no sampled cells");
    const double range = hi - lo;
    for (std::size_t c = 0; c < map.cells.size(); ++c) {
        if (!map.mask[c]) {
            map.cells[c] = 0.0;
            continue;
        }
        map.cells[c] = range > 0.0 ? std::pow((map.cells[c] - lo) / range, gamma) : 0.5;
    }
    return map;
}

// Binary PGM (P5), maxval 255, rows top to bottom with y increasing downward.
// Masked cells render as 0.
inline std::vector<std::uint8_t> write_pgm(const ScalarMap& map) {
    std::string header = "P5\n" + std::to_string(map.nx) + " " + std::to_string(map.ny) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + map.cells.size());
    for (int j = 0; j < map.ny; ++j)
        for (int i = 0; i < map.nx; ++i) {
            double v = map.sampled(i, j) ? map.at(i, j) : 0.0;
            v = std::clamp(v, 0.0, 1.0);
            out.push_back(static_cast<std::uint8_t>(std::lround(v * 255.0)));
        }
    return out;
}

// Labels spread evenly over the gray range so any two clusters stay
// distinguishable; masked cells render as 0.
inline std::vector<std::uint8_t> write_pgm(const LabelMap& map) {
    int max_label = 0;
    for (std::size_t c = 0; c < map.cells.size(); ++c)
        if (map.mask[c]) max_label = std::max(max_label, map.cells[c]);
    ScalarMap scalar;
    scalar.nx = map.nx;
    scalar.ny = map.ny;
    scalar.spacing_cm = map.spacing_cm;
    scalar.origin = map.origin;
    scalar.mask = map.mask;
    scalar.cells.resize(map.cells.size());
    for (std::size_t c = 0; c < map.cells.size(); ++c)
        scalar.cells[c] =
            max_label > 0 ? static_cast<double>(map.cells[c]) / max_label : 1.0;
    return write_pgm(scalar);
}

inline ScalarMap parse_pgm(std::span<const std::uint8_t> bytes) {
    std::size_t pos = 0;
    auto next_token = [&]() -> std::string {
        while (pos < bytes.size()) {
            if (std::isspace(bytes[pos])) {
                ++pos;
            } else if (bytes[pos] == '#') {
                while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
            } else {
                break;
            }
        }
        std::string tok;
        while (pos < bytes.size() && !std::isspace(bytes[pos]))
            tok.push_back(static_cast<char>(bytes[pos++]));
        if (tok.empty()) throw data_error("pgm: truncated header");
        return tok;
    };
    if (next_token() != "P5") throw data_error("pgm: not a binary PGM (expected P5)");
    const long nx = parse_long(next_token(), "pgm width");
    const long ny = parse_long(next_token(), "pgm height");
    const long maxval = parse_long(next_token(), "pgm maxval");
    if (nx <= 0 || ny <= 0 || maxval != 255) throw data_error("pgm: unsupported geometry/maxval");
    ++pos; // single whitespace after maxval
    if (pos + static_cast<std::size_t>(nx) * ny > bytes.size())
        throw data_error("pgm: truncated pixel data");
    ScalarMap map;
    map.nx = static_cast<int>(nx);
    map.ny = static_cast<int>(ny);
    map.cells.resize(static_cast<std::size_t>(nx) * ny);
    map.mask.assign(map.cells.size(), 1);
    for (std::size_t c = 0; c < map.cells.size(); ++c)
        map.cells[c] = static_cast<double>(bytes[pos + c]) / 255.0;
    return map;
}

namespace gridmap_detail {

inline std::string cell_text(double v) { return format_double(v); }
inline std::string cell_text(int v) { return std::to_string(v); }

} // namespace gridmap_detail

// Header row carries the x coordinates (corner field empty); each data row
// starts with its y coordinate. Masked cells are empty fields. Values
// round-trip exactly.
template <typename T>
void write_map_csv(std::ostream& out, const GridMap<T>& map) {
    for (int i = 0; i < map.nx; ++i)
        out << ',' << format_double(map.origin.x_cm + map.spacing_cm * i);
    out << '\n';
    for (int j = 0; j < map.ny; ++j) {
        out << format_double(map.origin.y_cm + map.spacing_cm * j);
        for (int i = 0; i < map.nx; ++i) {
            out << ',';
            if (map.sampled(i, j)) out << gridmap_detail::cell_text(map.at(i, j));
        }
        out << '\n';
    }
}

inline ScalarMap read_map_csv(std::istream& in) {
    std::string line;
    if (!read_csv_line(in, line)) throw data_error("map csv: missing header");
    const auto header = split_csv(line);
    if (header.size() < 2 || !header[0].empty())
        throw data_error("map csv: bad header (expected leading empty field then x coordinates)");
    ScalarMap map;
    map.nx = static_cast<int>(header.size()) - 1;
    std::vector<double> xs(static_cast<std::size_t>(map.nx));
    for (int i = 0; i < map.nx; ++i)
        xs[static_cast<std::size_t>(i)] = parse_double(header[static_cast<std::size_t>(i) + 1],
                                                       "map csv x coordinate");
    map.origin.x_cm = xs.front();
    std::vector<double> ys;
    while (read_csv_line(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_csv(line);
        if (fields.size() != static_cast<std::size_t>(map.nx) + 1)
            throw data_error("map csv: ragged row");
        ys.push_back(parse_double(fields[0], "map csv y coordinate"));
        for (int i = 0; i < map.nx; ++i) {
            const std::string& f = fields[static_cast<std::size_t>(i) + 1];
            if (f.empty()) {
                map.cells.push_back(0.0);
                map.mask.push_back(0);
            } else {
                map.cells.push_back(parse_double(f, "map csv cell"));
                map.mask.push_back(1);
            }
        }
    }
    if (ys.empty()) throw data_error("map csv: no rows");
    map.ny = static_cast<int>(ys.size());
    map.origin.y_cm = ys.front();
    map.spacing_cm = map.nx > 1 ? xs[1] - xs[0] : (ys.size() > 1 ? ys[1] - ys[0] : 1.0);
    return map;
}

} // namespace isound
