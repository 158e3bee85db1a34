#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <sstream>
#include <vector>

#include "isound/gridmap.hpp"
#include "isound/synth.hpp"

using namespace isound;
using Catch::Matchers::WithinAbs;

namespace {

Dataset lattice_dataset(int nx, int ny, double spacing = 2.0) {
    Dataset ds;
    ds.spacing_cm = spacing;
    ds.origin = {0.0, 0.0};
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i) {
            Recording rec;
            rec.id = "c" + std::to_string(j * nx + i);
            rec.position = {spacing * i, spacing * j};
            rec.samples = {0.0};
            rec.sample_rate_hz = 44100.0;
            ds.recordings.push_back(std::move(rec));
        }
    return ds;
}

} // namespace

TEST_CASE("survey-sized dataset rasterizes to an 82x11 grid", "[gridmap]") {
    const Dataset ds = lattice_dataset(82, 11);
    std::vector<double> values(ds.recordings.size());
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = static_cast<double>(i);
    const ScalarMap map = rasterize(ds, values);
    REQUIRE(map.nx == 82);
    REQUIRE(map.ny == 11);
    REQUIRE(map.cells.size() == 902);
    REQUIRE(std::all_of(map.mask.begin(), map.mask.end(), [](auto m) { return m == 1; }));
    REQUIRE(map.at(81, 10) == 901.0);
}

TEST_CASE("single point gives a 1x1 sampled grid", "[gridmap]") {
    const Dataset ds = lattice_dataset(1, 1);
    const ScalarMap map = rasterize(ds, std::vector<double>{3.25});
    REQUIRE(map.nx == 1);
    REQUIRE(map.ny == 1);
    REQUIRE(map.sampled(0, 0));
    REQUIRE(map.at(0, 0) == 3.25);
}

TEST_CASE("a missing lattice point leaves a masked cell", "[gridmap]") {
    Dataset ds = lattice_dataset(3, 3);
    ds.recordings.erase(ds.recordings.begin() + 4); // drop the center
    std::vector<double> values(8, 1.0);
    const ScalarMap map = rasterize(ds, values);
    REQUIRE(map.cells.size() == 9);
    REQUIRE_FALSE(map.sampled(1, 1));
    int sampled = 0;
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i) sampled += map.sampled(i, j) ? 1 : 0;
    REQUIRE(sampled == 8);
}

TEST_CASE("cell collisions name both ids", "[gridmap]") {
    Dataset ds = lattice_dataset(3, 1);
    ds.recordings[1].position = {0.3, 0.0}; // rounds onto cell 0, shared with c0
    REQUIRE_THROWS_WITH(rasterize(ds, std::vector<double>{1.0, 2.0, 3.0}),
                        Catch::Matchers::ContainsSubstring("'c0'") &&
                            Catch::Matchers::ContainsSubstring("'c1'"));
}

TEST_CASE("rasterize is order-free", "[gridmap]") {
    Dataset ds = lattice_dataset(4, 3);
    std::vector<double> values(12);
    for (std::size_t i = 0; i < 12; ++i) values[i] = static_cast<double>(i) * 1.5;
    const ScalarMap base = rasterize(ds, values);

    std::reverse(ds.recordings.begin(), ds.recordings.end());
    std::reverse(values.begin(), values.end());
    const ScalarMap permuted = rasterize(ds, values);
    REQUIRE(base.cells == permuted.cells);
    REQUIRE(base.mask == permuted.mask);
}

TEST_CASE("min-max normalization with gamma", "[gridmap]") {
    const Dataset ds = lattice_dataset(3, 1);

    SECTION("linear scaling") {
        const ScalarMap map = normalize_map(rasterize(ds, std::vector<double>{2, 4, 6}));
        REQUIRE(map.cells == std::vector<double>{0.0, 0.5, 1.0});
    }
    SECTION("gamma squares the scaled values") {
        const ScalarMap map =
            normalize_map(rasterize(ds, std::vector<double>{0.0, 0.25, 1.0}), 2.0);
        REQUIRE(map.cells == std::vector<double>{0.0, 0.0625, 1.0});
    }
    SECTION("constant maps settle at 0.5") {
        const ScalarMap map = normalize_map(rasterize(ds, std::vector<double>{7, 7, 7}));
        REQUIRE(map.cells == std::vector<double>{0.5, 0.5, 0.5});
    }
    SECTION("idempotent at gamma 1 on already-normalized maps") {
        const ScalarMap once = normalize_map(rasterize(ds, std::vector<double>{2, 4, 6}));
        const ScalarMap twice = normalize_map(once);
        REQUIRE(once.cells == twice.cells);
    }
}

TEST_CASE("pgm bytes for tiny maps", "[gridmap]") {
    SECTION("1x1 value 1.0 renders as 255") {
        const Dataset ds = lattice_dataset(1, 1);
        const auto bytes = write_pgm(rasterize(ds, std::vector<double>{1.0}));
        const std::string header(bytes.begin(), bytes.begin() + 9);
        REQUIRE(header == "P5\n1 1\n25"); // "P5\n1 1\n255\n" + payload
        REQUIRE(bytes.back() == 255);
        REQUIRE(bytes.size() == 12);
    }
    SECTION("2x1 map {0, 1} renders as {0, 255}") {
        const Dataset ds = lattice_dataset(2, 1);
        const auto bytes = write_pgm(rasterize(ds, std::vector<double>{0.0, 1.0}));
        REQUIRE(bytes[bytes.size() - 2] == 0);
        REQUIRE(bytes[bytes.size() - 1] == 255);
    }
}

TEST_CASE("pgm round-trip stays within one gray level", "[gridmap]") {
    const Dataset ds = lattice_dataset(6, 4);
    std::vector<double> values(24);
    for (std::size_t i = 0; i < 24; ++i) values[i] = static_cast<double>((i * 7) % 24);
    const ScalarMap map = normalize_map(rasterize(ds, values));
    const ScalarMap back = parse_pgm(write_pgm(map));
    REQUIRE(back.nx == map.nx);
    REQUIRE(back.ny == map.ny);
    for (int j = 0; j < map.ny; ++j)
        for (int i = 0; i < map.nx; ++i)
            REQUIRE_THAT(back.at(i, j), WithinAbs(map.at(i, j), 1.0 / 255.0));
}

TEST_CASE("label maps spread labels over the gray range", "[gridmap]") {
    const Dataset ds = lattice_dataset(3, 1);
    const auto bytes = write_pgm(rasterize_labels(ds, std::vector<int>{0, 1, 2}));
    const std::size_t n = bytes.size();
    REQUIRE(bytes[n - 3] == 0);
    REQUIRE(bytes[n - 2] == 128);
    REQUIRE(bytes[n - 1] == 255);
}

TEST_CASE("map csv round-trips exactly and keeps masked cells empty", "[gridmap]") {
    Dataset ds = lattice_dataset(3, 3);
    ds.recordings.erase(ds.recordings.begin() + 4);
    std::vector<double> values{0.125, 1.5, -2.75, 3.0, 4.5, 5.0, 6.25, 7.125};
    const ScalarMap map = rasterize(ds, values);

    std::ostringstream out;
    write_map_csv(out, map);
    const std::string text = out.str();
    REQUIRE(std::count(text.begin(), text.end(), '\n') == 4); // header + 3 rows

    std::istringstream in(text);
    const ScalarMap back = read_map_csv(in);
    REQUIRE(back.nx == map.nx);
    REQUIRE(back.ny == map.ny);
    REQUIRE(back.mask == map.mask);
    for (int j = 0; j < 3; ++j)
        for (int i = 0; i < 3; ++i)
            if (map.sampled(i, j)) REQUIRE(back.at(i, j) == map.at(i, j));
}

TEST_CASE("fully masked maps serialize as empty fields", "[gridmap]") {
    ScalarMap map;
    map.nx = 2;
    map.ny = 1;
    map.spacing_cm = 2.0;
    map.origin = {0.0, 0.0};
    map.cells = {0.0, 0.0};
    map.mask = {0, 0};
    std::ostringstream out;
    write_map_csv(out, map);
    REQUIRE(out.str() == ",0,2\n0,,\n");
}

TEST_CASE("survey-geometry csv has 12 lines of 83 fields", "[gridmap]") {
    const Dataset ds = lattice_dataset(82, 11);
    std::vector<double> values(902, 1.0);
    std::ostringstream out;
    write_map_csv(out, rasterize(ds, values));
    std::istringstream in(out.str());
    std::string line;
    int lines = 0;
    while (std::getline(in, line)) {
        ++lines;
        REQUIRE(std::count(line.begin(), line.end(), ',') == 82); // 83 fields
    }
    REQUIRE(lines == 12);
}
