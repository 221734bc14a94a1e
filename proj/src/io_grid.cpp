#include <cstring>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "panicle/io.hpp"

namespace panicle {

namespace {
namespace fs = std::filesystem;
using nlohmann::json;

json loadJson(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw DataError("malformed JSON in " + path + ": " + e.what());
    }
    return j;
}
}  // namespace

DensityGrid readGrid(const std::string& json_path) {
    const json j = loadJson(json_path);
    DensityGrid grid;
    try {
        const auto dims = j.at("dims");
        for (int a = 0; a < 3; ++a) grid.dims[a] = dims.at(a).get<int>();
        const auto origin = j.at("origin");
        grid.origin = {origin.at(0).get<double>(), origin.at(1).get<double>(),
                       origin.at(2).get<double>()};
        const auto spacing = j.at("spacing");
        grid.spacing = {spacing.at(0).get<double>(), spacing.at(1).get<double>(),
                        spacing.at(2).get<double>()};
    } catch (const json::exception& e) {
        throw DataError("grid header " + json_path + ": " + e.what());
    }
    const std::size_t n =
        static_cast<std::size_t>(grid.dims[0]) * grid.dims[1] * grid.dims[2];
    if (j.contains("values")) {
        const auto& vals = j.at("values");
        if (vals.size() != n) throw DataError("grid 'values' length does not match dims");
        grid.values.reserve(n);
        for (const auto& v : vals) grid.values.push_back(v.get<float>());
    } else if (j.contains("data")) {
        const fs::path raw_path = fs::path(json_path).parent_path() / j.at("data").get<std::string>();
        std::ifstream raw(raw_path, std::ios::binary);
        if (!raw) throw DataError("cannot open grid data: " + raw_path.string());
        grid.values.resize(n);
        raw.read(reinterpret_cast<char*>(grid.values.data()),
                 static_cast<std::streamsize>(n * sizeof(float)));
        if (raw.gcount() != static_cast<std::streamsize>(n * sizeof(float)))
            throw DataError("truncated grid data: " + raw_path.string());
    } else {
        throw DataError("grid header missing 'data' or 'values': " + json_path);
    }
    grid.validate();
    return grid;
}

void writeGrid(const DensityGrid& grid, const std::string& json_path) {
    grid.validate();
    const fs::path jp(json_path);
    const fs::path raw_path = fs::path(jp).replace_extension(".raw");
    {
        std::ofstream raw(raw_path, std::ios::binary);
        if (!raw) throw DataError("cannot open for writing: " + raw_path.string());
        raw.write(reinterpret_cast<const char*>(grid.values.data()),
                  static_cast<std::streamsize>(grid.values.size() * sizeof(float)));
        if (!raw) throw DataError("write failed: " + raw_path.string());
    }
    json j;
    j["dims"] = {grid.dims[0], grid.dims[1], grid.dims[2]};
    j["origin"] = {grid.origin.x, grid.origin.y, grid.origin.z};
    j["spacing"] = {grid.spacing.x, grid.spacing.y, grid.spacing.z};
    j["data"] = raw_path.filename().string();
    std::ofstream out(jp);
    if (!out) throw DataError("cannot open for writing: " + json_path);
    out << j.dump(2) << "\n";
}

}  // namespace panicle
