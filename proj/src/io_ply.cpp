#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

#include "panicle/io.hpp"

namespace panicle {

namespace {

struct PlyProperty {
    std::string type;
    std::string name;
    bool is_list = false;
};

struct PlyElement {
    std::string name;
    std::size_t count = 0;
    std::vector<PlyProperty> properties;
};

[[noreturn]] void fail(std::size_t offset, const std::string& msg) {
    throw DataError("ply parse error at byte " + std::to_string(offset) + ": " + msg);
}

std::size_t scalarSize(const std::string& type) {
    if (type == "char" || type == "int8" || type == "uchar" || type == "uint8") return 1;
    if (type == "short" || type == "int16" || type == "ushort" || type == "uint16") return 2;
    if (type == "int" || type == "int32" || type == "uint" || type == "uint32") return 4;
    if (type == "float" || type == "float32") return 4;
    if (type == "double" || type == "float64") return 8;
    return 0;
}

bool isFloatType(const std::string& t) {
    return t == "float" || t == "float32" || t == "double" || t == "float64";
}

double readScalarLE(const char* p, const std::string& type) {
    if (type == "float" || type == "float32") {
        float v;
        std::memcpy(&v, p, 4);
        return v;
    }
    double v;
    std::memcpy(&v, p, 8);
    return v;
}

struct AsciiCursor {
    const std::string& data;
    std::size_t pos;

    // Returns the next whitespace-delimited token; empty at end of input.
    std::string next(std::size_t& token_offset) {
        while (pos < data.size() && std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        token_offset = pos;
        std::size_t start = pos;
        while (pos < data.size() && !std::isspace(static_cast<unsigned char>(data[pos]))) ++pos;
        return data.substr(start, pos - start);
    }
};

}  // namespace

PointCloud readPly(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open PLY file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    const std::string data = ss.str();

    // --- header ---
    std::size_t pos = 0;
    const auto nextLine = [&](std::size_t& line_offset) {
        line_offset = pos;
        std::size_t eol = data.find('\n', pos);
        if (eol == std::string::npos) fail(pos, "unterminated header");
        std::string line = data.substr(pos, eol - pos);
        if (!line.empty() && line.back() == '\r') line.pop_back();
        pos = eol + 1;
        return line;
    };

    std::size_t off = 0;
    if (nextLine(off) != "ply") fail(off, "missing 'ply' magic");
    bool binary = false;
    bool have_format = false;
    std::vector<PlyElement> elements;
    for (;;) {
        const std::string line = nextLine(off);
        std::istringstream ls(line);
        std::string kw;
        ls >> kw;
        if (kw == "comment" || kw == "obj_info" || kw.empty()) continue;
        if (kw == "format") {
            std::string fmt, version;
            ls >> fmt >> version;
            if (fmt == "ascii")
                binary = false;
            else if (fmt == "binary_little_endian")
                binary = true;
            else
                fail(off, "unsupported format '" + fmt + "'");
            have_format = true;
        } else if (kw == "element") {
            PlyElement el;
            long long count = -1;
            ls >> el.name >> count;
            if (el.name.empty() || count < 0) fail(off, "malformed element line");
            el.count = static_cast<std::size_t>(count);
            elements.push_back(el);
        } else if (kw == "property") {
            if (elements.empty()) fail(off, "property before any element");
            PlyProperty prop;
            std::string first;
            ls >> first;
            if (first == "list") {
                std::string count_type;
                ls >> count_type >> prop.type >> prop.name;
                prop.is_list = true;
            } else {
                prop.type = first;
                ls >> prop.name;
            }
            if (prop.name.empty()) fail(off, "malformed property line");
            if (!prop.is_list && scalarSize(prop.type) == 0)
                fail(off, "unsupported property type '" + prop.type + "'");
            elements.back().properties.push_back(prop);
        } else if (kw == "end_header") {
            break;
        } else {
            fail(off, "unrecognized header keyword '" + kw + "'");
        }
    }
    if (!have_format) fail(off, "missing format line");

    const PlyElement* vertex = nullptr;
    std::size_t vertex_order = 0;
    for (std::size_t i = 0; i < elements.size(); ++i) {
        if (elements[i].name == "vertex") {
            vertex = &elements[i];
            vertex_order = i;
            break;
        }
    }
    if (!vertex) fail(off, "no vertex element");

    std::map<std::string, int> slot;  // property name -> column
    for (std::size_t i = 0; i < vertex->properties.size(); ++i) {
        const PlyProperty& p = vertex->properties[i];
        if (p.is_list) fail(off, "list property in vertex element");
        slot[p.name] = static_cast<int>(i);
    }
    for (const char* req : {"x", "y", "z"}) {
        auto it = slot.find(req);
        if (it == slot.end()) fail(off, std::string("vertex missing property '") + req + "'");
        if (!isFloatType(vertex->properties[it->second].type))
            fail(off, std::string("unsupported property type for '") + req + "'");
    }
    const bool has_normals = slot.count("nx") && slot.count("ny") && slot.count("nz");
    const bool has_colors = slot.count("red") && slot.count("green") && slot.count("blue");

    PointCloud cloud;
    cloud.points.reserve(vertex->count);
    if (has_normals) cloud.normals.emplace();
    if (has_colors) cloud.colors.emplace();

    const auto column = [&](const char* name) { return slot.count(name) ? slot.at(name) : -1; };
    const int cx = column("x"), cy = column("y"), cz = column("z");
    const int cnx = column("nx"), cny = column("ny"), cnz = column("nz");
    const int cr = column("red"), cg = column("green"), cb = column("blue");

    if (binary) {
        // Elements preceding vertex must be fixed-size to be skippable.
        for (std::size_t e = 0; e < vertex_order; ++e) {
            std::size_t row = 0;
            for (const PlyProperty& p : elements[e].properties) {
                if (p.is_list) fail(pos, "cannot skip list element preceding vertex");
                row += scalarSize(p.type);
            }
            pos += row * elements[e].count;
        }
        std::vector<std::size_t> prop_offset(vertex->properties.size());
        std::size_t row_size = 0;
        for (std::size_t i = 0; i < vertex->properties.size(); ++i) {
            prop_offset[i] = row_size;
            row_size += scalarSize(vertex->properties[i].type);
        }
        if (pos + row_size * vertex->count > data.size())
            fail(data.size(), "truncated body: expected " +
                                  std::to_string(row_size * vertex->count) + " bytes of vertex data");
        const auto fetch = [&](const char* row, int col) {
            const PlyProperty& p = vertex->properties[col];
            return readScalarLE(row + prop_offset[col], p.type);
        };
        for (std::size_t i = 0; i < vertex->count; ++i) {
            const char* row = data.data() + pos + i * row_size;
            cloud.points.push_back({fetch(row, cx), fetch(row, cy), fetch(row, cz)});
            if (has_normals)
                cloud.normals->push_back({fetch(row, cnx), fetch(row, cny), fetch(row, cnz)});
            if (has_colors) {
                const auto byteAt = [&](int col) {
                    return static_cast<std::uint8_t>(
                        *(data.data() + pos + i * row_size + prop_offset[col]));
                };
                if (scalarSize(vertex->properties[cr].type) != 1)
                    fail(pos, "color properties must be uchar");
                cloud.colors->push_back({byteAt(cr), byteAt(cg), byteAt(cb)});
            }
        }
    } else {
        AsciiCursor cur{data, pos};
        std::vector<double> row(vertex->properties.size());
        for (std::size_t e = 0; e < elements.size(); ++e) {
            const PlyElement& el = elements[e];
            if (el.name != "vertex") {
                if (e > vertex_order) break;  // trailing elements are ignored
                for (const PlyProperty& p : el.properties)
                    if (p.is_list) fail(cur.pos, "cannot skip list element preceding vertex");
                std::size_t tok_off = 0;
                for (std::size_t i = 0; i < el.count * el.properties.size(); ++i)
                    if (cur.next(tok_off).empty()) fail(tok_off, "truncated body");
                continue;
            }
            for (std::size_t i = 0; i < el.count; ++i) {
                for (std::size_t c = 0; c < el.properties.size(); ++c) {
                    std::size_t tok_off = 0;
                    const std::string tok = cur.next(tok_off);
                    if (tok.empty()) fail(tok_off, "truncated body");
                    char* end = nullptr;
                    row[c] = std::strtod(tok.c_str(), &end);
                    if (end == tok.c_str()) fail(tok_off, "invalid numeric token '" + tok + "'");
                }
                cloud.points.push_back({row[cx], row[cy], row[cz]});
                if (has_normals) cloud.normals->push_back({row[cnx], row[cny], row[cnz]});
                if (has_colors)
                    cloud.colors->push_back({static_cast<std::uint8_t>(row[cr]),
                                             static_cast<std::uint8_t>(row[cg]),
                                             static_cast<std::uint8_t>(row[cb])});
            }
            break;
        }
    }
    cloud.validate();
    return cloud;
}

void writePly(const PointCloud& cloud, const std::string& path, PlyFormat format) {
    cloud.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot open for writing: " + path);

    out << "ply\n";
    out << (format == PlyFormat::Ascii ? "format ascii 1.0\n" : "format binary_little_endian 1.0\n");
    out << "element vertex " << cloud.size() << "\n";
    out << "property double x\nproperty double y\nproperty double z\n";
    if (cloud.hasNormals()) out << "property double nx\nproperty double ny\nproperty double nz\n";
    if (cloud.hasColors())
        out << "property uchar red\nproperty uchar green\nproperty uchar blue\n";
    out << "end_header\n";

    if (format == PlyFormat::Ascii) {
        char buf[256];
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const Vec3& p = cloud.points[i];
            int n = std::snprintf(buf, sizeof buf, "%.17g %.17g %.17g", p.x, p.y, p.z);
            out.write(buf, n);
            if (cloud.hasNormals()) {
                const Vec3& m = (*cloud.normals)[i];
                n = std::snprintf(buf, sizeof buf, " %.17g %.17g %.17g", m.x, m.y, m.z);
                out.write(buf, n);
            }
            if (cloud.hasColors()) {
                const Rgb8& c = (*cloud.colors)[i];
                n = std::snprintf(buf, sizeof buf, " %d %d %d", c.r, c.g, c.b);
                out.write(buf, n);
            }
            out.put('\n');
        }
    } else {
        const auto putd = [&](double v) { out.write(reinterpret_cast<const char*>(&v), 8); };
        for (std::size_t i = 0; i < cloud.size(); ++i) {
            const Vec3& p = cloud.points[i];
            putd(p.x);
            putd(p.y);
            putd(p.z);
            if (cloud.hasNormals()) {
                const Vec3& m = (*cloud.normals)[i];
                putd(m.x);
                putd(m.y);
                putd(m.z);
            }
            if (cloud.hasColors()) {
                const Rgb8& c = (*cloud.colors)[i];
                out.put(static_cast<char>(c.r));
                out.put(static_cast<char>(c.g));
                out.put(static_cast<char>(c.b));
            }
        }
    }
    if (!out) throw DataError("write failed: " + path);
}

}  // namespace panicle
