#include "jflow/io.hpp"

#include <bit>
#include <charconv>
#include <cstring>
#include <fstream>

#include "jflow/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "field dumps are little-endian; big-endian hosts are unsupported");

namespace jflow {

namespace {
constexpr char kMagic[4] = {'J', 'F', 'L', 'B'};
}

void write_field_dump(const std::string& path, const ScalarField& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);

    const Grid& grid = field.grid();
    out.write(kMagic, 4);
    const std::uint32_t version = kFieldDumpVersion;
    out.write(reinterpret_cast<const char*>(&version), sizeof(version));
    const std::uint8_t mode = static_cast<std::uint8_t>(grid.mode());
    const std::uint8_t ndims = static_cast<std::uint8_t>(grid.rank());
    out.write(reinterpret_cast<const char*>(&mode), 1);
    out.write(reinterpret_cast<const char*>(&ndims), 1);
    for (int d = 0; d < grid.rank(); ++d) {
        const std::uint32_t dim = static_cast<std::uint32_t>(grid.resolution());
        out.write(reinterpret_cast<const char*>(&dim), sizeof(dim));
    }
    out.write(reinterpret_cast<const char*>(field.data()),
              static_cast<std::streamsize>(field.size() * sizeof(double)));
    if (!out) throw IoError("write failed: " + path);
}

ScalarField read_field_dump(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open for reading: " + path);

    char magic[4];
    in.read(magic, 4);
    if (!in || std::memcmp(magic, kMagic, 4) != 0)
        throw IoError("bad magic in field dump: " + path);

    std::uint32_t version = 0;
    in.read(reinterpret_cast<char*>(&version), sizeof(version));
    if (version != kFieldDumpVersion) throw IoError("unsupported field dump version");

    std::uint8_t mode = 0, ndims = 0;
    in.read(reinterpret_cast<char*>(&mode), 1);
    in.read(reinterpret_cast<char*>(&ndims), 1);
    if (mode > 1 || (ndims != 2 && ndims != 4)) throw IoError("corrupt field dump header");

    std::uint32_t resolution = 0;
    for (int d = 0; d < ndims; ++d) {
        std::uint32_t dim = 0;
        in.read(reinterpret_cast<char*>(&dim), sizeof(dim));
        if (d == 0)
            resolution = dim;
        else if (dim != resolution)
            throw IoError("field dump dims must agree on every axis");
    }

    Grid grid(static_cast<GridMode>(mode), static_cast<int>(resolution));
    if (grid.rank() != ndims) throw IoError("field dump mode/ndims mismatch");

    ScalarField field(grid);
    in.read(reinterpret_cast<char*>(field.data()),
            static_cast<std::streamsize>(field.size() * sizeof(double)));
    if (!in) throw IoError("truncated field dump: " + path);
    return field;
}

std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

} // namespace jflow
