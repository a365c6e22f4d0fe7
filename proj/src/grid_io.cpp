#include "vrs/grid_io.hpp"

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

#include "vrs/errors.hpp"

namespace vrs {

namespace {

constexpr char kMagic[8] = {'V', 'R', 'S', 'G', 'R', 'I', 'D', '1'};

template <class T>
void put(std::ostream& out, T value) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char bytes[sizeof(T)];
    std::memcpy(bytes, &value, sizeof(T));
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    out.write(reinterpret_cast<const char*>(bytes), sizeof(T));
}

template <class T>
T get(std::istream& in) {
    unsigned char bytes[sizeof(T)];
    in.read(reinterpret_cast<char*>(bytes), sizeof(T));
    if (!in) throw ConfigurationError("read_grid: truncated stream");
    if constexpr (std::endian::native == std::endian::big) std::reverse(bytes, bytes + sizeof(T));
    T value;
    std::memcpy(&value, bytes, sizeof(T));
    return value;
}

}  // namespace

void write_grid(std::ostream& out, const GridField& field) {
    field.validate();
    out.write(kMagic, sizeof(kMagic));
    for (auto d : field.spec.dims) put<std::uint64_t>(out, d);
    for (int a = 0; a < 3; ++a) put<double>(out, field.spec.spacing[a]);
    for (int a = 0; a < 3; ++a) put<double>(out, field.spec.origin[a]);
    put<std::uint8_t>(out, field.space == GridSpace::Velocity ? 1 : 0);
    put<std::uint8_t>(out, static_cast<std::uint8_t>(field.components));
    const char pad[6] = {};
    out.write(pad, sizeof(pad));
    for (double v : field.values) put<double>(out, v);
}

GridField read_grid(std::istream& in) {
    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) throw ConfigurationError("read_grid: bad magic");
    GridField f;
    for (auto& d : f.spec.dims) d = get<std::uint64_t>(in);
    for (int a = 0; a < 3; ++a) f.spec.spacing[a] = get<double>(in);
    for (int a = 0; a < 3; ++a) f.spec.origin[a] = get<double>(in);
    const auto space = get<std::uint8_t>(in);
    if (space > 1) throw ConfigurationError("read_grid: bad space tag");
    f.space = space == 1 ? GridSpace::Velocity : GridSpace::Position;
    f.components = get<std::uint8_t>(in);
    char pad[6];
    in.read(pad, sizeof(pad));
    if (f.components != 1 && f.components != 3) throw ConfigurationError("read_grid: bad component count");
    f.values.resize(f.components * f.spec.node_count());
    for (auto& v : f.values) v = get<double>(in);
    f.validate();
    return f;
}

void save_grid(const std::string& path, const GridField& field) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigurationError("save_grid: cannot open " + path);
    write_grid(out, field);
}

GridField load_grid(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigurationError("load_grid: cannot open " + path);
    return read_grid(in);
}

}  // namespace vrs
