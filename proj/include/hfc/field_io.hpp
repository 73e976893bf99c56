#pragma once

#include "hfc/error.hpp"
#include "hfc/torus.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>

namespace hfc {

// Binary field file:
//   bytes 0-7   magic "HFCFLD01"
//   bytes 8-11  uint32 n
//   bytes 12-15 uint32 g
//   bytes 16-19 uint32 N
//   bytes 20-23 uint32 layout tag (0 = vector field, 1 = N x N matrix field)
//   bytes 24-31 float64 period L
// followed by row-major complex64 values (float32 re, float32 im), all little-endian.
// Vector fields store g^n * N values, cell-major; matrix fields store g^n * N * N values,
// each cell's matrix row-major.

inline constexpr char kFieldMagic[8] = {'H', 'F', 'C', 'F', 'L', 'D', '0', '1'};
inline constexpr std::uint32_t kLayoutVector = 0;
inline constexpr std::uint32_t kLayoutMatrix = 1;

static_assert(std::endian::native == std::endian::little, "field I/O assumes a little-endian host");

namespace detail {

struct FieldHeader {
    std::uint32_t n, g, big_n, layout;
    double length;
};

inline void write_header(std::ofstream& out, const FieldHeader& h) {
    out.write(kFieldMagic, 8);
    out.write(reinterpret_cast<const char*>(&h.n), 4);
    out.write(reinterpret_cast<const char*>(&h.g), 4);
    out.write(reinterpret_cast<const char*>(&h.big_n), 4);
    out.write(reinterpret_cast<const char*>(&h.layout), 4);
    out.write(reinterpret_cast<const char*>(&h.length), 8);
}

inline FieldHeader read_header(std::ifstream& in, const std::string& path) {
    char magic[8];
    in.read(magic, 8);
    if (!in || std::memcmp(magic, kFieldMagic, 8) != 0) throw Error(ErrorKind::Io, path + ": bad magic");
    FieldHeader h{};
    in.read(reinterpret_cast<char*>(&h.n), 4);
    in.read(reinterpret_cast<char*>(&h.g), 4);
    in.read(reinterpret_cast<char*>(&h.big_n), 4);
    in.read(reinterpret_cast<char*>(&h.layout), 4);
    in.read(reinterpret_cast<char*>(&h.length), 8);
    if (!in) throw Error(ErrorKind::Io, path + ": truncated header");
    return h;
}

inline void write_c64(std::ofstream& out, cplx z) {
    const float re = float(z.real()), im = float(z.imag());
    out.write(reinterpret_cast<const char*>(&re), 4);
    out.write(reinterpret_cast<const char*>(&im), 4);
}

inline cplx read_c64(std::ifstream& in) {
    float re = 0, im = 0;
    in.read(reinterpret_cast<char*>(&re), 4);
    in.read(reinterpret_cast<char*>(&im), 4);
    return {double(re), double(im)};
}

} // namespace detail

inline void write_field(const std::string& path, const GridField& u) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    detail::write_header(out, {std::uint32_t(u.grid.n), std::uint32_t(u.grid.g), std::uint32_t(u.big_n),
                               kLayoutVector, u.grid.length});
    for (Eigen::Index i = 0; i < u.values.size(); ++i) detail::write_c64(out, u.values(i));
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

inline void write_matrix_field(const std::string& path, const MatrixField& m) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + path);
    detail::write_header(out, {std::uint32_t(m.grid.n), std::uint32_t(m.grid.g), std::uint32_t(m.big_n),
                               kLayoutMatrix, m.grid.length});
    for (const CMatrix& c : m.cells)
        for (int r = 0; r < m.big_n; ++r)
            for (int k = 0; k < m.big_n; ++k) detail::write_c64(out, c(r, k));
    if (!out) throw Error(ErrorKind::Io, "write failed: " + path);
}

inline GridField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    const auto h = detail::read_header(in, path);
    if (h.layout != kLayoutVector) throw Error(ErrorKind::Io, path + ": not a vector field");
    GridField u(TorusGrid(int(h.n), int(h.g), h.length), int(h.big_n));
    for (Eigen::Index i = 0; i < u.values.size(); ++i) u.values(i) = detail::read_c64(in);
    if (!in) throw Error(ErrorKind::Io, path + ": truncated data");
    return u;
}

inline MatrixField read_matrix_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::Io, "cannot open " + path);
    const auto h = detail::read_header(in, path);
    if (h.layout != kLayoutMatrix) throw Error(ErrorKind::Io, path + ": not a matrix field");
    MatrixField m = MatrixField::constant(TorusGrid(int(h.n), int(h.g), h.length),
                                          CMatrix::Zero(int(h.big_n), int(h.big_n)));
    for (CMatrix& c : m.cells)
        for (int r = 0; r < m.big_n; ++r)
            for (int k = 0; k < m.big_n; ++k) c(r, k) = detail::read_c64(in);
    if (!in) throw Error(ErrorKind::Io, path + ": truncated data");
    return m;
}

} // namespace hfc
