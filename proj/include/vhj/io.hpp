#pragma once

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>

#include "grid.hpp"

namespace vhj {

// Shortest round-trippable decimal formatting; keeps CSV output byte-deterministic.
inline std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

/** Field CSV layout: one header row naming the index columns and value column(s),
 *  then one row per grid point in row-major order. */
inline void write_csv(const Field& f, std::ostream& os) {
    const Grid& g = f.grid;
    for (int k = 0; k < g.dim; ++k) os << "i" << k << ",";
    os << "value\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto mi = g.unflat(i);
        for (int k = 0; k < g.dim; ++k) os << mi[k] << ",";
        os << fmt_double(f[i]) << "\n";
    }
}

inline void write_csv(const ComplexField& f, std::ostream& os) {
    const Grid& g = f.grid;
    for (int k = 0; k < g.dim; ++k) os << "i" << k << ",";
    os << "re,im\n";
    for (std::size_t i = 0; i < f.size(); ++i) {
        auto mi = g.unflat(i);
        for (int k = 0; k < g.dim; ++k) os << mi[k] << ",";
        os << fmt_double(f[i].real()) << "," << fmt_double(f[i].imag()) << "\n";
    }
}

template <class T>
void save_csv(const FieldT<T>& f, const std::string& path) {
    std::ofstream os(path);
    if (!os) throw std::runtime_error("save_csv: cannot open " + path);
    write_csv(f, os);
}

inline Field load_csv_real(const std::string& path, const Grid& g) {
    std::ifstream is(path);
    if (!is) throw std::runtime_error("load_csv_real: cannot open " + path);
    std::string line;
    std::getline(is, line);  // header
    Field f(g);
    std::size_t count = 0;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string tok;
        std::array<int, 3> mi{0, 0, 0};
        for (int k = 0; k < g.dim; ++k) {
            std::getline(ss, tok, ',');
            mi[k] = std::stoi(tok);
        }
        std::getline(ss, tok, ',');
        f[g.flat(mi)] = std::stod(tok);
        ++count;
    }
    if (count != g.size()) throw std::runtime_error("load_csv_real: row count does not match grid");
    return f;
}

// Binary layout: magic "VHJF", then int32 d, int32 n, int32 dtype (0 real / 1 complex),
// then values as little-endian float64 in row-major order (re,im interleaved when complex).
namespace detail {
constexpr char kMagic[4] = {'V', 'H', 'J', 'F'};
}

template <class T>
void save_binary(const FieldT<T>& f, const std::string& path) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("save_binary: cannot open " + path);
    os.write(detail::kMagic, 4);
    int32_t d = f.grid.dim, n = f.grid.n;
    int32_t dtype = std::is_same_v<T, double> ? 0 : 1;
    os.write(reinterpret_cast<const char*>(&d), 4);
    os.write(reinterpret_cast<const char*>(&n), 4);
    os.write(reinterpret_cast<const char*>(&dtype), 4);
    os.write(reinterpret_cast<const char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(T)));
}

struct BinaryHeader {
    int dim;
    int n;
    int dtype;
};

inline BinaryHeader read_binary_header(std::ifstream& is, const std::string& path) {
    char magic[4];
    is.read(magic, 4);
    if (!is || std::string(magic, 4) != std::string(detail::kMagic, 4))
        throw std::runtime_error("load_binary: bad magic in " + path);
    int32_t d = 0, n = 0, dtype = 0;
    is.read(reinterpret_cast<char*>(&d), 4);
    is.read(reinterpret_cast<char*>(&n), 4);
    is.read(reinterpret_cast<char*>(&dtype), 4);
    return BinaryHeader{d, n, dtype};
}

inline Field load_binary_real(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_binary: cannot open " + path);
    BinaryHeader h = read_binary_header(is, path);
    if (h.dtype != 0) throw std::runtime_error("load_binary_real: field is not real");
    Field f(make_grid(h.dim, h.n));
    is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(double)));
    if (!is) throw std::runtime_error("load_binary_real: truncated file " + path);
    return f;
}

inline ComplexField load_binary_complex(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::runtime_error("load_binary: cannot open " + path);
    BinaryHeader h = read_binary_header(is, path);
    if (h.dtype != 1) throw std::runtime_error("load_binary_complex: field is not complex");
    ComplexField f(make_grid(h.dim, h.n));
    is.read(reinterpret_cast<char*>(f.values.data()), static_cast<std::streamsize>(f.values.size() * sizeof(cplx)));
    if (!is) throw std::runtime_error("load_binary_complex: truncated file " + path);
    return f;
}

/** FNV-1a content hash used for manifests and oracle cache keys. */
inline uint64_t fnv1a(const std::string& s) {
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

}  // namespace vhj
