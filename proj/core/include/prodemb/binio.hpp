#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <string>

namespace prodemb::binio {

// Little-endian fixed-width readers/writers shared by the binary file
// formats (checkpoints, training state, embedding files).

inline void put_u8(std::ostream& out, std::uint8_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void put_u32(std::ostream& out, std::uint32_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void put_u64(std::ostream& out, std::uint64_t v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void put_f64(std::ostream& out, double v) {
    out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}
inline void put_str(std::ostream& out, const std::string& s) {
    put_u32(out, static_cast<std::uint32_t>(s.size()));
    out.write(s.data(), static_cast<std::streamsize>(s.size()));
}
inline void put_f64s(std::ostream& out, const double* data, std::size_t n) {
    out.write(reinterpret_cast<const char*>(data),
              static_cast<std::streamsize>(n * sizeof(double)));
}

inline std::uint8_t get_u8(std::istream& in) {
    std::uint8_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
inline std::uint32_t get_u32(std::istream& in) {
    std::uint32_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
inline std::uint64_t get_u64(std::istream& in) {
    std::uint64_t v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
inline double get_f64(std::istream& in) {
    double v = 0;
    in.read(reinterpret_cast<char*>(&v), sizeof(v));
    return v;
}
inline std::string get_str(std::istream& in) {
    const std::uint32_t n = get_u32(in);
    std::string s(n, '\0');
    in.read(s.data(), n);
    return s;
}
inline void get_f64s(std::istream& in, double* data, std::size_t n) {
    in.read(reinterpret_cast<char*>(data),
            static_cast<std::streamsize>(n * sizeof(double)));
}

} // namespace prodemb::binio
