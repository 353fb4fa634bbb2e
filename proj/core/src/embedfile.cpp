#include "prodemb/embedfile.hpp"

#include <cstring>
#include <fstream>

#include "prodemb/binio.hpp"

namespace prodemb {

namespace {
constexpr char kMagic[8] = {'P', 'E', 'E', 'M', 'B', 'D', '1', '\0'};
}

void write_embeddings(
    const std::vector<std::pair<std::string, std::vector<double>>>& entries,
    const std::string& path) {
    if (entries.empty()) throw_data("write_embeddings: nothing to write");
    const std::size_t dim = entries[0].second.size();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_data("cannot write embeddings file: " + path);
    out.write(kMagic, sizeof(kMagic));
    binio::put_u64(out, entries.size());
    binio::put_u64(out, dim);
    for (const auto& [id, emb] : entries) {
        if (emb.size() != dim) {
            throw_data("write_embeddings: inconsistent dimension for '" + id +
                       "'");
        }
        binio::put_str(out, id);
        binio::put_f64s(out, emb.data(), emb.size());
    }
    if (!out) throw_data("short write on embeddings file: " + path);
}

std::vector<std::pair<std::string, std::vector<double>>> read_embeddings(
    const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("cannot open embeddings file: " + path);
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw_data("not an embeddings file: " + path);
    }
    const std::uint64_t count = binio::get_u64(in);
    const std::uint64_t dim = binio::get_u64(in);
    std::vector<std::pair<std::string, std::vector<double>>> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        std::string id = binio::get_str(in);
        std::vector<double> emb(dim);
        binio::get_f64s(in, emb.data(), dim);
        out.emplace_back(std::move(id), std::move(emb));
    }
    if (!in) throw_data("truncated embeddings file: " + path);
    return out;
}

} // namespace prodemb
