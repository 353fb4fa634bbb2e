#include "prodemb/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "prodemb/binio.hpp"

namespace prodemb {

namespace {

constexpr char kMagic[8] = {'P', 'R', 'O', 'D', 'E', 'M', 'B', '\0'};
constexpr std::uint32_t kVersion = 1;

using namespace binio;

} // namespace

void save_checkpoint(const ProductEncoder& encoder, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw_data("cannot write checkpoint: " + path);
    out.write(kMagic, sizeof(kMagic));
    put_u32(out, kVersion);

    const EncoderConfig& c = encoder.config();
    put_u64(out, c.model_dim);
    put_u64(out, c.layers);
    put_u64(out, c.heads);
    put_u64(out, c.experts);
    put_u64(out, c.expert_hidden);
    put_u64(out, c.vocab_size);
    put_u64(out, c.image_channels);
    put_u64(out, c.image_resolution);
    put_u64(out, c.patch_size);
    put_u64(out, c.max_text_len);
    put_u8(out, c.gate_mode == GateMode::Literal ? 0 : 1);
    put_u8(out, c.routing == RoutingMode::Guided ? 0 : 1);
    put_u8(out, c.use_positional ? 1 : 0);
    put_u8(out, c.normalize_embeddings ? 1 : 0);
    put_f64(out, c.layer_norm_eps);
    put_u8(out, static_cast<std::uint8_t>(encoder.detector()));

    const auto& words = encoder.vocab().words();
    put_u64(out, words.size());
    for (const std::string& w : words) put_str(out, w);

    auto params = encoder.parameters();
    const auto& names = encoder.parameter_names();
    put_u64(out, params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        put_str(out, names[i]);
        const Shape& shape = params[i].shape();
        put_u32(out, static_cast<std::uint32_t>(shape.size()));
        for (std::size_t d : shape) put_u64(out, d);
        auto v = params[i].value();
        out.write(reinterpret_cast<const char*>(v.data()),
                  static_cast<std::streamsize>(v.size() * sizeof(double)));
    }
    if (!out) throw_data("short write on checkpoint: " + path);
}

ProductEncoder load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("cannot open checkpoint: " + path);
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0) {
        throw_data("not a checkpoint file: " + path);
    }
    const std::uint32_t version = get_u32(in);
    if (version != kVersion) {
        throw_data("unsupported checkpoint version " +
                   std::to_string(version) + ": " + path);
    }

    EncoderConfig c;
    c.model_dim = get_u64(in);
    c.layers = get_u64(in);
    c.heads = get_u64(in);
    c.experts = get_u64(in);
    c.expert_hidden = get_u64(in);
    c.vocab_size = get_u64(in);
    c.image_channels = get_u64(in);
    c.image_resolution = get_u64(in);
    c.patch_size = get_u64(in);
    c.max_text_len = get_u64(in);
    c.gate_mode = get_u8(in) == 0 ? GateMode::Literal : GateMode::Renormalized;
    c.routing = get_u8(in) == 0 ? RoutingMode::Guided : RoutingMode::Generic;
    c.use_positional = get_u8(in) != 0;
    c.normalize_embeddings = get_u8(in) != 0;
    c.layer_norm_eps = get_f64(in);
    const auto detector = static_cast<DetectorMode>(get_u8(in));

    const std::uint64_t word_count = get_u64(in);
    std::vector<std::string> words;
    words.reserve(word_count);
    for (std::uint64_t i = 0; i < word_count; ++i) words.push_back(get_str(in));

    const std::uint64_t param_count = get_u64(in);
    std::vector<Tensor> params;
    params.reserve(param_count);
    for (std::uint64_t i = 0; i < param_count; ++i) {
        get_str(in); // name; registration order is authoritative
        const std::uint32_t ndim = get_u32(in);
        Shape shape(ndim);
        for (std::uint32_t d = 0; d < ndim; ++d) shape[d] = get_u64(in);
        std::vector<double> data(shape_numel(shape));
        in.read(reinterpret_cast<char*>(data.data()),
                static_cast<std::streamsize>(data.size() * sizeof(double)));
        params.push_back(Tensor::from(std::move(shape), std::move(data)));
    }
    if (!in) throw_data("truncated checkpoint: " + path);
    return ProductEncoder(c, Vocabulary::from_words(std::move(words)),
                          detector, std::move(params));
}

} // namespace prodemb
