#include "prodemb/encoder.hpp"

#include <algorithm>
#include <numeric>
#include <random>

namespace prodemb {

GateMode gate_mode_from_string(const std::string& s) {
    if (s == "literal") return GateMode::Literal;
    if (s == "renormalized") return GateMode::Renormalized;
    throw_config("unknown gate mode: '" + s +
                 "' (expected literal|renormalized)");
}

const char* gate_mode_name(GateMode m) {
    return m == GateMode::Literal ? "literal" : "renormalized";
}

RoutingMode routing_mode_from_string(const std::string& s) {
    if (s == "guided") return RoutingMode::Guided;
    if (s == "generic") return RoutingMode::Generic;
    throw_config("unknown routing mode: '" + s +
                 "' (expected guided|generic)");
}

const char* routing_mode_name(RoutingMode m) {
    return m == RoutingMode::Guided ? "guided" : "generic";
}

Modality modality_from_string(const std::string& s) {
    if (s == "image") return Modality::ImageOnly;
    if (s == "text") return Modality::TextOnly;
    if (s == "both") return Modality::ImageText;
    throw_config("unknown modality: '" + s + "' (expected image|text|both)");
}

const char* modality_name(Modality m) {
    switch (m) {
        case Modality::ImageOnly: return "image";
        case Modality::TextOnly: return "text";
        case Modality::ImageText: return "both";
    }
    return "?";
}

void EncoderConfig::validate() const {
    if (model_dim == 0 || heads == 0 || model_dim % heads != 0) {
        throw_config("model_dim must be divisible by heads");
    }
    if (experts < 3) {
        throw_config("experts must be >= 3: two specialized experts plus at "
                     "least one generic");
    }
    if (layers == 0) throw_config("layers must be positive");
    if (expert_hidden == 0) throw_config("expert_hidden must be positive");
    if (vocab_size < 2) throw_config("vocab_size must be at least 2");
    if (patch_size == 0 || image_resolution % patch_size != 0) {
        throw_config("patch_size must divide image_resolution");
    }
    if (max_text_len == 0) throw_config("max_text_len must be positive");
    if (layer_norm_eps <= 0.0) throw_config("layer_norm_eps must be > 0");
}

std::vector<std::uint8_t> gate_mask(const std::vector<Segment>& segments,
                                    std::size_t experts, RoutingMode routing) {
    const std::size_t tokens = segments.size();
    std::vector<std::uint8_t> mask(tokens * experts, 0);
    for (std::size_t t = 0; t < tokens; ++t) {
        for (std::size_t n = 0; n + 2 < experts; ++n) mask[t * experts + n] = 1;
        if (routing == RoutingMode::Guided) {
            if (segments[t] == Segment::Category) {
                mask[t * experts + experts - 2] = 1;
            }
            if (segments[t] == Segment::Attribute) {
                mask[t * experts + experts - 1] = 1;
            }
        }
    }
    return mask;
}

std::vector<double> gate_weights(std::span<const double> token,
                                 const Tensor& gate_weight,
                                 const Tensor& gate_bias, GateMode mode,
                                 Segment segment, RoutingMode routing) {
    const std::size_t dim = token.size();
    const std::size_t experts = gate_bias.numel();
    if (gate_weight.rank() != 2 || gate_weight.dim(0) != dim ||
        gate_weight.dim(1) != experts) {
        throw_runtime("gate_weights: shape mismatch");
    }
    Tensor x = Tensor::from({1, dim}, {token.begin(), token.end()});
    Tensor logits = affine(x, gate_weight, gate_bias);
    if (mode == GateMode::Literal) {
        Tensor w = masked_softmax_rows(logits);
        return {w.value().begin(), w.value().end()};
    }
    auto mask = gate_mask({segment}, experts, routing);
    Tensor w = masked_softmax_rows(logits, &mask);
    return {w.value().begin(), w.value().end()};
}

Tensor moe_combine(const std::vector<Tensor>& expert_outputs,
                   const Tensor& gate, const std::vector<Segment>& segments,
                   RoutingMode routing) {
    const std::size_t experts = expert_outputs.size();
    if (experts < 3) throw_config("moe_combine: need at least 3 experts");
    if (gate.rank() != 2 || gate.dim(1) != experts) {
        throw_runtime("moe_combine: gate shape mismatch");
    }
    const std::size_t tokens = gate.dim(0);
    if (segments.size() != tokens) {
        throw_runtime("moe_combine: segment count mismatch");
    }

    Tensor y = scale_rows(expert_outputs[0], column(gate, 0));
    for (std::size_t n = 1; n + 2 < experts; ++n) {
        y = add(y, scale_rows(expert_outputs[n], column(gate, n)));
    }
    if (routing == RoutingMode::Guided) {
        for (std::size_t which = 0; which < 2; ++which) {
            const Segment want =
                which == 0 ? Segment::Category : Segment::Attribute;
            const std::size_t n = experts - 2 + which;
            std::vector<std::size_t> rows;
            for (std::size_t t = 0; t < tokens; ++t) {
                if (segments[t] == want) rows.push_back(t);
            }
            if (rows.empty()) continue;
            Tensor outs = take_rows(expert_outputs[n], rows);
            Tensor w = take_elems(column(gate, n), rows);
            y = scatter_add_rows(y, scale_rows(outs, w), rows);
        }
    }
    return y;
}

ProductEncoder::ProductEncoder(EncoderConfig config, Vocabulary vocab,
                               DetectorMode detector, std::uint64_t seed)
    : config_(std::move(config)), vocab_(std::move(vocab)),
      detector_(detector) {
    config_.validate();
    if (vocab_.size() > config_.vocab_size) {
        throw_config("vocabulary (" + std::to_string(vocab_.size()) +
                     ") exceeds configured vocab_size (" +
                     std::to_string(config_.vocab_size) + ")");
    }
    build_params(seed);
}

ProductEncoder::ProductEncoder(EncoderConfig config, Vocabulary vocab,
                               DetectorMode detector,
                               std::vector<Tensor> params)
    : config_(std::move(config)), vocab_(std::move(vocab)),
      detector_(detector), params_(std::move(params)) {
    config_.validate();
    // rebuild names only, shapes must match the loaded tensors
    std::vector<Tensor> loaded = std::move(params_);
    params_.clear();
    names_.clear();
    build_params(0);
    if (loaded.size() != params_.size()) {
        throw_data("checkpoint parameter count mismatch: expected " +
                   std::to_string(params_.size()) + ", got " +
                   std::to_string(loaded.size()));
    }
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        if (loaded[i].shape() != params_[i].shape()) {
            throw_data("checkpoint parameter '" + names_[i] +
                       "' has shape " + shape_str(loaded[i].shape()) +
                       ", expected " + shape_str(params_[i].shape()));
        }
        loaded[i].set_requires_grad(true);
        params_[i] = loaded[i];
    }
}

Tensor ProductEncoder::register_param(const std::string& name, Shape shape) {
    Tensor t = Tensor::zeros(std::move(shape), true);
    index_[name] = params_.size();
    params_.push_back(t);
    names_.push_back(name);
    return t;
}

void ProductEncoder::build_params(std::uint64_t seed) {
    const auto& c = config_;
    const std::size_t patch_dims =
        c.image_channels * c.patch_size * c.patch_size;

    register_param("token_embedding", {c.vocab_size, c.model_dim});
    register_param("position_embedding", {c.max_sequence(), c.model_dim});
    register_param("patch_proj.weight", {patch_dims, c.model_dim});
    register_param("patch_proj.bias", {c.model_dim});
    for (std::size_t l = 0; l < c.layers; ++l) {
        const std::string p = "layers." + std::to_string(l) + ".";
        register_param(p + "attn_norm.gamma", {c.model_dim});
        register_param(p + "attn_norm.beta", {c.model_dim});
        register_param(p + "attn.wq", {c.model_dim, c.model_dim});
        register_param(p + "attn.bq", {c.model_dim});
        register_param(p + "attn.wk", {c.model_dim, c.model_dim});
        register_param(p + "attn.bk", {c.model_dim});
        register_param(p + "attn.wv", {c.model_dim, c.model_dim});
        register_param(p + "attn.bv", {c.model_dim});
        register_param(p + "attn.wo", {c.model_dim, c.model_dim});
        register_param(p + "attn.bo", {c.model_dim});
        register_param(p + "moe_norm.gamma", {c.model_dim});
        register_param(p + "moe_norm.beta", {c.model_dim});
        register_param(p + "moe.gate.weight", {c.model_dim, c.experts});
        register_param(p + "moe.gate.bias", {c.experts});
        for (std::size_t n = 0; n < c.experts; ++n) {
            const std::string e = p + "moe.expert." + std::to_string(n) + ".";
            register_param(e + "w1", {c.model_dim, c.expert_hidden});
            register_param(e + "b1", {c.expert_hidden});
            register_param(e + "w2", {c.expert_hidden, c.model_dim});
            register_param(e + "b2", {c.model_dim});
        }
    }

    // init: N(0, 0.02) weights, zero biases, unit layer-norm gains
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> dist(0.0, 0.02);
    for (std::size_t i = 0; i < params_.size(); ++i) {
        const std::string& name = names_[i];
        auto v = params_[i].mutable_value();
        if (name.ends_with("gamma")) {
            std::fill(v.begin(), v.end(), 1.0);
        } else if (name.ends_with("beta") || name.ends_with("bias") ||
                   name.ends_with(".bq") || name.ends_with(".bk") ||
                   name.ends_with(".bv") || name.ends_with(".bo") ||
                   name.ends_with(".b1") || name.ends_with(".b2")) {
            // zeros
        } else {
            for (double& x : v) x = dist(rng);
        }
    }
}

Tensor ProductEncoder::parameter(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw_runtime("no parameter named '" + name + "'");
    return params_[it->second];
}

std::vector<std::size_t> ProductEncoder::expert_parameter_indices(
    std::size_t layer, std::size_t n) const {
    const std::string prefix = "layers." + std::to_string(layer) +
                               ".moe.expert." + std::to_string(n) + ".";
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < names_.size(); ++i) {
        if (names_[i].starts_with(prefix)) out.push_back(i);
    }
    return out;
}

Tensor ProductEncoder::guided_moe(const Tensor& normed,
                                  const std::vector<Segment>& segs,
                                  std::size_t l) const {
    const auto& c = config_;
    const std::string p = "layers." + std::to_string(l) + ".";
    Tensor gate_logits = affine(normed, parameter(p + "moe.gate.weight"),
                                parameter(p + "moe.gate.bias"));
    Tensor gate;
    if (c.gate_mode == GateMode::Literal) {
        gate = masked_softmax_rows(gate_logits);
    } else {
        auto mask = gate_mask(segs, c.experts, c.routing);
        gate = masked_softmax_rows(gate_logits, &mask);
    }

    auto expert_ffn = [&](std::size_t n, const Tensor& x) {
        const std::string e = p + "moe.expert." + std::to_string(n) + ".";
        Tensor h = gelu(affine(x, parameter(e + "w1"), parameter(e + "b1")));
        return affine(h, parameter(e + "w2"), parameter(e + "b2"));
    };

    Tensor y = scale_rows(expert_ffn(0, normed), column(gate, 0));
    for (std::size_t n = 1; n + 2 < c.experts; ++n) {
        y = add(y, scale_rows(expert_ffn(n, normed), column(gate, n)));
    }
    if (c.routing == RoutingMode::Guided) {
        for (std::size_t which = 0; which < 2; ++which) {
            const Segment want =
                which == 0 ? Segment::Category : Segment::Attribute;
            const std::size_t n = c.experts - 2 + which;
            std::vector<std::size_t> rows;
            for (std::size_t t = 0; t < segs.size(); ++t) {
                if (segs[t] == want) rows.push_back(t);
            }
            if (rows.empty()) continue;
            Tensor xs = take_rows(normed, rows);
            Tensor outs = expert_ffn(n, xs);
            Tensor w = take_elems(column(gate, n), rows);
            y = scatter_add_rows(y, scale_rows(outs, w), rows);
        }
    }
    return y;
}

Tensor ProductEncoder::block(const Tensor& states,
                             const std::vector<Segment>& segs, std::size_t l,
                             AttentionTrace* trace) const {
    const auto& c = config_;
    const std::string p = "layers." + std::to_string(l) + ".";
    Tensor h = layer_norm(states, parameter(p + "attn_norm.gamma"),
                          parameter(p + "attn_norm.beta"), c.layer_norm_eps);
    Tensor q = affine(h, parameter(p + "attn.wq"), parameter(p + "attn.bq"));
    Tensor k = affine(h, parameter(p + "attn.wk"), parameter(p + "attn.bk"));
    Tensor v = affine(h, parameter(p + "attn.wv"), parameter(p + "attn.bv"));
    Tensor mixed = attention_core(q, k, v, c.heads, trace);
    Tensor x = add(states, affine(mixed, parameter(p + "attn.wo"),
                                  parameter(p + "attn.bo")));
    Tensor h2 = layer_norm(x, parameter(p + "moe_norm.gamma"),
                           parameter(p + "moe_norm.beta"), c.layer_norm_eps);
    return add(x, guided_moe(h2, segs, l));
}

ProductEncoder::ForwardOutput ProductEncoder::forward_states(
    const ProductSide& side, Modality modality, bool include_cat_attr,
    AttentionTrace* last_attention) const {
    const auto& c = config_;
    const bool want_image = modality != Modality::TextOnly;
    const bool want_text = modality != Modality::ImageOnly;

    std::vector<Tensor> parts;
    std::vector<Segment> segs;

    if (want_image) {
        if (!side.image || side.image->empty()) {
            throw_data("modality-content-missing (image): modality '" +
                       std::string(modality_name(modality)) +
                       "' requires an image");
        }
        CoreRegion region = detect_core(*side.image, side, detector_);
        Image core = crop(*side.image, region);
        Tensor pm_full =
            patch_matrix(*side.image, c.image_resolution, c.patch_size);
        Tensor pm_core = patch_matrix(core, c.image_resolution, c.patch_size);
        Tensor both = concat_rows({pm_full, pm_core});
        parts.push_back(affine(both, parameter("patch_proj.weight"),
                               parameter("patch_proj.bias")));
        segs.insert(segs.end(), 2 * c.visual_tokens(), Segment::Visual);
    }
    if (want_text) {
        TokenSequence seq = tokenize(side, include_cat_attr, vocab_);
        if (seq.length() > c.max_text_len) {
            seq.ids.resize(c.max_text_len);
            seq.segments.resize(c.max_text_len);
        }
        if (seq.length() == 0) {
            throw_data("modality-content-missing (title): modality '" +
                       std::string(modality_name(modality)) +
                       "' requires text");
        }
        parts.push_back(take_rows(parameter("token_embedding"), seq.ids));
        segs.insert(segs.end(), seq.segments.begin(), seq.segments.end());
    }

    Tensor states = parts.size() == 1 ? parts[0] : concat_rows(parts);
    if (c.use_positional) {
        std::vector<std::size_t> pos(segs.size());
        std::iota(pos.begin(), pos.end(), 0);
        states = add(states, take_rows(parameter("position_embedding"), pos));
    }
    for (std::size_t l = 0; l < c.layers; ++l) {
        AttentionTrace* trace =
            (last_attention && l + 1 == c.layers) ? last_attention : nullptr;
        states = block(states, segs, l, trace);
    }
    return ForwardOutput{states, std::move(segs)};
}

Tensor ProductEncoder::encode_tensor(const ProductSide& side,
                                     Modality modality, bool include_cat_attr,
                                     AttentionTrace* last_attention) const {
    ForwardOutput out =
        forward_states(side, modality, include_cat_attr, last_attention);
    Tensor pooled = mean_rows(out.hidden);
    if (config_.normalize_embeddings) return l2_normalize(pooled);
    return pooled;
}

Embedding ProductEncoder::encode(const ProductSide& side, Modality modality,
                                 bool include_cat_attr) const {
    NoTapeScope plain;
    Tensor r = encode_tensor(side, modality, include_cat_attr);
    Embedding e;
    e.values.assign(r.value().begin(), r.value().end());
    e.normalized = config_.normalize_embeddings;
    return e;
}

} // namespace prodemb
