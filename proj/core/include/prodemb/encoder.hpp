#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "prodemb/ops.hpp"
#include "prodemb/tensor.hpp"
#include "prodemb/tokenizer.hpp"
#include "prodemb/vision.hpp"

namespace prodemb {

/// How gate weights treat experts a token cannot use. Literal keeps the
/// softmax over all N logits exactly as written, so weight mass leaks to
/// inapplicable specialized experts; renormalized masks them to -inf
/// first, making each token's applied weights sum to 1.
enum class GateMode { Literal, Renormalized };

/// Guided routes category/attribute tokens to their dedicated experts;
/// generic treats every token as a title token (ablation).
enum class RoutingMode { Guided, Generic };

GateMode gate_mode_from_string(const std::string& s);
const char* gate_mode_name(GateMode m);
RoutingMode routing_mode_from_string(const std::string& s);
const char* routing_mode_name(RoutingMode m);

enum class Modality { ImageOnly, TextOnly, ImageText };
Modality modality_from_string(const std::string& s);
const char* modality_name(Modality m);

struct EncoderConfig {
    std::size_t model_dim = 64;
    std::size_t layers = 2;
    std::size_t heads = 4;
    std::size_t experts = 4; // N >= 3; last two are E' (category), E'' (attribute)
    std::size_t expert_hidden = 128;
    std::size_t vocab_size = 512;
    std::size_t image_channels = 3;
    std::size_t image_resolution = 32;
    std::size_t patch_size = 8;
    std::size_t max_text_len = 64;
    GateMode gate_mode = GateMode::Literal;
    RoutingMode routing = RoutingMode::Guided;
    bool use_positional = true;
    bool normalize_embeddings = true;
    double layer_norm_eps = 1e-5;

    std::size_t visual_tokens() const {
        const std::size_t g = image_resolution / patch_size;
        return g * g;
    }
    std::size_t max_sequence() const {
        return 2 * visual_tokens() + max_text_len;
    }
    void validate() const;
    bool operator==(const EncoderConfig&) const = default;
};

/// Product representation r: mean-pooled final hidden states, optionally
/// L2-normalized.
struct Embedding {
    std::vector<double> values;
    bool normalized = false;
    std::size_t dim() const { return values.size(); }
};

/// Per-token gate weights for one token as a plain vector; test surface
/// for the gating softmax.
std::vector<double> gate_weights(std::span<const double> token,
                                 const Tensor& gate_weight,
                                 const Tensor& gate_bias, GateMode mode,
                                 Segment segment, RoutingMode routing);

/// The expert-combination rule with precomputed expert outputs:
///   y_j = sum_{n<N-2} G_n(x_j) E_n(x_j)
///       + [seg_j==category] G_{N-2}(x_j) E'(x_j)
///       + [seg_j==attribute] G_{N-1}(x_j) E''(x_j)
/// (0-based expert indices; generic routing drops the indicator terms).
/// Reference surface for equivalence tests; the encoder's layer path
/// computes the same sum without evaluating specialized experts on
/// tokens that do not route to them.
Tensor moe_combine(const std::vector<Tensor>& expert_outputs,
                   const Tensor& gate, const std::vector<Segment>& segments,
                   RoutingMode routing);

/// Builds the [T x N] allowed-experts mask used by renormalized gating.
std::vector<std::uint8_t> gate_mask(const std::vector<Segment>& segments,
                                    std::size_t experts, RoutingMode routing);

class ProductEncoder {
public:
    ProductEncoder(EncoderConfig config, Vocabulary vocab,
                   DetectorMode detector, std::uint64_t seed);

    /// Reconstructs from checkpoint data; params adopted as-is.
    ProductEncoder(EncoderConfig config, Vocabulary vocab,
                   DetectorMode detector, std::vector<Tensor> params);

    const EncoderConfig& config() const { return config_; }
    const Vocabulary& vocab() const { return vocab_; }
    DetectorMode detector() const { return detector_; }

    std::span<Tensor> parameters() { return params_; }
    std::span<const Tensor> parameters() const { return params_; }
    const std::vector<std::string>& parameter_names() const { return names_; }
    Tensor parameter(const std::string& name) const;
    /// Indices of the parameters belonging to expert `n` (0-based).
    std::vector<std::size_t> expert_parameter_indices(std::size_t layer,
                                                      std::size_t n) const;

    struct ForwardOutput {
        Tensor hidden; // [T x D] final hidden states
        std::vector<Segment> segments;
    };

    /// Runs the full stack up to the final hidden states. Records onto
    /// the active tape when one is installed.
    ForwardOutput forward_states(const ProductSide& side, Modality modality,
                                 bool include_cat_attr,
                                 AttentionTrace* last_attention = nullptr) const;

    /// Mean pooling + optional L2 normalization, on the tape.
    Tensor encode_tensor(const ProductSide& side, Modality modality,
                         bool include_cat_attr,
                         AttentionTrace* last_attention = nullptr) const;

    /// One guided-MoE feed-forward application (the per-layer expert
    /// mixture on already-normalized states). Specialized experts are
    /// evaluated only on the rows routed to them.
    Tensor guided_moe(const Tensor& normed, const std::vector<Segment>& segs,
                      std::size_t layer) const;

    /// Plain-value encoding (no tape), for evaluation and tooling.
    Embedding encode(const ProductSide& side, Modality modality,
                     bool include_cat_attr) const;

private:
    Tensor register_param(const std::string& name, Shape shape);
    void build_params(std::uint64_t seed);
    Tensor block(const Tensor& states, const std::vector<Segment>& segs,
                 std::size_t layer, AttentionTrace* trace) const;

    EncoderConfig config_;
    Vocabulary vocab_;
    DetectorMode detector_;
    std::vector<Tensor> params_;
    std::vector<std::string> names_;
    std::unordered_map<std::string, std::size_t> index_;
};

} // namespace prodemb
