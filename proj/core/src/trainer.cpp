#include "prodemb/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>
#include <thread>

#include "json.hpp"
#include "prodemb/binio.hpp"
#include "prodemb/checkpoint.hpp"
#include "prodemb/ops.hpp"
#include "prodemb/rng.hpp"

namespace prodemb {

namespace {

constexpr std::uint64_t kSaltMixer = 5;
constexpr std::uint64_t kSaltEpoch = 10;
constexpr char kStateMagic[8] = {'P', 'E', 'S', 'T', 'A', 'T', 'E', '1'};

std::array<std::uint64_t, 3> parse_ratio(const std::string& text) {
    std::array<std::uint64_t, 3> out{};
    std::size_t at = 0;
    for (int i = 0; i < 3; ++i) {
        const auto colon = text.find(':', at);
        const std::string piece =
            text.substr(at, colon == std::string::npos ? std::string::npos
                                                       : colon - at);
        try {
            out[i] = std::stoull(piece);
        } catch (const std::exception&) {
            throw_config("modality_ratio must look like 12:3:2, got '" +
                         text + "'");
        }
        if (i < 2) {
            if (colon == std::string::npos) {
                throw_config("modality_ratio must have three parts: '" +
                             text + "'");
            }
            at = colon + 1;
        } else if (colon != std::string::npos) {
            throw_config("modality_ratio must have three parts: '" + text +
                         "'");
        }
    }
    return out;
}

/// Static-chunk parallel map; item order and results do not depend on
/// the thread count, only wall time does.
template <typename F>
void parallel_for(std::size_t n, std::size_t threads, F&& fn) {
    if (threads <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    const std::size_t workers = std::min(threads, n);
    const std::size_t chunk = (n + workers - 1) / workers;
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) {
        const std::size_t lo = t * chunk;
        const std::size_t hi = std::min(n, lo + chunk);
        if (lo >= hi) break;
        pool.emplace_back([&, lo, hi] {
            for (std::size_t i = lo; i < hi; ++i) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

} // namespace

TrainConfig TrainConfig::from_kv(const KvConfig& kv) {
    TrainConfig c;
    c.steps = kv.get_uint("steps", c.steps);
    c.batch_size = kv.get_uint("batch_size", c.batch_size);
    c.workers = kv.get_uint("workers", c.workers);
    c.pool_batches = kv.get_uint("pool_batches", c.pool_batches);
    c.temperature = kv.get_double("temperature", c.temperature);
    c.peak_lr = kv.get_double("peak_lr", c.peak_lr);
    c.warmup_ratio = kv.get_double("warmup_ratio", c.warmup_ratio);
    c.min_lr = kv.get_double("min_lr", c.min_lr);
    c.seed = kv.get_uint("seed", c.seed);
    c.modality_ratio = parse_ratio(kv.get_string("modality_ratio", "12:3:2"));
    c.checkpoint_every = kv.get_uint("checkpoint_every", c.checkpoint_every);
    c.item_cat_attr = kv.get_bool("item_cat_attr", c.item_cat_attr);
    c.detector = detector_mode_from_string(
        kv.get_string("detector", detector_mode_name(c.detector)));
    c.threads = kv.get_uint("threads", c.threads);

    EncoderConfig& e = c.encoder;
    e.model_dim = kv.get_uint("model_dim", e.model_dim);
    e.layers = kv.get_uint("layers", e.layers);
    e.heads = kv.get_uint("heads", e.heads);
    e.experts = kv.get_uint("experts", e.experts);
    e.expert_hidden = kv.get_uint("expert_hidden", e.expert_hidden);
    e.vocab_size = kv.get_uint("vocab_size", e.vocab_size);
    e.image_channels = kv.get_uint("image_channels", e.image_channels);
    e.image_resolution = kv.get_uint("image_resolution", e.image_resolution);
    e.patch_size = kv.get_uint("patch_size", e.patch_size);
    e.max_text_len = kv.get_uint("max_text_len", e.max_text_len);
    e.gate_mode = gate_mode_from_string(
        kv.get_string("gate_mode", gate_mode_name(e.gate_mode)));
    e.routing = routing_mode_from_string(
        kv.get_string("routing", routing_mode_name(e.routing)));
    e.use_positional = kv.get_bool("use_positional", e.use_positional);
    e.normalize_embeddings =
        kv.get_bool("normalize_embeddings", e.normalize_embeddings);
    e.layer_norm_eps = kv.get_double("layer_norm_eps", e.layer_norm_eps);

    kv.reject_unknown();
    c.validate();
    return c;
}

void TrainConfig::validate() const {
    if (batch_size == 0 || workers == 0) {
        throw_config("batch_size and workers must be positive");
    }
    if (temperature <= 0.0) throw_config("temperature must be > 0");
    if (warmup_ratio < 0.0 || warmup_ratio >= 1.0) {
        throw_config("warmup_ratio must be in [0, 1)");
    }
    if (min_lr < 0.0 || peak_lr <= 0.0) {
        throw_config("learning rates must be positive");
    }
    for (std::uint64_t part : modality_ratio) {
        if (part == 0) {
            throw_config("modality_ratio parts must be positive");
        }
    }
    if (threads == 0) throw_config("threads must be positive");
    encoder.validate();
}

ModalityMixer::ModalityMixer(std::array<std::uint64_t, 3> ratio,
                             std::uint64_t seed) {
    for (std::uint64_t part : ratio) {
        if (part == 0) throw_config("modality_ratio parts must be positive");
    }
    pattern_.reserve(ratio[0] + ratio[1] + ratio[2]);
    pattern_.insert(pattern_.end(), ratio[0], Modality::ImageOnly);
    pattern_.insert(pattern_.end(), ratio[1], Modality::TextOnly);
    pattern_.insert(pattern_.end(), ratio[2], Modality::ImageText);
    std::mt19937_64 rng(mix_seed(seed, kSaltMixer));
    std::shuffle(pattern_.begin(), pattern_.end(), rng);
}

Modality ModalityMixer::at(std::uint64_t index) const {
    return pattern_[index % pattern_.size()];
}

ProductEncoder make_encoder(const TrainConfig& config,
                            const std::vector<ProductSample>& train_split) {
    Vocabulary vocab =
        Vocabulary::build(train_split, config.encoder.vocab_size);
    return ProductEncoder(config.encoder, vocab, config.detector, config.seed);
}

Trainer::Trainer(TrainConfig config, std::vector<ProductSample> data)
    : config_(std::move(config)), data_(std::move(data)),
      encoder_(make_encoder(config_, data_)),
      optimizer_(AdamState::init(
          std::span<const Tensor>(encoder_.parameters().data(),
                                  encoder_.parameters().size()),
          config_.peak_lr)),
      pool_(config_.batch_size, config_.workers, config_.pool_batches),
      mixer_(config_.modality_ratio, config_.seed) {
    config_.validate();
    if (data_.empty()) throw_data("trainer: empty dataset");
}

Trainer::Trainer(TrainConfig config, std::vector<ProductSample> data,
                 ProductEncoder encoder, AdamState optimizer,
                 NegativePool pool, std::uint64_t next_step,
                 std::uint64_t sample_cursor)
    : config_(std::move(config)), data_(std::move(data)),
      encoder_(std::move(encoder)), optimizer_(std::move(optimizer)),
      pool_(std::move(pool)), mixer_(config_.modality_ratio, config_.seed),
      next_step_(next_step), sample_cursor_(sample_cursor) {
    if (data_.empty()) throw_data("trainer: empty dataset");
}

std::vector<Trainer::Triplet> Trainer::next_batch() {
    const std::size_t want = config_.batch_size * config_.workers;
    std::vector<Triplet> batch;
    batch.reserve(want);
    const std::size_t n = data_.size();
    for (std::size_t i = 0; i < want; ++i) {
        const std::uint64_t epoch = sample_cursor_ / n;
        const std::size_t offset = sample_cursor_ % n;
        if (epoch_order_.size() != n || epoch != epoch_) {
            epoch_ = epoch;
            epoch_order_.resize(n);
            std::iota(epoch_order_.begin(), epoch_order_.end(), 0);
            std::mt19937_64 rng(mix_seed(config_.seed, kSaltEpoch, epoch_));
            std::shuffle(epoch_order_.begin(), epoch_order_.end(), rng);
            if (epoch_ > 0 && offset == 0) {
                std::fprintf(stderr,
                             "[trainer] dataset exhausted, starting epoch "
                             "%llu\n",
                             static_cast<unsigned long long>(epoch_));
            }
        }
        Modality modality = forced_.empty()
                                ? mixer_.at(sample_cursor_)
                                : forced_[i % forced_.size()];
        batch.push_back(Triplet{&data_[epoch_order_[offset]], modality});
        ++sample_cursor_;
    }
    forced_.clear();
    return batch;
}

void Trainer::force_modalities(std::vector<Modality> assignments) {
    if (assignments.empty()) {
        throw_runtime("force_modalities: empty assignment list");
    }
    forced_ = std::move(assignments);
}

StepReport Trainer::step(GradientCapture* capture) {
    const auto t_start = std::chrono::steady_clock::now();
    const std::size_t per_worker = config_.batch_size;
    const std::size_t total = per_worker * config_.workers;
    std::vector<Triplet> batch = next_batch();

    struct Unit {
        GradTape tape;
        Tensor query_emb;
        Tensor positive_emb;
        std::vector<double> negative_emb; // hard negative, detached
        double loss = 0.0;
    };
    std::vector<Unit> units(total);

    // Phase 1: encode queries and positives on per-triplet tapes, hard
    // negatives as plain values.
    parallel_for(total, config_.threads, [&](std::size_t i) {
        Unit& u = units[i];
        const Triplet& t = batch[i];
        TapeScope scope(u.tape);
        u.query_emb =
            encoder_.encode_tensor(t.sample->query, t.query_modality, false);
        u.positive_emb = encoder_.encode_tensor(
            t.sample->positive, Modality::ImageText, config_.item_cat_attr);
        // hard negative only feeds the pool; no gradient path
        Embedding n = encoder_.encode(t.sample->hard_negative,
                                      Modality::ImageText,
                                      config_.item_cat_attr);
        u.negative_emb = std::move(n.values);
    });

    // Phase 2: push this batch into the pool (positives then hard
    // negatives per worker, in slot order).
    std::vector<std::vector<PooledItem>> slices(config_.workers);
    for (std::size_t w = 0; w < config_.workers; ++w) {
        auto& slice = slices[w];
        slice.reserve(2 * per_worker);
        for (std::size_t b = 0; b < per_worker; ++b) {
            const std::size_t i = w * per_worker + b;
            PooledItem pos;
            pos.worker = static_cast<std::uint32_t>(w);
            pos.batch_index = next_step_;
            pos.sample_id = batch[i].sample->sample_id;
            pos.role = ItemRole::Positive;
            pos.embedding.assign(units[i].positive_emb.value().begin(),
                                 units[i].positive_emb.value().end());
            slice.push_back(std::move(pos));
        }
        for (std::size_t b = 0; b < per_worker; ++b) {
            const std::size_t i = w * per_worker + b;
            PooledItem neg;
            neg.worker = static_cast<std::uint32_t>(w);
            neg.batch_index = next_step_;
            neg.sample_id = batch[i].sample->sample_id;
            neg.role = ItemRole::HardNegative;
            neg.embedding = units[i].negative_emb;
            slice.push_back(std::move(neg));
        }
    }
    pool_.advance(slices);

    // Phase 3: per-query InfoNCE over the pooled negatives, backward on
    // each triplet's own tape with the 1/(B*P) mean weight.
    const double mean_w = 1.0 / static_cast<double>(total);
    parallel_for(total, config_.threads, [&](std::size_t i) {
        Unit& u = units[i];
        auto negs = pool_.assemble_negatives(batch[i].sample->sample_id);
        TapeScope scope(u.tape);
        Tensor loss = info_nce_loss(u.query_emb, u.positive_emb, negs,
                                    config_.temperature);
        u.loss = loss.scalar_value();
        if (!std::isfinite(u.loss)) {
            throw_runtime("step " + std::to_string(next_step_) +
                          ": non-finite loss");
        }
        u.tape.backward(loss, mean_w);
    });

    // Accumulate per-triplet gradients in triplet order: bitwise result
    // is independent of the thread count.
    auto params = encoder_.parameters();
    std::vector<std::vector<double>> grads(params.size());
    for (std::size_t p = 0; p < params.size(); ++p) {
        grads[p].assign(params[p].numel(), 0.0);
    }
    double loss_sum = 0.0;
    for (std::size_t i = 0; i < total; ++i) {
        loss_sum += units[i].loss;
        for (std::size_t p = 0; p < params.size(); ++p) {
            auto g = units[i].tape.grad_if_any(*params[p].data_ptr());
            if (g.empty()) continue;
            double* dst = grads[p].data();
            for (std::size_t j = 0; j < g.size(); ++j) dst[j] += g[j];
        }
        units[i].tape.clear();
    }
    if (capture) capture->grads = grads;

    const double lr = lr_at(config_.schedule(),
                            std::min<std::uint64_t>(next_step_ + 1,
                                                    config_.steps));
    optimizer_.lr = lr;
    optimizer_ = adam_step(std::move(optimizer_), params, grads);

    StepReport report;
    report.step = next_step_;
    report.loss = loss_sum * mean_w;
    report.lr = lr;
    report.pool_size = pool_.size();
    report.wall_ms = std::chrono::duration<double, std::milli>(
                         std::chrono::steady_clock::now() - t_start)
                         .count();
    ++next_step_;
    return report;
}

std::vector<StepReport> Trainer::run(const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    std::ofstream log(out_dir + "/report.jsonl",
                      next_step_ == 0 ? std::ios::trunc : std::ios::app);
    if (!log) throw_data("cannot write report log in " + out_dir);

    std::vector<StepReport> reports;
    while (next_step_ < config_.steps) {
        StepReport r = step();
        nlohmann::ordered_json j;
        j["step"] = r.step;
        j["loss"] = r.loss;
        j["lr"] = r.lr;
        j["pool_size"] = r.pool_size;
        j["wall_ms"] = r.wall_ms;
        log << j.dump() << "\n";
        log.flush();
        reports.push_back(r);
        if (config_.checkpoint_every > 0 &&
            (r.step + 1) % config_.checkpoint_every == 0) {
            const std::string tag = std::to_string(r.step + 1);
            save(out_dir + "/ckpt_step" + tag + ".bin",
                 out_dir + "/state_step" + tag + ".bin");
        }
    }
    save(out_dir + "/ckpt_final.bin", out_dir + "/state_final.bin");
    return reports;
}

void Trainer::save(const std::string& ckpt_path,
                   const std::string& state_path) const {
    save_checkpoint(encoder_, ckpt_path);
    std::ofstream out(state_path, std::ios::binary);
    if (!out) throw_data("cannot write training state: " + state_path);
    out.write(kStateMagic, sizeof(kStateMagic));
    binio::put_u64(out, next_step_);
    binio::put_u64(out, sample_cursor_);
    binio::put_f64(out, optimizer_.lr);
    binio::put_f64(out, optimizer_.beta1);
    binio::put_f64(out, optimizer_.beta2);
    binio::put_f64(out, optimizer_.eps);
    binio::put_u64(out, optimizer_.step);
    binio::put_u64(out, optimizer_.m.size());
    for (std::size_t i = 0; i < optimizer_.m.size(); ++i) {
        binio::put_u64(out, optimizer_.m[i].size());
        binio::put_f64s(out, optimizer_.m[i].data(), optimizer_.m[i].size());
        binio::put_f64s(out, optimizer_.v[i].data(), optimizer_.v[i].size());
    }
    binio::put_u64(out, pool_.batch_size());
    binio::put_u64(out, pool_.workers());
    binio::put_u64(out, pool_.past_batches());
    binio::put_u64(out, pool_.batches_seen());
    binio::put_u64(out, pool_.slices().size());
    for (const auto& slice : pool_.slices()) {
        binio::put_u64(out, slice.size());
        for (const PooledItem& item : slice) {
            binio::put_u32(out, item.worker);
            binio::put_u64(out, item.batch_index);
            binio::put_str(out, item.sample_id);
            binio::put_u8(out, static_cast<std::uint8_t>(item.role));
            binio::put_u64(out, item.embedding.size());
            binio::put_f64s(out, item.embedding.data(), item.embedding.size());
        }
    }
    if (!out) throw_data("short write on training state: " + state_path);
}

Trainer Trainer::resume(const std::string& ckpt_path,
                        const std::string& state_path, TrainConfig config,
                        std::vector<ProductSample> data) {
    ProductEncoder encoder = load_checkpoint(ckpt_path);
    std::ifstream in(state_path, std::ios::binary);
    if (!in) throw_data("cannot open training state: " + state_path);
    char magic[8] = {};
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kStateMagic, sizeof(kStateMagic)) != 0) {
        throw_data("not a training-state file: " + state_path);
    }
    const std::uint64_t next_step = binio::get_u64(in);
    const std::uint64_t cursor = binio::get_u64(in);
    AdamState opt;
    opt.lr = binio::get_f64(in);
    opt.beta1 = binio::get_f64(in);
    opt.beta2 = binio::get_f64(in);
    opt.eps = binio::get_f64(in);
    opt.step = binio::get_u64(in);
    const std::uint64_t slots = binio::get_u64(in);
    opt.m.resize(slots);
    opt.v.resize(slots);
    for (std::uint64_t i = 0; i < slots; ++i) {
        const std::uint64_t len = binio::get_u64(in);
        opt.m[i].resize(len);
        opt.v[i].resize(len);
        binio::get_f64s(in, opt.m[i].data(), len);
        binio::get_f64s(in, opt.v[i].data(), len);
    }
    const std::uint64_t pb = binio::get_u64(in);
    const std::uint64_t pw = binio::get_u64(in);
    const std::uint64_t pk = binio::get_u64(in);
    const std::uint64_t seen = binio::get_u64(in);
    NegativePool pool(pb, pw, pk);
    std::deque<std::vector<PooledItem>> pool_slices;
    const std::uint64_t slice_count = binio::get_u64(in);
    for (std::uint64_t s = 0; s < slice_count; ++s) {
        const std::uint64_t items = binio::get_u64(in);
        std::vector<PooledItem> slice(items);
        for (std::uint64_t i = 0; i < items; ++i) {
            slice[i].worker = binio::get_u32(in);
            slice[i].batch_index = binio::get_u64(in);
            slice[i].sample_id = binio::get_str(in);
            slice[i].role = static_cast<ItemRole>(binio::get_u8(in));
            const std::uint64_t dim = binio::get_u64(in);
            slice[i].embedding.resize(dim);
            binio::get_f64s(in, slice[i].embedding.data(), dim);
        }
        pool_slices.push_back(std::move(slice));
    }
    if (!in) throw_data("truncated training state: " + state_path);
    pool.restore_slices(std::move(pool_slices), seen);
    return Trainer(std::move(config), std::move(data), std::move(encoder),
                   std::move(opt), std::move(pool), next_step, cursor);
}

void write_report_log(const std::vector<StepReport>& reports,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw_data("cannot write report log: " + path);
    for (const StepReport& r : reports) {
        nlohmann::ordered_json j;
        j["step"] = r.step;
        j["loss"] = r.loss;
        j["lr"] = r.lr;
        j["pool_size"] = r.pool_size;
        j["wall_ms"] = r.wall_ms;
        out << j.dump() << "\n";
    }
}

} // namespace prodemb
