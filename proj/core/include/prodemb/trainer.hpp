#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prodemb/encoder.hpp"
#include "prodemb/kvconfig.hpp"
#include "prodemb/loss.hpp"
#include "prodemb/optim.hpp"
#include "prodemb/pool.hpp"
#include "prodemb/sample.hpp"

namespace prodemb {

struct TrainConfig {
    std::uint64_t steps = 2000;
    std::size_t batch_size = 8; // B, triplets per worker
    std::size_t workers = 4;    // P simulated data-parallel workers
    std::size_t pool_batches = 3; // k past batches kept as negatives
    double temperature = 0.07;
    double peak_lr = 3e-4;
    double warmup_ratio = 0.05;
    double min_lr = 0.0;
    std::uint64_t seed = 1;
    // image-only : text-only : image+text query mixing
    std::array<std::uint64_t, 3> modality_ratio{12, 3, 2};
    std::uint64_t checkpoint_every = 0; // 0 = final checkpoint only
    bool item_cat_attr = true; // items carry category/attribute text
    DetectorMode detector = DetectorMode::File;
    std::size_t threads = 1; // per-sample parallelism; results invariant
    EncoderConfig encoder;

    static TrainConfig from_kv(const KvConfig& kv);
    void validate() const;
    LrSchedule schedule() const {
        return LrSchedule{peak_lr, steps, warmup_ratio, min_lr};
    }
};

struct StepReport {
    std::uint64_t step = 0;
    double loss = 0.0;
    double lr = 0.0;
    std::size_t pool_size = 0;
    double wall_ms = 0.0;
};

/// Deterministic query-modality mixing: a seed-shuffled base window of
/// a+b+c assignments repeated periodically, so every window of that
/// length holds exactly a image-only, b text-only, c image+text.
class ModalityMixer {
public:
    ModalityMixer(std::array<std::uint64_t, 3> ratio, std::uint64_t seed);
    Modality at(std::uint64_t index) const;
    std::size_t window() const { return pattern_.size(); }

private:
    std::vector<Modality> pattern_;
};

/// Per-step debug capture used by tests: summed parameter gradients.
struct GradientCapture {
    std::vector<std::vector<double>> grads; // parallel to encoder params
};

class Trainer {
public:
    Trainer(TrainConfig config, std::vector<ProductSample> data);

    /// Resume: adopts a loaded encoder plus persisted optimizer, pool,
    /// and cursor state (see save_state/load_state).
    Trainer(TrainConfig config, std::vector<ProductSample> data,
            ProductEncoder encoder, AdamState optimizer, NegativePool pool,
            std::uint64_t next_step, std::uint64_t sample_cursor);

    const ProductEncoder& encoder() const { return encoder_; }
    ProductEncoder& encoder() { return encoder_; }
    const NegativePool& pool() const { return pool_; }
    std::uint64_t next_step() const { return next_step_; }

    /// One training step over B*P triplets drawn from the data cursor.
    StepReport step(GradientCapture* capture = nullptr);

    /// Runs `config.steps` steps with checkpoints and a JSONL report log
    /// under out_dir. Returns the report history.
    std::vector<StepReport> run(const std::string& out_dir);

    /// Overrides the next batch's query modalities (tests); cleared
    /// after one step.
    void force_modalities(std::vector<Modality> assignments);

    /// Persists the model checkpoint plus the optimizer, pool, and data
    /// cursors needed to resume bit-exactly.
    void save(const std::string& ckpt_path,
              const std::string& state_path) const;
    static Trainer resume(const std::string& ckpt_path,
                          const std::string& state_path, TrainConfig config,
                          std::vector<ProductSample> data);

private:
    struct Triplet {
        const ProductSample* sample;
        Modality query_modality;
    };
    std::vector<Triplet> next_batch();

    TrainConfig config_;
    std::vector<ProductSample> data_;
    ProductEncoder encoder_;
    AdamState optimizer_;
    NegativePool pool_;
    ModalityMixer mixer_;
    std::uint64_t next_step_ = 0;
    std::uint64_t sample_cursor_ = 0; // counts samples consumed overall
    std::vector<std::size_t> epoch_order_;
    std::uint64_t epoch_ = 0;
    std::vector<Modality> forced_;
};

/// Builds a vocabulary + fresh encoder for a config/corpus pair.
ProductEncoder make_encoder(const TrainConfig& config,
                            const std::vector<ProductSample>& train_split);

void write_report_log(const std::vector<StepReport>& reports,
                      const std::string& path);

} // namespace prodemb
