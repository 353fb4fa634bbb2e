#pragma once

#include <cstdint>
#include <deque>
#include <span>
#include <string>
#include <vector>

#include "prodemb/error.hpp"

namespace prodemb {

enum class ItemRole : std::uint8_t { Positive = 0, HardNegative = 1 };

/// One pooled item embedding with provenance.
struct PooledItem {
    std::uint32_t worker = 0;
    std::uint64_t batch_index = 0;
    std::string sample_id;
    ItemRole role = ItemRole::Positive;
    std::vector<double> embedding;
};

/// Ring buffer of item embeddings across P simulated workers and the k
/// most recent batches: the negative set S. Each slice holds exactly
/// 2*B*P embeddings (B positives + B hard negatives per worker); at most
/// k+1 slices are retained.
class NegativePool {
public:
    NegativePool(std::size_t batch_size, std::size_t workers,
                 std::size_t past_batches);

    std::size_t batch_size() const { return batch_size_; }
    std::size_t workers() const { return workers_; }
    std::size_t past_batches() const { return past_batches_; }

    std::size_t slice_count() const { return slices_.size(); }
    std::size_t size() const; // total embeddings currently held
    std::uint64_t batches_seen() const { return batches_seen_; }

    /// Appends the current batch: per worker, exactly 2B embeddings
    /// (positives then hard negatives, in slot order). Evicts the oldest
    /// slice beyond k+1.
    void advance(const std::vector<std::vector<PooledItem>>& per_worker);

    /// Every pooled embedding except the query's own positive; the
    /// query's own hard negative is included. Views are stable until the
    /// next advance(). The query must be in the newest slice.
    std::vector<std::span<const double>> assemble_negatives(
        const std::string& query_id) const;

    const std::deque<std::vector<PooledItem>>& slices() const {
        return slices_;
    }

    /// Serialization hooks for training-state persistence.
    void restore_slices(std::deque<std::vector<PooledItem>> slices,
                        std::uint64_t batches_seen);

private:
    std::size_t batch_size_;
    std::size_t workers_;
    std::size_t past_batches_;
    std::uint64_t batches_seen_ = 0;
    std::deque<std::vector<PooledItem>> slices_;
};

} // namespace prodemb
