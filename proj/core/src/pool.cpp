#include "prodemb/pool.hpp"

namespace prodemb {

NegativePool::NegativePool(std::size_t batch_size, std::size_t workers,
                           std::size_t past_batches)
    : batch_size_(batch_size), workers_(workers), past_batches_(past_batches) {
    if (batch_size_ == 0 || workers_ == 0) {
        throw_config("negative pool requires positive batch size and workers");
    }
}

std::size_t NegativePool::size() const {
    std::size_t n = 0;
    for (const auto& s : slices_) n += s.size();
    return n;
}

void NegativePool::advance(
    const std::vector<std::vector<PooledItem>>& per_worker) {
    if (per_worker.size() != workers_) {
        throw_runtime("advance_pool: expected " + std::to_string(workers_) +
                      " workers, got " + std::to_string(per_worker.size()));
    }
    std::vector<PooledItem> slice;
    slice.reserve(2 * batch_size_ * workers_);
    for (std::size_t w = 0; w < workers_; ++w) {
        if (per_worker[w].size() != 2 * batch_size_) {
            throw_runtime("advance_pool: worker " + std::to_string(w) +
                          " contributed " +
                          std::to_string(per_worker[w].size()) +
                          " embeddings, expected " +
                          std::to_string(2 * batch_size_));
        }
        for (const PooledItem& item : per_worker[w]) slice.push_back(item);
    }
    slices_.push_back(std::move(slice));
    ++batches_seen_;
    while (slices_.size() > past_batches_ + 1) slices_.pop_front();
}

std::vector<std::span<const double>> NegativePool::assemble_negatives(
    const std::string& query_id) const {
    if (slices_.empty()) {
        throw_runtime("assemble_negatives: pool is empty");
    }
    bool in_newest = false;
    for (const PooledItem& item : slices_.back()) {
        if (item.sample_id == query_id) {
            in_newest = true;
            break;
        }
    }
    if (!in_newest) {
        throw_runtime("assemble_negatives: query '" + query_id +
                      "' is not in the newest slice");
    }
    std::vector<std::span<const double>> out;
    out.reserve(size() - 1);
    for (const auto& slice : slices_) {
        for (const PooledItem& item : slice) {
            const bool own_positive = item.sample_id == query_id &&
                                      item.role == ItemRole::Positive;
            if (own_positive) continue;
            out.emplace_back(item.embedding);
        }
    }
    return out;
}

void NegativePool::restore_slices(std::deque<std::vector<PooledItem>> slices,
                                  std::uint64_t batches_seen) {
    slices_ = std::move(slices);
    batches_seen_ = batches_seen;
}

} // namespace prodemb
