#pragma once

#include <map>
#include <string>
#include <tuple>
#include <vector>

#include "prodemb/candidates.hpp"
#include "prodemb/encoder.hpp"
#include "prodemb/metrics.hpp"

namespace prodemb {

enum class RetrievalTask { ImageBased, TextBased, ItemBased };
RetrievalTask retrieval_task_from_string(const std::string& s);
const char* retrieval_task_name(RetrievalTask t);

/// Candidate items and queries for ranking evaluation. Rankings order by
/// similarity descending with ties broken by ascending item id, so they
/// are fully deterministic.
struct EvalGallery {
    struct Item {
        std::string id;
        std::vector<double> embedding;
    };
    struct Query {
        std::string id;
        std::string positive_id;
        std::vector<double> embedding;
    };
    std::vector<Item> items;
    std::vector<Query> queries;
};

/// 1-based rank of the item at `target` in the similarity ranking for
/// `query_emb` (ties: smaller id ranks first).
std::size_t rank_of_item(std::span<const double> query_emb,
                         const EvalGallery& gallery, std::size_t target);

std::map<std::size_t, double> recall_at_k(const EvalGallery& gallery,
                                          std::vector<std::size_t> ks,
                                          std::vector<std::string>* warnings = nullptr);

struct RecallResult {
    std::map<std::size_t, double> recall;
    std::size_t queries_evaluated = 0;
    std::size_t queries_skipped = 0;
};

/// Encodes queries per task modality (image-based: query image only;
/// text-based: query title only; item-based: both), the gallery as all
/// positives with category/attribute text, then ranks. Queries whose
/// modality content is missing are skipped with a warning.
RecallResult run_retrieval(const ProductEncoder& encoder,
                           const std::vector<ProductSample>& samples,
                           RetrievalTask task,
                           const std::vector<std::size_t>& ks,
                           std::vector<std::string>* warnings = nullptr);

struct ClassificationResult {
    std::string level;
    std::size_t top_n = 10;
    std::size_t items = 0;
    double accuracy_topn = 0.0; // correct if truth ranks within top_n
    double accuracy_top1 = 0.0;
    PrfReport prf; // over top-1 predictions
};

/// Zero-shot classification by embedding matching against the candidate
/// category labels encoded as text. Accuracy uses the top-`top_n`
/// relaxation; precision/recall/F use the top-1 prediction.
ClassificationResult classify(const ProductEncoder& encoder,
                              const std::vector<ProductSample>& samples,
                              const std::string& level, std::size_t top_n,
                              std::vector<std::string>* warnings = nullptr);

/// The matching core of classify() on precomputed embeddings: item i has
/// truth truths[i]; candidates[c] is embedded as cand_embs[c].
ClassificationResult classify_embedded(
    const std::vector<std::vector<double>>& item_embs,
    const std::vector<std::string>& truths,
    const std::vector<std::string>& candidates,
    const std::vector<std::vector<double>>& cand_embs, std::size_t top_n);

std::map<std::string, std::vector<std::string>> build_attribute_sets(
    const std::vector<ProductSample>& corpus);

struct AttributeKeyResult {
    std::size_t predictions = 0;
    double accuracy = 0.0;
    PrfReport prf;
};

struct AttributeResult {
    std::map<std::string, AttributeKeyResult> per_key;
    std::size_t predictions = 0;
    double accuracy = 0.0;
    PrfReport pooled;
};

/// For each item and each attribute key present on it, predicts the
/// value by similarity against "key : value" prompts over the observed
/// value set of that key. Items without attributes contribute nothing.
AttributeResult predict_attributes(const ProductEncoder& encoder,
                                   const std::vector<ProductSample>& samples);

/// Final-layer attention averaged over heads as CSV: one row per token
/// (index, segment tag, then one weight per key token); rows sum to 1.
void export_attention(const ProductEncoder& encoder,
                      const ProductSample& sample, Modality modality,
                      const std::string& out_path);

/// Flat task -> metric -> value table with JSON and CSV writers.
class MetricsReport {
public:
    void add(const std::string& task, const std::string& metric, double value);
    double get(const std::string& task, const std::string& metric) const;
    const std::vector<std::tuple<std::string, std::string, double>>& rows()
        const {
        return rows_;
    }
    void write_json(const std::string& path) const;
    void write_csv(const std::string& path) const;

private:
    std::vector<std::tuple<std::string, std::string, double>> rows_;
};

void merge_recall(MetricsReport& report, const std::string& task,
                  const RecallResult& result);
void merge_classification(MetricsReport& report,
                          const ClassificationResult& result);
void merge_attributes(MetricsReport& report, const AttributeResult& result);

} // namespace prodemb
