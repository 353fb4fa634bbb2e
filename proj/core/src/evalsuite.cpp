#include "prodemb/evalsuite.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <set>

#include "json.hpp"
#include "prodemb/loss.hpp"

namespace prodemb {

RetrievalTask retrieval_task_from_string(const std::string& s) {
    if (s == "image-based") return RetrievalTask::ImageBased;
    if (s == "text-based") return RetrievalTask::TextBased;
    if (s == "item-based") return RetrievalTask::ItemBased;
    throw_config("unknown retrieval task: '" + s +
                 "' (expected image-based|text-based|item-based)");
}

const char* retrieval_task_name(RetrievalTask t) {
    switch (t) {
        case RetrievalTask::ImageBased: return "image-based";
        case RetrievalTask::TextBased: return "text-based";
        case RetrievalTask::ItemBased: return "item-based";
    }
    return "?";
}

std::size_t rank_of_item(std::span<const double> query_emb,
                         const EvalGallery& gallery, std::size_t target) {
    const double target_sim =
        similarity(query_emb, gallery.items[target].embedding);
    const std::string& target_id = gallery.items[target].id;
    std::size_t ahead = 0;
    for (std::size_t j = 0; j < gallery.items.size(); ++j) {
        if (j == target) continue;
        const double s = similarity(query_emb, gallery.items[j].embedding);
        if (s > target_sim ||
            (s == target_sim && gallery.items[j].id < target_id)) {
            ++ahead;
        }
    }
    return ahead + 1;
}

std::map<std::size_t, double> recall_at_k(const EvalGallery& gallery,
                                          std::vector<std::size_t> ks,
                                          std::vector<std::string>* warnings) {
    if (gallery.items.empty()) throw_data("recall_at_k: empty gallery");
    if (gallery.queries.empty()) throw_data("recall_at_k: no queries");
    for (std::size_t i = 0; i + 1 < ks.size(); ++i) {
        if (ks[i] > ks[i + 1]) {
            throw_runtime("recall_at_k: ks must be sorted ascending");
        }
    }
    for (std::size_t& k : ks) {
        if (k == 0) throw_runtime("recall_at_k: k must be >= 1");
        if (k > gallery.items.size()) {
            if (warnings) {
                warnings->push_back("recall@" + std::to_string(k) +
                                    " clamped to gallery size " +
                                    std::to_string(gallery.items.size()));
            }
            k = gallery.items.size();
        }
    }

    std::map<std::string, std::size_t> index;
    for (std::size_t j = 0; j < gallery.items.size(); ++j) {
        index[gallery.items[j].id] = j;
    }
    std::vector<std::size_t> ranks;
    ranks.reserve(gallery.queries.size());
    for (const auto& q : gallery.queries) {
        auto it = index.find(q.positive_id);
        if (it == index.end()) {
            throw_data("recall_at_k: positive id '" + q.positive_id +
                       "' not in gallery");
        }
        ranks.push_back(rank_of_item(q.embedding, gallery, it->second));
    }
    std::map<std::size_t, double> out;
    for (std::size_t k : ks) {
        std::size_t hits = 0;
        for (std::size_t r : ranks) {
            if (r <= k) ++hits;
        }
        out[k] = double(hits) / double(ranks.size());
    }
    return out;
}

namespace {
Modality task_modality(RetrievalTask task) {
    switch (task) {
        case RetrievalTask::ImageBased: return Modality::ImageOnly;
        case RetrievalTask::TextBased: return Modality::TextOnly;
        case RetrievalTask::ItemBased: return Modality::ImageText;
    }
    return Modality::ImageText;
}
} // namespace

RecallResult run_retrieval(const ProductEncoder& encoder,
                           const std::vector<ProductSample>& samples,
                           RetrievalTask task,
                           const std::vector<std::size_t>& ks,
                           std::vector<std::string>* warnings) {
    if (samples.empty()) throw_data("run_retrieval: empty dataset");
    EvalGallery gallery;
    const Modality qmod = task_modality(task);
    RecallResult result;
    for (const ProductSample& s : samples) {
        gallery.items.push_back(
            {s.sample_id,
             encoder.encode(s.positive, Modality::ImageText, true).values});
        try {
            gallery.queries.push_back(
                {s.sample_id, s.sample_id,
                 encoder.encode(s.query, qmod, false).values});
        } catch (const Error& e) {
            ++result.queries_skipped;
            if (warnings) {
                warnings->push_back("query " + s.sample_id + " skipped: " +
                                    e.what());
            }
        }
    }
    if (gallery.queries.empty()) {
        throw_data("run_retrieval: every query lacked the task modality");
    }
    result.recall = recall_at_k(gallery, ks, warnings);
    result.queries_evaluated = gallery.queries.size();
    return result;
}

ClassificationResult classify_embedded(
    const std::vector<std::vector<double>>& item_embs,
    const std::vector<std::string>& truths,
    const std::vector<std::string>& candidates,
    const std::vector<std::vector<double>>& cand_embs, std::size_t top_n) {
    if (top_n == 0) throw_config("classify: top_n must be >= 1");
    if (candidates.empty()) throw_data("classify: empty candidate set");
    if (item_embs.size() != truths.size() ||
        candidates.size() != cand_embs.size()) {
        throw_runtime("classify_embedded: input length mismatch");
    }
    if (truths.empty()) throw_data("classify: nothing to classify");

    ClassificationResult result;
    result.top_n = top_n;
    std::vector<std::string> top1;
    std::size_t topn_hits = 0;
    for (std::size_t i = 0; i < item_embs.size(); ++i) {
        const auto& emb = item_embs[i];
        const std::string& label = truths[i];
        std::size_t true_idx = candidates.size();
        for (std::size_t c = 0; c < candidates.size(); ++c) {
            if (candidates[c] == label) true_idx = c;
        }
        if (true_idx == candidates.size()) {
            throw_data("classify: truth '" + label +
                       "' missing from the candidate set");
        }
        // rank of the true label under (similarity desc, label asc)
        const double true_sim = similarity(emb, cand_embs[true_idx]);
        std::size_t ahead = 0;
        std::size_t best = 0;
        double best_sim = similarity(emb, cand_embs[0]);
        for (std::size_t c = 0; c < cand_embs.size(); ++c) {
            const double s_c = similarity(emb, cand_embs[c]);
            if (c != true_idx &&
                (s_c > true_sim ||
                 (s_c == true_sim && candidates[c] < label))) {
                ++ahead;
            }
            if (c > 0 && (s_c > best_sim ||
                          (s_c == best_sim &&
                           candidates[c] < candidates[best]))) {
                best = c;
                best_sim = s_c;
            }
        }
        if (ahead + 1 <= top_n) ++topn_hits;
        top1.push_back(candidates[best]);
    }
    result.items = truths.size();
    result.accuracy_topn = double(topn_hits) / double(truths.size());
    result.prf = prf_metrics(truths, top1, 1.0);
    result.accuracy_top1 = result.prf.accuracy;
    return result;
}

ClassificationResult classify(const ProductEncoder& encoder,
                              const std::vector<ProductSample>& samples,
                              const std::string& level, std::size_t top_n,
                              std::vector<std::string>* warnings) {
    CandidateSets sets = build_candidate_sets(samples, level);
    if (sets.categories.empty()) throw_data("classify: empty candidate set");

    // candidate labels as text-only embeddings
    std::vector<std::vector<double>> cand_embs;
    cand_embs.reserve(sets.categories.size());
    for (const std::string& label : sets.categories) {
        ProductSide side;
        side.title = label;
        cand_embs.push_back(
            encoder.encode(side, Modality::TextOnly, false).values);
    }

    std::vector<std::vector<double>> item_embs;
    std::vector<std::string> truths;
    for (const ProductSample& s : samples) {
        std::string label;
        if (level == "leaf") {
            label = s.positive.leaf_category();
        } else {
            for (const auto& [name, value] : s.positive.categories) {
                if (name == level) label = value;
            }
        }
        if (label.empty()) {
            if (warnings) {
                warnings->push_back("item " + s.sample_id +
                                    " lacks level '" + level + "', skipped");
            }
            continue;
        }
        item_embs.push_back(
            encoder.encode(s.positive, Modality::ImageText, true).values);
        truths.push_back(label);
    }
    if (truths.empty()) {
        throw_data("classify: no item carries level '" + level + "'");
    }
    ClassificationResult result = classify_embedded(
        item_embs, truths, sets.categories, cand_embs, top_n);
    result.level = level;
    return result;
}

std::map<std::string, std::vector<std::string>> build_attribute_sets(
    const std::vector<ProductSample>& corpus) {
    std::map<std::string, std::set<std::string>> values;
    for (const ProductSample& s : corpus) {
        for (const auto& [key, value] : s.positive.attributes) {
            values[key].insert(value);
        }
    }
    std::map<std::string, std::vector<std::string>> out;
    for (const auto& [key, set] : values) {
        out[key].assign(set.begin(), set.end());
    }
    return out;
}

AttributeResult predict_attributes(const ProductEncoder& encoder,
                                   const std::vector<ProductSample>& samples) {
    auto sets = build_attribute_sets(samples);
    // one prompt embedding per (key, value)
    std::map<std::string, std::vector<std::vector<double>>> prompt_embs;
    for (const auto& [key, values] : sets) {
        auto& embs = prompt_embs[key];
        embs.reserve(values.size());
        for (const std::string& value : values) {
            ProductSide side;
            side.title = key + " : " + value;
            embs.push_back(
                encoder.encode(side, Modality::TextOnly, false).values);
        }
    }

    AttributeResult result;
    std::map<std::string, std::pair<std::vector<std::string>,
                                    std::vector<std::string>>> per_key_pairs;
    std::vector<std::string> pooled_truth, pooled_pred;
    for (const ProductSample& s : samples) {
        if (s.positive.attributes.empty()) continue; // skip rule
        const std::vector<double> emb =
            encoder.encode(s.positive, Modality::ImageText, true).values;
        for (const auto& [key, value] : s.positive.attributes) {
            const auto& values = sets.at(key);
            const auto& embs = prompt_embs.at(key);
            std::size_t best = 0;
            double best_sim = similarity(emb, embs[0]);
            for (std::size_t c = 1; c < embs.size(); ++c) {
                const double s_c = similarity(emb, embs[c]);
                if (s_c > best_sim ||
                    (s_c == best_sim && values[c] < values[best])) {
                    best = c;
                    best_sim = s_c;
                }
            }
            per_key_pairs[key].first.push_back(value);
            per_key_pairs[key].second.push_back(values[best]);
            pooled_truth.push_back(key + "=" + value);
            pooled_pred.push_back(key + "=" + values[best]);
        }
    }
    if (pooled_truth.empty()) {
        throw_data("predict_attributes: no item carries any attribute");
    }
    for (const auto& [key, pair] : per_key_pairs) {
        AttributeKeyResult kr;
        kr.predictions = pair.first.size();
        kr.prf = prf_metrics(pair.first, pair.second, 1.0);
        kr.accuracy = kr.prf.accuracy;
        result.per_key[key] = kr;
    }
    result.predictions = pooled_truth.size();
    result.pooled = prf_metrics(pooled_truth, pooled_pred, 1.0);
    result.accuracy = result.pooled.accuracy;
    return result;
}

void export_attention(const ProductEncoder& encoder,
                      const ProductSample& sample, Modality modality,
                      const std::string& out_path) {
    AttentionTrace trace;
    auto out = encoder.forward_states(sample.positive, modality, true, &trace);
    if (trace.weights.empty()) {
        throw_runtime("export_attention: no attention recorded");
    }
    const std::size_t tokens = trace.tokens;
    std::vector<double> avg(tokens * tokens, 0.0);
    for (const auto& head : trace.weights) {
        for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += head[i];
    }
    const double inv = 1.0 / double(trace.weights.size());
    for (double& v : avg) v *= inv;

    std::FILE* f = std::fopen(out_path.c_str(), "w");
    if (!f) throw_data("cannot write attention file: " + out_path);
    std::fprintf(f, "token,segment");
    for (std::size_t j = 0; j < tokens; ++j) {
        std::fprintf(f, ",w%zu", j);
    }
    std::fprintf(f, "\n");
    for (std::size_t i = 0; i < tokens; ++i) {
        std::fprintf(f, "%zu,%s", i, segment_name(out.segments[i]));
        for (std::size_t j = 0; j < tokens; ++j) {
            std::fprintf(f, ",%.17g", avg[i * tokens + j]);
        }
        std::fprintf(f, "\n");
    }
    if (std::fclose(f) != 0) {
        throw_data("short write on attention file: " + out_path);
    }
}

void MetricsReport::add(const std::string& task, const std::string& metric,
                        double value) {
    rows_.emplace_back(task, metric, value);
}

double MetricsReport::get(const std::string& task,
                          const std::string& metric) const {
    for (const auto& [t, m, v] : rows_) {
        if (t == task && m == metric) return v;
    }
    throw_runtime("metrics report has no " + task + "/" + metric);
}

void MetricsReport::write_json(const std::string& path) const {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [task, metric, value] : rows_) {
        j[task][metric] = value;
    }
    std::ofstream out(path);
    if (!out) throw_data("cannot write metrics file: " + path);
    out << j.dump(2) << "\n";
}

void MetricsReport::write_csv(const std::string& path) const {
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw_data("cannot write metrics file: " + path);
    std::fprintf(f, "task,metric,value\n");
    for (const auto& [task, metric, value] : rows_) {
        std::fprintf(f, "%s,%s,%.17g\n", task.c_str(), metric.c_str(), value);
    }
    std::fclose(f);
}

void merge_recall(MetricsReport& report, const std::string& task,
                  const RecallResult& result) {
    for (const auto& [k, v] : result.recall) {
        report.add(task, "recall@" + std::to_string(k), v);
    }
    report.add(task, "queries", double(result.queries_evaluated));
    report.add(task, "skipped", double(result.queries_skipped));
}

void merge_classification(MetricsReport& report,
                          const ClassificationResult& r) {
    const std::string task = "classification";
    report.add(task, "accuracy_top" + std::to_string(r.top_n),
               r.accuracy_topn);
    report.add(task, "accuracy_top1", r.accuracy_top1);
    report.add(task, "precision_macro", r.prf.precision_macro);
    report.add(task, "recall_macro", r.prf.recall_macro);
    report.add(task, "f1_macro", r.prf.f_macro);
    report.add(task, "precision_micro", r.prf.precision_micro);
    report.add(task, "recall_micro", r.prf.recall_micro);
    report.add(task, "f1_micro", r.prf.f_micro);
    report.add(task, "items", double(r.items));
}

void merge_attributes(MetricsReport& report, const AttributeResult& r) {
    report.add("attributes", "accuracy", r.accuracy);
    report.add("attributes", "precision_macro", r.pooled.precision_macro);
    report.add("attributes", "recall_macro", r.pooled.recall_macro);
    report.add("attributes", "f1_macro", r.pooled.f_macro);
    report.add("attributes", "predictions", double(r.predictions));
    for (const auto& [key, kr] : r.per_key) {
        report.add("attributes", "accuracy[" + key + "]", kr.accuracy);
    }
}

} // namespace prodemb
