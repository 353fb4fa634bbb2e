#include "cli.hpp"

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "CLI11.hpp"
#include "prodemb/checkpoint.hpp"
#include "prodemb/embedfile.hpp"
#include "prodemb/error.hpp"
#include "prodemb/evalsuite.hpp"
#include "prodemb/synthetic.hpp"
#include "prodemb/trainer.hpp"

namespace prodemb::cli {

namespace {

void configure_app(CLI::App& app, Command& cmd) {
    app.description("prodemb: multimodal product embeddings");
    app.require_subcommand(0, 1);

    auto* datagen = app.add_subcommand(
        "datagen", "generate a synthetic train/eval corpus");
    datagen->add_option("--config", cmd.config_path,
                        "generator key=value config");
    datagen->add_option("--out-dir", cmd.out_dir, "output directory")
        ->required();

    auto* train = app.add_subcommand("train", "contrastive training");
    train->add_option("--config", cmd.config_path,
                      "trainer key=value config");
    train->add_option("--data", cmd.data_path, "training JSONL")->required();
    train->add_option("--out-dir", cmd.out_dir, "run directory")->required();
    train->add_option("--resume-ckpt", cmd.ckpt_path,
                      "checkpoint to resume from");
    train->add_option("--resume-state", cmd.resume_state,
                      "training state to resume from");

    auto* embed = app.add_subcommand(
        "embed", "write an embeddings file for a dataset");
    embed->add_option("--ckpt", cmd.ckpt_path, "model checkpoint")
        ->required();
    embed->add_option("--data", cmd.data_path, "dataset JSONL")->required();
    embed->add_option("--out", cmd.out_path, "output embeddings file")
        ->required();
    embed->add_option("--side", cmd.side, "positive|query (default positive)");
    embed->add_option("--modality", cmd.modality,
                      "query modality: image|text|both");

    auto* eval = app.add_subcommand("eval", "zero-shot evaluation");
    eval->add_option("--ckpt", cmd.ckpt_path, "model checkpoint")->required();
    eval->add_option("--data", cmd.data_path, "eval JSONL")->required();
    eval->add_option("--task", cmd.task,
                     "image-based|text-based|item-based|classify|attributes|"
                     "all");
    eval->add_option("--out", cmd.out_path, "metrics JSON path")->required();
    eval->add_option("--csv", cmd.csv_path, "also write a flat CSV");
    eval->add_option("--ks", cmd.ks, "comma-separated recall cutoffs");
    eval->add_option("--level", cmd.level,
                     "category level for classification (default leaf)");
    eval->add_option("--top-n", cmd.top_n,
                     "top-n relaxation for classification accuracy");

    auto* inspect = app.add_subcommand(
        "inspect", "print one sample's fields and token segments");
    inspect->add_option("--data", cmd.data_path, "dataset JSONL")->required();
    inspect->add_option("--index", cmd.index, "record index (default 0)");
    inspect->add_option("--ckpt", cmd.ckpt_path,
                        "checkpoint (for model vocab / attention)");
    inspect->add_option("--attention", cmd.attention_path,
                        "export final-layer attention CSV here");
}

std::vector<std::size_t> parse_ks(const std::string& text) {
    std::vector<std::size_t> ks;
    std::size_t at = 0;
    while (at <= text.size()) {
        const auto comma = text.find(',', at);
        const std::string piece =
            text.substr(at, comma == std::string::npos ? std::string::npos
                                                       : comma - at);
        try {
            ks.push_back(std::stoull(piece));
        } catch (const std::exception&) {
            throw_usage("bad --ks value: '" + text + "'");
        }
        if (comma == std::string::npos) break;
        at = comma + 1;
    }
    std::sort(ks.begin(), ks.end());
    return ks;
}

int do_datagen(const Command& cmd) {
    GenConfig cfg;
    if (!cmd.config_path.empty()) {
        cfg = GenConfig::from_kv(KvConfig::parse_file(cmd.config_path));
    }
    SyntheticData data = generate_synthetic(cfg);
    std::filesystem::create_directories(cmd.out_dir);
    save_jsonl(data.train, cmd.out_dir + "/train.jsonl");
    save_jsonl(data.eval, cmd.out_dir + "/eval.jsonl");
    std::printf("wrote %zu train and %zu eval samples under %s\n",
                data.train.size(), data.eval.size(), cmd.out_dir.c_str());
    return 0;
}

int do_train(const Command& cmd) {
    TrainConfig cfg;
    if (!cmd.config_path.empty()) {
        cfg = TrainConfig::from_kv(KvConfig::parse_file(cmd.config_path));
    }
    std::vector<std::string> warnings;
    std::vector<ProductSample> data = load_jsonl(cmd.data_path, &warnings);
    for (const std::string& w : warnings) {
        std::fprintf(stderr, "[warn] %s\n", w.c_str());
    }
    if (cmd.ckpt_path.empty() != cmd.resume_state.empty()) {
        throw_usage("--resume-ckpt and --resume-state go together");
    }
    auto report_progress = [](const StepReport& r) {
        if (r.step % 100 == 0) {
            std::printf("step %llu  loss %.4f  lr %.2e  pool %zu\n",
                        static_cast<unsigned long long>(r.step), r.loss, r.lr,
                        r.pool_size);
            std::fflush(stdout);
        }
    };
    if (!cmd.ckpt_path.empty()) {
        Trainer t = Trainer::resume(cmd.ckpt_path, cmd.resume_state, cfg,
                                    std::move(data));
        while (t.next_step() < cfg.steps) report_progress(t.step());
        t.save(cmd.out_dir + "/ckpt_final.bin",
               cmd.out_dir + "/state_final.bin");
        std::printf("resumed run complete; final checkpoint in %s\n",
                    cmd.out_dir.c_str());
        return 0;
    }
    Trainer t(cfg, std::move(data));
    std::filesystem::create_directories(cmd.out_dir);
    auto reports = t.run(cmd.out_dir);
    if (!reports.empty()) {
        std::printf("trained %zu steps; final loss %.4f; outputs in %s\n",
                    reports.size(), reports.back().loss, cmd.out_dir.c_str());
    } else {
        std::printf("0 steps requested; wrote the initial checkpoint to %s\n",
                    cmd.out_dir.c_str());
    }
    return 0;
}

int do_embed(const Command& cmd) {
    ProductEncoder enc = load_checkpoint(cmd.ckpt_path);
    std::vector<ProductSample> data = load_jsonl(cmd.data_path);
    std::vector<std::pair<std::string, std::vector<double>>> entries;
    entries.reserve(data.size());
    if (cmd.side == "positive") {
        for (const ProductSample& s : data) {
            entries.emplace_back(
                s.sample_id,
                enc.encode(s.positive, Modality::ImageText, true).values);
        }
    } else if (cmd.side == "query") {
        const Modality m = modality_from_string(cmd.modality);
        for (const ProductSample& s : data) {
            entries.emplace_back(s.sample_id,
                                 enc.encode(s.query, m, false).values);
        }
    } else {
        throw_usage("--side must be positive or query, got '" + cmd.side +
                    "'");
    }
    write_embeddings(entries, cmd.out_path);
    std::printf("wrote %zu embeddings (dim %zu) to %s\n", entries.size(),
                entries.empty() ? 0 : entries[0].second.size(),
                cmd.out_path.c_str());
    return 0;
}

int do_eval(const Command& cmd) {
    ProductEncoder enc = load_checkpoint(cmd.ckpt_path);
    std::vector<ProductSample> data = load_jsonl(cmd.data_path);
    const std::vector<std::size_t> ks = parse_ks(cmd.ks);
    std::vector<std::string> warnings;
    MetricsReport report;

    const bool all = cmd.task == "all";
    bool ran = false;
    for (RetrievalTask task : {RetrievalTask::ImageBased,
                               RetrievalTask::TextBased,
                               RetrievalTask::ItemBased}) {
        if (!all && cmd.task != retrieval_task_name(task)) continue;
        RecallResult r = run_retrieval(enc, data, task, ks, &warnings);
        merge_recall(report, retrieval_task_name(task), r);
        ran = true;
    }
    if (all || cmd.task == "classify") {
        merge_classification(
            report, classify(enc, data, cmd.level, cmd.top_n, &warnings));
        ran = true;
    }
    if (all || cmd.task == "attributes") {
        merge_attributes(report, predict_attributes(enc, data));
        ran = true;
    }
    if (!ran) {
        throw_usage("unknown --task '" + cmd.task + "'");
    }
    for (const std::string& w : warnings) {
        std::fprintf(stderr, "[warn] %s\n", w.c_str());
    }
    report.write_json(cmd.out_path);
    if (!cmd.csv_path.empty()) report.write_csv(cmd.csv_path);
    for (const auto& [task, metric, value] : report.rows()) {
        std::printf("%s %s = %.4f\n", task.c_str(), metric.c_str(), value);
    }
    return 0;
}

int do_inspect(const Command& cmd) {
    std::vector<ProductSample> data = load_jsonl(cmd.data_path);
    if (cmd.index >= data.size()) {
        throw_data("--index " + std::to_string(cmd.index) +
                   " out of range: dataset has " +
                   std::to_string(data.size()) + " samples");
    }
    const ProductSample& s = data[cmd.index];
    std::printf("sample_id: %s\n", s.sample_id.c_str());
    std::printf("query_title: %s\n", s.query.title.c_str());
    if (s.query.image) {
        std::printf("query_image: %zux%zux%zu\n", s.query.image->channels,
                    s.query.image->height, s.query.image->width);
    }
    if (s.query.bbox) {
        std::printf("query_bbox: (%lld,%lld,%lld,%lld)\n",
                    static_cast<long long>(s.query.bbox->x1),
                    static_cast<long long>(s.query.bbox->y1),
                    static_cast<long long>(s.query.bbox->x2),
                    static_cast<long long>(s.query.bbox->y2));
    }
    std::printf("pos_title: %s\n", s.positive.title.c_str());
    for (const auto& [level, label] : s.positive.categories) {
        std::printf("category %s: %s\n", level.c_str(), label.c_str());
    }
    for (const auto& [key, value] : s.positive.attributes) {
        std::printf("attribute %s: %s\n", key.c_str(), value.c_str());
    }
    std::printf("neg_title: %s\n", s.hard_negative.title.c_str());

    Vocabulary vocab;
    if (!cmd.ckpt_path.empty()) {
        vocab = load_checkpoint(cmd.ckpt_path).vocab();
    } else {
        vocab = Vocabulary::build({s}, 4096);
    }
    TokenSequence seq = tokenize(s.positive, true, vocab);
    std::printf("positive tokens:");
    for (std::size_t i = 0; i < seq.length(); ++i) {
        std::printf(" %s/%s", vocab.words()[seq.ids[i]].c_str(),
                    segment_name(seq.segments[i]));
    }
    std::printf("\n");

    if (!cmd.attention_path.empty()) {
        if (cmd.ckpt_path.empty()) {
            throw_usage("--attention requires --ckpt");
        }
        ProductEncoder enc = load_checkpoint(cmd.ckpt_path);
        const Modality m =
            s.positive.image ? Modality::ImageText : Modality::TextOnly;
        export_attention(enc, s, m, cmd.attention_path);
        std::printf("attention written to %s\n", cmd.attention_path.c_str());
    }
    return 0;
}

} // namespace

Command parse_args(const std::vector<std::string>& args) {
    Command cmd;
    CLI::App app;
    configure_app(app, cmd);
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    try {
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        cmd.help_requested = true;
        return cmd;
    } catch (const CLI::ParseError& e) {
        throw_usage(e.what());
    }
    if (app.got_subcommand("datagen")) cmd.subcommand = Subcommand::Datagen;
    else if (app.got_subcommand("train")) cmd.subcommand = Subcommand::Train;
    else if (app.got_subcommand("embed")) cmd.subcommand = Subcommand::Embed;
    else if (app.got_subcommand("eval")) cmd.subcommand = Subcommand::Eval;
    else if (app.got_subcommand("inspect")) cmd.subcommand = Subcommand::Inspect;
    else cmd.help_requested = true;
    return cmd;
}

int execute(const Command& cmd) {
    switch (cmd.subcommand) {
        case Subcommand::Datagen: return do_datagen(cmd);
        case Subcommand::Train: return do_train(cmd);
        case Subcommand::Embed: return do_embed(cmd);
        case Subcommand::Eval: return do_eval(cmd);
        case Subcommand::Inspect: return do_inspect(cmd);
        case Subcommand::Help: break;
    }
    return 0;
}

int run_cli(int argc, char** argv) {
    Command cmd;
    CLI::App app;
    configure_app(app, cmd);
    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e); // prints usage, exit 0
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return static_cast<int>(ErrorKind::Usage);
    }
    if (app.get_subcommands().empty()) {
        std::cout << app.help() << std::flush;
        return 0;
    }
    if (app.got_subcommand("datagen")) cmd.subcommand = Subcommand::Datagen;
    else if (app.got_subcommand("train")) cmd.subcommand = Subcommand::Train;
    else if (app.got_subcommand("embed")) cmd.subcommand = Subcommand::Embed;
    else if (app.got_subcommand("eval")) cmd.subcommand = Subcommand::Eval;
    else cmd.subcommand = Subcommand::Inspect;
    try {
        return execute(cmd);
    } catch (const Error& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return e.exit_code();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return static_cast<int>(ErrorKind::Runtime);
    }
}

} // namespace prodemb::cli
