#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "cli.hpp"
#include "doctest.h"
#include "prodemb/error.hpp"

using namespace prodemb;
using cli::Command;
using cli::Subcommand;

namespace {

int run(const std::string& args) {
    const std::string cmd = std::string(PRODEMB_BINARY) + " " + args;
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const std::string& p) {
    std::ifstream in(p, std::ios::binary);
    return std::string(std::istreambuf_iterator<char>(in),
                       std::istreambuf_iterator<char>());
}

} // namespace

TEST_CASE("parse_args maps flags onto commands") {
    Command c = cli::parse_args({"train", "--config", "c.cfg", "--data",
                                 "d.jsonl", "--out-dir", "run"});
    CHECK(c.subcommand == Subcommand::Train);
    CHECK(c.config_path == "c.cfg");
    CHECK(c.data_path == "d.jsonl");
    CHECK(c.out_dir == "run");

    Command e = cli::parse_args({"eval", "--task", "image-based", "--ckpt",
                                 "m.bin", "--data", "d.jsonl", "--out",
                                 "m.json"});
    CHECK(e.subcommand == Subcommand::Eval);
    CHECK(e.task == "image-based");
    CHECK(e.ckpt_path == "m.bin");

    SUBCASE("unknown subcommand is a usage error") {
        CHECK_THROWS_AS(cli::parse_args({"bogus"}), Error);
        try {
            cli::parse_args({"bogus"});
        } catch (const Error& err) {
            CHECK(err.kind() == ErrorKind::Usage);
        }
    }
    SUBCASE("unknown flag is a usage error") {
        CHECK_THROWS_AS(cli::parse_args({"train", "--nope", "x"}), Error);
    }
    SUBCASE("missing required flag is a usage error") {
        CHECK_THROWS_AS(cli::parse_args({"embed", "--data", "d.jsonl"}),
                        Error);
    }
    SUBCASE("--help is not an error") {
        Command h = cli::parse_args({"--help"});
        CHECK(h.help_requested);
    }
}

TEST_CASE("binary pipeline: datagen, train, eval, embed, inspect") {
    namespace fs = std::filesystem;
    const std::string dir = "./cli_test_tmp";
    fs::remove_all(dir);
    fs::create_directories(dir);

    {
        std::ofstream gen(dir + "/gen.cfg");
        gen << "identities = 8\ncategories = 4\nimage_size = 16\n"
               "noise = 0.3\nseed = 7\ntrain_per_identity = 2\n"
               "eval_per_identity = 1\n";
        std::ofstream train(dir + "/train.cfg");
        train << "steps = 6\nbatch_size = 2\nworkers = 1\npool_batches = 1\n"
                 "seed = 7\nmodel_dim = 16\nlayers = 1\nheads = 2\n"
                 "experts = 3\nexpert_hidden = 16\nvocab_size = 64\n"
                 "image_resolution = 16\npatch_size = 8\nmax_text_len = 16\n";
    }

    CHECK(run("--help > /dev/null") == 0);
    CHECK(run("datagen --config " + dir + "/gen.cfg --out-dir " + dir +
              "/data > /dev/null") == 0);
    CHECK(run("train --config " + dir + "/train.cfg --data " + dir +
              "/data/train.jsonl --out-dir " + dir +
              "/run > /dev/null 2>&1") == 0);
    CHECK(run("eval --ckpt " + dir + "/run/ckpt_final.bin --data " + dir +
              "/data/eval.jsonl --ks 1,5 --out " + dir +
              "/metrics.json --csv " + dir +
              "/metrics.csv > /dev/null 2>&1") == 0);
    CHECK(fs::exists(dir + "/metrics.json"));
    CHECK(fs::exists(dir + "/metrics.csv"));
    CHECK(run("inspect --data " + dir + "/data/eval.jsonl --index 0 "
              "> /dev/null") == 0);

    SUBCASE("embed output is byte-identical across runs") {
        CHECK(run("embed --ckpt " + dir + "/run/ckpt_final.bin --data " +
                  dir + "/data/eval.jsonl --out " + dir +
                  "/a.bin > /dev/null") == 0);
        CHECK(run("embed --ckpt " + dir + "/run/ckpt_final.bin --data " +
                  dir + "/data/eval.jsonl --out " + dir +
                  "/b.bin > /dev/null") == 0);
        const std::string a = slurp(dir + "/a.bin");
        CHECK(a == slurp(dir + "/b.bin"));
        CHECK(a.size() > 0);
    }

    SUBCASE("distinct nonzero exit codes per error class") {
        // usage error: unknown subcommand
        CHECK(run("bogus > /dev/null 2>&1") == 1);
        // config error: unknown key in the config file
        {
            std::ofstream bad(dir + "/bad.cfg");
            bad << "identities = 8\nwhatever = 3\n";
        }
        CHECK(run("datagen --config " + dir + "/bad.cfg --out-dir " + dir +
                  "/x > /dev/null 2>&1") == 2);
        // data error: missing checkpoint path is named in the message
        const std::string missing = dir + "/does_not_exist.bin";
        const std::string err_file = dir + "/err.txt";
        CHECK(run("eval --ckpt " + missing + " --data " + dir +
                  "/data/eval.jsonl --out " + dir + "/m.json 2> " +
                  err_file + " > /dev/null") == 3);
        CHECK(slurp(err_file).find(missing) != std::string::npos);
    }

    fs::remove_all(dir);
}
