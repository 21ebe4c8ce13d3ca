#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "geohall/cli.hpp"
#include "geohall/corpus.hpp"
#include "geohall/evalkit.hpp"
#include "geohall/trace.hpp"

using namespace geohall;
namespace fs = std::filesystem;

namespace {

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        dir_ = fs::temp_directory_path() / (std::string("geohall_cli_") + info->name());
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int run(std::vector<std::string> args) {
        args.insert(args.begin(), "geohall");
        ::testing::internal::CaptureStderr();
        const int code = cli::run(args);
        err_ = ::testing::internal::GetCapturedStderr();
        return code;
    }

    static std::string slurp(const std::string& p) {
        std::ifstream in(p, std::ios::binary);
        return {std::istreambuf_iterator<char>(in), {}};
    }

    // gen -> mock-extract -> stats -> normalize -> eval on a small math set.
    void small_pipeline(const std::string& tag) {
        const auto ds = path(tag + "ds.jsonl"), tr = path(tag + "tr"), st = path(tag + "stats.csv"),
                   nm = path(tag + "norm.csv");
        ASSERT_EQ(run({"gen", "--domains", "math", "--types", "incorrectness", "--levels", "3", "--perturb", "--offsets=-1,1,2", "--seed", "3",
                       "--out", ds}),
                  0)
            << err_;
        ASSERT_EQ(run({"mock-extract", "--manifest", ds, "--traces", tr, "--layers", "6", "--dim", "16", "--heads", "2",
                       "--effect", "incorrectness:3:5:1.5:0"}),
                  0)
            << err_;
        ASSERT_EQ(run({"stats", "--traces", tr, "--out", st}), 0) << err_;
        ASSERT_EQ(run({"normalize", "--traces", tr, "--stats", st, "--out", nm}), 0) << err_;
        ASSERT_EQ(run({"eval", "--traces", tr, "--stats", st, "--out", path(tag + "eval")}), 0) << err_;
        ASSERT_EQ(run({"eval", "--traces", tr, "--stats", nm, "--normalized", "--out", path(tag + "evaln")}), 0) << err_;
    }

    fs::path dir_;
    std::string err_;
};

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

}  // namespace

TEST_F(CliTest, UnknownFlagIsUsageError) {
    EXPECT_EQ(run({"gen", "--bogus"}), cli::kExitUsage);
    EXPECT_NE(err_.find("Usage"), std::string::npos) << err_;
    EXPECT_EQ(run({}), cli::kExitUsage);
    EXPECT_EQ(run({"frobnicate"}), cli::kExitUsage);
}

TEST_F(CliTest, BadValuesAreUsageErrors) {
    EXPECT_EQ(run({"gen", "--domains", "geology", "--out", path("x")}), cli::kExitUsage);
    EXPECT_EQ(run({"gen", "--offsets=-1,0,1", "--out", path("x")}), cli::kExitUsage);
    EXPECT_EQ(run({"gen"}), cli::kExitUsage);
    EXPECT_EQ(run({"gen", "--out", path("no/such/dir/x.jsonl")}), cli::kExitUsage);
    EXPECT_EQ(run({"stats", "--traces", path("missing"), "--out", path("s.csv")}), cli::kExitUsage);
    EXPECT_EQ(run({"--log-level", "loud", "gen", "--out", path("x")}), cli::kExitUsage);
}

TEST_F(CliTest, GenAllHas225Baselines) {
    ASSERT_EQ(run({"gen", "--domains", "all", "--types", "", "--seed", "1", "--out", path("all.jsonl")}), 0) << err_;
    std::ifstream in(path("all.jsonl"));
    const auto ds = corpus::read_manifest(in);
    EXPECT_EQ(ds.seed, 1u);
    EXPECT_EQ(std::count_if(ds.records.begin(), ds.records.end(),
                            [](const corpus::PRRecord& r) { return r.hall_type == corpus::HallType::baseline; }),
              225);
    EXPECT_NE(err_.find("level=info"), std::string::npos);
}

TEST_F(CliTest, ConfigFilePrecedence) {
    {
        std::ofstream cfg(path("cfg.json"));
        cfg << R"({"domains": ["counting"], "types": ["confidence"], "levels": [2], "seed": 5, "out": ")"
            << path("from_config.jsonl") << "\"}";
    }
    ASSERT_EQ(run({"gen", "--config", path("cfg.json")}), 0) << err_;
    std::ifstream a(path("from_config.jsonl"));
    const auto ds = corpus::read_manifest(a);
    EXPECT_EQ(ds.seed, 5u);
    EXPECT_EQ(ds.records.size(), 160u);

    ASSERT_EQ(run({"gen", "--config", path("cfg.json"), "--seed", "6", "--out", path("flag.jsonl")}), 0) << err_;
    std::ifstream b(path("flag.jsonl"));
    EXPECT_EQ(corpus::read_manifest(b).seed, 6u);

    std::ofstream(path("bad.json")) << R"({"sead": 5})";
    EXPECT_EQ(run({"gen", "--config", path("bad.json"), "--out", path("x")}), cli::kExitUsage);
    EXPECT_NE(err_.find("sead"), std::string::npos);
}

TEST_F(CliTest, SubcommandFromConfig) {
    std::ofstream(path("cfg.json")) << R"({"subcommand": "gen", "domains": ["history"], "types": [], "out": ")"
                                    << path("h.jsonl") << "\"}";
    ASSERT_EQ(run({"--config", path("cfg.json")}), 0) << err_;
    EXPECT_EQ(count_lines(slurp(path("h.jsonl"))), 70u);
}

TEST_F(CliTest, CorruptTraceIsDataError) {
    ASSERT_EQ(run({"gen", "--domains", "counting", "--types", "confidence", "--levels", "1", "--out", path("d.jsonl")}), 0);
    ASSERT_EQ(run({"mock-extract", "--manifest", path("d.jsonl"), "--traces", path("tr"), "--layers", "2"}), 0) << err_;
    const auto entries = trace::read_trace_manifest(path("tr"));
    {
        std::fstream f(dir_ / "tr" / entries[3].layer_files[1], std::ios::in | std::ios::out | std::ios::binary);
        f.write("XXXX", 4);
    }
    EXPECT_EQ(run({"stats", "--traces", path("tr"), "--out", path("s.csv")}), cli::kExitData);
    EXPECT_NE(err_.find("magic"), std::string::npos) << err_;
    EXPECT_NE(err_.find(entries[3].record_id), std::string::npos) << err_;
}

TEST_F(CliTest, DegenerateVarianceIsNumericalError) {
    // Siblings with identical statistics and a base that differs from them.
    trace::TraceManifestEntry base;
    base.record_id = "math-0-baseline-0";
    base.labels.record_id = base.record_id;
    std::vector<trace::TraceManifestEntry> entries{base};
    for (int off : {-1, 1}) {
        auto e = base;
        e.record_id = base.record_id + "-p" + std::to_string(off);
        e.labels.record_id = e.record_id;
        e.labels.perturbation_offset = off;
        e.labels.parent_id = base.record_id;
        entries.push_back(e);
    }
    fs::create_directories(path("tr"));
    {
        std::ofstream m(dir_ / "tr" / trace::kManifestName);
        for (const auto& e : entries) m << trace::entry_to_json_line(e) << '\n';
        std::ofstream s(path("s.csv"));
        s << "record_id,statistic,layer,value,flags\n"
          << base.record_id << ",HS,0,2.5,\n"
          << entries[1].record_id << ",HS,0,1.0,\n"
          << entries[2].record_id << ",HS,0,1.0,\n";
    }
    EXPECT_EQ(run({"normalize", "--traces", path("tr"), "--stats", path("s.csv"), "--out", path("n.csv")}),
              cli::kExitNumerical);
    EXPECT_NE(err_.find(base.record_id), std::string::npos) << err_;
}

TEST_F(CliTest, PipelineFindsInjectedLayer) {
    small_pipeline("");
    const auto report = evalkit::report_from_json(slurp(path("eval/report.json")));
    const auto* hs = report.find("HS", corpus::Domain::math, corpus::HallType::incorrectness, 3);
    ASSERT_NE(hs, nullptr);
    ASSERT_TRUE(hs->best_layer.has_value());
    EXPECT_EQ(*hs->best_layer, 5);
    EXPECT_GE(hs->best_auroc, 0.95);
    EXPECT_TRUE(fs::exists(path("eval/report.txt")));
    EXPECT_EQ(slurp(path("eval/distribution.csv")).rfind("group,layer,mean,std\n", 0), 0u);

    const auto norm = evalkit::report_from_json(slurp(path("evaln/report.json")));
    EXPECT_TRUE(norm.normalized);
    ASSERT_NE(norm.find("HS-Norm", corpus::Domain::math, corpus::HallType::incorrectness, 3), nullptr);

    for (const char* fmt : {"text", "json", "csv"}) {
        const auto out = path(std::string("r.") + fmt);
        ASSERT_EQ(run({"report", "--in", path("eval/report.json"), "--format", fmt, "--out", out}), 0) << err_;
        EXPECT_FALSE(slurp(out).empty());
    }
    EXPECT_EQ(slurp(path("r.json")), slurp(path("eval/report.json")));
    EXPECT_EQ(slurp(path("r.text")), slurp(path("eval/report.txt")));
    EXPECT_EQ(run({"report", "--in", path("eval/report.json"), "--format", "yaml", "--out", path("r.y")}),
              cli::kExitUsage);
}

TEST_F(CliTest, OutputsIndependentOfWorkerCount) {
    setenv("GEOHALL_THREADS", "1", 1);
    small_pipeline("a_");
    setenv("GEOHALL_THREADS", "3", 1);
    small_pipeline("b_");
    unsetenv("GEOHALL_THREADS");
    EXPECT_EQ(slurp(path("a_tr/traces.jsonl")), slurp(path("b_tr/traces.jsonl")));
    EXPECT_EQ(slurp(path("a_stats.csv")), slurp(path("b_stats.csv")));
    EXPECT_EQ(slurp(path("a_norm.csv")), slurp(path("b_norm.csv")));
    EXPECT_EQ(slurp(path("a_eval/report.json")), slurp(path("b_eval/report.json")));
    EXPECT_EQ(slurp(path("a_evaln/report.json")), slurp(path("b_evaln/report.json")));
}

TEST_F(CliTest, AnswerSpanStatsAndGramPayload) {
    ASSERT_EQ(run({"gen", "--domains", "history", "--types", "incompleteness", "--levels", "3", "--out", path("d.jsonl")}), 0);
    ASSERT_EQ(run({"mock-extract", "--manifest", path("d.jsonl"), "--traces", path("tr"), "--payload", "gram", "--layers",
                   "3"}),
              0)
        << err_;
    ASSERT_EQ(run({"stats", "--traces", path("tr"), "--statistics", "HS,ME", "--span", "answer", "--out", path("s.csv")}), 0)
        << err_;
    const auto rows = count_lines(slurp(path("s.csv"))) - 1;
    EXPECT_EQ(rows % 6, 0u);
    EXPECT_LT(rows, 140u * 6u);
    EXPECT_NE(err_.find("skipped"), std::string::npos) << err_;
}
