#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "json.hpp"

#include "cxr/config.hpp"
#include "cxr/digest.hpp"
#include "cxr/errors.hpp"
#include "cxr/features.hpp"
#include "cxr/image_io.hpp"
#include "cxr/model_io.hpp"
#include "cxr/pipeline.hpp"
#include "cxr/synthetic.hpp"
#include "support.hpp"

using namespace cxr;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p);
    out << text;
}

std::string small_config(const fs::path& root, const fs::path& out, const std::string& extra = "") {
    return "[run]\nseed = 3\noutput_dir = " + out.string() + "\n[dataset]\nroot = " + root.string() +
           "\n[preprocess]\nimage_side = 32\n[features]\nhog_side = 32\ncnn_side = 32\n"
           "[explain]\ncount = 1\ngrid = 4\nsamples = 60\ntop_k = 3\n" +
           extra;
}

std::string cli(const std::string& args) { return cxr::testing::cli_path().string() + " " + args; }

std::map<std::string, bool> cached_by_stage(const pipeline::PipelineResult& r) {
    std::map<std::string, bool> m;
    for (const auto& s : r.stages) m[s.name] = s.cached;
    return m;
}

}  // namespace

TEST(Synthetic, StripeImagesAreDeterministicAndInRange) {
    Rng a(5), b(5);
    const GrayImage x = synthetic::stripe_image(ClassLabel::Covid19, 32, a);
    const GrayImage y = synthetic::stripe_image(ClassLabel::Covid19, 32, b);
    EXPECT_TRUE(std::equal(x.pixels().begin(), x.pixels().end(), y.pixels().begin()));
    for (double v : x.pixels()) {
        EXPECT_GE(v, 0.0);
        EXPECT_LE(v, 255.0);
        EXPECT_EQ(v, std::round(v));
    }
}

TEST(Synthetic, CorpusLayoutIngests) {
    cxr::testing::TempDir dir;
    synthetic::write_corpus(dir / "corpus", {3, 2, 2, 1}, 16, 7);
    const Manifest m = ingest(dir / "corpus");
    EXPECT_EQ(m.size(), 8u);
    EXPECT_EQ(m.class_counts().at(ClassLabel::ViralPneumonia), 1u);
    EXPECT_TRUE(fs::exists(dir / "corpus" / "COVID" / "img_00000.png"));
    EXPECT_THROW(synthetic::write_corpus(dir / "tiny", {1, 1, 1, 1}, 4, 0), ArgumentError);
}

TEST(Pipeline, PreprocessWritesEnhancedImagesAndTrace) {
    cxr::testing::TempDir dir;
    synthetic::write_corpus(dir / "corpus", {10, 10, 10, 10}, 24, 1);
    const Manifest m = split(ingest(dir / "corpus"), {}, 1);
    pipeline::PreprocessParams p;
    p.side = 16;
    p.debug_trace = true;
    const Manifest out = pipeline::preprocess(m, dir / "run", p);
    ASSERT_EQ(out.size(), m.size());
    for (const auto& r : out.records()) {
        EXPECT_TRUE(r.path.is_relative());
        const GrayImage img = io::read_gray(dir / "run" / r.path);
        EXPECT_EQ(img.width(), 16u);
        EXPECT_EQ(r.sha256, sha256_file(dir / "run" / r.path));
        auto trace = dir / "run" / r.path;
        trace.replace_extension(".S.png");
        EXPECT_TRUE(fs::exists(trace)) << trace;
    }
    // a tampered source is refused
    write_text(m.records().front().path, "not a png");
    EXPECT_THROW(pipeline::preprocess(m, dir / "run2", p), DataError);
}

TEST(Pipeline, EndToEndCachingAndArtifacts) {
    cxr::testing::TempDir dir;
    synthetic::write_corpus(dir / "corpus", {20, 20, 20, 20}, 32, 11);
    write_text(dir / "run.cfg", small_config(dir / "corpus", dir / "run"));
    auto config = RunConfig::load(dir / "run.cfg");

    const auto first = pipeline::run_pipeline(config);
    for (const auto& [name, cached] : cached_by_stage(first)) EXPECT_FALSE(cached) << name;
    ASSERT_TRUE(first.test.has_value());
    EXPECT_GE(first.test->accuracy, 0.75);

    for (const char* f : {"config.ini", "manifest.csv", "split.csv", "preprocessed.csv", "features/train.feat",
                          "features/train.feat.labels.csv", "features/val.feat", "features/test.feat", "model.modl",
                          "metrics.json", "metrics.txt", "run.json"})
        EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;

    const json run = json::parse(slurp(dir / "run" / "run.json"));
    EXPECT_EQ(run["schema"], pipeline::kRunSchema);
    EXPECT_EQ(run["model"], "svm");
    EXPECT_EQ(run["condition"], "off");
    EXPECT_EQ(run["config_digest"], config.digest());
    EXPECT_FALSE(run["stages"].contains("resample"));
    for (const auto& [stage, info] : run["stages"].items())
        for (const auto& a : info["artifacts"])
            EXPECT_EQ(a["sha256"], sha256_file(dir / "run" / a["path"].get<std::string>())) << stage;

    const json metrics = json::parse(slurp(dir / "run" / "metrics.json"));
    EXPECT_EQ(metrics["model"], "svm");
    EXPECT_EQ(metrics["test"]["per_class"].size(), 4u);
    EXPECT_DOUBLE_EQ(metrics["test"]["accuracy"].get<double>(), first.test->accuracy);

    // one overlay per class plus a JSON record for the explained image
    std::size_t overlays = 0, records = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "run" / "explain")) {
        const auto name = e.path().filename().string();
        overlays += name.find(".explain.") != std::string::npos && e.path().extension() == ".png";
        records += name.ends_with(".explain.json");
    }
    EXPECT_EQ(overlays, 4u);
    EXPECT_EQ(records, 1u);

    // an identical rerun is a no-op
    const auto second = pipeline::run_pipeline(config);
    for (const auto& [name, cached] : cached_by_stage(second)) EXPECT_TRUE(cached) << name;
    EXPECT_EQ(sha256_file(dir / "run" / "model.modl"), run["stages"]["train"]["artifacts"][0]["sha256"]);

    // a preprocessing change invalidates preprocess and everything downstream only
    config.gamma = 1.0;
    const auto third = pipeline::run_pipeline(config);
    auto c3 = cached_by_stage(third);
    EXPECT_TRUE(c3["ingest"]);
    EXPECT_TRUE(c3["split"]);
    EXPECT_FALSE(c3["preprocess"]);
    EXPECT_FALSE(c3["train"]);

    // a damaged artifact is rebuilt even though the inputs match
    write_text(dir / "run" / "model.modl", "garbage");
    const auto fourth = pipeline::run_pipeline(config);
    auto c4 = cached_by_stage(fourth);
    EXPECT_TRUE(c4["features"]);
    EXPECT_FALSE(c4["train"]);
    EXPECT_NO_THROW(load_model(dir / "run" / "model.modl"));

    const auto forced = pipeline::run_pipeline(config, true);
    for (const auto& [name, cached] : cached_by_stage(forced)) EXPECT_FALSE(cached) << name;
}

TEST(Pipeline, ResampleStageBalancesTrainingFeatures) {
    cxr::testing::TempDir dir;
    synthetic::write_corpus(dir / "corpus", {20, 15, 10, 10}, 32, 12);
    write_text(dir / "run.cfg", "[run]\noutput_dir = run\n[dataset]\nroot = corpus\n[preprocess]\nimage_side = 32\n"
                                "[features]\nhog_side = 32\n[resample]\nstrategy = smote1\n[explain]\nenabled = false\n");
    const auto config = RunConfig::load(dir / "run.cfg");
    const auto result = pipeline::run_pipeline(config);
    const auto names = cached_by_stage(result);
    EXPECT_TRUE(names.contains("resample"));
    EXPECT_FALSE(names.contains("explain"));
    const auto y = features::read_labels(features::labels_path(dir / "run" / "features" / "train.resampled.feat"));
    std::map<int, std::size_t> h;
    for (int v : y) ++h[v];
    ASSERT_EQ(h.size(), 4u);
    for (const auto& [c, n] : h) EXPECT_EQ(n, h.at(0)) << c;
    const json run = json::parse(slurp(dir / "run" / "run.json"));
    EXPECT_EQ(run["condition"], "smote1");
}

TEST(Pipeline, LockedRunDirectoryIsRefused) {
    cxr::testing::TempDir dir;
    {
        pipeline::RunLock lock(dir.path());
        EXPECT_TRUE(fs::exists(dir / ".lock"));
        EXPECT_THROW(pipeline::RunLock second(dir.path()), DataError);
    }
    EXPECT_FALSE(fs::exists(dir / ".lock"));
}

TEST(Pipeline, CompareOrdersConditionsThenModels) {
    cxr::testing::TempDir dir;
    std::vector<fs::path> reports;
    const char* conditions[] = {"smote2", "off", "smote1"};
    const char* models[] = {"cnn", "svm", "forest"};
    int i = 0;
    for (const char* c : conditions)
        for (const char* m : models) {
            json j;
            j["schema"] = pipeline::kRunSchema;
            j["condition"] = c;
            j["model"] = m;
            j["metrics"]["test"] = {{"accuracy", 0.5 + 0.01 * i},
                                    {"macro_precision", 0.4},
                                    {"macro_recall", 0.3},
                                    {"macro_f1", 0.2}};
            const auto p = dir / ("r" + std::to_string(i++) + ".json");
            write_text(p, j.dump());
            reports.push_back(p);
        }
    const auto rows = pipeline::compare_runs(reports);
    ASSERT_EQ(rows.size(), 9u);
    EXPECT_EQ(rows[0].condition, "off");
    EXPECT_EQ(rows[0].model, "svm");
    EXPECT_EQ(rows[2].model, "cnn");
    EXPECT_EQ(rows[8].condition, "smote2");
    const auto table = pipeline::format_comparison(rows);
    EXPECT_NE(table.find("Accuracy"), std::string::npos);
    EXPECT_NE(table.find("0.20"), std::string::npos);

    EXPECT_THROW(pipeline::compare_runs({reports[0]}), UsageError);
    write_text(dir / "noval.json", R"({"schema": 1, "metrics": {"test": {"accuracy": 1}}})");
    EXPECT_THROW(pipeline::compare_runs({reports[0], dir / "noval.json"}, "val"), DataError);
    write_text(dir / "old.json", R"({"schema": 0})");
    EXPECT_THROW(pipeline::compare_runs({reports[0], dir / "old.json"}), FormatError);
}

TEST(Cli, PipelineRunsFromTheCommandLine) {
    cxr::testing::TempDir dir;
    std::string out;
    ASSERT_EQ(cxr::testing::run_command(cli("synth --out " + (dir / "corpus").string() + " --counts 12,12,12,12 --side 32"), &out), 0) << out;
    write_text(dir / "run.cfg", small_config(dir / "corpus", dir / "run"));
    ASSERT_EQ(cxr::testing::run_command(cli("pipeline --config " + (dir / "run.cfg").string()), &out), 0) << out;
    EXPECT_NE(out.find("Accuracy"), std::string::npos) << out;
    for (const char* f : {"manifest.csv", "features/train.feat", "model.modl", "metrics.json", "run.json"})
        EXPECT_TRUE(fs::exists(dir / "run" / f)) << f;

    // --seed re-derives the stage seeds into a different run directory
    ASSERT_EQ(cxr::testing::run_command(cli("pipeline --config " + (dir / "run.cfg").string() + " --seed 8 --output " +
                                            (dir / "run8").string()),
                                        &out),
              0)
        << out;
    const auto cfg8 = RunConfig::load(dir / "run8" / "config.ini");
    EXPECT_EQ(cfg8.seeds, StageSeeds::derive(8));

    ASSERT_EQ(cxr::testing::run_command(cli("compare " + (dir / "run" / "run.json").string() + " " +
                                            (dir / "run8" / "run.json").string()),
                                        &out),
              0)
        << out;
    EXPECT_NE(out.find("svm"), std::string::npos);
}

TEST(Cli, StageByStage) {
    cxr::testing::TempDir dir;
    const auto d = [&](const char* name) { return (dir / name).string(); };
    std::string out;
    auto ok = [&](const std::string& args) {
        const int rc = cxr::testing::run_command(cli(args), &out);
        EXPECT_EQ(rc, 0) << args << "\n" << out;
        return rc == 0;
    };
    ASSERT_TRUE(ok("synth --out " + d("corpus") + " --counts 14,12,10,10 --side 32 --seed 4"));
    ASSERT_TRUE(ok("ingest --root " + d("corpus") + " --out " + d("manifest.csv")));
    ASSERT_TRUE(ok("split --manifest " + d("manifest.csv") + " --out " + d("split.csv") + " --seed 2"));
    ASSERT_TRUE(ok("preprocess --manifest " + d("split.csv") + " --out-dir " + d("pre") + " --side 32"));
    const auto pre = (dir / "pre" / "preprocessed.csv").string();
    ASSERT_TRUE(fs::exists(pre)) << out;
    for (const char* s : {"train", "val", "test"})
        ASSERT_TRUE(ok("features --manifest " + pre + " --split " + s + " --side 32 --out " + d(s) + ".feat"));
    ASSERT_TRUE(ok("resample --features " + d("train") + ".feat --out " + d("bal") + ".feat --strategy all=15"));
    const auto y = features::read_labels(features::labels_path(dir / "bal.feat"));
    EXPECT_EQ(y.size(), 60u);
    ASSERT_TRUE(ok("train --features " + d("bal") + ".feat --model forest --trees 10 --out " + d("m.modl")));
    ASSERT_TRUE(ok("evaluate --model " + d("m.modl") + " --val " + d("val") + ".feat --test " + d("test") +
                   ".feat --out " + d("metrics.json")));
    const json m = json::parse(slurp(dir / "metrics.json"));
    EXPECT_EQ(m["model"], "forest");
    EXPECT_TRUE(m.contains("val"));
    ASSERT_TRUE(ok("explain --model " + d("m.modl") + " --manifest " + pre + " --out-dir " + d("exp") +
                   " --count 1 --grid 4 --samples 40"));
    std::size_t pngs = 0;
    for (const auto& e : fs::recursive_directory_iterator(dir / "exp")) pngs += e.path().extension() == ".png";
    EXPECT_EQ(pngs, 4u);
}

TEST(Cli, ExitCodes) {
    cxr::testing::TempDir dir;
    std::string out;
    EXPECT_EQ(cxr::testing::run_command(cli(""), &out), 1) << out;
    EXPECT_EQ(cxr::testing::run_command(cli("frobnicate"), &out), 1) << out;

    EXPECT_EQ(cxr::testing::run_command(cli("train --features x.feat --model vgg19 --out m.modl"), &out), 1);
    EXPECT_NE(out.find("unsupported model"), std::string::npos) << out;

    EXPECT_EQ(cxr::testing::run_command(cli("compare only_one.json"), &out), 1) << out;
    EXPECT_EQ(cxr::testing::run_command(cli("ingest --out m.csv"), &out), 1) << out;

    write_text(dir / "bad.cfg", "[dataset]\nroot = x\n[run]\nbogus = 1\n");
    EXPECT_EQ(cxr::testing::run_command(cli("pipeline --config " + (dir / "bad.cfg").string()), &out), 1);
    EXPECT_NE(out.find("bogus"), std::string::npos) << out;

    write_text(dir / "vgg.cfg", "[dataset]\nroot = x\n[model]\ntype = vgg16\n");
    EXPECT_EQ(cxr::testing::run_command(cli("pipeline --config " + (dir / "vgg.cfg").string()), &out), 1);

    write_text(dir / "missing.cfg", "[dataset]\nroot = does_not_exist\n[run]\noutput_dir = r\n");
    EXPECT_EQ(cxr::testing::run_command(cli("pipeline --config " + (dir / "missing.cfg").string()), &out), 2) << out;
    EXPECT_NE(out.find("cxrpipe: error:"), std::string::npos) << out;

    EXPECT_EQ(cxr::testing::run_command(cli("evaluate --model " + (dir / "none.modl").string() + " --test t.feat --out m.json"), &out), 2);

    EXPECT_EQ(cxr::testing::run_command(cli("--help"), &out), 0);
    EXPECT_NE(out.find("pipeline"), std::string::npos);
}
