#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>
#include <fstream>

#include "mtrl/checkpoint.hpp"
#include "mtrl/config.hpp"
#include "mtrl/metrics.hpp"
#include "mtrl/plotting.hpp"

using namespace mtrl;
namespace fs = std::filesystem;

namespace {
std::string tmp_path(const std::string& name) {
    return (fs::temp_directory_path() / name).string();
}
}  // namespace

TEST_CASE("checkpoint: tensors and text blocks round-trip bit for bit") {
    std::string path = tmp_path("mtrl_ckpt_test.mtrl");
    nn::Mat m(3, 4);
    for (int i = 0; i < 12; ++i) m.data()[i] = float(i) * 0.125f - 0.7f;
    CheckpointWriter w;
    w.add_tensor("params/net.w", m);
    w.add_text("meta", "{\"version\":1}");
    w.write(path);

    CheckpointReader r(path);
    CHECK(r.has("params/net.w"));
    CHECK(r.has("meta"));
    CHECK_FALSE(r.has("missing"));
    CHECK(r.tensor("params/net.w") == m);
    CHECK(r.text("meta") == "{\"version\":1}");
    CHECK_THROWS_AS((void)r.tensor("missing"), Error);
    CHECK_THROWS_AS((void)r.text("params/net.w"), Error);  // wrong type
    fs::remove(path);
}

TEST_CASE("checkpoint: corruption is caught and names the block") {
    std::string path = tmp_path("mtrl_ckpt_corrupt.mtrl");
    CheckpointWriter w;
    nn::Mat m = nn::Mat::Ones(2, 2);
    w.add_tensor("params/target.w", m);
    w.write(path);
    // flip one payload byte
    std::fstream f(path, std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(-10, std::ios::end);
    char c;
    f.read(&c, 1);
    f.seekp(-10, std::ios::end);
    c = char(c ^ 0x40);
    f.write(&c, 1);
    f.close();
    try {
        CheckpointReader r(path);
        FAIL("expected corruption to be detected");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("params/target.w") != std::string::npos);
    }
    fs::remove(path);
}

TEST_CASE("checkpoint: a non-checkpoint file is rejected") {
    std::string path = tmp_path("mtrl_ckpt_garbage.mtrl");
    {
        std::ofstream f(path);
        f << "not a checkpoint at all";
    }
    CHECK_THROWS_AS(CheckpointReader{path}, Error);
    fs::remove(path);
}

TEST_CASE("config: defaults validate and json round-trips") {
    RunConfig c;
    c.validate();
    CHECK(c.gamma == 0.99f);
    CHECK(c.rl_batch == 256);
    CHECK(c.ssl_batch == 256);
    CHECK(c.replay_capacity == 1000000);
    CHECK(c.ssl_capacity == 100000);
    CHECK(c.lr == 1e-3f);
    CHECK(c.gwr_act.activity_threshold == 0.7f);
    CHECK(c.gwr_int.activity_threshold == 0.9f);
    CHECK(c.gwr_b.activity_threshold == 0.8f);
    CHECK(c.gwr_b.tau_bmu == doctest::Approx(3.3f));
    CHECK(c.task_rep_width() == c.demo_hidden + c.state_feat);

    c.seed = 77;
    c.setting = Setting::Continual;
    c.ablation = Ablation::NoActInt;
    c.episodes = 123;
    c.milestones = {10, 20, 30};
    c.update_every = 4;
    RunConfig back = RunConfig::from_json(c.to_json());
    CHECK(back.to_json() == c.to_json());
    CHECK(back.seed == 77);
    CHECK(back.setting == Setting::Continual);
    CHECK(back.ablation == Ablation::NoActInt);
    CHECK(back.task_rep_width() == c.demo_hidden);
}

TEST_CASE("config: invalid settings are rejected before any compute") {
    RunConfig c;
    c.setting = Setting::Continual;
    c.milestones = {5, 3, 9};  // not increasing
    CHECK_THROWS_AS(c.validate(), Error);
    RunConfig c2;
    c2.episodes = 0;
    CHECK_THROWS_AS(c2.validate(), Error);
    CHECK_THROWS_AS((void)setting_from_string("sometimes"), Error);
    CHECK_THROWS_AS((void)ablation_from_string("everything"), Error);
    CHECK_THROWS_AS((void)RunConfig::from_json("{nope"), Error);
}

TEST_CASE("config: continual schedule widens the active task set at milestones") {
    RunConfig c;
    c.setting = Setting::Continual;
    c.tasks = {1, 2, 3, 4};
    c.milestones = {100, 200, 300};
    CHECK(c.active_tasks(0) == std::vector<int>{1});
    CHECK(c.active_tasks(99) == std::vector<int>{1});
    CHECK(c.active_tasks(100) == std::vector<int>{1, 2});
    CHECK(c.active_tasks(250) == std::vector<int>{1, 2, 3});
    CHECK(c.active_tasks(300) == std::vector<int>{1, 2, 3, 4});
    c.setting = Setting::Fixed;
    CHECK(c.active_tasks(0) == c.tasks);
}

TEST_CASE("metrics: writer emits the declared columns, loader reads them back") {
    std::string path = tmp_path("mtrl_metrics_test.csv");
    {
        MetricsWriter w(path, {"episode", "test_reward", "critic_loss"});
        w.append({{"episode", "0"}, {"test_reward", "1"}, {"critic_loss", "0.5"}});
        w.append({{"episode", "1"}, {"test_reward", "0"}});
        w.flush();
        CHECK(w.rows_written() == 2);
    }
    MetricsTable t = load_metrics(path);
    CHECK(t.columns == std::vector<std::string>{"episode", "test_reward", "critic_loss"});
    REQUIRE(t.rows.size() == 2);
    CHECK(t.rows[1][2] == "");
    auto rewards = t.numeric_column("test_reward");
    CHECK(rewards[0] == 1.0);
    CHECK(rewards[1] == 0.0);
    CHECK_THROWS_AS((void)t.column_index("nope"), Error);
    fs::remove(path);
}

TEST_CASE("smoothing: window one reproduces the input") {
    std::vector<double> v = {1, 0, 1, 1, 0, 0.5};
    CHECK(smooth(v, 1) == v);
    auto s = smooth(v, 3);
    CHECK(s[0] == doctest::Approx(1.0));
    CHECK(s[1] == doctest::Approx(0.5));
    CHECK(s[2] == doctest::Approx(2.0 / 3));
    CHECK(s[5] == doctest::Approx(0.5));
}

TEST_CASE("aggregation: multiple seeds produce a band, one seed does not") {
    std::string a = tmp_path("mtrl_seed_a.csv"), b = tmp_path("mtrl_seed_b.csv");
    for (auto& [path, bias] : std::vector<std::pair<std::string, double>>{
             {a, 0.0}, {b, 0.4}}) {
        MetricsWriter w(path, {"episode", "test_reward"});
        for (int e = 0; e < 20; ++e)
            w.append({{"episode", std::to_string(e)},
                      {"test_reward", MetricsWriter::fmt(bias + (e % 2))}});
    }
    AggregatedCurve solo = aggregate_metrics({a}, "test_reward", 1);
    CHECK(solo.seeds == 1);
    for (double s : solo.stddev) CHECK(s == 0.0);
    AggregatedCurve both = aggregate_metrics({a, b}, "test_reward", 1);
    CHECK(both.seeds == 2);
    CHECK(both.mean[0] == doctest::Approx(0.2));
    CHECK(both.stddev[0] == doctest::Approx(0.2));

    std::string svg = tmp_path("mtrl_curve.svg");
    write_curve_svg(both, "demo", svg);
    std::ifstream f(svg);
    std::string content((std::istreambuf_iterator<char>(f)),
                        std::istreambuf_iterator<char>());
    CHECK(content.find("<svg") != std::string::npos);
    CHECK(content.find("<polygon") != std::string::npos);  // the band
    std::string svg_solo = tmp_path("mtrl_curve_solo.svg");
    write_curve_svg(solo, "demo", svg_solo);
    std::ifstream f2(svg_solo);
    std::string content2((std::istreambuf_iterator<char>(f2)),
                         std::istreambuf_iterator<char>());
    CHECK(content2.find("<polygon") == std::string::npos);
    fs::remove(a);
    fs::remove(b);
    fs::remove(svg);
    fs::remove(svg_solo);
}

TEST_CASE("aggregation: mismatched columns across files is an error") {
    std::string a = tmp_path("mtrl_mm_a.csv"), b = tmp_path("mtrl_mm_b.csv");
    {
        MetricsWriter wa(a, {"episode", "test_reward"});
        wa.append({{"episode", "0"}, {"test_reward", "1"}});
        MetricsWriter wb(b, {"episode", "test_reward", "loss_bm"});
        wb.append({{"episode", "0"}, {"test_reward", "1"}, {"loss_bm", "2"}});
    }
    CHECK_THROWS_AS((void)aggregate_metrics({a, b}, "test_reward", 1), Error);
    fs::remove(a);
    fs::remove(b);
}
