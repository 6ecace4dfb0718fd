#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "bursty/bessel_fpt.hpp"
#include "bursty/cli_io.hpp"
#include "bursty/errors.hpp"

using namespace bursty;
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class CliIo : public ::testing::Test {
protected:
    void SetUp() override {
        const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
        root_ = fs::temp_directory_path() / (std::string("bursty_test_") + info->name());
        fs::remove_all(root_);
        fs::create_directories(root_);
    }
    void TearDown() override { fs::remove_all(root_); }

    fs::path root_;
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json read_json(const fs::path& p) { return json::parse(slurp(p)); }

// Data rows of a CSV written by write_csv, keyed by header name.
std::map<std::string, std::vector<double>> read_table(const fs::path& p) {
    std::ifstream in(p);
    std::string line;
    std::vector<std::string> names;
    std::map<std::string, std::vector<double>> out;
    while (std::getline(in, line)) {
        if (line.empty() || line[0] == '#') continue;
        std::stringstream ss(line);
        std::string cell;
        if (names.empty()) {
            while (std::getline(ss, cell, ',')) names.push_back(cell);
            continue;
        }
        for (std::size_t i = 0; std::getline(ss, cell, ','); ++i) out[names[i]].push_back(std::stod(cell));
    }
    return out;
}

RunConfig small_simulation(const fs::path& out) {
    RunConfig c;
    c.subcommand = "simulate";
    c.sim.seed = 3;
    c.sim.burn_in = 10;
    c.sim.stop = StopRule::after_bursts(100, 2.0);
    c.output = out.string();
    return c;
}

void write_triangles(const fs::path& file, const std::string& header, double time_scale, int count) {
    // period 4: 0, 1, 3, 1, 0, ... above h=2 between the 1 -> 3 -> 1 ramps
    std::ofstream out(file);
    out << "# synthetic\n" << header << ",x\n";
    const double pattern[4] = {0.0, 1.0, 3.0, 1.0};
    for (int i = 0; i <= 4 * count; ++i) out << i * time_scale << ',' << pattern[i % 4] << '\n';
}

}  // namespace

TEST_F(CliIo, ConfigRoundTrip) {
    RunConfig c = small_simulation(root_ / "x");
    c.model = Model::Complex;
    c.analysis.eta = 2.0;
    c.fpt.h_y = 0.3;
    c.sim.stop = StopRule::after_steps(1000);
    save_config(c, root_ / "c.json");
    const RunConfig d = load_config(root_ / "c.json");
    EXPECT_EQ(json(c), json(d));
    EXPECT_EQ(config_hash(c), config_hash(d));
    EXPECT_EQ(config_hash(c).size(), 16u);
}

TEST_F(CliIo, HashIgnoresOutputOnly) {
    RunConfig a = small_simulation(root_ / "a");
    RunConfig b = small_simulation(root_ / "b");
    EXPECT_EQ(config_hash(a), config_hash(b));
    b.sim.seed = 4;
    EXPECT_NE(config_hash(a), config_hash(b));
}

TEST_F(CliIo, RejectsUnknownKeysAndBadValues) {
    EXPECT_THROW(json::parse(R"({"simple":{"etta":2}})").get<RunConfig>(), ValidationError);
    EXPECT_THROW(json::parse(R"({"bogus":1})").get<RunConfig>(), ValidationError);
    EXPECT_THROW(json::parse(R"({"model":"other"})").get<RunConfig>(), ValidationError);
    EXPECT_THROW(json::parse(R"({"sim":{"stop":{"bursts":5,"steps":4}}})").get<RunConfig>(), ValidationError);
    EXPECT_THROW(json::parse(R"({"sim":{"kappa":"big"}})").get<RunConfig>(), ValidationError);
    const RunConfig c = json::parse(R"({"threshold":3,"sim":{"stop":{"bursts":7}}})").get<RunConfig>();
    EXPECT_EQ(c.sim.stop.bursts, 7u);
    EXPECT_EQ(c.sim.stop.threshold, 3.0);
}

TEST_F(CliIo, SimulateWritesEchoedMetadata) {
    const RunConfig c = small_simulation(root_ / "run");
    const RunResult r = execute(c);
    for (const char* f : {"path.csv", "path.csv.meta.json", "summary.json", "config.json", "manifest.json"}) {
        EXPECT_TRUE(fs::exists(root_ / "run" / f)) << f;
    }
    const json meta = read_json(root_ / "run" / "path.csv.meta.json");
    EXPECT_EQ(meta["seed"], 3);
    EXPECT_EQ(meta["generator"], kGeneratorName);
    EXPECT_EQ(meta["config"]["sim"]["burn_in"], 10.0);
    EXPECT_EQ(meta["config_hash"], config_hash(c));
    EXPECT_EQ(r.summary["bursts"], 100);
    const std::string csv = slurp(root_ / "run" / "path.csv");
    EXPECT_EQ(csv.rfind("# config_hash=" + config_hash(c), 0), 0u);
    EXPECT_NE(csv.find("\nt_s,x\n"), std::string::npos);
}

TEST_F(CliIo, SameConfigSameChecksums) {
    execute(small_simulation(root_ / "a"));
    execute(small_simulation(root_ / "b"));
    EXPECT_EQ(read_json(root_ / "a" / "manifest.json"), read_json(root_ / "b" / "manifest.json"));
    EXPECT_TRUE(verify_run(root_ / "a").identical);
}

TEST_F(CliIo, VerifyDetectsTampering) {
    execute(small_simulation(root_ / "a"));
    std::ofstream(root_ / "a" / "path.csv", std::ios::app) << "1e9,1\n";
    const VerifyReport r = verify_run(root_ / "a");
    EXPECT_FALSE(r.identical);
    ASSERT_EQ(r.mismatched.size(), 1u);
    EXPECT_EQ(r.mismatched[0], "path.csv");
}

TEST_F(CliIo, BurstStopRecount) {
    RunConfig c = small_simulation(root_ / "run");
    c.simple.eta = 2.5;
    c.sim.kappa = 0.1;
    c.sim.burn_in = 100;
    c.sim.stop = StopRule::after_bursts(10000, 2.0);
    const RunResult r = execute(c);
    EXPECT_EQ(r.summary["bursts"], 10000);
}

TEST_F(CliIo, RealizationsUseConsecutiveSeeds) {
    RunConfig c = small_simulation(root_ / "many");
    c.realizations = 3;
    execute(c);
    for (int i = 0; i < 3; ++i) {
        const json meta = read_json(root_ / "many" / ("path_" + std::to_string(i) + ".csv.meta.json"));
        EXPECT_EQ(meta["seed"], 3 + i);
    }
    RunConfig one = small_simulation(root_ / "one");
    one.sim.seed = 4;
    execute(one);
    EXPECT_EQ(slurp(root_ / "many" / "path_1.csv").substr(slurp(root_ / "many" / "path_1.csv").find("t_s,x")),
              slurp(root_ / "one" / "path.csv").substr(slurp(root_ / "one" / "path.csv").find("t_s,x")));
}

TEST_F(CliIo, AnalyzeTriangleWave) {
    write_triangles(root_ / "tri.csv", "t_s", 1.0, 150);
    RunConfig c;
    c.subcommand = "analyze";
    c.input = (root_ / "tri.csv").string();
    c.output = (root_ / "out").string();
    c.analysis.t_min = 0.5;
    c.analysis.psd_grid_points = 1 << 12;
    const RunResult r = execute(c);
    EXPECT_EQ(r.summary["bursts"], 150);
    const auto t = read_table(root_ / "out" / "bursts.csv");
    ASSERT_EQ(t.at("duration").size(), 150u);
    for (std::size_t i = 0; i < 150; ++i) {
        EXPECT_DOUBLE_EQ(t.at("t_start")[i], 4.0 * i + 1.5);
        EXPECT_DOUBLE_EQ(t.at("duration")[i], 1.0);
        EXPECT_DOUBLE_EQ(t.at("peak")[i], 3.0);
        EXPECT_DOUBLE_EQ(t.at("size")[i], 0.5);
    }
}

TEST_F(CliIo, SecondsInputIsScaled) {
    RunConfig c;
    c.subcommand = "analyze";
    const double sigma = c.simple.sigma_t_sq;
    write_triangles(root_ / "sec.csv", "t_seconds", 60.0, 120);
    c.input = (root_ / "sec.csv").string();
    c.output = (root_ / "out").string();
    c.analysis.t_min = 1e-6;
    c.analysis.psd_grid_points = 1 << 12;
    execute(c);
    const auto t = read_table(root_ / "out" / "bursts.csv");
    EXPECT_NEAR(t.at("duration")[0], 60.0 * sigma, 1e-18);
    EXPECT_NEAR(t.at("t_start")[0], 90.0 * sigma, 1e-18);
    const InputSeries s = read_series(root_ / "sec.csv", sigma);
    EXPECT_EQ(s.time_column, "t_seconds");
    EXPECT_DOUBLE_EQ(s.t_s[1], 60.0 * sigma);
}

TEST_F(CliIo, ParseErrorsNameTheLine) {
    std::ofstream(root_ / "bad.csv") << "# comment\nt_s,x\n0,1\n1,2\n2,oops\n";
    try {
        read_series(root_ / "bad.csv", 1.0);
        FAIL() << "expected IoError";
    } catch (const IoError& e) {
        EXPECT_NE(std::string(e.what()).find("bad.csv:5"), std::string::npos) << e.what();
    }
    std::ofstream(root_ / "hdr.csv") << "time,x\n0,1\n";
    EXPECT_THROW(read_series(root_ / "hdr.csv", 1.0), IoError);
    std::ofstream(root_ / "order.csv") << "t_s,x\n0,1\n0,2\n";
    EXPECT_THROW(read_series(root_ / "order.csv", 1.0), IoError);
    std::ofstream(root_ / "cols.csv") << "t_s,x\n0,1,2\n";
    EXPECT_THROW(read_series(root_ / "cols.csv", 1.0), IoError);
}

TEST_F(CliIo, AnalyzeOverlayColumns) {
    RunConfig sim = small_simulation(root_ / "sim");
    sim.simple.eta = 2.0;
    sim.sim.stop = StopRule::after_bursts(2000, 2.0);
    execute(sim);

    RunConfig c;
    c.subcommand = "analyze";
    c.input = (root_ / "sim" / "path.csv").string();
    c.output = (root_ / "plain").string();
    execute(c);
    EXPECT_EQ(read_table(root_ / "plain" / "duration_pdf.csv").count("series"), 0u);

    c.analysis.eta = 2.0;
    c.analysis.lambda = 4.0;
    c.output = (root_ / "overlay").string();
    const RunResult r = execute(c);
    const auto t = read_table(root_ / "overlay" / "duration_pdf.csv");
    ASSERT_EQ(t.count("series"), 1u);
    ASSERT_EQ(t.count("closed"), 1u);
    EXPECT_EQ(t.at("series").size(), t.at("density").size());
    EXPECT_NEAR(r.summary["durations"]["nu"].get<double>(), 0.5, 1e-15);
    double mass = 0;
    for (std::size_t i = 0; i < t.at("density").size(); ++i) mass += t.at("density")[i] * (t.at("t_hi")[i] - t.at("t_lo")[i]);
    EXPECT_NEAR(mass, 1.0, 1e-9);
    for (const char* f : {"peak_vs_duration.csv", "size_vs_duration.csv", "size_vs_peak.csv", "psd.csv"}) {
        EXPECT_TRUE(fs::exists(root_ / "overlay" / f)) << f;
    }
}

TEST_F(CliIo, FptTables) {
    RunConfig c;
    c.subcommand = "fpt";
    c.simple.eta = 2.5;
    c.simple.lambda = 4.0;
    c.sim.kappa = 0.02;
    c.fpt.t_hi = 0.0;
    c.output = (root_ / "fpt").string();
    // four decades starting at t_min
    c.fpt.t_lo = 4e-4;
    c.fpt.t_hi = 4.0;
    const RunResult r = execute(c);
    EXPECT_NEAR(r.summary["h_y"].get<double>(), lamperti(2.0, 2.5), 1e-15);
    for (const char* f : {"fpt_series.csv", "fpt_closed.csv"}) {
        const auto t = read_table(root_ / "fpt" / f);
        ASSERT_EQ(t.at("p").size(), c.fpt.points);
        for (std::size_t i = 1; i < t.at("p").size(); ++i) EXPECT_LT(t.at("p")[i], t.at("p")[i - 1]) << f;
        const std::string text = slurp(root_ / "fpt" / f);
        for (const char* key : {"# nu=", "# h_y=", "# t_min=", "# k_terms=", "# C="}) {
            EXPECT_NE(text.find(key), std::string::npos) << key;
        }
    }
    c.fpt.t_lo = 1e-4;
    try {
        run_fpt(c);
        FAIL() << "expected rejection below t_min";
    } catch (const ValidationError& e) {
        EXPECT_NE(std::string(e.what()).find("below t_min"), std::string::npos);
    }
}

TEST_F(CliIo, ReturnsFiles) {
    RunConfig c;
    c.subcommand = "returns";
    c.sim.x0 = 0.0;
    c.sim.burn_in = 1.0;
    c.sim.stop = StopRule::at_time(3.0);
    c.noise_seed = 9;
    c.output = (root_ / "ret").string();
    execute(c);
    const auto r = read_table(root_ / "ret" / "returns.csv");
    const auto f = read_table(root_ / "ret" / "filtered.csv");
    ASSERT_GT(r.at("r").size(), 1000u);
    EXPECT_EQ(f.at("abs_r_smoothed").size(), r.at("r").size() - 59);
    EXPECT_DOUBLE_EQ(r.at("t_seconds")[1] - r.at("t_seconds")[0], 60.0);
    const json meta = read_json(root_ / "ret" / "returns.csv.meta.json");
    EXPECT_EQ(meta["noise_seed"], 9);
    EXPECT_EQ(meta["sde_seed"], 0);
    EXPECT_TRUE(verify_run(root_ / "ret").identical);
}

TEST_F(CliIo, CsvUsesRoundTripNumbers) {
    const double v = 0.1 + 0.2;
    write_csv(root_ / "n.csv", {{"config_hash", "x"}, {"time_unit", "t_s"}}, {{"a", {v}}, {"b", {1e-300}}});
    const auto t = read_table(root_ / "n.csv");
    EXPECT_EQ(t.at("a")[0], v);
    EXPECT_THROW(write_csv(root_ / "m.csv", {}, {{"a", {1.0}}, {"b", {}}}), ValidationError);
}

TEST(ExitCodes, Mapping) {
    EXPECT_EQ(exit_code_for(ValidationError("v")), 2);
    EXPECT_EQ(exit_code_for(DomainError("d")), 2);
    EXPECT_EQ(exit_code_for(IoError("i")), 3);
    EXPECT_EQ(exit_code_for(NumericalError("n")), 4);
    EXPECT_EQ(exit_code_for(TruncationError("t")), 4);
}

TEST(Help, DocumentsEveryColumn) {
    const std::string help = csv_formats_help();
    for (const char* col : {"t_s,x", "t_start,t_end,duration,peak,size", "t_lo,t_hi,t,density,count",
                            "x_lo,x_hi,x,y_mean,y_std,count", "f,S", "t,p", "t_seconds,r",
                            "t_seconds,abs_r_smoothed"}) {
        EXPECT_NE(help.find(col), std::string::npos) << col;
    }
}
