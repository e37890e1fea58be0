#include <fracinv/io.hpp>

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace fracinv;
using nlohmann::json;

namespace
{
    std::string config_message(const json& raw)
    {
        try
        {
            parse_config(raw);
        }
        catch (const Error& e)
        {
            EXPECT_EQ(e.kind(), ErrorKind::config);
            return e.what();
        }
        ADD_FAILURE() << "expected a config error";
        return {};
    }

    std::string slurp(const std::string& path)
    {
        std::ifstream in(path, std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }
}

TEST(Config, FixtureDefaults)
{
    const ExperimentConfig cfg = parse_config({{"fixture", "two-term"}});
    EXPECT_EQ(cfg.problem.alpha, 1.4);
    EXPECT_EQ(cfg.problem.a, 0.7);
    ASSERT_EQ(cfg.problem.terms.size(), 2u);
    EXPECT_EQ(cfg.source.n, 2);
    EXPECT_EQ(cfg.K_max, 200u);
    EXPECT_EQ(cfg.dt, 1e-3);
}

TEST(Config, MergePatchOverridesFixture)
{
    const ExperimentConfig cfg = parse_config({{"fixture", "two-term"}, {"problem", {{"alpha", 1.6}}}});
    EXPECT_EQ(cfg.problem.alpha, 1.6);
    EXPECT_EQ(cfg.problem.a, 0.7);
}

TEST(Config, ErrorsNameThePath)
{
    EXPECT_NE(config_message({{"fixture", "two-term"}, {"problem", {{"alpha", 2.3}}}}).find("/problem/alpha"),
              std::string::npos);
    json missing = preset("two-term");
    missing["problem"].erase("a");
    EXPECT_NE(config_message(missing).find("/problem/a"), std::string::npos);
    EXPECT_NE(config_message({{"fixture", "nope"}}).find("unknown fixture"), std::string::npos);
    EXPECT_THROW(load_config("/nonexistent/file.json"), Error);
}

TEST(Config, LoadsFixtureByName)
{
    const ExperimentConfig cfg = load_config("gkits");
    EXPECT_EQ(cfg.source.n, 1);
    ASSERT_TRUE(cfg.bounds.has_value());
    EXPECT_EQ(cfg.bounds->alpha_high, 1.5);
}

TEST(TraceCsv, ByteIdenticalRoundTrip)
{
    TraceFile f;
    f.trace.dt = 1e-3;
    for (int i = 0; i < 50; ++i)
        f.trace.values.push_back(std::sin(0.1 * i) / 3.0);
    f.metadata = {{"dt_seconds", format_double(1e-3)}, {"alpha", "1.4"}};
    const std::string text = trace_csv(f);
    const std::string path = (std::filesystem::temp_directory_path() / "fracinv_test_trace.csv").string();
    write_text(path, text);
    const TraceFile back = read_trace_csv(path);
    EXPECT_EQ(back.trace.values, f.trace.values);
    EXPECT_EQ(back.trace.dt, 1e-3);
    EXPECT_EQ(back.metadata, f.metadata);
    EXPECT_EQ(trace_csv(back), slurp(path));
    std::filesystem::remove(path);
}

TEST(TraceCsv, RejectsNonUniformGrid)
{
    const std::string path = (std::filesystem::temp_directory_path() / "fracinv_test_bad.csv").string();
    write_text(path, "t,h\n0,1\n0.1,2\n0.3,3\n");
    try
    {
        read_trace_csv(path);
        FAIL() << "expected an io error";
    }
    catch (const Error& e)
    {
        EXPECT_EQ(e.kind(), ErrorKind::io);
    }
    std::filesystem::remove(path);
}

TEST(Experiment, GkitsGroups)
{
    const Experiment ex(load_config("gkits"));
    EXPECT_EQ(ex.gammas.size(), 20u);
    EXPECT_EQ(ex.rd.z_nondegenerate.size(), 8u);
    EXPECT_FALSE(static_cast<bool>(ex.G()));
    const std::vector<double> mu = ex.group_rates();
    for (std::size_t l = 1; l < mu.size(); ++l)
        EXPECT_GT(mu[l], mu[l - 1]);
}
