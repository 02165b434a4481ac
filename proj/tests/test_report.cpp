#include <catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "heatlab/heatlab.hpp"
#include "heatlab/report.hpp"

using namespace heatlab;
namespace fs = std::filesystem;

namespace {

std::string slurp(fs::path const& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

fs::path scratch(std::string const& name) {
    auto dir = fs::temp_directory_path() / "heatlab_test_report";
    fs::create_directories(dir);
    auto p = dir / name;
    fs::remove(p);
    return p;
}

} // namespace

TEST_CASE("non-finite numbers are encoded as strings") {
    double inf = std::numeric_limits<double>::infinity();
    CHECK(num(inf) == "inf");
    CHECK(num(-inf) == "-inf");
    CHECK(num(std::nan("")) == "nan");
    CHECK(num(1.5) == 1.5);
    CHECK(num_from(num(inf)) == inf);
    CHECK(num_from(num(-inf)) == -inf);
    CHECK(std::isnan(num_from(num(std::nan("")))));
    CHECK_THROWS_AS(num_from(json("oops")), std::invalid_argument);
    auto a = num_array({0.0, inf});
    CHECK(a.dump() == "[0.0,\"inf\"]");
}

TEST_CASE("doubles round-trip through the JSON text") {
    auto K = kernel_constants(2, KernelVariant::WholeSpace);
    json j = json::parse(to_json(K).dump());
    CHECK(num_from(j["c_d"]) == K.c_d);
    CHECK(num_from(j["alpha_d"]) == K.alpha_d);
    CHECK(num_from(j["beta_d"]) == K.beta_d);
    CHECK(j["variant"] == to_string(KernelVariant::WholeSpace));
}

TEST_CASE("verdict JSON carries outcome and evidence") {
    auto v = classify_lq(Expression::parse("s^2"), 2.0, 2);
    json j = json::parse(to_json(v).dump());
    CHECK(j["outcome"] == to_string(v.outcome));
    CHECK(j["criterion"] == to_string(v.criterion));
    CHECK(j.contains("evidence"));
}

TEST_CASE("atomic write leaves no temporary behind") {
    auto p = scratch("atomic.txt");
    write_atomic(p, "first\n");
    write_atomic(p, "second\n");
    CHECK(slurp(p) == "second\n");
    auto tmp = p;
    tmp += ".tmp";
    CHECK_FALSE(fs::exists(tmp));
}

TEST_CASE("reports are deterministic and the timestamp lives in the sidecar") {
    auto p1 = scratch("r1.json"), p2 = scratch("r2.json");
    json body{{"value", num(0.1)}, {"list", num_array({1.0, 2.0})}};
    write_report(p1, body, "heatlab test");
    write_report(p2, body, "heatlab test");
    CHECK(slurp(p1) == slurp(p2));
    auto j = json::parse(slurp(p1));
    CHECK(j["schema"] == report_schema_version);
    CHECK_FALSE(j.contains("generated_at"));
    auto meta = p1;
    meta += ".meta.json";
    auto m = json::parse(slurp(meta));
    CHECK(m["command"] == "heatlab test");
    CHECK(m["generated_at"].get<std::string>().size() == 20);
}

TEST_CASE("CSV output") {
    CHECK(csv_number(0.1) == "0.10000000000000001");
    CHECK(csv_number(std::numeric_limits<double>::infinity()) == "inf");
    CHECK(series_csv("x", "y", {1.0, 2.0}, {3.0, 4.0}) == "x,y\n1,3\n2,4\n");
    CHECK_THROWS_AS(series_csv("x", "y", {1.0}, {}), std::invalid_argument);

    Trajectory tr;
    tr.samples.push_back({0.0, 1.0, 1.0, 1.0, 1e-4, 0});
    CHECK(trajectory_csv(tr) == "t,l1,lq,linf,dt,clamp_count\n0,1,1,1,0.0001,0\n");
}
