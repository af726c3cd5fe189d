#include <algorithm>
#include <cmath>
#include <filesystem>
#include <limits>
#include <sstream>
#include <unistd.h>

#include "doctest.h"
#include "scbl/cache.hpp"
#include "scbl/commands.hpp"
#include "scbl/config.hpp"
#include "scbl/io.hpp"

using namespace scbl;
namespace fs = std::filesystem;

namespace {

const std::string kBase = R"("geometry": {"d": 2, "lengths": [1, 1]}, "phi": {"family": "exponential", "rate": 1})";

std::string error_text(const std::string& text) {
    try {
        parse_config_text(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return {};
}

fs::path scratch(const std::string& tag) {
    const auto dir = fs::temp_directory_path() / ("scbl-test-" + tag + "-" + std::to_string(::getpid()));
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

}  // namespace

TEST_CASE("config defaults and validation") {
    const Config cfg = parse_config_text("{" + kBase + "}");
    CHECK(cfg.engine.kpm_order == 128);
    CHECK(cfg.engine.kpm_probes == 32);
    CHECK(cfg.hs_order == 4);
    CHECK(cfg.document["engine"]["kpm_order"] == 128);

    CHECK(error_text(R"({"geometry": {"d": 2, "lengths": [1, 1]}})").find("phi") != std::string::npos);
    CHECK(error_text("{" + kBase + R"(, "phii": {}})").find("unknown key phii") != std::string::npos);
    CHECK_FALSE(error_text(R"({"geometry": {"d": "two", "lengths": [1, 1]}, "phi": {"family": "exponential", "rate": 1}})").empty());
    CHECK(error_text("{" + kBase + R"(, "engine": {"kpm_ordr": 64}})").find("kpm_ordr") != std::string::npos);
    // non-integral flux is reported as a configuration problem
    CHECK_FALSE(error_text("{" + kBase + R"(, "field": {"B.12": 1.0}})").empty());
    CHECK_THROWS_AS(parse_config_text("{not json"), ConfigError);
}

TEST_CASE("number formatting round trip") {
    for (double x : {0.1, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 0.0}) CHECK(parse_number(format_number(x)) == x);
    CHECK(format_number(std::numeric_limits<double>::quiet_NaN()) == "nan");
    const std::vector<double> v{1.5, -0.25, 1e-17};
    CHECK(unpack_numbers(pack_numbers(v)) == v);

    nlohmann::json j = {{"b", std::numeric_limits<double>::quiet_NaN()}, {"a", 0.1}};
    const std::string text = dump_json(j, -1);
    CHECK(text.find("null") != std::string::npos);
    CHECK(text.find("\"a\"") < text.find("\"b\""));
}

TEST_CASE("csv, files and plots") {
    CsvTable t({"x", "y"});
    t.add_row({"1", "2"});
    CHECK_THROWS(t.add_row({"1"}));
    CHECK(t.str() == "x,y\n1,2\n");

    const auto dir = scratch("io");
    write_text_file(dir / "a.txt", "hello");
    CHECK(read_text_file(dir / "a.txt") == "hello");
    for (const auto& e : fs::directory_iterator(dir)) CHECK(e.path().extension() != ".tmp");

    PlotSpec spec;
    spec.title = "t";
    spec.log_y = true;
    spec.series.push_back({"s", {1, 2, 3}, {1, 0.1, 0.01}, true});
    const std::string svg = render_svg(spec);
    CHECK(svg.find("<svg") != std::string::npos);
    CHECK(svg == render_svg(spec));
    fs::remove_all(dir);
}

TEST_CASE("result cache") {
    const auto dir = scratch("cache");
    ResultCache cache(dir);
    CHECK(cache.enabled());
    CHECK_FALSE(ResultCache().enabled());
    const std::string key = ResultCache::make_key("inputs", "op");
    CHECK(key != ResultCache::make_key("inputs", "op2"));
    CHECK(key != ResultCache::make_key("inputs2", "op"));
    CHECK(key == ResultCache::make_key("inputs", "op"));
    CHECK_FALSE(cache.load(key).has_value());
    cache.store(key, "op", "first");
    cache.store(key, "op", "second");
    CHECK(cache.load(key).value() == "first");
    CHECK(cache.hits() == 1);
    CHECK(cache.misses() == 1);
    CHECK(fnv1a_hex("").size() == 16);
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
    fs::remove_all(dir);
}

TEST_CASE("command runner") {
    std::ostringstream log, err;
    CommandOptions none;
    none.config = "missing.json";
    CHECK(run_command("no-such-command", none, log, err) != 0);
    CHECK(err.str().find("verify-all") != std::string::npos);
    CHECK(run_command("trace-sweep", none, log, err) == exit_config);

    const auto dir = scratch("cmd");
    write_text_file(dir / "cfg.json", "{" + kBase + R"(, "sweep": {"p_list": [8, 12], "j": 0}})");
    CommandOptions opt;
    opt.config = dir / "cfg.json";
    opt.workers = 1;
    opt.out = dir / "a";
    REQUIRE(run_command("trace-sweep", opt, log, err) == exit_ok);
    const std::string first = read_text_file(dir / "a" / "sweep.csv");
    CHECK(std::count(first.begin(), first.end(), '\n') == 3);

    opt.out = dir / "b";
    opt.cache = (dir / "cache").string();
    REQUIRE(run_command("trace-sweep", opt, log, err) == exit_ok);
    opt.out = dir / "c";
    REQUIRE(run_command("trace-sweep", opt, log, err) == exit_ok);
    CHECK(read_text_file(dir / "b" / "sweep.csv") == first);
    CHECK(read_text_file(dir / "c" / "sweep.csv") == first);
    CHECK(read_text_file(dir / "c" / "traces.json") == read_text_file(dir / "a" / "traces.json"));

    write_text_file(dir / "bad.json", "{" + kBase + R"(, "sweep": {"p_list": "eight"}})");
    opt.config = dir / "bad.json";
    CHECK(run_command("trace-sweep", opt, log, err) == exit_config);
    fs::remove_all(dir);
}

TEST_CASE("shipped configs parse") {
    for (const auto& e : fs::directory_iterator(SCBL_CONFIG_DIR)) {
        if (e.path().extension() != ".json") continue;
        CAPTURE(e.path().string());
        CHECK_NOTHROW(parse_config(e.path()));
    }
}
