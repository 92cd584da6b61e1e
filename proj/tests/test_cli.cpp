#include "poserec/gan.hpp"
#include "poserec/index.hpp"
#include "oracles.hpp"
#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

#include <chrono>
#include <fstream>
#include <set>
#include <sstream>
#include <sys/wait.h>

using namespace poserec;
using testing_support::TempDir;
namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

struct Run {
    int code = -1;
    std::string out;
};

std::string quote(const std::string& s)
{
    std::string q = "'";
    for (char c : s)
        q += c == '\'' ? std::string("'\\''") : std::string(1, c);
    return q + "'";
}

Run run_cli(const std::vector<std::string>& args, const TempDir& tmp)
{
    std::string cmd = quote(POSEREC_CLI_PATH);
    for (const auto& a : args)
        cmd += " " + quote(a);
    const fs::path out = tmp / "stdout.txt";
    cmd += " > " + quote(out.string()) + " 2> " + quote((tmp / "stderr.txt").string());
    const int status = std::system(cmd.c_str());
    Run r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out);
    std::stringstream ss;
    ss << in.rdbuf();
    r.out = ss.str();
    return r;
}

std::string stderr_of(const TempDir& tmp)
{
    std::ifstream in(tmp / "stderr.txt");
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> rank_files(const fs::path& dir)
{
    std::vector<std::string> names;
    for (const auto& e : fs::directory_iterator(dir))
        if (e.path().filename().string().starts_with("rank_"))
            names.push_back(e.path().filename().string());
    std::sort(names.begin(), names.end());
    return names;
}

std::size_t line_count(const fs::path& p)
{
    std::ifstream in(p);
    std::size_t n = 0;
    for (std::string line; std::getline(in, line);)
        ++n;
    return n;
}

/// Corpus with its index and a 12-result manifest, shared by the pipeline tests.
struct Pipeline {
    TempDir tmp{"cli"};
    fs::path corpus = tmp / "corpus";
    fs::path index = tmp / "index.json";
    fs::path results = tmp / "results";
    std::vector<fs::path> files;

    explicit Pipeline(int count = 30)
    {
        files = testing_support::write_corpus(corpus, count, 17);
        REQUIRE(run_cli({"index", "--dir", corpus.string(), "--out", index.string()}, tmp).code == 0);
        REQUIRE(run_cli({"query", "--index", index.string(), "--input", files[0].string(), "--out-dir",
                         results.string()},
                        tmp)
                    .code == 0);
    }
};

} // namespace

TEST_SUITE("cli") {

TEST_CASE("index prints the summary and exits by error class")
{
    TempDir tmp("cli_index");
    testing_support::write_corpus(tmp / "imgs", 5, 1);
    testing_support::write_bytes(tmp / "imgs" / "broken.png", {0x89, 'P', 'N', 'G'});
    const auto ok = run_cli({"index", "--dir", (tmp / "imgs").string(), "--out", (tmp / "i.json").string()}, tmp);
    CHECK(ok.code == 0);
    CHECK(ok.out == "indexed 5 images (1 skipped)\n");
    CHECK(fs::exists(tmp / "i.json"));

    fs::create_directory(tmp / "empty");
    CHECK(run_cli({"index", "--dir", (tmp / "empty").string(), "--out", (tmp / "e.json").string()}, tmp).code == 2);
    CHECK(run_cli({"index", "--dir", (tmp / "nope").string(), "--out", (tmp / "e.json").string()}, tmp).code == 1);
    CHECK(run_cli({"index", "--dir", (tmp / "imgs").string(), "--out", (tmp / "no/dir/e.json").string()}, tmp)
              .code == 1);
    CHECK(run_cli({"index", "--dir", (tmp / "imgs").string(), "--out", (tmp / "b.json").string(), "--bins", "1"},
                  tmp)
              .code == 2);
    CHECK(run_cli({"index", "--dir", (tmp / "imgs").string(), "--out", (tmp / "b.json").string(), "--color-space",
                   "cmyk"},
                  tmp)
              .code == 2);
    CHECK(run_cli({"index"}, tmp).code == 2);
    CHECK(run_cli({"bogus"}, tmp).code == 2);
}

TEST_CASE("index reports the 1500-image corpus")
{
    TempDir tmp("cli_1500");
    IndexConfig cfg;
    cfg.bins = 8;
    testing_support::write_corpus(tmp / "imgs", 1500, 3, cfg);
    const auto r = run_cli({"index", "--dir", (tmp / "imgs").string(), "--out", (tmp / "i.json").string(), "--bins",
                            "8"},
                           tmp);
    CHECK(r.code == 0);
    CHECK(r.out == "indexed 1500 images (0 skipped)\n");
}

TEST_CASE("query exports twelve results by default")
{
    Pipeline p;
    CHECK(rank_files(p.results).size() == 12);
    CHECK(fs::exists(p.results / "results.json"));
}

TEST_CASE("query --k 1 on an indexed image returns itself with score 0")
{
    Pipeline p;
    const auto out = p.tmp / "self";
    const auto r = run_cli({"query", "--index", p.index.string(), "--input", p.files[4].string(), "--out-dir",
                            out.string(), "--k", "1"},
                           p.tmp);
    REQUIRE(r.code == 0);
    std::ifstream in(out / "results.json");
    const auto doc = json::parse(in);
    REQUIRE(doc["items"].size() == 1);
    CHECK(doc["items"][0]["id"] == p.files[4].filename().string());
    CHECK(doc["items"][0]["score"].get<double>() == 0.0);
    CHECK(rank_files(out).size() == 1);
}

TEST_CASE("query --metric chi-squared matches the oracle ordering")
{
    Pipeline p;
    const auto out = p.tmp / "chi";
    REQUIRE(run_cli({"query", "--index", p.index.string(), "--input", p.files[7].string(), "--out-dir", out.string(),
                     "--metric", "chi-squared"},
                    p.tmp)
                .code == 0);
    std::ifstream in(out / "results.json");
    const auto doc = json::parse(in);
    CHECK(doc["metric"] == "chi-squared");
    std::vector<std::string> ids;
    for (const auto& item : doc["items"])
        ids.push_back(item["id"]);
    const auto index = load_index(p.index);
    CHECK(ids == oracle::rank(index, load_image(p.files[7]), MetricKind::ChiSquared, 12));
}

TEST_CASE("query error exits")
{
    Pipeline p;
    const auto out = (p.tmp / "err").string();
    CHECK(run_cli({"query", "--index", (p.tmp / "missing.json").string(), "--input", p.files[0].string(),
                   "--out-dir", out},
                  p.tmp)
              .code == 1);
    CHECK(run_cli({"query", "--index", p.index.string(), "--input", (p.tmp / "missing.png").string(), "--out-dir",
                   out},
                  p.tmp)
              .code == 1);
    CHECK(run_cli({"query", "--index", p.index.string(), "--input", p.files[0].string(), "--out-dir", out, "--k",
                   "0"},
                  p.tmp)
              .code == 2);
    CHECK(run_cli({"query", "--index", p.index.string(), "--input", p.files[0].string(), "--out-dir", out,
                   "--metric", "cosine"},
                  p.tmp)
              .code == 2);
    testing_support::write_bytes(p.tmp / "corrupt.json", {'{', '"'});
    CHECK(run_cli({"query", "--index", (p.tmp / "corrupt.json").string(), "--input", p.files[0].string(),
                   "--out-dir", out},
                  p.tmp)
              .code == 1);
}

TEST_CASE("split writes two disjoint sets of six, stable per seed")
{
    Pipeline p;
    const auto manifest = (p.results / "results.json").string();
    const auto s1 = p.tmp / "s1.json";
    const auto s2 = p.tmp / "s2.json";
    REQUIRE(run_cli({"split", "--results", manifest, "--out", s1.string(), "--seed", "5"}, p.tmp).code == 0);
    REQUIRE(run_cli({"--seed", "5", "split", "--results", manifest, "--out", s2.string()}, p.tmp).code == 0);
    CHECK(testing_support::read_bytes(s1) == testing_support::read_bytes(s2));

    std::ifstream in(s1);
    const auto doc = json::parse(in);
    CHECK(doc["set_a"].size() == 6);
    CHECK(doc["set_b"].size() == 6);
    std::set<std::string> all;
    for (const auto& id : doc["set_a"])
        all.insert(id.get<std::string>());
    for (const auto& id : doc["set_b"])
        all.insert(id.get<std::string>());
    CHECK(all.size() == 12);
}

TEST_CASE("split rejects an 11-item manifest")
{
    Pipeline p;
    std::ifstream in(p.results / "results.json");
    auto doc = json::parse(in);
    doc["items"].erase(doc["items"].size() - 1);
    doc["k"] = 11;
    std::ofstream(p.tmp / "eleven.json") << doc.dump();
    const auto r = run_cli({"split", "--results", (p.tmp / "eleven.json").string(), "--out",
                            (p.tmp / "s.json").string()},
                           p.tmp);
    CHECK(r.code == 2);
    CHECK(stderr_of(p.tmp).find("WrongCardinality") != std::string::npos);
    CHECK_FALSE(fs::exists(p.tmp / "s.json"));
}

TEST_CASE("gan-train and gan-sample")
{
    Pipeline p;
    const auto split = (p.tmp / "s.json").string();
    REQUIRE(run_cli({"split", "--results", (p.results / "results.json").string(), "--out", split}, p.tmp).code == 0);

    const auto model = (p.tmp / "model.json").string();
    const std::vector<std::string> train{"gan-train", "--split", split, "--epochs", "1", "--size", "8",
                                         "--out", model, "--loss-log", (p.tmp / "l1.csv").string(), "--seed", "3"};
    REQUIRE(run_cli(train, p.tmp).code == 0);
    CHECK(line_count(p.tmp / "l1.csv") == 37);

    auto again = train;
    again[10] = (p.tmp / "l2.csv").string();
    again[8] = (p.tmp / "model2.json").string();
    REQUIRE(run_cli(again, p.tmp).code == 0);
    CHECK(testing_support::read_bytes(p.tmp / "l1.csv") == testing_support::read_bytes(p.tmp / "l2.csv"));
    CHECK(testing_support::read_bytes(model) == testing_support::read_bytes(p.tmp / "model2.json"));

    auto zero = train;
    zero[4] = "0";
    CHECK(run_cli(zero, p.tmp).code == 2);
    CHECK(run_cli({"gan-train", "--split", (p.tmp / "nope.json").string(), "--out", model, "--loss-log",
                   (p.tmp / "x.csv").string()},
                  p.tmp)
              .code == 1);

    const auto a = p.tmp / "a";
    const auto b = p.tmp / "b";
    REQUIRE(run_cli({"gan-sample", "--model", model, "--out-dir", a.string(), "--n", "6", "--seed", "9"}, p.tmp)
                .code == 0);
    REQUIRE(run_cli({"gan-sample", "--model", model, "--out-dir", b.string(), "--n", "6", "--seed", "9"}, p.tmp)
                .code == 0);
    for (int i = 1; i <= 6; ++i) {
        char name[32];
        std::snprintf(name, sizeof name, "sample_%02d.png", i);
        REQUIRE(fs::exists(a / name));
        CHECK(testing_support::read_bytes(a / name) == testing_support::read_bytes(b / name));
        CHECK(load_image(a / name).width() == 8);
    }
    CHECK(run_cli({"gan-sample", "--model", model, "--out-dir", a.string(), "--n", "0"}, p.tmp).code == 2);
}

TEST_CASE("gan-sample rejects a corrupt model with exit 1")
{
    TempDir tmp("cli_corrupt");
    testing_support::write_bytes(tmp / "model.json", {'{', '"', 'v', 'e', 'r'});
    CHECK(run_cli({"gan-sample", "--model", (tmp / "model.json").string(), "--out-dir", (tmp / "o").string()}, tmp)
              .code == 1);
    CHECK(stderr_of(tmp).find("CorruptModel") != std::string::npos);
}

TEST_CASE("end-to-end pipeline on 100 images runs under a minute")
{
    const auto start = std::chrono::steady_clock::now();
    Pipeline p(100);
    const auto split = (p.tmp / "s.json").string();
    const auto model = (p.tmp / "m.json").string();
    REQUIRE(run_cli({"split", "--results", (p.results / "results.json").string(), "--out", split}, p.tmp).code == 0);
    REQUIRE(run_cli({"gan-train", "--split", split, "--epochs", "1", "--size", "8", "--out", model, "--loss-log",
                     (p.tmp / "l.csv").string()},
                    p.tmp)
                .code == 0);
    REQUIRE(run_cli({"gan-sample", "--model", model, "--out-dir", (p.tmp / "s").string()}, p.tmp).code == 0);
    const auto elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    CHECK(elapsed < 60.0);
}

} // TEST_SUITE
