#include <gtest/gtest.h>

#include <fstream>
#include <iterator>

#include <unistd.h>

#include "compop/experiments.hpp"

using namespace compop;

namespace {

std::filesystem::path scratch(const std::string& tag) {
  auto p = std::filesystem::temp_directory_path() / ("compop_test_" + std::to_string(::getpid()) + "_" + tag);
  std::filesystem::remove_all(p);
  return p;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

}  // namespace

TEST(Registry, AllIds) {
  for (const char* id : {"cusp-diagonal", "lens-trichotomy", "tensor-lemma", "spiral-harmonic", "blaschke-passage",
                         "polydisk-pairs", "shapiro-taylor"})
    EXPECT_EQ(registry().count(id), 1u) << id;
  ExperimentConfig cfg;
  cfg.id = "nope";
  EXPECT_THROW(execute(cfg), std::invalid_argument);
}

TEST(Run, UnknownIdWritesErrorManifest) {
  ExperimentConfig cfg;
  cfg.id = "nope";
  cfg.out_dir = scratch("err");
  const auto m = run(cfg);
  EXPECT_EQ(m.status, RunStatus::error);
  EXPECT_TRUE(m.checksums.empty());
  const auto j = nlohmann::json::parse(slurp(manifest_path(cfg)));
  EXPECT_EQ(j["status"], "error");
  EXPECT_TRUE(j["tables"].empty());
  std::size_t files = 0;
  for (const auto& e : std::filesystem::directory_iterator(cfg.out_dir)) files += e.path().extension() == ".csv";
  EXPECT_EQ(files, 0u);
  std::filesystem::remove_all(cfg.out_dir);
}

TEST(Run, TensorLemmaTablesAndManifest) {
  ExperimentConfig cfg;
  cfg.id = "tensor-lemma";
  cfg.seed = 7;
  cfg.out_dir = scratch("tl");
  const auto m = run(cfg);
  EXPECT_EQ(m.status, RunStatus::pass);
  ASSERT_FALSE(m.checksums.empty());
  for (const auto& [file, crc] : m.checksums) {
    const auto body = slurp(cfg.out_dir / file);
    EXPECT_EQ(crc32_hex(body), crc) << file;
    ASSERT_EQ(body.rfind("# ", 0), 0u) << file;
    const auto head = nlohmann::json::parse(body.substr(2, body.find('\n') - 2));
    EXPECT_EQ(head["experiment"], "tensor-lemma");
    EXPECT_EQ(head["seed"], 7);
    const auto second = body.substr(body.find('\n') + 1);
    std::string cols;
    for (const auto& c : head["columns"]) cols += (cols.empty() ? "" : ",") + c.get<std::string>();
    EXPECT_EQ(second.substr(0, second.find('\n')), cols);
  }
  const auto j = nlohmann::json::parse(slurp(manifest_path(cfg)));
  EXPECT_EQ(j["version"], kVersion);
  EXPECT_EQ(j["config"]["seed"], 7);
  std::filesystem::remove_all(cfg.out_dir);
}

TEST(Run, ByteIdenticalRerun) {
  for (const char* id : {"tensor-lemma", "blaschke-passage"}) {
    ExperimentConfig a, b;
    a.id = b.id = id;
    a.out_dir = scratch("a");
    b.out_dir = scratch("b");
    const auto ma = run(a), mb = run(b);
    EXPECT_EQ(ma.checksums, mb.checksums) << id;
    for (const auto& [file, crc] : ma.checksums) EXPECT_EQ(slurp(a.out_dir / file), slurp(b.out_dir / file)) << file;
    std::filesystem::remove_all(a.out_dir);
    std::filesystem::remove_all(b.out_dir);
  }
}

TEST(Run, LensTrichotomyFlatBand) {
  ExperimentConfig cfg;
  cfg.id = "lens-trichotomy";
  cfg.N = 2;
  cfg.out_dir = scratch("lt");
  const auto m = run(cfg);
  EXPECT_EQ(m.status, RunStatus::pass);
  for (const auto& a : m.assertions) EXPECT_TRUE(a.pass) << a.name << " " << a.detail;
  std::filesystem::remove_all(cfg.out_dir);
}

TEST(Run, PolydiskWitnessSlope) {
  ExperimentConfig cfg;
  cfg.id = "polydisk-pairs";
  const auto out = execute(cfg);
  bool seen = false;
  for (const auto& a : out.assertions)
    if (a.name.find("witness") != std::string::npos) {
      seen = true;
      EXPECT_TRUE(a.pass) << a.detail;
    }
  EXPECT_TRUE(seen);
}

TEST(Csv, Formatting) {
  Table t("demo", {"n", "x", "flag", "s"});
  t.add(std::size_t{3}, 0.1, true, std::string("a"));
  EXPECT_EQ(t.rows[0][0], "3");
  EXPECT_EQ(t.rows[0][1], "0.10000000000000001");
  EXPECT_EQ(t.rows[0][2], "1");
  EXPECT_THROW(t.add(1, 2), std::logic_error);
  ExperimentConfig cfg;
  cfg.id = "demo";
  const auto body = render_csv(t, cfg);
  EXPECT_NE(body.find("\nn,x,flag,s\n3,0.10000000000000001,1,a\n"), std::string::npos);
}
