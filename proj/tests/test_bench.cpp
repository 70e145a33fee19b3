#include "icr/bench/report.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace icr;
using namespace icr::bench;

namespace {

std::vector<unsigned char> idx_header(std::uint32_t magic, std::uint32_t count, std::uint32_t rows, std::uint32_t cols) {
  std::vector<unsigned char> b;
  for (std::uint32_t v : {magic, count, rows, cols})
    for (int k = 3; k >= 0; --k) b.push_back(static_cast<unsigned char>(v >> (8 * k)));
  return b;
}

ErrorCode code_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  return ErrorCode::InvalidArgument;  // sentinel: nothing thrown
}

std::size_t count_fields(const std::string& line) { return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1; }

ExperimentConfig small_config() {
  ExperimentConfig c;
  c.kind = ExperimentKind::SynthLarge;
  c.p = 24;
  c.q = 12;
  c.s = 3;
  c.trials = 6;
  c.master_seed = 5;
  return c;
}

}  // namespace

TEST(Idx, ParsesHeaderAndPixels) {
  auto bytes = idx_header(0x803, 1, 28, 28);
  EXPECT_EQ(bytes[0], 0x00);
  EXPECT_EQ(bytes[2], 0x08);
  EXPECT_EQ(bytes[3], 0x03);
  bytes.resize(16 + 784, 0);
  ImageSet set = parse_idx_images(bytes);
  ASSERT_EQ(set.count(), 1u);
  EXPECT_EQ(set.images[0], Matrix::Zero(28, 28));

  bytes[16 + 28 * 2 + 5] = 255;  // row 2, column 5
  bytes[16 + 1] = 51;
  set = parse_idx_images(bytes);
  EXPECT_DOUBLE_EQ(set.images[0](2, 5), 1.0);
  EXPECT_DOUBLE_EQ(set.images[0](0, 1), 0.2);
  EXPECT_DOUBLE_EQ(vectorize(set.images[0])[28 * 2 + 5], 1.0);
  EXPECT_EQ(unvectorize(vectorize(set.images[0]), 28, 28), set.images[0]);
}

TEST(Idx, Errors) {
  auto labels = idx_header(0x801, 1, 28, 28);
  labels.resize(16 + 784, 0);
  EXPECT_EQ(code_of([&] { parse_idx_images(labels); }), ErrorCode::BadMagic);

  auto short_body = idx_header(0x803, 2, 28, 28);
  short_body.resize(16 + 784, 0);
  EXPECT_EQ(code_of([&] { parse_idx_images(short_body); }), ErrorCode::TruncatedFile);
  EXPECT_EQ(code_of([] { parse_idx_images({0, 0, 8}); }), ErrorCode::TruncatedFile);
  EXPECT_EQ(code_of([] { parse_idx_images({0, 0, 8, 3, 0, 0}); }), ErrorCode::TruncatedFile);

  auto small = idx_header(0x803, 1, 10, 10);
  small.resize(116, 0);
  EXPECT_EQ(code_of([&] { parse_idx_images(small); }), ErrorCode::DimMismatch);

  EXPECT_EQ(code_of([] { load_idx_images("/nonexistent/file.idx"); }), ErrorCode::IoError);
}

TEST(Idx, FixtureFile) {
  const ImageSet set = load_idx_images(std::string(ICR_TEST_DATA) + "/mnist_digits20.idx3-ubyte");
  ASSERT_EQ(set.count(), 20u);
  for (const auto& img : set.images) {
    EXPECT_GE(img.minCoeff(), 0.0);
    EXPECT_LE(img.maxCoeff(), 1.0);
    EXPECT_GT(img.maxCoeff(), 0.0);
  }
}

TEST(Idx, PgmOutput) {
  Matrix img = Matrix::Zero(2, 3);
  img(0, 1) = 1.0;
  img(1, 2) = 0.5;
  img(1, 0) = 2.0;
  const std::string path = (std::filesystem::temp_directory_path() / "icr_pgm_test.pgm").string();
  write_pgm(img, path);
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  EXPECT_EQ(ss.str(), "P2\n3 2\n255\n0 255 0\n255 0 128\n");
  std::filesystem::remove(path);
}

TEST(Csv, HeaderGolden) {
  EXPECT_EQ(csv_string({}),
            "method,p,q,s,lambda,kappa,sigma,trials,avg_cost,mse,support_match_pct,avg_sparsity,avg_iters,wall_time_s\n");
  EXPECT_EQ(count_fields(kCsvHeader), 14u);
}

TEST(Csv, OneRow) {
  MetricsRow r{"ICR", 512, 128, 30, 3e-3, 0.05, 0.01, 50, 1.234567891, 2.5e-5, 99.21875, 30.5, 12, 0};
  const std::string csv = csv_string({r});
  const std::string line = csv.substr(csv.find('\n') + 1);
  EXPECT_EQ(line, "ICR,512,128,30,0.003,0.05,0.01,50,1.23457,2.5e-05,99.2188,30.5,12,0\n");
  EXPECT_EQ(count_fields(line.substr(0, line.size() - 1)), 14u);
}

TEST(Json, RowRoundTrip) {
  MetricsRow r{"ElasticNet", 16, 8, 3, 3e-3, 1e-25, 0.01, 200, 0.1 + 0.2, 1.0 / 3.0, 87.5, 4.25, 17.125, 0};
  EXPECT_EQ(row_from_json(nlohmann::json::parse(row_to_json(r).dump())), r);

  ExperimentResult res;
  res.rows = {r, r};
  res.rows[1].method = "ICR";
  const ExperimentConfig cfg = small_config();
  const auto j = nlohmann::json::parse(json_string(cfg, res));
  EXPECT_EQ(rows_from_json(j), res.rows);
  EXPECT_EQ(j["status"], "ok");
  EXPECT_EQ(config_to_json(config_from_json(j["config"])), config_to_json(cfg));
}

TEST(Config, ParseAndValidate) {
  ExperimentConfig c = small_config();
  apply_config_text(c, "# comment\nkind = sweep\nsweep_s = 2, 4\nmethods = ICR, ICR-NN\nsigma = 0.05  # trailing\n\n");
  EXPECT_EQ(c.kind, ExperimentKind::SparsitySweep);
  EXPECT_EQ(c.sweep_s, (std::vector<Index>{2, 4}));
  EXPECT_EQ(c.methods, (std::vector<Method>{Method::ICR, Method::ICR_NN}));
  EXPECT_DOUBLE_EQ(c.sigma, 0.05);
  EXPECT_NO_THROW(validate(c));

  auto config_error = [](const std::function<void()>& f) { return code_of(f) == ErrorCode::ConfigError; };
  EXPECT_TRUE(config_error([] { ExperimentConfig x; apply_setting(x, "bogus", "1"); }));
  EXPECT_TRUE(config_error([] { ExperimentConfig x; apply_setting(x, "trials", "ten"); }));
  EXPECT_TRUE(config_error([] { ExperimentConfig x; apply_setting(x, "methods", "Lasso"); }));
  EXPECT_TRUE(config_error([] { ExperimentConfig x; apply_config_text(x, "p 10\n"); }));
  EXPECT_TRUE(config_error([] { ExperimentConfig x; apply_config_file(x, "/nonexistent.cfg"); }));
  EXPECT_TRUE(config_error([] { ExperimentConfig x; x.trials = 0; validate(x); }));
  EXPECT_TRUE(config_error([] { ExperimentConfig x; x.kappa = 1.0; validate(x); }));
  EXPECT_TRUE(config_error([] { ExperimentConfig x; x.kappa.reset(); validate(x); }));
  EXPECT_TRUE(config_error([] { ExperimentConfig x; x.s = x.p + 1; validate(x); }));
  EXPECT_TRUE(config_error([] {
    ExperimentConfig x;
    x.kind = ExperimentKind::SynthGlobal;
    x.p = 40;
    validate(x);
  }));
  EXPECT_TRUE(config_error([] {
    ExperimentConfig x;
    x.kind = ExperimentKind::Mnist;
    validate(x);
  }));
}

TEST(RunExperiment, TwoCoordinateGlobalCase) {
  ExperimentConfig c;
  c.kind = ExperimentKind::SynthGlobal;
  c.p = 2;
  c.q = 2;
  c.s = 1;
  c.trials = 1;
  c.methods = {Method::ICR, Method::Oracle};
  const ExperimentResult res = run_experiment(c);
  ASSERT_TRUE(res.ok());
  ASSERT_EQ(res.rows.size(), 2u);
  EXPECT_EQ(res.rows[0].method, "ICR");
  EXPECT_DOUBLE_EQ(res.rows[0].support_match_pct, 100.0);
  EXPECT_DOUBLE_EQ(res.rows[1].mse, 0.0);
  EXPECT_EQ(res.rows[1].avg_iters, 0.0);
  EXPECT_EQ(res.rows[0].trials, 1);
}

TEST(RunExperiment, IndependentOfJobCount) {
  ExperimentConfig c = small_config();
  c.kind = ExperimentKind::SparsitySweep;
  c.sweep_s = {1, 4};
  c.diagnostics = true;
  c.methods = {Method::ICR, Method::ICR_NN, Method::ElasticNet};
  const ExperimentResult one = run_experiment(c);
  c.jobs = 4;
  const ExperimentResult four = run_experiment(c);
  EXPECT_EQ(one.rows.size(), 6u);
  EXPECT_EQ(one.rows, four.rows);
  EXPECT_EQ(one.diagnostics, four.diagnostics);
  EXPECT_EQ(csv_string(one.rows), csv_string(four.rows));
  EXPECT_EQ(json_string(c, one), json_string(c, four));
  EXPECT_EQ(trial_seed(1, 0, 3), trial_seed(1, 0, 3));
  EXPECT_NE(trial_seed(1, 0, 3), trial_seed(1, 1, 3));
}

TEST(RunExperiment, FailuresAreReported) {
  ExperimentConfig c = small_config();
  c.trials = 2;
  c.inner_tol = 1e-300;
  c.max_inner_iters = 1;
  const ExperimentResult res = run_experiment(c);
  EXPECT_FALSE(res.ok());
  EXPECT_FALSE(res.failures.empty());
  EXPECT_EQ(nlohmann::json::parse(json_string(c, res))["status"], "failed");
}

TEST(Mnist, ZeroImageAndNonNegativity) {
  ImageSet set;
  set.images.push_back(Matrix::Zero(28, 28));
  Matrix digit = Matrix::Zero(28, 28);
  digit.block(8, 12, 12, 4).setConstant(0.8);
  set.images.push_back(digit);

  ExperimentConfig c;
  c.kind = ExperimentKind::Mnist;
  c.q = 150;
  c.kappa = 0.1;
  c.methods = {Method::ICR_NN, Method::ICR, Method::ElasticNet};
  c.mnist_path = "in-memory";
  c.max_outer_iters = 50;
  const std::string dir = (std::filesystem::temp_directory_path() / "icr_mnist_test").string();
  std::filesystem::remove_all(dir);
  const ExperimentResult res = mnist_recovery_experiment(c, set, dir);
  ASSERT_TRUE(res.ok());
  ASSERT_EQ(res.images.size(), 2u);
  for (double m : res.images[0].mse) EXPECT_LE(m, 1e-4);
  EXPECT_GE(res.images[1].min_pixel[0], 0.0);
  EXPECT_TRUE(std::filesystem::exists(dir + "/original_1.pgm"));
  EXPECT_TRUE(std::filesystem::exists(dir + "/ICR-NN_1.pgm"));

  std::ifstream in(dir + "/ICR-NN_1.pgm");
  std::string magic;
  in >> magic;
  EXPECT_EQ(magic, "P2");
  std::filesystem::remove_all(dir);

  c.kappa.reset();
  EXPECT_DOUBLE_EQ(mnist_recovery_experiment(c, set).kappa, 48.0 / (2 * 784));

  ImageSet blank;
  blank.images.push_back(Matrix::Zero(28, 28));
  EXPECT_EQ(code_of([&] { mnist_recovery_experiment(c, blank); }), ErrorCode::ConfigError);
}

TEST(ParallelFor, CoversEveryIndexOnce) {
  std::vector<int> hits(100, 0);
  parallel_for(100, 7, [&](int i) { ++hits[static_cast<std::size_t>(i)]; });
  for (int h : hits) EXPECT_EQ(h, 1);
}
