/*
 * Copyright 2026 The quadscreen Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "quadscreen/io.hpp"

#include <gtest/gtest.h>

#include <unistd.h>

#include <filesystem>
#include <functional>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace quadscreen {
namespace {

namespace fs = std::filesystem;

class TempDir : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() /
           ("quadscreen_io_" + std::string(info->name()) + "_" +
            std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  fs::path file(const std::string& name) const { return dir_ / name; }
  fs::path write(const std::string& name, const std::string& text) const {
    std::ofstream(file(name)) << text;
    return file(name);
  }

  fs::path dir_;
};

ErrorCode code_of_read(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::kInvalidArgument;
}

std::string location_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.location();
  }
  ADD_FAILURE() << "no error thrown";
  return {};
}

Dataset random_dataset(std::uint64_t seed, bool binary) {
  CounterRng rng(seed, 0x696f);
  const std::size_t n = rng.index(30);
  const std::size_t p = 1 + rng.index(8);
  std::vector<Alphabet> alphabets;
  for (std::size_t i = 0; i < p; ++i) {
    if (binary) {
      alphabets.push_back(Alphabet::plus_minus_one());
    } else {
      std::vector<double> v;
      const std::size_t k = 2 + rng.index(4);
      for (std::size_t a = 0; a < k; ++a) v.push_back(rng.uniform(-5.0, 5.0) + 11.0 * a);
      alphabets.emplace_back(v);
    }
  }
  std::vector<std::uint8_t> codes;
  for (std::size_t i = 0; i < p; ++i) {
    for (std::size_t r = 0; r < n; ++r) {
      codes.push_back(static_cast<std::uint8_t>(rng.index(alphabets[i].size())));
    }
  }
  std::vector<std::uint8_t> y(n);
  for (auto& v : y) v = rng.uniform() < 0.4;
  return Dataset(n, p, alphabets, codes, y, rng());
}

GenerativeModel random_model(std::uint64_t seed) {
  CounterRng rng(seed, 0x6d6f);
  const std::size_t p = 2 + rng.index(6);
  auto f = random_quad_poly(p, 1 + rng.index(2), rng.index(2) + 1, 2, {0.1, 1.0}, seed,
                            {true, true});
  f.constant = rng.uniform(-1.0, 1.0);
  GenerativeModel m;
  m.p = p;
  m.poly = f;
  m.gamma = rng.uniform(0.1, 4.0);
  m.sigma = seed % 2 ? SigmaKind::kPiecewiseLinear : SigmaKind::kSigmoid;
  m.seed = rng();
  for (std::size_t i = 0; i < p; ++i) {
    if (seed % 3 == 0) {
      m.alphabets.push_back(Alphabet({-2.0 - i, 0.5, 3.25 + i}));
      m.marginals.push_back({0.2, 0.3, 0.5});
    } else {
      m.alphabets.push_back(Alphabet::plus_minus_one());
      const double b = rng.uniform(0.05, 0.95);
      m.marginals.push_back({1.0 - b, b});
    }
  }
  return m;
}

void expect_same_model(const GenerativeModel& a, const GenerativeModel& b) {
  EXPECT_EQ(a.p, b.p);
  EXPECT_EQ(a.gamma, b.gamma);
  EXPECT_EQ(a.sigma, b.sigma);
  EXPECT_EQ(a.seed, b.seed);
  EXPECT_EQ(a.poly.constant, b.poly.constant);
  ASSERT_EQ(a.poly.quad_terms.size(), b.poly.quad_terms.size());
  for (std::size_t t = 0; t < a.poly.quad_terms.size(); ++t) {
    EXPECT_EQ(a.poly.quad_terms[t].i, b.poly.quad_terms[t].i);
    EXPECT_EQ(a.poly.quad_terms[t].j, b.poly.quad_terms[t].j);
    EXPECT_EQ(a.poly.quad_terms[t].beta, b.poly.quad_terms[t].beta);
  }
  ASSERT_EQ(a.poly.lin_terms.size(), b.poly.lin_terms.size());
  for (std::size_t t = 0; t < a.poly.lin_terms.size(); ++t) {
    EXPECT_EQ(a.poly.lin_terms[t].j, b.poly.lin_terms[t].j);
    EXPECT_EQ(a.poly.lin_terms[t].alpha, b.poly.lin_terms[t].alpha);
  }
  EXPECT_EQ(a.marginals, b.marginals);
  for (std::size_t i = 0; i < a.p; ++i) EXPECT_TRUE(a.alphabets[i] == b.alphabets[i]);
}

using SparseIo = TempDir;
using CsvIo = TempDir;
using ModelIo = TempDir;
using ConfigIo = TempDir;

TEST_F(SparseIo, RoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = random_dataset(seed, true);
    for (std::size_t base : {0u, 1u}) {
      write_sparse_binary(file("x.txt"), file("y.txt"), d, Encoding::kPlusMinusOne, base);
      SparseReadOptions opts;
      opts.p = d.cols();
      opts.index_base = base;
      opts.seed = d.seed();
      ASSERT_TRUE(read_sparse_binary(file("x.txt"), file("y.txt"), opts) == d)
          << "seed " << seed;
    }
  }
}

TEST_F(SparseIo, ZeroOneEncodingAndEmptyRows) {
  const auto x = write("x.txt", "0 3\n\n2:1\n");
  const auto y = write("y.txt", "1\n-1\n+1\n");
  SparseReadOptions opts;
  opts.p = 4;
  const auto pm = read_sparse_binary(x, y, opts);
  EXPECT_EQ(pm.rows(), 3u);
  EXPECT_EQ(pm.row_values(0), (std::vector<double>{1, -1, -1, 1}));
  EXPECT_EQ(pm.row_values(1), (std::vector<double>{-1, -1, -1, -1}));
  EXPECT_EQ(pm.row_values(2), (std::vector<double>{-1, -1, 1, -1}));
  EXPECT_EQ(std::vector<std::uint8_t>(pm.labels().begin(), pm.labels().end()),
            (std::vector<std::uint8_t>{1, 0, 1}));
  opts.encoding = Encoding::kZeroOne;
  const auto zo = read_sparse_binary(x, y, opts);
  EXPECT_EQ(zo.row_values(0), (std::vector<double>{1, 0, 0, 1}));
  write_sparse_binary(file("x2.txt"), file("y2.txt"), zo, Encoding::kZeroOne);
  EXPECT_TRUE(read_sparse_binary(file("x2.txt"), file("y2.txt"), opts) == zo);
  EXPECT_THROW(write_sparse_binary(file("x3.txt"), file("y3.txt"), zo), Error);
}

TEST_F(SparseIo, MalformedInputIsLocated) {
  const auto y = write("y.txt", "1\n0\n1\n");
  SparseReadOptions opts;
  opts.p = 5;
  auto read = [&](const std::string& text) {
    const auto x = write("x.txt", text);
    return [=] { read_sparse_binary(x, y, opts); };
  };
  EXPECT_EQ(code_of_read(read("0 1\n2 x\n3\n")), ErrorCode::kParse);
  EXPECT_EQ(location_of(read("0 1\n2 x\n3\n")), file("x.txt").string() + ":2");
  EXPECT_EQ(code_of_read(read("0\n1\n4 5\n")), ErrorCode::kIndexOutOfRange);
  EXPECT_EQ(location_of(read("0\n1\n4 5\n")), file("x.txt").string() + ":3");
  EXPECT_EQ(location_of(read("3 1\n\n\n")), file("x.txt").string() + ":1");
  EXPECT_EQ(location_of(read("1 1\n\n\n")), file("x.txt").string() + ":1");
  EXPECT_EQ(code_of_read(read("1:0.5\n\n\n")), ErrorCode::kParse);
  EXPECT_EQ(code_of_read(read("1\n2\n")), ErrorCode::kSchema);
  const auto bad_y = write("bad_y.txt", "1\n2\n1\n");
  const auto x = write("x.txt", "\n\n\n");
  EXPECT_EQ(location_of([&] { read_sparse_binary(x, bad_y, opts); }),
            bad_y.string() + ":2");
  opts.index_base = 1;
  EXPECT_EQ(code_of_read(read("0\n\n\n")), ErrorCode::kIndexOutOfRange);
  EXPECT_EQ(code_of_read([&] { read_labels(file("missing.txt")); }), ErrorCode::kIo);
}

TEST_F(CsvIo, RoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto d = random_dataset(seed, seed % 2 == 0);
    std::stringstream buf;
    write_csv_dataset(buf, d);
    ASSERT_TRUE(read_csv_dataset(buf) == d) << "seed " << seed << "\n" << buf.str();
  }
  const auto d = random_dataset(7, false);
  write_csv_dataset(file("d.csv"), d);
  EXPECT_TRUE(read_csv_dataset(file("d.csv")) == d);
}

TEST_F(CsvIo, DefaultsToPlusMinusOne) {
  std::stringstream in("y,x0,x1\n1,1,-1\n0,-1,-1\n");
  const auto d = read_csv_dataset(in);
  EXPECT_EQ(d.rows(), 2u);
  EXPECT_TRUE(d.column_is_plus_minus_one(0));
  EXPECT_EQ(d.row_values(0), (std::vector<double>{1, -1}));
}

TEST_F(CsvIo, MalformedInputIsLocated) {
  auto loc = [](const std::string& text) {
    return location_of([&] {
      std::stringstream in(text);
      read_csv_dataset(in, "t.csv");
    });
  };
  EXPECT_EQ(loc("y,x0\n1,1\n0,3\n"), "t.csv:3, column x0");
  EXPECT_EQ(loc("y,x0\n1,1\n2,1\n"), "t.csv:3, column y");
  EXPECT_EQ(loc("y,x0\n1,1,1\n"), "t.csv:2");
  EXPECT_EQ(loc("y,x0,x1\n1,1\n"), "t.csv:2");
  EXPECT_EQ(loc("z,x0\n1,1\n"), "t.csv:1");
}

TEST_F(ModelIo, RoundTripIsExact) {
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto m = random_model(seed);
    write_model_json(file("m.json"), m);
    expect_same_model(read_model_json(file("m.json")), m);
  }
}

TEST_F(ModelIo, ShippedFixture) {
  const auto m =
      read_model_json(fs::path(QUADSCREEN_DATA_DIR) / "nonlinear_example_model.json");
  EXPECT_EQ(m.p, 3u);
  ASSERT_EQ(m.poly.quad_terms.size(), 1u);
  const double alpha = m.poly.quad_terms[0].beta;
  EXPECT_EQ(alpha, 2.008);
  // The file stores the expansion of
  // alpha (x0 - mu0)(x1 - mu1) + beta (x2 - mu2) + c0 with beta = 2, c0 = 2.
  const double mu0 = m.mean(0);
  const double mu1 = m.mean(1);
  const double mu2 = m.mean(2);
  std::vector<double> lin(3, 0.0);
  for (const auto& l : m.poly.lin_terms) lin[l.j] = l.alpha;
  EXPECT_NEAR(lin[0], -alpha * mu1, 1e-12);
  EXPECT_NEAR(lin[1], -alpha * mu0, 1e-12);
  EXPECT_EQ(lin[2], 2.0);
  EXPECT_NEAR(m.poly.constant - alpha * mu0 * mu1 + 2.0 * mu2, 2.0, 1e-12);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_TRUE(m.alphabets[i] == Alphabet({-2, -1, 1, 2}));
}

TEST_F(ModelIo, SchemaErrors) {
  auto read = [&](const std::string& text) {
    const auto path = write("m.json", text);
    return [=] { read_model_json(path); };
  };
  EXPECT_EQ(code_of_read(read(R"({"p": 2, "sigma": "tanh"})")), ErrorCode::kSchema);
  EXPECT_NE(location_of(read(R"({"p": 2, "sigma": "tanh"})")).find("$.sigma"),
            std::string::npos);
  EXPECT_NE(location_of(read(R"({"p": 2, "quad_terms": [[0, 1, 1], [0, 5, 1]]})"))
                .find("$.quad_terms[1]"),
            std::string::npos);
  EXPECT_NE(location_of(read(R"({"p": 2, "lin_terms": [[0, "a"]]})")).find("$.lin_terms[0][1]"),
            std::string::npos);
  EXPECT_EQ(code_of_read(read(R"({"p": 1, "marginals": [[0.5, 0.6]]})")),
            ErrorCode::kInvalidDistribution);
  EXPECT_EQ(code_of_read(read(R"({"quad_terms": []})")), ErrorCode::kSchema);
  EXPECT_EQ(code_of_read(read("{\"p\": ")), ErrorCode::kParse);
  const auto ok = model_from_json(nlohmann::json::parse(R"({"p": 2, "biases": [0.3, 0.9]})"));
  EXPECT_DOUBLE_EQ(ok.bias(1), 0.9);
  const auto uniform = model_from_json(nlohmann::json::parse(R"({"p": 1, "alphabet": [0, 1, 2, 3]})"));
  EXPECT_EQ(uniform.marginals[0], (std::vector<double>{0.25, 0.25, 0.25, 0.25}));
}

TEST_F(ConfigIo, ParsesKnownKeys) {
  write("model.json", R"({"p": 2})");
  const auto path = write("cfg.json", R"({"model": "model.json", "sample_sizes": [10, 100],
    "seed": 3, "normalize": false, "hashes": 4, "hash_range": 50})");
  const auto c = read_experiment_config(path);
  ASSERT_TRUE(c.model_path.has_value());
  EXPECT_EQ(fs::path(*c.model_path), file("model.json"));
  EXPECT_EQ(c.sample_sizes, (std::vector<std::size_t>{10, 100}));
  EXPECT_EQ(c.seed, 3u);
  EXPECT_EQ(c.normalize, false);
  EXPECT_EQ(c.hashes, 4u);
  EXPECT_EQ(c.hash_range, 50);
  EXPECT_FALSE(c.p.has_value());
}

TEST_F(ConfigIo, RejectsUnknownKeysAndMissingFiles) {
  const auto unknown = write("a.json", R"({"sample_size": [10]})");
  EXPECT_EQ(code_of_read([&] { read_experiment_config(unknown); }), ErrorCode::kSchema);
  const auto missing = write("b.json", R"({"data": "nowhere.csv"})");
  EXPECT_EQ(code_of_read([&] { read_experiment_config(missing); }), ErrorCode::kIo);
  const auto typed = write("c.json", R"({"normalize": 1})");
  EXPECT_NE(location_of([&] { read_experiment_config(typed); }).find("$.normalize"),
            std::string::npos);
}

}  // namespace
}  // namespace quadscreen
