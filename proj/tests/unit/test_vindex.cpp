#include <doctest.h>

#include <algorithm>
#include <atomic>
#include <map>
#include <random>
#include <thread>

#include "insight/error.hpp"
#include "insight/vindex/index.hpp"
#include "insight/vindex/kernels.hpp"
#include "oracles.hpp"

using namespace insight;
using namespace insight::vindex;

namespace {

std::vector<double> random_vector(std::mt19937_64& rng, std::size_t dim, bool coarse) {
  std::uniform_int_distribution<int> small(-2, 2);
  std::normal_distribution<double> normal;
  std::vector<double> v(dim);
  do {
    for (auto& x : v) x = coarse ? small(rng) : normal(rng);
  } while (std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; }));
  return v;
}

}  // namespace

TEST_CASE("top_k agrees exactly with an exhaustive scan") {
  std::mt19937_64 rng(5);
  for (auto kernel : {ScanKernel::serial, ScanKernel::parallel}) {
    for (int round = 0; round < 40; ++round) {
      std::size_t dim = 1 + rng() % 12;
      bool coarse = round % 2 == 0;  // small integer entries produce exact ties
      VectorIndex index(dim, kernel);
      std::vector<std::pair<std::string, std::vector<double>>> items;
      std::size_t n = 1 + rng() % 700;
      for (std::size_t i = 0; i < n; ++i) {
        items.emplace_back("v" + std::to_string(rng() % 100000), random_vector(rng, dim, coarse));
        index.upsert({items.back().first, {items.back().second}, ""});
      }
      // Later duplicates replaced earlier ones in the index.
      std::map<std::string, std::vector<double>> latest;
      for (const auto& [id, v] : items) latest[id] = v;
      std::vector<std::pair<std::string, std::vector<double>>> unique(latest.begin(), latest.end());
      CHECK(index.size() == unique.size());

      auto q = random_vector(rng, dim, coarse);
      std::size_t k = rng() % (unique.size() + 3);
      std::optional<std::string> exclude;
      if (round % 3 == 0) exclude = unique[rng() % unique.size()].first;
      CHECK(index.top_k({q}, k, exclude) == testing::exhaustive_top_k(unique, q, k, exclude));
    }
  }
}

TEST_CASE("serial and parallel kernels are bit-identical") {
  std::mt19937_64 rng(17);
  std::size_t rows = 3000, dim = 32;
  std::vector<double> data(rows * dim), norms(rows);
  for (auto& x : data) x = std::normal_distribution<double>()(rng);
  for (std::size_t i = 0; i < rows; ++i) norms[i] = kernels::l2_norm({data.data() + i * dim, dim});
  auto q = random_vector(rng, dim, false);
  kernels::MatrixView m{data, norms, dim};
  std::vector<double> a(rows), b(rows);
  kernels::cosine_scores_serial(m, q, kernels::l2_norm(q), a);
  kernels::cosine_scores_parallel(m, q, kernels::l2_norm(q), b, 1);
  CHECK(a == b);
}

TEST_CASE("ties break by ascending id") {
  VectorIndex index(2);
  for (const char* id : {"c", "a", "b"}) index.upsert({id, {{1.0, 1.0}}, id});
  index.upsert({"z", {{1.0, 0.0}}, ""});
  auto hits = index.top_k({{2.0, 2.0}}, 10);
  REQUIRE(hits.size() == 4);
  CHECK(hits[0].id == "a");
  CHECK(hits[1].id == "b");
  CHECK(hits[2].id == "c");
  CHECK(hits[3].id == "z");
  CHECK(hits[0].score == doctest::Approx(1.0));
  CHECK(index.payload("b") == std::optional<std::string>("b"));
  CHECK(index.query_count() == 1);
}

TEST_CASE("upsert replaces and validates") {
  VectorIndex index(3);
  index.upsert({"x", {{1, 0, 0}}, "first"});
  index.upsert({"x", {{0, 1, 0}}, "second"});
  CHECK(index.size() == 1);
  CHECK(index.payload("x") == std::optional<std::string>("second"));
  CHECK(index.top_k({{0, 1, 0}}, 1)[0].score == doctest::Approx(1.0));

  auto code = [](auto fn) {
    try {
      fn();
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::InvalidArgument;
  };
  CHECK(code([&] { index.upsert({"y", {{1, 0}}, ""}); }) == ErrorCode::DimensionMismatch);
  CHECK(code([&] { index.upsert({"y", {{0, 0, 0}}, ""}); }) == ErrorCode::ZeroVector);
  CHECK(code([&] { index.top_k({{1, 0}}, 1); }) == ErrorCode::DimensionMismatch);
  CHECK(code([&] { index.top_k({{0, 0, 0}}, 1); }) == ErrorCode::ZeroVector);
  VectorIndex empty(3);
  CHECK(code([&] { empty.top_k({{1, 0, 0}}, 1); }) == ErrorCode::EmptyIndex);
  CHECK(index.top_k({{1, 0, 0}}, 0).empty());
}

TEST_CASE("concurrent readers see consistent results") {
  std::mt19937_64 rng(3);
  VectorIndex index(16);
  std::vector<std::pair<std::string, std::vector<double>>> items;
  for (int i = 0; i < 500; ++i) {
    items.emplace_back("id" + std::to_string(i), random_vector(rng, 16, false));
    index.upsert({items.back().first, {items.back().second}, ""});
  }
  auto q = random_vector(rng, 16, false);
  auto expected = testing::exhaustive_top_k(items, q, 7);
  std::atomic<int> bad{0};
  {
    std::vector<std::jthread> readers;
    for (int t = 0; t < 4; ++t)
      readers.emplace_back([&] {
        for (int i = 0; i < 50; ++i)
          if (index.top_k({q}, 7) != expected) ++bad;
      });
  }
  CHECK(bad.load() == 0);
}
