#include <catch2/catch_amalgamated.hpp>

#include "pcmkit/rng.hpp"

using pcmkit::Rng;

TEST_CASE("rng: identical seeds give identical streams") {
  Rng a(42), b(42);
  for (int i = 0; i < 1000; ++i) REQUIRE(a.next() == b.next());
}

TEST_CASE("rng: different seeds diverge") {
  Rng a(1), b(2);
  int equal = 0;
  for (int i = 0; i < 64; ++i) equal += a.next() == b.next() ? 1 : 0;
  REQUIRE(equal < 4);
}

TEST_CASE("rng: uniform stays in [0,1) with sane mean") {
  Rng rng(7);
  double sum = 0.0;
  for (int i = 0; i < 100000; ++i) {
    const double u = rng.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    sum += u;
  }
  REQUIRE_THAT(sum / 100000.0, Catch::Matchers::WithinAbs(0.5, 0.01));
}

TEST_CASE("rng: below respects the bound and covers small ranges") {
  Rng rng(11);
  bool seen[5] = {};
  for (int i = 0; i < 1000; ++i) {
    const auto v = rng.below(5);
    REQUIRE(v < 5);
    seen[v] = true;
  }
  for (bool s : seen) REQUIRE(s);
}

TEST_CASE("rng: degenerate bernoulli probabilities") {
  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    REQUIRE_FALSE(rng.bernoulli(0.0));
    REQUIRE(rng.bernoulli(1.0));
  }
}

TEST_CASE("rng: substream seeds are stable and distinct") {
  const auto s0 = Rng::substream_seed(99, 0);
  const auto s1 = Rng::substream_seed(99, 1);
  REQUIRE(s0 == Rng::substream_seed(99, 0));
  REQUIRE(s0 != s1);
}
