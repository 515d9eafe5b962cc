#include <sstream>

#include "doctest.h"
#include "spatial/common.hpp"
#include "spatial/core/image.hpp"
#include "spatial/core/rng.hpp"
#include "spatial/core/serialize.hpp"

using namespace spatial;

TEST_CASE("rng streams are deterministic and independent") {
  Rng a(123), b(123), c(124);
  for (int i = 0; i < 100; ++i) {
    const auto x = a.next_u64();
    REQUIRE(x == b.next_u64());
  }
  CHECK(Rng::stream(9, {1, 2}).next_u64() == Rng::stream(9, {1, 2}).next_u64());
  CHECK(Rng::stream(9, {1, 2}).next_u64() != Rng::stream(9, {2, 1}).next_u64());
  CHECK(a.next_u64() != c.next_u64());
}

TEST_CASE("rng distributions stay in range") {
  Rng r(5);
  for (int i = 0; i < 10000; ++i) {
    const double u = r.uniform();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const auto v = r.uniform_int(-3, 7);
    REQUIRE(v >= -3);
    REQUIRE(v <= 7);
  }
  double acc = 0;
  for (int i = 0; i < 20000; ++i) acc += r.normal();
  CHECK(std::abs(acc / 20000) < 0.05);
}

TEST_CASE("bilinear resize of a constant image is constant, identity size is exact") {
  Image im(8, 8);
  for (auto& v : im.data) v = 0.42f;
  const Image up = resize_bilinear(im, 19, 19);
  for (float v : up.data) REQUIRE(v == doctest::Approx(0.42f));
  Rng r(3);
  Image noisy(8, 8);
  for (auto& v : noisy.data) v = static_cast<float>(r.uniform());
  const Image same = resize_bilinear(noisy, 8, 8);
  for (std::size_t i = 0; i < noisy.data.size(); ++i) REQUIRE(same.data[i] == noisy.data[i]);
}

TEST_CASE("binary round trip") {
  std::stringstream ss;
  BinWriter w(ss);
  w.u32(7);
  w.f64(-0.25);
  w.str("hello");
  w.vec(std::vector<float>{1.f, 2.f, 3.f});
  BinReader r(ss);
  CHECK(r.u32() == 7);
  CHECK(r.f64() == -0.25);
  CHECK(r.str() == "hello");
  const auto v = r.vec<float>();
  REQUIRE(v.size() == 3);
  CHECK(v[2] == 3.f);
}

TEST_CASE("fnv1a hashing is stable") {
  CHECK(fnv1a("") == kFnvOffset);
  CHECK(fnv1a("a") != fnv1a("b"));
  CHECK(hex64(0).size() == 16);
  CHECK(hex64(0xdeadbeefull) == "00000000deadbeef");
}
