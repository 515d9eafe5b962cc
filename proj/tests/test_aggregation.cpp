#include "doctest.h"
#include "spatial/agg/aggregation.hpp"
#include "support/oracles.hpp"

using namespace spatial;
using namespace spatial::agg;

namespace {

// Build a correctly ordered tag vector with deterministic patch geometry.
std::vector<Provenance> make_tags(int m, int k, int n) {
  std::vector<Provenance> tags;
  Rng rng(42);
  for (int im = 0; im < m; ++im)
    for (int a = 0; a < k; ++a) {
      Provenance t;
      t.kind = Provenance::Kind::kImageView;
      t.image_index = im;
      t.view_index = a;
      tags.push_back(t);
    }
  for (int im = 0; im < m; ++im) {
    auto specs = n > 0 ? patching::sample_patch_positions(64, 64, std::max(n, 1), 24, rng, 100, im)
                       : std::vector<patching::PatchSpec>{};
    for (int p = 0; p < n; ++p) {
      Provenance t;
      t.kind = Provenance::Kind::kPatch;
      t.image_index = im;
      t.view_index = p;
      t.spec = specs[static_cast<std::size_t>(p)];
      tags.push_back(t);
    }
  }
  return tags;
}

}  // namespace

TEST_CASE("pair counts match the closed form and the enumeration oracle on the grid") {
  for (int m : {1, 2, 4, 8}) {
    for (int k : {2, 3, 4}) {
      for (int n : {0, 2, 3, 4}) {
        const auto tags = make_tags(m, k, n);
        const auto rows = build_pairs(tags, m, k, n);
        const auto oracle = oracles::enumerate_pairs(m, k, n);
        REQUIRE(static_cast<std::int64_t>(rows.size()) == oracle.total());
        REQUIRE(total_pair_count(m, k, n) == oracle.total());
        const auto counts = count_by_kind(rows);
        REQUIRE(counts.image_pos == oracle.image_pos);
        REQUIRE(counts.image_neg == oracle.image_neg);
        REQUIRE(counts.patch == oracle.patch);
        // row-level agreement with the oracle's index sets
        for (const auto& r : rows) {
          const int kind = r.kind == PairKind::kImagePos ? 0 : (r.kind == PairKind::kImageNeg ? 1 : 2);
          REQUIRE(oracle.rows.count({r.left, r.right, kind}) == 1);
        }
      }
    }
  }
}

TEST_CASE("paper anchor: M=64 K=4 N=3 gives 192 patch pairs of 960 total") {
  const auto tags = make_tags(64, 4, 3);
  const auto rows = build_pairs(tags, 64, 4, 3);
  const auto counts = count_by_kind(rows);
  CHECK(rows.size() == 960);
  CHECK(counts.patch == 192);
  CHECK(counts.image_pos + counts.image_neg == 768);
  CHECK(total_pair_count(64, 4, 3) == 960);
}

TEST_CASE("worked counts") {
  CHECK(total_pair_count(64, 4, 2) == 832);
  CHECK(total_pair_count(64, 4, 0) == 768);
  CHECK(total_pair_count(1, 2, 2) == 3);
  CHECK(total_pair_count(4, 2, 0) == 8);
  // M=64, K=4 image pairs alone
  const auto tags = make_tags(64, 4, 0);
  CHECK(aggregate_image_pairs(tags, 64, 4).size() == 768);
  // M=1, K=2 emits 2 rows; the negative wraps to the same image
  const auto t1 = make_tags(1, 2, 0);
  const auto rows = aggregate_image_pairs(t1, 1, 2);
  CHECK(rows.size() == 2);
  CHECK(rows[1].kind == PairKind::kImageNeg);
  CHECK(rows[1].left / 2 == rows[1].right / 2);  // degenerate wrap, same image
  // M=1, N=2 emits a single patch row
  const auto t2 = make_tags(1, 2, 2);
  CHECK(aggregate_patch_pairs(t2, 1, 2).size() == 1);
}

TEST_CASE("K < 2 is a configuration error; N < 2 patch aggregation is empty") {
  const auto tags = make_tags(2, 1, 0);
  CHECK_THROWS_AS(aggregate_image_pairs(tags, 2, 1), ConfigError);
  const auto t1 = make_tags(2, 2, 1);
  CHECK(aggregate_patch_pairs(t1, 2, 1).empty());
  const auto t0 = make_tags(2, 2, 0);
  CHECK(aggregate_patch_pairs(t0, 2, 0).empty());
}

TEST_CASE("pair semantics: kinds partition rows and respect provenance") {
  const int m = 6, k = 3, n = 3;
  const auto tags = make_tags(m, k, n);
  const auto rows = build_pairs(tags, m, k, n);
  const int km = k * m;
  for (const auto& r : rows) {
    switch (r.kind) {
      case PairKind::kImagePos:
        REQUIRE(r.left < km);
        REQUIRE(r.right < km);
        REQUIRE(r.left / k == r.right / k);  // same image
        REQUIRE(r.class_target == 1);
        REQUIRE(r.tx == 0.0);
        REQUIRE(r.ty == 0.0);
        break;
      case PairKind::kImageNeg:
        REQUIRE(r.left < km);
        REQUIRE(r.right < km);
        REQUIRE(r.left / k != r.right / k);  // different images (M > 1)
        REQUIRE(r.class_target == 0);
        REQUIRE(r.tx == 1.0);
        REQUIRE(r.ty == 1.0);
        break;
      case PairKind::kPatch: {
        REQUIRE(r.left >= km);
        REQUIRE(r.right >= km);
        REQUIRE((r.left - km) / n == (r.right - km) / n);  // never cross-image
        REQUIRE(r.class_target == 1);
        REQUIRE(r.tx >= -1.0);
        REQUIRE(r.tx <= 1.0);
        REQUIRE(r.ty >= -1.0);
        REQUIRE(r.ty <= 1.0);
        // target equals the relative distance of the tagged specs
        const auto d = patching::relative_distance(tags[r.left].spec, tags[r.right].spec);
        REQUIRE(r.tx == d.dx);
        REQUIRE(r.ty == d.dy);
        break;
      }
    }
  }
}

TEST_CASE("aggregation is a pure function of its inputs") {
  const auto tags = make_tags(4, 3, 2);
  const auto a = build_pairs(tags, 4, 3, 2);
  const auto b = build_pairs(tags, 4, 3, 2);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    REQUIRE(a[i].left == b[i].left);
    REQUIRE(a[i].right == b[i].right);
    REQUIRE(a[i].tx == b[i].tx);
    REQUIRE(a[i].ty == b[i].ty);
  }
}

TEST_CASE("mis-ordered batches are rejected") {
  auto tags = make_tags(2, 2, 2);
  std::swap(tags[0], tags[1]);
  CHECK_THROWS(build_pairs(tags, 2, 2, 2));
}
