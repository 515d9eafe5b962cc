#include "spatial/agg/aggregation.hpp"

#include <string>

namespace spatial::agg {

void check_batch_ordering(const std::vector<Provenance>& tags, int m, int k, int n) {
  SPATIAL_CHECK(static_cast<std::int64_t>(tags.size()) ==
                    static_cast<std::int64_t>(k) * m + static_cast<std::int64_t>(m) * n,
                "representation batch size does not match K*M + M*N");
  for (int im = 0; im < m; ++im) {
    for (int a = 0; a < k; ++a) {
      const Provenance& t = tags[static_cast<std::size_t>(im) * k + a];
      SPATIAL_CHECK(t.kind == Provenance::Kind::kImageView && t.image_index == im && t.view_index == a,
                    "image-view rows out of order at image " + std::to_string(im));
    }
  }
  for (int im = 0; im < m; ++im) {
    for (int p = 0; p < n; ++p) {
      const Provenance& t = tags[static_cast<std::size_t>(k) * m + static_cast<std::size_t>(im) * n + p];
      SPATIAL_CHECK(t.kind == Provenance::Kind::kPatch && t.image_index == im && t.view_index == p,
                    "patch rows out of order at image " + std::to_string(im));
    }
  }
}

std::vector<PairRow> aggregate_image_pairs(const std::vector<Provenance>& tags, int m, int k) {
  SPATIAL_CHECK_CONFIG(k >= 2, "aggregate_image_pairs: K must be >= 2, no positive image pairs exist");
  SPATIAL_CHECK(static_cast<std::size_t>(m) * k <= tags.size(), "batch too small for M*K image views");
  std::vector<PairRow> rows;
  rows.reserve(static_cast<std::size_t>(m) * k * (k - 1));
  for (int im = 0; im < m; ++im) {
    for (int i = 0; i < k; ++i) {
      for (int j = i + 1; j < k; ++j) {
        PairRow pos;
        pos.left = im * k + i;
        pos.right = im * k + j;
        pos.class_target = 1;
        pos.tx = 0;
        pos.ty = 0;
        pos.kind = PairKind::kImagePos;
        rows.push_back(pos);
        PairRow neg;
        neg.left = im * k + i;
        neg.right = ((im + 1) % m) * k + j;  // shift to the next image
        neg.class_target = 0;
        neg.tx = 1;
        neg.ty = 1;
        neg.kind = PairKind::kImageNeg;
        rows.push_back(neg);
      }
    }
  }
  return rows;
}

std::vector<PairRow> aggregate_patch_pairs(const std::vector<Provenance>& tags, int m, int n) {
  std::vector<PairRow> rows;
  if (n < 2) return rows;
  const int k_off = static_cast<int>(tags.size()) - m * n;  // first patch row
  rows.reserve(static_cast<std::size_t>(m) * n * (n - 1) / 2);
  for (int im = 0; im < m; ++im) {
    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const int lrow = k_off + im * n + p;
        const int rrow = k_off + im * n + q;
        const Provenance& lt = tags[lrow];
        const Provenance& rt = tags[rrow];
        SPATIAL_CHECK(lt.kind == Provenance::Kind::kPatch && rt.kind == Provenance::Kind::kPatch,
                      "patch pair references a non-patch row");
        SPATIAL_CHECK(lt.image_index == rt.image_index, "patch pair crosses images");
        const auto d = patching::relative_distance(lt.spec, rt.spec);
        PairRow row;
        row.left = lrow;
        row.right = rrow;
        row.class_target = 1;
        row.tx = d.dx;
        row.ty = d.dy;
        row.kind = PairKind::kPatch;
        rows.push_back(row);
      }
    }
  }
  return rows;
}

std::int64_t total_pair_count(std::int64_t m, std::int64_t k, std::int64_t n) {
  return m * (k * k - k) + m * ((n * n - n) / 2);
}

std::vector<PairRow> build_pairs(const std::vector<Provenance>& tags, int m, int k, int n) {
  check_batch_ordering(tags, m, k, n);
  std::vector<PairRow> rows = aggregate_image_pairs(tags, m, k);
  std::vector<PairRow> patch = aggregate_patch_pairs(tags, m, n);
  rows.insert(rows.end(), patch.begin(), patch.end());
  SPATIAL_CHECK(static_cast<std::int64_t>(rows.size()) == total_pair_count(m, k, n),
                "aggregated pair count does not match the closed form");
  return rows;
}

PairCounts count_by_kind(const std::vector<PairRow>& rows) {
  PairCounts c;
  for (const auto& r : rows) {
    switch (r.kind) {
      case PairKind::kImagePos: ++c.image_pos; break;
      case PairKind::kImageNeg: ++c.image_neg; break;
      case PairKind::kPatch: ++c.patch; break;
    }
  }
  return c;
}

}  // namespace spatial::agg
