#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace egoexo {

enum class GalleryKind { F_ego, F_prime_ego, F_exo };

/// One query ranked against a gallery. `order` holds gallery entry indices by
/// ascending distance.
struct RankingResult {
  std::string query_id;
  GalleryKind kind = GalleryKind::F_exo;
  std::vector<std::uint32_t> order;
  int rank_of_truth = 0;  // 1-based
  int gallery_size() const noexcept { return static_cast<int>(order.size()); }
};

}  // namespace egoexo
