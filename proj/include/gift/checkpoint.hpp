#ifndef GIFT_CHECKPOINT_HPP
#define GIFT_CHECKPOINT_HPP

#include <filesystem>
#include <string>

#include "gift/model.hpp"

namespace gift {

// Binary layout, little-endian:
//   "GIFTCKPT" | u32 version | u32 scalar bytes (4 or 8)
//   u64 n + n bytes of config JSON
//   u32 channels | channels f64 mean | channels f64 stddev
//   u32 players | players^2 f64 normalized graph (row-major)
//   u32 parameter count, then per parameter:
//     u32 name length | name | u32 rows | u32 cols | rows*cols scalars (row-major)
inline constexpr std::uint32_t kCheckpointVersion = 1;

template <typename Scalar>
std::string checkpoint_bytes(const GiftModel<Scalar>& model);

template <typename Scalar>
GiftModel<Scalar> model_from_bytes(const std::string& bytes);

template <typename Scalar>
void save_checkpoint(const GiftModel<Scalar>& model, const std::filesystem::path& path);

template <typename Scalar>
GiftModel<Scalar> load_checkpoint(const std::filesystem::path& path);

/// Scalar width recorded in a checkpoint file (4 or 8).
int checkpoint_scalar_bytes(const std::filesystem::path& path);

}  // namespace gift

#endif  // GIFT_CHECKPOINT_HPP
