#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>

#include <json.hpp>

#include "pws/geometry.hpp"
#include "pws/image.hpp"
#include "pws/point_cloud.hpp"

namespace pws {

/// PWSI1 image: magic "PWSI", u32 LE K, H, W, then K*H*W float32 LE values
/// in (channel, row, column) order.
std::string encode_image(const Image& img);
Image decode_image(std::string_view bytes);
void write_image(const std::filesystem::path& path, const Image& img);
Image read_image(const std::filesystem::path& path);

/// PWSPC1 cloud: header `PWSPC1 <count> <K>`, then `x y z c1 .. cK` per line.
/// Numbers are written in shortest round-trip form.
std::string encode_cloud(const ColoredPointCloud& cloud);
ColoredPointCloud decode_cloud(std::string_view text);
void write_cloud(const std::filesystem::path& path, const ColoredPointCloud& cloud);
ColoredPointCloud read_cloud(const std::filesystem::path& path);

nlohmann::json camera_to_json(const CameraModel& cam);
CameraModel camera_from_json(const nlohmann::json& j);

std::string read_file(const std::filesystem::path& path);
/// Writes through a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t seed = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64(std::string_view text);
std::string hex64(std::uint64_t value);

/// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

}  // namespace pws
