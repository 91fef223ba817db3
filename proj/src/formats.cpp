#include "pws/formats.hpp"

#include <array>
#include <atomic>
#include <bit>
#include <charconv>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <system_error>
#include <unistd.h>
#include <vector>

#include "pws/error.hpp"

namespace pws {

namespace {

constexpr std::string_view kImageMagic = "PWSI";
constexpr std::string_view kCloudMagic = "PWSPC1";

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xffu));
}

std::uint32_t get_u32(std::string_view bytes, std::size_t offset) {
  std::uint32_t v = 0;
  for (int i = 0; i < 4; ++i) {
    v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[offset + i])) << (8 * i);
  }
  return v;
}

template <typename T>
T parse_number(std::string_view token, std::size_t line) {
  T value{};
  const char* first = token.data();
  const char* last = first + token.size();
  if (!token.empty() && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw Error(ErrorKind::FormatError,
                "line " + std::to_string(line) + ": cannot parse '" + std::string(token) + "'");
  }
  return value;
}

}  // namespace

std::string encode_image(const Image& img) {
  std::string out;
  out.reserve(16 + img.data.size() * 4);
  out.append(kImageMagic);
  put_u32(out, static_cast<std::uint32_t>(img.channels));
  put_u32(out, static_cast<std::uint32_t>(img.height));
  put_u32(out, static_cast<std::uint32_t>(img.width));
  for (float f : img.data) put_u32(out, std::bit_cast<std::uint32_t>(f));
  return out;
}

Image decode_image(std::string_view bytes) {
  if (bytes.size() < 16 || bytes.substr(0, 4) != kImageMagic) {
    throw Error(ErrorKind::FormatError, "not a PWSI1 image");
  }
  const std::uint32_t k = get_u32(bytes, 4), h = get_u32(bytes, 8), w = get_u32(bytes, 12);
  const std::uint64_t count = static_cast<std::uint64_t>(k) * h * w;
  if (k == 0 || h == 0 || w == 0 || bytes.size() != 16 + count * 4) {
    throw Error(ErrorKind::FormatError, "PWSI1 payload size does not match its header");
  }
  Image img(static_cast<int>(k), static_cast<int>(h), static_cast<int>(w));
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    img.data[i] = std::bit_cast<float>(get_u32(bytes, 16 + 4 * i));
  }
  return img;
}

void write_image(const std::filesystem::path& path, const Image& img) {
  write_file_atomic(path, encode_image(img));
}

Image read_image(const std::filesystem::path& path) { return decode_image(read_file(path)); }

std::string format_double(double value) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  (void)ec;
  return std::string(buf.data(), ptr);
}

std::string encode_cloud(const ColoredPointCloud& cloud) {
  std::string out;
  out.reserve(64 + cloud.size() * (48 + 12 * cloud.channels));
  out.append(kCloudMagic);
  out += ' ' + std::to_string(cloud.size()) + ' ' + std::to_string(cloud.channels) + '\n';
  std::array<char, 64> buf{};
  auto emit = [&](auto v) {
    const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
    (void)ec;
    out.append(buf.data(), ptr);
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Point3& p = cloud.points[i];
    emit(p.x);
    out.push_back(' ');
    emit(p.y);
    out.push_back(' ');
    emit(p.z);
    for (float c : cloud.color(i)) {
      out.push_back(' ');
      emit(c);
    }
    out.push_back('\n');
  }
  return out;
}

ColoredPointCloud decode_cloud(std::string_view text) {
  std::size_t pos = 0;
  std::size_t line_no = 0;
  auto next_line = [&]() -> std::optional<std::string_view> {
    while (pos < text.size()) {
      std::size_t end = text.find('\n', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view line = text.substr(pos, end - pos);
      pos = end + 1;
      ++line_no;
      if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
      if (line.find_first_not_of(" \t") != std::string_view::npos) return line;
    }
    return std::nullopt;
  };
  auto split = [](std::string_view line) {
    std::vector<std::string_view> tokens;
    std::size_t i = 0;
    while (i < line.size()) {
      while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
      std::size_t j = i;
      while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
      if (j > i) tokens.push_back(line.substr(i, j - i));
      i = j;
    }
    return tokens;
  };

  const auto header = next_line();
  if (!header) throw Error(ErrorKind::FormatError, "empty point cloud file");
  const auto head = split(*header);
  if (head.size() != 3 || head[0] != kCloudMagic) {
    throw Error(ErrorKind::FormatError, "expected header 'PWSPC1 <count> <K>'");
  }
  const auto count = parse_number<std::size_t>(head[1], line_no);
  const int channels = parse_number<int>(head[2], line_no);
  if (channels < 1) throw Error(ErrorKind::FormatError, "channel count must be positive");

  ColoredPointCloud cloud;
  cloud.channels = channels;
  cloud.points.reserve(count);
  cloud.colors.reserve(count * static_cast<std::size_t>(channels));
  for (std::size_t i = 0; i < count; ++i) {
    const auto line = next_line();
    if (!line) throw Error(ErrorKind::FormatError, "file ends after " + std::to_string(i) + " points");
    const auto tok = split(*line);
    if (tok.size() != static_cast<std::size_t>(3 + channels)) {
      throw Error(ErrorKind::FormatError, "line " + std::to_string(line_no) + ": expected " +
                                              std::to_string(3 + channels) + " values");
    }
    cloud.points.push_back({parse_number<double>(tok[0], line_no), parse_number<double>(tok[1], line_no),
                            parse_number<double>(tok[2], line_no)});
    for (int k = 0; k < channels; ++k) cloud.colors.push_back(parse_number<float>(tok[3 + k], line_no));
  }
  if (next_line()) throw Error(ErrorKind::FormatError, "trailing data after the declared points");
  try {
    cloud.validate();
  } catch (const Error& e) {
    throw Error(ErrorKind::FormatError, e.what());
  }
  return cloud;
}

void write_cloud(const std::filesystem::path& path, const ColoredPointCloud& cloud) {
  write_file_atomic(path, encode_cloud(cloud));
}

ColoredPointCloud read_cloud(const std::filesystem::path& path) { return decode_cloud(read_file(path)); }

nlohmann::json camera_to_json(const CameraModel& cam) {
  return {{"fx", cam.fx}, {"fy", cam.fy}, {"cx", cam.cx}, {"cy", cam.cy},
          {"width", cam.width}, {"height", cam.height}};
}

CameraModel camera_from_json(const nlohmann::json& j) {
  CameraModel cam;
  try {
    cam.fx = j.at("fx").get<double>();
    cam.fy = j.at("fy").get<double>();
    cam.cx = j.at("cx").get<double>();
    cam.cy = j.at("cy").get<double>();
    cam.width = j.at("width").get<int>();
    cam.height = j.at("height").get<int>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::FormatError, std::string("camera: ") + e.what());
  }
  cam.validate();
  return cam;
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorKind::IoError, "cannot read " + path.string());
  return std::move(ss).str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view content) {
  std::filesystem::path tmp = path;
  static std::atomic<unsigned> counter{0};
  tmp += ".tmp" + std::to_string(::getpid()) + "." + std::to_string(counter++);
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp, ec);
    throw Error(ErrorKind::IoError, "cannot move file into " + path.string());
  }
}

std::uint64_t fnv1a64(std::span<const std::byte> bytes, std::uint64_t seed) {
  std::uint64_t h = seed;
  for (std::byte b : bytes) {
    h ^= static_cast<std::uint64_t>(b);
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t fnv1a64(std::string_view text) { return fnv1a64(std::as_bytes(std::span(text.data(), text.size()))); }

std::string hex64(std::uint64_t value) {
  static constexpr char kDigits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = kDigits[value & 0xf];
    value >>= 4;
  }
  return out;
}

}  // namespace pws
