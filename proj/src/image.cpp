#include "extremctl/image.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <tuple>

#include "extremctl/error.hpp"

namespace extremctl::latency {
namespace {

std::uint32_t load_u32_le(const unsigned char* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

void store_u32_le(unsigned char* p, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) p[i] = static_cast<unsigned char>(v >> (8 * i));
}

void read_f32_plane(std::istream& in, std::vector<float>& plane, const std::string& path) {
  std::vector<unsigned char> raw(plane.size() * 4);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(ErrorCode::kShortRead, "flow file '" + path + "' is truncated");
  }
  for (std::size_t i = 0; i < plane.size(); ++i) {
    plane[i] = std::bit_cast<float>(load_u32_le(raw.data() + 4 * i));
  }
}

void write_f32_plane(std::ostream& out, const std::vector<float>& plane) {
  std::vector<unsigned char> raw(plane.size() * 4);
  for (std::size_t i = 0; i < plane.size(); ++i) {
    store_u32_le(raw.data() + 4 * i, std::bit_cast<std::uint32_t>(plane[i]));
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

// Next header token of a PNM file, skipping whitespace and # comments.
std::string pnm_token(std::istream& in) {
  std::string tok;
  int c;
  while ((c = in.get()) != EOF) {
    if (c == '#') {
      while ((c = in.get()) != EOF && c != '\n') {
      }
      continue;
    }
    if (std::isspace(c)) {
      if (!tok.empty()) break;
      continue;
    }
    tok.push_back(static_cast<char>(c));
  }
  return tok;
}

}  // namespace

GrayImage read_pgm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  if (pnm_token(in) != "P5") throw Error(ErrorCode::kParse, "'" + path + "' is not a binary PGM");
  std::size_t w = 0, h = 0, maxval = 0;
  try {
    w = std::stoul(pnm_token(in));
    h = std::stoul(pnm_token(in));
    maxval = std::stoul(pnm_token(in));
  } catch (const std::exception&) {
    throw Error(ErrorCode::kParse, "bad PGM header in '" + path + "'");
  }
  if (w == 0 || h == 0 || maxval == 0 || maxval > 65535) {
    throw Error(ErrorCode::kParse, "unsupported PGM geometry in '" + path + "'");
  }
  const std::size_t bytes_per = maxval > 255 ? 2 : 1;
  std::vector<unsigned char> raw(w * h * bytes_per);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (in.gcount() != static_cast<std::streamsize>(raw.size())) {
    throw Error(ErrorCode::kShortRead, "PGM '" + path + "' is truncated");
  }
  GrayImage img(w, h);
  for (std::size_t i = 0; i < w * h; ++i) {
    img.pixels[i] = bytes_per == 1 ? static_cast<float>(raw[i])
                                   : static_cast<float>((raw[2 * i] << 8) | raw[2 * i + 1]);
  }
  return img;
}

void write_pgm(const GrayImage& image, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  out << "P5\n" << image.width << ' ' << image.height << "\n255\n";
  std::vector<unsigned char> raw(image.pixels.size());
  std::transform(image.pixels.begin(), image.pixels.end(), raw.begin(), [](float p) {
    return static_cast<unsigned char>(std::clamp(std::lround(p), 0L, 255L));
  });
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

FlowField read_flow(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIo, "cannot open '" + path + "'");
  std::array<unsigned char, 16> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size())) {
    throw Error(ErrorCode::kShortRead, "flow file '" + path + "' has a short header");
  }
  if (std::memcmp(header.data(), "XFLW", 4) != 0) {
    throw Error(ErrorCode::kBadMagic, "flow file '" + path + "' lacks the XFLW magic");
  }
  FlowField flow(load_u32_le(header.data() + 4), load_u32_le(header.data() + 8));
  read_f32_plane(in, flow.u, path);
  read_f32_plane(in, flow.v, path);
  return flow;
}

void write_flow(const FlowField& flow, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot open '" + path + "' for writing");
  std::array<unsigned char, 16> header{};
  std::memcpy(header.data(), "XFLW", 4);
  store_u32_le(header.data() + 4, static_cast<std::uint32_t>(flow.width));
  store_u32_le(header.data() + 8, static_cast<std::uint32_t>(flow.height));
  out.write(reinterpret_cast<const char*>(header.data()), header.size());
  write_f32_plane(out, flow.u);
  write_f32_plane(out, flow.v);
  if (!out) throw Error(ErrorCode::kIo, "failed writing '" + path + "'");
}

std::vector<std::string> numbered_files(const std::string& dir, const std::string& extension) {
  namespace fs = std::filesystem;
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) throw Error(ErrorCode::kIo, "'" + dir + "' is not a directory");
  std::vector<std::tuple<long long, std::string, std::string>> found;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (!entry.is_regular_file() || entry.path().extension() != extension) continue;
    const std::string name = entry.path().filename().string();
    long long index = -1;
    const auto first = std::find_if(name.begin(), name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
    if (first != name.end()) {
      const auto last = std::find_if_not(first, name.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
      index = std::stoll(std::string(first, last));
    }
    found.emplace_back(index, name, entry.path().string());
  }
  std::sort(found.begin(), found.end());
  std::vector<std::string> out;
  for (auto& f : found) out.push_back(std::move(std::get<2>(f)));
  return out;
}

}  // namespace extremctl::latency
